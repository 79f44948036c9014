use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{GridDensity, GridDensity2};
use crate::numerics::trapezoid;

/// Snapshots of a one-dimensional solve on a fixed grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: Vec<f64>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Mass carried outside the grid at each snapshot.
    pub outside: Vec<f64>,
}

impl Trajectory {
    pub fn new(grid: Vec<f64>) -> Self {
        Trajectory {
            grid,
            times: Vec::new(),
            states: Vec::new(),
            outside: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, state: Vec<f64>, outside: f64) {
        self.times.push(t);
        self.states.push(state);
        self.outside.push(outside);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn density(&self, i: usize) -> Result<GridDensity> {
        GridDensity::new(self.grid.clone(), self.states[i].clone())
    }

    pub fn last(&self) -> Result<GridDensity> {
        self.density(self.len() - 1)
    }

    /// Trapezoid integral of each snapshot.
    pub fn totals(&self) -> Vec<f64> {
        self.states.iter().map(|s| trapezoid(&self.grid, s)).collect()
    }
}

/// Snapshots of a two-dimensional solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory2 {
    pub times: Vec<f64>,
    pub states: Vec<GridDensity2>,
}

impl Trajectory2 {
    pub fn new() -> Self {
        Trajectory2 {
            times: Vec::new(),
            states: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, state: GridDensity2) {
        self.times.push(t);
        self.states.push(state);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

impl Default for Trajectory2 {
    fn default() -> Self {
        Self::new()
    }
}
