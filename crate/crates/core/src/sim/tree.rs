use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RngStream;
use crate::error::{Error, Result};
use crate::model::{
    CellId, CellRecord, GrowthLaw, ModelSpec, Provenance, SampleSet, Scheme, SnapshotRecord, Trigger,
};

pub const DEFAULT_CELL_CAP: usize = 1_000_000;

/// Birth state of the root cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootSpec {
    pub size: f64,
    pub time: f64,
    /// Generations of a discarded single lineage run first to forget the initial size.
    pub warm_start: usize,
}

impl RootSpec {
    pub fn fixed(size: f64) -> Self {
        RootSpec {
            size,
            time: 0.0,
            warm_start: 0,
        }
    }

    pub fn warm(size: f64, generations: usize) -> Self {
        RootSpec {
            size,
            time: 0.0,
            warm_start: generations,
        }
    }
}

impl Default for RootSpec {
    fn default() -> Self {
        RootSpec::fixed(1.0)
    }
}

#[derive(Debug, Clone, Copy)]
struct Newborn {
    id: u64,
    parent: Option<u64>,
    birth_time: f64,
    size: f64,
    factor: f64,
}

#[derive(Debug, Clone, Copy)]
struct Life {
    lifetime: f64,
    size_division: f64,
}

struct Engine<'a> {
    spec: &'a ModelSpec,
    gamma: Option<Gamma<f64>>,
}

impl<'a> Engine<'a> {
    fn new(spec: &'a ModelSpec) -> Result<Self> {
        let gamma = match spec.growth_variability {
            Some(v) if v.cv > 0.0 => {
                let shape = 1.0 / (v.cv * v.cv);
                Some(
                    Gamma::new(shape, 1.0 / shape)
                        .map_err(|e| Error::invalid(format!("growth variability: {e}")))?,
                )
            }
            _ => None,
        };
        Ok(Engine { spec, gamma })
    }

    fn growth_factor(&self, rng: &mut RngStream) -> f64 {
        match &self.gamma {
            Some(g) => g.sample(rng),
            None => 1.0,
        }
    }

    fn growth_rate(&self, factor: f64) -> f64 {
        match &self.spec.growth {
            GrowthLaw::Exponential { rate } => rate * factor,
            GrowthLaw::Tabulated { .. } => factor,
        }
    }

    fn flow(&self, t: f64, x: f64, factor: f64) -> Result<f64> {
        self.spec.growth.flow(t * factor, x)
    }

    fn flow_time(&self, x0: f64, x1: f64, factor: f64) -> f64 {
        self.spec.growth.flow_time(x0, x1) / factor
    }

    fn draw_life(&self, size: f64, factor: f64, rng: &mut RngStream) -> Result<Life> {
        let level = rng.exponential();
        let rate = &self.spec.rate;
        match self.spec.trigger {
            Trigger::Age => {
                let lifetime = rate.invert_hazard(0.0, level)?;
                Ok(Life {
                    lifetime,
                    size_division: self.flow(lifetime, size, factor)?,
                })
            }
            Trigger::Size => {
                let size_division = rate.invert_hazard(size, level)?;
                Ok(Life {
                    lifetime: self.flow_time(size, size_division, factor),
                    size_division,
                })
            }
            Trigger::Increment => {
                let increment = rate.invert_hazard(0.0, level)?;
                let size_division = size + increment;
                Ok(Life {
                    lifetime: self.flow_time(size, size_division, factor),
                    size_division,
                })
            }
        }
    }

    fn record(&self, cell: &Newborn, life: &Life) -> CellRecord {
        CellRecord {
            id: CellId(cell.id),
            parent: cell.parent.map(CellId),
            birth_time: cell.birth_time,
            size_birth: cell.size,
            lifetime: life.lifetime,
            size_division: life.size_division,
            increment: life.size_division - cell.size,
            growth_rate: self.growth_rate(cell.factor),
        }
    }

    fn root(&self, root: &RootSpec, rng: &mut RngStream) -> Result<Newborn> {
        if !(root.size > 0.0 && root.size.is_finite()) {
            return Err(Error::invalid(format!("root size must be positive, got {}", root.size)));
        }
        let mut size = root.size;
        let mut factor = self.growth_factor(rng);
        for _ in 0..root.warm_start {
            let life = self.draw_life(size, factor, rng)?;
            let ratio = self.spec.kernel.sample_ratio(rng);
            size = ratio * life.size_division;
            factor = self.growth_factor(rng);
        }
        Ok(Newborn {
            id: 0,
            parent: None,
            birth_time: root.time,
            size,
            factor,
        })
    }
}

/// Cells of one tree split at a time horizon.
#[derive(Debug, Clone)]
pub struct PopulationSplit {
    /// Cells that divided at or before the horizon.
    pub divided: SampleSet,
    /// Cells alive at the horizon.
    pub alive: SampleSet,
}

fn provenance(spec: &ModelSpec, rng: &RngStream) -> Provenance {
    Provenance::Simulated {
        model: Box::new(spec.clone()),
        seed: rng.seed(),
        stream: rng.stream(),
    }
}

/// Follow one uniformly chosen daughter at each division for `generations` divisions.
pub fn simulate_lineage(
    spec: &ModelSpec,
    generations: usize,
    root: &RootSpec,
    rng: &mut RngStream,
) -> Result<SampleSet> {
    let engine = Engine::new(spec)?;
    let mut cell = engine.root(root, rng)?;
    let mut out = SampleSet::empty(Scheme::U1 { generations }, provenance(spec, rng));
    out.records.reserve(generations + 1);
    for g in 0..=generations {
        let life = engine.draw_life(cell.size, cell.factor, rng)?;
        out.records.push(engine.record(&cell, &life));
        if g == generations {
            break;
        }
        let ratio = spec.kernel.sample_ratio(rng);
        let first: bool = rng.random();
        let share = if first { ratio } else { 1.0 - ratio };
        let factor = engine.growth_factor(rng);
        cell = Newborn {
            id: cell.id + 1,
            parent: Some(cell.id),
            birth_time: cell.birth_time + life.lifetime,
            size: share * life.size_division,
            factor,
        };
    }
    Ok(out)
}

/// Expand the whole tree breadth-first up to `horizon`.
pub fn simulate_population(
    spec: &ModelSpec,
    horizon: f64,
    root: &RootSpec,
    rng: &mut RngStream,
    cap: usize,
) -> Result<PopulationSplit> {
    if !(horizon >= root.time) {
        return Err(Error::invalid("horizon precedes the root birth time"));
    }
    let engine = Engine::new(spec)?;
    let first = engine.root(root, rng)?;
    let mut divided = SampleSet::empty(Scheme::U2 { horizon }, provenance(spec, rng));
    let mut alive = SampleSet::empty(Scheme::Vt { time: horizon }, provenance(spec, rng));
    let mut queue = VecDeque::from([first]);
    let mut next_id = 1u64;
    while let Some(cell) = queue.pop_front() {
        let life = engine.draw_life(cell.size, cell.factor, rng)?;
        let division_time = cell.birth_time + life.lifetime;
        if division_time <= horizon {
            divided.records.push(engine.record(&cell, &life));
            let ratio = spec.kernel.sample_ratio(rng);
            for share in [ratio, 1.0 - ratio] {
                let factor = engine.growth_factor(rng);
                queue.push_back(Newborn {
                    id: next_id,
                    parent: Some(cell.id),
                    birth_time: division_time,
                    size: share * life.size_division,
                    factor,
                });
                next_id += 1;
            }
        } else {
            let age = horizon - cell.birth_time;
            alive.snapshot.push(SnapshotRecord {
                id: CellId(cell.id),
                parent: cell.parent.map(CellId),
                birth_time: cell.birth_time,
                size_birth: cell.size,
                age,
                size: engine.flow(age, cell.size, cell.factor)?,
                growth_rate: engine.growth_rate(cell.factor),
            });
        }
        if queue.len() + alive.snapshot.len() > cap {
            divided.censored = queue.len() + alive.snapshot.len();
            return Err(Error::PopulationCap {
                cap,
                partial: Box::new(divided),
            });
        }
    }
    divided.censored = alive.snapshot.len();
    Ok(PopulationSplit { divided, alive })
}

/// Simulate one tree under `scheme`.
pub fn simulate_tree(
    spec: &ModelSpec,
    scheme: Scheme,
    root: &RootSpec,
    rng: &mut RngStream,
    cap: usize,
) -> Result<SampleSet> {
    match scheme {
        Scheme::U1 { generations } => simulate_lineage(spec, generations, root, rng),
        Scheme::U2 { horizon } => Ok(simulate_population(spec, horizon, root, rng, cap)?.divided),
        Scheme::Vt { time } => Ok(simulate_population(spec, time, root, rng, cap)?.alive),
    }
}

/// Independent trees on streams `0..replicates`, simulated in parallel.
pub fn simulate_replicates(
    spec: &ModelSpec,
    scheme: Scheme,
    root: &RootSpec,
    seed: u64,
    replicates: usize,
    cap: usize,
) -> Result<Vec<SampleSet>> {
    (0..replicates as u64)
        .into_par_iter()
        .map(|stream| {
            let mut rng = RngStream::new(seed, stream);
            simulate_tree(spec, scheme, root, &mut rng, cap)
        })
        .collect()
}
