use std::path::Path;

use serde::Serialize;
use serde_json::json;

use super::fmt17;
use crate::error::Result;
use crate::model::{EigenTriplet, EstimationResult, GridDensity, GridDensity2};
use crate::solver::{Trajectory, Trajectory2};

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    Ok(csv::Writer::from_path(path)?)
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// `x,value`
pub fn write_grid_density_csv(d: &GridDensity, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["x", "value"])?;
    for (x, v) in d.x.iter().zip(&d.values) {
        w.write_record([fmt17(*x), fmt17(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// `first,second,value`, with custom column names.
pub fn write_grid_density2_csv(d: &GridDensity2, names: [&str; 2], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([names[0], names[1], "value"])?;
    for (i, a) in d.first.iter().enumerate() {
        for (j, b) in d.second.iter().enumerate() {
            w.write_record([fmt17(*a), fmt17(*b), fmt17(d.at(i, j))])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `x,estimate,flag` plus a JSON sidecar with everything else.
pub fn write_estimation(r: &EstimationResult, csv_path: &Path, json_path: &Path) -> Result<()> {
    let mut w = writer(csv_path)?;
    w.write_record(["x", "estimate", "flag"])?;
    for ((x, v), f) in r.grid().iter().zip(r.values()).zip(&r.flags) {
        w.write_record([fmt17(*x), fmt17(*v), u8::from(*f).to_string()])?;
    }
    w.flush()?;
    write_json(
        &json!({
            "bandwidth": r.bandwidth,
            "spectral_cutoff": r.spectral_cutoff,
            "threshold": r.threshold,
            "floor_hits": r.floor_hits(),
            "effective_sample_size": finite(r.effective_sample_size),
            "lambda": r.lambda,
            "notes": r.notes,
        }),
        json_path,
    )
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// `x,direct,adjoint` plus solver metadata in a JSON sidecar.
pub fn write_eigen(e: &EigenTriplet, csv_path: &Path, json_path: &Path) -> Result<()> {
    let mut w = writer(csv_path)?;
    w.write_record(["x", "direct", "adjoint"])?;
    for ((x, n), p) in e.direct.x.iter().zip(&e.direct.values).zip(&e.adjoint) {
        w.write_record([fmt17(*x), fmt17(*n), fmt17(*p)])?;
    }
    w.flush()?;
    let x = &e.direct.x;
    let mut meta = json!({
        "lambda": e.lambda,
        "multiplicity": e.multiplicity,
        "oscillatory": e.oscillatory,
        "iterations": e.iterations,
        "residual": e.residual,
        "grid": { "points": x.len(), "min": x.first(), "max": x.last() },
    });
    if e.oscillatory {
        meta["warning"] = json!(
            "equal mitosis with exponential growth: the dominant eigenvalue is not isolated and solutions oscillate with period ln 2 / kappa"
        );
    }
    write_json(&meta, json_path)
}

/// `t,x,value`
pub fn write_trajectory_csv(t: &Trajectory, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "x", "value"])?;
    for (time, state) in t.times.iter().zip(&t.states) {
        for (x, v) in t.grid.iter().zip(state) {
            w.write_record([fmt17(*time), fmt17(*x), fmt17(*v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `t,z,x,value`
pub fn write_trajectory2_csv(t: &Trajectory2, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "z", "x", "value"])?;
    for (time, d) in t.times.iter().zip(&t.states) {
        for (i, a) in d.first.iter().enumerate() {
            for (j, b) in d.second.iter().enumerate() {
                w.write_record([fmt17(*time), fmt17(*a), fmt17(*b), fmt17(d.at(i, j))])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
