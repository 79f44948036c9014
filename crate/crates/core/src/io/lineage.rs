use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use super::fmt17;
use crate::error::{Error, Result};
use crate::model::{CellId, CellRecord, Provenance, SampleSet, Scheme, SnapshotRecord};

pub const LINEAGE_COLUMNS: [&str; 9] = [
    "id",
    "parent_id",
    "birth_time",
    "size_birth",
    "lifetime",
    "size_division",
    "increment",
    "growth_rate",
    "scheme",
];

/// Extra columns carried by cells alive at a snapshot, whose lifetime is unknown.
pub const SNAPSHOT_COLUMNS: [&str; 2] = ["age", "size"];

const REQUIRED: [&str; 4] = ["id", "parent_id", "birth_time", "lifetime"];

/// Checks applied while reading a lineage file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestOptions {
    /// Cross-check lifetimes against `ln(size_division / size_birth) / growth_rate`.
    pub exponential_lifetimes: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            exponential_lifetimes: true,
        }
    }
}

fn opt_id(v: Option<CellId>) -> String {
    v.map(|c| c.0.to_string()).unwrap_or_default()
}

/// Serialise a sample, one row per cell, snapshot cells last.
pub fn write_lineage<W: Write>(s: &SampleSet, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let snapshot = !s.snapshot.is_empty();
    let mut header: Vec<&str> = LINEAGE_COLUMNS.to_vec();
    if snapshot {
        header.extend(SNAPSHOT_COLUMNS);
    }
    w.write_record(&header)?;
    let tag = s.scheme.tag();
    for r in &s.records {
        let mut row = vec![
            r.id.0.to_string(),
            opt_id(r.parent),
            fmt17(r.birth_time),
            fmt17(r.size_birth),
            fmt17(r.lifetime),
            fmt17(r.size_division),
            fmt17(r.increment),
            fmt17(r.growth_rate),
            tag.clone(),
        ];
        if snapshot {
            row.extend([String::new(), String::new()]);
        }
        w.write_record(&row)?;
    }
    for r in &s.snapshot {
        w.write_record(&[
            r.id.0.to_string(),
            opt_id(r.parent),
            fmt17(r.birth_time),
            fmt17(r.size_birth),
            String::new(),
            String::new(),
            String::new(),
            fmt17(r.growth_rate),
            tag.clone(),
            fmt17(r.age),
            fmt17(r.size),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_lineage_csv(s: &SampleSet, path: &Path) -> Result<()> {
    write_lineage(s, std::fs::File::create(path)?)
}

pub fn ingest_lineage_csv(path: &Path) -> Result<SampleSet> {
    ingest_lineage_csv_with(path, IngestOptions::default())
}

pub fn ingest_lineage_csv_with(path: &Path, opts: IngestOptions) -> Result<SampleSet> {
    let file = std::fs::File::open(path)?;
    read_lineage(file, opts).map_err(|e| match e {
        Error::Validation(m) => Error::Validation(format!("{}:\n{m}", path.display())),
        other => other,
    })
}

struct Row {
    line: u64,
    id: u64,
    parent: Option<u64>,
    birth_time: f64,
    size_birth: f64,
    lifetime: f64,
    size_division: f64,
    increment: f64,
    growth_rate: f64,
    age: f64,
    size: f64,
    scheme: Option<String>,
}

fn parse_num(field: Option<&str>, column: &str, line: u64, problems: &mut Vec<String>) -> f64 {
    match field.map(str::trim) {
        None | Some("") => f64::NAN,
        Some(s) => s.parse::<f64>().unwrap_or_else(|_| {
            problems.push(format!("line {line}: column {column}: '{s}' is not a number"));
            f64::NAN
        }),
    }
}

/// Read and validate a lineage table. Every problem found is listed in one validation error.
pub fn read_lineage<R: Read>(input: R, opts: IngestOptions) -> Result<SampleSet> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers()?.clone();
    let col: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let missing: Vec<&str> = REQUIRED.iter().copied().filter(|c| !col.contains_key(c)).collect();
    if !missing.is_empty() {
        return Err(Error::Validation(format!("missing columns: {}", missing.join(", "))));
    }
    let known: HashSet<&str> = LINEAGE_COLUMNS.iter().chain(&SNAPSHOT_COLUMNS).copied().collect();
    let mut problems: Vec<String> = headers
        .iter()
        .filter(|h| !known.contains(h))
        .map(|h| format!("unknown column '{h}'"))
        .collect();
    let has_sizes = col.contains_key("size_birth") && col.contains_key("size_division");
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let get = |name: &str| col.get(name).and_then(|&i| rec.get(i));
        let num = |name: &str, problems: &mut Vec<String>| parse_num(get(name), name, line, problems);
        let id = match get("id").map(str::trim).unwrap_or("").parse::<u64>() {
            Ok(v) => v,
            Err(_) => {
                problems.push(format!("line {line}: id must be a nonnegative integer"));
                continue;
            }
        };
        let parent = match get("parent_id").map(str::trim).unwrap_or("") {
            "" => None,
            p => match p.parse::<u64>() {
                Ok(v) => Some(v),
                Err(_) => {
                    problems.push(format!("line {line}: parent_id '{p}' is not an id"));
                    None
                }
            },
        };
        let row = Row {
            line,
            id,
            parent,
            birth_time: num("birth_time", &mut problems),
            size_birth: num("size_birth", &mut problems),
            lifetime: num("lifetime", &mut problems),
            size_division: num("size_division", &mut problems),
            increment: num("increment", &mut problems),
            growth_rate: num("growth_rate", &mut problems),
            age: num("age", &mut problems),
            size: num("size", &mut problems),
            scheme: get("scheme").map(str::to_string).filter(|s| !s.is_empty()),
        };
        rows.push(row);
    }
    let tags: HashSet<&str> = rows.iter().filter_map(|r| r.scheme.as_deref()).collect();
    if tags.len() > 1 {
        problems.push(format!("rows disagree on the scheme: {tags:?}"));
    }
    let mut records = Vec::new();
    let mut snapshot = Vec::new();
    for r in &rows {
        if !r.birth_time.is_finite() {
            problems.push(format!("line {}: missing birth_time", r.line));
        }
        if has_sizes && r.size_birth.is_finite() && r.size_birth <= 0.0 {
            problems.push(format!("line {}: negative or zero size_birth", r.line));
        }
        if r.lifetime.is_nan() {
            if r.age.is_finite() {
                snapshot.push(SnapshotRecord {
                    id: CellId(r.id),
                    parent: r.parent.map(CellId),
                    birth_time: r.birth_time,
                    size_birth: r.size_birth,
                    age: r.age,
                    size: r.size,
                    growth_rate: r.growth_rate,
                });
            } else {
                problems.push(format!("line {}: neither lifetime nor snapshot age given", r.line));
            }
            continue;
        }
        let increment = if r.increment.is_nan() { r.size_division - r.size_birth } else { r.increment };
        if opts.exponential_lifetimes && has_sizes && r.growth_rate > 0.0 && r.size_birth > 0.0 {
            let expected = (r.size_division / r.size_birth).ln() / r.growth_rate;
            if (expected - r.lifetime).abs() > 1e-6 * expected.abs().max(r.lifetime.abs()).max(1e-12) {
                problems.push(format!(
                    "line {}: lifetime {} disagrees with ln(size_division / size_birth) / growth_rate = {expected}",
                    r.line, r.lifetime
                ));
            }
        }
        records.push(CellRecord {
            id: CellId(r.id),
            parent: r.parent.map(CellId),
            birth_time: r.birth_time,
            size_birth: r.size_birth,
            lifetime: r.lifetime,
            size_division: r.size_division,
            increment,
            growth_rate: r.growth_rate,
        });
    }
    let scheme = match tags.iter().next() {
        Some(tag) => Scheme::parse_tag(tag)?,
        None => infer_scheme(&records, &snapshot),
    };
    let mut s = SampleSet::empty(scheme, Provenance::Experimental);
    s.has_sizes = has_sizes && records.iter().all(|r| r.size_birth.is_finite() && r.size_division.is_finite());
    s.records = records;
    s.snapshot = snapshot;
    problems.extend(s.validate());
    if !problems.is_empty() {
        return Err(Error::Validation(problems.join("\n")));
    }
    Ok(s)
}

/// A single chain of cells is a lineage, anything else a population up to its last division.
fn infer_scheme(records: &[CellRecord], snapshot: &[SnapshotRecord]) -> Scheme {
    if !snapshot.is_empty() {
        let time = snapshot.iter().map(|r| r.birth_time + r.age).fold(f64::NEG_INFINITY, f64::max);
        return Scheme::Vt { time };
    }
    let mut children: HashMap<CellId, usize> = HashMap::new();
    for r in records {
        if let Some(p) = r.parent {
            *children.entry(p).or_default() += 1;
        }
    }
    let roots = records.iter().filter(|r| r.parent.is_none()).count();
    if roots <= 1 && children.values().all(|&c| c <= 1) {
        Scheme::U1 {
            generations: records.len().saturating_sub(1),
        }
    } else {
        Scheme::U2 {
            horizon: records.iter().map(|r| r.division_time()).fold(f64::NEG_INFINITY, f64::max),
        }
    }
}
