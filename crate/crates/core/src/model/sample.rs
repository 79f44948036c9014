use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ModelSpec;
use crate::error::{Error, Result};

/// Observation scheme of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scheme {
    /// One uniformly chosen daughter followed for `generations` divisions.
    U1 { generations: usize },
    /// Every cell of the tree that divided before `horizon`.
    U2 { horizon: f64 },
    /// Every cell alive at `time`.
    Vt { time: f64 },
}

impl Scheme {
    pub fn tag(&self) -> String {
        match self {
            Scheme::U1 { generations } => format!("U1({generations})"),
            Scheme::U2 { horizon } => format!("U2({horizon})"),
            Scheme::Vt { time } => format!("VT({time})"),
        }
    }

    pub fn parse_tag(tag: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("unrecognised scheme tag '{tag}'"));
        let open = tag.find('(').ok_or_else(bad)?;
        let inner = tag[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        match &tag[..open] {
            "U1" => Ok(Scheme::U1 {
                generations: inner.parse().map_err(|_| bad())?,
            }),
            "U2" => Ok(Scheme::U2 {
                horizon: inner.parse().map_err(|_| bad())?,
            }),
            "VT" => Ok(Scheme::Vt {
                time: inner.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }

    /// 1 for a single lineage, 2 for whole-population schemes.
    pub fn multiplicity(&self) -> u8 {
        match self {
            Scheme::U1 { .. } => 1,
            _ => 2,
        }
    }
}

/// Serial cell label, unique within a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellId(pub u64);

/// Complete life of one cell. Sizes are NaN when the sample carries no size observables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub id: CellId,
    pub parent: Option<CellId>,
    pub birth_time: f64,
    pub size_birth: f64,
    pub lifetime: f64,
    pub size_division: f64,
    pub increment: f64,
    pub growth_rate: f64,
}

impl CellRecord {
    pub fn division_time(&self) -> f64 {
        self.birth_time + self.lifetime
    }
}

/// A cell alive at the snapshot time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub id: CellId,
    pub parent: Option<CellId>,
    pub birth_time: f64,
    pub size_birth: f64,
    pub age: f64,
    pub size: f64,
    pub growth_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Simulated { model: Box<ModelSpec>, seed: u64, stream: u64 },
    Experimental,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub scheme: Scheme,
    pub records: Vec<CellRecord>,
    pub snapshot: Vec<SnapshotRecord>,
    /// Cells still alive at the end of a U2 horizon, excluded from `records`.
    pub censored: usize,
    pub has_sizes: bool,
    pub provenance: Provenance,
}

impl SampleSet {
    pub fn empty(scheme: Scheme, provenance: Provenance) -> Self {
        SampleSet {
            scheme,
            records: Vec::new(),
            snapshot: Vec::new(),
            censored: 0,
            has_sizes: true,
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len() + self.snapshot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lifetimes(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.lifetime).collect()
    }

    pub fn birth_sizes(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.size_birth).collect()
    }

    pub fn division_sizes(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.size_division).collect()
    }

    pub fn increments(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.increment).collect()
    }

    pub fn ages_at_snapshot(&self) -> Vec<f64> {
        self.snapshot.iter().map(|r| r.age).collect()
    }

    pub fn sizes_at_snapshot(&self) -> Vec<f64> {
        self.snapshot.iter().map(|r| r.size).collect()
    }

    pub fn require_sizes(&self, what: &str) -> Result<()> {
        if self.has_sizes {
            Ok(())
        } else {
            Err(Error::MissingObservables {
                what: what.to_string(),
                missing: "size_birth, size_division".to_string(),
            })
        }
    }

    /// `(parent birth size, child birth size)` for every record whose parent is present.
    pub fn birth_size_pairs(&self) -> Vec<(f64, f64)> {
        let index: HashMap<CellId, usize> =
            self.records.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
        self.records
            .iter()
            .filter_map(|r| {
                let p = index.get(&r.parent?)?;
                Some((self.records[*p].size_birth, r.size_birth))
            })
            .collect()
    }

    /// Ulam-Neveu path of a record: "1" for a root, then one digit per generation
    /// giving the daughter rank in order of appearance.
    pub fn ulam_neveu_path(&self, id: CellId) -> Option<String> {
        let index: HashMap<CellId, usize> =
            self.records.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
        let mut first_child: HashMap<CellId, CellId> = HashMap::new();
        for r in &self.records {
            if let Some(p) = r.parent {
                first_child.entry(p).or_insert(r.id);
            }
        }
        let mut digits = Vec::new();
        let mut cur = *index.get(&id)?;
        let mut steps = 0;
        while let Some(p) = self.records[cur].parent {
            let rank = if first_child.get(&p) == Some(&self.records[cur].id) { '0' } else { '1' };
            digits.push(rank);
            cur = *index.get(&p)?;
            steps += 1;
            if steps > self.records.len() {
                return None;
            }
        }
        digits.push('1');
        Some(digits.iter().rev().collect())
    }

    /// Concatenate samples of the same scheme, relabelling ids so they stay unique.
    pub fn merge(parts: Vec<SampleSet>) -> Result<SampleSet> {
        let mut iter = parts.into_iter();
        let mut out = iter.next().ok_or_else(|| Error::invalid("nothing to merge"))?;
        let mut offset = out.max_id() + 1;
        for part in iter {
            if part.scheme != out.scheme {
                return Err(Error::invalid("cannot merge samples of different schemes"));
            }
            let shift = |id: CellId| CellId(id.0 + offset);
            let next_offset = offset + part.max_id() + 1;
            out.records.extend(part.records.into_iter().map(|mut r| {
                r.id = shift(r.id);
                r.parent = r.parent.map(shift);
                r
            }));
            out.snapshot.extend(part.snapshot.into_iter().map(|mut r| {
                r.id = shift(r.id);
                r.parent = r.parent.map(shift);
                r
            }));
            out.censored += part.censored;
            out.has_sizes &= part.has_sizes;
            offset = next_offset;
        }
        Ok(out)
    }

    fn max_id(&self) -> u64 {
        let a = self.records.iter().map(|r| r.id.0).max().unwrap_or(0);
        let b = self.snapshot.iter().map(|r| r.id.0).max().unwrap_or(0);
        a.max(b)
    }

    /// Structural validation of complete records. Returns every problem found.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mut index: HashMap<CellId, usize> = HashMap::new();
        for (i, r) in self.records.iter().enumerate() {
            if index.insert(r.id, i).is_some() {
                problems.push(format!("duplicate id {}", r.id.0));
            }
        }
        let tol = |a: f64, b: f64| 1e-6 * a.abs().max(b.abs()).max(1.0);
        for r in &self.records {
            if !(r.lifetime >= 0.0) {
                problems.push(format!("cell {}: negative or missing lifetime", r.id.0));
            }
            if !r.birth_time.is_finite() {
                problems.push(format!("cell {}: missing birth time", r.id.0));
            }
            if self.has_sizes {
                if !(r.size_birth > 0.0) {
                    problems.push(format!("cell {}: nonpositive size at birth", r.id.0));
                }
                if r.size_division < r.size_birth {
                    problems.push(format!("cell {}: size at division below size at birth", r.id.0));
                }
                let inc = r.size_division - r.size_birth;
                if (inc - r.increment).abs() > tol(inc, r.increment) {
                    problems.push(format!(
                        "cell {}: increment {} disagrees with size_division - size_birth = {inc}",
                        r.id.0, r.increment
                    ));
                }
            }
            if let Some(p) = r.parent {
                match index.get(&p) {
                    None => problems.push(format!("cell {}: orphan reference to parent {}", r.id.0, p.0)),
                    Some(&pi) => {
                        let parent = &self.records[pi];
                        let div = parent.division_time();
                        if r.birth_time < div - tol(div, r.birth_time) {
                            problems.push(format!(
                                "cell {}: born at {} before parent {} divides at {div}",
                                r.id.0, r.birth_time, p.0
                            ));
                        }
                    }
                }
            }
        }
        for r in &self.records {
            let mut cur = r.parent;
            let mut steps = 0;
            while let Some(p) = cur {
                if p == r.id || steps > self.records.len() {
                    problems.push(format!("cell {}: cyclic parent links", r.id.0));
                    break;
                }
                cur = index.get(&p).and_then(|&i| self.records[i].parent);
                steps += 1;
            }
        }
        problems
    }
}
