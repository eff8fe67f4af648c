use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::MutationCategory;

/// One tunable knob of the synthetic training configuration, with its
/// per-level contributions to the metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Knob {
    pub name: String,
    pub group: MutationCategory,
    /// Display label per level; the level count is `levels.len()`.
    pub levels: Vec<String>,
    /// Level used by the root configuration.
    pub baseline: u8,
    /// Additive bpb delta per level.
    pub bpb: Vec<f64>,
    /// Additive GB per level.
    pub vram: Vec<f64>,
    /// Additive millions of parameters per level.
    pub params: Vec<f64>,
}

impl Knob {
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }
}

/// Integer level per knob.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Genome(pub Vec<u8>);

impl Genome {
    pub fn levels(&self) -> &[u8] {
        &self.0
    }

    pub fn validate(&self, schema: &[Knob]) -> Result<()> {
        if self.0.len() != schema.len() {
            return Err(Error::Domain(alloc::format!(
                "genome has {} knobs, schema has {}",
                self.0.len(),
                schema.len()
            )));
        }
        for (level, knob) in self.0.iter().zip(schema) {
            if usize::from(*level) >= knob.level_count() {
                return Err(Error::Domain(alloc::format!(
                    "knob {} level {level} out of range 0..{}",
                    knob.name,
                    knob.level_count()
                )));
            }
        }
        Ok(())
    }

    pub fn hamming(&self, other: &Genome) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

/// Moves one uniformly chosen knob to a uniformly chosen different level.
/// Returns the child and the index of the changed knob.
pub fn mutate_genome<R: Rng + ?Sized>(
    parent: &Genome,
    schema: &[Knob],
    rng: &mut R,
) -> Result<(Genome, usize)> {
    parent.validate(schema)?;
    let movable: Vec<usize> = (0..schema.len()).filter(|&i| schema[i].level_count() > 1).collect();
    if movable.is_empty() {
        return Err(Error::Domain("no knob has more than one level".into()));
    }
    let knob = movable[rng.random_range(0..movable.len())];
    let current = parent.0[knob];
    let mut level = rng.random_range(0..schema[knob].level_count() - 1) as u8;
    if level >= current {
        level += 1;
    }
    let mut child = parent.clone();
    child.0[knob] = level;
    Ok((child, knob))
}

/// Copies `p1` and transplants `p2`'s level for one knob where they differ.
pub fn crossover_genome<R: Rng + ?Sized>(p1: &Genome, p2: &Genome, rng: &mut R) -> Result<(Genome, usize)> {
    if p1.0.len() != p2.0.len() {
        return Err(Error::Domain("crossover parents have different schemas".into()));
    }
    let differing: Vec<usize> = (0..p1.0.len()).filter(|&i| p1.0[i] != p2.0[i]).collect();
    if differing.is_empty() {
        return Err(Error::DegenerateCrossover);
    }
    let knob = differing[rng.random_range(0..differing.len())];
    let mut child = p1.clone();
    child.0[knob] = p2.0[knob];
    Ok((child, knob))
}

/// One clause per changed knob, e.g. `set batch to 2^17 (was 2^18) [data_batch]`.
pub fn describe_change(parent: &Genome, child: &Genome, schema: &[Knob]) -> Result<String> {
    parent.validate(schema)?;
    child.validate(schema)?;
    let mut out = String::new();
    for (knob, (old, new)) in schema.iter().zip(parent.0.iter().zip(&child.0)) {
        if old == new {
            continue;
        }
        if !out.is_empty() {
            out.push_str("; ");
        }
        let _ = write!(
            out,
            "set {} to {} (was {}) [{}]",
            knob.name,
            knob.levels[usize::from(*new)],
            knob.levels[usize::from(*old)],
            knob.group
        );
    }
    if out.is_empty() {
        return Err(Error::Domain("genomes are identical".into()));
    }
    Ok(out)
}
