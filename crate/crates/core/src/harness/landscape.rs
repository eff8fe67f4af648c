use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::genome::{Genome, Knob};
use crate::model::Metrics;
use crate::policy::MutationCategory;

/// `knob` is at one of `levels`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Condition {
    pub knob: String,
    pub levels: Vec<u8>,
}

/// bpb delta applied when every condition holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interaction {
    pub when: Vec<Condition>,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrashRule {
    pub when: Vec<Condition>,
    pub reason: String,
}

/// Additive fitness model with pairwise-or-wider interactions, rule-based
/// crashes and Gaussian measurement noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeSpec {
    pub name: String,
    pub base_bpb: f64,
    pub base_vram: f64,
    pub base_params: f64,
    pub noise_sd: f64,
    pub knobs: Vec<Knob>,
    #[serde(default)]
    pub interactions: Vec<Interaction>,
    #[serde(default)]
    pub crash_rules: Vec<CrashRule>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Evaluation {
    Success(Metrics),
    Crash(String),
}

impl LandscapeSpec {
    pub fn schema(&self) -> &[Knob] {
        &self.knobs
    }

    pub fn baseline(&self) -> Genome {
        Genome(self.knobs.iter().map(|k| k.baseline).collect())
    }

    pub fn with_noise(mut self, noise_sd: f64) -> Self {
        self.noise_sd = noise_sd;
        self
    }

    fn knob_index(&self, name: &str) -> Result<usize> {
        self.knobs
            .iter()
            .position(|k| k.name == name)
            .ok_or_else(|| Error::Config(alloc::format!("unknown knob {name:?} in landscape")))
    }

    fn matches(&self, when: &[Condition], genome: &Genome) -> Result<bool> {
        for c in when {
            let idx = self.knob_index(&c.knob)?;
            if !c.levels.contains(&genome.0[idx]) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.knobs.is_empty() {
            return bad("landscape has no knobs".into());
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return bad(alloc::format!("noise_sd must be non-negative, got {}", self.noise_sd));
        }
        if !(self.base_bpb.is_finite() && self.base_bpb > 0.0) {
            return bad("base_bpb must be positive".into());
        }
        for (i, k) in self.knobs.iter().enumerate() {
            let n = k.level_count();
            if n == 0 || n > usize::from(u8::MAX) {
                return bad(alloc::format!("knob {} must have 1..=255 levels", k.name));
            }
            if k.bpb.len() != n || k.vram.len() != n || k.params.len() != n {
                return bad(alloc::format!("knob {} effect tables must have {n} entries", k.name));
            }
            if usize::from(k.baseline) >= n {
                return bad(alloc::format!("knob {} baseline out of range", k.name));
            }
            if self.knobs[..i].iter().any(|o| o.name == k.name) {
                return bad(alloc::format!("duplicate knob {}", k.name));
            }
        }
        let rules = self.interactions.iter().map(|x| &x.when).chain(self.crash_rules.iter().map(|c| &c.when));
        for when in rules {
            for c in when {
                let idx = self.knob_index(&c.knob)?;
                if c.levels.iter().any(|&l| usize::from(l) >= self.knobs[idx].level_count()) {
                    return bad(alloc::format!("condition on {} names a missing level", c.knob));
                }
            }
        }
        // Conservative lower bound: every negative effect at once.
        let floor = self.base_bpb
            + self.knobs.iter().map(|k| k.bpb.iter().copied().fold(f64::INFINITY, f64::min)).sum::<f64>()
            + self.interactions.iter().map(|x| x.delta.min(0.0)).sum::<f64>();
        if floor <= 0.0 {
            return bad("fitness can reach a non-positive value".into());
        }
        Ok(())
    }

    /// Crash reason for `genome`, if any rule matches.
    pub fn crash_reason(&self, genome: &Genome) -> Result<Option<&str>> {
        for rule in &self.crash_rules {
            if self.matches(&rule.when, genome)? {
                return Ok(Some(&rule.reason));
            }
        }
        Ok(None)
    }

    /// Expected bpb without noise.
    pub fn noiseless_bpb(&self, genome: &Genome) -> Result<f64> {
        genome.validate(&self.knobs)?;
        let mut bpb = self.base_bpb;
        for (k, &level) in self.knobs.iter().zip(&genome.0) {
            bpb += k.bpb[usize::from(level)];
        }
        for x in &self.interactions {
            if self.matches(&x.when, genome)? {
                bpb += x.delta;
            }
        }
        Ok(bpb)
    }

    pub fn vram(&self, genome: &Genome) -> f64 {
        self.knobs.iter().zip(&genome.0).fold(self.base_vram, |acc, (k, &l)| acc + k.vram[usize::from(l)])
    }

    pub fn params(&self, genome: &Genome) -> f64 {
        self.knobs.iter().zip(&genome.0).fold(self.base_params, |acc, (k, &l)| acc + k.params[usize::from(l)])
    }

    pub fn space_size(&self) -> usize {
        self.knobs.iter().map(Knob::level_count).product()
    }

    /// Every genome in lexicographic order.
    pub fn genomes(&self) -> impl Iterator<Item = Genome> + '_ {
        let total = self.space_size();
        (0..total).map(move |mut index| {
            let mut levels = vec![0u8; self.knobs.len()];
            for (slot, k) in levels.iter_mut().zip(&self.knobs).rev() {
                *slot = (index % k.level_count()) as u8;
                index /= k.level_count();
            }
            Genome(levels)
        })
    }

    /// Lowest noiseless bpb over all non-crashing genomes.
    pub fn global_optimum(&self) -> Result<(Genome, f64)> {
        let mut best: Option<(Genome, f64)> = None;
        for g in self.genomes() {
            if self.crash_reason(&g)?.is_some() {
                continue;
            }
            let bpb = self.noiseless_bpb(&g)?;
            if best.as_ref().is_none_or(|(_, b)| bpb < *b) {
                best = Some((g, bpb));
            }
        }
        best.ok_or_else(|| Error::Config("every genome crashes".into()))
    }

    /// Five-knob landscape where deeper models only pay off at small batch
    /// sizes, while the larger batch is the locally better choice at the
    /// baseline depth. Single-knob moves from the baseline never cross the
    /// valley, so the optimum needs a retained non-best line.
    pub fn ladder() -> Self {
        let knob =
            |name: &str, group, labels: &[&str], baseline, bpb: &[f64], vram: &[f64], params: &[f64]| Knob {
                name: name.into(),
                group,
                levels: labels.iter().map(|s| String::from(*s)).collect(),
                baseline,
                bpb: bpb.to_vec(),
                vram: vram.to_vec(),
                params: params.to_vec(),
            };
        let cond = |knob: &str, levels: &[u8]| Condition { knob: knob.into(), levels: levels.to_vec() };
        let mut interactions = Vec::new();
        for depth in 1..=3u8 {
            let d = f64::from(depth);
            interactions.push(Interaction {
                when: vec![cond("depth", &[depth]), cond("batch", &[2, 3])],
                delta: 1.0e-3 * d,
            });
            interactions.push(Interaction {
                when: vec![cond("depth", &[depth]), cond("batch", &[0, 1])],
                delta: -1.8e-3 * d,
            });
        }
        interactions
            .push(Interaction { when: vec![cond("warmdown", &[1]), cond("opt_beta", &[2])], delta: -0.8e-3 });

        LandscapeSpec {
            name: "ladder".into(),
            base_bpb: 0.99,
            base_vram: 60.0,
            base_params: 80.0,
            noise_sd: 5.0e-5,
            knobs: vec![
                knob(
                    "depth",
                    MutationCategory::Architecture,
                    &["8", "9", "10", "11"],
                    0,
                    &[0.0, 0.0, 0.0, 0.0],
                    &[0.0, 4.0, 8.0, 12.0],
                    &[0.0, 10.0, 20.0, 30.0],
                ),
                knob(
                    "batch",
                    MutationCategory::DataBatch,
                    &["2^16", "2^17", "2^18", "2^19"],
                    2,
                    &[1.5e-3, 0.2e-3, 0.0, -0.3e-3],
                    &[-22.0, -15.0, 0.0, 18.0],
                    &[0.0, 0.0, 0.0, 0.0],
                ),
                knob(
                    "lr",
                    MutationCategory::Optimizer,
                    &["0.02", "0.03", "0.04", "0.06"],
                    1,
                    &[0.6e-3, 0.0, -0.9e-3, 0.4e-3],
                    &[0.0, 0.0, 0.0, 0.0],
                    &[0.0, 0.0, 0.0, 0.0],
                ),
                knob(
                    "warmdown",
                    MutationCategory::Schedule,
                    &["0.3", "0.5", "0.7"],
                    0,
                    &[0.0, -0.7e-3, -0.3e-3],
                    &[0.0, 0.0, 0.0],
                    &[0.0, 0.0, 0.0],
                ),
                knob(
                    "opt_beta",
                    MutationCategory::Optimizer,
                    &["0.95", "0.90", "0.85"],
                    0,
                    &[0.0, -0.4e-3, -0.8e-3],
                    &[0.0, 0.0, 0.0],
                    &[0.0, 0.0, 0.0],
                ),
            ],
            interactions,
            crash_rules: vec![
                CrashRule {
                    when: vec![cond("depth", &[3]), cond("lr", &[3])],
                    reason: "loss diverged".into(),
                },
                CrashRule {
                    when: vec![cond("depth", &[2, 3]), cond("batch", &[3])],
                    reason: "out of memory".into(),
                },
            ],
        }
    }
}

/// Runs one synthetic experiment. Deterministic given the genome and `rng`'s seed.
pub fn evaluate<R: Rng + ?Sized>(
    genome: &Genome,
    landscape: &LandscapeSpec,
    rng: &mut R,
) -> Result<Evaluation> {
    genome.validate(&landscape.knobs)?;
    if let Some(reason) = landscape.crash_reason(genome)? {
        return Ok(Evaluation::Crash(reason.into()));
    }
    let expected = landscape.noiseless_bpb(genome)?;
    let mut bpb = expected;
    if landscape.noise_sd > 0.0 {
        let normal = Normal::new(0.0, landscape.noise_sd)
            .map_err(|e| Error::Config(alloc::format!("noise model: {e}")))?;
        bpb += normal.sample(rng);
        if bpb <= 0.0 {
            bpb = expected;
        }
    }
    let metrics = Metrics::new(bpb, landscape.vram(genome).max(0.0), landscape.params(genome).max(0.0))?;
    Ok(Evaluation::Success(metrics))
}
