use rand::Rng;

use crate::error::Result;
use crate::harness::genome::{mutate_genome, Genome};
use crate::harness::landscape::{evaluate, Evaluation, LandscapeSpec};
use crate::model::Metrics;

/// Outcome of one keep-or-discard step.
#[derive(Debug, Clone, PartialEq)]
pub struct HillclimbStep {
    pub child: Genome,
    pub changed_knob: usize,
    pub evaluation: Evaluation,
    /// The child replaces the incumbent.
    pub accepted: bool,
    pub incumbent: (Genome, Metrics),
}

/// Mutates the incumbent and keeps the child only if it is strictly better.
/// Crashes are always discarded.
pub fn hillclimb_step<R1, R2>(
    incumbent: &(Genome, Metrics),
    landscape: &LandscapeSpec,
    spawn_rng: &mut R1,
    eval_rng: &mut R2,
) -> Result<HillclimbStep>
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    let (child, changed_knob) = mutate_genome(&incumbent.0, landscape.schema(), spawn_rng)?;
    let evaluation = evaluate(&child, landscape, eval_rng)?;
    let accepted = matches!(&evaluation, Evaluation::Success(m) if m.bpb < incumbent.1.bpb);
    let next = match (&evaluation, accepted) {
        (Evaluation::Success(m), true) => (child.clone(), *m),
        _ => incumbent.clone(),
    };
    Ok(HillclimbStep { child, changed_knob, evaluation, accepted, incumbent: next })
}
