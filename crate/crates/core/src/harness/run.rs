use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::genome::{crossover_genome, describe_change, mutate_genome, Genome};
use crate::harness::hillclimb::hillclimb_step;
use crate::harness::landscape::{evaluate, Evaluation, LandscapeSpec};
use crate::harness::rng::{stream, Purpose};
use crate::model::{
    improvement, DiscardReason, EliteNode, ExperimentRecord, Metrics, NodeId, OperatorKind, Outcome,
    PromotionDecision, Step,
};
use crate::policy::{decide_child_promotion, plan_step, MutationCategory, PolicyConfig};
use crate::state::SearchState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Hillclimb,
    GearFixed,
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::Hillclimb => "hillclimb",
            PolicyKind::GearFixed => "gear-fixed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub policy_kind: PolicyKind,
    pub steps: u32,
    pub seed: u64,
    pub landscape: LandscapeSpec,
    pub policy: PolicyConfig,
}

impl RunConfig {
    pub fn new(policy_kind: PolicyKind, steps: u32, seed: u64, landscape: LandscapeSpec) -> Self {
        RunConfig { policy_kind, steps, seed, landscape, policy: PolicyConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        self.landscape.validate()?;
        self.policy.validate()
    }
}

/// The evaluated starting configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootInfo {
    pub genome: Genome,
    pub metrics: Metrics,
    pub description: String,
}

impl RootInfo {
    pub fn evaluate(landscape: &LandscapeSpec, seed: u64) -> Result<Self> {
        let genome = landscape.baseline();
        match evaluate(&genome, landscape, &mut stream(seed, 0, Purpose::Evaluate))? {
            Evaluation::Success(metrics) => Ok(RootInfo { genome, metrics, description: "baseline".into() }),
            Evaluation::Crash(reason) => {
                Err(Error::Config(alloc::format!("baseline configuration crashes: {reason}")))
            }
        }
    }
}

pub fn root_node(root: &RootInfo) -> EliteNode<Genome> {
    EliteNode::new(
        NodeId::ROOT,
        root.genome.clone(),
        root.metrics,
        root.description.clone(),
        MutationCategory::Other,
        None,
        None,
        0,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub root: RootInfo,
    pub records: Vec<ExperimentRecord<Genome>>,
}

/// Drives one run step by step. The same `propose` is used to generate new
/// records and to recompute them during replay.
#[derive(Debug, Clone)]
pub struct Engine {
    config: RunConfig,
    root: RootInfo,
    state: SearchState<Genome>,
}

impl Engine {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let root = RootInfo::evaluate(&config.landscape, config.seed)?;
        Engine::with_root(config, root)
    }

    pub fn with_root(config: RunConfig, root: RootInfo) -> Result<Self> {
        config.validate()?;
        root.genome.validate(config.landscape.schema())?;
        let capacity = match config.policy_kind {
            PolicyKind::Hillclimb => 1,
            PolicyKind::GearFixed => config.policy.capacity,
        };
        let state = SearchState::new(root_node(&root), capacity)?;
        Ok(Engine { config, root, state })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn root(&self) -> &RootInfo {
        &self.root
    }

    pub fn state(&self) -> &SearchState<Genome> {
        &self.state
    }

    pub fn next_step(&self) -> Step {
        self.state.next_step()
    }

    pub fn is_done(&self) -> bool {
        self.state.next_step() > self.config.steps
    }

    /// The record the policy produces for the next step.
    pub fn propose(&self) -> Result<ExperimentRecord<Genome>> {
        match self.config.policy_kind {
            PolicyKind::GearFixed => self.propose_gear(),
            PolicyKind::Hillclimb => self.propose_hillclimb(),
        }
    }

    /// Folds an externally supplied record (e.g. from a log) into the state.
    pub fn apply(&mut self, record: ExperimentRecord<Genome>) -> Result<()> {
        self.state.apply(record)
    }

    pub fn step(&mut self) -> Result<&ExperimentRecord<Genome>> {
        let record = self.propose()?;
        self.state.apply(record)?;
        Ok(self.state.log().last().expect("record just applied"))
    }

    pub fn into_log(self) -> RunLog {
        RunLog { root: self.root, records: self.state.log().to_vec() }
    }

    fn propose_gear(&self) -> Result<ExperimentRecord<Genome>> {
        let step = self.state.next_step();
        let schema = self.config.landscape.schema();
        let frontier = self.state.frontier();
        let plan = plan_step(&self.state, &self.config.policy)?;
        let p1 = frontier.get(plan.parent1)?;

        let mut spawn = stream(self.config.seed, step, Purpose::Spawn);
        let (child, knob) = match plan.parent2 {
            Some(p2) => crossover_genome(&p1.artifact, &frontier.get(p2)?.artifact, &mut spawn)?,
            None => mutate_genome(&p1.artifact, schema, &mut spawn)?,
        };
        let description = describe_change(&p1.artifact, &child, schema)?;
        let category = schema[knob].group;
        let evaluation =
            evaluate(&child, &self.config.landscape, &mut stream(self.config.seed, step, Purpose::Evaluate))?;

        let (outcome, promotion) = match evaluation {
            Evaluation::Crash(reason) => {
                (Outcome::Crash { reason }, PromotionDecision::Discard { reason: DiscardReason::Crashed })
            }
            Evaluation::Success(metrics) => {
                let promotion =
                    decide_child_promotion(&child, &metrics, &description, frontier, &self.config.policy);
                (Outcome::Success { metrics, description, category }, promotion)
            }
        };
        Ok(finish_record(step, plan.operator, p1, plan.parent2, child, outcome, promotion))
    }

    fn propose_hillclimb(&self) -> Result<ExperimentRecord<Genome>> {
        let step = self.state.next_step();
        let incumbent = self.state.frontier().members().first().ok_or(Error::EmptyFrontier)?;
        let result = hillclimb_step(
            &(incumbent.artifact.clone(), incumbent.metrics),
            &self.config.landscape,
            &mut stream(self.config.seed, step, Purpose::Spawn),
            &mut stream(self.config.seed, step, Purpose::Evaluate),
        )?;
        let schema = self.config.landscape.schema();
        let (outcome, promotion) = match result.evaluation {
            Evaluation::Crash(reason) => {
                (Outcome::Crash { reason }, PromotionDecision::Discard { reason: DiscardReason::Crashed })
            }
            Evaluation::Success(metrics) => {
                let promotion = if result.accepted {
                    PromotionDecision::NewBest { replaced: incumbent.id }
                } else {
                    PromotionDecision::Discard { reason: DiscardReason::BelowThresholds }
                };
                let description = describe_change(&incumbent.artifact, &result.child, schema)?;
                let category = schema[result.changed_knob].group;
                (Outcome::Success { metrics, description, category }, promotion)
            }
        };
        Ok(finish_record(step, OperatorKind::Mutation, incumbent, None, result.child, outcome, promotion))
    }
}

fn finish_record(
    step: Step,
    operator: OperatorKind,
    p1: &EliteNode<Genome>,
    parent2: Option<NodeId>,
    child: Genome,
    outcome: Outcome,
    promotion: PromotionDecision,
) -> ExperimentRecord<Genome> {
    let reflection = reflect(operator, p1, parent2, &outcome, &promotion);
    let child_id = (promotion.is_promotion() && !outcome.is_crash()).then_some(NodeId::for_step(step));
    ExperimentRecord {
        step,
        operator,
        parent1: p1.id,
        parent2,
        artifact: child,
        outcome,
        promotion,
        reflection,
        child_id,
    }
}

fn reflect(
    operator: OperatorKind,
    p1: &EliteNode<Genome>,
    parent2: Option<NodeId>,
    outcome: &Outcome,
    promotion: &PromotionDecision,
) -> String {
    let parents = match parent2 {
        Some(p2) => alloc::format!("{} x {}", p1.id, p2),
        None => alloc::format!("{}", p1.id),
    };
    match outcome {
        Outcome::Crash { reason } => alloc::format!(
            "{operator} from {parents}: crashed ({reason}); revisit only under different conditions"
        ),
        Outcome::Success { metrics, .. } => {
            let gain = improvement(p1.metrics.bpb, metrics.bpb).unwrap_or(0.0);
            let decision = match promotion.replaced() {
                Some(r) => alloc::format!("{} replacing {r}", promotion.label()),
                None => String::from(promotion.label()),
            };
            let revisit = if promotion.is_promotion() {
                "build on it"
            } else if gain > 0.0 {
                "revisit on a different base"
            } else {
                "not worth revisiting"
            };
            alloc::format!(
                "{operator} from {parents}: parent {:.5} -> child {:.5} (gain {:+.5}); {decision}; {revisit}",
                p1.metrics.bpb,
                metrics.bpb,
                gain
            )
        }
    }
}

/// Runs `config.steps` experiments from the evaluated baseline.
pub fn run_search(config: RunConfig) -> Result<RunLog> {
    let mut engine = Engine::new(config)?;
    while !engine.is_done() {
        engine.step()?;
    }
    Ok(engine.into_log())
}
