//! Running-best series and per-quarter improvement summary.

use std::fmt::Write as _;

use gear_core::harness::{root_node, Genome};
use gear_core::model::{OperatorKind, PromotionDecision, Step};
use gear_core::state::SearchState;

use crate::error::{GearError, Result};
use crate::logfile::LoadedLog;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub step: Step,
    /// `None` for a crashed experiment.
    pub bpb: Option<f64>,
    /// Best experiment so far; the baseline does not count.
    pub running_best: Option<f64>,
    pub frontier_size: usize,
    pub operator: OperatorKind,
    pub promotion: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quarter {
    pub first_step: Step,
    pub last_step: Step,
    /// Drop in running best over the block, in milli-bpb.
    pub improvement_mbpb: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportSeries {
    pub rows: Vec<ReportRow>,
}

impl ReportSeries {
    pub fn from_log(log: &LoadedLog) -> Self {
        let mut best: Option<f64> = None;
        let mut size = 1;
        let rows = log
            .records
            .iter()
            .map(|r| {
                let bpb = r.outcome.metrics().map(|m| m.bpb);
                if let Some(b) = bpb {
                    best = Some(best.map_or(b, |x| x.min(b)));
                }
                if matches!(r.promotion, PromotionDecision::FillEmpty { .. }) {
                    size += 1;
                }
                ReportRow {
                    step: r.step,
                    bpb,
                    running_best: best,
                    frontier_size: size.min(log.header.capacity),
                    operator: r.operator,
                    promotion: r.promotion.label(),
                }
            })
            .collect();
        ReportSeries { rows }
    }

    pub fn running_best(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.running_best).collect()
    }

    /// Four equal blocks of steps. The first block is measured from the first
    /// running best, so the blocks sum to first best minus final best.
    pub fn quarters(&self) -> Vec<Quarter> {
        let n = self.rows.len();
        let first = self.rows.iter().find_map(|r| r.running_best);
        let mut reference = first;
        (0..4)
            .filter_map(|q| {
                let (lo, hi) = (q * n / 4, (q + 1) * n / 4);
                if lo == hi {
                    return None;
                }
                let end = self.rows[hi - 1].running_best;
                let improvement = match (reference, end) {
                    (Some(a), Some(b)) => (a - b) * 1000.0,
                    _ => 0.0,
                };
                reference = end.or(reference);
                Some(Quarter {
                    first_step: self.rows[lo].step,
                    last_step: self.rows[hi - 1].step,
                    improvement_mbpb: improvement,
                })
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,bpb,running_best,frontier_size,operator,promotion\n");
        for r in &self.rows {
            let bpb = r.bpb.map_or_else(|| "crash".to_owned(), |b| b.to_string());
            let best = r.running_best.map_or_else(String::new, |b| b.to_string());
            let _ =
                writeln!(out, "{},{bpb},{best},{},{},{}", r.step, r.frontier_size, r.operator, r.promotion);
        }
        out
    }
}

pub fn quarters_csv(quarters: &[Quarter]) -> String {
    let mut out = String::from("quarter,first_step,last_step,improvement_mbpb\n");
    for (i, q) in quarters.iter().enumerate() {
        let _ = writeln!(out, "Q{},{},{},{:.4}", i + 1, q.first_step, q.last_step, q.improvement_mbpb);
    }
    out
}

/// Search state after the first `step` records (0 is the baseline alone).
pub fn state_at(log: &LoadedLog, step: Step) -> Result<SearchState<Genome>> {
    if step as usize > log.records.len() {
        return Err(GearError::Usage(format!(
            "log has {} records, cannot show step {step}",
            log.records.len()
        )));
    }
    let mut state = SearchState::new(root_node(&log.header.root), log.header.capacity)?;
    for r in &log.records[..step as usize] {
        state.apply(r.clone()).map_err(|e| GearError::Integrity(format!("step {}: {e}", r.step)))?;
    }
    Ok(state)
}

/// Human-readable frontier listing with roles and parent statistics.
pub fn frontier_table(state: &SearchState<Genome>) -> String {
    let mut out = format!(
        "frontier after step {} ({}/{} members)\n",
        state.next_step() - 1,
        state.frontier().len(),
        state.frontier().capacity()
    );
    let _ = writeln!(
        out,
        "{:<6} {:<8} {:>9} {:>7} {:>7} {:>6} {:>9} {:>9}  description",
        "id", "role", "bpb", "vram", "params", "used", "gain", "last_used"
    );
    for m in state.frontier().members() {
        let last = m.last_used_step.map_or_else(|| "-".to_owned(), |s| s.to_string());
        let _ = writeln!(
            out,
            "{:<6} {:<8} {:>9.6} {:>7.2} {:>7.2} {:>6} {:>9.6} {:>9}  {}",
            m.id.to_string(),
            m.role.to_string(),
            m.metrics.bpb,
            m.metrics.vram,
            m.metrics.params,
            m.n_used,
            m.mean_child_gain,
            last,
            m.description
        );
    }
    out
}
