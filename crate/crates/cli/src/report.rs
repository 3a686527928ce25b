//! Shot and variant accounting over a finished run.

use dpvqd_core::vqd::TrainRecord;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubIterationShots {
    pub step: usize,
    pub slice: usize,
    pub cuts: usize,
    pub shots: u64,
    pub variants_executed: u64,
    /// Variants a cache-free optimizer would have executed.
    pub variants_naive: u64,
    pub variants_per_fragment: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepShots {
    pub step: usize,
    pub shots: u64,
    pub shots_cumulative: u64,
}

/// Training cost of a run, per Trotter step and per sub-iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotReport {
    pub total_shots: u64,
    pub variants_executed: u64,
    pub variants_naive: u64,
    /// `variants_naive / variants_executed`.
    pub reuse_factor: Option<f64>,
    /// The same ratio restricted to single-parameter updates, leaving out
    /// from-scratch evaluations that no cache can shorten.
    pub update_reuse_factor: Option<f64>,
    pub steps: Vec<StepShots>,
    pub sub_iterations: Vec<SubIterationShots>,
}

pub fn shot_report(records: &[TrainRecord]) -> ShotReport {
    let sub_iterations: Vec<SubIterationShots> = records
        .iter()
        .map(|r| SubIterationShots {
            step: r.step,
            slice: r.slice,
            cuts: r.cuts,
            shots: r.shots_used,
            variants_executed: r.variants_executed,
            variants_naive: r.variants_naive,
            variants_per_fragment: r.variants_per_fragment.clone(),
        })
        .collect();
    let mut steps: Vec<StepShots> = Vec::new();
    let mut cumulative = 0;
    for r in records {
        cumulative += r.shots_used;
        match steps.last_mut() {
            Some(s) if s.step == r.step => {
                s.shots += r.shots_used;
                s.shots_cumulative = cumulative;
            }
            _ => steps.push(StepShots {
                step: r.step,
                shots: r.shots_used,
                shots_cumulative: cumulative,
            }),
        }
    }
    let variants_executed: u64 = records.iter().map(|r| r.variants_executed).sum();
    let variants_naive: u64 = records.iter().map(|r| r.variants_naive).sum();
    let update_executed: u64 = records.iter().map(|r| r.update_variants_executed).sum();
    let update_naive: u64 = records.iter().map(|r| r.update_variants_naive).sum();
    ShotReport {
        total_shots: cumulative,
        variants_executed,
        variants_naive,
        reuse_factor: (variants_executed > 0).then(|| variants_naive as f64 / variants_executed as f64),
        update_reuse_factor: (update_executed > 0).then(|| update_naive as f64 / update_executed as f64),
        steps,
        sub_iterations,
    }
}
