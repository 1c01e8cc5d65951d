use serde::{Deserialize, Serialize};

/// Which step-size stage the trainer is in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrainStage {
    Coarse,
    Fine,
}

impl std::fmt::Display for TrainStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrainStage::Coarse => write!(f, "coarse"),
            TrainStage::Fine => write!(f, "fine"),
        }
    }
}

/// Why the trainer stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StopReason {
    /// Cost reached the configured target.
    TargetReached,
    /// Final stage made less progress per sweep than the tolerance.
    Converged,
    /// All sweep budgets spent.
    BudgetExhausted,
    /// The cost evaluator failed; the trace holds everything up to the
    /// failure.
    Aborted { error: String },
}

/// One parameter update attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Running count of update attempts (1-based; 0 is the init evaluation).
    pub iteration: usize,
    /// Full-sweep counter at the time of the update (0 during init).
    pub sweep: usize,
    pub stage: TrainStage,
    /// Shifter index perturbed; `None` for the initial evaluation.
    pub shifter: Option<usize>,
    pub cf_before: f64,
    pub cf_after: f64,
    pub accepted: bool,
    /// Cumulative cost evaluations after this record.
    pub evaluations: usize,
}

/// Complete record of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub records: Vec<TraceRecord>,
    /// Cost after each completed sweep, in order.
    pub sweep_cf: Vec<f64>,
    pub final_cf: f64,
    /// Voltage vector the run ended on, in mV.
    pub final_voltages_mv: Vec<f64>,
    pub evaluations: usize,
    pub sweeps_completed: usize,
    pub stop: StopReason,
    /// Seed used for the random initialization, when one was drawn.
    pub init_seed: Option<u64>,
}

impl TrainingTrace {
    pub fn converged(&self) -> bool {
        matches!(self.stop, StopReason::TargetReached | StopReason::Converged)
    }

    /// CSV with one row per update attempt:
    /// `iteration,shifter_index,cf_before,cf_after,accepted,evaluations`.
    /// The initial evaluation appears as iteration 0 with an empty shifter
    /// field.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,shifter_index,cf_before,cf_after,accepted,evaluations\n");
        for r in &self.records {
            let shifter = r
                .shifter
                .map(|s| s.to_string())
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{:.12},{:.12},{},{}\n",
                r.iteration, shifter, r.cf_before, r.cf_after, r.accepted, r.evaluations
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_rows() {
        let trace = TrainingTrace {
            records: vec![
                TraceRecord {
                    iteration: 0,
                    sweep: 0,
                    stage: TrainStage::Coarse,
                    shifter: None,
                    cf_before: 0.25,
                    cf_after: 0.25,
                    accepted: true,
                    evaluations: 1,
                },
                TraceRecord {
                    iteration: 1,
                    sweep: 1,
                    stage: TrainStage::Coarse,
                    shifter: Some(7),
                    cf_before: 0.25,
                    cf_after: 0.5,
                    accepted: true,
                    evaluations: 2,
                },
            ],
            sweep_cf: vec![0.5],
            final_cf: 0.5,
            final_voltages_mv: vec![0.0; 4],
            evaluations: 2,
            sweeps_completed: 1,
            stop: StopReason::BudgetExhausted,
            init_seed: Some(3),
        };
        let csv = trace.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("iteration,"));
        assert!(lines[1].starts_with("0,,"));
        assert!(lines[2].starts_with("1,7,"));
    }
}
