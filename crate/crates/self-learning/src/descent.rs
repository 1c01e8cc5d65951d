use hardware_model::{phase_to_voltage, voltage_to_phase, ThermalShifterModel};
use instruments::Bench;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::trace::{StopReason, TraceRecord, TrainStage, TrainingTrace};
use crate::SelfLearnError;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn wrap(theta: f64) -> f64 {
    let w = theta.rem_euclid(TWO_PI);
    if w >= TWO_PI {
        0.0
    } else {
        w
    }
}

/// What to do when a trial step does not improve the cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcceptanceRule {
    /// Apply the opposite step without re-measuring, exactly as the chip was
    /// originally trained. Simple, but the cost may transiently decrease.
    PaperFaithful,
    /// Measure the opposite step too and keep the best of the three
    /// candidate settings. Costs up to twice the evaluations, never gets
    /// worse.
    Greedy,
}

/// Step sizes, budgets and stopping rules of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSchedule {
    /// Step of the first (rough) stage, radians.
    pub coarse_step: f64,
    /// Step of the second (polish) stage, radians.
    pub fine_step: f64,
    /// Sweep budget of the coarse stage.
    pub coarse_sweeps: usize,
    /// Sweep budget of the fine stage.
    pub fine_sweeps: usize,
    /// Stop as soon as the cost reaches this value.
    pub target_cf: Option<f64>,
    /// A stage ends early once a full sweep improves the cost by less than
    /// this.
    pub convergence_tol: f64,
    pub acceptance_rule: AcceptanceRule,
    /// Shifter indices excluded from training (gates, fixed attenuators,
    /// scrambler cores).
    pub frozen: Vec<usize>,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        Self {
            coarse_step: TWO_PI / 20.0,
            fine_step: TWO_PI / 100.0,
            coarse_sweeps: 40,
            fine_sweeps: 60,
            target_cf: None,
            convergence_tol: 1e-4,
            acceptance_rule: AcceptanceRule::Greedy,
            frozen: Vec::new(),
        }
    }
}

impl TrainSchedule {
    pub fn validate(&self) -> Result<(), SelfLearnError> {
        if !(self.coarse_step > 0.0 && self.fine_step > 0.0) {
            return Err(SelfLearnError::BadSchedule("steps must be positive"));
        }
        if self.coarse_step <= self.fine_step {
            return Err(SelfLearnError::BadSchedule(
                "coarse step must exceed fine step",
            ));
        }
        if self.convergence_tol < 0.0 {
            return Err(SelfLearnError::BadSchedule(
                "convergence tolerance must be >= 0",
            ));
        }
        Ok(())
    }
}

/// How the trainable phases start.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseInit {
    /// Uniform random phases, the standard cold start.
    Random { seed: u64 },
    /// Keep whatever the bench voltages currently encode (warm start).
    FromCurrent,
    /// Explicit phases for selected shifters on top of the current state.
    Explicit(Vec<(usize, f64)>),
}

/// Passed to the sweep observer after every completed sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepEvent {
    pub stage: TrainStage,
    /// 1-based global sweep number.
    pub sweep: usize,
    pub cf: f64,
    pub evaluations: usize,
}

struct Driver<'a, B: Bench + ?Sized> {
    bench: &'a mut B,
    thermal: &'a ThermalShifterModel,
    phases: Vec<f64>,
    records: Vec<TraceRecord>,
    sweep_cf: Vec<f64>,
    cf: f64,
    evaluations: usize,
    iteration: usize,
    sweep: usize,
}

impl<'a, B: Bench + ?Sized> Driver<'a, B> {
    fn apply_phases(&mut self) -> Result<(), SelfLearnError> {
        let volts: Result<Vec<f64>, _> = self
            .phases
            .iter()
            .map(|&ph| phase_to_voltage(ph, self.thermal))
            .collect();
        let volts = volts.map_err(|e| SelfLearnError::Hardware(e.to_string()))?;
        self.bench.set_voltages(&volts)?;
        Ok(())
    }

    fn set_phase(&mut self, shifter: usize, phase: f64) -> Result<(), SelfLearnError> {
        self.phases[shifter] = wrap(phase);
        self.apply_phases().map_err(|e| match e {
            SelfLearnError::Bench(instruments::BenchError::DriveLimit { max_mv, .. }) => {
                SelfLearnError::Bench(instruments::BenchError::DriveLimit {
                    indices: vec![shifter],
                    max_mv,
                })
            }
            other => other,
        })
    }
}

/// Trains the chip by per-shifter coordinate steps through the bench.
///
/// The run starts from `init`, then sweeps every trainable shifter in index
/// order: try `+step`; keep it when the measured cost does not decrease,
/// otherwise fall back per the acceptance rule. Phases wrap modulo a full
/// turn and reach the chip through the heater calibration as voltages. After
/// the coarse stage converges or exhausts its budget the fine stage repeats
/// the process with the smaller step.
///
/// `evaluate` is the cost function; it may drive the bench (select inputs,
/// read instruments) but must leave the voltages alone. `on_sweep` runs
/// after every completed sweep, for checkpointing.
pub fn coordinate_descent<B, F, O>(
    bench: &mut B,
    thermal: &ThermalShifterModel,
    mut evaluate: F,
    schedule: &TrainSchedule,
    init: PhaseInit,
    mut on_sweep: O,
) -> Result<TrainingTrace, SelfLearnError>
where
    B: Bench + ?Sized,
    F: FnMut(&mut B) -> Result<f64, SelfLearnError>,
    O: FnMut(&mut B, &SweepEvent) -> Result<(), SelfLearnError>,
{
    schedule.validate()?;
    let total = bench.shifter_count();
    let trainable: Vec<usize> = (0..total)
        .filter(|i| !schedule.frozen.contains(i))
        .collect();
    if trainable.is_empty() {
        return Err(SelfLearnError::BadSchedule("no trainable shifters left"));
    }

    // current phases as encoded by the bench voltages
    let mut phases: Vec<f64> = bench
        .voltages()
        .iter()
        .map(|&v| voltage_to_phase(v, thermal))
        .collect::<Result<_, _>>()
        .map_err(|e| SelfLearnError::Hardware(e.to_string()))?;

    let mut init_seed = None;
    match &init {
        PhaseInit::Random { seed } => {
            init_seed = Some(*seed);
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for &i in &trainable {
                phases[i] = rng.gen_range(0.0..TWO_PI);
            }
        }
        PhaseInit::FromCurrent => {}
        PhaseInit::Explicit(assignments) => {
            for &(i, ph) in assignments {
                if i >= total {
                    return Err(SelfLearnError::BadSchedule("explicit init out of range"));
                }
                phases[i] = wrap(ph);
            }
        }
    }

    let mut d = Driver {
        bench,
        thermal,
        phases,
        records: Vec::new(),
        sweep_cf: Vec::new(),
        cf: 0.0,
        evaluations: 0,
        iteration: 0,
        sweep: 0,
    };

    let finish = |d: Driver<B>, stop: StopReason| {
        let final_voltages_mv = d.bench.voltages().to_vec();
        Ok(TrainingTrace {
            records: d.records,
            sweep_cf: d.sweep_cf,
            final_cf: d.cf,
            final_voltages_mv,
            evaluations: d.evaluations,
            sweeps_completed: d.sweep,
            stop,
            init_seed,
        })
    };

    // initial evaluation
    if let Err(e) = d.apply_phases() {
        return finish(d, StopReason::Aborted { error: e.to_string() });
    }
    match evaluate(d.bench) {
        Ok(cf0) => {
            d.cf = cf0;
            d.evaluations = 1;
        }
        Err(e) => {
            return finish(d, StopReason::Aborted { error: e.to_string() });
        }
    }
    d.records.push(TraceRecord {
        iteration: 0,
        sweep: 0,
        stage: TrainStage::Coarse,
        shifter: None,
        cf_before: d.cf,
        cf_after: d.cf,
        accepted: true,
        evaluations: d.evaluations,
    });
    if schedule.target_cf.is_some_and(|t| d.cf >= t) {
        return finish(d, StopReason::TargetReached);
    }

    let stages = [
        (TrainStage::Coarse, schedule.coarse_step, schedule.coarse_sweeps),
        (TrainStage::Fine, schedule.fine_step, schedule.fine_sweeps),
    ];
    let mut last_stage_converged = false;

    for (stage, step, budget) in stages {
        last_stage_converged = false;
        for _ in 0..budget {
            d.sweep += 1;
            let cf_at_start = d.cf;
            for &i in &trainable {
                d.iteration += 1;
                let cf_before = d.cf;
                let old = d.phases[i];

                if let Err(e) = d.set_phase(i, old + step) {
                    return finish(d, StopReason::Aborted { error: e.to_string() });
                }
                let cf_plus = match evaluate(d.bench) {
                    Ok(v) => v,
                    Err(e) => {
                        return finish(d, StopReason::Aborted { error: e.to_string() })
                    }
                };
                d.evaluations += 1;

                let accepted = if cf_plus >= d.cf {
                    d.cf = cf_plus;
                    true
                } else {
                    match schedule.acceptance_rule {
                        AcceptanceRule::PaperFaithful => {
                            // step back past the start without re-measuring;
                            // the stored cost goes stale until the next
                            // evaluation
                            if let Err(e) = d.set_phase(i, old - step) {
                                return finish(d, StopReason::Aborted { error: e.to_string() });
                            }
                            false
                        }
                        AcceptanceRule::Greedy => {
                            if let Err(e) = d.set_phase(i, old - step) {
                                return finish(d, StopReason::Aborted { error: e.to_string() });
                            }
                            let cf_minus = match evaluate(d.bench) {
                                Ok(v) => v,
                                Err(e) => {
                                    return finish(
                                        d,
                                        StopReason::Aborted { error: e.to_string() },
                                    )
                                }
                            };
                            d.evaluations += 1;
                            if cf_minus >= d.cf {
                                d.cf = cf_minus;
                                true
                            } else {
                                if let Err(e) = d.set_phase(i, old) {
                                    return finish(
                                        d,
                                        StopReason::Aborted { error: e.to_string() },
                                    );
                                }
                                false
                            }
                        }
                    }
                };

                d.records.push(TraceRecord {
                    iteration: d.iteration,
                    sweep: d.sweep,
                    stage,
                    shifter: Some(i),
                    cf_before,
                    cf_after: d.cf,
                    accepted,
                    evaluations: d.evaluations,
                });

                if schedule.target_cf.is_some_and(|t| d.cf >= t) {
                    d.sweep_cf.push(d.cf);
                    let ev = SweepEvent {
                        stage,
                        sweep: d.sweep,
                        cf: d.cf,
                        evaluations: d.evaluations,
                    };
                    if let Err(e) = on_sweep(d.bench, &ev) {
                        return finish(d, StopReason::Aborted { error: e.to_string() });
                    }
                    return finish(d, StopReason::TargetReached);
                }
            }
            d.sweep_cf.push(d.cf);
            let ev = SweepEvent {
                stage,
                sweep: d.sweep,
                cf: d.cf,
                evaluations: d.evaluations,
            };
            if let Err(e) = on_sweep(d.bench, &ev) {
                return finish(d, StopReason::Aborted { error: e.to_string() });
            }
            if d.cf - cf_at_start < schedule.convergence_tol {
                last_stage_converged = true;
                break;
            }
        }
    }

    let stop = if last_stage_converged {
        StopReason::Converged
    } else {
        StopReason::BudgetExhausted
    };
    finish(d, stop)
}

#[cfg(test)]
mod tests {
    use super::*;
    use instruments::{BenchError, InputSelect, MeasurementFrame};

    /// Single-shifter bench whose only observable is its own voltage.
    struct MockBench {
        voltages: Vec<f64>,
        gates: Vec<bool>,
    }

    impl MockBench {
        fn new(channels: usize) -> Self {
            Self {
                voltages: vec![0.0; channels],
                gates: vec![true; 1],
            }
        }
    }

    impl Bench for MockBench {
        fn shifter_count(&self) -> usize {
            self.voltages.len()
        }
        fn n_ports(&self) -> usize {
            1
        }
        fn set_voltages(&mut self, v: &[f64]) -> Result<(), BenchError> {
            if v.len() != self.voltages.len() {
                return Err(BenchError::ChannelCount {
                    expected: self.voltages.len(),
                    got: v.len(),
                });
            }
            self.voltages = v.to_vec();
            Ok(())
        }
        fn voltages(&self) -> &[f64] {
            &self.voltages
        }
        fn select_input(&mut self, _: InputSelect) -> Result<(), BenchError> {
            Ok(())
        }
        fn input_gates(&self) -> &[bool] {
            &self.gates
        }
        fn read_powers(&mut self) -> Result<MeasurementFrame, BenchError> {
            Err(BenchError::Model("mock has no detectors".into()))
        }
        fn read_spectrum(
            &mut self,
            _: usize,
            _: &[f64],
        ) -> Result<MeasurementFrame, BenchError> {
            Err(BenchError::Model("mock has no spectrum analyzer".into()))
        }
        fn read_eye(
            &mut self,
            _: usize,
            _: &signal_lab::NrzConfig,
            _: usize,
        ) -> Result<MeasurementFrame, BenchError> {
            Err(BenchError::Model("mock has no scope".into()))
        }
    }

    fn phase_of(bench: &MockBench, thermal: &ThermalShifterModel, i: usize) -> f64 {
        voltage_to_phase(bench.voltages[i], thermal).unwrap()
    }

    #[test]
    fn scalar_problem_converges_to_fine_step() {
        let thermal = ThermalShifterModel::default();
        let theta_star = 2.4;
        for seed in 0..5 {
            let mut bench = MockBench::new(1);
            let schedule = TrainSchedule {
                coarse_sweeps: 10,
                fine_sweeps: 10,
                ..TrainSchedule::default()
            };
            let trace = coordinate_descent(
                &mut bench,
                &thermal,
                |b| {
                    let th = voltage_to_phase(b.voltages()[0], &thermal).unwrap();
                    Ok(((th - theta_star) / 2.0).cos().powi(2))
                },
                &schedule,
                PhaseInit::Random { seed },
                |_, _| Ok(()),
            )
            .unwrap();
            assert!(trace.converged(), "seed {seed}: {:?}", trace.stop);
            let th = phase_of(&bench, &thermal, 0);
            let dist = (th - theta_star).abs().min(TWO_PI - (th - theta_star).abs());
            assert!(
                dist < TWO_PI / 100.0,
                "seed {seed}: |theta - target| = {dist}"
            );
        }
    }

    #[test]
    fn greedy_cost_is_non_decreasing() {
        let thermal = ThermalShifterModel::default();
        let mut bench = MockBench::new(3);
        // a lumpy multi-parameter landscape
        let trace = coordinate_descent(
            &mut bench,
            &thermal,
            |b| {
                let t: Vec<f64> = b
                    .voltages()
                    .iter()
                    .map(|&v| voltage_to_phase(v, &thermal).unwrap())
                    .collect();
                Ok(
                    (0.6 + 0.4 * (t[0] - 1.0).cos()) * (0.7 + 0.3 * (2.0 * t[1]).sin())
                        + 0.1 * (t[2] - 4.0).cos(),
                )
            },
            &TrainSchedule {
                coarse_sweeps: 6,
                fine_sweeps: 6,
                ..TrainSchedule::default()
            },
            PhaseInit::Random { seed: 7 },
            |_, _| Ok(()),
        )
        .unwrap();
        for r in &trace.records {
            assert!(r.cf_after >= r.cf_before - 1e-15);
        }
        for w in trace.sweep_cf.windows(2) {
            assert!(w[1] >= w[0] - 1e-15);
        }
    }

    #[test]
    fn evaluation_budget_per_sweep() {
        let thermal = ThermalShifterModel::default();
        for (rule, factor) in [(AcceptanceRule::PaperFaithful, 1), (AcceptanceRule::Greedy, 2)] {
            let mut bench = MockBench::new(4);
            let schedule = TrainSchedule {
                coarse_sweeps: 3,
                fine_sweeps: 0,
                convergence_tol: 0.0,
                acceptance_rule: rule,
                frozen: vec![1],
                ..TrainSchedule::default()
            };
            let trace = coordinate_descent(
                &mut bench,
                &thermal,
                |b| {
                    let t0 = voltage_to_phase(b.voltages()[0], &thermal).unwrap();
                    Ok((t0 - 3.0).cos())
                },
                &schedule,
                PhaseInit::Random { seed: 1 },
                |_, _| Ok(()),
            )
            .unwrap();
            let trainable = 3; // 4 channels minus 1 frozen
            let per_sweep_max = factor * trainable;
            // first record is the init evaluation
            let spent = trace.evaluations - 1;
            assert!(
                spent <= 3 * per_sweep_max,
                "{rule:?}: spent {spent} > {}",
                3 * per_sweep_max
            );
            if rule == AcceptanceRule::PaperFaithful {
                assert_eq!(spent, 3 * trainable);
            }
            // frozen shifter never moved
            assert_eq!(bench.voltages()[1], 0.0);
        }
    }

    #[test]
    fn paper_rule_steps_back_without_reevaluating() {
        let thermal = ThermalShifterModel::default();
        let mut bench = MockBench::new(1);
        // cost that always punishes the +step so the fallback fires
        let schedule = TrainSchedule {
            coarse_sweeps: 1,
            fine_sweeps: 0,
            acceptance_rule: AcceptanceRule::PaperFaithful,
            convergence_tol: 0.0,
            ..TrainSchedule::default()
        };
        let start = 3.0;
        let trace = coordinate_descent(
            &mut bench,
            &thermal,
            |b| {
                let th = voltage_to_phase(b.voltages()[0], &thermal).unwrap();
                Ok(-((th - start).abs()))
            },
            &schedule,
            PhaseInit::Explicit(vec![(0, start)]),
            |_, _| Ok(()),
        )
        .unwrap();
        assert_eq!(trace.evaluations, 2); // init + one trial
        let th = phase_of(&bench, &thermal, 0);
        let expect = wrap(start - TWO_PI / 20.0);
        assert!((th - expect).abs() < 1e-9, "theta = {th}, expect {expect}");
        assert!(!trace.records[1].accepted);
    }

    #[test]
    fn target_stops_early() {
        let thermal = ThermalShifterModel::default();
        let mut bench = MockBench::new(2);
        let trace = coordinate_descent(
            &mut bench,
            &thermal,
            |_| Ok(1.0),
            &TrainSchedule {
                target_cf: Some(0.5),
                ..TrainSchedule::default()
            },
            PhaseInit::Random { seed: 0 },
            |_, _| Ok(()),
        )
        .unwrap();
        assert_eq!(trace.stop, StopReason::TargetReached);
        assert_eq!(trace.evaluations, 1);
    }

    #[test]
    fn evaluator_failure_aborts_with_partial_trace() {
        let thermal = ThermalShifterModel::default();
        let mut bench = MockBench::new(2);
        let mut calls = 0;
        let trace = coordinate_descent(
            &mut bench,
            &thermal,
            |_| {
                calls += 1;
                if calls > 3 {
                    Err(SelfLearnError::Signal("detector unplugged".into()))
                } else {
                    Ok(0.1 * calls as f64)
                }
            },
            &TrainSchedule::default(),
            PhaseInit::Random { seed: 2 },
            |_, _| Ok(()),
        )
        .unwrap();
        assert!(matches!(trace.stop, StopReason::Aborted { .. }));
        assert_eq!(trace.evaluations, 3);
        assert!(!trace.records.is_empty());
    }

    #[test]
    fn explicit_init_keeps_other_channels() {
        let thermal = ThermalShifterModel::default();
        let mut bench = MockBench::new(3);
        let preset = phase_to_voltage(1.5, &thermal).unwrap();
        bench.set_voltages(&[preset, 0.0, 0.0]).unwrap();
        let trace = coordinate_descent(
            &mut bench,
            &thermal,
            |_| Ok(1.0),
            &TrainSchedule {
                target_cf: Some(0.9),
                frozen: vec![0],
                ..TrainSchedule::default()
            },
            PhaseInit::Explicit(vec![(1, 2.0)]),
            |_, _| Ok(()),
        )
        .unwrap();
        assert_eq!(trace.stop, StopReason::TargetReached);
        assert!((phase_of(&bench, &thermal, 0) - 1.5).abs() < 1e-9);
        assert!((phase_of(&bench, &thermal, 1) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn all_frozen_is_rejected() {
        let thermal = ThermalShifterModel::default();
        let mut bench = MockBench::new(2);
        let err = coordinate_descent(
            &mut bench,
            &thermal,
            |_| Ok(0.0),
            &TrainSchedule {
                frozen: vec![0, 1],
                ..TrainSchedule::default()
            },
            PhaseInit::FromCurrent,
            |_, _| Ok(()),
        )
        .unwrap_err();
        assert!(matches!(err, SelfLearnError::BadSchedule(_)));
    }
}
