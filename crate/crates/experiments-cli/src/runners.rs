use hardware_model::{phase_to_voltage, voltage_to_phase};
use instruments::{Bench, InputSelect, SimulatedBench};
use mesh_core::{MeshTopology, Part, PhaseState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use self_learning::{
    cf_eye, cf_filter, cf_routing, coordinate_descent, BandSpec, PhaseInit, StopReason,
    TargetRouting, TrainingTrace,
};
use signal_lab::eye_opening_area;

use crate::config::{frozen_shifters, ExperimentConfig, ExperimentKind, InitMode, Part2State};
use crate::output::{state_json, OutputDir};
use crate::report::{band_below, crosstalk_spectrum, measure_crosstalk, CrosstalkReport};
use crate::RunError;

/// Exit disposition of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    /// Training met its stopping rule; exit code 0.
    Converged,
    /// Run finished but did not meet its goal; exit code 2.
    Flagged,
}

/// What a runner hands back to the caller.
#[derive(Debug)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub final_cf: Option<f64>,
    pub summary: String,
    pub trace: Option<TrainingTrace>,
    pub report: Option<CrosstalkReport>,
}

/// Dispatches one experiment.
pub fn run_experiment(
    kind: ExperimentKind,
    cfg: &ExperimentConfig,
) -> Result<RunOutcome, RunError> {
    if let Some(tag) = cfg.experiment {
        if tag != kind {
            return Err(RunError::Config(format!(
                "config is tagged '{tag}' but the '{kind}' command was invoked"
            )));
        }
    }
    cfg.validate()?;
    match kind {
        ExperimentKind::Switch => run_switch(cfg),
        ExperimentKind::Mimo => run_mimo(cfg),
        ExperimentKind::MimoEye => run_mimo_eye(cfg),
        ExperimentKind::Filter => run_filter(cfg),
        ExperimentKind::Sweep => run_spectrum_sweep(cfg),
        ExperimentKind::EyeSim => run_eye_sim(cfg),
    }
}

// ---- shared plumbing ----

fn new_bench(cfg: &ExperimentConfig) -> Result<SimulatedBench, RunError> {
    Ok(SimulatedBench::new(cfg.bench_config())?)
}

/// Puts the whole chip into its neutral state: both cores at identity,
/// attenuators open with zero external phase.
fn apply_neutral_state(bench: &mut SimulatedBench, cfg: &ExperimentConfig) -> Result<(), RunError> {
    let topo = MeshTopology::standard();
    let thermal = cfg.thermal();
    let state = PhaseState::identity(&topo);
    let volts: Result<Vec<f64>, _> = state
        .values()
        .iter()
        .map(|&ph| phase_to_voltage(ph, &thermal))
        .collect();
    bench.set_voltages(&volts.map_err(|e| RunError::Io(e.to_string()))?)?;
    Ok(())
}

fn prepare_core_a(bench: &mut SimulatedBench, cfg: &ExperimentConfig) -> Result<(), RunError> {
    match cfg.part2_state {
        Part2State::Identity => Ok(()),
        Part2State::Zero => {
            let topo = MeshTopology::standard();
            let zeros: Vec<(usize, f64)> =
                topo.index_range(Part::SuA).map(|i| (i, 0.0)).collect();
            bench.set_phases(&zeros)?;
            Ok(())
        }
        Part2State::Random => {
            bench.scramble_core_a(cfg.scramble_seed)?;
            Ok(())
        }
    }
}

/// Builds the trainer's starting point from the config.
fn phase_init(
    bench: &SimulatedBench,
    cfg: &ExperimentConfig,
    frozen: &[usize],
    seed: u64,
) -> Result<PhaseInit, RunError> {
    match cfg.init {
        InitMode::Random => Ok(PhaseInit::Random { seed }),
        InitMode::Current => {
            if cfg.init_jitter_rad > 0.0 {
                let thermal = cfg.thermal();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let assignments: Vec<(usize, f64)> = bench
                    .voltages()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !frozen.contains(i))
                    .map(|(i, &v)| {
                        let ph = voltage_to_phase(v, &thermal)
                            .map_err(|e| RunError::Io(e.to_string()))?;
                        let j = rng.gen_range(-cfg.init_jitter_rad..cfg.init_jitter_rad);
                        Ok((i, ph + j))
                    })
                    .collect::<Result<_, RunError>>()?;
                Ok(PhaseInit::Explicit(assignments))
            } else {
                Ok(PhaseInit::FromCurrent)
            }
        }
    }
}

fn stop_name(stop: &StopReason) -> String {
    match stop {
        StopReason::TargetReached => "target-reached".into(),
        StopReason::Converged => "converged".into(),
        StopReason::BudgetExhausted => "budget-exhausted".into(),
        StopReason::Aborted { error } => format!("aborted ({error})"),
    }
}

struct Summary {
    lines: Vec<String>,
}

impl Summary {
    fn new(kind: ExperimentKind, cfg: &ExperimentConfig) -> Self {
        let mut s = Self { lines: Vec::new() };
        s.push("experiment", kind);
        s.push("seed", cfg.seed);
        s.push("acceptance_rule", &cfg.acceptance_rule);
        s
    }

    fn push(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push(format!("{key}: {value}"));
    }

    fn push_trace(&mut self, trace: &TrainingTrace) {
        self.push("stop", stop_name(&trace.stop));
        self.push("final_cf", format!("{:.9}", trace.final_cf));
        self.push("cf_evaluations", trace.evaluations);
        self.push("sweeps", trace.sweeps_completed);
        if let Some(seed) = trace.init_seed {
            self.push("init_seed", seed);
        }
    }

    fn finish(mut self, status: RunStatus, files: &[String]) -> String {
        self.push(
            "status",
            match status {
                RunStatus::Converged => "converged",
                RunStatus::Flagged => "flagged",
            },
        );
        self.push("files", files.join(" "));
        let mut text = self.lines.join("\n");
        text.push('\n');
        text
    }
}

fn routes_text(target: &TargetRouting) -> String {
    target
        .routes()
        .iter()
        .map(|(i, o)| format!("{i}>{o}"))
        .collect::<Vec<_>>()
        .join(" ")
}

// ---- experiment runners ----

fn run_switch(cfg: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let topo = MeshTopology::standard();
    let routes = cfg.routes_or_default(ExperimentKind::Switch)?;
    let target = TargetRouting::new(4, &routes)?;
    let mut bench = new_bench(cfg)?;
    apply_neutral_state(&mut bench, cfg)?;
    prepare_core_a(&mut bench, cfg)?;

    let frozen = frozen_shifters(&topo, &[Part::SuB], false);
    let schedule = cfg.schedule(frozen.clone())?;
    let init = phase_init(&bench, cfg, &frozen, cfg.seed)?;
    let thermal = cfg.thermal();
    let trace = coordinate_descent(
        &mut bench,
        &thermal,
        |b| cf_routing(b, &target),
        &schedule,
        init,
        |_, _| Ok(()),
    )?;

    let mut report = measure_crosstalk(&mut bench, &target, &cfg.input_power_mw)?;
    if cfg.dispersion_enabled {
        let curve = crosstalk_spectrum(&mut bench, &target, &cfg.lambda_grid())?;
        report.band_nm = band_below(&curve, cfg.center_wavelength_nm, cfg.crosstalk_band_db);
        report.band_threshold_db = cfg.crosstalk_band_db;
    }

    let mut out = OutputDir::create(&cfg.out_dir)?;
    out.write("trace.csv", &trace.to_csv())?;
    out.write("crosstalk.csv", &report.to_csv())?;
    out.write("state.json", &state_json(&trace.final_voltages_mv))?;

    let status = if trace.converged() {
        RunStatus::Converged
    } else {
        RunStatus::Flagged
    };
    let mut summary = Summary::new(ExperimentKind::Switch, cfg);
    summary.push("routes", routes_text(&target));
    summary.push_trace(&trace);
    summary.push(
        "worst_crosstalk_db",
        format!("{:.3}", report.worst_crosstalk_db),
    );
    if let Some((lo, hi)) = report.band_nm {
        summary.push(
            "crosstalk_band_nm",
            format!("{lo:.2} {hi:.2} (below {:.1} dB)", report.band_threshold_db),
        );
    }
    let text = summary.finish(status, &with_summary(out.files()));
    let mut out = out;
    out.write("summary.txt", &text)?;

    Ok(RunOutcome {
        status,
        final_cf: Some(trace.final_cf),
        summary: text,
        trace: Some(trace),
        report: Some(report),
    })
}

fn run_mimo(cfg: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let topo = MeshTopology::standard();
    let routes = cfg.routes_or_default(ExperimentKind::Mimo)?;
    let target = TargetRouting::new(4, &routes)?;
    let mut bench = new_bench(cfg)?;
    apply_neutral_state(&mut bench, cfg)?;
    // the link scramble is the whole point of the experiment
    bench.scramble_core_a(cfg.scramble_seed)?;

    let frozen = frozen_shifters(&topo, &[Part::Diag, Part::SuB], true);
    let schedule = cfg.schedule(frozen.clone())?;
    let init = phase_init(&bench, cfg, &frozen, cfg.seed)?;
    let thermal = cfg.thermal();
    let trace = coordinate_descent(
        &mut bench,
        &thermal,
        |b| cf_routing(b, &target),
        &schedule,
        init,
        |_, _| Ok(()),
    )?;

    let mut report = measure_crosstalk(&mut bench, &target, &cfg.input_power_mw)?;
    if cfg.dispersion_enabled {
        let curve = crosstalk_spectrum(&mut bench, &target, &cfg.lambda_grid())?;
        report.band_nm = band_below(&curve, cfg.center_wavelength_nm, cfg.crosstalk_band_db);
        report.band_threshold_db = cfg.crosstalk_band_db;
    }

    let mut out = OutputDir::create(&cfg.out_dir)?;
    out.write("trace.csv", &trace.to_csv())?;
    out.write("crosstalk.csv", &report.to_csv())?;
    out.write("state.json", &state_json(&trace.final_voltages_mv))?;

    // final live eye of the monitored channel
    bench.select_input(InputSelect::All)?;
    let port = cfg.monitored_ports.first().copied().unwrap_or(0);
    let frame = bench.read_eye(port, &cfg.nrz(), cfg.eye_bits)?;
    let eye = frame.eye().expect("eye frame");
    let sarea = eye_opening_area(eye).map_err(|e| RunError::Io(e.to_string()))?;
    out.write(&format!("eye_{port}_final.csv"), &eye.to_csv())?;

    let status = if trace.converged() {
        RunStatus::Converged
    } else {
        RunStatus::Flagged
    };
    let mut summary = Summary::new(ExperimentKind::Mimo, cfg);
    summary.push("routes", routes_text(&target));
    summary.push("scramble_seed", cfg.scramble_seed);
    summary.push_trace(&trace);
    summary.push(
        "worst_crosstalk_db",
        format!("{:.3}", report.worst_crosstalk_db),
    );
    if let Some((lo, hi)) = report.band_nm {
        summary.push(
            "crosstalk_band_nm",
            format!("{lo:.2} {hi:.2} (below {:.1} dB)", report.band_threshold_db),
        );
    }
    summary.push(&format!("final_eye_sarea_port{port}"), format!("{sarea:.6}"));
    let text = summary.finish(status, &with_summary(out.files()));
    out.write("summary.txt", &text)?;

    Ok(RunOutcome {
        status,
        final_cf: Some(trace.final_cf),
        summary: text,
        trace: Some(trace),
        report: Some(report),
    })
}

fn run_mimo_eye(cfg: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let topo = MeshTopology::standard();
    let ports = cfg.monitored_ports.clone();
    let mut bench = new_bench(cfg)?;
    apply_neutral_state(&mut bench, cfg)?;
    bench.scramble_core_a(cfg.scramble_seed)?;

    let warm = if let Some(path) = &cfg.state_file {
        let volts = crate::output::load_state(path)?;
        bench.set_voltages(&volts)?;
        true
    } else {
        false
    };
    bench.select_input(InputSelect::All)?;

    let frozen = frozen_shifters(&topo, &[Part::Diag, Part::SuB], true);
    let thermal = cfg.thermal();
    let nrz = cfg.nrz();
    let mut out = OutputDir::create(&cfg.out_dir)?;

    // eye before any training
    for &port in &ports {
        let frame = bench.read_eye(port, &nrz, cfg.eye_bits)?;
        out.write(
            &format!("eye_{port}_init.csv"),
            &frame.eye().expect("eye frame").to_csv(),
        )?;
    }

    let schedule = cfg.schedule(frozen.clone())?;

    // A fully dark start (every monitored eye closed) gives coordinate
    // steps nothing to climb, so probe seeded random initializations until
    // some opening shows. Each attempt tries the raw draw and, failing
    // that, the same draw with the attenuator row forced open, which makes
    // the visibility odds independent of how unlucky the scramble is.
    let mut restarts = 0usize;
    let init = if warm {
        phase_init(&bench, cfg, &frozen, cfg.seed)?
    } else {
        let trainable: Vec<usize> = (0..bench.shifter_count())
            .filter(|i| !frozen.contains(i))
            .collect();
        let pi = std::f64::consts::PI;
        let diag_thetas: Vec<usize> = (0..4)
            .filter_map(|ch| topo.shifter_index(Part::Diag, ch, mesh_core::Role::Theta))
            .collect();
        'probe: for attempt in 0..=cfg.max_restarts {
            restarts = attempt;
            let seed = cfg.seed.wrapping_add(1000 * attempt as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut volts = bench.voltages().to_vec();
            for &i in &trainable {
                let ph: f64 = rng.gen_range(0.0..2.0 * pi);
                volts[i] =
                    phase_to_voltage(ph, &thermal).map_err(|e| RunError::Io(e.to_string()))?;
            }
            bench.set_voltages(&volts)?;
            if cf_eye(&mut bench, &ports, &nrz, cfg.eye_bits)? > 0.0 {
                break 'probe;
            }
            for &i in &diag_thetas {
                if trainable.contains(&i) {
                    volts[i] = phase_to_voltage(pi, &thermal)
                        .map_err(|e| RunError::Io(e.to_string()))?;
                }
            }
            bench.set_voltages(&volts)?;
            if cf_eye(&mut bench, &ports, &nrz, cfg.eye_bits)? > 0.0 {
                break 'probe;
            }
        }
        PhaseInit::FromCurrent
    };

    let checkpoint_every = cfg.eye_checkpoint_every;
    let ports_for_obs = ports.clone();
    let nrz_obs = nrz.clone();
    let eye_bits = cfg.eye_bits;
    let mut checkpoint_files: Vec<(String, String)> = Vec::new();
    let trace = coordinate_descent(
        &mut bench,
        &thermal,
        |b| cf_eye(b, &ports, &nrz, eye_bits),
        &schedule,
        init,
        |b, ev| {
            if checkpoint_every > 0 && ev.sweep % checkpoint_every == 0 {
                for &port in &ports_for_obs {
                    let frame = b.read_eye(port, &nrz_obs, eye_bits)?;
                    checkpoint_files.push((
                        format!("eye_{port}_{:04}.csv", ev.sweep),
                        frame.eye().expect("eye frame").to_csv(),
                    ));
                }
            }
            Ok(())
        },
    )?;
    for (name, contents) in checkpoint_files {
        out.write(&name, &contents)?;
    }

    let mut final_areas = Vec::new();
    for &port in &ports {
        let frame = bench.read_eye(port, &nrz, cfg.eye_bits)?;
        let eye = frame.eye().expect("eye frame");
        final_areas.push((
            port,
            eye_opening_area(eye).map_err(|e| RunError::Io(e.to_string()))?,
        ));
        out.write(&format!("eye_{port}_final.csv"), &eye.to_csv())?;
    }

    out.write("trace.csv", &trace.to_csv())?;
    out.write("state.json", &state_json(&trace.final_voltages_mv))?;

    let status = if trace.converged() && trace.final_cf > 0.0 {
        RunStatus::Converged
    } else {
        RunStatus::Flagged
    };
    let mut summary = Summary::new(ExperimentKind::MimoEye, cfg);
    summary.push("monitored_ports", format!("{ports:?}"));
    summary.push("scramble_seed", cfg.scramble_seed);
    summary.push("warm_start", warm);
    summary.push("restarts", restarts);
    summary.push_trace(&trace);
    for (port, area) in &final_areas {
        summary.push(&format!("final_eye_sarea_port{port}"), format!("{area:.6}"));
    }
    let text = summary.finish(status, &with_summary(out.files()));
    out.write("summary.txt", &text)?;

    Ok(RunOutcome {
        status,
        final_cf: Some(trace.final_cf),
        summary: text,
        trace: Some(trace),
        report: None,
    })
}

fn run_filter(cfg: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let mut out = OutputDir::create(&cfg.out_dir)?;
    let mut summary = Summary::new(ExperimentKind::Filter, cfg);
    summary.push("passband_center_nm", format!("{:.2}", cfg.passband_center_nm));
    summary.push("passband_fwhm_nm", format!("{:.2}", cfg.passband_fwhm_nm));

    if !cfg.dispersion_enabled || cfg.arm_imbalance_sigma_um <= 0.0 {
        // a dispersion-free chip has a flat spectrum; nothing to shape
        summary.push("stop", "no-spectral-structure");
        summary.push(
            "advice",
            "enable dispersion_enabled and set arm_imbalance_sigma_um > 0",
        );
        let text = summary.finish(RunStatus::Flagged, &with_summary(out.files()));
        out.write("summary.txt", &text)?;
        return Ok(RunOutcome {
            status: RunStatus::Flagged,
            final_cf: None,
            summary: text,
            trace: None,
            report: None,
        });
    }

    let topo = MeshTopology::standard();
    let grid = cfg.lambda_grid();
    let pass_lo = cfg.passband_center_nm - cfg.passband_fwhm_nm / 2.0;
    let pass_hi = cfg.passband_center_nm + cfg.passband_fwhm_nm / 2.0;
    let guard = cfg.stopband_guard_nm;
    let stopbands: Vec<(f64, f64)> = [
        (cfg.lambda_min_nm, pass_lo - guard),
        (pass_hi + guard, cfg.lambda_max_nm),
    ]
    .into_iter()
    .filter(|(lo, hi)| lo < hi)
    .collect();
    let bands = BandSpec {
        passband: (pass_lo, pass_hi),
        stopbands,
    };

    let mut bench = new_bench(cfg)?;
    apply_neutral_state(&mut bench, cfg)?;
    bench.select_input(InputSelect::One(cfg.filter_input))?;

    let spectrum_csv = |b: &mut SimulatedBench| -> Result<String, RunError> {
        let frame = b.read_spectrum(cfg.filter_output, &grid)?;
        let mut text = String::from("input,output,lambda_nm,power_dbm\n");
        for p in frame.spectrum().expect("spectrum frame") {
            text.push_str(&format!(
                "{},{},{:.4},{:.6}\n",
                cfg.filter_input, cfg.filter_output, p.lambda_nm, p.power_dbm
            ));
        }
        Ok(text)
    };
    out.write("spectrum_initial.csv", &spectrum_csv(&mut bench)?)?;

    let frozen = frozen_shifters(&topo, &[Part::SuA, Part::Diag, Part::SuB], true);
    let schedule = cfg.schedule(frozen.clone())?;
    let init = phase_init(&bench, cfg, &frozen, cfg.seed)?;
    let thermal = cfg.thermal();
    let trace = coordinate_descent(
        &mut bench,
        &thermal,
        |b| cf_filter(b, cfg.filter_output, &bands, &grid),
        &schedule,
        init,
        |_, _| Ok(()),
    )?;

    out.write("spectrum.csv", &spectrum_csv(&mut bench)?)?;
    out.write("trace.csv", &trace.to_csv())?;
    out.write("state.json", &state_json(&trace.final_voltages_mv))?;

    let healthy = trace.final_cf >= cfg.flag_filter_below_db;
    let status = if trace.converged() && healthy {
        RunStatus::Converged
    } else {
        RunStatus::Flagged
    };
    summary.push("passband_nm", format!("{pass_lo:.2} {pass_hi:.2}"));
    summary.push_trace(&trace);
    summary.push("contrast_db", format!("{:.3}", trace.final_cf));
    if !healthy {
        summary.push("advice", "contrast below threshold; try a larger arm_imbalance_sigma_um");
    }
    let text = summary.finish(status, &with_summary(out.files()));
    out.write("summary.txt", &text)?;

    Ok(RunOutcome {
        status,
        final_cf: Some(trace.final_cf),
        summary: text,
        trace: Some(trace),
        report: None,
    })
}

fn run_spectrum_sweep(cfg: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let path = cfg
        .state_file
        .as_ref()
        .ok_or_else(|| RunError::Config("sweep needs state_file".into()))?;
    let volts = crate::output::load_state(path)?;
    let mut bench = new_bench(cfg)?;
    bench.set_voltages(&volts)?;

    let grid = cfg.lambda_grid();
    let n = bench.n_ports();
    let mut text = String::from("input,output,lambda_nm,power_dbm\n");
    for input in 0..n {
        bench.select_input(InputSelect::One(input))?;
        for output in 0..n {
            let frame = bench.read_spectrum(output, &grid)?;
            for p in frame.spectrum().expect("spectrum frame") {
                text.push_str(&format!(
                    "{input},{output},{:.4},{:.6}\n",
                    p.lambda_nm, p.power_dbm
                ));
            }
        }
    }

    let mut out = OutputDir::create(&cfg.out_dir)?;
    out.write("spectrum.csv", &text)?;
    let mut summary = Summary::new(ExperimentKind::Sweep, cfg);
    summary.push("state_file", path.display());
    summary.push("lambda_points", grid.len());
    let text = summary.finish(RunStatus::Converged, &with_summary(out.files()));
    out.write("summary.txt", &text)?;

    Ok(RunOutcome {
        status: RunStatus::Converged,
        final_cf: None,
        summary: text,
        trace: None,
        report: None,
    })
}

fn run_eye_sim(cfg: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let nrz = cfg.nrz();
    let wf = signal_lab::generate_nrz(&nrz, cfg.eye_bits)
        .map_err(|e| RunError::Config(e.to_string()))?;
    let eye = signal_lab::fold_eye(&wf, 1.0).map_err(|e| RunError::Config(e.to_string()))?;
    let area = eye_opening_area(&eye).map_err(|e| RunError::Config(e.to_string()))?;

    let mut out = OutputDir::create(&cfg.out_dir)?;
    out.write("waveform.csv", &wf.to_csv())?;
    out.write("eye_sim.csv", &eye.to_csv())?;
    let mut summary = Summary::new(ExperimentKind::EyeSim, cfg);
    summary.push("bits", cfg.eye_bits);
    summary.push("sarea", format!("{area:.6}"));
    let text = summary.finish(RunStatus::Converged, &with_summary(out.files()));
    out.write("summary.txt", &text)?;

    Ok(RunOutcome {
        status: RunStatus::Converged,
        final_cf: Some(area),
        summary: text,
        trace: None,
        report: None,
    })
}

fn with_summary(files: &[String]) -> Vec<String> {
    let mut all = files.to_vec();
    all.push("summary.txt".into());
    all
}
