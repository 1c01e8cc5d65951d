use std::path::{Path, PathBuf};

use hardware_model::{SpectralModel, ThermalShifterModel};
use instruments::SimBenchConfig;
use mesh_core::{MeshTopology, Part, Role};
use self_learning::{AcceptanceRule, TrainSchedule};
use serde::Deserialize;
use signal_lab::NrzConfig;

use crate::RunError;

/// Which experiment a config drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Switch,
    Mimo,
    MimoEye,
    Filter,
    Sweep,
    EyeSim,
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ExperimentKind::Switch => "switch",
            ExperimentKind::Mimo => "mimo",
            ExperimentKind::MimoEye => "mimo-eye",
            ExperimentKind::Filter => "filter",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::EyeSim => "eye-sim",
        };
        write!(f, "{s}")
    }
}

/// How the chip is prepared before training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Part2State {
    /// First core at identity phases (ideal pass-through twin).
    Identity,
    /// First core unpowered (every MZI in the cross state).
    Zero,
    /// First core scrambled from `scramble_seed`.
    Random,
}

/// How the trainable phases start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    /// Uniform random phases (cold start).
    Random,
    /// Keep the prepared state, optionally jittered (warm start).
    Current,
}

/// Flat, human-editable experiment description. Every key has a default;
/// unknown keys are rejected.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional sanity tag; when set it must match the subcommand.
    pub experiment: Option<ExperimentKind>,
    /// Global seed: initializes training phases and derived streams.
    pub seed: u64,
    /// Output directory for all report files.
    pub out_dir: PathBuf,
    /// `greedy` or `paper` acceptance rule.
    pub acceptance_rule: String,

    /// Routing targets as `input>output` pairs (0-based ports).
    pub routes: Vec<String>,
    /// Seed of the core-A scramble (mimo, mimo-eye, part2_state = random).
    pub scramble_seed: u64,
    /// Core-A preparation for the switch experiment.
    pub part2_state: Part2State,
    /// Cold or warm start.
    pub init: InitMode,
    /// Uniform jitter (radians) applied to trainable phases on warm start.
    pub init_jitter_rad: f64,

    // -- schedule --
    pub coarse_step: f64,
    pub fine_step: f64,
    pub coarse_sweeps: usize,
    pub fine_sweeps: usize,
    pub target_cf: Option<f64>,
    pub convergence_tol: f64,

    // -- heater calibration --
    pub period_t_mv2: f64,
    pub resistance_ohm: f64,
    pub max_voltage_mv: f64,

    // -- detection --
    pub noise_sigma_rel: f64,
    pub input_power_mw: Vec<f64>,

    // -- spectral model --
    pub center_wavelength_nm: f64,
    pub grating_peak_loss_db: f64,
    pub grating_3db_bandwidth_nm: f64,
    pub dispersion_enabled: bool,
    pub arm_imbalance_sigma_um: f64,
    pub group_index: f64,
    pub dispersion_seed: u64,

    // -- wavelength grid --
    pub lambda_min_nm: f64,
    pub lambda_max_nm: f64,
    pub lambda_points: usize,
    /// Crosstalk-band threshold for spectral reports, dB.
    pub crosstalk_band_db: f64,

    // -- filter bands --
    pub filter_input: usize,
    pub filter_output: usize,
    pub passband_center_nm: f64,
    pub passband_fwhm_nm: f64,
    pub stopband_guard_nm: f64,
    /// Below this contrast (dB) a filter run is flagged.
    pub flag_filter_below_db: f64,

    // -- eye experiments --
    pub monitored_ports: Vec<usize>,
    pub nrz_bitrate_gbps: f64,
    pub nrz_prbs_order: u32,
    pub nrz_samples_per_bit: usize,
    pub nrz_rise_fraction: f64,
    pub nrz_noise_sigma: f64,
    pub eye_bits: usize,
    /// Export an eye trace every this many sweeps (0 disables checkpoints).
    pub eye_checkpoint_every: usize,
    /// Extra seeded initialization probes when every monitored eye starts
    /// fully closed.
    pub max_restarts: usize,

    /// Saved voltage snapshot to load (sweep) or warm-start from.
    pub state_file: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 1,
            out_dir: PathBuf::from("runs/out"),
            acceptance_rule: "greedy".into(),
            routes: Vec::new(),
            scramble_seed: 7,
            part2_state: Part2State::Identity,
            init: InitMode::Random,
            init_jitter_rad: 0.0,
            coarse_step: 2.0 * std::f64::consts::PI / 20.0,
            fine_step: 2.0 * std::f64::consts::PI / 100.0,
            coarse_sweeps: 40,
            fine_sweeps: 60,
            target_cf: None,
            convergence_tol: 1e-7,
            period_t_mv2: 1.07e8,
            resistance_ohm: 2000.0,
            max_voltage_mv: 15_000.0,
            noise_sigma_rel: 0.0,
            input_power_mw: vec![1.0; 4],
            center_wavelength_nm: 1550.0,
            grating_peak_loss_db: -6.9,
            grating_3db_bandwidth_nm: 40.0,
            dispersion_enabled: false,
            arm_imbalance_sigma_um: 0.0,
            group_index: 4.2,
            dispersion_seed: 0,
            lambda_min_nm: 1525.0,
            lambda_max_nm: 1575.0,
            lambda_points: 101,
            crosstalk_band_db: -10.0,
            filter_input: 3,
            filter_output: 3,
            passband_center_nm: 1546.0,
            passband_fwhm_nm: 20.0,
            stopband_guard_nm: 2.5,
            flag_filter_below_db: 3.0,
            monitored_ports: vec![0],
            nrz_bitrate_gbps: 10.0,
            nrz_prbs_order: 7,
            nrz_samples_per_bit: 32,
            nrz_rise_fraction: 0.25,
            nrz_noise_sigma: 0.02,
            eye_bits: 254,
            eye_checkpoint_every: 5,
            max_restarts: 30,
            state_file: None,
        }
    }
}

impl ExperimentConfig {
    /// Parses a TOML config file; unknown keys are errors.
    pub fn from_path(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        self.parse_rule()?;
        self.parsed_routes()?;
        if self.lambda_points < 2 {
            return Err(RunError::Config("lambda_points must be >= 2".into()));
        }
        if !(self.lambda_min_nm < self.lambda_max_nm) {
            return Err(RunError::Config("lambda range must be ordered".into()));
        }
        if self.input_power_mw.len() != 4 {
            return Err(RunError::Config("input_power_mw needs 4 entries".into()));
        }
        if self.input_power_mw.iter().any(|&p| !(p > 0.0)) {
            return Err(RunError::Config("input powers must be positive".into()));
        }
        if self.filter_input >= 4 || self.filter_output >= 4 {
            return Err(RunError::Config("filter ports must be < 4".into()));
        }
        if self.monitored_ports.iter().any(|&p| p >= 4) {
            return Err(RunError::Config("monitored ports must be < 4".into()));
        }
        Ok(())
    }

    pub fn parse_rule(&self) -> Result<AcceptanceRule, RunError> {
        match self.acceptance_rule.as_str() {
            "greedy" => Ok(AcceptanceRule::Greedy),
            "paper" => Ok(AcceptanceRule::PaperFaithful),
            other => Err(RunError::Config(format!(
                "acceptance_rule must be 'greedy' or 'paper', got '{other}'"
            ))),
        }
    }

    /// Routes parsed into (input, output) pairs.
    pub fn parsed_routes(&self) -> Result<Vec<(usize, usize)>, RunError> {
        let mut out = Vec::with_capacity(self.routes.len());
        for r in &self.routes {
            let (i, o) = r
                .split_once('>')
                .ok_or_else(|| RunError::Config(format!("route '{r}' is not 'in>out'")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| RunError::Config(format!("route '{r}' has a non-numeric port")))
            };
            out.push((parse(i)?, parse(o)?));
        }
        Ok(out)
    }

    /// Default routing when none given: identity over all four ports for
    /// mimo-style runs, a 3-port reversal for the switch.
    pub fn routes_or_default(&self, kind: ExperimentKind) -> Result<Vec<(usize, usize)>, RunError> {
        let parsed = self.parsed_routes()?;
        if !parsed.is_empty() {
            return Ok(parsed);
        }
        Ok(match kind {
            ExperimentKind::Switch => vec![(0, 2), (1, 1), (2, 0)],
            _ => vec![(0, 0), (1, 1), (2, 2), (3, 3)],
        })
    }

    pub fn thermal(&self) -> ThermalShifterModel {
        ThermalShifterModel {
            period_t_mv2: self.period_t_mv2,
            resistance_ohm: self.resistance_ohm,
            max_voltage_mv: self.max_voltage_mv,
        }
    }

    pub fn spectral(&self) -> SpectralModel {
        SpectralModel {
            center_wavelength_nm: self.center_wavelength_nm,
            grating_peak_loss_db: self.grating_peak_loss_db,
            grating_3db_bandwidth_nm: self.grating_3db_bandwidth_nm,
            lambda_min_nm: self.lambda_min_nm.min(1500.0),
            lambda_max_nm: self.lambda_max_nm.max(1600.0),
            dispersion_enabled: self.dispersion_enabled,
            arm_imbalance_sigma_um: self.arm_imbalance_sigma_um,
            group_index: self.group_index,
            rng_seed: self.dispersion_seed,
        }
    }

    pub fn bench_config(&self) -> SimBenchConfig {
        SimBenchConfig {
            topology: MeshTopology::standard(),
            thermal: self.thermal(),
            spectral: self.spectral(),
            input_power_mw: self.input_power_mw.clone(),
            noise_sigma_rel: self.noise_sigma_rel,
            noise_seed: self.seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1),
        }
    }

    pub fn schedule(&self, frozen: Vec<usize>) -> Result<TrainSchedule, RunError> {
        Ok(TrainSchedule {
            coarse_step: self.coarse_step,
            fine_step: self.fine_step,
            coarse_sweeps: self.coarse_sweeps,
            fine_sweeps: self.fine_sweeps,
            target_cf: self.target_cf,
            convergence_tol: self.convergence_tol,
            acceptance_rule: self.parse_rule()?,
            frozen,
        })
    }

    pub fn nrz(&self) -> NrzConfig {
        NrzConfig {
            bitrate_gbps: self.nrz_bitrate_gbps,
            prbs_order: self.nrz_prbs_order,
            samples_per_bit: self.nrz_samples_per_bit,
            rise_time_fraction: self.nrz_rise_fraction,
            amplitude_noise_sigma: self.nrz_noise_sigma,
            rng_seed: self.seed.wrapping_mul(0x2545f4914f6cdd1d).wrapping_add(3),
        }
    }

    pub fn lambda_grid(&self) -> Vec<f64> {
        let n = self.lambda_points;
        let step = (self.lambda_max_nm - self.lambda_min_nm) / (n - 1) as f64;
        (0..n).map(|k| self.lambda_min_nm + step * k as f64).collect()
    }
}

/// Shifter groups that stay frozen for a given experiment: everything
/// outside the trainable parts, plus the first attenuator's internal phase,
/// which is pinned open so the chip keeps its power efficiency.
pub fn frozen_shifters(
    topo: &MeshTopology,
    trainable_parts: &[Part],
    pin_first_attenuator: bool,
) -> Vec<usize> {
    let mut frozen: Vec<usize> = (0..topo.shifter_count())
        .filter(|&i| {
            let (part, _, _) = topo.shifter_role(i).expect("index in range");
            !trainable_parts.contains(&part)
        })
        .collect();
    if pin_first_attenuator {
        let idx = topo
            .shifter_index(Part::Diag, 0, Role::Theta)
            .expect("diag slot 0 exists");
        if !frozen.contains(&idx) {
            frozen.push(idx);
        }
    }
    frozen.sort_unstable();
    frozen
}
