use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hardware_model::{
    grating_envelope, spectral_phase, voltage_to_phase, SpectralModel, ThermalShifterModel,
};
use mesh_core::{chip_matrix, MeshTopology, PhaseState, Role, TransferMatrix};
use signal_lab::{fold_eye, generate_nrz, NrzConfig, Waveform};

use crate::bench::{Bench, BenchError, InputSelect};
use crate::frame::{BenchEvent, EventKind, FrameData, MeasurementFrame, SpectrumPoint};

/// Everything needed to stand up a simulated chip on the bench.
#[derive(Debug, Clone)]
pub struct SimBenchConfig {
    pub topology: MeshTopology,
    pub thermal: ThermalShifterModel,
    pub spectral: SpectralModel,
    /// Source power launched into each input port, in mW.
    pub input_power_mw: Vec<f64>,
    /// Relative sigma of the multiplicative detector noise; 0 disables it.
    pub noise_sigma_rel: f64,
    /// Seed of the detector-noise stream.
    pub noise_seed: u64,
}

impl Default for SimBenchConfig {
    fn default() -> Self {
        let topology = MeshTopology::standard();
        let n = topology.n_ports();
        Self {
            topology,
            thermal: ThermalShifterModel::default(),
            spectral: SpectralModel::default(),
            input_power_mw: vec![1.0; n],
            noise_sigma_rel: 0.0,
            noise_seed: 0,
        }
    }
}

/// Simulated bench session: a mesh chip behind real-instrument semantics.
///
/// A session is a serialized resource (one command at a time); run several
/// sessions for parallel experiments. All randomness is seeded, so a session
/// replayed with the same settings produces identical readings.
pub struct SimulatedBench {
    cfg: SimBenchConfig,
    /// Static arm-length imbalance per MZI, in um; all zero without
    /// dispersion.
    arm_imbalance_um: Vec<f64>,
    voltages_mv: Vec<f64>,
    gates: Vec<bool>,
    noise_rng: ChaCha8Rng,
    log: Vec<BenchEvent>,
    seq: u64,
}

impl SimulatedBench {
    pub fn new(cfg: SimBenchConfig) -> Result<Self, BenchError> {
        cfg.thermal
            .validate()
            .map_err(|e| BenchError::Model(e.to_string()))?;
        cfg.spectral
            .validate()
            .map_err(|e| BenchError::Model(e.to_string()))?;
        let n = cfg.topology.n_ports();
        if cfg.input_power_mw.len() != n {
            return Err(BenchError::ChannelCount {
                expected: n,
                got: cfg.input_power_mw.len(),
            });
        }
        let mzi_count = cfg.topology.mzi_count();
        let arm_imbalance_um = if cfg.spectral.dispersion_enabled
            && cfg.spectral.arm_imbalance_sigma_um > 0.0
        {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.spectral.rng_seed);
            (0..mzi_count)
                .map(|_| cfg.spectral.arm_imbalance_sigma_um * gauss(&mut rng))
                .collect()
        } else {
            vec![0.0; mzi_count]
        };
        let s = cfg.topology.shifter_count();
        let noise_rng = ChaCha8Rng::seed_from_u64(cfg.noise_seed);
        Ok(Self {
            cfg,
            arm_imbalance_um,
            voltages_mv: vec![0.0; s],
            gates: vec![true; n],
            noise_rng,
            log: Vec::new(),
            seq: 0,
        })
    }

    pub fn config(&self) -> &SimBenchConfig {
        &self.cfg
    }

    /// Session log so far.
    pub fn events(&self) -> &[BenchEvent] {
        &self.log
    }

    /// Serializes the session log as newline-delimited JSON records.
    pub fn log_ndjson(&self) -> String {
        let mut out = String::new();
        for e in &self.log {
            out.push_str(&serde_json::to_string(e).expect("log events serialize"));
            out.push('\n');
        }
        out
    }

    // ---- owner-side controls (not part of the black-box surface) ----

    /// Draws uniform random phases for every shifter of the first SU core
    /// and applies them, emulating an optical link that mixes the channels.
    /// Returns the applied phases for the experiment record; a trainer never
    /// sees them.
    pub fn scramble_core_a(&mut self, seed: u64) -> Result<Vec<(usize, f64)>, BenchError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let range = self.cfg.topology.index_range(mesh_core::Part::SuA);
        let assignments: Vec<(usize, f64)> = range
            .map(|i| (i, rng.gen_range(0.0..mesh_core::TWO_PI)))
            .collect();
        self.apply_phases(&assignments)?;
        let shifters: Vec<usize> = assignments.iter().map(|(i, _)| *i).collect();
        self.push_event(EventKind::Scramble { shifters });
        Ok(assignments)
    }

    /// Writes exact phases to selected shifters through the voltage law.
    /// Owner-side; used to place analytically derived configurations.
    pub fn set_phases(&mut self, assignments: &[(usize, f64)]) -> Result<(), BenchError> {
        self.apply_phases(assignments)?;
        self.push_event(EventKind::SetPhases {
            shifters: assignments.iter().map(|(i, _)| *i).collect(),
        });
        Ok(())
    }

    fn apply_phases(&mut self, assignments: &[(usize, f64)]) -> Result<(), BenchError> {
        let s = self.cfg.topology.shifter_count();
        let mut next = self.voltages_mv.clone();
        for &(i, phase) in assignments {
            if i >= s {
                return Err(BenchError::ChannelCount { expected: s, got: i });
            }
            let wrapped = mesh_core::wrap_angle(phase);
            let v = hardware_model::phase_to_voltage(wrapped, &self.cfg.thermal)
                .map_err(|e| BenchError::Model(e.to_string()))?;
            next[i] = v;
        }
        self.voltages_mv = next;
        Ok(())
    }

    // ---- internal physics ----

    fn push_event(&mut self, kind: EventKind) -> u64 {
        self.seq += 1;
        self.log.push(BenchEvent {
            timestamp: self.seq,
            kind,
        });
        self.seq
    }

    fn phase_state_at(&self, lambda_nm: f64) -> Result<PhaseState, BenchError> {
        let topo = &self.cfg.topology;
        let spectral = &self.cfg.spectral;
        let mut phases = Vec::with_capacity(topo.shifter_count());
        let at_center = !spectral.dispersion_enabled
            || (lambda_nm - spectral.center_wavelength_nm).abs() < f64::EPSILON;
        for (i, &v) in self.voltages_mv.iter().enumerate() {
            let theta_c = voltage_to_phase(v, &self.cfg.thermal)
                .map_err(|e| BenchError::Model(e.to_string()))?;
            let theta = if at_center {
                theta_c
            } else {
                let delta_l = if matches!(
                    topo.shifter_role(i),
                    Some((_, _, Role::Theta))
                ) {
                    self.arm_imbalance_um[topo.mzi_of_shifter(i).expect("valid shifter")]
                } else {
                    0.0
                };
                spectral_phase(theta_c, lambda_nm, delta_l, spectral)
                    .map_err(|e| BenchError::Model(e.to_string()))?
            };
            phases.push(theta);
        }
        PhaseState::new(topo, &phases).map_err(|e| BenchError::Model(e.to_string()))
    }

    fn matrix_at(&self, lambda_nm: f64) -> Result<TransferMatrix, BenchError> {
        let state = self.phase_state_at(lambda_nm)?;
        chip_matrix(&self.cfg.topology, &state, &self.gates)
            .map_err(|e| BenchError::Model(e.to_string()))
    }

    /// Per-port detected powers in mW at one wavelength. Channels from
    /// different inputs add in power: the sources are mutually incoherent.
    fn detected_powers(&self, lambda_nm: f64) -> Result<Vec<f64>, BenchError> {
        let m = self.matrix_at(lambda_nm)?;
        let env = grating_envelope(lambda_nm, &self.cfg.spectral)
            .map_err(|e| BenchError::Model(e.to_string()))?;
        let n = self.cfg.topology.n_ports();
        let mut powers = vec![0.0; n];
        for (i, p) in powers.iter_mut().enumerate() {
            for j in 0..n {
                *p += m.power(i, j) * self.cfg.input_power_mw[j];
            }
            *p *= env * env; // one coupler in, one out
        }
        Ok(powers)
    }

    fn noise_factor(&mut self) -> f64 {
        if self.cfg.noise_sigma_rel > 0.0 {
            (1.0 + self.cfg.noise_sigma_rel * gauss(&mut self.noise_rng)).max(0.0)
        } else {
            1.0
        }
    }
}

impl Bench for SimulatedBench {
    fn shifter_count(&self) -> usize {
        self.cfg.topology.shifter_count()
    }

    fn n_ports(&self) -> usize {
        self.cfg.topology.n_ports()
    }

    fn set_voltages(&mut self, voltages_mv: &[f64]) -> Result<(), BenchError> {
        let s = self.shifter_count();
        if voltages_mv.len() != s {
            return Err(BenchError::ChannelCount {
                expected: s,
                got: voltages_mv.len(),
            });
        }
        let max = self.cfg.thermal.max_voltage_mv;
        let offending: Vec<usize> = voltages_mv
            .iter()
            .enumerate()
            .filter(|(_, &v)| !v.is_finite() || v < 0.0 || v > max)
            .map(|(i, _)| i)
            .collect();
        if !offending.is_empty() {
            return Err(BenchError::DriveLimit {
                indices: offending,
                max_mv: max,
            });
        }
        self.voltages_mv = voltages_mv.to_vec();
        self.push_event(EventKind::SetVoltages {
            voltages_mv: voltages_mv.to_vec(),
        });
        Ok(())
    }

    fn voltages(&self) -> &[f64] {
        &self.voltages_mv
    }

    fn select_input(&mut self, select: InputSelect) -> Result<(), BenchError> {
        let n = self.n_ports();
        match select {
            InputSelect::One(port) => {
                if port >= n {
                    return Err(BenchError::BadInputPort { port, n_ports: n });
                }
                self.gates = (0..n).map(|j| j == port).collect();
                self.push_event(EventKind::SelectInput { input: Some(port) });
            }
            InputSelect::All => {
                self.gates = vec![true; n];
                self.push_event(EventKind::SelectInput { input: None });
            }
        }
        Ok(())
    }

    fn input_gates(&self) -> &[bool] {
        &self.gates
    }

    fn read_powers(&mut self) -> Result<MeasurementFrame, BenchError> {
        let lambda = self.cfg.spectral.center_wavelength_nm;
        let mut powers = self.detected_powers(lambda)?;
        for p in powers.iter_mut() {
            *p *= self.noise_factor();
        }
        let ts = self.push_event(EventKind::ReadPowers {
            powers_mw: powers.clone(),
        });
        Ok(MeasurementFrame {
            timestamp: ts,
            data: FrameData::Powers(powers),
        })
    }

    fn read_spectrum(
        &mut self,
        port: usize,
        lambda_grid_nm: &[f64],
    ) -> Result<MeasurementFrame, BenchError> {
        let n = self.n_ports();
        if port >= n {
            return Err(BenchError::BadOutputPort { port, n_ports: n });
        }
        if lambda_grid_nm.is_empty() {
            return Err(BenchError::BadLambdaGrid("empty grid".into()));
        }
        if lambda_grid_nm.windows(2).any(|w| w[1] <= w[0]) {
            return Err(BenchError::BadLambdaGrid(
                "grid must be strictly increasing".into(),
            ));
        }
        for &l in lambda_grid_nm {
            self.cfg
                .spectral
                .check_lambda(l)
                .map_err(|e| BenchError::BadLambdaGrid(e.to_string()))?;
        }
        let mut points = Vec::with_capacity(lambda_grid_nm.len());
        for &lambda in lambda_grid_nm {
            let p_mw = self.detected_powers(lambda)?[port];
            points.push(SpectrumPoint {
                lambda_nm: lambda,
                power_dbm: to_dbm(p_mw),
            });
        }
        let ts = self.push_event(EventKind::ReadSpectrum {
            port,
            points: points.len(),
        });
        Ok(MeasurementFrame {
            timestamp: ts,
            data: FrameData::Spectrum(points),
        })
    }

    fn read_eye(
        &mut self,
        port: usize,
        signal: &NrzConfig,
        n_bits: usize,
    ) -> Result<MeasurementFrame, BenchError> {
        let n = self.n_ports();
        if port >= n {
            return Err(BenchError::BadOutputPort { port, n_ports: n });
        }
        let m = self.matrix_at(self.cfg.spectral.center_wavelength_nm)?;

        // Independent streams per open input, decorrelated by seed offset.
        // The scope trace is normalized to the ideal routed one-level, and
        // segments are labeled with the pattern of the channel under test
        // (the input with the port's index), as a pattern-locked scope does.
        let mut port_samples: Option<Vec<f64>> = None;
        let mut reference_bits: Option<Vec<u8>> = None;
        let mut spb = signal.samples_per_bit;
        for j in 0..n {
            let chan_cfg = NrzConfig {
                rng_seed: signal
                    .rng_seed
                    .wrapping_add(0x5851_f42d_4c95_7f2d_u64.wrapping_mul(j as u64 + 1)),
                ..signal.clone()
            };
            let wf = generate_nrz(&chan_cfg, n_bits)
                .map_err(|e| BenchError::Signal(e.to_string()))?;
            spb = wf.samples_per_bit;
            if j == port {
                reference_bits = Some(wf.bits.clone());
            }
            let weight = m.power(port, j) * self.cfg.input_power_mw[j];
            let acc = port_samples.get_or_insert_with(|| vec![0.0; wf.samples.len()]);
            for (a, s) in acc.iter_mut().zip(wf.samples.iter()) {
                *a += weight * s;
            }
        }
        let samples = port_samples.expect("at least one port");
        let bits = reference_bits.expect("reference channel exists");
        let mixed = Waveform {
            samples,
            samples_per_bit: spb,
            bits,
        };
        let nominal = self.cfg.input_power_mw[port.min(n - 1)];
        let eye = fold_eye(&mixed, nominal).map_err(|e| BenchError::Signal(e.to_string()))?;
        let ts = self.push_event(EventKind::ReadEye {
            port,
            points: eye.points.len(),
        });
        Ok(MeasurementFrame {
            timestamp: ts,
            data: FrameData::Eye(eye),
        })
    }
}

fn to_dbm(p_mw: f64) -> f64 {
    // floor keeps dark ports finite on a log axis
    10.0 * p_mw.max(1e-30).log10()
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
