use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::SignalError;

/// Parameters of one NRZ test stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NrzConfig {
    /// Line rate in Gbit/s. Only sets the time scale of exported waveforms;
    /// the simulation itself works in unit intervals.
    pub bitrate_gbps: f64,
    /// PRBS order; the pattern period is `2^order - 1` bits.
    pub prbs_order: u32,
    /// Samples per unit interval.
    pub samples_per_bit: usize,
    /// Width of the raised-cosine transition as a fraction of the unit
    /// interval, centered on the bit boundary.
    pub rise_time_fraction: f64,
    /// Relative (multiplicative) amplitude noise sigma.
    pub amplitude_noise_sigma: f64,
    /// Seed for the pattern start phase and the amplitude noise.
    pub rng_seed: u64,
}

impl Default for NrzConfig {
    fn default() -> Self {
        Self {
            bitrate_gbps: 10.0,
            prbs_order: 7,
            samples_per_bit: 32,
            rise_time_fraction: 0.25,
            amplitude_noise_sigma: 0.02,
            rng_seed: 0,
        }
    }
}

impl NrzConfig {
    pub fn validate(&self) -> Result<(), SignalError> {
        if self.samples_per_bit < 8 {
            return Err(SignalError::BadConfig("samples_per_bit must be >= 8"));
        }
        if !(0.0..0.5).contains(&self.rise_time_fraction) {
            return Err(SignalError::BadConfig(
                "rise_time_fraction must be in [0, 0.5)",
            ));
        }
        if self.amplitude_noise_sigma < 0.0 {
            return Err(SignalError::BadConfig(
                "amplitude_noise_sigma must be >= 0",
            ));
        }
        prbs_taps(self.prbs_order)?;
        Ok(())
    }

    /// Pattern period in bits.
    pub fn prbs_period(&self) -> usize {
        (1usize << self.prbs_order) - 1
    }
}

/// Sampled power waveform with its underlying bit pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub samples_per_bit: usize,
    pub bits: Vec<u8>,
}

impl Waveform {
    pub fn n_bits(&self) -> usize {
        self.bits.len()
    }

    /// Writes `t_ui, amplitude` rows (header included).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_ui,amplitude\n");
        for (i, s) in self.samples.iter().enumerate() {
            out.push_str(&format!(
                "{:.6},{:.9}\n",
                i as f64 / self.samples_per_bit as f64,
                s
            ));
        }
        out
    }
}

fn prbs_taps(order: u32) -> Result<(u32, u32), SignalError> {
    // standard maximal-length LFSR tap pairs
    Ok(match order {
        3 => (3, 2),
        4 => (4, 3),
        5 => (5, 3),
        6 => (6, 5),
        7 => (7, 6),
        9 => (9, 5),
        11 => (11, 9),
        15 => (15, 14),
        other => return Err(SignalError::UnsupportedPrbsOrder(other)),
    })
}

/// One period of the maximal-length PRBS for the given order, starting from
/// a nonzero state derived from `seed`.
pub fn prbs_sequence(order: u32, seed: u64) -> Result<Vec<u8>, SignalError> {
    let (t1, t2) = prbs_taps(order)?;
    let period = (1usize << order) - 1;
    let mask = (1u64 << order) - 1;
    let mut state = (seed & mask).max(1);
    let mut out = Vec::with_capacity(period);
    for _ in 0..period {
        let fb = ((state >> (t1 - 1)) ^ (state >> (t2 - 1))) & 1;
        state = ((state << 1) | fb) & mask;
        out.push((state & 1) as u8);
    }
    Ok(out)
}

/// Generates `n_bits` of NRZ at unit high level with raised-cosine
/// transitions and multiplicative amplitude noise.
///
/// Transitions are centered on bit boundaries: at the boundary itself the
/// waveform is halfway between the old and new level. The zero level carries
/// no noise since the noise is relative to the instantaneous amplitude.
pub fn generate_nrz(config: &NrzConfig, n_bits: usize) -> Result<Waveform, SignalError> {
    config.validate()?;
    let period = config.prbs_period();
    if n_bits < period {
        return Err(SignalError::TooFewBits {
            min: period,
            got: n_bits,
        });
    }
    let pattern = prbs_sequence(config.prbs_order, config.rng_seed)?;
    let bits: Vec<u8> = (0..n_bits).map(|i| pattern[i % period]).collect();

    let spb = config.samples_per_bit;
    let w = config.rise_time_fraction;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed.wrapping_mul(0x9e3779b97f4a7c15));
    let mut samples = Vec::with_capacity(n_bits * spb);

    for (k, &bit) in bits.iter().enumerate() {
        let prev = if k == 0 { bit } else { bits[k - 1] };
        let next = if k + 1 == n_bits { bit } else { bits[k + 1] };
        for s in 0..spb {
            let t = s as f64 / spb as f64; // sample phase inside the UI
            let ideal = if w > 0.0 && t < w / 2.0 {
                // tail of the transition at the leading boundary
                raised_cosine(prev as f64, bit as f64, (t + w / 2.0) / w)
            } else if w > 0.0 && t > 1.0 - w / 2.0 {
                // head of the transition at the trailing boundary
                raised_cosine(bit as f64, next as f64, (t - (1.0 - w / 2.0)) / w)
            } else {
                bit as f64
            };
            let noisy = if config.amplitude_noise_sigma > 0.0 {
                ideal * (1.0 + config.amplitude_noise_sigma * gauss(&mut rng))
            } else {
                ideal
            };
            samples.push(noisy);
        }
    }

    Ok(Waveform {
        samples,
        samples_per_bit: spb,
        bits,
    })
}

fn raised_cosine(from: f64, to: f64, x: f64) -> f64 {
    // x in [0, 1] across the transition window
    from + (to - from) * 0.5 * (1.0 - (std::f64::consts::PI * x).cos())
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
