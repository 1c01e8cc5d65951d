use crate::nrz::Waveform;
use crate::SignalError;

/// One folded sample of an eye diagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyePoint {
    /// Position inside the unit interval, in `[0, 1)`.
    pub t_ui: f64,
    pub amplitude: f64,
    /// Decision of the segment this sample belongs to (1 or 0 at the
    /// sampling instant).
    pub label: u8,
}

/// Eye diagram: a waveform folded modulo one unit interval.
///
/// `nominal_amplitude` is the reference one-level against which the opening
/// is normalized; a standalone unit-high NRZ stream has nominal 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EyeTrace {
    pub points: Vec<EyePoint>,
    pub samples_per_bit: usize,
    pub nominal_amplitude: f64,
}

impl EyeTrace {
    /// Writes `t_ui, amplitude, label` rows (header included).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_ui,amplitude,label\n");
        for p in &self.points {
            out.push_str(&format!("{:.6},{:.9},{}\n", p.t_ui, p.amplitude, p.label));
        }
        out
    }
}

/// Folds a waveform into an eye diagram.
///
/// Each bit-long segment is labeled by the reference bit the waveform
/// carries for its sampling instant, the way a pattern-locked sampling
/// scope labels traces. For a mixed (crosstalk-laden) waveform the bits are
/// those of the channel under test, so the opening measures how cleanly
/// that channel's pattern survives.
pub fn fold_eye(waveform: &Waveform, nominal_amplitude: f64) -> Result<EyeTrace, SignalError> {
    let spb = waveform.samples_per_bit;
    if spb == 0 || waveform.samples.len() % spb != 0 {
        return Err(SignalError::NotBitAligned {
            len: waveform.samples.len(),
            spb,
        });
    }
    if waveform.samples.is_empty() {
        return Err(SignalError::EmptyEye);
    }
    let n_segments = waveform.samples.len() / spb;
    if waveform.bits.len() != n_segments {
        return Err(SignalError::NotBitAligned {
            len: waveform.samples.len(),
            spb,
        });
    }

    let mut points = Vec::with_capacity(waveform.samples.len());
    for seg in 0..n_segments {
        let label = waveform.bits[seg];
        for s in 0..spb {
            points.push(EyePoint {
                t_ui: s as f64 / spb as f64,
                amplitude: waveform.samples[seg * spb + s],
                label,
            });
        }
    }
    Ok(EyeTrace {
        points,
        samples_per_bit: spb,
        nominal_amplitude,
    })
}

/// Normalized eye-opening area.
///
/// The unit interval is divided into `samples_per_bit` bins; in each bin the
/// opening is `max(0, min(one-labeled amplitudes) - max(zero-labeled
/// amplitudes))`. The areas integrate over the interval and are divided by
/// the nominal amplitude, so a perfect unit square eye scores 1. An eye with
/// only one label present scores 0.
pub fn eye_opening_area(eye: &EyeTrace) -> Result<f64, SignalError> {
    if eye.points.is_empty() {
        return Err(SignalError::EmptyEye);
    }
    let spb = eye.samples_per_bit;
    let has_ones = eye.points.iter().any(|p| p.label == 1);
    let has_zeros = eye.points.iter().any(|p| p.label == 0);
    if !has_ones || !has_zeros {
        return Ok(0.0);
    }

    let mut min_one = vec![f64::INFINITY; spb];
    let mut max_zero = vec![f64::NEG_INFINITY; spb];
    for p in &eye.points {
        let bin = ((p.t_ui * spb as f64) as usize).min(spb - 1);
        if p.label == 1 {
            min_one[bin] = min_one[bin].min(p.amplitude);
        } else {
            max_zero[bin] = max_zero[bin].max(p.amplitude);
        }
    }

    let mut area = 0.0;
    for bin in 0..spb {
        if min_one[bin].is_finite() && max_zero[bin].is_finite() {
            area += (min_one[bin] - max_zero[bin]).max(0.0) / spb as f64;
        }
    }
    Ok(area / eye.nominal_amplitude)
}
