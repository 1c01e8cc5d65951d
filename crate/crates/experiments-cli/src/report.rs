use instruments::{Bench, InputSelect};
use self_learning::TargetRouting;

use crate::RunError;

/// Transmission and crosstalk of a trained routing state, measured through
/// the instruments.
#[derive(Debug, Clone, PartialEq)]
pub struct CrosstalkReport {
    /// One row per routed input: (input, output, routed?, transmission dB
    /// relative to the launched power).
    pub matrix_db: Vec<(usize, usize, bool, f64)>,
    /// Worst over routed inputs of total off-target power over routed power,
    /// in dB.
    pub worst_crosstalk_db: f64,
    /// Contiguous wavelength band around the center where the worst-case
    /// crosstalk stays below the threshold; only measured with dispersion.
    pub band_nm: Option<(f64, f64)>,
    pub band_threshold_db: f64,
}

impl CrosstalkReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("input,output,routed,transmission_db\n");
        for &(i, o, routed, db) in &self.matrix_db {
            out.push_str(&format!("{i},{o},{routed},{db:.6}\n"));
        }
        out
    }
}

/// Measures the per-pair transmission matrix and worst-case crosstalk at the
/// center wavelength.
pub fn measure_crosstalk<B: Bench + ?Sized>(
    bench: &mut B,
    target: &TargetRouting,
    input_power_mw: &[f64],
) -> Result<CrosstalkReport, RunError> {
    let mut matrix = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for &(input, output) in target.routes() {
        bench.select_input(InputSelect::One(input))?;
        let frame = bench.read_powers()?;
        let powers = frame.powers().expect("power frame").to_vec();
        let routed = powers[output];
        let mut off = 0.0;
        for (port, &p) in powers.iter().enumerate() {
            matrix.push((
                input,
                port,
                port == output,
                10.0 * (p / input_power_mw[input]).max(1e-30).log10(),
            ));
            if port != output {
                off += p;
            }
        }
        if routed > 0.0 {
            worst = worst.max(10.0 * (off / routed).max(1e-30).log10());
        } else {
            worst = 0.0; // routed channel dark: report total failure
        }
    }
    Ok(CrosstalkReport {
        matrix_db: matrix,
        worst_crosstalk_db: worst,
        band_nm: None,
        band_threshold_db: f64::NAN,
    })
}

/// Worst-case crosstalk per wavelength over a grid, from per-pair spectra.
pub fn crosstalk_spectrum<B: Bench + ?Sized>(
    bench: &mut B,
    target: &TargetRouting,
    grid_nm: &[f64],
) -> Result<Vec<(f64, f64)>, RunError> {
    let n = bench.n_ports();
    // worst over inputs at each wavelength
    let mut worst = vec![f64::NEG_INFINITY; grid_nm.len()];
    for &(input, output) in target.routes() {
        bench.select_input(InputSelect::One(input))?;
        let mut per_port = Vec::with_capacity(n);
        for port in 0..n {
            let frame = bench.read_spectrum(port, grid_nm)?;
            let dbm: Vec<f64> = frame
                .spectrum()
                .expect("spectrum frame")
                .iter()
                .map(|p| p.power_dbm)
                .collect();
            per_port.push(dbm);
        }
        for (k, w) in worst.iter_mut().enumerate() {
            let routed_db = per_port[output][k];
            let off_mw: f64 = (0..n)
                .filter(|&p| p != output)
                .map(|p| 10f64.powf(per_port[p][k] / 10.0))
                .sum();
            let x = 10.0 * off_mw.max(1e-30).log10() - routed_db;
            *w = w.max(x);
        }
    }
    Ok(grid_nm.iter().copied().zip(worst).collect())
}

/// Largest contiguous band containing `center` where the crosstalk curve
/// stays below `threshold_db`.
pub fn band_below(
    curve: &[(f64, f64)],
    center_nm: f64,
    threshold_db: f64,
) -> Option<(f64, f64)> {
    let idx = curve
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 .0 - center_nm)
                .abs()
                .partial_cmp(&(b.1 .0 - center_nm).abs())
                .unwrap()
        })?
        .0;
    if curve[idx].1 >= threshold_db {
        return None;
    }
    let mut lo = idx;
    while lo > 0 && curve[lo - 1].1 < threshold_db {
        lo -= 1;
    }
    let mut hi = idx;
    while hi + 1 < curve.len() && curve[hi + 1].1 < threshold_db {
        hi += 1;
    }
    Some((curve[lo].0, curve[hi].0))
}
