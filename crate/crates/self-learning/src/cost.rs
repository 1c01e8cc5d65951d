use instruments::{Bench, InputSelect};
use signal_lab::{eye_opening_area, NrzConfig};

use crate::SelfLearnError;

/// Normalized correlation `|a . b| / (|a| |b|)` of two non-negative vectors;
/// 1 for parallel vectors, 0 for orthogonal ones.
pub fn corr(a: &[f64], b: &[f64]) -> Result<f64, SelfLearnError> {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(SelfLearnError::ZeroVector);
    }
    let dot: f64 = a.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
    Ok(dot.abs() / (na * nb))
}

/// Desired routing: a partial permutation from input ports to output ports.
///
/// Each route contributes a target power column that is a standard unit
/// vector; the cost compares measured power distributions against these
/// columns, so it is blind to absolute power levels.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetRouting {
    n_ports: usize,
    routes: Vec<(usize, usize)>,
}

impl TargetRouting {
    pub fn new(n_ports: usize, routes: &[(usize, usize)]) -> Result<Self, SelfLearnError> {
        if routes.is_empty() {
            return Err(SelfLearnError::BadTarget("no routes given".into()));
        }
        let mut ins = std::collections::BTreeSet::new();
        let mut outs = std::collections::BTreeSet::new();
        for &(i, o) in routes {
            if i >= n_ports || o >= n_ports {
                return Err(SelfLearnError::BadTarget(format!(
                    "route {i}->{o} outside 0..{n_ports}"
                )));
            }
            if !ins.insert(i) {
                return Err(SelfLearnError::BadTarget(format!("input {i} routed twice")));
            }
            if !outs.insert(o) {
                return Err(SelfLearnError::BadTarget(format!(
                    "output {o} routed twice"
                )));
            }
        }
        let mut routes = routes.to_vec();
        routes.sort_unstable();
        Ok(Self { n_ports, routes })
    }

    pub fn n_ports(&self) -> usize {
        self.n_ports
    }

    /// Routes as (input, output) pairs, sorted by input.
    pub fn routes(&self) -> &[(usize, usize)] {
        &self.routes
    }

    /// Target power column for one routed input: `e_out`.
    pub fn column(&self, input: usize) -> Option<Vec<f64>> {
        let &(_, out) = self.routes.iter().find(|(i, _)| *i == input)?;
        let mut col = vec![0.0; self.n_ports];
        col[out] = 1.0;
        Some(col)
    }
}

/// Routing cost from already-collected measurements: the product over routed
/// inputs of the correlation between target and measured power columns.
///
/// Scaling any measured column by a positive constant leaves the value
/// unchanged, which is what makes the cost robust to unbalanced input power.
pub fn routing_cf_from_measurements(
    target: &TargetRouting,
    measured: &[(usize, Vec<f64>)],
) -> Result<f64, SelfLearnError> {
    let mut cf = 1.0;
    for (input, powers) in measured {
        let column = target
            .column(*input)
            .ok_or_else(|| SelfLearnError::BadTarget(format!("input {input} not routed")))?;
        let c = corr(&column, powers).map_err(|e| match e {
            SelfLearnError::ZeroVector => SelfLearnError::UndefinedCorrelation { input: *input },
            other => other,
        })?;
        cf *= c;
    }
    Ok(cf)
}

/// Measures the routing cost on the bench: opens each routed input in turn,
/// reads the power distribution, and multiplies the per-channel
/// correlations. Ranges over `[0, 1]`, with 1 for a perfect switch.
pub fn cf_routing<B: Bench + ?Sized>(
    bench: &mut B,
    target: &TargetRouting,
) -> Result<f64, SelfLearnError> {
    if target.n_ports() != bench.n_ports() {
        return Err(SelfLearnError::BadTarget(format!(
            "target is for {} ports, bench has {}",
            target.n_ports(),
            bench.n_ports()
        )));
    }
    let mut measured = Vec::with_capacity(target.routes().len());
    for &(input, _) in target.routes() {
        bench.select_input(InputSelect::One(input))?;
        let frame = bench.read_powers()?;
        let powers = frame
            .powers()
            .expect("read_powers returns a power frame")
            .to_vec();
        measured.push((input, powers));
    }
    routing_cf_from_measurements(target, &measured)
}

/// Eye-quality cost: the product of normalized eye-opening areas over the
/// monitored output ports, measured with every input carrying live traffic.
pub fn cf_eye<B: Bench + ?Sized>(
    bench: &mut B,
    ports: &[usize],
    signal: &NrzConfig,
    n_bits: usize,
) -> Result<f64, SelfLearnError> {
    if ports.is_empty() {
        return Err(SelfLearnError::BadTarget("no monitored ports".into()));
    }
    if bench.input_gates().iter().any(|g| !g) {
        return Err(SelfLearnError::InputsNotOpen);
    }
    let mut cf = 1.0;
    for &port in ports {
        let frame = bench.read_eye(port, signal, n_bits)?;
        let eye = frame.eye().expect("read_eye returns an eye frame");
        let area = eye_opening_area(eye).map_err(|e| SelfLearnError::Signal(e.to_string()))?;
        cf *= area;
    }
    Ok(cf)
}

/// Wavelength bands for the filter cost, in nm.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSpec {
    pub passband: (f64, f64),
    pub stopbands: Vec<(f64, f64)>,
}

impl BandSpec {
    pub fn validate(&self, grid: &[f64]) -> Result<(), SelfLearnError> {
        let check = |(lo, hi): (f64, f64), name: &str| -> Result<(), SelfLearnError> {
            if !(lo < hi) {
                return Err(SelfLearnError::BadBand(format!(
                    "{name} [{lo}, {hi}] is not ordered"
                )));
            }
            if !grid.iter().any(|&l| l >= lo && l <= hi) {
                return Err(SelfLearnError::BadBand(format!(
                    "{name} [{lo}, {hi}] contains no grid point"
                )));
            }
            Ok(())
        };
        check(self.passband, "passband")?;
        if self.stopbands.is_empty() {
            return Err(SelfLearnError::BadBand("no stopbands".into()));
        }
        for &sb in &self.stopbands {
            check(sb, "stopband")?;
            if sb.0 < self.passband.1 && self.passband.0 < sb.1 {
                return Err(SelfLearnError::BadBand(format!(
                    "stopband [{}, {}] overlaps passband",
                    sb.0, sb.1
                )));
            }
        }
        Ok(())
    }

    fn in_pass(&self, l: f64) -> bool {
        l >= self.passband.0 && l <= self.passband.1
    }

    fn in_stop(&self, l: f64) -> bool {
        self.stopbands.iter().any(|&(lo, hi)| l >= lo && l <= hi)
    }
}

/// Filter cost in dB: mean passband power minus mean stopband power, both
/// averaged in the dB domain over the grid points falling in each band.
/// Invariant under a constant dB offset of the whole spectrum.
pub fn cf_filter<B: Bench + ?Sized>(
    bench: &mut B,
    port: usize,
    bands: &BandSpec,
    lambda_grid_nm: &[f64],
) -> Result<f64, SelfLearnError> {
    bands.validate(lambda_grid_nm)?;
    let frame = bench.read_spectrum(port, lambda_grid_nm)?;
    let spectrum = frame.spectrum().expect("read_spectrum returns a spectrum");
    let mut pass = (0.0, 0usize);
    let mut stop = (0.0, 0usize);
    for p in spectrum {
        if bands.in_pass(p.lambda_nm) {
            pass.0 += p.power_dbm;
            pass.1 += 1;
        } else if bands.in_stop(p.lambda_nm) {
            stop.0 += p.power_dbm;
            stop.1 += 1;
        }
    }
    debug_assert!(pass.1 > 0 && stop.1 > 0, "validated bands are non-empty");
    Ok(pass.0 / pass.1 as f64 - stop.0 / stop.1 as f64)
}
