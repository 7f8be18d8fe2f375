//! Temperature from the asymmetric thermal lineshape.

use serde::{Deserialize, Serialize};

use super::{thermal_transmission_closed_form, DriveParams, Method, TransmissionTrace};
use crate::error::{Error, Result};
use crate::sum::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Upper end of the search interval for `n̄`.
    pub max_mean: f64,
    /// Log-spaced samples of the initial scan (plus `n̄ = 0`).
    pub scan_points: usize,
    /// Relative width at which the golden-section search stops.
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_mean: 1e4,
            scan_points: 64,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub estimate: f64,
    /// `Σ(model − data)²` at the estimate.
    pub rss: f64,
    pub residual_norm: f64,
    /// `√(2s²/RSS″)` with `s² = RSS/(N − 1)`.
    pub uncertainty: f64,
    pub curvature: f64,
    /// Minimum at an end of the search interval.
    pub boundary_pinned: bool,
    pub converged: bool,
    pub evaluations: usize,
    pub methods: Vec<Method>,
}

struct Objective<'a> {
    trace: &'a TransmissionTrace,
    drive: &'a DriveParams,
    g: f64,
    evaluations: usize,
    methods: Vec<Method>,
}

impl Objective<'_> {
    fn rss(&mut self, n: f64) -> Result<f64> {
        self.evaluations += 1;
        let model = thermal_transmission_closed_form(n, self.drive, self.g, &self.trace.detunings)?;
        for m in &model.methods {
            if !self.methods.contains(m) {
                self.methods.push(*m);
            }
        }
        let r: Vec<f64> = model
            .trace
            .values
            .iter()
            .zip(&self.trace.values)
            .map(|(a, b)| (a - b) * (a - b))
            .collect();
        Ok(pairwise_sum(&r))
    }
}

/// Least-squares `n̄` of a thermal transmission trace: a log-spaced scan
/// brackets the minimum, golden-section search refines it.
pub fn fit_temperature(trace: &TransmissionTrace, drive: &DriveParams, g: f64, options: &FitOptions) -> Result<FitReport> {
    drive.validate()?;
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::param("g", "must be finite and > 0"));
    }
    if trace.len() < 20 {
        return Err(Error::param("trace", "needs at least 20 samples"));
    }
    if !(options.max_mean.is_finite() && options.max_mean > 1e-3) || options.scan_points < 3 {
        return Err(Error::param("options", "need max_mean > 1e-3 and scan_points >= 3"));
    }
    let mut obj = Objective {
        trace,
        drive,
        g,
        evaluations: 0,
        methods: Vec::new(),
    };

    let lo = 1e-3f64;
    let ratio = (options.max_mean / lo).ln() / (options.scan_points - 1) as f64;
    let mut xs = vec![0.0];
    xs.extend((0..options.scan_points).map(|k| lo * (ratio * k as f64).exp()));
    let fs = xs.iter().map(|&x| obj.rss(x)).collect::<Result<Vec<_>>>()?;
    let k = fs
        .iter()
        .enumerate()
        .fold(0, |best, (i, f)| if *f < fs[best] { i } else { best });
    let boundary_pinned = k == 0 || k == xs.len() - 1;
    if boundary_pinned {
        log::warn!("thermometry fit pinned at the search boundary n̄ = {}", xs[k]);
    }

    let (mut a, mut b) = (xs[k.saturating_sub(1)], xs[(k + 1).min(xs.len() - 1)]);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = obj.rss(c)?;
    let mut fd = obj.rss(d)?;
    let mut converged = false;
    for _ in 0..200 {
        if (b - a) <= options.tolerance * b.max(1.0) {
            converged = true;
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = obj.rss(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = obj.rss(d)?;
        }
    }
    if !converged {
        log::warn!("thermometry golden-section search did not converge");
    }
    let (mut estimate, mut best) = if fc <= fd { (c, fc) } else { (d, fd) };
    if fs[k] < best {
        estimate = xs[k];
        best = fs[k];
    }

    let h = (1e-4 * estimate).max(1e-6);
    let curvature = if estimate - h >= 0.0 {
        (obj.rss(estimate + h)? - 2.0 * best + obj.rss(estimate - h)?) / (h * h)
    } else {
        (best - 2.0 * obj.rss(estimate + h)? + obj.rss(estimate + 2.0 * h)?) / (h * h)
    };
    let s2 = best / (trace.len() - 1) as f64;
    let uncertainty = if curvature > 0.0 {
        (2.0 * s2 / curvature).sqrt()
    } else {
        log::warn!("non-positive curvature at the thermometry optimum: n̄ not identifiable");
        f64::INFINITY
    };
    Ok(FitReport {
        estimate,
        rss: best,
        residual_norm: best.sqrt(),
        uncertainty,
        curvature,
        boundary_pinned,
        converged,
        evaluations: obj.evaluations,
        methods: obj.methods,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driven::linear_grid;

    fn synthetic(n_th: f64, g: f64) -> TransmissionTrace {
        let grid = linear_grid(-2.0, 4.0, 121);
        thermal_transmission_closed_form(n_th, &DriveParams::unit(), g, &grid)
            .unwrap()
            .trace
    }

    #[test]
    fn recovers_noiseless_mean() {
        let t = synthetic(50.0, 0.01);
        let r = fit_temperature(&t, &DriveParams::unit(), 0.01, &FitOptions::default()).unwrap();
        assert!((r.estimate / 50.0 - 1.0).abs() < 5e-3, "{r:?}");
        assert!(r.curvature > 0.0);
        assert!(!r.boundary_pinned);
    }

    #[test]
    fn zero_temperature_fixed_point() {
        let t = synthetic(0.0, 0.01);
        let r = fit_temperature(&t, &DriveParams::unit(), 0.01, &FitOptions::default()).unwrap();
        assert!(r.estimate.abs() < 1e-3, "{r:?}");
    }

    #[test]
    fn too_short_trace_rejected() {
        let t = TransmissionTrace::new(vec![0.0, 1.0], vec![1.0, 0.5]).unwrap();
        assert!(fit_temperature(&t, &DriveParams::unit(), 0.01, &FitOptions::default()).is_err());
    }
}
