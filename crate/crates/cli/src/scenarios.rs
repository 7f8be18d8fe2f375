//! One function per scenario. Each returns its tables and a JSON summary;
//! nothing is written here.

use std::f64::consts::PI;
use std::path::Path;

use quadopt_core::closed::{
    displacement_variance, mean_displacement_envelope, mean_displacement_envelope_printed,
    mean_displacement_exact, oscillation_envelope, revival_times,
};
use quadopt_core::driven::{
    analytic_area, extract_statistics, fit_temperature, intensity_transmission, linear_grid, lineshape_area,
    shape_stats, thermal_direct_sum, thermal_transmission_closed_form, transmission, DriveParams, FitOptions,
    FitReport, Method, PhononDistribution, TransmissionTrace, DIRECT_SUM_TOL,
};
use quadopt_core::fock::make_state;
use quadopt_core::phase_space::{quadrature_series, snapshot_series, two_peak_structure, SnapshotOptions};
use quadopt_core::zpe::{feasibility_report, MultimodeConfig, Parity};
use quadopt_core::{StateSpec, SystemParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{
    bare_time_grid, DisplacementParams, LineshapeParams, Params, PeaksParams, PhaseSpaceParams, RunConfig,
    Scenario, ThermometryParams, VarianceParams, ZpeParams,
};
use crate::output::{Artifacts, Table};
use crate::RunError;

type Result<T> = std::result::Result<T, RunError>;

pub fn run(config: &RunConfig) -> Result<Artifacts> {
    match (&config.params, config.scenario) {
        (Params::Displacement(p), Scenario::Fig1) => fig1(p),
        (Params::Displacement(p), _) => custom(p),
        (Params::Variance(p), _) => fig2(p),
        (Params::PhaseSpace(p), _) => phase_space(p),
        (Params::Peaks(p), _) => fig5(p),
        (Params::Lineshape(p), _) => fig6(p),
        (Params::Zpe(p), _) => zpe_report(p),
        (Params::Thermometry(p), _) => thermometry(p, config.seed),
    }
}

fn in_periods(times: &[f64]) -> Vec<f64> {
    times.iter().map(|t| t / (2.0 * PI)).collect()
}

/// `(t, |v|)` at the largest `|v|` with `lo ≤ t ≤ hi`.
fn abs_peak(times: &[f64], values: &[f64], lo: f64, hi: f64) -> Option<(f64, f64)> {
    times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .map(|(t, v)| (*t, v.abs()))
        .fold(None, |best, x| match best {
            Some(b) if b.1 >= x.1 => Some(b),
            _ => Some(x),
        })
}

fn rms_deviation(times: &[f64], a: &[f64], b: &[f64], end: f64) -> f64 {
    let d: Vec<f64> = times
        .iter()
        .zip(a.iter().zip(b))
        .filter(|(t, _)| **t <= end)
        .map(|(_, (x, y))| (x - y) * (x - y))
        .collect();
    (d.iter().sum::<f64>() / d.len().max(1) as f64).sqrt()
}

pub fn fig1(p: &DisplacementParams) -> Result<Artifacts> {
    let sys = SystemParams::with_coupling(p.coupling, p.photon_cutoff, 1)?;
    let rt = revival_times(&sys, p.alpha)?;
    let times = bare_time_grid(p.revivals * rt.revival / (2.0 * PI), p.samples_per_period);
    let exact = mean_displacement_exact(&sys, p.alpha, p.beta, &times)?;
    let envelope = mean_displacement_envelope(&sys, p.alpha, p.beta, &times)?;
    let printed = mean_displacement_envelope_printed(&sys, p.alpha, p.beta, &times)?;
    let running = oscillation_envelope(&times, &exact, 2.0 * PI);

    let amp0 = 2.0 * p.beta.norm();
    let collapse = times
        .iter()
        .zip(&running)
        .find(|(_, e)| **e < 0.1 * amp0)
        .map(|(t, _)| *t);
    let revival = abs_peak(&times, &exact, 0.5 * rt.revival, 1.5 * rt.revival);
    let scale = if amp0 > 0.0 { amp0 } else { 1.0 };
    let summary = json!({
        "revival_time": rt.revival,
        "revival_time_periods": rt.revival / (2.0 * PI),
        "collapse_time": rt.collapse,
        "carrier_freq": rt.carrier_freq,
        "initial_amplitude": amp0,
        "collapsed_below_10_percent_at": collapse,
        "collapsed_below_10_percent_at_periods": collapse.map(|t| t / (2.0 * PI)),
        "revival_peak_time": revival.map(|r| r.0),
        "revival_peak_periods": revival.map(|r| r.0 / (2.0 * PI)),
        "revival_peak_value": revival.map(|r| r.1),
        "envelope_rms_relative": rms_deviation(&times, &envelope, &exact, 2.0 * rt.revival) / scale,
        "printed_envelope_rms_relative": rms_deviation(&times, &printed, &exact, 2.0 * rt.revival) / scale,
    });
    let table = Table::new("displacement")
        .with("bare_periods", in_periods(&times))
        .with("omega_t", times)
        .with("x_exact", exact)
        .with("x_envelope", envelope)
        .with("x_envelope_printed", printed)
        .with("x_running_max", running);
    Ok(Artifacts {
        tables: vec![table],
        summary,
        texts: Vec::new(),
    })
}

pub fn fig2(p: &VarianceParams) -> Result<Artifacts> {
    let sys = SystemParams::with_coupling(p.coupling, p.photon_cutoff, 1)?;
    let times = bare_time_grid(p.periods, p.samples_per_period);
    let v = displacement_variance(&sys, &p.cavity, p.n_th, &times)?;
    let diff: Vec<f64> = v.printed.iter().zip(&v.exact).map(|(a, b)| a - b).collect();
    let revival = match p.cavity {
        StateSpec::Coherent { alpha } => revival_times(&sys, alpha).ok(),
        _ => None,
    };
    let summary = json!({
        "expected_initial": 2.0 * p.n_th + 1.0,
        "exact_initial": v.exact[0],
        "printed_initial": v.printed[0],
        "max_abs_printed_minus_exact": diff.iter().fold(0.0f64, |m, d| m.max(d.abs())),
        "revival_time": revival.map(|r| r.revival),
        "note": "var_printed is the closed form as commonly printed; it disagrees with the exact sector sum already at t = 0 and is kept for comparison only",
    });
    let table = Table::new("variance")
        .with("bare_periods", in_periods(&times))
        .with("omega_t", times)
        .with("var_exact", v.exact)
        .with("var_printed", v.printed)
        .with("printed_minus_exact", diff);
    Ok(Artifacts {
        tables: vec![table],
        summary,
        texts: Vec::new(),
    })
}

/// Index minimising the distance to the initial variances within
/// `[lo, hi]` periods.
fn best_return(series: &[quadopt_core::phase_space::QuadratureSample], lo: f64, hi: f64) -> Option<(f64, f64)> {
    let first = series.first()?;
    series
        .iter()
        .filter(|s| s.periods >= lo && s.periods <= hi)
        .map(|s| {
            let d = (s.var_x - first.var_x).abs() + (s.var_p - first.var_p).abs();
            (s.periods, d)
        })
        .fold(None, |best: Option<(f64, f64)>, x| match best {
            Some(b) if b.1 <= x.1 => Some(b),
            _ => Some(x),
        })
}

pub fn phase_space(p: &PhaseSpaceParams) -> Result<Artifacts> {
    let sys = SystemParams::with_coupling(p.coupling, p.photon_cutoff, p.phonon_cutoff)?;
    let options = SnapshotOptions {
        grid: p.grid(),
        period: p.period,
    };
    let period = p.period.period(&sys, &p.photon)?;
    let snaps = snapshot_series(&sys, &p.photon, &p.phonon, &p.snapshots, &options)?;
    let ks = linear_grid(0.0, p.series_end, p.series_points);
    let series = quadrature_series(&sys, &p.photon, &p.phonon, &ks, &p.period)?;
    let initial = make_state(&p.photon, p.photon_cutoff)?.populations();

    let mut tables = Vec::new();
    let mut reports = Vec::new();
    let mut marginal_dev = 0.0f64;
    let mut dips = Vec::new();
    for (k, s) in snaps.iter().enumerate() {
        let dev = s
            .photon_marginal
            .iter()
            .zip(&initial)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        marginal_dev = marginal_dev.max(dev);
        let (x, y) = s.q.real_axis_profile()?;
        let peaks = two_peak_structure(&x, &y);
        dips.push(peaks.dip_depth);
        let (at, qmax) = s.q.max();
        reports.push(json!({
            "table": format!("q_{k:02}"),
            "periods": s.periods,
            "time": s.time,
            "var_x": s.var_x,
            "var_p": s.var_p,
            "phonon_purity": s.phonon_purity,
            "q_normalization": s.q.normalization,
            "q_max": qmax,
            "q_argmax": [at.re, at.im],
            "real_axis_two_peak": peaks,
            "photon_marginal_max_deviation": dev,
            "worst_leak": s.worst_leak,
        }));

        let (re, im) = (s.q.re_axis(), s.q.im_axis());
        let mut cre = Vec::with_capacity(s.q.values.len());
        let mut cim = Vec::with_capacity(s.q.values.len());
        for y in &im {
            for x in &re {
                cre.push(*x);
                cim.push(*y);
            }
        }
        tables.push(
            Table::new(format!("q_{k:02}"))
                .with("re_alpha", cre)
                .with("im_alpha", cim)
                .with("q", s.q.values.clone()),
        );
    }
    let summary_table = Table::new("snapshots")
        .with("periods", snaps.iter().map(|s| s.periods).collect())
        .with("omega_t", snaps.iter().map(|s| s.time).collect())
        .with("var_x", snaps.iter().map(|s| s.var_x).collect())
        .with("var_p", snaps.iter().map(|s| s.var_p).collect())
        .with("phonon_purity", snaps.iter().map(|s| s.phonon_purity).collect())
        .with("q_normalization", snaps.iter().map(|s| s.q.normalization).collect())
        .with("real_axis_dip_depth", dips);
    let quad_table = Table::new("quadratures")
        .with("periods", series.iter().map(|s| s.periods).collect())
        .with("omega_t", series.iter().map(|s| s.time).collect())
        .with("var_x", series.iter().map(|s| s.var_x).collect())
        .with("var_p", series.iter().map(|s| s.var_p).collect())
        .with("phonon_purity", series.iter().map(|s| s.phonon_purity).collect());
    tables.insert(0, quad_table);
    tables.insert(0, summary_table);

    let near_one = best_return(&series, 0.75, 1.25);
    let near_half = best_return(&series, 0.3, 0.7);
    let summary = json!({
        "effective_period": period,
        "snapshots": reports,
        "photon_marginal_max_deviation": marginal_dev,
        "variance_return_near_one_period": near_one.map(|r| json!({ "periods": r.0, "distance": r.1 })),
        "variance_return_near_half_period": near_half.map(|r| json!({ "periods": r.0, "distance": r.1 })),
    });
    Ok(Artifacts {
        tables,
        summary,
        texts: Vec::new(),
    })
}

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    0.5 * (0..n)
        .map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

fn drive_of(drive: f64, kappa: f64, kappa_e: f64) -> Result<DriveParams> {
    Ok(DriveParams::new(0.0, drive, kappa, kappa_e)?)
}

pub fn fig5(p: &PeaksParams) -> Result<Artifacts> {
    let drive = drive_of(p.drive, p.kappa, p.kappa_e)?;
    let dist = p.distribution.build()?;
    let points = ((p.delta_max - p.delta_min) / p.grid_step).round() as usize + 1;
    let grid = linear_grid(p.delta_min, p.delta_max, points);
    let step = grid[1] - grid[0];
    let trace = transmission(&dist, &drive, p.coupling, &grid)?;
    let ex = extract_statistics(&trace, &drive, p.coupling)?;

    let truth = dist.probs();
    let raw_total: f64 = ex.raw.iter().sum();
    let raw: Vec<f64> = ex.raw.iter().map(|v| v / raw_total).collect();
    let extracted = ex.distribution.probs();
    let sectors = extracted.len().max(truth.len());
    let pad = |v: &[f64]| (0..sectors).map(|k| v.get(k).copied().unwrap_or(0.0)).collect::<Vec<_>>();
    let position_error = ex
        .peaks
        .iter()
        .map(|pk| (pk.position - 2.0 * p.coupling * pk.sector as f64).abs())
        .fold(0.0f64, f64::max);
    let area = lineshape_area(&trace);

    let summary = json!({
        "grid_step": step,
        "peaks_found": ex.peaks.len(),
        "max_peak_position_error": position_error,
        "peak_position_error_in_steps": position_error / step,
        "total_variation_extracted": total_variation(extracted, truth),
        "total_variation_raw_heights": total_variation(&raw, truth),
        "refinement_sweeps": ex.sweeps,
        "mean_extracted": ex.distribution.mean(),
        "mean_true": dist.mean(),
        "area": area,
        "analytic_area": analytic_area(&dist, &drive, p.coupling),
    });
    let stats = Table::new("statistics")
        .with("n", (0..sectors).map(|n| n as f64).collect())
        .with("p_true", pad(truth))
        .with("p_extracted", pad(extracted))
        .with("p_raw_heights", pad(&raw))
        .with("transmission_at_2gn", pad(&ex.sector_heights));
    let peaks = Table::new("peaks")
        .with("sector", ex.peaks.iter().map(|pk| pk.sector as f64).collect())
        .with("position", ex.peaks.iter().map(|pk| pk.position).collect())
        .with("expected_position", ex.peaks.iter().map(|pk| 2.0 * p.coupling * pk.sector as f64).collect())
        .with("height", ex.peaks.iter().map(|pk| pk.height).collect())
        .with("prominence", ex.peaks.iter().map(|pk| pk.prominence).collect());
    let t = Table::new("transmission")
        .with("detuning_over_kappa", trace.detunings)
        .with("transmission", trace.values);
    Ok(Artifacts {
        tables: vec![t, peaks, stats],
        summary,
        texts: Vec::new(),
    })
}

fn method_counts(methods: &[Method]) -> Value {
    let count = |m: Method| methods.iter().filter(|x| **x == m).count();
    json!({
        "gauss_series": count(Method::GaussSeries),
        "connection": count(Method::Connection),
        "log_connection": count(Method::LogConnection),
        "direct_sum": count(Method::DirectSum),
    })
}

pub fn fig6(p: &LineshapeParams) -> Result<Artifacts> {
    let drive = drive_of(p.drive, p.kappa, p.kappa_e)?;
    let g = p.coupling;
    let grid = linear_grid(p.delta_min, p.delta_max, p.points);
    let thermal = thermal_transmission_closed_form(p.mean, &drive, g, &grid)?;
    let direct: Vec<f64> = grid
        .par_iter()
        .map(|&d| Ok(thermal_direct_sum(p.mean, &drive.with_detuning(d), g, DIRECT_SUM_TOL)?.transmission))
        .collect::<Result<_>>()?;
    let coherent_dist = PhononDistribution::coherent(p.mean)?;
    let coherent = transmission(&coherent_dist, &drive, g, &grid)?;
    let thermal_intensity = intensity_transmission(&PhononDistribution::thermal(p.mean)?, &drive, g, &grid)?;

    let rel = thermal
        .trace
        .values
        .iter()
        .zip(&direct)
        .map(|(a, b)| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE))
        .fold(0.0f64, f64::max);
    let th_shape = shape_stats(&thermal.trace)?;
    let co_shape = shape_stats(&coherent)?;
    let summary = json!({
        "thermal_shape": th_shape,
        "coherent_shape": co_shape,
        "thermal_area": lineshape_area(&thermal.trace),
        "coherent_area": lineshape_area(&coherent),
        "coherent_analytic_area": analytic_area(&coherent_dist, &drive, g),
        "thermal_intensity_area": lineshape_area(&thermal_intensity),
        "closed_form_max_relative_deviation_from_direct_sum": rel,
        "closed_form_methods": method_counts(&thermal.methods),
    });
    let table = Table::new("transmission")
        .with("detuning_over_kappa", grid)
        .with("thermal", thermal.trace.values)
        .with("thermal_direct_sum", direct)
        .with("coherent", coherent.values)
        .with("thermal_intensity", thermal_intensity.values);
    Ok(Artifacts {
        tables: vec![table],
        summary,
        texts: Vec::new(),
    })
}

pub fn zpe_report(p: &ZpeParams) -> Result<Artifacts> {
    let config = MultimodeConfig {
        modes: p.modes.clone(),
        mech_linewidth: p.linewidth,
        residual: p.residual.clone(),
    };
    let report = feasibility_report(p.mech_freq, &config)?;
    let even: Vec<f64> = p
        .modes
        .iter()
        .filter(|m| m.parity == Parity::Even)
        .map(|m| m.coupling)
        .collect();
    let g0 = if even.is_empty() {
        0.0
    } else {
        even.iter().sum::<f64>() / even.len() as f64
    };
    let sweep = p
        .mode_counts
        .iter()
        .map(|&n| feasibility_report(p.mech_freq, &MultimodeConfig::uniform_even(n, g0, p.linewidth)?))
        .collect::<quadopt_core::Result<Vec<_>>>()?;
    let table = Table::new("mode_scaling")
        .with("even_modes", p.mode_counts.iter().map(|n| *n as f64).collect())
        .with("g_total", sweep.iter().map(|r| r.g_total).collect())
        .with("exact_shift", sweep.iter().map(|r| r.exact_shift).collect())
        .with("vacuum_dressed_shift", sweep.iter().map(|r| r.vacuum_dressed_shift).collect())
        .with("ratio_to_linewidth", sweep.iter().map(|r| r.ratio).collect())
        .with("feasible", sweep.iter().map(|r| if r.feasible { 1.0 } else { 0.0 }).collect());
    let smallest = sweep.iter().zip(&p.mode_counts).find(|(r, _)| r.feasible).map(|(_, n)| *n);
    let summary = json!({
        "report": report,
        "scaling_coupling": g0,
        "smallest_feasible_mode_count": smallest,
    });
    Ok(Artifacts {
        tables: vec![table],
        summary,
        texts: vec![("report".into(), report.to_text())],
    })
}

/// Reads `detuning_over_kappa,transmission` rows, skipping `#` comments and
/// a header line.
pub fn read_trace(path: &Path) -> Result<TransmissionTrace> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let bad = |line: usize, why: &str| RunError::Input(format!("{}:{line}: {why}", path.display()));
    let (mut x, mut y) = (Vec::new(), Vec::new());
    let mut columns = (0usize, 1usize);
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let nums: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
        match nums {
            Some(v) => {
                let (a, b) = columns;
                if v.len() <= a.max(b) {
                    return Err(bad(i + 1, "too few columns"));
                }
                x.push(v[a]);
                y.push(v[b]);
            }
            None if !header_seen && x.is_empty() => {
                header_seen = true;
                let find = |name: &str| fields.iter().position(|f| *f == name);
                match (find("detuning_over_kappa"), find("transmission")) {
                    (Some(a), Some(b)) => columns = (a, b),
                    _ => return Err(bad(i + 1, "header needs detuning_over_kappa and transmission")),
                }
            }
            None => return Err(bad(i + 1, "non-numeric value")),
        }
    }
    TransmissionTrace::new(x, y).map_err(|e| RunError::Input(format!("{}: {e}", path.display())))
}

fn fit_json(r: &FitReport) -> Value {
    json!({
        "estimate": r.estimate,
        "rss": r.rss,
        "residual_norm": r.residual_norm,
        "uncertainty": r.uncertainty,
        "curvature": r.curvature,
        "boundary_pinned": r.boundary_pinned,
        "converged": r.converged,
        "evaluations": r.evaluations,
        "methods": r.methods,
    })
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Multiplicative Gaussian noise `y(1 + σξ)`, one draw per row, generated
/// sequentially from `seed`.
pub fn noisy_copies(clean: &[f64], sigma: f64, draws: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (0..draws)
        .map(|_| clean.iter().map(|v| v * (1.0 + sigma * normal.sample(&mut rng))).collect())
        .collect()
}

pub fn thermometry(p: &ThermometryParams, seed: u64) -> Result<Artifacts> {
    let drive = drive_of(p.drive, p.kappa, p.kappa_e)?;
    let g = p.coupling;
    let options = FitOptions {
        max_mean: p.max_mean,
        ..FitOptions::default()
    };

    if let Some(path) = &p.trace {
        let trace = read_trace(path)?;
        let fit = fit_temperature(&trace, &drive, g, &options)?;
        let model = thermal_transmission_closed_form(fit.estimate, &drive, g, &trace.detunings)?;
        let table = Table::new("fit")
            .with("detuning_over_kappa", trace.detunings.clone())
            .with("transmission", trace.values.clone())
            .with("model", model.trace.values);
        return Ok(Artifacts {
            tables: vec![table],
            summary: json!({ "source": path.display().to_string(), "fit": fit_json(&fit) }),
            texts: Vec::new(),
        });
    }

    let grid = linear_grid(p.delta_min, p.delta_max, p.points);
    let clean = thermal_transmission_closed_form(p.n_th, &drive, g, &grid)?.trace;
    let noiseless = fit_temperature(&clean, &drive, g, &options)?;
    let noisy = noisy_copies(&clean.values, p.noise, p.draws, seed);
    let fits = noisy
        .par_iter()
        .map(|v| {
            let t = TransmissionTrace::new(grid.clone(), v.clone())?;
            fit_temperature(&t, &drive, g, &options)
        })
        .collect::<quadopt_core::Result<Vec<_>>>()?;
    let estimates: Vec<f64> = fits.iter().map(|f| f.estimate).collect();
    let med = median(&estimates);
    let model = thermal_transmission_closed_form(noiseless.estimate, &drive, g, &grid)?;
    let rel = |x: f64| if p.n_th > 0.0 { (x / p.n_th - 1.0).abs() } else { x.abs() };

    let summary = json!({
        "true_mean": p.n_th,
        "noiseless_fit": fit_json(&noiseless),
        "noiseless_relative_error": rel(noiseless.estimate),
        "noise": p.noise,
        "draws": p.draws,
        "median_estimate": med,
        "median_relative_error": rel(med),
        "boundary_pinned_draws": fits.iter().filter(|f| f.boundary_pinned).count(),
    });
    let trace_table = Table::new("trace")
        .with("detuning_over_kappa", grid)
        .with("transmission", clean.values)
        .with("noisy_first_draw", noisy.first().cloned().unwrap_or_default())
        .with("model_at_noiseless_fit", model.trace.values);
    let draws = Table::new("draws")
        .with("draw", (0..fits.len()).map(|k| k as f64).collect())
        .with("estimate", estimates)
        .with("uncertainty", fits.iter().map(|f| f.uncertainty).collect())
        .with("rss", fits.iter().map(|f| f.rss).collect());
    Ok(Artifacts {
        tables: vec![trace_table, draws],
        summary,
        texts: Vec::new(),
    })
}

pub fn custom(p: &DisplacementParams) -> Result<Artifacts> {
    let sys = SystemParams::with_coupling(p.coupling, p.photon_cutoff, 1)?;
    let times = bare_time_grid(p.periods, p.samples_per_period);
    let exact = mean_displacement_exact(&sys, p.alpha, p.beta, &times)?;
    let free: Vec<f64> = times
        .iter()
        .map(|t| 2.0 * (p.beta.re * t.cos() + p.beta.im * t.sin()))
        .collect();
    let var = displacement_variance(&sys, &StateSpec::Coherent { alpha: p.alpha }, p.n_th, &times)?;
    let revival = if p.coupling > 0.0 && p.alpha.norm() > 0.0 {
        Some(revival_times(&sys, p.alpha)?)
    } else {
        None
    };
    let max_free_dev = exact
        .iter()
        .zip(&free)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let mut table = Table::new("displacement")
        .with("bare_periods", in_periods(&times))
        .with("omega_t", times.clone())
        .with("x_exact", exact)
        .with("x_free", free);
    if revival.is_some() {
        table = table.with("x_envelope", mean_displacement_envelope(&sys, p.alpha, p.beta, &times)?);
    }
    table = table.with("var_exact", var.exact).with("var_printed", var.printed);
    let summary = json!({
        "max_abs_deviation_from_free_oscillator": max_free_dev,
        "revival_time": revival.map(|r| r.revival),
        "collapse_time": revival.map(|r| r.collapse),
    });
    Ok(Artifacts {
        tables: vec![table],
        summary,
        texts: Vec::new(),
    })
}
