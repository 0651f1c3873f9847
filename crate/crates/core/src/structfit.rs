//! Secondary-structure analysis of the Amide I band.
//!
//! The chain is: optional reference subtraction, linear baseline correction,
//! Savitzky–Golay second derivative, band seeding from the maxima of the
//! normalised −d²A/dν̃², a bounded least-squares fit of one Gaussian per
//! seed, and interval-based assignment of each fitted band to a structure.
//! Component shares are analytic Gaussian areas over their sum.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectra::{AxisUnit, Spectrum, SpectrumKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("window [{lo}, {hi}] lies outside the spectrum axis [{axis_lo}, {axis_hi}]")]
    Range {
        lo: f64,
        hi: f64,
        axis_lo: f64,
        axis_hi: f64,
    },
    #[error("axis spacing is not uniform (deviation {0:e} relative); resample first")]
    NonUniform(f64),
    #[error("invalid Savitzky-Golay parameters: {0}")]
    SavitzkyGolay(String),
    #[error("seed {seed} cm-1 lies outside the band window [{lo}, {hi}]")]
    Seed { seed: f64, lo: f64, hi: f64 },
    #[error("no seeds to fit")]
    NoSeeds,
    #[error("band window [{lo}, {hi}] holds {points} points; need at least {needed}")]
    EmptyWindow {
        lo: f64,
        hi: f64,
        points: usize,
        needed: usize,
    },
    #[error("fit did not converge in {iterations} iterations; best residual rms {best_rms:e}")]
    NonConvergence { iterations: usize, best_rms: f64 },
    #[error("all fitted amplitudes are zero")]
    ZeroArea,
    #[error("assignment table intervals [{a_lo}, {a_hi}) and [{b_lo}, {b_hi}) overlap")]
    OverlappingAssignments {
        a_lo: f64,
        a_hi: f64,
        b_lo: f64,
        b_hi: f64,
    },
    #[error("invalid input: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    AlphaHelix,
    BetaSheet,
    BetaTurn,
    RandomCoil,
    Unassigned,
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Structure::AlphaHelix => "alpha_helix",
            Structure::BetaSheet => "beta_sheet",
            Structure::BetaTurn => "beta_turn",
            Structure::RandomCoil => "random_coil",
            Structure::Unassigned => "unassigned",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakComponent {
    pub center_cm1: f64,
    pub amplitude: f64,
    pub sigma_cm1: f64,
    pub assignment: Structure,
    pub area: f64,
    pub area_percent: f64,
}

impl PeakComponent {
    pub fn eval(&self, x: f64) -> f64 {
        gaussian(x, self.center_cm1, self.amplitude, self.sigma_cm1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub components: Vec<PeakComponent>,
    pub fit_residual_rms: f64,
    pub band_window_cm1: [f64; 2],
    pub iterations: usize,
    #[serde(default)]
    pub provenance: BTreeMap<String, String>,
}

impl StructureReport {
    /// Table-shaped CSV: position, assignment, percent.
    pub fn to_table_csv(&self) -> String {
        let mut out = String::from("position_cm1,assignment,percent\n");
        for c in &self.components {
            out.push_str(&format!(
                "{},{},{}\n",
                c.center_cm1, c.assignment, c.area_percent
            ));
        }
        out
    }

    /// Data, model, residual and per-component curves over the band window.
    pub fn diagnostics_csv(&self, s: &Spectrum) -> String {
        let mut out = String::from("wavenumber_cm1,data,model,residual");
        for i in 0..self.components.len() {
            out.push_str(&format!(",component_{}", i + 1));
        }
        out.push('\n');
        let [lo, hi] = self.band_window_cm1;
        for (&x, &y) in s.axis.iter().zip(&s.values) {
            if x < lo || x > hi {
                continue;
            }
            let parts: Vec<f64> = self.components.iter().map(|c| c.eval(x)).collect();
            let model: f64 = parts.iter().sum();
            out.push_str(&format!("{x},{y},{model},{}", y - model));
            for p in parts {
                out.push_str(&format!(",{p}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn gaussian(x: f64, center: f64, amplitude: f64, sigma: f64) -> f64 {
    let z = (x - center) / sigma;
    amplitude * (-0.5 * z * z).exp()
}

fn check_window(s: &Spectrum, window: [f64; 2]) -> Result<(), FitError> {
    let (axis_lo, axis_hi) = s.range();
    if !(window[0] < window[1]) || window[0] < axis_lo || window[1] > axis_hi {
        return Err(FitError::Range {
            lo: window[0],
            hi: window[1],
            axis_lo,
            axis_hi,
        });
    }
    Ok(())
}

/// Subtracts `scale × reference`, interpolated onto the spectrum axis.
pub fn subtract_reference(
    s: &Spectrum,
    reference: &Spectrum,
    scale: f64,
) -> Result<Spectrum, FitError> {
    let mut out = s.clone();
    for (x, v) in out.axis.iter().zip(out.values.iter_mut()) {
        let r = reference
            .interpolate(*x)
            .map_err(|e| FitError::Invalid(format!("reference spectrum: {e}")))?;
        *v -= scale * r;
    }
    Ok(out)
}

/// Removes the straight line through the values at the window endpoints.
pub fn baseline_correct(s: &Spectrum, window: [f64; 2]) -> Result<Spectrum, FitError> {
    check_window(s, window)?;
    let interp = |x| {
        s.interpolate(x)
            .map_err(|e| FitError::Invalid(e.to_string()))
    };
    let (y0, y1) = (interp(window[0])?, interp(window[1])?);
    let slope = (y1 - y0) / (window[1] - window[0]);
    let mut out = s.clone();
    for (x, v) in out.axis.iter().zip(out.values.iter_mut()) {
        *v -= y0 + slope * (x - window[0]);
    }
    Ok(out)
}

/// Savitzky–Golay second-derivative convolution weights for unit spacing.
pub fn savitzky_golay_weights(points: usize, order: usize) -> Result<Vec<f64>, FitError> {
    if points < 5 || points.is_multiple_of(2) {
        return Err(FitError::SavitzkyGolay(format!(
            "window must be odd and >= 5, got {points}"
        )));
    }
    if order < 2 || order >= points {
        return Err(FitError::SavitzkyGolay(format!(
            "order must satisfy 2 <= order < window, got {order}"
        )));
    }
    let m = (points / 2) as i64;
    let a = DMatrix::from_fn(points, order + 1, |i, j| {
        ((i as i64 - m) as f64).powi(j as i32)
    });
    let ata = a.transpose() * &a;
    let inv = ata
        .try_inverse()
        .ok_or_else(|| FitError::SavitzkyGolay("singular normal matrix".into()))?;
    let c = inv * a.transpose();
    Ok((0..points).map(|k| 2.0 * c[(2, k)]).collect())
}

/// Savitzky–Golay second derivative. The half-window at each edge is dropped.
pub fn second_derivative(s: &Spectrum, points: usize, order: usize) -> Result<Spectrum, FitError> {
    let weights = savitzky_golay_weights(points, order)?;
    let n = s.len();
    if n < points {
        return Err(FitError::SavitzkyGolay(format!(
            "spectrum has {n} points, fewer than the window {points}"
        )));
    }
    let h = (s.axis[n - 1] - s.axis[0]) / (n - 1) as f64;
    let worst = s
        .axis
        .windows(2)
        .map(|w| ((w[1] - w[0]) - h).abs() / h.abs())
        .fold(0.0, f64::max);
    if worst > 1e-6 {
        return Err(FitError::NonUniform(worst));
    }
    let m = points / 2;
    let h2 = h * h;
    let mut values = Vec::with_capacity(n - 2 * m);
    for i in m..n - m {
        let window = &s.values[i - m..=i + m];
        let mut acc = 0.0;
        let mut mag = 0.0;
        for (w, y) in weights.iter().zip(window) {
            acc += w * y;
            mag += (w * y).abs();
        }
        // Results inside the rounding bound of the sum are zero.
        if acc.abs() <= 64.0 * f64::EPSILON * mag {
            acc = 0.0;
        }
        values.push(acc / h2);
    }
    let mut out = Spectrum::new(
        s.axis_unit,
        SpectrumKind::SecondDerivative,
        s.axis[m..n - m].to_vec(),
        values,
    )
    .map_err(|e| FitError::Invalid(e.to_string()))?;
    out.metadata = s.metadata.clone();
    out.metadata.insert("sg_points".into(), points.to_string());
    out.metadata.insert("sg_order".into(), order.to_string());
    Ok(out)
}

/// Band centres from the local maxima of the max-normalised −d² inside
/// `window`, keeping those with prominence at least `min_prominence`.
pub fn seed_peaks(
    d2: &Spectrum,
    window: [f64; 2],
    min_prominence: f64,
) -> Result<Vec<f64>, FitError> {
    d2.require_kind(SpectrumKind::SecondDerivative)
        .map_err(|e| FitError::Invalid(e.to_string()))?;
    let idx: Vec<usize> = (0..d2.len())
        .filter(|&i| d2.axis[i] >= window[0] && d2.axis[i] <= window[1])
        .collect();
    if idx.len() < 3 {
        return Ok(Vec::new());
    }
    let neg: Vec<f64> = idx.iter().map(|&i| -d2.values[i]).collect();
    let top = neg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(top > 0.0) {
        return Ok(Vec::new());
    }
    let u: Vec<f64> = neg.iter().map(|v| v / top).collect();
    let n = u.len();
    let mut seeds = Vec::new();
    for i in 1..n - 1 {
        if !(u[i] > u[i - 1] && u[i] >= u[i + 1] && u[i] > 0.0) {
            continue;
        }
        let mut left_min = u[i];
        for j in (0..i).rev() {
            if u[j] > u[i] {
                break;
            }
            left_min = left_min.min(u[j]);
        }
        let mut right_min = u[i];
        for &v in &u[i + 1..] {
            if v > u[i] {
                break;
            }
            right_min = right_min.min(v);
        }
        if u[i] - left_min.max(right_min) >= min_prominence {
            seeds.push(d2.axis[idx[i]]);
        }
    }
    Ok(seeds)
}

/// Box constraints and iteration budget for [`fit_gaussians_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitBounds {
    pub center_tolerance_cm1: f64,
    pub sigma_cm1: [f64; 2],
    pub initial_sigma_cm1: f64,
    pub max_iterations: usize,
}

impl Default for FitBounds {
    fn default() -> Self {
        Self {
            center_tolerance_cm1: 4.0,
            sigma_cm1: [2.0, 30.0],
            initial_sigma_cm1: 8.0,
            max_iterations: 500,
        }
    }
}

/// Fits one Gaussian per seed with the default bounds.
pub fn fit_gaussians(
    s: &Spectrum,
    seeds: &[f64],
    window: [f64; 2],
) -> Result<StructureReport, FitError> {
    fit_gaussians_with(s, seeds, window, &FitBounds::default())
}

struct Problem<'a> {
    x: &'a [f64],
    y: &'a [f64],
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Problem<'_> {
    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.x.len(),
            self.x.iter().zip(self.y).map(|(&x, &y)| {
                y - p
                    .chunks_exact(3)
                    .map(|g| gaussian(x, g[0], g[1], g[2]))
                    .sum::<f64>()
            }),
        )
    }

    /// Jacobian of the model (not the residual).
    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.x.len(), p.len());
        for (r, &x) in self.x.iter().enumerate() {
            for (k, g) in p.chunks_exact(3).enumerate() {
                let (c, a, s) = (g[0], g[1], g[2]);
                let d = x - c;
                let e = (-0.5 * d * d / (s * s)).exp();
                j[(r, 3 * k)] = a * e * d / (s * s);
                j[(r, 3 * k + 1)] = e;
                j[(r, 3 * k + 2)] = a * e * d * d / (s * s * s);
            }
        }
        j
    }

    fn project(&self, p: &mut [f64]) {
        for ((v, lo), hi) in p.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

/// Projected Levenberg–Marquardt fit of a Gaussian sum. Centres stay within
/// the tolerance of their seed, amplitudes are nonnegative and widths stay
/// inside the sigma bounds.
pub fn fit_gaussians_with(
    s: &Spectrum,
    seeds: &[f64],
    window: [f64; 2],
    bounds: &FitBounds,
) -> Result<StructureReport, FitError> {
    if seeds.is_empty() {
        return Err(FitError::NoSeeds);
    }
    for &seed in seeds {
        if !(seed >= window[0] && seed <= window[1]) {
            return Err(FitError::Seed {
                seed,
                lo: window[0],
                hi: window[1],
            });
        }
    }
    let (x, y): (Vec<f64>, Vec<f64>) = s
        .axis
        .iter()
        .zip(&s.values)
        .filter(|(x, _)| **x >= window[0] && **x <= window[1])
        .map(|(x, y)| (*x, *y))
        .unzip();
    let needed = 3 * seeds.len() + 1;
    if x.len() < needed {
        return Err(FitError::EmptyWindow {
            lo: window[0],
            hi: window[1],
            points: x.len(),
            needed,
        });
    }

    let y_max = y.iter().cloned().fold(0.0, f64::max);
    let [s_lo, s_hi] = bounds.sigma_cm1;
    let mut p = Vec::with_capacity(3 * seeds.len());
    let mut lower = Vec::with_capacity(p.capacity());
    let mut upper = Vec::with_capacity(p.capacity());
    for &seed in seeds {
        let at_seed = s.interpolate(seed).unwrap_or(y_max);
        p.extend([
            seed,
            at_seed.max(0.01 * y_max).max(f64::MIN_POSITIVE),
            bounds.initial_sigma_cm1.clamp(s_lo, s_hi),
        ]);
        lower.extend([seed - bounds.center_tolerance_cm1, 0.0, s_lo]);
        upper.extend([seed + bounds.center_tolerance_cm1, f64::INFINITY, s_hi]);
    }
    let problem = Problem {
        x: &x,
        y: &y,
        lower,
        upper,
    };

    let mut r = problem.residuals(&p);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < bounds.max_iterations {
        iterations += 1;
        let jac = problem.jacobian(&p);
        let jt = jac.transpose();
        let mut h = &jt * &jac;
        let mut g = &jt * &r;
        // Freeze parameters pinned at a bound by a gradient pointing outward.
        for i in 0..p.len() {
            let pinned = (p[i] <= problem.lower[i] && g[i] < 0.0)
                || (p[i] >= problem.upper[i] && g[i] > 0.0);
            if pinned {
                h.row_mut(i).fill(0.0);
                h.column_mut(i).fill(0.0);
                h[(i, i)] = 1.0;
                g[i] = 0.0;
            }
        }
        let diag_floor = 1e-10 * (0..h.nrows()).map(|i| h[(i, i)]).fold(0.0, f64::max);
        let mut accepted = None;
        while lambda < 1e16 {
            let mut a = h.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += lambda * h[(i, i)].max(diag_floor).max(1e-300);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 4.0;
                continue;
            };
            let step = chol.solve(&g);
            let mut trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            problem.project(&mut trial);
            let r_trial = problem.residuals(&trial);
            let cost_trial = r_trial.norm_squared();
            if cost_trial < cost {
                accepted = Some((trial, r_trial, cost_trial));
                lambda = (lambda / 3.0).max(1e-12);
                break;
            }
            lambda *= 4.0;
        }
        let Some((trial, r_trial, cost_trial)) = accepted else {
            // No descent direction left inside the box.
            converged = true;
            break;
        };
        let moved = trial
            .iter()
            .zip(&p)
            .map(|(a, b)| (a - b).abs() / b.abs().max(1e-12))
            .fold(0.0, f64::max);
        let gain = cost - cost_trial;
        p = trial;
        r = r_trial;
        cost = cost_trial;
        if gain <= 1e-12 * cost || moved < 1e-12 {
            converged = true;
            break;
        }
    }
    let rms = (cost / x.len() as f64).sqrt();
    if !converged {
        return Err(FitError::NonConvergence {
            iterations,
            best_rms: rms,
        });
    }

    let areas: Vec<f64> = p
        .chunks_exact(3)
        .map(|g| g[1] * g[2] * (2.0 * std::f64::consts::PI).sqrt())
        .collect();
    let total: f64 = areas.iter().sum();
    if !(total > 0.0) {
        return Err(FitError::ZeroArea);
    }
    let components = p
        .chunks_exact(3)
        .zip(&areas)
        .map(|(g, &area)| PeakComponent {
            center_cm1: g[0],
            amplitude: g[1],
            sigma_cm1: g[2],
            assignment: Structure::Unassigned,
            area,
            area_percent: 100.0 * area / total,
        })
        .collect();
    Ok(StructureReport {
        components,
        fit_residual_rms: rms,
        band_window_cm1: window,
        iterations,
        provenance: s.metadata.clone(),
    })
}

/// Half-open interval `[lo, hi)` of band centres mapped to a structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRule {
    pub lo_cm1: f64,
    pub hi_cm1: f64,
    pub structure: Structure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentTable {
    pub rules: Vec<AssignmentRule>,
}

impl Default for AssignmentTable {
    fn default() -> Self {
        let rule = |lo_cm1, hi_cm1, structure| AssignmentRule {
            lo_cm1,
            hi_cm1,
            structure,
        };
        Self {
            rules: vec![
                rule(1615.0, 1637.0, Structure::BetaSheet),
                rule(1637.0, 1660.0, Structure::AlphaHelix),
                rule(1660.0, 1686.0, Structure::BetaTurn),
                rule(1686.0, 1700.0, Structure::BetaSheet),
            ],
        }
    }
}

impl AssignmentTable {
    pub fn validate(&self) -> Result<(), FitError> {
        let mut rules = self.rules.clone();
        for r in &rules {
            if !(r.lo_cm1 < r.hi_cm1) {
                return Err(FitError::Invalid(format!(
                    "assignment interval [{}, {}) is empty",
                    r.lo_cm1, r.hi_cm1
                )));
            }
        }
        rules.sort_by(|a, b| a.lo_cm1.total_cmp(&b.lo_cm1));
        for w in rules.windows(2) {
            if w[1].lo_cm1 < w[0].hi_cm1 {
                return Err(FitError::OverlappingAssignments {
                    a_lo: w[0].lo_cm1,
                    a_hi: w[0].hi_cm1,
                    b_lo: w[1].lo_cm1,
                    b_hi: w[1].hi_cm1,
                });
            }
        }
        Ok(())
    }

    pub fn lookup(&self, center_cm1: f64) -> Structure {
        self.rules
            .iter()
            .find(|r| center_cm1 >= r.lo_cm1 && center_cm1 < r.hi_cm1)
            .map_or(Structure::Unassigned, |r| r.structure)
    }
}

pub fn assign_structures(
    components: &[PeakComponent],
    table: &AssignmentTable,
) -> Result<Vec<PeakComponent>, FitError> {
    table.validate()?;
    Ok(components
        .iter()
        .map(|c| PeakComponent {
            assignment: table.lookup(c.center_cm1),
            ..*c
        })
        .collect())
}

/// Settings for the full analysis chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub band_window_cm1: [f64; 2],
    pub baseline_window_cm1: Option<[f64; 2]>,
    pub sg_points: usize,
    pub sg_order: usize,
    pub min_prominence: f64,
    /// Fixed seeds; when absent they come from the second derivative.
    pub seeds_cm1: Option<Vec<f64>>,
    pub bounds: FitBounds,
    pub assignment: AssignmentTable,
    pub reference_scale: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            band_window_cm1: [1600.0, 1700.0],
            baseline_window_cm1: None,
            sg_points: 9,
            sg_order: 3,
            min_prominence: 0.05,
            seeds_cm1: None,
            bounds: FitBounds::default(),
            assignment: AssignmentTable::default(),
            reference_scale: 1.0,
        }
    }
}

/// Reference subtraction, baseline, seeding, fit and assignment in one call.
/// Returns the report and the preprocessed spectrum it was fitted to.
pub fn analyze(
    absorbance: &Spectrum,
    reference: Option<&Spectrum>,
    config: &FitConfig,
) -> Result<(StructureReport, Spectrum), FitError> {
    if absorbance.axis_unit != AxisUnit::Wavenumber {
        return Err(FitError::Invalid(format!(
            "structure fitting needs a cm-1 axis, got {}",
            absorbance.axis_unit
        )));
    }
    config.assignment.validate()?;
    check_window(absorbance, config.band_window_cm1)?;
    let mut s = absorbance.clone();
    if let Some(r) = reference {
        s = subtract_reference(&s, r, config.reference_scale)?;
    }
    if let Some(w) = config.baseline_window_cm1 {
        s = baseline_correct(&s, w)?;
    }
    let seeds = match &config.seeds_cm1 {
        Some(seeds) => seeds.clone(),
        None => {
            let d2 = second_derivative(&s, config.sg_points, config.sg_order)?;
            seed_peaks(&d2, config.band_window_cm1, config.min_prominence)?
        }
    };
    let mut report = fit_gaussians_with(&s, &seeds, config.band_window_cm1, &config.bounds)?;
    report.components = assign_structures(&report.components, &config.assignment)?;
    report
        .provenance
        .insert("seeds_cm1".into(), format!("{seeds:?}"));
    Ok((report, s))
}
