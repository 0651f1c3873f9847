use serde::{Deserialize, Serialize};

use crate::interferometer::{
    build_map, extract_visibility, integrate_angles, weighted_visibility, BetaResult,
    FringeSpectrum, GeometryConfig, InterferenceMap, InterferometerError, SampleTransmissivity,
    SimulationGrid, VisibilityCurve, VisibilityOptions, VisibilityPoint, Windows,
};
use crate::spectra::{self, AxisUnit, SpectraError, Spectrum, SpectrumKind};
use crate::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub map: InterferenceMap,
    pub fringes: FringeSpectrum,
    pub visibility: Result<VisibilityCurve, InterferometerError>,
}

/// Map, angle integration and visibility extraction. A missing fringe
/// pattern is reported in `visibility`, not as a failed simulation.
pub fn simulate(
    geometry: &GeometryConfig,
    sample: &SampleTransmissivity,
    grid: &SimulationGrid,
    options: &VisibilityOptions,
) -> Result<Simulation, InterferometerError> {
    let map = build_map(geometry, sample, grid)?;
    let fringes = integrate_angles(&map);
    let visibility = extract_visibility(&fringes, options);
    Ok(Simulation {
        map,
        fringes,
        visibility,
    })
}

/// The figure of merit and its ingredients for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub beta: Option<BetaResult>,
    pub mean_visibility: Option<f64>,
    pub pairs: usize,
    pub failure: Option<String>,
}

/// β for one configuration. Fringe failures (no pairs, empty window) are
/// folded into the result; everything else is an error.
pub fn evaluate(
    geometry: &GeometryConfig,
    sample: &SampleTransmissivity,
    grid: &SimulationGrid,
    options: &VisibilityOptions,
    windows: &Windows,
) -> Result<Evaluation, InterferometerError> {
    let map = build_map(geometry, sample, grid)?;
    let fringes = integrate_angles(&map);
    let curve = match extract_visibility(&fringes, options) {
        Ok(c) => c,
        Err(e) if e.is_fringe_failure() => {
            return Ok(Evaluation {
                beta: None,
                mean_visibility: None,
                pairs: 0,
                failure: Some(e.to_string()),
            })
        }
        Err(e) => return Err(e),
    };
    let mean_visibility = curve.mean();
    let pairs = curve.points.len();
    match weighted_visibility(&curve, windows) {
        Ok(b) => Ok(Evaluation {
            beta: Some(b),
            mean_visibility,
            pairs,
            failure: None,
        }),
        Err(e) if e.is_fringe_failure() => Ok(Evaluation {
            beta: None,
            mean_visibility,
            pairs,
            failure: Some(e.to_string()),
        }),
        Err(e) => Err(e),
    }
}

/// Visibility curve as a spectrum over signal wavelength.
pub fn curve_to_spectrum(curve: &VisibilityCurve) -> Result<Spectrum, SpectraError> {
    Spectrum::new(
        AxisUnit::SignalNm,
        SpectrumKind::Visibility,
        curve.points.iter().map(|p| p.lambda_mid_nm).collect(),
        curve.points.iter().map(|p| p.visibility).collect(),
    )
}

/// Inverse of [`curve_to_spectrum`]; pair half-widths are not stored and
/// come back as zero.
pub fn curve_from_spectrum(s: &Spectrum) -> Result<VisibilityCurve, SpectraError> {
    s.require_kind(SpectrumKind::Visibility)?;
    if s.axis_unit != AxisUnit::SignalNm {
        return Err(SpectraError::Invalid(format!(
            "visibility curves are indexed by signal wavelength (nm), got {}",
            s.axis_unit
        )));
    }
    Ok(VisibilityCurve {
        points: s
            .axis
            .iter()
            .zip(&s.values)
            .map(|(&l, &v)| VisibilityPoint {
                lambda_mid_nm: l,
                visibility: v,
                halfwidth_nm: 0.0,
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub lambda_s_nm: f64,
    pub idler_um: f64,
    pub wavenumber_cm1: f64,
    pub visibility: f64,
    pub tau: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub max_abs_deviation: f64,
    pub mean_abs_deviation: f64,
    /// Visibility points outside the τ range or the wavenumber window.
    pub skipped: usize,
}

impl Comparison {
    pub fn to_csv_string(&self) -> String {
        let mut out =
            String::from("lambda_s_nm,idler_um,wavenumber_cm1,visibility,tau,deviation\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:?},{:?},{:?},{:?},{:?},{:?}\n",
                r.lambda_s_nm, r.idler_um, r.wavenumber_cm1, r.visibility, r.tau, r.deviation
            ));
        }
        out
    }
}

/// Pairs each visibility point with τ at the same idler wavelength.
/// `window_cm1` restricts the comparison to a wavenumber band.
pub fn compare(
    curve: &VisibilityCurve,
    tau: &Spectrum,
    lambda_p_nm: f64,
    window_cm1: Option<[f64; 2]>,
) -> Result<Comparison, Error> {
    tau.require_kind(SpectrumKind::TransmissivityAmplitude)?;
    let tau = spectra::convert_axis(tau, AxisUnit::IdlerUm, Some(lambda_p_nm))?;
    let (lo, hi) = tau.range();
    let mut rows = Vec::new();
    let mut skipped = 0;
    for p in &curve.points {
        let idler_um = spectra::convert_value(
            p.lambda_mid_nm,
            AxisUnit::SignalNm,
            AxisUnit::IdlerUm,
            Some(lambda_p_nm),
        )?;
        let wavenumber_cm1 = 1e4 / idler_um;
        let in_window = window_cm1.is_none_or(|w| wavenumber_cm1 >= w[0] && wavenumber_cm1 <= w[1]);
        if idler_um < lo || idler_um > hi || !in_window {
            skipped += 1;
            continue;
        }
        let t = tau.interpolate(idler_um)?;
        rows.push(ComparisonRow {
            lambda_s_nm: p.lambda_mid_nm,
            idler_um,
            wavenumber_cm1,
            visibility: p.visibility,
            tau: t,
            deviation: p.visibility - t,
        });
    }
    if rows.is_empty() {
        let (need_lo, need_hi) = curve
            .points
            .iter()
            .filter_map(|p| {
                spectra::convert_value(
                    p.lambda_mid_nm,
                    AxisUnit::SignalNm,
                    AxisUnit::IdlerUm,
                    Some(lambda_p_nm),
                )
                .ok()
            })
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
                (a.min(x), b.max(x))
            });
        return Err(InterferometerError::Coverage {
            need_lo,
            need_hi,
            have_lo: lo,
            have_hi: hi,
        }
        .into());
    }
    let abs: Vec<f64> = rows.iter().map(|r| r.deviation.abs()).collect();
    Ok(Comparison {
        max_abs_deviation: abs.iter().cloned().fold(0.0, f64::max),
        mean_abs_deviation: abs.iter().sum::<f64>() / abs.len() as f64,
        rows,
        skipped,
    })
}
