use serde::{Deserialize, Serialize};

use super::{FringeSpectrum, InterferometerError};

/// Peak–dip extraction settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VisibilityOptions {
    /// Pairs whose mean intensity falls below this fraction of the spectrum
    /// maximum are dropped. They sit in the dark sinc² tails where the
    /// ripple is not an interference fringe.
    pub min_relative_intensity: f64,
    /// Moving-average width in samples; 1 disables smoothing.
    pub smoothing_width: usize,
}

impl Default for VisibilityOptions {
    fn default() -> Self {
        Self {
            min_relative_intensity: 0.05,
            smoothing_width: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityPoint {
    pub lambda_mid_nm: f64,
    pub visibility: f64,
    pub halfwidth_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VisibilityCurve {
    pub points: Vec<VisibilityPoint>,
}

impl VisibilityCurve {
    pub fn mean(&self) -> Option<f64> {
        if self.points.is_empty() {
            return None;
        }
        Some(self.points.iter().map(|p| p.visibility).sum::<f64>() / self.points.len() as f64)
    }

    pub fn in_window(&self, window: [f64; 2]) -> impl Iterator<Item = &VisibilityPoint> {
        self.points
            .iter()
            .filter(move |p| p.lambda_mid_nm >= window[0] && p.lambda_mid_nm <= window[1])
    }
}

/// Signal-wavelength windows for β: A off the absorption band, B on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Windows {
    pub window_a_nm: [f64; 2],
    pub window_b_nm: [f64; 2],
}

impl Default for Windows {
    fn default() -> Self {
        Self {
            window_a_nm: [735.8, 738.6],
            window_b_nm: [739.9, 741.3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaResult {
    pub beta: f64,
    pub v_a: f64,
    pub v_b: f64,
    pub window_a_nm: [f64; 2],
    pub window_b_nm: [f64; 2],
    pub points_a: usize,
    pub points_b: usize,
}

/// Centred moving average; the window shrinks at the edges.
pub fn moving_average(values: &[f64], width: usize) -> Vec<f64> {
    if width <= 1 {
        return values.to_vec();
    }
    let half = width / 2;
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

#[derive(Clone, Copy, PartialEq)]
enum Extremum {
    Peak,
    Dip,
}

/// Visibility of every adjacent peak–dip pair of the fringe spectrum.
pub fn extract_visibility(
    spectrum: &FringeSpectrum,
    options: &VisibilityOptions,
) -> Result<VisibilityCurve, InterferometerError> {
    let lam = &spectrum.lambda_s_nm;
    let y = moving_average(&spectrum.intensity, options.smoothing_width);
    let n = y.len();
    if n < 3 || lam.len() != n {
        return Err(InterferometerError::NoFringes(
            "spectrum has fewer than three points".into(),
        ));
    }

    let mut extrema = Vec::new();
    for i in 1..n - 1 {
        if y[i] > y[i - 1] && y[i] >= y[i + 1] {
            extrema.push((i, Extremum::Peak));
        } else if y[i] < y[i - 1] && y[i] <= y[i + 1] {
            extrema.push((i, Extremum::Dip));
        }
    }
    let has = |kind| extrema.iter().any(|&(_, k)| k == kind);
    if !has(Extremum::Peak) || !has(Extremum::Dip) {
        return Err(InterferometerError::NoFringes(
            "no interior peak and dip".into(),
        ));
    }

    let y_max = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let floor = options.min_relative_intensity * y_max;
    let mut points = Vec::new();
    for pair in extrema.windows(2) {
        let ((a, ka), (b, kb)) = (pair[0], pair[1]);
        if ka == kb {
            continue;
        }
        let (hi, lo) = if ka == Extremum::Peak {
            (y[a], y[b])
        } else {
            (y[b], y[a])
        };
        let sum = hi + lo;
        if !(sum > 0.0) || 0.5 * sum < floor {
            continue;
        }
        points.push(VisibilityPoint {
            lambda_mid_nm: 0.5 * (lam[a] + lam[b]),
            visibility: ((hi - lo) / sum).clamp(0.0, 1.0),
            halfwidth_nm: 0.5 * (lam[b] - lam[a]).abs(),
        });
    }
    if points.is_empty() {
        return Err(InterferometerError::NoFringes(format!(
            "all peak-dip pairs fall below {} of the maximum intensity",
            options.min_relative_intensity
        )));
    }
    Ok(VisibilityCurve { points })
}

/// β = V_A (V_A − V_B) from the window means.
pub fn weighted_visibility(
    curve: &VisibilityCurve,
    windows: &Windows,
) -> Result<BetaResult, InterferometerError> {
    let mean_in = |name: &str, w: [f64; 2]| {
        let vs: Vec<f64> = curve.in_window(w).map(|p| p.visibility).collect();
        if vs.is_empty() {
            return Err(InterferometerError::EmptyWindow {
                name: name.to_string(),
                lo: w[0],
                hi: w[1],
            });
        }
        Ok((vs.iter().sum::<f64>() / vs.len() as f64, vs.len()))
    };
    let (v_a, points_a) = mean_in("A", windows.window_a_nm)?;
    let (v_b, points_b) = mean_in("B", windows.window_b_nm)?;
    Ok(BetaResult {
        beta: v_a * (v_a - v_b),
        v_a,
        v_b,
        window_a_nm: windows.window_a_nm,
        window_b_nm: windows.window_b_nm,
        points_a,
        points_b,
    })
}
