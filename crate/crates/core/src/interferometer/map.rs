use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{modulated, GeometryConfig, InterferometerError, RowWaves, SampleTransmissivity};
use crate::spdc::{self, efficiency_c0};

/// Uniform (λ_s, θ_s) sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationGrid {
    pub lambda_s_nm: [f64; 2],
    pub lambda_points: usize,
    pub theta_deg: [f64; 2],
    pub theta_points: usize,
}

impl Default for SimulationGrid {
    fn default() -> Self {
        Self {
            lambda_s_nm: [732.0, 743.0],
            lambda_points: 2001,
            theta_deg: [-1.0, 1.0],
            theta_points: 401,
        }
    }
}

fn linspace(range: [f64; 2], n: usize) -> Vec<f64> {
    let step = (range[1] - range[0]) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i == n - 1 {
                range[1]
            } else {
                range[0] + step * i as f64
            }
        })
        .collect()
}

impl SimulationGrid {
    pub fn validate(&self) -> Result<(), InterferometerError> {
        let bad = |m: &str| Err(InterferometerError::InvalidGrid(m.to_string()));
        if !(self.lambda_s_nm[0] < self.lambda_s_nm[1]) || !self.lambda_s_nm[0].is_finite() {
            return bad("signal wavelength range must be ascending");
        }
        if !(self.theta_deg[0] < self.theta_deg[1]) || !self.theta_deg[0].is_finite() {
            return bad("angle range must be ascending");
        }
        if self.lambda_points < 3 {
            return bad("need at least 3 wavelength points");
        }
        if self.theta_points < 2 {
            return bad("need at least 2 angle points");
        }
        if self.theta_deg[0] < -90.0 || self.theta_deg[1] > 90.0 {
            return bad("angles must lie within [-90, 90] degrees");
        }
        Ok(())
    }

    pub fn lambda_axis(&self) -> Vec<f64> {
        linspace(self.lambda_s_nm, self.lambda_points)
    }

    pub fn theta_axis(&self) -> Vec<f64> {
        linspace(self.theta_deg, self.theta_points)
    }
}

/// Signal intensity over (λ_s, θ_s), stored row-major by wavelength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceMap {
    pub lambda_s_nm: Vec<f64>,
    pub theta_s_deg: Vec<f64>,
    pub intensity: Vec<f64>,
}

impl InterferenceMap {
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.theta_s_deg.len();
        &self.intensity[i * n..(i + 1) * n]
    }

    /// Wide CSV: one row per wavelength, one column per angle.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("lambda_s_nm");
        for t in &self.theta_s_deg {
            out.push_str(&format!(",{t}"));
        }
        out.push('\n');
        for (i, l) in self.lambda_s_nm.iter().enumerate() {
            out.push_str(&l.to_string());
            for v in self.row(i) {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Angle-integrated signal intensity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeSpectrum {
    pub lambda_s_nm: Vec<f64>,
    pub intensity: Vec<f64>,
}

fn build_rows<F>(
    geometry: &GeometryConfig,
    grid: &SimulationGrid,
    tau_of: F,
) -> Result<InterferenceMap, InterferometerError>
where
    F: Fn(f64) -> Result<Option<f64>, InterferometerError> + Sync,
{
    geometry.validate()?;
    grid.validate()?;
    let lambdas = grid.lambda_axis();
    let thetas = grid.theta_axis();
    let length_mm = geometry.crystal.length_mm;

    let rows = lambdas
        .par_iter()
        .map(|&ls| -> Result<Vec<f64>, InterferometerError> {
            let w = RowWaves::new(geometry, ls)?;
            let c = &w.crystal;
            let c0 = efficiency_c0(
                &geometry.pump,
                &geometry.crystal,
                c.n_p,
                c.n_s,
                c.n_i,
                ls,
                c.lambda_i_um,
            );
            let tau = tau_of(c.lambda_i_um)?;
            thetas
                .iter()
                .map(|&th| {
                    spdc::idler_angle(c.k_s, c.k_i, th)?;
                    let delta = c.mismatch(th, length_mm);
                    match tau {
                        Some(t) => {
                            let ds = w.sample_phase(geometry, c.transverse(th))?;
                            Ok(modulated(delta, c0, ds, t))
                        }
                        None => Ok(spdc::single_pass_intensity(delta, c0)),
                    }
                })
                .collect()
        })
        .collect::<Result<Vec<Vec<f64>>, _>>()?;
    Ok(InterferenceMap {
        lambda_s_nm: lambdas,
        theta_s_deg: thetas,
        intensity: rows.into_iter().flatten().collect(),
    })
}

/// Double-pass intensity over the grid with τ interpolated at each row's
/// idler wavelength. Rows are evaluated in parallel and assembled in order.
pub fn build_map(
    geometry: &GeometryConfig,
    sample: &SampleTransmissivity,
    grid: &SimulationGrid,
) -> Result<InterferenceMap, InterferometerError> {
    let lp = geometry.pump.wavelength_nm;
    let need_hi = spdc::idler_wavelength(lp, grid.lambda_s_nm[0])?;
    let need_lo = spdc::idler_wavelength(lp, grid.lambda_s_nm[1])?;
    sample.check_coverage(need_lo, need_hi)?;
    build_rows(geometry, grid, |li| sample.at(li).map(Some))
}

/// The single-pass map `C₀ sinc²(δ/2)` on the same grid.
pub fn build_single_pass_map(
    geometry: &GeometryConfig,
    grid: &SimulationGrid,
) -> Result<InterferenceMap, InterferometerError> {
    build_rows(geometry, grid, |_| Ok(None))
}

/// Trapezoidal integral over θ_s (degrees) for every wavelength.
pub fn integrate_angles(map: &InterferenceMap) -> FringeSpectrum {
    let th = &map.theta_s_deg;
    let intensity = (0..map.lambda_s_nm.len())
        .map(|i| {
            let row = map.row(i);
            th.windows(2)
                .zip(row.windows(2))
                .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
                .sum()
        })
        .collect();
    FringeSpectrum {
        lambda_s_nm: map.lambda_s_nm.clone(),
        intensity,
    }
}
