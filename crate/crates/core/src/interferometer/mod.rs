//! Double-pass interferometer model.
//!
//! Pump, signal and idler leave the crystal, cross an air gap of length L_a,
//! the biocell windows (L_b) and the sample (L_m), and are retro-mapped for a
//! second pass. The phase picked up outside the crystal is
//! `δ_s = δ_a + δ_b + δ_m`, each section contributing
//! `(k_p − √(k_s² − q²) − √(k_i² − q²))·length` with the medium's own
//! wavevectors and the transverse wavenumber `q = k_s sin θ_s` carried over
//! from the crystal. The detected signal is
//!
//! ```text
//! I = C₀ sinc²(δ/2) [1 + |τ| cos(δ + δ_s)]
//! ```
//!
//! with τ the sample's amplitude transmissivity at the idler wavelength.

mod map;
mod visibility;

pub use map::{
    build_map, build_single_pass_map, integrate_angles, FringeSpectrum, InterferenceMap,
    SimulationGrid,
};
pub use visibility::{
    extract_visibility, moving_average, weighted_visibility, BetaResult, VisibilityCurve,
    VisibilityOptions, VisibilityPoint, Windows,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispersion::{wavevector, DispersionError, Medium, UniaxialCrystal};
use crate::spdc::{self, CrystalWaves, PumpConfig, SpdcError};
use crate::spectra::{AxisUnit, SpectraError, Spectrum, SpectrumKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterferometerError {
    #[error("evanescent wave in '{medium}': q = {q} rad/um exceeds its wavevector {k} rad/um")]
    Evanescent { medium: String, q: f64, k: f64 },
    #[error("transmissivity {0} outside [0, 1]")]
    TauDomain(f64),
    #[error(
        "sample transmissivity covers [{have_lo}, {have_hi}] um but the grid needs [{need_lo}, {need_hi}] um"
    )]
    Coverage {
        need_lo: f64,
        need_hi: f64,
        have_lo: f64,
        have_hi: f64,
    },
    #[error("no fringes: {0}")]
    NoFringes(String),
    #[error("visibility window {name} [{lo}, {hi}] nm contains no points")]
    EmptyWindow { name: String, lo: f64, hi: f64 },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error(transparent)]
    Spdc(#[from] SpdcError),
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
}

impl InterferometerError {
    /// True for the failures a sweep records as a `no_fringes` point.
    pub fn is_fringe_failure(&self) -> bool {
        matches!(
            self,
            InterferometerError::NoFringes(_) | InterferometerError::EmptyWindow { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Media {
    pub air: Medium,
    pub biocell: Medium,
    pub sample: Medium,
}

/// Every length and index of the optical train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub crystal: UniaxialCrystal,
    pub pump: PumpConfig,
    /// Crystal–mirror air gap, mm. Negative values follow the sign convention
    /// of the optimisation plots.
    pub gap_l_a_mm: f64,
    pub biocell_l_b_mm: f64,
    pub sample_l_m_um: f64,
    pub media: Media,
}

impl GeometryConfig {
    pub fn validate(&self) -> Result<(), InterferometerError> {
        self.crystal.validate()?;
        self.pump.validate()?;
        let bad = |m: String| Err(InterferometerError::InvalidGeometry(m));
        if !self.gap_l_a_mm.is_finite() {
            return bad("L_a must be finite".into());
        }
        if !(self.biocell_l_b_mm > 0.0) {
            return bad(format!("L_b must be positive, got {}", self.biocell_l_b_mm));
        }
        if !(self.sample_l_m_um > 0.0) {
            return bad(format!("L_m must be positive, got {}", self.sample_l_m_um));
        }
        let labels = [
            &self.media.air.label,
            &self.media.biocell.label,
            &self.media.sample.label,
        ];
        if labels[0] == labels[1] || labels[0] == labels[2] || labels[1] == labels[2] {
            return bad("medium labels must be unique".into());
        }
        for m in [&self.media.air, &self.media.biocell, &self.media.sample] {
            m.model.validate()?;
        }
        Ok(())
    }

    /// The three sections outside the crystal as (medium, length in μm).
    pub fn sections(&self) -> [(&Medium, f64); 3] {
        [
            (&self.media.air, self.gap_l_a_mm * 1e3),
            (&self.media.biocell, self.biocell_l_b_mm * 1e3),
            (&self.media.sample, self.sample_l_m_um),
        ]
    }
}

/// Pump, signal and idler wavevectors (rad/μm) of one medium at one signal
/// wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionWaves {
    pub k_p: f64,
    pub k_s: f64,
    pub k_i: f64,
}

impl SectionWaves {
    pub fn new(medium: &Medium, lambda_p_nm: f64, lambda_s_nm: f64) -> Result<Self, SpdcError> {
        let lambda_i_um = spdc::idler_wavelength(lambda_p_nm, lambda_s_nm)?;
        let lp = lambda_p_nm * 1e-3;
        let ls = lambda_s_nm * 1e-3;
        Ok(Self {
            k_p: wavevector(medium.index_at(lp)?, lp),
            k_s: wavevector(medium.index_at(ls)?, ls),
            k_i: wavevector(medium.index_at(lambda_i_um)?, lambda_i_um),
        })
    }

    /// Exact mismatch over `length_um`, with the evanescence check.
    pub fn phase(&self, label: &str, q: f64, length_um: f64) -> Result<f64, InterferometerError> {
        let k_min = self.k_s.min(self.k_i);
        if q.abs() > k_min {
            return Err(InterferometerError::Evanescent {
                medium: label.to_string(),
                q,
                k: k_min,
            });
        }
        let q2 = q * q;
        Ok(
            (self.k_p - (self.k_s * self.k_s - q2).sqrt() - (self.k_i * self.k_i - q2).sqrt())
                * length_um,
        )
    }

    /// Quadratic-in-q expansion of [`SectionWaves::phase`].
    pub fn phase_quadratic(&self, q: f64, length_um: f64) -> f64 {
        (self.k_p - self.k_s - self.k_i + 0.5 * q * q * (1.0 / self.k_s + 1.0 / self.k_i))
            * length_um
    }
}

/// Phase mismatch of one section for transverse wavenumber `q` (rad/μm).
pub fn sectional_mismatch(
    medium: &Medium,
    lambda_p_nm: f64,
    lambda_s_nm: f64,
    q: f64,
    length_um: f64,
) -> Result<f64, InterferometerError> {
    SectionWaves::new(medium, lambda_p_nm, lambda_s_nm)?.phase(&medium.label, q, length_um)
}

/// Precomputed crystal and section wavevectors for one signal wavelength.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RowWaves {
    pub crystal: CrystalWaves,
    pub sections: [SectionWaves; 3],
}

impl RowWaves {
    pub fn new(geometry: &GeometryConfig, lambda_s_nm: f64) -> Result<Self, InterferometerError> {
        let lp = geometry.pump.wavelength_nm;
        let crystal = CrystalWaves::new(&geometry.crystal, lp, lambda_s_nm)?;
        let s = geometry.sections();
        Ok(Self {
            crystal,
            sections: [
                SectionWaves::new(s[0].0, lp, lambda_s_nm)?,
                SectionWaves::new(s[1].0, lp, lambda_s_nm)?,
                SectionWaves::new(s[2].0, lp, lambda_s_nm)?,
            ],
        })
    }

    pub fn sample_phase(
        &self,
        geometry: &GeometryConfig,
        q: f64,
    ) -> Result<f64, InterferometerError> {
        let mut total = 0.0;
        for (waves, (medium, length)) in self.sections.iter().zip(geometry.sections()) {
            total += waves.phase(&medium.label, q, length)?;
        }
        Ok(total)
    }
}

/// `δ_s = δ_a + δ_b + δ_m` at (λ_s, θ_s).
pub fn total_sample_phase(
    geometry: &GeometryConfig,
    lambda_s_nm: f64,
    theta_s_deg: f64,
) -> Result<f64, InterferometerError> {
    let row = RowWaves::new(geometry, lambda_s_nm)?;
    row.sample_phase(geometry, row.crystal.transverse(theta_s_deg))
}

/// Exact `δ + δ_s` and its quadratic-in-q expansion, section by section.
pub fn total_phase_with_expansion(
    geometry: &GeometryConfig,
    lambda_s_nm: f64,
    theta_s_deg: f64,
) -> Result<(f64, f64), InterferometerError> {
    let row = RowWaves::new(geometry, lambda_s_nm)?;
    let q = row.crystal.transverse(theta_s_deg);
    let l_um = geometry.crystal.length_mm * 1e3;
    let exact = row
        .crystal
        .mismatch(theta_s_deg, geometry.crystal.length_mm)
        + row.sample_phase(geometry, q)?;
    let c = &row.crystal;
    let mut approx = (c.k_p - c.k_s - c.k_i + 0.5 * q * q * (1.0 / c.k_s + 1.0 / c.k_i)) * l_um;
    for (waves, (_, length)) in row.sections.iter().zip(geometry.sections()) {
        approx += waves.phase_quadratic(q, length);
    }
    Ok((exact, approx))
}

/// `C₀ sinc²(δ/2) [1 + τ cos(δ + δ_s)]`.
pub fn double_pass_intensity(
    delta_rad: f64,
    c0: f64,
    delta_s_rad: f64,
    tau: f64,
) -> Result<f64, InterferometerError> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(InterferometerError::TauDomain(tau));
    }
    Ok(modulated(delta_rad, c0, delta_s_rad, tau))
}

#[inline]
pub(crate) fn modulated(delta_rad: f64, c0: f64, delta_s_rad: f64, tau: f64) -> f64 {
    spdc::single_pass_intensity(delta_rad, c0) * (1.0 + tau * (delta_rad + delta_s_rad).cos())
}

/// Air gap at which the fringe phase stops depending on angle:
/// `L_a = −(n_a/n_b)·L_b`.
pub fn null_gap(n_a: f64, n_b: f64, l_b_mm: f64) -> f64 {
    -(n_a / n_b) * l_b_mm
}

/// [`null_gap`] with n_a and n_b evaluated at `idler_um`.
pub fn null_gap_predictor(
    geometry: &GeometryConfig,
    idler_um: f64,
) -> Result<f64, InterferometerError> {
    let n_a = geometry.media.air.index_at(idler_um)?;
    let n_b = geometry.media.biocell.index_at(idler_um)?;
    Ok(null_gap(n_a, n_b, geometry.biocell_l_b_mm))
}

/// Amplitude transmissivity of the sample over idler wavelength (μm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleTransmissivity {
    spectrum: Spectrum,
}

impl SampleTransmissivity {
    pub fn new(spectrum: Spectrum) -> Result<Self, InterferometerError> {
        let invalid = |m: String| InterferometerError::InvalidSample(m);
        if spectrum.axis_unit != AxisUnit::IdlerUm {
            return Err(invalid(format!(
                "axis must be idler wavelength in um, got {}",
                spectrum.axis_unit
            )));
        }
        if spectrum.kind != SpectrumKind::TransmissivityAmplitude {
            return Err(invalid(format!(
                "kind must be transmissivity_amplitude, got {}",
                spectrum.kind
            )));
        }
        if spectrum.len() < 2 {
            return Err(invalid("needs at least two points".into()));
        }
        spectrum
            .validate()
            .map_err(|e: SpectraError| invalid(e.to_string()))?;
        Ok(Self { spectrum })
    }

    /// Constant τ over [0.5, 100] μm.
    pub fn flat(tau: f64) -> Result<Self, InterferometerError> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(InterferometerError::TauDomain(tau));
        }
        let spectrum = Spectrum::new(
            AxisUnit::IdlerUm,
            SpectrumKind::TransmissivityAmplitude,
            vec![0.5, 100.0],
            vec![tau, tau],
        )
        .map_err(|e| InterferometerError::InvalidSample(e.to_string()))?;
        Ok(Self { spectrum })
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn check_coverage(&self, need_lo: f64, need_hi: f64) -> Result<(), InterferometerError> {
        let (have_lo, have_hi) = self.spectrum.range();
        if need_lo < have_lo || need_hi > have_hi {
            return Err(InterferometerError::Coverage {
                need_lo,
                need_hi,
                have_lo,
                have_hi,
            });
        }
        Ok(())
    }

    pub fn at(&self, idler_um: f64) -> Result<f64, InterferometerError> {
        self.spectrum.interpolate(idler_um).map_err(|_| {
            let (have_lo, have_hi) = self.spectrum.range();
            InterferometerError::Coverage {
                need_lo: idler_um,
                need_hi: idler_um,
                have_lo,
                have_hi,
            }
        })
    }
}
