//! Non-collinear SPDC kinematics in the low-gain regime.
//!
//! A pump photon at λ_p splits into a signal at λ_s and an idler at λ_i with
//! `1/λ_p = 1/λ_s + 1/λ_i`. The transverse momentum `k_s sin θ_s = k_i sin θ_i`
//! is conserved and the longitudinal remainder accumulates into the phase
//! mismatch `δ = (k_p − k_s cos θ_s − k_i cos θ_i)·L`. The single-pass
//! signal intensity is `C₀·sinc²(δ/2)`.
//!
//! Type-I interaction in a negative uniaxial crystal: the pump travels as an
//! extraordinary wave at the cut angle, signal and idler are ordinary waves.
//! Emission angles are internal propagation angles inside the crystal.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispersion::{wavevector, DispersionError, UniaxialCrystal};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_818_8e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpdcError {
    #[error("signal wavelength {lambda_s_nm} nm must exceed the pump wavelength {lambda_p_nm} nm")]
    NoIdler { lambda_p_nm: f64, lambda_s_nm: f64 },
    #[error("evanescent idler: (k_s/k_i)·sin θ_s = {ratio} exceeds 1")]
    EvanescentIdler { ratio: f64 },
    #[error("invalid pump configuration: {0}")]
    InvalidPump(String),
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpConfig {
    pub wavelength_nm: f64,
    pub power_mw: f64,
    pub effective_area_um2: f64,
}

impl Default for PumpConfig {
    fn default() -> Self {
        Self {
            wavelength_nm: 660.0,
            power_mw: 100.0,
            effective_area_um2: 1.0e4,
        }
    }
}

impl PumpConfig {
    pub fn validate(&self) -> Result<(), SpdcError> {
        for (name, v) in [
            ("wavelength_nm", self.wavelength_nm),
            ("power_mw", self.power_mw),
            ("effective_area_um2", self.effective_area_um2),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SpdcError::InvalidPump(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// A point of the (λ_s, θ_s) plane with its derived idler kinematics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub lambda_s_nm: f64,
    pub theta_s_deg: f64,
    pub lambda_i_um: f64,
    pub theta_i_deg: f64,
    pub delta_rad: f64,
}

/// Crystal indices and wavevectors (rad/μm) for one signal wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrystalWaves {
    pub lambda_i_um: f64,
    pub n_p: f64,
    pub n_s: f64,
    pub n_i: f64,
    pub k_p: f64,
    pub k_s: f64,
    pub k_i: f64,
}

impl CrystalWaves {
    pub fn new(
        crystal: &UniaxialCrystal,
        lambda_p_nm: f64,
        lambda_s_nm: f64,
    ) -> Result<Self, SpdcError> {
        let lambda_i_um = idler_wavelength(lambda_p_nm, lambda_s_nm)?;
        let lp = lambda_p_nm * 1e-3;
        let ls = lambda_s_nm * 1e-3;
        for l in [lp, ls, lambda_i_um] {
            crystal.check_transparent(l)?;
        }
        let n_p = crystal.extraordinary_index(lp, crystal.cut_angle_deg)?;
        let n_s = crystal.ordinary_index(ls)?;
        let n_i = crystal.ordinary_index(lambda_i_um)?;
        Ok(Self {
            lambda_i_um,
            n_p,
            n_s,
            n_i,
            k_p: wavevector(n_p, lp),
            k_s: wavevector(n_s, ls),
            k_i: wavevector(n_i, lambda_i_um),
        })
    }

    /// Transverse wavenumber q = k_s sin θ_s, conserved through every section.
    pub fn transverse(&self, theta_s_deg: f64) -> f64 {
        self.k_s * theta_s_deg.to_radians().sin()
    }

    /// Crystal mismatch over `length_mm`, written through q.
    pub fn mismatch(&self, theta_s_deg: f64, length_mm: f64) -> f64 {
        let q = self.transverse(theta_s_deg);
        let q2 = q * q;
        (self.k_p - (self.k_s * self.k_s - q2).sqrt() - (self.k_i * self.k_i - q2).sqrt())
            * length_mm
            * 1000.0
    }
}

/// Idler wavelength in μm from `1/λ_i = 1/λ_p − 1/λ_s`.
pub fn idler_wavelength(lambda_p_nm: f64, lambda_s_nm: f64) -> Result<f64, SpdcError> {
    if !(lambda_s_nm > lambda_p_nm && lambda_p_nm > 0.0) {
        return Err(SpdcError::NoIdler {
            lambda_p_nm,
            lambda_s_nm,
        });
    }
    Ok(lambda_p_nm * lambda_s_nm / (lambda_s_nm - lambda_p_nm) * 1e-3)
}

/// Signal wavelength in nm for an idler at `lambda_i_um`.
pub fn signal_wavelength(lambda_p_nm: f64, lambda_i_um: f64) -> Result<f64, SpdcError> {
    let lambda_i_nm = lambda_i_um * 1e3;
    if !(lambda_i_nm > lambda_p_nm && lambda_p_nm > 0.0) {
        return Err(SpdcError::NoIdler {
            lambda_p_nm,
            lambda_s_nm: lambda_i_nm,
        });
    }
    Ok(lambda_p_nm * lambda_i_nm / (lambda_i_nm - lambda_p_nm))
}

/// Idler emission angle in degrees from transverse momentum conservation.
pub fn idler_angle(k_s: f64, k_i: f64, theta_s_deg: f64) -> Result<f64, SpdcError> {
    let ratio = k_s / k_i * theta_s_deg.to_radians().sin();
    if ratio.abs() > 1.0 {
        return Err(SpdcError::EvanescentIdler { ratio });
    }
    Ok(ratio.asin().to_degrees())
}

/// `(k_p − k_s cos θ_s − k_i cos θ_i)·L` with k in rad/μm and L in mm.
pub fn longitudinal_mismatch(
    k_p: f64,
    k_s: f64,
    k_i: f64,
    theta_s_deg: f64,
    theta_i_deg: f64,
    length_mm: f64,
) -> f64 {
    (k_p - k_s * theta_s_deg.to_radians().cos() - k_i * theta_i_deg.to_radians().cos())
        * length_mm
        * 1000.0
}

/// Efficiency prefactor
/// `C₀ = 16/3 · c π³ ħ L² P_p d_eff² / (ε₀ n_p n_s n_i λ_s³ λ_i S_eff)`
/// evaluated in SI units.
pub fn efficiency_c0(
    pump: &PumpConfig,
    crystal: &UniaxialCrystal,
    n_p: f64,
    n_s: f64,
    n_i: f64,
    lambda_s_nm: f64,
    lambda_i_um: f64,
) -> f64 {
    let l = crystal.length_mm * 1e-3;
    let p = pump.power_mw * 1e-3;
    let d = crystal.d_eff_pm_per_v * 1e-12;
    let ls = lambda_s_nm * 1e-9;
    let li = lambda_i_um * 1e-6;
    let s = pump.effective_area_um2 * 1e-12;
    let pi3 = std::f64::consts::PI.powi(3);
    16.0 / 3.0 * (SPEED_OF_LIGHT * pi3 * HBAR * l * l * p * d * d)
        / (EPSILON_0 * n_p * n_s * n_i * ls * ls * ls * li * s)
}

/// Unnormalized sinc with a series branch near the removable singularity.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `C₀·sinc²(δ/2)`.
pub fn single_pass_intensity(delta_rad: f64, c0: f64) -> f64 {
    let s = sinc(0.5 * delta_rad);
    c0 * (s * s)
}

/// Full kinematics of one (λ_s, θ_s) point inside the crystal.
pub fn phase_point(
    crystal: &UniaxialCrystal,
    pump: &PumpConfig,
    lambda_s_nm: f64,
    theta_s_deg: f64,
) -> Result<(PhasePoint, CrystalWaves), SpdcError> {
    let waves = CrystalWaves::new(crystal, pump.wavelength_nm, lambda_s_nm)?;
    let theta_i_deg = idler_angle(waves.k_s, waves.k_i, theta_s_deg)?;
    let delta_rad = longitudinal_mismatch(
        waves.k_p,
        waves.k_s,
        waves.k_i,
        theta_s_deg,
        theta_i_deg,
        crystal.length_mm,
    );
    Ok((
        PhasePoint {
            lambda_s_nm,
            theta_s_deg,
            lambda_i_um: waves.lambda_i_um,
            theta_i_deg,
            delta_rad,
        },
        waves,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::default_crystal;
    use std::f64::consts::PI;

    #[test]
    fn idler_wavelength_examples() {
        let li = idler_wavelength(660.0, 732.6).unwrap();
        assert!((li - 660.0 * 732.6 / 72.6 / 1000.0).abs() < 1e-14);
        assert!((li - 6.66).abs() < 5e-3);
        let li = idler_wavelength(660.0, 743.4).unwrap();
        assert!((li - 5.88).abs() < 5e-3);
        assert!((idler_wavelength(660.0, 1320.0).unwrap() - 1.32).abs() < 1e-15);
        assert!(matches!(
            idler_wavelength(660.0, 660.0),
            Err(SpdcError::NoIdler { .. })
        ));
    }

    #[test]
    fn signal_wavelength_inverts_idler_wavelength() {
        let ls = signal_wavelength(660.0, 6.66).unwrap();
        assert!((ls - 732.6).abs() < 0.1, "{ls}");
        let li = idler_wavelength(660.0, ls).unwrap();
        assert!((li - 6.66).abs() < 1e-12);
    }

    #[test]
    fn idler_angle_examples() {
        assert_eq!(idler_angle(20.0, 2.0, 0.0).unwrap(), 0.0);
        assert!((idler_angle(3.0, 3.0, 1.0).unwrap() - 1.0).abs() < 1e-12);
        let expected = (9.0 * 1.0f64.to_radians().sin()).asin().to_degrees();
        let got = idler_angle(9.0, 1.0, 1.0).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 9.04).abs() < 5e-3);
        assert!(matches!(
            idler_angle(100.0, 1.0, 1.0),
            Err(SpdcError::EvanescentIdler { .. })
        ));
    }

    #[test]
    fn longitudinal_mismatch_examples() {
        assert_eq!(longitudinal_mismatch(10.0, 6.0, 4.0, 0.0, 0.0, 1.0), 0.0);
        let d = longitudinal_mismatch(10.0, 6.0, 4.0, 90.0, 90.0, 1.0);
        assert!((d - 10_000.0).abs() < 1e-9);
    }

    #[test]
    fn single_pass_examples() {
        assert_eq!(single_pass_intensity(0.0, 3.5), 3.5);
        assert!(single_pass_intensity(2.0 * PI, 1.0) < 1e-30);
        let v = single_pass_intensity(PI, 1.0);
        assert!((v - (2.0 / PI).powi(2)).abs() < 1e-15);
        assert!((v - 0.405_284_734_569).abs() < 1e-11);
    }

    #[test]
    fn sinc_branches_join_smoothly() {
        let below = sinc(0.999e-8);
        let above = sinc(1.001e-8);
        assert!((below - above).abs() < 1e-15);
        assert_eq!(sinc(0.0), 1.0);
    }

    #[test]
    fn c0_scaling_laws() {
        let mut crystal = default_crystal();
        let mut pump = PumpConfig::default();
        let base = efficiency_c0(&pump, &crystal, 2.5, 2.45, 2.4, 740.0, 6.1);
        crystal.length_mm *= 2.0;
        assert_eq!(
            efficiency_c0(&pump, &crystal, 2.5, 2.45, 2.4, 740.0, 6.1) / base,
            4.0
        );
        crystal.length_mm /= 2.0;
        pump.effective_area_um2 *= 2.0;
        let halved = efficiency_c0(&pump, &crystal, 2.5, 2.45, 2.4, 740.0, 6.1);
        assert!((halved / base - 0.5).abs() < 1e-15);
        pump.effective_area_um2 /= 2.0;
        pump.power_mw *= 2.0;
        let doubled = efficiency_c0(&pump, &crystal, 2.5, 2.45, 2.4, 740.0, 6.1);
        assert!((doubled / base - 2.0).abs() < 1e-15);
        pump.power_mw /= 2.0;
        crystal.d_eff_pm_per_v *= 2.0;
        let quad = efficiency_c0(&pump, &crystal, 2.5, 2.45, 2.4, 740.0, 6.1);
        assert!((quad / base - 4.0).abs() < 1e-15);
    }

    #[test]
    fn c0_golden_value() {
        // Independent SI evaluation (scipy.constants, bundled Sellmeier data)
        // at λ_s = 740 nm, L = 5 mm, P = 100 mW, d_eff = 15.5 pm/V, S_eff = 1e4 μm².
        let crystal = default_crystal();
        let pump = PumpConfig::default();
        let waves = CrystalWaves::new(&crystal, 660.0, 740.0).unwrap();
        let c0 = efficiency_c0(
            &pump,
            &crystal,
            waves.n_p,
            waves.n_s,
            waves.n_i,
            740.0,
            waves.lambda_i_um,
        );
        let golden = crate::testutil::C0_GOLDEN_740NM;
        assert!(((c0 - golden) / golden).abs() < 1e-9, "c0 = {c0:e}");
    }

    #[test]
    fn phase_point_matches_q_form() {
        let crystal = default_crystal();
        let pump = PumpConfig::default();
        let (p, waves) = phase_point(&crystal, &pump, 738.0, 0.6).unwrap();
        let via_q = waves.mismatch(0.6, crystal.length_mm);
        assert!(((p.delta_rad - via_q) / via_q).abs() < 1e-10);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn energy_conservation(lp in 300.0f64..1000.0, ratio in 1.001f64..3.0) {
                let ls = lp * ratio;
                let li_nm = idler_wavelength(lp, ls).unwrap() * 1e3;
                let lhs = 1.0 / lp;
                let resid = lhs - 1.0 / ls - 1.0 / li_nm;
                prop_assert!((resid / lhs).abs() <= 1e-12);
            }

            #[test]
            fn transverse_momentum_conservation(ls in 700.0f64..760.0, th in -1.0f64..1.0) {
                let crystal = default_crystal();
                let (p, w) = phase_point(&crystal, &PumpConfig::default(), ls, th).unwrap();
                let a = w.k_s * p.theta_s_deg.to_radians().sin();
                let b = w.k_i * p.theta_i_deg.to_radians().sin();
                let scale = a.abs().max(f64::MIN_POSITIVE);
                prop_assert!(((a - b) / scale).abs() <= 1e-12 || a == b);
            }

            #[test]
            fn single_pass_is_even_and_peaked(d in -50.0f64..50.0) {
                prop_assert_eq!(single_pass_intensity(d, 1.0), single_pass_intensity(-d, 1.0));
                prop_assert!(single_pass_intensity(d, 1.0) <= single_pass_intensity(0.0, 1.0));
            }
        }
    }
}
