//! Refractive-index models for every medium in the optical train.
//!
//! Two model kinds exist: a constant index and a Sellmeier expansion of the
//! form
//!
//! ```text
//! n²(λ) = A + Σ_j B_j λ² / (λ² − C_j)        λ in μm, C_j in μm²
//! ```
//!
//! stored as the flat coefficient list `[A, B1, C1, B2, C2, ...]`. Every model
//! carries the wavelength range it was fitted over; evaluating outside that
//! range is an error rather than an extrapolation.
//!
//! Wavelengths are in micrometres throughout this module.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dispersion data bundled with the crate.
pub const DEFAULT_DISPERSION_JSON: &str = include_str!("../data/dispersion.json");

/// Environment variable that overrides the dispersion data path.
pub const DISPERSION_ENV_VAR: &str = "QSUP_DISPERSION_FILE";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DispersionError {
    #[error(
        "wavelength {wavelength_um} um is outside the valid range [{lo}, {hi}] um of '{label}'"
    )]
    OutOfRange {
        label: String,
        wavelength_um: f64,
        lo: f64,
        hi: f64,
    },
    #[error("'{label}' evaluates to an unphysical index {n} at {wavelength_um} um")]
    Unphysical {
        label: String,
        wavelength_um: f64,
        n: f64,
    },
    #[error("invalid model '{label}': {reason}")]
    InvalidModel { label: String, reason: String },
    #[error("unknown dispersion entry '{0}'")]
    UnknownLabel(String),
    #[error("duplicate dispersion entry '{0}'")]
    DuplicateLabel(String),
    #[error("angle {0} deg is outside [0, 90]")]
    AngleOutOfRange(f64),
    #[error("failed to read dispersion data: {0}")]
    Io(String),
    #[error("failed to parse dispersion data: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Constant,
    Sellmeier,
}

/// A refractive-index model with a declared validity range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefractiveModel {
    pub label: String,
    pub kind: ModelKind,
    /// `[n]` for constant models, `[A, B1, C1, ...]` for Sellmeier models.
    pub coefficients: Vec<f64>,
    pub valid_range_um: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl RefractiveModel {
    pub fn constant(label: impl Into<String>, n: f64, valid_range_um: [f64; 2]) -> Self {
        Self {
            label: label.into(),
            kind: ModelKind::Constant,
            coefficients: vec![n],
            valid_range_um,
            source: None,
        }
    }

    pub fn sellmeier(
        label: impl Into<String>,
        coefficients: Vec<f64>,
        valid_range_um: [f64; 2],
    ) -> Self {
        Self {
            label: label.into(),
            kind: ModelKind::Sellmeier,
            coefficients,
            valid_range_um,
            source: None,
        }
    }

    pub fn validate(&self) -> Result<(), DispersionError> {
        let invalid = |reason: &str| DispersionError::InvalidModel {
            label: self.label.clone(),
            reason: reason.to_string(),
        };
        let [lo, hi] = self.valid_range_um;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
            return Err(invalid("valid range must satisfy 0 < lo < hi"));
        }
        if self.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(invalid("coefficients must be finite"));
        }
        match self.kind {
            ModelKind::Constant => {
                if self.coefficients.len() != 1 {
                    return Err(invalid("constant model takes exactly one coefficient"));
                }
                if self.coefficients[0] < 1.0 {
                    return Err(invalid("constant index must be >= 1"));
                }
            }
            ModelKind::Sellmeier => {
                if self.coefficients.is_empty() || self.coefficients.len().is_multiple_of(2) {
                    return Err(invalid("sellmeier coefficients must be [A, B1, C1, ...]"));
                }
                // A pole inside the range would make the model meaningless there.
                for pole in self.coefficients[1..].chunks(2).map(|p| p[1]) {
                    if pole > 0.0 && pole.sqrt() >= lo && pole.sqrt() <= hi {
                        return Err(invalid("sellmeier pole lies inside the valid range"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, wavelength_um: f64) -> bool {
        let [lo, hi] = self.valid_range_um;
        wavelength_um >= lo && wavelength_um <= hi
    }

    /// Refractive index at `wavelength_um`.
    pub fn index_at(&self, wavelength_um: f64) -> Result<f64, DispersionError> {
        if !self.contains(wavelength_um) {
            let [lo, hi] = self.valid_range_um;
            return Err(DispersionError::OutOfRange {
                label: self.label.clone(),
                wavelength_um,
                lo,
                hi,
            });
        }
        let n = match self.kind {
            ModelKind::Constant => self.coefficients[0],
            ModelKind::Sellmeier => {
                let l2 = wavelength_um * wavelength_um;
                let n2 = self.coefficients[1..]
                    .chunks_exact(2)
                    .fold(self.coefficients[0], |acc, bc| {
                        acc + bc[0] * l2 / (l2 - bc[1])
                    });
                n2.sqrt()
            }
        };
        if n.is_nan() || n < 1.0 {
            return Err(DispersionError::Unphysical {
                label: self.label.clone(),
                wavelength_um,
                n,
            });
        }
        Ok(n)
    }
}

/// A labelled medium of the optical train (air gap, biocell, sample).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    pub label: String,
    pub model: RefractiveModel,
}

impl Medium {
    pub fn new(label: impl Into<String>, model: RefractiveModel) -> Self {
        Self {
            label: label.into(),
            model,
        }
    }

    /// Like [`RefractiveModel::index_at`], with errors naming the medium.
    pub fn index_at(&self, wavelength_um: f64) -> Result<f64, DispersionError> {
        self.model.index_at(wavelength_um).map_err(|e| match e {
            DispersionError::OutOfRange {
                wavelength_um,
                lo,
                hi,
                ..
            } => DispersionError::OutOfRange {
                label: self.label.clone(),
                wavelength_um,
                lo,
                hi,
            },
            DispersionError::Unphysical {
                wavelength_um, n, ..
            } => DispersionError::Unphysical {
                label: self.label.clone(),
                wavelength_um,
                n,
            },
            other => other,
        })
    }
}

/// Uniaxial nonlinear crystal. Angles in degrees from the optic axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniaxialCrystal {
    pub ordinary: RefractiveModel,
    pub extraordinary: RefractiveModel,
    pub cut_angle_deg: f64,
    pub d_eff_pm_per_v: f64,
    pub length_mm: f64,
    pub transparency_um: [f64; 2],
}

impl UniaxialCrystal {
    pub fn validate(&self) -> Result<(), DispersionError> {
        self.ordinary.validate()?;
        self.extraordinary.validate()?;
        if !(0.0..=90.0).contains(&self.cut_angle_deg) {
            return Err(DispersionError::AngleOutOfRange(self.cut_angle_deg));
        }
        let invalid = |reason: &str| DispersionError::InvalidModel {
            label: "crystal".into(),
            reason: reason.into(),
        };
        if !(self.d_eff_pm_per_v > 0.0) {
            return Err(invalid("d_eff must be positive"));
        }
        if !(self.length_mm > 0.0) {
            return Err(invalid("crystal length must be positive"));
        }
        let [lo, hi] = self.transparency_um;
        if !(lo > 0.0 && hi > lo) {
            return Err(invalid("transparency window must satisfy 0 < lo < hi"));
        }
        Ok(())
    }

    /// Errors unless `wavelength_um` lies in the transparency window.
    pub fn check_transparent(&self, wavelength_um: f64) -> Result<(), DispersionError> {
        let [lo, hi] = self.transparency_um;
        if wavelength_um < lo || wavelength_um > hi {
            return Err(DispersionError::OutOfRange {
                label: "crystal transparency".into(),
                wavelength_um,
                lo,
                hi,
            });
        }
        Ok(())
    }

    pub fn ordinary_index(&self, wavelength_um: f64) -> Result<f64, DispersionError> {
        self.ordinary.index_at(wavelength_um)
    }

    /// Index of the extraordinary wave propagating at `theta_deg` to the
    /// optic axis.
    pub fn extraordinary_index(
        &self,
        wavelength_um: f64,
        theta_deg: f64,
    ) -> Result<f64, DispersionError> {
        if !(0.0..=90.0).contains(&theta_deg) {
            return Err(DispersionError::AngleOutOfRange(theta_deg));
        }
        let n_o = self.ordinary.index_at(wavelength_um)?;
        let n_e = self.extraordinary.index_at(wavelength_um)?;
        Ok(index_ellipse(n_o, n_e, theta_deg))
    }
}

/// 1/√(cos²θ/n_o² + sin²θ/n_e²), exact at the two endpoints.
fn index_ellipse(n_o: f64, n_e: f64, theta_deg: f64) -> f64 {
    if theta_deg == 0.0 {
        return n_o;
    }
    if theta_deg == 90.0 {
        return n_e;
    }
    let (s, c) = theta_deg.to_radians().sin_cos();
    1.0 / ((c * c) / (n_o * n_o) + (s * s) / (n_e * n_e)).sqrt()
}

/// Wavevector magnitude 2πn/λ in rad/μm.
pub fn wavevector(n: f64, wavelength_um: f64) -> f64 {
    2.0 * PI * n / wavelength_um
}

#[derive(Debug, Deserialize)]
struct DispersionFile {
    entries: Vec<RefractiveModel>,
}

/// Labelled refractive models loaded from a dispersion data file.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionRegistry {
    entries: BTreeMap<String, RefractiveModel>,
}

impl DispersionRegistry {
    pub fn from_json(text: &str) -> Result<Self, DispersionError> {
        let file: DispersionFile =
            serde_json::from_str(text).map_err(|e| DispersionError::Parse(e.to_string()))?;
        let mut entries = BTreeMap::new();
        for model in file.entries {
            model.validate()?;
            let label = model.label.clone();
            if entries.insert(label.clone(), model).is_some() {
                return Err(DispersionError::DuplicateLabel(label));
            }
        }
        Ok(Self { entries })
    }

    pub fn from_path(path: &Path) -> Result<Self, DispersionError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DispersionError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// The bundled data set.
    pub fn bundled() -> Self {
        Self::from_json(DEFAULT_DISPERSION_JSON).expect("bundled dispersion data is valid")
    }

    /// Resolution order: explicit path, then `QSUP_DISPERSION_FILE`, then the
    /// bundled data.
    pub fn load(explicit: Option<&Path>) -> Result<Self, DispersionError> {
        if let Ok(env_path) = std::env::var(DISPERSION_ENV_VAR) {
            if !env_path.is_empty() {
                return Self::from_path(Path::new(&env_path));
            }
        }
        match explicit {
            Some(path) => Self::from_path(path),
            None => Ok(Self::bundled()),
        }
    }

    pub fn get(&self, label: &str) -> Result<&RefractiveModel, DispersionError> {
        self.entries
            .get(label)
            .ok_or_else(|| DispersionError::UnknownLabel(label.to_string()))
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn aggs_o() -> RefractiveModel {
        DispersionRegistry::bundled()
            .get("AgGaS2_o")
            .unwrap()
            .clone()
    }

    #[test]
    fn constant_models_ignore_wavelength() {
        let air = RefractiveModel::constant("air", 1.0, [0.2, 30.0]);
        assert_eq!(air.index_at(0.66).unwrap(), 1.0);
        assert_eq!(air.index_at(6.0).unwrap(), 1.0);
        let cell = RefractiveModel::constant("biocell", 1.4324, [0.2, 30.0]);
        assert_eq!(cell.index_at(6.0).unwrap(), 1.4324);
    }

    #[test]
    fn sellmeier_golden_value() {
        // Hand evaluation of n_o² = 3.3970 + 2.3982 λ²/(λ² − 0.09311) + 2.1640 λ²/(λ² − 950)
        // at λ = 0.74 μm: λ² = 0.5476.
        let l2: f64 = 0.5476;
        let expected = (3.3970 + 2.3982 * l2 / (l2 - 0.09311) + 2.1640 * l2 / (l2 - 950.0)).sqrt();
        assert!((expected - 2.507_042_865_585).abs() < 1e-9);
        let n = aggs_o().index_at(0.74).unwrap();
        assert!((n - 2.507_042_865_585).abs() < 1e-9, "n = {n}");
    }

    #[test]
    fn out_of_range_names_the_medium() {
        let medium = Medium::new("biocell", RefractiveModel::constant("x", 1.43, [0.2, 10.0]));
        let err = medium.index_at(12.0).unwrap_err();
        assert!(err.to_string().contains("biocell"), "{err}");
        assert!(matches!(err, DispersionError::OutOfRange { .. }));
    }

    #[test]
    fn extraordinary_index_endpoints() {
        let reg = DispersionRegistry::bundled();
        let crystal = UniaxialCrystal {
            ordinary: reg.get("AgGaS2_o").unwrap().clone(),
            extraordinary: reg.get("AgGaS2_e").unwrap().clone(),
            cut_angle_deg: 74.0,
            d_eff_pm_per_v: 15.5,
            length_mm: 5.0,
            transparency_um: [0.53, 12.0],
        };
        let n_o = crystal.ordinary_index(0.66).unwrap();
        let n_e = crystal.extraordinary.index_at(0.66).unwrap();
        assert_eq!(crystal.extraordinary_index(0.66, 0.0).unwrap(), n_o);
        assert_eq!(crystal.extraordinary_index(0.66, 90.0).unwrap(), n_e);

        // Direct formula with independently evaluated endpoint indices.
        let t = 74.0f64.to_radians();
        let brute = (t.cos().powi(2) / n_o.powi(2) + t.sin().powi(2) / n_e.powi(2))
            .sqrt()
            .recip();
        let got = crystal.extraordinary_index(0.66, 74.0).unwrap();
        assert!((got - brute).abs() < 1e-14);
        assert!(crystal.extraordinary_index(0.66, 91.0).is_err());
    }

    #[test]
    fn wavevector_examples() {
        assert!((wavevector(1.0, 2.0 * PI) - 1.0).abs() < 1e-15);
        assert!((wavevector(1.4324, 6.0) - 1.500_005_772_334).abs() < 1e-12);
        assert!((wavevector(2.0, 1.0) - 4.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn registry_rejects_duplicates_and_bad_models() {
        let dup = r#"{"entries":[
            {"label":"a","kind":"constant","coefficients":[1.0],"valid_range_um":[0.1,1.0]},
            {"label":"a","kind":"constant","coefficients":[1.2],"valid_range_um":[0.1,1.0]}]}"#;
        assert!(matches!(
            DispersionRegistry::from_json(dup),
            Err(DispersionError::DuplicateLabel(_))
        ));
        let bad = r#"{"entries":[{"label":"b","kind":"sellmeier","coefficients":[1.0,2.0],"valid_range_um":[0.1,1.0]}]}"#;
        assert!(DispersionRegistry::from_json(bad).is_err());
        let sub_unity = r#"{"entries":[{"label":"c","kind":"constant","coefficients":[0.9],"valid_range_um":[0.1,1.0]}]}"#;
        assert!(DispersionRegistry::from_json(sub_unity).is_err());
    }

    #[test]
    fn bundled_media_are_physical_over_their_ranges() {
        let reg = DispersionRegistry::bundled();
        for label in reg.labels() {
            let model = reg.get(label).unwrap();
            let [lo, hi] = model.valid_range_um;
            for i in 0..=50 {
                let l = lo + (hi - lo) * i as f64 / 50.0;
                let n = model.index_at(l).unwrap();
                assert!(n >= 1.0, "{label} at {l}: {n}");
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn extraordinary_index_is_monotone_in_angle(l in 0.55f64..11.0, a in 0.0f64..89.0, d in 0.01f64..1.0) {
                let reg = DispersionRegistry::bundled();
                let crystal = UniaxialCrystal {
                    ordinary: reg.get("AgGaS2_o").unwrap().clone(),
                    extraordinary: reg.get("AgGaS2_e").unwrap().clone(),
                    cut_angle_deg: 74.0,
                    d_eff_pm_per_v: 15.5,
                    length_mm: 5.0,
                    transparency_um: [0.53, 12.0],
                };
                let b = (a + d).min(90.0);
                let na = crystal.extraordinary_index(l, a).unwrap();
                let nb = crystal.extraordinary_index(l, b).unwrap();
                let n_o = crystal.ordinary_index(l).unwrap();
                let n_e = crystal.extraordinary.index_at(l).unwrap();
                // AgGaS2 is negative uniaxial: the index falls from n_o toward n_e.
                prop_assert!(n_e < n_o);
                prop_assert!(nb <= na + 1e-15);
                prop_assert!(na <= n_o + 1e-15 && na >= n_e - 1e-15);
            }

            #[test]
            fn wavevector_scales_linearly(n in 1.0f64..4.0, l in 0.1f64..20.0, c in 1.0f64..5.0) {
                let k = wavevector(n, l);
                prop_assert!((wavevector(c * n, l) - c * k).abs() <= 1e-12 * c * k);
                prop_assert!((wavevector(n, c * l) - k / c).abs() <= 1e-12 * k);
            }

            #[test]
            fn index_at_is_deterministic(l in 0.5f64..12.0) {
                let m = aggs_o();
                prop_assert_eq!(m.index_at(l).unwrap().to_bits(), m.index_at(l).unwrap().to_bits());
            }
        }
    }
}
