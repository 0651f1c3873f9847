//! Serializable run configuration with label-based media.
//!
//! [`GeometrySpec`] names dispersion entries by label and resolves them into a
//! [`GeometryConfig`] against a [`DispersionRegistry`]. [`SampleSpec`] says
//! where the transmissivity comes from. An absorbance sample is converted
//! with the geometry's own L_m, so sweeping L_m changes τ as well as δ_m.

use serde::{Deserialize, Serialize};

use crate::dispersion::{DispersionError, DispersionRegistry, Medium, UniaxialCrystal};
use crate::interferometer::{GeometryConfig, InterferometerError, Media, SampleTransmissivity};
use crate::spdc::PumpConfig;
use crate::spectra::{self, AtrConversionConfig, AxisUnit, Spectrum, SpectrumKind};
use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrystalSpec {
    pub ordinary: String,
    pub extraordinary: String,
    pub cut_angle_deg: f64,
    pub d_eff_pm_per_v: f64,
    pub length_mm: f64,
    pub transparency_um: [f64; 2],
}

impl Default for CrystalSpec {
    fn default() -> Self {
        Self {
            ordinary: "AgGaS2_o".into(),
            extraordinary: "AgGaS2_e".into(),
            cut_angle_deg: 77.0,
            d_eff_pm_per_v: 15.5,
            length_mm: 5.0,
            transparency_um: [0.53, 12.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MediaSpec {
    pub air: String,
    pub biocell: String,
    pub sample: String,
}

impl Default for MediaSpec {
    fn default() -> Self {
        Self {
            air: "air".into(),
            biocell: "biocell".into(),
            sample: "sample_aqueous".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeometrySpec {
    pub pump: PumpConfig,
    pub crystal: CrystalSpec,
    pub gap_l_a_mm: f64,
    pub biocell_l_b_mm: f64,
    pub sample_l_m_um: f64,
    pub media: MediaSpec,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        Self {
            pump: PumpConfig::default(),
            crystal: CrystalSpec::default(),
            gap_l_a_mm: -8.75,
            biocell_l_b_mm: 10.0,
            sample_l_m_um: 6.0,
            media: MediaSpec::default(),
        }
    }
}

impl GeometrySpec {
    pub fn resolve(&self, registry: &DispersionRegistry) -> Result<GeometryConfig, Error> {
        let medium = |role: &str, label: &str| -> Result<Medium, DispersionError> {
            Ok(Medium::new(role, registry.get(label)?.clone()))
        };
        let geometry = GeometryConfig {
            crystal: UniaxialCrystal {
                ordinary: registry.get(&self.crystal.ordinary)?.clone(),
                extraordinary: registry.get(&self.crystal.extraordinary)?.clone(),
                cut_angle_deg: self.crystal.cut_angle_deg,
                d_eff_pm_per_v: self.crystal.d_eff_pm_per_v,
                length_mm: self.crystal.length_mm,
                transparency_um: self.crystal.transparency_um,
            },
            pump: self.pump,
            gap_l_a_mm: self.gap_l_a_mm,
            biocell_l_b_mm: self.biocell_l_b_mm,
            sample_l_m_um: self.sample_l_m_um,
            media: Media {
                air: medium("air", &self.media.air)?,
                biocell: medium("biocell", &self.media.biocell)?,
                sample: medium("sample", &self.media.sample)?,
            },
        };
        geometry.validate()?;
        Ok(geometry)
    }
}

/// Where the sample transmissivity comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SampleSpec {
    /// Spectrally flat τ.
    Flat { tau: f64 },
    /// A ready transmissivity spectrum on any axis unit.
    Transmissivity { spectrum: Spectrum },
    /// Absorbance converted with the geometry's L_m.
    Absorbance {
        spectrum: Spectrum,
        #[serde(default = "default_penetration_depth")]
        penetration_depth_nm: f64,
        #[serde(default = "default_pass_count")]
        pass_count: u32,
    },
}

fn default_penetration_depth() -> f64 {
    AtrConversionConfig::default().penetration_depth_nm
}

fn default_pass_count() -> u32 {
    1
}

impl SampleSpec {
    pub fn absorbance(spectrum: Spectrum) -> Self {
        SampleSpec::Absorbance {
            spectrum,
            penetration_depth_nm: default_penetration_depth(),
            pass_count: 1,
        }
    }

    /// τ over idler wavelength for `geometry`.
    pub fn resolve(&self, geometry: &GeometryConfig) -> Result<SampleTransmissivity, Error> {
        let lp = Some(geometry.pump.wavelength_nm);
        match self {
            SampleSpec::Flat { tau } => Ok(SampleTransmissivity::flat(*tau)?),
            SampleSpec::Transmissivity { spectrum } => {
                let s = spectra::convert_axis(spectrum, AxisUnit::IdlerUm, lp)?;
                Ok(SampleTransmissivity::new(s)?)
            }
            SampleSpec::Absorbance {
                spectrum,
                penetration_depth_nm,
                pass_count,
            } => {
                let cfg = AtrConversionConfig {
                    penetration_depth_nm: *penetration_depth_nm,
                    sample_path_um: geometry.sample_l_m_um,
                    pass_count: *pass_count,
                };
                let tau = spectra::atr_to_transmissivity(spectrum, &cfg)?;
                let tau = spectra::convert_axis(&tau, AxisUnit::IdlerUm, lp)?;
                Ok(SampleTransmissivity::new(tau)?)
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            SampleSpec::Flat { tau } => format!("flat tau={tau}"),
            SampleSpec::Transmissivity { spectrum } => {
                format!("transmissivity spectrum ({} points)", spectrum.len())
            }
            SampleSpec::Absorbance { spectrum, .. } => {
                format!("absorbance spectrum ({} points)", spectrum.len())
            }
        }
    }
}

impl TryFrom<Spectrum> for SampleSpec {
    type Error = InterferometerError;

    fn try_from(spectrum: Spectrum) -> Result<Self, Self::Error> {
        match spectrum.kind {
            SpectrumKind::Absorbance => Ok(SampleSpec::absorbance(spectrum)),
            SpectrumKind::TransmissivityAmplitude => Ok(SampleSpec::Transmissivity { spectrum }),
            other => Err(InterferometerError::InvalidSample(format!(
                "a sample must be absorbance or transmissivity_amplitude, got {other}"
            ))),
        }
    }
}
