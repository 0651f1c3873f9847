//! Synthetic protein absorbance spectra.
//!
//! The Amide I band is built from three Gaussians whose areas follow the
//! published secondary-structure shares of each protein state. The full
//! spectra add an Amide II band, a side-chain shoulder and a flat
//! background so the simulated idler sees a realistic two-band structure.
//! Peak absorbance is scaled to the order of a thin-film ATR measurement.

use serde::{Deserialize, Serialize};

use crate::spectra::{AxisUnit, Spectrum, SpectrumKind};
use crate::structfit::gaussian;

/// Total Amide I area shared by every preset, absorbance·cm⁻¹. Chosen so the
/// 1655 cm⁻¹ helix band of the 24 °C albumin preset peaks at 0.016.
pub const AMIDE_I_TOTAL_AREA: f64 = 0.016 * 11.0 * 2.506_628_274_631_000_2 / 0.787;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub center_cm1: f64,
    pub sigma_cm1: f64,
    pub amplitude: f64,
}

impl Band {
    pub fn from_area(center_cm1: f64, sigma_cm1: f64, area: f64) -> Self {
        Self {
            center_cm1,
            sigma_cm1,
            amplitude: area / (sigma_cm1 * (2.0 * std::f64::consts::PI).sqrt()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        gaussian(x, self.center_cm1, self.amplitude, self.sigma_cm1)
    }

    pub fn area(&self) -> f64 {
        self.amplitude * self.sigma_cm1 * (2.0 * std::f64::consts::PI).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProteinPreset {
    Bsa24C,
    Bsa68C,
    NtProBnp24C,
}

impl ProteinPreset {
    pub const ALL: [ProteinPreset; 3] = [
        ProteinPreset::Bsa24C,
        ProteinPreset::Bsa68C,
        ProteinPreset::NtProBnp24C,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProteinPreset::Bsa24C => "bsa_24c",
            ProteinPreset::Bsa68C => "bsa_68c",
            ProteinPreset::NtProBnp24C => "ntprobnp_24c",
        }
    }

    pub fn temperature_c(self) -> f64 {
        match self {
            ProteinPreset::Bsa68C => 68.0,
            _ => 24.0,
        }
    }

    /// (centre cm⁻¹, σ cm⁻¹, area percent) of the three Amide I components.
    pub fn amide_i_components(self) -> [(f64, f64, f64); 3] {
        match self {
            ProteinPreset::Bsa24C => [
                (1627.0, 9.0, 8.6),
                (1655.0, 11.0, 78.7),
                (1683.0, 9.0, 12.7),
            ],
            ProteinPreset::Bsa68C => [
                (1626.0, 9.0, 26.4),
                (1655.0, 11.0, 64.5),
                (1680.0, 9.0, 9.1),
            ],
            ProteinPreset::NtProBnp24C => [
                (1638.0, 11.0, 81.9),
                (1662.0, 9.0, 0.6),
                (1687.0, 9.0, 17.5),
            ],
        }
    }

    pub fn amide_i_bands(self) -> Vec<Band> {
        self.amide_i_components()
            .iter()
            .map(|&(c, s, pct)| Band::from_area(c, s, AMIDE_I_TOTAL_AREA * pct / 100.0))
            .collect()
    }

    /// Amide II, side-chain shoulder and flat background.
    pub fn other_bands(self) -> (Vec<Band>, f64) {
        (
            vec![
                Band {
                    center_cm1: 1545.0,
                    sigma_cm1: 24.0,
                    amplitude: 0.0085,
                },
                Band {
                    center_cm1: 1583.0,
                    sigma_cm1: 14.0,
                    amplitude: 0.0025,
                },
            ],
            0.0008,
        )
    }
}

pub fn sum_of_bands(bands: &[Band], x: f64) -> f64 {
    bands.iter().map(|b| b.eval(x)).sum()
}

fn wavenumber_axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize + 1;
    (0..n).map(|i| lo + step * i as f64).collect()
}

/// Amide I three-component mixture only.
pub fn amide_i_mixture(preset: ProteinPreset, lo: f64, hi: f64, step: f64) -> Spectrum {
    let bands = preset.amide_i_bands();
    let axis = wavenumber_axis(lo, hi, step);
    let values = axis.iter().map(|&x| sum_of_bands(&bands, x)).collect();
    Spectrum::new(AxisUnit::Wavenumber, SpectrumKind::Absorbance, axis, values)
        .expect("ascending axis")
        .with_metadata("synthetic", "true")
        .with_metadata("preset", preset.name())
}

/// Full synthetic absorbance with Amide I, Amide II and background.
pub fn protein_absorbance(preset: ProteinPreset, lo: f64, hi: f64, step: f64) -> Spectrum {
    let mut bands = preset.amide_i_bands();
    let (others, background) = preset.other_bands();
    bands.extend(others);
    let axis = wavenumber_axis(lo, hi, step);
    let values = axis
        .iter()
        .map(|&x| sum_of_bands(&bands, x) + background)
        .collect();
    Spectrum::new(AxisUnit::Wavenumber, SpectrumKind::Absorbance, axis, values)
        .expect("ascending axis")
        .with_metadata("synthetic", "true")
        .with_metadata("preset", preset.name())
        .with_metadata("temperature_c", preset.temperature_c().to_string())
}

/// One Gaussian absorption band on a zero background.
pub fn single_band_absorbance(band: Band, lo: f64, hi: f64, step: f64) -> Spectrum {
    let axis = wavenumber_axis(lo, hi, step);
    let values = axis.iter().map(|&x| band.eval(x)).collect();
    Spectrum::new(AxisUnit::Wavenumber, SpectrumKind::Absorbance, axis, values)
        .expect("ascending axis")
        .with_metadata("synthetic", "true")
}
