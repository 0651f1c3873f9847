//! Writes the synthetic absorbance spectra used by the README walkthrough.
//!
//! ```text
//! cargo run -p qsup-core --example generate_synthetic -- [OUT_DIR]
//! ```

use std::path::PathBuf;

use qsup_core::spectra::{write_spectrum, SpectrumFormat};
use qsup_core::synthetic::{amide_i_mixture, protein_absorbance, ProteinPreset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"));
    std::fs::create_dir_all(&out)?;
    for preset in ProteinPreset::ALL {
        let full = protein_absorbance(preset, 1400.0, 1800.0, 0.5);
        let path = out.join(format!("{}_absorbance.csv", preset.name()));
        write_spectrum(&path, &full, SpectrumFormat::Csv)?;
        println!("{}", path.display());
        let band = amide_i_mixture(preset, 1580.0, 1720.0, 1.0);
        let path = out.join(format!("{}_amide_i.csv", preset.name()));
        write_spectrum(&path, &band, SpectrumFormat::Csv)?;
        println!("{}", path.display());
    }
    Ok(())
}
