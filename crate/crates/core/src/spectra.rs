//! Sampled spectra, their file formats, ATR conversion and axis conversion.
//!
//! A [`Spectrum`] carries a strictly ascending axis in one of three units:
//!
//! | unit   | meaning                          |
//! |--------|----------------------------------|
//! | `cm-1` | idler wavenumber                 |
//! | `um`   | idler wavelength                 |
//! | `nm`   | signal wavelength                |
//!
//! Moving between the idler and signal axes needs the pump wavelength.
//!
//! CSV layout: a header row `axis_unit,value_kind` followed by `axis,value`
//! rows. Writers may append extra named columns after the value column
//! (e.g. `halfwidth_nm` on visibility curves); readers ignore them. JSON
//! layout: `{"axis_unit", "kind", "axis": [...], "values": [...],
//! "metadata": {...}}`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spdc;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },
    #[error("unknown axis unit '{0}' (expected cm-1, nm or um)")]
    UnknownUnit(String),
    #[error("unknown spectrum kind '{0}'")]
    UnknownKind(String),
    #[error("invalid spectrum: {0}")]
    Invalid(String),
    #[error("negative absorbance {value} at {axis}; baseline-correct the spectrum first")]
    NegativeAbsorbance { axis: f64, value: f64 },
    #[error("{x} lies outside the spectrum axis [{lo}, {hi}]")]
    Extrapolation { x: f64, lo: f64, hi: f64 },
    #[error("converting between idler and signal axes requires the pump wavelength")]
    MissingPumpWavelength,
    #[error("expected a {expected} spectrum, got {found}")]
    WrongKind {
        expected: SpectrumKind,
        found: SpectrumKind,
    },
    #[error("axis conversion failed: {0}")]
    Conversion(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AxisUnit {
    #[serde(rename = "cm-1")]
    Wavenumber,
    #[serde(rename = "nm")]
    SignalNm,
    #[serde(rename = "um")]
    IdlerUm,
}

impl AxisUnit {
    pub fn as_str(self) -> &'static str {
        match self {
            AxisUnit::Wavenumber => "cm-1",
            AxisUnit::SignalNm => "nm",
            AxisUnit::IdlerUm => "um",
        }
    }
}

impl fmt::Display for AxisUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AxisUnit {
    type Err = SpectraError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "cm-1" | "cm^-1" | "1/cm" | "cm⁻¹" => Ok(AxisUnit::Wavenumber),
            "nm" => Ok(AxisUnit::SignalNm),
            "um" | "μm" | "µm" => Ok(AxisUnit::IdlerUm),
            other => Err(SpectraError::UnknownUnit(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    Absorbance,
    TransmissivityAmplitude,
    Visibility,
    SecondDerivative,
    Arbitrary,
}

impl SpectrumKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SpectrumKind::Absorbance => "absorbance",
            SpectrumKind::TransmissivityAmplitude => "transmissivity_amplitude",
            SpectrumKind::Visibility => "visibility",
            SpectrumKind::SecondDerivative => "second_derivative",
            SpectrumKind::Arbitrary => "arbitrary",
        }
    }
}

impl fmt::Display for SpectrumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpectrumKind {
    type Err = SpectraError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "absorbance" => Ok(SpectrumKind::Absorbance),
            "transmissivity_amplitude" | "transmissivity" => {
                Ok(SpectrumKind::TransmissivityAmplitude)
            }
            "visibility" => Ok(SpectrumKind::Visibility),
            "second_derivative" => Ok(SpectrumKind::SecondDerivative),
            "arbitrary" => Ok(SpectrumKind::Arbitrary),
            other => Err(SpectraError::UnknownKind(other.to_string())),
        }
    }
}

/// A sampled function over a strictly ascending spectral axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub axis_unit: AxisUnit,
    pub kind: SpectrumKind,
    pub axis: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl Spectrum {
    /// Builds a spectrum, reversing a descending axis.
    pub fn new(
        axis_unit: AxisUnit,
        kind: SpectrumKind,
        mut axis: Vec<f64>,
        mut values: Vec<f64>,
    ) -> Result<Self, SpectraError> {
        if axis.len() >= 2 && axis[0] > axis[axis.len() - 1] {
            axis.reverse();
            values.reverse();
        }
        let s = Self {
            axis_unit,
            kind,
            axis,
            values,
            metadata: BTreeMap::new(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }

    pub fn validate(&self) -> Result<(), SpectraError> {
        if self.axis.len() != self.values.len() {
            return Err(SpectraError::Invalid(format!(
                "axis has {} points but values has {}",
                self.axis.len(),
                self.values.len()
            )));
        }
        if self.axis.is_empty() {
            return Err(SpectraError::Invalid("spectrum is empty".into()));
        }
        if let Some(i) = self.axis.iter().position(|x| !x.is_finite()) {
            return Err(SpectraError::Invalid(format!(
                "non-finite axis value at index {i}"
            )));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(SpectraError::Invalid(format!(
                "non-finite value at index {i}"
            )));
        }
        if let Some(i) = self.axis.windows(2).position(|w| w[1] <= w[0]) {
            return Err(SpectraError::Invalid(format!(
                "axis is not strictly ascending at index {}",
                i + 1
            )));
        }
        if self.kind == SpectrumKind::TransmissivityAmplitude {
            if let Some(v) = self.values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(SpectraError::Invalid(format!(
                    "transmissivity {v} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    pub fn require_kind(&self, expected: SpectrumKind) -> Result<(), SpectraError> {
        if self.kind != expected {
            return Err(SpectraError::WrongKind {
                expected,
                found: self.kind,
            });
        }
        Ok(())
    }

    pub fn range(&self) -> (f64, f64) {
        (self.axis[0], self.axis[self.axis.len() - 1])
    }

    /// Linear interpolation; errors outside the axis.
    pub fn interpolate(&self, x: f64) -> Result<f64, SpectraError> {
        let (lo, hi) = self.range();
        if !(x >= lo && x <= hi) {
            return Err(SpectraError::Extrapolation { x, lo, hi });
        }
        let j = self.axis.partition_point(|&a| a < x);
        if self.axis[j] == x {
            return Ok(self.values[j]);
        }
        let (x0, x1) = (self.axis[j - 1], self.axis[j]);
        let (y0, y1) = (self.values[j - 1], self.values[j]);
        Ok(y0 + (y1 - y0) * ((x - x0) / (x1 - x0)))
    }

    /// Sub-spectrum with axis inside `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> Option<Spectrum> {
        let idx: Vec<usize> = (0..self.len())
            .filter(|&i| self.axis[i] >= lo && self.axis[i] <= hi)
            .collect();
        if idx.is_empty() {
            return None;
        }
        Some(Spectrum {
            axis_unit: self.axis_unit,
            kind: self.kind,
            axis: idx.iter().map(|&i| self.axis[i]).collect(),
            values: idx.iter().map(|&i| self.values[i]).collect(),
            metadata: self.metadata.clone(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumFormat {
    Csv,
    Json,
}

impl SpectrumFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => SpectrumFormat::Json,
            _ => SpectrumFormat::Csv,
        }
    }
}

fn io_error(path: &Path, e: impl fmt::Display) -> SpectraError {
    SpectraError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn read_spectrum(path: &Path, format: SpectrumFormat) -> Result<Spectrum, SpectraError> {
    match format {
        SpectrumFormat::Csv => {
            let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            parse_csv(&text, &path.display().to_string())
        }
        SpectrumFormat::Json => {
            let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            let s: Spectrum = serde_json::from_str(&text).map_err(|e| SpectraError::Parse {
                path: path.display().to_string(),
                line: e.line() as u64,
                message: e.to_string(),
            })?;
            s.validate()?;
            Ok(s)
        }
    }
}

/// Parses the CSV spectrum layout. `origin` names the source in errors.
pub fn parse_csv(text: &str, origin: &str) -> Result<Spectrum, SpectraError> {
    let parse_err = |line: u64, message: String| SpectraError::Parse {
        path: origin.to_string(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if header.len() < 2 {
        return Err(parse_err(1, "header must be 'axis_unit,value_kind'".into()));
    }
    let unit: AxisUnit = header[0]
        .parse()
        .map_err(|e: SpectraError| parse_err(1, e.to_string()))?;
    let kind: SpectrumKind = header[1]
        .parse()
        .map_err(|e: SpectraError| parse_err(1, e.to_string()))?;

    let mut rows: Vec<(f64, f64, u64)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() < 2 {
            return Err(parse_err(line, "expected 'axis,value'".into()));
        }
        let field = |i: usize| -> Result<f64, SpectraError> {
            let v: f64 = record[i]
                .parse()
                .map_err(|_| parse_err(line, format!("'{}' is not a number", &record[i])))?;
            if !v.is_finite() {
                return Err(parse_err(
                    line,
                    format!("non-finite value '{}'", &record[i]),
                ));
            }
            Ok(v)
        };
        rows.push((field(0)?, field(1)?, line));
    }
    if rows.is_empty() {
        return Err(parse_err(1, "no data rows".into()));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        let line = w[0].2.max(w[1].2);
        return Err(parse_err(line, format!("duplicate axis value {}", w[1].0)));
    }
    let spectrum = Spectrum {
        axis_unit: unit,
        kind,
        axis: rows.iter().map(|r| r.0).collect(),
        values: rows.iter().map(|r| r.1).collect(),
        metadata: BTreeMap::new(),
    };
    spectrum.validate()?;
    Ok(spectrum)
}

/// CSV text for `spectrum`, with optional extra named columns.
pub fn to_csv_string(spectrum: &Spectrum, extra: &[(&str, &[f64])]) -> String {
    let mut out = String::new();
    out.push_str(spectrum.axis_unit.as_str());
    out.push(',');
    out.push_str(spectrum.kind.as_str());
    for (name, _) in extra {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..spectrum.len() {
        out.push_str(&format!("{},{}", spectrum.axis[i], spectrum.values[i]));
        for (_, col) in extra {
            out.push_str(&format!(",{}", col[i]));
        }
        out.push('\n');
    }
    out
}

pub fn write_spectrum(
    path: &Path,
    spectrum: &Spectrum,
    format: SpectrumFormat,
) -> Result<(), SpectraError> {
    write_spectrum_with_columns(path, spectrum, format, &[])
}

pub fn write_spectrum_with_columns(
    path: &Path,
    spectrum: &Spectrum,
    format: SpectrumFormat,
    extra: &[(&str, &[f64])],
) -> Result<(), SpectraError> {
    let text = match format {
        SpectrumFormat::Csv => to_csv_string(spectrum, extra),
        SpectrumFormat::Json => {
            serde_json::to_string_pretty(spectrum).map_err(|e| io_error(path, e))?
        }
    };
    let mut file = File::create(path).map_err(|e| io_error(path, e))?;
    file.write_all(text.as_bytes())
        .map_err(|e| io_error(path, e))
}

/// Absorbance-to-transmissivity conversion parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtrConversionConfig {
    pub penetration_depth_nm: f64,
    pub sample_path_um: f64,
    pub pass_count: u32,
}

impl Default for AtrConversionConfig {
    fn default() -> Self {
        Self {
            penetration_depth_nm: 100.0,
            sample_path_um: 6.0,
            pass_count: 1,
        }
    }
}

impl AtrConversionConfig {
    pub fn validate(&self) -> Result<(), SpectraError> {
        if !(self.penetration_depth_nm > 0.0) {
            return Err(SpectraError::Invalid(
                "penetration depth must be positive".into(),
            ));
        }
        if !(self.sample_path_um > 0.0) {
            return Err(SpectraError::Invalid("sample path must be positive".into()));
        }
        if self.pass_count < 1 {
            return Err(SpectraError::Invalid(
                "pass count must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Amplitude transmissivity τ = √T with T = exp(−α·L_m·passes) and
/// α = A·ln 10 / d_p.
pub fn atr_to_transmissivity(
    absorbance: &Spectrum,
    config: &AtrConversionConfig,
) -> Result<Spectrum, SpectraError> {
    absorbance.require_kind(SpectrumKind::Absorbance)?;
    config.validate()?;
    let path_nm = config.sample_path_um * 1e3 * config.pass_count as f64;
    let mut values = Vec::with_capacity(absorbance.len());
    for (&x, &a) in absorbance.axis.iter().zip(&absorbance.values) {
        if a < 0.0 {
            return Err(SpectraError::NegativeAbsorbance { axis: x, value: a });
        }
        let alpha = a * std::f64::consts::LN_10 / config.penetration_depth_nm;
        let t = (-alpha * path_nm).exp();
        values.push(t.sqrt().clamp(0.0, 1.0));
    }
    let mut out = Spectrum {
        axis_unit: absorbance.axis_unit,
        kind: SpectrumKind::TransmissivityAmplitude,
        axis: absorbance.axis.clone(),
        values,
        metadata: absorbance.metadata.clone(),
    };
    out.metadata.insert(
        "penetration_depth_nm".into(),
        config.penetration_depth_nm.to_string(),
    );
    out.metadata
        .insert("sample_path_um".into(), config.sample_path_um.to_string());
    out.metadata
        .insert("pass_count".into(), config.pass_count.to_string());
    Ok(out)
}

/// Maps one axis value between units.
pub fn convert_value(
    x: f64,
    from: AxisUnit,
    to: AxisUnit,
    lambda_p_nm: Option<f64>,
) -> Result<f64, SpectraError> {
    use AxisUnit::*;
    if from == to {
        return Ok(x);
    }
    let pump = || lambda_p_nm.ok_or(SpectraError::MissingPumpWavelength);
    let conv = |e: spdc::SpdcError| SpectraError::Conversion(e.to_string());
    let idler_um = match from {
        Wavenumber => 1e4 / x,
        IdlerUm => x,
        SignalNm => spdc::idler_wavelength(pump()?, x).map_err(conv)?,
    };
    Ok(match to {
        Wavenumber => 1e4 / idler_um,
        IdlerUm => idler_um,
        SignalNm => spdc::signal_wavelength(pump()?, idler_um).map_err(conv)?,
    })
}

/// Re-expresses the axis in `target`; values are carried over unchanged and
/// the result is re-sorted ascending.
pub fn convert_axis(
    s: &Spectrum,
    target: AxisUnit,
    lambda_p_nm: Option<f64>,
) -> Result<Spectrum, SpectraError> {
    let axis = s
        .axis
        .iter()
        .map(|&x| convert_value(x, s.axis_unit, target, lambda_p_nm))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Spectrum::new(target, s.kind, axis, s.values.clone())?;
    out.metadata = s.metadata.clone();
    Ok(out)
}

/// Wavenumber of the absorbance maximum, or a warning message when it falls
/// outside the Amide I region [1600, 1700] cm⁻¹.
pub fn check_amide_i_maximum(s: &Spectrum, lambda_p_nm: Option<f64>) -> Result<f64, String> {
    let (i, _) = s
        .values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| "empty spectrum".to_string())?;
    let nu = convert_value(s.axis[i], s.axis_unit, AxisUnit::Wavenumber, lambda_p_nm)
        .map_err(|e| e.to_string())?;
    if (1600.0..=1700.0).contains(&nu) {
        Ok(nu)
    } else {
        Err(format!(
            "absorbance maximum at {nu:.1} cm-1 lies outside the Amide I band [1600, 1700] cm-1"
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs_spectrum(values: Vec<f64>) -> Spectrum {
        let axis = (0..values.len()).map(|i| 1600.0 + i as f64).collect();
        Spectrum::new(AxisUnit::Wavenumber, SpectrumKind::Absorbance, axis, values).unwrap()
    }

    #[test]
    fn minimal_csv_parse() {
        let s = parse_csv("cm-1,absorbance\n1600,0.01\n1700,0.02\n", "mem").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.axis_unit, AxisUnit::Wavenumber);
        assert_eq!(s.values, vec![0.01, 0.02]);
    }

    #[test]
    fn csv_is_sorted_ascending() {
        let s = parse_csv("cm-1,absorbance\n1700,0.02\n1600,0.01\n1650,0.5\n", "mem").unwrap();
        assert_eq!(s.axis, vec![1600.0, 1650.0, 1700.0]);
        assert_eq!(s.values, vec![0.01, 0.5, 0.02]);
    }

    #[test]
    fn duplicate_axis_reports_line() {
        let err = parse_csv(
            "cm-1,absorbance\n1600,0.01\n1650,0.02\n1600,0.03\n",
            "f.csv",
        )
        .unwrap_err();
        match err {
            SpectraError::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_rows_and_units_are_rejected() {
        assert!(matches!(
            parse_csv("furlong,absorbance\n1,2\n", "m"),
            Err(SpectraError::Parse { line: 1, .. })
        ));
        match parse_csv("nm,visibility\n700,0.5\n701,abc\n", "m").unwrap_err() {
            SpectraError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn extra_columns_are_ignored_on_read() {
        let s = parse_csv(
            "nm,visibility,halfwidth_nm\n735,0.9,0.01\n736,0.8,0.02\n",
            "m",
        )
        .unwrap();
        assert_eq!(s.values, vec![0.9, 0.8]);
    }

    #[test]
    fn csv_and_json_round_trip() {
        let axis: Vec<f64> = (0..1000).map(|i| 1400.0 + 0.4 * i as f64).collect();
        let values: Vec<f64> = axis
            .iter()
            .map(|x| (x / 37.0).sin().abs() * 0.013)
            .collect();
        let s = Spectrum::new(AxisUnit::Wavenumber, SpectrumKind::Absorbance, axis, values)
            .unwrap()
            .with_metadata("temperature_c", "24");
        let dir = tempfile::tempdir().unwrap();
        for (name, fmt) in [
            ("s.csv", SpectrumFormat::Csv),
            ("s.json", SpectrumFormat::Json),
        ] {
            let p = dir.path().join(name);
            write_spectrum(&p, &s, fmt).unwrap();
            let back = read_spectrum(&p, SpectrumFormat::from_path(&p)).unwrap();
            for (a, b) in s.values.iter().zip(&back.values) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
            }
            assert_eq!(back.axis, s.axis);
        }
    }

    #[test]
    fn atr_examples() {
        let cfg = AtrConversionConfig::default();
        let zero = atr_to_transmissivity(&abs_spectrum(vec![0.0; 5]), &cfg).unwrap();
        assert!(zero.values.iter().all(|&t| t == 1.0));

        // α = 0.01·ln10/100 nm⁻¹ = 2.302585e-4 nm⁻¹; α·6000 nm = 1.381551;
        // T = e^(−1.381551) = 0.2511886, τ = √T = 0.5011872.
        let t = atr_to_transmissivity(&abs_spectrum(vec![0.01]), &cfg).unwrap();
        assert!(
            (t.values[0] - 0.501_187_233_6).abs() < 1e-9,
            "{}",
            t.values[0]
        );

        let double = AtrConversionConfig {
            sample_path_um: 12.0,
            ..cfg
        };
        let a = atr_to_transmissivity(&abs_spectrum(vec![0.003, 0.02]), &cfg).unwrap();
        let b = atr_to_transmissivity(&abs_spectrum(vec![0.003, 0.02]), &double).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((y.ln() - 2.0 * x.ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn atr_rejects_negative_absorbance() {
        let err = atr_to_transmissivity(
            &abs_spectrum(vec![0.01, -0.001]),
            &AtrConversionConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, SpectraError::NegativeAbsorbance { .. }));
    }

    #[test]
    fn axis_conversion_examples() {
        let s = Spectrum::new(
            AxisUnit::Wavenumber,
            SpectrumKind::Absorbance,
            vec![1e4 / 6.0],
            vec![1.0],
        )
        .unwrap();
        let um = convert_axis(&s, AxisUnit::IdlerUm, None).unwrap();
        assert!((um.axis[0] - 6.0).abs() < 1e-12);

        let x = convert_value(6.66, AxisUnit::IdlerUm, AxisUnit::SignalNm, Some(660.0)).unwrap();
        assert!((x - 732.6).abs() < 0.05, "{x}");
        assert!(matches!(
            convert_value(6.66, AxisUnit::IdlerUm, AxisUnit::SignalNm, None),
            Err(SpectraError::MissingPumpWavelength)
        ));
    }

    #[test]
    fn conversion_resorts_axis() {
        let s = abs_spectrum(vec![1.0, 2.0, 3.0]);
        let um = convert_axis(&s, AxisUnit::IdlerUm, None).unwrap();
        assert!(um.axis.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(um.values, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn interpolation_is_linear_and_bounded() {
        let s = abs_spectrum(vec![0.0, 1.0, 4.0]);
        assert_eq!(s.interpolate(1600.5).unwrap(), 0.5);
        assert_eq!(s.interpolate(1602.0).unwrap(), 4.0);
        assert!(s.interpolate(1599.9).is_err());
    }

    #[test]
    fn amide_check() {
        let mut v = vec![0.0; 50];
        v[20] = 1.0;
        assert!(check_amide_i_maximum(&abs_spectrum(v), None).is_ok());
        let axis = vec![1500.0, 1550.0, 1600.0];
        let s = Spectrum::new(
            AxisUnit::Wavenumber,
            SpectrumKind::Absorbance,
            axis,
            vec![0.1, 0.9, 0.2],
        )
        .unwrap();
        assert!(check_amide_i_maximum(&s, None).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn round_trips_are_identities(xs in proptest::collection::btree_set(1000u32..4000, 2..40)) {
                let axis: Vec<f64> = xs.iter().map(|&x| x as f64 * 0.5).collect();
                let values = vec![0.0; axis.len()];
                let s = Spectrum::new(AxisUnit::Wavenumber, SpectrumKind::Arbitrary, axis, values).unwrap();
                let there = convert_axis(&s, AxisUnit::IdlerUm, None).unwrap();
                let back = convert_axis(&there, AxisUnit::Wavenumber, None).unwrap();
                for (a, b) in s.axis.iter().zip(&back.axis) {
                    prop_assert!(((a - b) / a).abs() <= 1e-10);
                }
                let signal = convert_axis(&there, AxisUnit::SignalNm, Some(660.0)).unwrap();
                let idler = convert_axis(&signal, AxisUnit::IdlerUm, Some(660.0)).unwrap();
                for (a, b) in there.axis.iter().zip(&idler.axis) {
                    prop_assert!(((a - b) / a).abs() <= 1e-10);
                }
            }

            #[test]
            fn transmissivity_decreases_with_absorbance(a in 0.0f64..0.05, d in 1e-6f64..0.05, lm in 0.5f64..20.0) {
                let cfg = AtrConversionConfig { sample_path_um: lm, ..Default::default() };
                let longer = AtrConversionConfig { sample_path_um: lm * 1.5, ..cfg };
                let s = abs_spectrum(vec![a, a + d]);
                let t = atr_to_transmissivity(&s, &cfg).unwrap();
                let t2 = atr_to_transmissivity(&s, &longer).unwrap();
                prop_assert!(t.values[1] <= t.values[0]);
                prop_assert!(t2.values[0] <= t.values[0]);
                prop_assert!(t2.values[1] <= t.values[1]);
            }
        }
    }
}
