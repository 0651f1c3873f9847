use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use serde::Serialize;
use serde_json::json;

use qsup_core::config::SampleSpec;
use qsup_core::dispersion::DispersionRegistry;
use qsup_core::interferometer::{weighted_visibility, SampleTransmissivity};
use qsup_core::pipeline;
use qsup_core::spectra::{
    self, read_spectrum, write_spectrum, write_spectrum_with_columns, AxisUnit, Spectrum,
    SpectrumFormat, SpectrumKind,
};
use qsup_core::structfit;
use qsup_core::sweep::{self, SweepParameter, SweepSpec, SweepValues};

use crate::config::{self, RunConfig, SampleSource, SweepSection};
use crate::{
    Cli, Command, CompareArgs, FitArgs, GeometryArgs, IngestArgs, SampleArgs, SimulateArgs,
    SweepArgs, UsageError,
};

struct Run {
    config: RunConfig,
    out_dir: PathBuf,
    outputs: Vec<PathBuf>,
}

impl Run {
    fn new(cli: &Cli, config_path: Option<&Path>) -> Result<Self> {
        let mut config = config::load_or_default(config_path)?;
        if let Some(d) = &cli.out_dir {
            config.out_dir = Some(d.clone());
        }
        if let Some(t) = cli.threads {
            config.threads = Some(t);
        }
        if let Some(f) = &cli.dispersion_file {
            config.dispersion_file = Some(f.clone());
        }
        let out_dir = config.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&out_dir)
            .with_context(|| format!("creating output directory {}", out_dir.display()))?;
        Ok(Self {
            config,
            out_dir,
            outputs: Vec::new(),
        })
    }

    fn registry(&self) -> Result<DispersionRegistry> {
        Ok(DispersionRegistry::load(
            self.config.dispersion_file.as_deref(),
        )?)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn write_text(&mut self, path: PathBuf, text: &str) -> Result<()> {
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        info!("wrote {}", path.display());
        self.outputs.push(path);
        Ok(())
    }

    fn write_json(&mut self, path: PathBuf, value: &impl Serialize) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        self.write_text(path, &(text + "\n"))
    }

    /// Config echo plus inputs and outputs, enough to rerun the command.
    fn write_metadata(&mut self, command: &str, inputs: serde_json::Value) -> Result<()> {
        let path = self.path(&format!("{command}_metadata.json"));
        let mut outputs: Vec<String> = self
            .outputs
            .iter()
            .map(|p| p.display().to_string())
            .collect();
        outputs.push(path.display().to_string());
        let meta = json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "dispersion_override": std::env::var(qsup_core::dispersion::DISPERSION_ENV_VAR).ok(),
            "config": self.config,
            "inputs": inputs,
            "outputs": outputs,
        });
        self.write_json(path, &meta)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(a) => ingest(&cli, a),
        Command::Simulate(a) => simulate(&cli, a),
        Command::Sweep(a) => sweep(&cli, a),
        Command::Fit(a) => fit(&cli, a),
        Command::Compare(a) => compare(&cli, a),
    }
}

fn read(path: &Path) -> Result<Spectrum> {
    Ok(read_spectrum(path, SpectrumFormat::from_path(path))?)
}

fn window(v: &Option<Vec<f64>>) -> Option<[f64; 2]> {
    v.as_ref().map(|w| [w[0], w[1]])
}

fn apply_geometry(config: &mut RunConfig, g: &GeometryArgs) {
    let geo = &mut config.geometry;
    if let Some(v) = g.gap_mm {
        geo.gap_l_a_mm = v;
    }
    if let Some(v) = g.crystal_length_mm {
        geo.crystal.length_mm = v;
    }
    if let Some(v) = g.cut_angle_deg {
        geo.crystal.cut_angle_deg = v;
    }
    if let Some(v) = g.biocell_mm {
        geo.biocell_l_b_mm = v;
    }
    if let Some(v) = g.sample_path_um {
        geo.sample_l_m_um = v;
    }
    if let Some(v) = g.pump_nm {
        geo.pump.wavelength_nm = v;
    }
}

fn apply_sample(config: &mut RunConfig, s: &SampleArgs) {
    if let Some(f) = &s.sample {
        config.sample = Some(SampleSource::File { file: f.clone() });
    }
    if let Some(t) = s.tau {
        config.sample = Some(SampleSource::Flat { tau: t });
    }
    if let Some(d) = s.penetration_depth_nm {
        config.conversion.penetration_depth_nm = d;
    }
    if let Some(p) = s.passes {
        config.conversion.pass_count = p;
    }
}

fn apply_grid(config: &mut RunConfig, lambda_points: Option<usize>, theta_points: Option<usize>) {
    if let Some(n) = lambda_points {
        config.grid.lambda_points = n;
    }
    if let Some(n) = theta_points {
        config.grid.theta_points = n;
    }
}

fn sample_spec(config: &RunConfig) -> Result<SampleSpec> {
    match &config.sample {
        None => Err(UsageError(
            "no sample given; use --sample FILE, --tau X or a `sample` config entry".into(),
        )
        .into()),
        Some(SampleSource::Flat { tau }) => Ok(SampleSpec::Flat { tau: *tau }),
        Some(SampleSource::File { file }) => {
            let spectrum = read(file)?;
            match spectrum.kind {
                SpectrumKind::Absorbance => Ok(SampleSpec::Absorbance {
                    spectrum,
                    penetration_depth_nm: config.conversion.penetration_depth_nm,
                    pass_count: config.conversion.pass_count,
                }),
                SpectrumKind::TransmissivityAmplitude => {
                    Ok(SampleSpec::Transmissivity { spectrum })
                }
                other => Err(UsageError(format!(
                    "{}: a sample must be absorbance or transmissivity_amplitude, got {other}",
                    file.display()
                ))
                .into()),
            }
        }
    }
}

fn ingest(cli: &Cli, a: &IngestArgs) -> Result<()> {
    let mut run = Run::new(cli, cli.config.as_deref())?;
    let c = &mut run.config.conversion;
    if let Some(r) = &a.reference {
        c.reference_file = Some(r.clone());
    }
    if let Some(s) = a.reference_scale {
        c.reference_scale = s;
    }
    if let Some(w) = window(&a.baseline) {
        c.baseline_window_cm1 = Some(w);
    }
    if let Some(d) = a.penetration_depth_nm {
        c.penetration_depth_nm = d;
    }
    if let Some(p) = a.passes {
        c.pass_count = p;
    }
    if let Some(l) = a.sample_path_um {
        run.config.geometry.sample_l_m_um = l;
    }
    let target: Option<AxisUnit> = a
        .axis
        .as_deref()
        .map(str::parse)
        .transpose()
        .map_err(|e: spectra::SpectraError| UsageError(e.to_string()))?;

    let mut s = read(&a.input)?;
    s.require_kind(SpectrumKind::Absorbance)?;
    let lp = Some(run.config.geometry.pump.wavelength_nm);
    if let Err(msg) = spectra::check_amide_i_maximum(&s, lp) {
        warn!("{}: {msg}", a.input.display());
    }
    let conv = run.config.conversion.clone();
    if let Some(r) = &conv.reference_file {
        s = structfit::subtract_reference(&s, &read(r)?, conv.reference_scale)?;
    }
    if let Some(w) = conv.baseline_window_cm1 {
        s = structfit::baseline_correct(&s, w)?;
    }
    let atr = run.config.atr(run.config.geometry.sample_l_m_um);
    let mut tau = spectra::atr_to_transmissivity(&s, &atr)?;
    if let Some(unit) = target {
        tau = spectra::convert_axis(&tau, unit, lp)?;
    }
    let out = a.output.clone().unwrap_or_else(|| {
        let stem = a
            .input
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("spectrum");
        run.path(&format!("{stem}_transmissivity.csv"))
    });
    write_spectrum(&out, &tau, SpectrumFormat::from_path(&out))?;
    info!("wrote {}", out.display());
    run.outputs.push(out.clone());
    run.write_metadata(
        "ingest",
        json!({
            "input": a.input,
            "atr": atr,
            "output_axis": tau.axis_unit,
        }),
    )?;
    println!("{}", out.display());
    Ok(())
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Result<()> {
    let mut run = Run::new(cli, cli.config.as_deref())?;
    apply_geometry(&mut run.config, &a.geometry);
    apply_sample(&mut run.config, &a.sample);
    apply_grid(&mut run.config, a.lambda_points, a.theta_points);
    let registry = run.registry()?;
    let geometry = run.config.geometry.resolve(&registry)?;
    let spec = sample_spec(&run.config)?;
    let sample = spec.resolve(&geometry)?;
    info!("simulating with {}", spec.describe());
    let sim = pipeline::simulate(&geometry, &sample, &run.config.grid, &run.config.visibility)?;

    run.write_text(run.path("map.csv"), &sim.map.to_csv_string())?;
    let fringes = Spectrum::new(
        AxisUnit::SignalNm,
        SpectrumKind::Arbitrary,
        sim.fringes.lambda_s_nm.clone(),
        sim.fringes.intensity.clone(),
    )?;
    run.write_text(
        run.path("fringes.csv"),
        &spectra::to_csv_string(&fringes, &[]),
    )?;
    let tau_path = run.path("sample_transmissivity.csv");
    write_spectrum(&tau_path, sample.spectrum(), SpectrumFormat::Csv)?;
    run.outputs.push(tau_path);

    let inputs = json!({ "sample": spec.describe() });
    let curve = match sim.visibility {
        Ok(c) => c,
        Err(e) => {
            run.write_metadata("simulate", inputs)?;
            return Err(e.into());
        }
    };
    let vis = pipeline::curve_to_spectrum(&curve)?;
    let halfwidths: Vec<f64> = curve.points.iter().map(|p| p.halfwidth_nm).collect();
    let vis_path = run.path("visibility.csv");
    write_spectrum_with_columns(
        &vis_path,
        &vis,
        SpectrumFormat::Csv,
        &[("halfwidth_nm", &halfwidths)],
    )?;
    run.outputs.push(vis_path);
    let beta = weighted_visibility(&curve, &run.config.windows);
    match &beta {
        Ok(b) => {
            run.write_json(run.path("beta.json"), b)?;
            println!(
                "beta = {:.6}  (V_A = {:.4}, V_B = {:.4}, {} fringes)",
                b.beta,
                b.v_a,
                b.v_b,
                curve.points.len()
            );
        }
        Err(e) => warn!("beta not available: {e}"),
    }
    run.write_metadata("simulate", inputs)?;
    Ok(())
}

fn parse_parameter(s: &str) -> Result<SweepParameter> {
    serde_json::from_value(json!(s)).map_err(|_| {
        UsageError(format!(
            "unknown sweep parameter '{s}' (crystal_L, sample_L_m or gap_L_a)"
        ))
        .into()
    })
}

fn sweep(cli: &Cli, a: &SweepArgs) -> Result<()> {
    if a.spec.is_some() && cli.config.is_some() {
        bail!(UsageError(
            "give the sweep spec either positionally or with --config, not both".into()
        ));
    }
    let mut run = Run::new(cli, a.spec.as_deref().or(cli.config.as_deref()))?;
    apply_geometry(&mut run.config, &a.geometry);
    apply_sample(&mut run.config, &a.sample);
    apply_grid(&mut run.config, a.lambda_points, a.theta_points);
    if let Some(p) = &a.parameter {
        let parameter = parse_parameter(p)?;
        let values = run.config.sweep.take().and_then(|s| s.values);
        run.config.sweep = Some(SweepSection { parameter, values });
    }
    let section = run.config.sweep.as_mut().ok_or_else(|| {
        UsageError("no sweep parameter; use --parameter or a `sweep` config entry".into())
    })?;
    if let Some(v) = &a.values {
        section.values = Some(SweepValues::List(v.clone()));
    }
    if let Some(r) = &a.range {
        if r[2] < 2.0 || r[2].fract() != 0.0 {
            bail!(UsageError(format!(
                "--range COUNT must be an integer >= 2, got {}",
                r[2]
            )));
        }
        section.values = Some(SweepValues::Range {
            start: r[0],
            stop: r[1],
            count: r[2] as usize,
        });
    }
    let section = section.clone();

    let registry = run.registry()?;
    let spec = SweepSpec {
        parameter: section.parameter,
        values: section.values.clone(),
        base: run.config.geometry.clone(),
        sample: sample_spec(&run.config)?,
        grid: run.config.grid,
        windows: run.config.windows,
        visibility: run.config.visibility,
    };
    let values = spec
        .resolved_values()
        .map_err(|e| UsageError(e.to_string()))?;
    info!("sweeping {} over {} values", spec.parameter, values.len());
    let result = sweep::run_sweep(&spec, &registry, run.config.threads.unwrap_or(0))?;
    let summary = sweep::summarize(&result);

    let null_analysis = if spec.parameter == SweepParameter::GapLa {
        let geometry = run.config.geometry.resolve(&registry)?;
        let grid = &run.config.grid;
        let mid = 0.5 * (grid.lambda_s_nm[0] + grid.lambda_s_nm[1]);
        let idler = qsup_core::spdc::idler_wavelength(geometry.pump.wavelength_nm, mid)?;
        let predicted = qsup_core::interferometer::null_gap_predictor(&geometry, idler)?;
        let located = result.locate_null(predicted, 2.0);
        if let Some(x) = located {
            println!("fringe collapse at L_a = {x} mm (predicted {predicted:.3} mm)");
        }
        Some(json!({
            "predicted_mm": predicted,
            "located_mm": located,
            "within_0_3_mm": located.map(|x| (x - predicted).abs() <= 0.3),
        }))
    } else {
        None
    };

    let stem = format!("sweep_{}", spec.parameter);
    run.write_text(run.path(&format!("{stem}.csv")), &result.to_csv_string())?;
    run.write_json(
        run.path(&format!("{stem}.json")),
        &json!({ "summary": summary, "null": null_analysis, "config": run.config }),
    )?;
    match summary.argmax {
        Some(x) => println!(
            "argmax {} = {x} {} (beta = {:.6})",
            spec.parameter,
            summary.unit,
            summary.beta_at_argmax.unwrap_or(f64::NAN)
        ),
        None => println!("no point produced fringes"),
    }
    if !summary.null_points.is_empty() {
        println!("no fringes at {:?} {}", summary.null_points, summary.unit);
    }
    run.write_metadata("sweep", json!({ "values": values }))?;
    Ok(())
}

fn fit(cli: &Cli, a: &FitArgs) -> Result<()> {
    let mut run = Run::new(cli, cli.config.as_deref())?;
    if let Some(w) = window(&a.window) {
        run.config.fit.band_window_cm1 = w;
    }
    if let Some(w) = window(&a.baseline) {
        run.config.fit.baseline_window_cm1 = Some(w);
    }
    if let Some(s) = &a.seeds {
        run.config.fit.seeds_cm1 = Some(s.clone());
    }
    if let Some(r) = &a.reference {
        run.config.conversion.reference_file = Some(r.clone());
    }
    let s = read(&a.input)?;
    s.require_kind(SpectrumKind::Absorbance)?;
    let reference = run
        .config
        .conversion
        .reference_file
        .as_deref()
        .map(read)
        .transpose()?;
    let (report, preprocessed) = structfit::analyze(&s, reference.as_ref(), &run.config.fit)?;
    let d2 = structfit::second_derivative(
        &preprocessed,
        run.config.fit.sg_points,
        run.config.fit.sg_order,
    )?;

    run.write_text(run.path("structure_table.csv"), &report.to_table_csv())?;
    run.write_json(run.path("structure_report.json"), &report)?;
    run.write_text(
        run.path("fit_diagnostics.csv"),
        &report.diagnostics_csv(&preprocessed),
    )?;
    let d2_path = run.path("second_derivative.csv");
    write_spectrum(&d2_path, &d2, SpectrumFormat::Csv)?;
    run.outputs.push(d2_path);
    for c in &report.components {
        println!(
            "{:8.2} cm-1  {:<12} {:6.2} %",
            c.center_cm1,
            c.assignment.to_string(),
            c.area_percent
        );
    }
    run.write_metadata("fit", json!({ "input": a.input }))?;
    Ok(())
}

fn compare(cli: &Cli, a: &CompareArgs) -> Result<()> {
    let mut run = Run::new(cli, cli.config.as_deref())?;
    if let Some(p) = a.pump_nm {
        run.config.geometry.pump.wavelength_nm = p;
    }
    if let Some(w) = window(&a.window) {
        run.config.compare.window_cm1 = Some(w);
    }
    if a.full_range {
        run.config.compare.window_cm1 = None;
    }
    let curve = pipeline::curve_from_spectrum(&read(&a.visibility)?)?;
    let tau = read(&a.transmissivity)?;
    SampleTransmissivity::new(spectra::convert_axis(
        &tau,
        AxisUnit::IdlerUm,
        Some(run.config.geometry.pump.wavelength_nm),
    )?)?;
    let cmp = pipeline::compare(
        &curve,
        &tau,
        run.config.geometry.pump.wavelength_nm,
        run.config.compare.window_cm1,
    )?;
    run.write_text(run.path("compare.csv"), &cmp.to_csv_string())?;
    run.write_json(
        run.path("compare.json"),
        &json!({
            "points": cmp.rows.len(),
            "skipped": cmp.skipped,
            "max_abs_deviation": cmp.max_abs_deviation,
            "mean_abs_deviation": cmp.mean_abs_deviation,
            "window_cm1": run.config.compare.window_cm1,
        }),
    )?;
    println!(
        "{} points: mean |V - tau| = {:.5}, max = {:.5}",
        cmp.rows.len(),
        cmp.mean_abs_deviation,
        cmp.max_abs_deviation
    );
    run.write_metadata(
        "compare",
        json!({ "visibility": a.visibility, "transmissivity": a.transmissivity }),
    )?;
    Ok(())
}
