use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use prolab::colorspaces::{ColorContext, ColorSpaceId, TaggedColor};
use prolab::data::{SpectralData, ALL_FILES};
use prolab::difference::PairEvaluator;
use prolab::gamut::{build_gamut, sample_pairs, GamutHull};
use prolab::model::{constraint_values, reference_matrices, MetricParams, WhitePoint};
use prolab::noise::{
    calibration_chain, device_to_linrgb, device_to_xyz_printed, fit_jahne, heteroscedasticity_h, NoiseModel,
    PatchRecord, DEVICE_EXPOSURE, GAIN, VAR_EPS,
};
use prolab::optimizer::{fit_metric_params, FitConfig};
use prolab::report::{
    difference_scatter, format_table, gamut_vertices, h_sample_xyz, h_seed, macadam_contours, max_chord_deviation,
    noise_ellipsoids, reproducible_srgb_grid, scatter_stress, srgb_cube_edges, srgb_cube_faces, table1, CurvePoint,
    RunManifest,
};
use prolab::{Error, Mat3, Vec3};
use serde_json::json;

use crate::io::{fixed6, manifest_path, read_triples, sink};
use crate::{Cli, Command, ConvertArgs, Figure, FitArgs, NoiseCommand, NoiseParams, PlotArgs, SampleArgs, Table1Args};

/// Smallest sample accepted by `table1`.
const MIN_TABLE_N: usize = 1000;

pub fn run(cli: Cli) -> Result<()> {
    let ctx = match cli.white {
        Some(w) => ColorContext::with_white(WhitePoint::new(w.0)?)?,
        None => ColorContext::default(),
    };
    match cli.command {
        Command::Convert(a) => convert(&ctx, a),
        Command::Uniformity(a) => uniformity(&ctx, a.space, &a.sample),
        Command::Table1(a) => table(&ctx, a),
        Command::Fit(a) => fit(a),
        Command::Noise { command } => noise(&ctx, command),
        Command::Plotdata(a) => plotdata(&ctx, a),
        Command::DumpConstants { out } => dump_constants(out.as_deref()),
    }
}

fn spaces(one: Option<ColorSpaceId>) -> Vec<ColorSpaceId> {
    one.map_or_else(|| ColorSpaceId::ALL.to_vec(), |s| vec![s])
}

fn hull_for(ctx: &ColorContext, resolution: usize) -> Result<(GamutHull, SpectralData)> {
    let spectra = SpectralData::load()?;
    let hull = build_gamut(&spectra, ctx.white(), resolution)?;
    log::info!("hull: {} vertices, {} faces", hull.vertices.len(), hull.faces.len());
    Ok((hull, spectra))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn convert(ctx: &ColorContext, a: ConvertArgs) -> Result<()> {
    let colors = match (&a.color, &a.input) {
        (Some(c), _) => vec![c.0],
        (None, Some(path)) => read_triples(path)?,
        (None, None) => unreachable!("clap requires --color or --input"),
    };
    let mut out = sink(a.out.as_deref())?;
    for (i, c) in colors.iter().enumerate() {
        let v = ctx
            .convert(&TaggedColor::new(a.from, *c), a.to)
            .map_err(|e| Error::Conversion { index: i, source: Box::new(e) })?
            .v;
        writeln!(out, "{},{},{}", fixed6(v.x), fixed6(v.y), fixed6(v.z))?;
    }
    out.flush()?;
    Ok(())
}

fn uniformity(ctx: &ColorContext, space: Option<ColorSpaceId>, s: &SampleArgs) -> Result<()> {
    let (hull, _) = hull_for(ctx, s.resolution)?;
    let sample = sample_pairs(&hull, s.n, s.seed)?;
    let pairs = PairEvaluator::new(&sample.pairs, ctx.white())?;
    for space in spaces(space) {
        println!("{:<10} {:.6}", space.name(), pairs.uniformity(&ctx.transform(space))?);
    }
    Ok(())
}

fn table(ctx: &ColorContext, a: Table1Args) -> Result<()> {
    if a.n < MIN_TABLE_N {
        return Err(Error::InvalidArgument(format!("n = {} is below {MIN_TABLE_N}", a.n)).into());
    }
    let (hull, spectra) = hull_for(ctx, a.resolution)?;
    let rows = table1(ctx, &hull, &NoiseModel::default(), a.n, a.seed)?;
    print!("{}", format_table(&rows));
    if let Some(dir) = a.out {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut w = csv::Writer::from_path(dir.join("table1.csv"))?;
        w.write_record(["space", "collineation", "U_T", "H_T"])?;
        for r in &rows {
            w.write_record([r.space.name().to_string(), r.collineation.to_string(), r.u_t.to_string(), r.h_t.to_string()])?;
        }
        w.flush()?;
        write_json(&dir.join("table1.json"), &rows)?;
        write_json(&dir.join("manifest.json"), &RunManifest::new(a.seed, a.n, &hull, &spectra))?;
    }
    Ok(())
}

fn fit(a: FitArgs) -> Result<()> {
    let cfg = FitConfig {
        n_pairs: a.pairs,
        seed: a.seed,
        n_starts: a.starts,
        max_iters: a.max_iters,
        hull_resolution: a.resolution,
        ..FitConfig::default()
    };
    let r = fit_metric_params(&cfg)?;
    let mu: Vec<String> = r.mu.as_array().iter().map(|v| format!("{v:.6}")).collect();
    println!("mu              = [{}]", mu.join(", "));
    println!("U_train         = {:.6}", r.u_train);
    println!("constraint_min  = {:.6e}", r.constraint_min);
    println!("best start      = {}", r.start_index);
    if let Some(path) = a.out {
        write_json(&path, &r)?;
    }
    Ok(())
}

fn noise_model(p: &NoiseParams) -> Result<NoiseModel> {
    let nm = NoiseModel::default();
    Ok(nm.with_noise(p.g.unwrap_or(nm.g), p.var_eps.unwrap_or(nm.var_eps))?)
}

fn read_patches(path: &Path) -> Result<Vec<PatchRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let rows: Result<Vec<PatchRecord>, _> = reader.deserialize().collect();
    rows.with_context(|| format!("parsing {}", path.display()))
}

fn noise(ctx: &ColorContext, cmd: NoiseCommand) -> Result<()> {
    match cmd {
        NoiseCommand::Fit { input, out } => {
            let fit = fit_jahne(&read_patches(&input)?)?;
            println!("g       = {:.6}", fit.g);
            println!("var_eps = {:.6}", fit.var_eps);
            if let Some(path) = out {
                write_json(&path, &fit)?;
            }
        }
        NoiseCommand::H { sample, model } => {
            let nm = noise_model(&model)?;
            let s = &sample.sample;
            let (hull, _) = hull_for(ctx, s.resolution)?;
            let colors = h_sample_xyz(&hull, &nm, s.n, h_seed(s.seed))?;
            for space in spaces(sample.space) {
                println!("{:<10} {:.6}", space.name(), heteroscedasticity_h(&ctx.transform(space), &colors, &nm)?);
            }
        }
        NoiseCommand::Ellipsoids { space, levels, model, out } => {
            let nm = noise_model(&model)?;
            write_ellipsoids(ctx, space, levels, &nm, out.as_deref())?;
        }
    }
    Ok(())
}

fn write_ellipsoids(ctx: &ColorContext, space: ColorSpaceId, levels: usize, nm: &NoiseModel, out: Option<&Path>) -> Result<()> {
    let grid = reproducible_srgb_grid(nm, levels);
    let frames = noise_ellipsoids(ctx, space, &grid, nm)?;
    let mut w = csv::Writer::from_writer(sink(out)?);
    let mut header = vec!["X", "Y", "Z", "c1", "c2", "c3", "s1", "s2", "s3"];
    header.extend(["a1x", "a1y", "a1z", "a2x", "a2y", "a2z", "a3x", "a3y", "a3z"]);
    w.write_record(&header)?;
    for e in &frames {
        let mut row: Vec<f64> = e.xyz.iter().chain(e.centre.iter()).copied().collect();
        row.extend(e.sigmas);
        for k in 0..3 {
            row.extend(e.axes.column(k).iter());
        }
        w.write_record(row.iter().map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}

fn write_curves(points: &[CurvePoint], kind: &str, w: &mut csv::Writer<Box<dyn Write>>) -> Result<()> {
    for p in points {
        w.write_record([kind.to_string(), p.curve.to_string(), p.t.to_string(), p.v.x.to_string(), p.v.y.to_string(), p.v.z.to_string()])?;
    }
    Ok(())
}

fn plotdata(ctx: &ColorContext, a: PlotArgs) -> Result<()> {
    let out = a.out.as_deref();
    match a.figure {
        Figure::SrgbCube => {
            let edges = srgb_cube_edges(ctx, a.space, a.steps)?;
            let faces = srgb_cube_faces(ctx, a.space, 4, a.steps)?;
            eprintln!("max edge deviation from chord: {:e}", max_chord_deviation(&edges));
            let mut w = csv::Writer::from_writer(sink(out)?);
            w.write_record(["kind", "curve", "t", "c1", "c2", "c3"])?;
            write_curves(&edges, "edge", &mut w)?;
            write_curves(&faces, "face", &mut w)?;
            w.flush()?;
        }
        Figure::Macadam => {
            let contours = macadam_contours(ctx, a.space, a.steps)?;
            let mut w = csv::Writer::from_writer(sink(out)?);
            w.write_record(["kind", "curve", "t", "c1", "c2", "c3"])?;
            write_curves(&contours, "ellipse", &mut w)?;
            w.flush()?;
        }
        Figure::Gamut3d => {
            let (hull, spectra) = hull_for(ctx, a.resolution)?;
            let verts = gamut_vertices(ctx, &hull, a.space)?;
            let mut w = csv::Writer::from_writer(sink(out)?);
            w.write_record(["kind", "index", "a", "b", "c"])?;
            for (i, v) in verts.iter().enumerate() {
                w.write_record(["vertex".into(), i.to_string(), v.x.to_string(), v.y.to_string(), v.z.to_string()])?;
            }
            for (i, t) in hull.triangles.iter().enumerate() {
                w.write_record(["face".into(), i.to_string(), t[0].to_string(), t[1].to_string(), t[2].to_string()])?;
            }
            w.flush()?;
            if let Some(p) = out {
                write_json(&manifest_path(p), &RunManifest::new(a.seed, 0, &hull, &spectra))?;
            }
        }
        Figure::Scatter => {
            let (hull, spectra) = hull_for(ctx, a.resolution)?;
            let sample = sample_pairs(&hull, a.n, a.seed)?;
            let pairs = PairEvaluator::new(&sample.pairs, ctx.white())?;
            let rows = difference_scatter(&ctx.transform(a.space), &pairs)?;
            eprintln!("stress = {:e}", scatter_stress(&rows)?);
            let mut w = csv::Writer::from_writer(sink(out)?);
            w.write_record(["de_space", "de00"])?;
            for (d, e) in &rows {
                w.write_record([d.to_string(), e.to_string()])?;
            }
            w.flush()?;
            if let Some(p) = out {
                write_json(&manifest_path(p), &RunManifest::new(a.seed, a.n, &hull, &spectra))?;
            }
        }
        Figure::NoiseClouds => write_ellipsoids(ctx, a.space, a.steps, &NoiseModel::default(), out)?,
    }
    Ok(())
}

fn rows3(m: &Mat3) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

fn dump_constants(out: Option<&Path>) -> Result<()> {
    let reference = reference_matrices();
    let published = MetricParams::published();
    let white: Vec3 = *WhitePoint::d65().xyz();
    let value = json!({
        "reference": reference,
        "mu_printed": MetricParams::PRINTED,
        "mu_recovered": published,
        "constraints_printed": constraint_values(&MetricParams::PRINTED),
        "constraints_recovered": constraint_values(&published),
        "white_d65": [white.x, white.y, white.z],
        "device_to_xyz_printed": rows3(&device_to_xyz_printed()),
        "device_to_xyz_chain": rows3(&calibration_chain()),
        "device_to_linrgb": rows3(&device_to_linrgb()),
        "device_exposure": DEVICE_EXPOSURE,
        "noise": { "g": GAIN, "var_eps": VAR_EPS },
        "data_files": ALL_FILES.iter().map(|f| json!({ "name": f.name, "sha256": f.sha256 })).collect::<Vec<_>>(),
    });
    let mut w = sink(out)?;
    writeln!(w, "{}", serde_json::to_string_pretty(&value)?)?;
    w.flush()?;
    Ok(())
}
