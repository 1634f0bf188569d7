use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use maxface_core::balance::{dw_dq, newton_balance, rigidity, topology, GaugeFixing};
use maxface_core::config::{all_forces, max_force, neck_sizes, Configuration, NeckSizes};
use maxface_core::exact::{identity1, identity1_closed_form, identity1_domain, identity2};
use maxface_core::format::to_json;
use maxface_core::preset::{catenoid, chm, dihedral, dihedral_default_sizes};
use maxface_core::singularity::{classify_at_t, predict, uniform_grid, SingularPoint};
use maxface_core::surface::{
    all_cycles, build_mesh, defect_report, divisor_defect, flags_json, initial_params, refine_params, solve_divisor,
    write_obj, write_ply, MeshOptions, Surface, SurfaceAtlas, SurfaceParams,
};
use maxface_core::{MaxfaceError, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::manifest::RunManifest;
use crate::{report, validate, Command, Family, Io, SurfaceArgs};

#[derive(Debug)]
pub enum CliError {
    /// Exit status 3.
    Validation(String),
    /// Exit status 2.
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 3,
            CliError::Solver(_) => 2,
        }
    }
}

impl From<MaxfaceError> for CliError {
    fn from(e: MaxfaceError) -> Self {
        match e {
            MaxfaceError::InvalidConfiguration(_)
            | MaxfaceError::NonZeroGrowthSum { .. }
            | MaxfaceError::NotAPole { .. }
            | MaxfaceError::NotBalanced { .. }
            | MaxfaceError::DisksOverlap(_)
            | MaxfaceError::InvalidInput(_) => CliError::Validation(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
    pub json: bool,
}

fn json_artifact(name: &str, manifest: &RunManifest, body: Value) -> Artifact {
    let mut map = serde_json::Map::new();
    map.insert("manifest".into(), manifest.to_value());
    if let Value::Object(fields) = body {
        map.extend(fields);
    }
    let mut text = to_json(&Value::Object(map)).expect("values serialize");
    text.push('\n');
    Artifact { name: name.into(), bytes: text.into_bytes(), json: true }
}

fn load(io: &Io) -> Result<Configuration> {
    let text = fs::read_to_string(&io.input)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", io.input.display())))?;
    let bad = |e: serde_json::Error| CliError::Validation(format!("{}: {e}", io.input.display()));
    let mut doc: Value = serde_json::from_str(&text).map_err(bad)?;
    // Artifacts of other commands carry the configuration under a key.
    if let Some(inner) = doc.get_mut("configuration") {
        doc = inner.take();
    }
    serde_json::from_value(doc).map_err(bad)
}

fn balanced(config: &Configuration, tol: f64) -> Result<NeckSizes> {
    let sizes = neck_sizes(config)?;
    let f = max_force(config, &sizes);
    if f > tol {
        return Err(CliError::Validation(format!("configuration is not balanced: max |F| = {f:e} > {tol:e}")));
    }
    Ok(sizes)
}

fn emit(artifacts: Vec<Artifact>, out: Option<&Path>) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| CliError::Validation(format!("cannot create {}: {e}", dir.display())))?;
            for a in artifacts {
                let p = dir.join(&a.name);
                fs::write(&p, &a.bytes).map_err(|e| CliError::Validation(format!("cannot write {}: {e}", p.display())))?;
            }
        }
        None => {
            for a in artifacts.into_iter().filter(|a| a.json) {
                print!("{}", String::from_utf8_lossy(&a.bytes));
            }
        }
    }
    Ok(())
}

pub fn run(cmd: &Command) -> Result<()> {
    let manifest = RunManifest::from_command(cmd)?;
    let (artifacts, out) = match cmd {
        Command::Preset { family, m, levels, out } => (vec![preset_cmd(&manifest, *family, *m, *levels)?], out.as_deref()),
        Command::Balance { io, tol_force, seed, perturb, max_iter } => {
            (vec![balance_cmd(&manifest, io, *tol_force, *seed, *perturb, *max_iter)?], io.out.as_deref())
        }
        Command::Rigidity { io, tol_force } => (vec![rigidity_cmd(&manifest, io, *tol_force)?], io.out.as_deref()),
        Command::Predict { io, tol_force } => (vec![predict_cmd(&manifest, io, *tol_force)?], io.out.as_deref()),
        Command::Classify { io, t, samples, tol_force } => {
            (vec![classify_cmd(&manifest, io, *t, *samples, *tol_force)?], io.out.as_deref())
        }
        Command::Mesh { io, surface, resolution, tol_force } => {
            if io.out.is_none() {
                return Err(CliError::Validation("mesh needs --out".into()));
            }
            (mesh_cmd(&manifest, io, surface, *resolution, *tol_force)?, io.out.as_deref())
        }
        Command::Defects { io, surface, tol_force } => {
            (vec![defects_cmd(&manifest, io, surface, *tol_force)?], io.out.as_deref())
        }
        Command::Identities { m, out } => (vec![identities_cmd(&manifest, *m)?], out.as_deref()),
        Command::Validate { io } => {
            let (artifact, count) = validate_cmd(&manifest, io);
            emit(vec![artifact], io.out.as_deref())?;
            return if count == 0 {
                Ok(())
            } else {
                Err(CliError::Validation(format!("{count} diagnostic(s)")))
            };
        }
        Command::Report { io, tol_force } => {
            let config = load(io)?;
            let sizes = balanced(&config, *tol_force)?;
            let table = report::neck_table(&config, &sizes);
            let text = report::render(&table);
            if io.out.is_none() {
                print!("{text}");
                return Ok(());
            }
            let body = serde_json::to_value(&table).expect("table serializes");
            let txt = Artifact { name: "report.txt".into(), bytes: text.into_bytes(), json: false };
            (vec![json_artifact("report.json", &manifest, body), txt], io.out.as_deref())
        }
    };
    emit(artifacts, out)
}

fn preset_cmd(manifest: &RunManifest, family: Family, m: usize, levels: usize) -> Result<Artifact> {
    let (config, extra) = match family {
        Family::Catenoid => (catenoid(), Value::Null),
        Family::Chm => (chm(m)?, Value::Null),
        Family::Dihedral => {
            let sol = dihedral(levels, m, &dihedral_default_sizes(levels))?;
            let extra = json!({ "ring_values": sol.ring_values, "embeddable_hint": sol.embeddable_hint });
            (sol.config, extra)
        }
    };
    let sizes = neck_sizes(&config)?;
    let mut body = json!({
        "configuration": config,
        "neck_sizes": sizes.c,
        "max_force": max_force(&config, &sizes),
    });
    if !extra.is_null() {
        body["dihedral"] = extra;
    }
    Ok(json_artifact("configuration.json", manifest, body))
}

fn balance_cmd(
    manifest: &RunManifest,
    io: &Io,
    tol: f64,
    seed: Option<u64>,
    perturb: f64,
    max_iter: usize,
) -> Result<Artifact> {
    let mut config = load(io)?;
    let gauge = GaugeFixing::default_for(&config);
    if let (Some(seed), true) = (seed, perturb > 0.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut necks = config.all_positions().to_vec();
        for id in config.neck_ids() {
            if gauge.pinned.iter().any(|(p, _)| *p == id) {
                continue;
            }
            let r = perturb * rng.gen::<f64>().sqrt();
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            necks[id.level - 1][id.index - 1] += C64::from_polar(r, a);
        }
        config = config.with_positions(necks)?;
    }
    let out = newton_balance(&config, &gauge, max_iter, tol)?;
    let sizes = neck_sizes(&out.config)?;
    let forces: Vec<Value> = out
        .config
        .neck_ids()
        .into_iter()
        .zip(all_forces(&out.config, &sizes))
        .map(|(id, f)| json!({ "neck": id, "force": f }))
        .collect();
    Ok(json_artifact(
        "balanced.json",
        manifest,
        json!({
            "configuration": out.config,
            "iterations": out.iterations,
            "residual": out.residual,
            "pinned": gauge.pinned,
            "forces": forces,
        }),
    ))
}

fn rigidity_cmd(manifest: &RunManifest, io: &Io, tol: f64) -> Result<Artifact> {
    let config = load(io)?;
    let sizes = balanced(&config, tol)?;
    let rep = rigidity(&config, &sizes);
    let w = dw_dq(&config)?;
    Ok(json_artifact(
        "rigidity.json",
        manifest,
        json!({
            "rigidity": rep,
            "singular_value_gap": rep.gap(),
            "topology": topology(&config),
            "dw_dq": w,
            "hypotheses_hold": rep.is_rigid && w.rank == 1,
        }),
    ))
}

fn predict_cmd(manifest: &RunManifest, io: &Io, tol: f64) -> Result<Artifact> {
    let config = load(io)?;
    let sizes = balanced(&config, tol)?;
    let predictions: Vec<_> = config.neck_ids().into_iter().map(|n| predict(&config, &sizes, n)).collect();
    Ok(json_artifact("predict.json", manifest, json!({ "predictions": predictions })))
}

fn classify_cmd(manifest: &RunManifest, io: &Io, t: f64, samples: usize, tol: f64) -> Result<Artifact> {
    let config = load(io)?;
    let sizes = balanced(&config, tol)?;
    let surface = Surface::new(initial_params(&config, &sizes, t, None)?)?;
    let mut necks = Vec::new();
    for neck in config.neck_ids() {
        let eval = |th: f64| surface.governing_a(neck, th).unwrap_or(C64::new(f64::NAN, f64::NAN));
        let grid = uniform_grid(samples);
        let values: Vec<C64> = grid.par_iter().map(|th| eval(*th)).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Solver(format!("governing function undefined on the waist of {neck}")));
        }
        let cls = classify_at_t(&grid, &values, &eval, 1e-9)?;
        let points: Vec<SingularPoint> = cls.points.clone();
        let prediction = predict(&config, &sizes, neck);
        necks.push(json!({
            "neck": neck,
            "cone_like": cls.cone_like,
            "points": points,
            "predicted_count": prediction.count,
            "predicted_angles": prediction.angles,
        }));
    }
    Ok(json_artifact("classify.json", manifest, json!({ "t": t, "necks": necks })))
}

/// Initial parameters, divisor projection and optional refinement.
fn surface_params(config: &Configuration, sizes: &NeckSizes, args: &SurfaceArgs) -> Result<(SurfaceParams, Value)> {
    let params = solve_divisor(&initial_params(config, sizes, args.t, None)?, 60)?;
    if args.refine == 0 {
        return Ok((params, Value::Null));
    }
    let out = refine_params(&params, &all_cycles(&params), args.refine)?;
    let summary = json!({
        "initial_defect": out.initial_defect,
        "final_defect": out.final_defect,
        "steps": out.steps,
        "history": out.history,
    });
    Ok((out.params, summary))
}

fn defects_cmd(manifest: &RunManifest, io: &Io, args: &SurfaceArgs, tol: f64) -> Result<Artifact> {
    let config = load(io)?;
    let sizes = balanced(&config, tol)?;
    let (params, refinement) = surface_params(&config, &sizes, args)?;
    let surface = Surface::new(params.clone())?;
    let atlas = SurfaceAtlas::new(&surface)?;
    let cycles = defect_report(&surface, &atlas)?;
    let divisor = divisor_defect(&surface)?;
    let worst = cycles
        .iter()
        .map(|c| c.horizontal[0].hypot(c.horizontal[1]).max(c.vertical.abs()))
        .fold(divisor.max(), f64::max);
    Ok(json_artifact(
        "defects.json",
        manifest,
        json!({
            "t": args.t,
            "cycles": cycles,
            "divisor": divisor.per_level,
            "max_defect": worst,
            "within_tolerance": worst <= args.tol_period,
            "refinement": refinement,
            "params": params,
        }),
    ))
}

fn mesh_cmd(manifest: &RunManifest, io: &Io, args: &SurfaceArgs, resolution: usize, tol: f64) -> Result<Vec<Artifact>> {
    let config = load(io)?;
    let sizes = balanced(&config, tol)?;
    let (params, refinement) = surface_params(&config, &sizes, args)?;
    let surface = Surface::new(params)?;
    let atlas = SurfaceAtlas::new(&surface)?;
    let markers: BTreeMap<_, _> = config
        .neck_ids()
        .into_iter()
        .map(|n| (n, predict(&config, &sizes, n).angles))
        .filter(|(_, a)| !a.is_empty())
        .collect();
    let options = MeshOptions { resolution, markers, ..MeshOptions::default() };
    let mesh = build_mesh(&surface, &atlas, &options)?;
    let m = manifest.to_value();
    let mut obj = Vec::new();
    write_obj(&mesh, Some(&m), &mut obj).map_err(|e| CliError::Solver(e.to_string()))?;
    let mut ply = Vec::new();
    write_ply(&mesh, Some(&m), &mut ply).map_err(|e| CliError::Solver(e.to_string()))?;
    let swallowtails: Vec<Value> =
        config.neck_ids().into_iter().map(|n| json!({ "neck": n, "count": mesh.swallowtail_count(n) })).collect();
    Ok(vec![
        Artifact { name: "mesh.obj".into(), bytes: obj, json: false },
        Artifact { name: "mesh.ply".into(), bytes: ply, json: false },
        json_artifact("mesh_flags.json", manifest, flags_json(&mesh)),
        json_artifact(
            "mesh_stats.json",
            manifest,
            json!({
                "vertices": mesh.vertices.len(),
                "faces": mesh.faces.len(),
                "stats": mesh.stats,
                "swallowtails": swallowtails,
                "refinement": refinement,
            }),
        ),
    ])
}

fn identities_cmd(manifest: &RunManifest, max_m: i64) -> Result<Artifact> {
    if !(1..=40).contains(&max_m) {
        return Err(CliError::Validation(format!("--m must lie in 1..=40, got {max_m}")));
    }
    let second: Vec<Value> = (1..=12).map(|m| json!({ "m": m, "value": identity2(m).to_string() })).collect();
    let mut mismatches = Vec::new();
    let domain = identity1_domain(max_m);
    for &(m, n, l) in &domain {
        let v = identity1(m, n, l);
        let c = identity1_closed_form(m, n, l);
        if v != c {
            mismatches.push(json!({ "m": m, "n": n, "l": l, "sum": v.to_string(), "closed_form": c.to_string() }));
        }
    }
    let all_one = (1..=12).all(|m| identity2(m) == identity2(1));
    Ok(json_artifact(
        "identities.json",
        manifest,
        json!({
            "identity2": second,
            "identity2_all_one": all_one,
            "identity1_checked": domain.len(),
            "identity1_mismatches": mismatches,
        }),
    ))
}

fn validate_cmd(manifest: &RunManifest, io: &Io) -> (Artifact, usize) {
    let diagnostics = match fs::read_to_string(&io.input) {
        Ok(text) => validate::diagnose(&text),
        Err(e) => vec![validate::Diagnostic { path: String::new(), message: format!("cannot read input: {e}") }],
    };
    let n = diagnostics.len();
    (json_artifact("validate.json", manifest, json!({ "diagnostics": diagnostics })), n)
}
