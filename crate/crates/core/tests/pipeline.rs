use std::f64::consts::PI;

use maxface_core::config::{neck_sizes, Configuration};
use maxface_core::preset::{catenoid, chm};
use maxface_core::singularity::{classify_at_t, predict, uniform_grid, PredictionKind};
use maxface_core::surface::{
    all_cycles, build_mesh, defect_report, flags_json, initial_params, refine_params, solve_divisor, write_obj,
    write_ply, MeshOptions, Surface, SurfaceAtlas,
};
use maxface_core::C64;

fn circ(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

fn check_prediction(cfg: &Configuration, t: f64) {
    let sizes = neck_sizes(cfg).unwrap();
    let s = Surface::new(initial_params(cfg, &sizes, t, None).unwrap()).unwrap();
    for neck in cfg.neck_ids() {
        let p = predict(cfg, &sizes, neck);
        let eval = |th: f64| s.governing_a(neck, th).unwrap_or(C64::new(f64::NAN, f64::NAN));
        let grid = uniform_grid(2048);
        let values: Vec<C64> = grid.iter().map(|th| eval(*th)).collect();
        let cls = classify_at_t(&grid, &values, &eval, 1e-9).unwrap();
        match p.kind {
            PredictionKind::ConeLike => assert!(cls.cone_like, "{neck}"),
            PredictionKind::Discrete => {
                let zeros = cls.zero_angles();
                assert_eq!(zeros.len(), p.count, "{neck}: {zeros:?} vs {:?}", p.angles);
                let m = p.leading_order.unwrap() as f64;
                for a in &p.angles {
                    let d = zeros.iter().map(|z| circ(*a, *z)).fold(f64::INFINITY, f64::min);
                    assert!(d <= PI / (8.0 * m), "{neck}: angle {a} off by {d}");
                }
            }
            PredictionKind::Undetermined => panic!("{neck} undetermined"),
        }
    }
}

#[test]
fn classification_agrees_with_prediction() {
    check_prediction(&catenoid(), 0.05);
    for m in 2..=4 {
        check_prediction(&chm(m).unwrap(), 0.02);
    }
}

#[test]
fn refinement_reduces_costa_defects() {
    let cfg = chm(2).unwrap();
    let p = initial_params(&cfg, &neck_sizes(&cfg).unwrap(), 0.05, None).unwrap();
    let out = refine_params(&p, &all_cycles(&p), 5).unwrap();
    assert!(out.final_defect < 1e-3 * out.initial_defect, "{:?}", out.history);
    let s = Surface::new(out.params).unwrap();
    let atlas = SurfaceAtlas::new(&s).unwrap();
    for d in defect_report(&s, &atlas).unwrap() {
        let h = d.horizontal[0].hypot(d.horizontal[1]);
        assert!(h < 1e-5 && d.vertical.abs() < 1e-5, "{d:?}");
    }
}

#[test]
fn mesh_exports_are_consistent() {
    let cfg = chm(2).unwrap();
    let p = solve_divisor(&initial_params(&cfg, &neck_sizes(&cfg).unwrap(), 0.05, None).unwrap(), 60).unwrap();
    let s = Surface::new(p).unwrap();
    let atlas = SurfaceAtlas::new(&s).unwrap();
    let mesh = build_mesh(&s, &atlas, &MeshOptions { resolution: 16, ..MeshOptions::default() }).unwrap();
    assert_eq!(mesh.stats.genus, 1);

    let mut obj = Vec::new();
    write_obj(&mesh, None, &mut obj).unwrap();
    let obj = String::from_utf8(obj).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), mesh.vertices.len());
    assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), mesh.faces.len());

    let mut ply = Vec::new();
    write_ply(&mesh, None, &mut ply).unwrap();
    let ply = String::from_utf8(ply).unwrap();
    assert!(ply.contains("property int sing_class"));

    let flags = flags_json(&mesh);
    let singular = mesh.vertex_flags.iter().filter(|f| f.code() != 0).count();
    assert_eq!(flags["flags"].as_object().unwrap().len(), singular);
}
