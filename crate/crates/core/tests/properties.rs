use std::f64::consts::PI;

use maxface_core::config::{force, force_via_residue, neck_sizes, Configuration, NeckId};
use maxface_core::preset::{catenoid, chm};
use maxface_core::singularity::leading_residue;
use maxface_core::surface::{
    build_mesh, initial_params, MeshOptions, Side, Surface, SurfaceAtlas, VertexChart, VertexFlag,
};
use maxface_core::testing::random_configuration;
use maxface_core::C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random(seed: u64) -> Configuration {
    random_configuration(&mut ChaCha8Rng::seed_from_u64(seed), 8)
}

fn surface(cfg: &Configuration, t: f64) -> Surface {
    Surface::new(initial_params(cfg, &neck_sizes(cfg).unwrap(), t, None).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn force_forms_agree(seed in any::<u64>()) {
        let cfg = random(seed);
        let sizes = neck_sizes(&cfg).unwrap();
        for id in cfg.neck_ids() {
            let a = force(&cfg, &sizes, id);
            let b = force_via_residue(&cfg, &sizes, id);
            prop_assert!((a - b).norm() <= 1e-10 * (1.0 + a.norm()), "{id}: {a} vs {b}");
        }
    }

    #[test]
    fn growths_sum_to_zero(seed in any::<u64>()) {
        let cfg = random(seed);
        let sum: f64 = cfg.growth().iter().sum();
        let scale: f64 = cfg.growth().iter().map(|q| q.abs()).sum();
        prop_assert!(sum.abs() <= 1e-12 * scale);
        let sizes = neck_sizes(&cfg).unwrap();
        prop_assert!((1..cfg.levels()).all(|l| sizes.get(l) > 0.0));
    }

    #[test]
    fn translation_and_rotation_preserve_force_norms(seed in any::<u64>(), angle in 0.0..(2.0 * PI), dx in -3.0..3.0f64) {
        let cfg = random(seed);
        let moved = cfg.transformed(C64::from_polar(1.0, angle), C64::new(dx, 0.5 * dx)).unwrap();
        let (s0, s1) = (neck_sizes(&cfg).unwrap(), neck_sizes(&moved).unwrap());
        for id in cfg.neck_ids() {
            let (a, b) = (force(&cfg, &s0, id).norm(), force(&moved, &s1, id).norm());
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a), "{id}: {a} vs {b}");
        }
    }

    #[test]
    fn neck_charts_round_trip(frac in 0.05..0.95f64, theta in 0.0..(2.0 * PI), m in 2usize..5) {
        let s = surface(&chm(m).unwrap(), 0.05);
        let r = s.t() + frac * (s.chart_radius() - s.t());
        let coord = C64::from_polar(r, theta);
        for neck in s.params().neck_ids() {
            for side in [Side::Lower, Side::Upper] {
                let z = s.chart_to_level(neck, side, coord).unwrap();
                let back = s.local_coordinate(neck, side, z).unwrap();
                prop_assert!((back - coord).norm() <= 1e-12 * r, "{neck} {side:?}: {back} vs {coord}");
            }
        }
    }

    #[test]
    fn glued_forms_match_across_the_waist(frac in 0.0..1.0f64, theta in 0.0..(2.0 * PI)) {
        let s = surface(&chm(2).unwrap(), 0.05);
        let t = s.t();
        // |v| between t and sqrt of the chart radius times t keeps both sides in their charts.
        let r = t * (1.0 + frac * ((s.chart_radius() / t).sqrt() - 1.0));
        let v = C64::from_polar(r, theta);
        let w = t * t / v;
        for neck in s.params().neck_ids() {
            let (_, lower) = s.weierstrass_in_chart(neck, Side::Lower, v).unwrap();
            let (_, upper) = s.weierstrass_in_chart(neck, Side::Upper, w).unwrap();
            let dw = -t * t / (v * v);
            for i in 0..3 {
                let (a, b) = (lower.0[i], upper.0[i] * dw);
                // The gluing holds up to the truncation of the Laurent tails.
                prop_assert!((a - b).norm() <= 1e-6 * a.norm().max(1.0), "{neck} component {i}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn singular_set_is_the_waist(frac in 0.02..0.98f64, theta in 0.0..(2.0 * PI), t in 0.01..0.1f64) {
        let s = surface(&chm(2).unwrap(), t);
        let r = frac * s.chart_radius();
        let v = C64::from_polar(r, theta);
        for neck in s.params().neck_ids() {
            let z = s.chart_to_level(neck, Side::Lower, v).unwrap();
            let g = s.gauss_map(neck.level, z).unwrap().norm();
            let band = (t * (1.0 - 5.0 * t), t * (1.0 + 5.0 * t));
            if r < band.0 || r > band.1 {
                prop_assert!((g - 1.0).abs() > 1e-12, "|g| = 1 at |v| = {r}, t = {t}");
            }
            // Odd levels have |g| > 1 inside the waist, even levels |g| < 1.
            let inside = r < t;
            prop_assert_eq!(g > 1.0, inside == (neck.level % 2 == 1));
        }
    }
}

#[test]
fn regular_mesh_vertices_are_spacelike() {
    let s = surface(&chm(3).unwrap(), 0.05);
    let atlas = SurfaceAtlas::new(&s).unwrap();
    let mesh = build_mesh(&s, &atlas, &MeshOptions { resolution: 24, ..MeshOptions::default() }).unwrap();
    let mut checked = 0;
    for (i, chart) in mesh.provenance.iter().enumerate() {
        if mesh.vertex_flags[i] != VertexFlag::Regular {
            continue;
        }
        let (level, z) = match *chart {
            VertexChart::Level { level, z } => (level, z),
            VertexChart::Neck { neck, side, coord } => (side.level(neck), s.chart_to_level(neck, side, coord).unwrap()),
        };
        let g = s.gauss_map(level, z).unwrap().norm();
        let dh = s.height_diff(level, z).unwrap().norm();
        // Conformal factor of the induced metric, up to the constant 1/4.
        let lambda = (1.0 / g - g).powi(2) * dh * dh;
        if dh > 0.0 {
            assert!(lambda > 0.0, "vertex {i}: |g| = {g}, |dh| = {dh}");
            checked += 1;
        }
    }
    assert!(checked > mesh.vertices.len() / 2);
}

#[test]
fn governing_function_approaches_its_limit_monotonically() {
    let cfg = chm(2).unwrap();
    let sizes = neck_sizes(&cfg).unwrap();
    for neck in cfg.neck_ids() {
        let (r, poly) = leading_residue(&cfg, &sizes, neck).unwrap();
        assert_eq!(r, 1);
        let errs: Vec<f64> = [0.2, 0.1, 0.05, 0.025]
            .iter()
            .map(|&t| {
                let s = surface(&cfg, t);
                (0..256)
                    .map(|i| {
                        let th = 2.0 * PI * i as f64 / 256.0;
                        (s.governing_a(neck, th).unwrap().im / (t * t) - poly.eval(th)).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{neck}: {errs:?}");
    }
}

#[test]
fn catenoid_governing_function_is_real() {
    let s = surface(&catenoid(), 0.05);
    let neck = NeckId::new(1, 1);
    for i in 0..64 {
        let a = s.governing_a(neck, 2.0 * PI * i as f64 / 64.0).unwrap();
        assert!(a.im.abs() <= 1e-12 * a.norm(), "{a}");
    }
}
