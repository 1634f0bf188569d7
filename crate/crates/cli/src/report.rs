use std::fmt::Write;

use maxface_core::balance::{topology, TopologyReport};
use maxface_core::config::{Configuration, NeckId, NeckSizes};
use maxface_core::preset::{catenoid, chm};
use maxface_core::singularity::{predict, Justification, PredictionKind, TypeClaim};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub neck: NeckId,
    pub kind: PredictionKind,
    /// Frequency `m` of the first non-vanishing residue function.
    pub frequency: Option<usize>,
    pub amplitude: Option<f64>,
    pub count: usize,
    pub type_claim: Option<TypeClaim>,
    pub justification: Justification,
    /// Expected amplitude for recognised presets.
    pub reference_amplitude: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NeckTable {
    pub preset: Option<String>,
    pub rows: Vec<Row>,
    pub topology: TopologyReport,
}

fn same(a: &Configuration, b: &Configuration) -> bool {
    a.levels() == b.levels()
        && a.neck_counts() == b.neck_counts()
        && a.growth().iter().zip(b.growth()).all(|(x, y)| (x - y).abs() <= 1e-9)
        && a.all_positions().iter().flatten().zip(b.all_positions().iter().flatten()).all(|(p, q)| (p - q).norm() <= 1e-9)
}

/// Recognised preset and its reference amplitude per neck.
fn recognise(config: &Configuration) -> Option<(String, Box<dyn Fn(NeckId) -> Option<f64>>)> {
    if same(config, &catenoid()) {
        return Some(("catenoid".into(), Box::new(|_| None)));
    }
    (2..=12).find_map(|m| {
        let c = chm(m).ok()?;
        same(config, &c).then(|| {
            let name = if m == 2 { "costa".to_string() } else { format!("chm{m}") };
            let mf = m as f64;
            let f: Box<dyn Fn(NeckId) -> Option<f64>> = Box::new(move |n: NeckId| {
                Some(if n.level == 1 { (mf + 1.0) * mf * (mf - 1.0).powi(m as i32) } else { mf * mf - 1.0 })
            });
            (name, f)
        })
    })
}

pub fn neck_table(config: &Configuration, sizes: &NeckSizes) -> NeckTable {
    let known = recognise(config);
    let rows = config
        .neck_ids()
        .into_iter()
        .map(|neck| {
            let p = predict(config, sizes, neck);
            Row {
                neck,
                kind: p.kind,
                frequency: p.leading_order,
                amplitude: p.leading_coefficient.map(|c| c.norm()),
                count: p.count,
                type_claim: p.type_claim,
                justification: p.justification,
                reference_amplitude: known.as_ref().and_then(|(_, f)| f(neck)),
            }
        })
        .collect();
    NeckTable { preset: known.map(|k| k.0), rows, topology: topology(config) }
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "-".into())
}

pub fn render(table: &NeckTable) -> String {
    let mut s = String::new();
    let t = &table.topology;
    let _ = writeln!(s, "preset: {}", table.preset.as_deref().unwrap_or("unrecognised"));
    let _ = writeln!(s, "genus {}, {} ends, embeddable outside a compact set: {}", t.genus, t.end_count, t.embeddable);
    let _ = writeln!(s, "{:<8} {:<10} {:>4} {:>14} {:>14} {:>6}  type", "neck", "kind", "freq", "amplitude", "reference", "count");
    for r in &table.rows {
        let kind = match r.kind {
            PredictionKind::ConeLike => "cone-like",
            PredictionKind::Discrete => "discrete",
            PredictionKind::Undetermined => "unknown",
        };
        let claim = match r.type_claim {
            Some(TypeClaim::Swallowtail) => "swallowtail",
            Some(TypeClaim::Unverified) => "unverified",
            None => "-",
        };
        let _ = writeln!(
            s,
            "{:<8} {:<10} {:>4} {:>14} {:>14} {:>6}  {claim}",
            r.neck.to_string(),
            kind,
            opt(r.frequency),
            opt(r.amplitude.map(|a| format!("{a:.6}"))),
            opt(r.reference_amplitude.map(|a| format!("{a:.6}"))),
            r.count,
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use maxface_core::config::neck_sizes;

    fn table(cfg: &Configuration) -> NeckTable {
        neck_table(cfg, &neck_sizes(cfg).unwrap())
    }

    #[test]
    fn costa_amplitudes() {
        let t = table(&chm(2).unwrap());
        assert_eq!(t.preset.as_deref(), Some("costa"));
        let amps: Vec<f64> = t.rows.iter().map(|r| r.amplitude.unwrap()).collect();
        for (a, e) in amps.iter().zip([6.0, 3.0, 3.0]) {
            assert!((a - e).abs() < 1e-10, "{amps:?}");
        }
    }

    #[test]
    fn chm3_center_amplitude() {
        let t = table(&chm(3).unwrap());
        let center = &t.rows[0];
        assert_eq!(center.frequency, Some(3));
        assert!((center.amplitude.unwrap() - 96.0).abs() < 1e-9);
        assert_eq!(center.reference_amplitude, Some(96.0));
    }

    #[test]
    fn catenoid_is_a_cone_row() {
        let t = table(&catenoid());
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].kind, PredictionKind::ConeLike);
        assert!(render(&t).contains("cone-like"));
    }
}
