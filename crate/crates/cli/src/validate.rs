use maxface_core::config::{coincident_necks, GROWTH_SUM_TOL};
use maxface_core::C64;
use serde::Serialize;
use serde_json::Value;

/// One problem, located by a JSON pointer into the input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

fn diag(path: impl Into<String>, message: impl Into<String>) -> Diagnostic {
    Diagnostic { path: path.into(), message: message.into() }
}

fn position(v: &Value) -> Option<C64> {
    let a = v.as_array()?;
    match a.as_slice() {
        [re, im] => Some(C64::new(re.as_f64()?, im.as_f64()?)),
        _ => None,
    }
}

/// Every violation found in a configuration document; empty when valid.
pub fn diagnose(text: &str) -> Vec<Diagnostic> {
    let root: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return vec![diag("", format!("malformed JSON: {e}"))],
    };
    // Accept a bare configuration or any artifact carrying one.
    let doc = root.get("configuration").unwrap_or(&root);
    let Some(obj) = doc.as_object() else {
        return vec![diag("", "expected an object with keys L, necks, Q")];
    };
    let mut out = Vec::new();

    let levels = match obj.get("L") {
        None => {
            out.push(diag("/L", "missing"));
            None
        }
        Some(v) => match v.as_u64() {
            Some(l) if l >= 2 => Some(l as usize),
            _ => {
                out.push(diag("/L", format!("must be an integer >= 2, got {v}")));
                None
            }
        },
    };

    let mut necks: Vec<Vec<C64>> = Vec::new();
    let mut necks_ok = true;
    match obj.get("necks").map(|v| v.as_array()) {
        None => {
            out.push(diag("/necks", "missing"));
            necks_ok = false;
        }
        Some(None) => {
            out.push(diag("/necks", "must be an array of levels"));
            necks_ok = false;
        }
        Some(Some(rows)) => {
            if let Some(l) = levels {
                if rows.len() != l - 1 {
                    out.push(diag("/necks", format!("expected {} levels of necks, got {}", l - 1, rows.len())));
                }
            }
            for (i, row) in rows.iter().enumerate() {
                let Some(row) = row.as_array() else {
                    out.push(diag(format!("/necks/{i}"), "must be an array of [re, im] positions"));
                    necks_ok = false;
                    continue;
                };
                if row.is_empty() {
                    out.push(diag(format!("/necks/{i}"), "level has no necks"));
                }
                let mut parsed = Vec::with_capacity(row.len());
                for (k, p) in row.iter().enumerate() {
                    match position(p) {
                        Some(z) if z.is_finite() => parsed.push(z),
                        _ => {
                            out.push(diag(format!("/necks/{i}/{k}"), format!("expected finite [re, im], got {p}")));
                            necks_ok = false;
                        }
                    }
                }
                necks.push(parsed);
            }
        }
    }
    if necks_ok {
        for (a, b) in coincident_necks(&necks) {
            out.push(diag(
                format!("/necks/{}/{}", a.level - 1, a.index - 1),
                format!("neck {a} coincides with neck {b} (/necks/{}/{})", b.level - 1, b.index - 1),
            ));
        }
    }

    match obj.get("Q").map(|v| v.as_array()) {
        None => out.push(diag("/Q", "missing")),
        Some(None) => out.push(diag("/Q", "must be an array of growths")),
        Some(Some(q)) => {
            let values: Vec<Option<f64>> = q.iter().map(|v| v.as_f64()).collect();
            for (i, v) in values.iter().enumerate() {
                if v.is_none_or(|x| !x.is_finite()) {
                    out.push(diag(format!("/Q/{i}"), format!("expected a finite number, got {}", q[i])));
                }
            }
            if let Some(l) = levels {
                if q.len() != l {
                    out.push(diag("/Q", format!("expected {l} growths, got {}", q.len())));
                }
            }
            if values.iter().all(|v| v.is_some_and(f64::is_finite)) {
                let sum: f64 = values.iter().flatten().sum();
                if sum.abs() > GROWTH_SUM_TOL {
                    out.push(diag("/Q", format!("growths must sum to zero, residual {sum:e}")));
                } else if necks_ok && necks.len() + 1 == q.len() && necks.iter().all(|r| !r.is_empty()) {
                    // Neck sizes c_l = (n_{l-1} c_{l-1} - Q_l) / n_l must be positive.
                    let mut prev = 0.0;
                    let mut n_prev = 0.0;
                    for (l, row) in necks.iter().enumerate() {
                        let c = (n_prev * prev - values[l].unwrap_or(0.0)) / row.len() as f64;
                        if c <= 0.0 {
                            out.push(diag(format!("/Q/{l}"), format!("implied neck size c_{} = {c} is not positive", l + 1)));
                        }
                        prev = c;
                        n_prev = row.len() as f64;
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_chm_has_no_diagnostics() {
        let cfg = maxface_core::preset::chm(3).unwrap();
        assert!(diagnose(&serde_json::to_string(&cfg).unwrap()).is_empty());
    }

    #[test]
    fn duplicated_position_names_both_necks() {
        let d = diagnose(r#"{"L":2,"necks":[[[1,0],[1,0]]],"Q":[-2,2]}"#);
        assert_eq!(d.len(), 1, "{d:?}");
        assert_eq!(d[0].path, "/necks/0/0");
        assert!(d[0].message.contains("(1,1)") && d[0].message.contains("(1,2)"));
    }

    #[test]
    fn growth_residual_is_reported() {
        let d = diagnose(r#"{"L":2,"necks":[[[0,0]]],"Q":[-1,1.01]}"#);
        assert_eq!(d.len(), 1, "{d:?}");
        assert_eq!(d[0].path, "/Q");
        assert!(d[0].message.contains("1.0000000000000009e-2") || d[0].message.contains("1e-2"), "{}", d[0].message);
    }

    #[test]
    fn malformed_json_is_one_diagnostic() {
        let d = diagnose("{not json");
        assert_eq!(d.len(), 1);
        assert!(d[0].message.starts_with("malformed JSON"));
    }
}
