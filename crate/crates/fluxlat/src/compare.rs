//! Cross-report comparison on the `quantities` block of two result files.

use crate::error::CliError;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct QuantityDiff {
    pub name: String,
    pub index: usize,
    pub a: f64,
    pub b: f64,
    pub abs_diff: f64,
    pub rel_diff: f64,
    /// Combined standard error when either report carries one.
    pub sigma: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CompareReport {
    pub mode: String,
    pub tolerance: f64,
    pub diffs: Vec<QuantityDiff>,
    pub pass: bool,
}

fn as_vec(v: &Value) -> Option<Vec<f64>> {
    match v {
        Value::Number(n) => n.as_f64().map(|x| vec![x]),
        Value::Array(a) => a.iter().map(|x| x.as_f64()).collect(),
        _ => None,
    }
}

fn mode(doc: &Value, which: &str) -> Result<String, CliError> {
    doc.get("mode")
        .and_then(|m| m.as_str())
        .map(String::from)
        .ok_or_else(|| CliError::validation(format!("{which}.mode"), "report has no mode"))
}

/// Relative differences per quantity. With standard errors present, a
/// quantity passes when |a − b| − 3σ ≤ tol·max(|a|, |b|); otherwise when
/// |a − b| ≤ tol·max(|a|, |b|). Identical values always pass.
pub fn compare(a: &Value, b: &Value, tol: f64, keys: Option<(&str, &str)>) -> Result<CompareReport, CliError> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(CliError::validation("tol", "tolerance must be finite and non-negative"));
    }
    let ma = mode(a, "a")?;
    let mb = mode(b, "b")?;
    if ma != mb {
        return Err(CliError::validation("mode", format!("incomparable modes {ma} and {mb}")));
    }
    let qa = a
        .get("quantities")
        .and_then(|q| q.as_object())
        .ok_or_else(|| CliError::validation("a.quantities", "missing"))?;
    let qb = b
        .get("quantities")
        .and_then(|q| q.as_object())
        .ok_or_else(|| CliError::validation("b.quantities", "missing"))?;
    let pairs: Vec<(String, String)> = match keys {
        Some((ka, kb)) => vec![(ka.to_string(), kb.to_string())],
        None => qa.keys().filter(|k| qb.contains_key(*k)).map(|k| (k.clone(), k.clone())).collect(),
    };
    if pairs.is_empty() {
        return Err(CliError::validation("quantities", "no quantity in common"));
    }
    let se = |doc: &Value, key: &str| doc.get("stderr").and_then(|s| s.get(key)).and_then(as_vec);
    let mut diffs = Vec::new();
    for (ka, kb) in pairs {
        let va = qa
            .get(&ka)
            .and_then(as_vec)
            .ok_or_else(|| CliError::validation(format!("a.quantities.{ka}"), "missing or not numeric"))?;
        let vb = qb
            .get(&kb)
            .and_then(as_vec)
            .ok_or_else(|| CliError::validation(format!("b.quantities.{kb}"), "missing or not numeric"))?;
        if va.len() != vb.len() {
            return Err(CliError::validation(
                format!("quantities.{ka}"),
                format!("length {} against {}", va.len(), vb.len()),
            ));
        }
        let (sa, sb) = (se(a, &ka), se(b, &kb));
        let name = if ka == kb { ka.clone() } else { format!("{ka}~{kb}") };
        for i in 0..va.len() {
            let (x, y) = (va[i], vb[i]);
            let abs_diff = (x - y).abs();
            let scale = x.abs().max(y.abs());
            let rel_diff = if abs_diff == 0.0 { 0.0 } else { abs_diff / scale };
            let sigma = match (&sa, &sb) {
                (None, None) => None,
                _ => {
                    let s1 = sa.as_ref().and_then(|s| s.get(i)).copied().unwrap_or(0.0);
                    let s2 = sb.as_ref().and_then(|s| s.get(i)).copied().unwrap_or(0.0);
                    Some((s1 * s1 + s2 * s2).sqrt())
                }
            };
            let excess = abs_diff - 3.0 * sigma.unwrap_or(0.0);
            let pass = abs_diff == 0.0 || excess <= tol * scale;
            diffs.push(QuantityDiff {
                name: name.clone(),
                index: i,
                a: x,
                b: y,
                abs_diff,
                rel_diff,
                sigma,
                pass,
            });
        }
    }
    let pass = diffs.iter().all(|d| d.pass);
    Ok(CompareReport {
        mode: ma,
        tolerance: tol,
        diffs,
        pass,
    })
}
