//! `report`: re-reads run directories and checks the monitored inequalities.

use std::path::Path;

use serde_json::{json, Value};

use crate::checkpoint;
use crate::commands::{FINAL_POTENTIAL, REPORT, TRACE};
use crate::trace::Table;
use crate::CliError;

/// Slack for monotone quantities that move at roundoff level once converged.
const MONOTONE_SLACK: f64 = 1e-6;

/// Indices `k` with `v[k+1] > v[k] + slack * max(1, |v[k]|)`.
pub fn increases(v: &[f64], slack: f64) -> Vec<usize> {
    v.windows(2)
        .enumerate()
        .filter(|(_, w)| w[0].is_finite() && w[1].is_finite() && w[1] > w[0] + slack * w[0].abs().max(1.0))
        .map(|(k, _)| k)
        .collect()
}

/// Columns whose boundedness is monitored, by half-window stabilization.
pub const MONITORED: [&str; 5] = ["c_t", "sup_dudt", "phi_sup", "sandwich_gap", "drift"];

/// `sup |v|` over `[T/2, T]` divided by `sup |v|` over `[0, T/2)`, `T` the last time.
pub fn half_window_ratio(t: &[f64], v: &[f64]) -> f64 {
    let Some(&end) = t.last() else { return f64::NAN };
    let (mut first, mut second) = (0.0f64, 0.0f64);
    for (&s, &x) in t.iter().zip(v) {
        if !x.is_finite() {
            continue;
        }
        if s < end / 2.0 {
            first = first.max(x.abs());
        } else {
            second = second.max(x.abs());
        }
    }
    second / first
}

/// Summary of one run directory.
pub fn summarize(dir: &Path) -> Result<Value, CliError> {
    let table = Table::read(&dir.join(TRACE))?;
    let col = |name: &str| table.column(name).unwrap_or_default();
    let t = col("t");
    let k = col("k_energy");
    let f = col("f_tilde");
    let volume = col("volume");
    let v0 = volume.first().copied().unwrap_or(f64::NAN);
    let drift = volume.iter().map(|v| (v / v0 - 1.0).abs()).fold(0.0, f64::max);
    let k_bad = increases(&k, MONOTONE_SLACK);
    let f_pts: Vec<(f64, f64)> = t.iter().copied().zip(f).filter(|p| p.1.is_finite()).collect();
    let f_bad = increases(&f_pts.iter().map(|p| p.1).collect::<Vec<_>>(), MONOTONE_SLACK);
    let ratios: serde_json::Map<String, Value> =
        MONITORED.iter().map(|&c| (c.to_string(), json!(half_window_ratio(&t, &col(c))))).collect();
    let last = |name: &str| col(name).last().copied().unwrap_or(f64::NAN);
    let mut out = json!({
        "directory": dir.display().to_string(),
        "rows": table.rows.len(),
        "t_final": last("t"),
        "k_energy": {
            "monotone": k_bad.is_empty(),
            "violations": k_bad.iter().map(|&i| json!({"t": t[i + 1], "increase": k[i + 1] - k[i]})).collect::<Vec<_>>(),
        },
        "f_tilde": {
            "samples": f_pts.len(),
            "monotone": f_bad.is_empty(),
            "violations": f_bad.iter().map(|&i| json!({"t": f_pts[i + 1].0, "increase": f_pts[i + 1].1 - f_pts[i].1})).collect::<Vec<_>>(),
        },
        "volume_rel_drift_max": drift,
        "residuals": {
            "sup_dudt": last("sup_dudt"),
            "osc": last("osc"),
            "phi_sup": last("phi_sup"),
            "drift": last("drift"),
            "path_gap": last("path_gap"),
            "grad_excess": last("grad_excess"),
        },
        "half_window_ratios": ratios,
    });
    if let Ok(text) = std::fs::read_to_string(dir.join(REPORT)) {
        if let Ok(v) = serde_json::from_str::<Value>(&text) {
            out["run"] = json!({"converged": v["converged"], "exit_code": v["exit_code"], "final": v["final"]});
        }
    }
    if let Ok((h, _)) = checkpoint::read_file(&dir.join(FINAL_POTENTIAL)) {
        out["scenario_hash"] = json!(h.scenario_hash);
    }
    Ok(out)
}

/// One summary per directory; with two, also the differences of the scalar fields.
pub fn cmd_report(dirs: &[&Path]) -> Result<Value, CliError> {
    let runs: Vec<Value> = dirs.iter().map(|d| summarize(d)).collect::<Result<_, _>>()?;
    let mut out = json!({ "runs": runs });
    if let [a, b] = runs.as_slice() {
        let mut diff = serde_json::Map::new();
        for key in ["t_final", "volume_rel_drift_max"] {
            diff.insert(key.to_string(), json!([a[key], b[key], sub(&a[key], &b[key])]));
        }
        for key in ["sup_dudt", "osc", "phi_sup", "drift", "path_gap", "grad_excess"] {
            let (x, y) = (&a["residuals"][key], &b["residuals"][key]);
            diff.insert(key.to_string(), json!([x, y, sub(x, y)]));
        }
        out["diff"] = Value::Object(diff);
    }
    Ok(out)
}

fn sub(a: &Value, b: &Value) -> Value {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) if (x - y).is_finite() => json!(x - y),
        _ => Value::Null,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn increases_uses_relative_slack() {
        assert!(increases(&[3.0, 2.0, 2.0, 1.0], 1e-6).is_empty());
        assert_eq!(increases(&[1.0, 1.0 + 1e-7, 1.1], 1e-6), vec![1]);
        assert_eq!(increases(&[1e8, 1e8 + 50.0, 1e8 + 500.0], 1e-6), vec![1]);
    }

    #[test]
    fn half_window_ratio_of_an_exponential() {
        let t: Vec<f64> = (0..=200).map(|k| k as f64 * 0.1).collect();
        let v: Vec<f64> = t.iter().map(|s| -(-s).exp()).collect();
        assert!((half_window_ratio(&t, &v) - (-10.0f64).exp()).abs() < 1e-15);
        let flat = vec![2.0; t.len()];
        assert_eq!(half_window_ratio(&t, &flat), 1.0);
    }
}
