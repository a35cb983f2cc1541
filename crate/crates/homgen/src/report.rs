//! Four-point prediction files and evaluation reports.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use homgen_core::eval::{mpd, EvalReport};
use homgen_core::homography::FourPointHomography;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

/// One line of a prediction or ground-truth file. Extra fields are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourPointRecord {
    pub pair_id: String,
    pub four_point: FourPointHomography,
}

pub fn parse_records(text: &str, what: &str) -> Result<Vec<FourPointRecord>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: FourPointRecord = serde_json::from_str(line).map_err(|e| Error::parse(what, i + 1, e))?;
        if rec.four_point.deltas.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::parse(what, i + 1, "non-finite displacement"));
        }
        if !seen.insert(rec.pair_id.clone()) {
            return Err(Error::parse(what, i + 1, format!("duplicate pair_id {:?}", rec.pair_id)));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn read_records(path: &Path) -> Result<Vec<FourPointRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_records(&text, &path.display().to_string())
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut text = String::new();
    for item in items {
        text.push_str(&serde_json::to_string(item).expect("records serialize"));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Per-pair MPD in ground-truth order. The two files must hold the same ids.
pub fn pair_mpds(pred: &[FourPointRecord], gt: &[FourPointRecord]) -> Result<Vec<(String, f64)>> {
    let by_id: HashMap<&str, &FourPointHomography> = pred.iter().map(|r| (r.pair_id.as_str(), &r.four_point)).collect();
    let gt_ids: HashSet<&str> = gt.iter().map(|r| r.pair_id.as_str()).collect();
    let mut missing: Vec<&str> = gt.iter().map(|r| r.pair_id.as_str()).filter(|id| !by_id.contains_key(id)).collect();
    let mut extra: Vec<&str> = pred.iter().map(|r| r.pair_id.as_str()).filter(|id| !gt_ids.contains(id)).collect();
    if !missing.is_empty() || !extra.is_empty() {
        missing.truncate(5);
        extra.truncate(5);
        return Err(Error::IdMismatch(format!(
            "missing predictions for {missing:?}, unknown predictions {extra:?}"
        )));
    }
    Ok(gt
        .iter()
        .map(|g| (g.pair_id.clone(), mpd(by_id[g.pair_id.as_str()], &g.four_point)))
        .collect())
}

pub fn parse_percentiles(text: &str) -> std::result::Result<Vec<f64>, String> {
    text.split(',')
        .map(|t| {
            let p: f64 = t.trim().parse().map_err(|_| format!("bad percentile {t:?}"))?;
            if p > 0.0 && p <= 100.0 {
                Ok(p)
            } else {
                Err(format!("percentile {p} outside (0, 100]"))
            }
        })
        .collect()
}

pub fn percentile_key(p: f64) -> String {
    if p.fract() == 0.0 {
        format!("{}", p as i64)
    } else {
        format!("{p}")
    }
}

/// `{count, thresholds: {"30": ..}, mpds: [..]}`.
pub fn report_to_json(report: &EvalReport) -> Value {
    let thresholds: Map<String, Value> = report
        .thresholds
        .iter()
        .map(|(p, t)| (percentile_key(*p), json!(t)))
        .collect();
    json!({ "count": report.count, "thresholds": thresholds, "mpds": report.mpds })
}

pub fn report_from_json(v: &Value) -> std::result::Result<EvalReport, String> {
    let count = v["count"].as_u64().ok_or("count missing")? as usize;
    let mpds: Vec<f64> = v["mpds"]
        .as_array()
        .ok_or("mpds missing")?
        .iter()
        .map(|m| m.as_f64().ok_or("non-numeric mpd"))
        .collect::<std::result::Result<_, _>>()?;
    let mut thresholds: Vec<(f64, f64)> = v["thresholds"]
        .as_object()
        .ok_or("thresholds missing")?
        .iter()
        .map(|(k, t)| {
            let p: f64 = k.parse().map_err(|_| "bad percentile key")?;
            Ok((p, t.as_f64().ok_or("non-numeric threshold")?))
        })
        .collect::<std::result::Result<_, &str>>()?;
    thresholds.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(EvalReport { count, thresholds, mpds })
}

pub fn csv_path(report_path: &Path) -> PathBuf {
    report_path.with_extension("csv")
}

/// Evaluates `pred` against `gt` and writes the JSON report to `out` plus a
/// `pair_id,mpd` CSV next to it.
pub fn evaluate_run(pred: &Path, gt: &Path, percentiles: &[f64], out: &Path) -> Result<EvalReport> {
    let per_pair = pair_mpds(&read_records(pred)?, &read_records(gt)?)?;
    let report = EvalReport::from_mpds(per_pair.iter().map(|(_, m)| *m).collect(), percentiles)?;
    let text = serde_json::to_string_pretty(&report_to_json(&report)).expect("report serializes");
    fs::write(out, text + "\n").map_err(|e| Error::io(out, e))?;
    let mut csv = String::from("pair_id,mpd\n");
    for (id, m) in &per_pair {
        writeln!(csv, "{id},{m}").unwrap();
    }
    let csv_out = csv_path(out);
    fs::write(&csv_out, csv).map_err(|e| Error::io(&csv_out, e))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, d: f64) -> FourPointRecord {
        FourPointRecord {
            pair_id: id.into(),
            four_point: FourPointHomography::uniform(d, 0.0),
        }
    }

    #[test]
    fn record_format() {
        let line = serde_json::to_string(&rec("0-1", 1.5)).unwrap();
        assert_eq!(line, r#"{"pair_id":"0-1","four_point":[[1.5,0.0],[1.5,0.0],[1.5,0.0],[1.5,0.0]]}"#);
        let parsed = parse_records(&format!("{line}\n\n"), "t").unwrap();
        assert_eq!(parsed, vec![rec("0-1", 1.5)]);
        assert!(parse_records(&format!("{line}\n{line}\n"), "t").is_err());
        assert!(parse_records(r#"{"pair_id":"a","four_point":[[1,2]]}"#, "t").is_err());
    }

    #[test]
    fn mismatched_ids() {
        let err = pair_mpds(&[rec("a", 0.0)], &[rec("b", 0.0)]).unwrap_err();
        assert!(matches!(err, Error::IdMismatch(_)));
        let ok = pair_mpds(&[rec("b", 1.0), rec("a", 0.0)], &[rec("a", 0.0), rec("b", 4.0)]).unwrap();
        assert_eq!(ok, vec![("a".to_string(), 0.0), ("b".to_string(), 3.0)]);
    }

    #[test]
    fn percentile_parsing_and_keys() {
        assert_eq!(parse_percentiles("30, 50,70,90").unwrap(), vec![30.0, 50.0, 70.0, 90.0]);
        assert!(parse_percentiles("0").is_err());
        assert!(parse_percentiles("x").is_err());
        assert_eq!(percentile_key(30.0), "30");
        assert_eq!(percentile_key(99.5), "99.5");
    }
}
