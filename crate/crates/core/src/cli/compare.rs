use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::run::{Summary, CONVERGENCE_FILE, SUMMARY_FILE};
use crate::error::{Error, Result};

/// One sweep of a run as read back from `convergence.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub iter: usize,
    pub max_error_ratio: f64,
    pub heuristic_is_lower: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareRow {
    pub iter: usize,
    pub a: Option<f64>,
    pub b: Option<f64>,
}

impl CompareRow {
    /// `b − a` where both runs have this iteration; equal values (including
    /// two infinite ratios) give zero.
    pub fn difference(&self) -> Option<f64> {
        let (a, b) = (self.a?, self.b?);
        Some(if a == b { 0.0 } else { b - a })
    }
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub summaries: [Summary; 2],
    pub rows: Vec<CompareRow>,
    /// First `J` from which the heuristic value stayed below the reference
    /// everywhere, per run.
    pub reliable_from: [Option<usize>; 2],
    pub text: String,
}

impl Comparison {
    pub fn max_abs_difference(&self) -> f64 {
        self.rows.iter().filter_map(CompareRow::difference).fold(0.0, |m, d| m.max(d.abs()))
    }
}

pub fn read_summary(dir: &Path) -> Result<Summary> {
    let path = dir.join(SUMMARY_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::io(&path, format!("not a run summary: {e}")))
}

pub fn read_curve(dir: &Path) -> Result<Vec<CurvePoint>> {
    let path = dir.join(CONVERGENCE_FILE);
    let mut r = csv::Reader::from_path(&path).map_err(|e| Error::io(&path, e))?;
    let headers = r.headers().map_err(|e| Error::io(&path, e))?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::io(&path, format!("missing column {name}")))
    };
    let (ci, cr, ch) = (col("iter")?, col("max_error_ratio")?, col("heuristic_is_lower")?);
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::io(&path, e))?;
        let bad = |what: &str| Error::io(&path, format!("row {}: bad {what}", line + 2));
        let iter = rec[ci].parse().map_err(|_| bad("iter"))?;
        let max_error_ratio = rec[cr].parse().map_err(|_| bad("max_error_ratio"))?;
        let heuristic_is_lower = match &rec[ch] {
            "" => None,
            s => Some(s.parse().map_err(|_| bad("heuristic_is_lower"))?),
        };
        out.push(CurvePoint { iter, max_error_ratio, heuristic_is_lower });
    }
    Ok(out)
}

fn reliable_from(curve: &[CurvePoint]) -> Option<usize> {
    let mut first = None;
    for p in curve {
        match p.heuristic_is_lower {
            Some(true) => {
                first.get_or_insert(p.iter);
            }
            _ => first = None,
        }
    }
    first
}

/// Per-iteration comparison of the error-ratio curves of two runs on the
/// same training set. Refuses runs whose training sets differ.
pub fn compare(a: &Path, b: &Path) -> Result<Comparison> {
    let (sa, sb) = (read_summary(a)?, read_summary(b)?);
    let mut reasons = Vec::new();
    if sa.seeds.training_set != sb.seeds.training_set {
        reasons.push(format!("training-set seeds differ ({} vs {})", sa.seeds.training_set, sb.seeds.training_set));
    }
    if sa.training_set_size != sb.training_set_size {
        reasons.push(format!("training-set sizes differ ({} vs {})", sa.training_set_size, sb.training_set_size));
    }
    if sa.problem.label != sb.problem.label || sa.problem.n != sb.problem.n {
        reasons.push(format!("problems differ ({:?} vs {:?})", sa.problem.label, sb.problem.label));
    }
    if !reasons.is_empty() {
        return Err(Error::Argument(format!(
            "runs are not comparable: {}; rerun with matching --xi-seed/--xi-size on the same problem",
            reasons.join(", ")
        )));
    }
    let (ca, cb) = (read_curve(a)?, read_curve(b)?);
    let mut merged: BTreeMap<usize, CompareRow> = BTreeMap::new();
    for p in &ca {
        merged.entry(p.iter).or_insert(CompareRow { iter: p.iter, a: None, b: None }).a = Some(p.max_error_ratio);
    }
    for p in &cb {
        merged.entry(p.iter).or_insert(CompareRow { iter: p.iter, a: None, b: None }).b = Some(p.max_error_ratio);
    }
    let rows: Vec<CompareRow> = merged.into_values().collect();
    let reliable = [reliable_from(&ca), reliable_from(&cb)];
    let has_oracle =
        [ca.iter().any(|p| p.heuristic_is_lower.is_some()), cb.iter().any(|p| p.heuristic_is_lower.is_some())];

    let mut text = String::new();
    let fmt_opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"));
    for (tag, dir, s) in [("A", a, &sa), ("B", b, &sb)] {
        let _ = writeln!(
            text,
            "run {tag}: {} ({}, {} samples, {})",
            dir.display(),
            s.config.pipeline.as_str(),
            s.samples,
            s.termination
        );
    }
    let _ = writeln!(text, "{:>5}  {:>14}  {:>14}  {:>14}", "J", "ratio A", "ratio B", "B - A");
    for r in &rows {
        let _ = writeln!(
            text,
            "{:>5}  {:>14}  {:>14}  {:>14}",
            r.iter,
            fmt_opt(r.a),
            fmt_opt(r.b),
            fmt_opt(r.difference())
        );
    }
    let both: Vec<&CompareRow> = rows.iter().filter(|r| r.difference().is_some()).collect();
    let b_better = both.iter().filter(|r| r.b.unwrap() <= r.a.unwrap()).count();
    let _ = writeln!(text, "B <= A at {b_better} of {} common iterations", both.len());
    for (k, tag) in ["A", "B"].iter().enumerate() {
        let line = match (has_oracle[k], reliable[k]) {
            (false, _) => "no reference values (run without --oracle)".to_string(),
            (true, Some(j)) => {
                format!("J* = {j} (heuristic bound below the reference on the whole training set from here on)")
            }
            (true, None) => "J* not reached".to_string(),
        };
        let _ = writeln!(text, "heuristic reliability, run {tag}: {line}");
    }
    Ok(Comparison { summaries: [sa, sb], rows, reliable_from: reliable, text })
}

pub fn write_compare_csv(c: &Comparison, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e))?;
    let io = |e: csv::Error| Error::io(path, e);
    w.write_record(["iter", "ratio_a", "ratio_b", "difference"]).map_err(io)?;
    let s = |v: Option<f64>| v.map(|v| format!("{v:?}")).unwrap_or_default();
    for r in &c.rows {
        w.write_record([r.iter.to_string(), s(r.a), s(r.b), s(r.difference())]).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
