//! CSV and JSON emission.

use std::io::Write;
use std::path::Path;

use cournot_nash::limits::{ExperimentRecord, PILOT_GAP_THRESHOLD_N512};
use cournot_nash::median;
use serde::Serialize;
use serde_json::{json, Value};

use crate::Failure;

/// Column order of the experiment CSV.
pub const COLUMNS: [&str; 9] = ["scenario", "N", "seed", "value_N", "value_limit", "abs_gap", "w1_to_limit", "exploitability", "wall_ms"];

/// Sorts by `(N, seed)` and renders the experiment CSV; an empty list gives
/// the header alone.
pub fn experiment_csv(records: &mut [ExperimentRecord]) -> Result<String, Failure> {
    records.sort_by_key(|r| (r.n, r.seed));
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(COLUMNS).map_err(csv_err)?;
    for r in records.iter() {
        w.serialize(r).map_err(csv_err)?;
    }
    finish(w)
}

/// Header from the first record's field names; empty input gives an empty
/// file.
pub fn records_csv<R: Serialize>(records: &[R]) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, Failure> {
    let bytes = w.into_inner().map_err(|e| Failure::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::Io(e.to_string()))
}

fn csv_err(e: csv::Error) -> Failure {
    Failure::Io(e.to_string())
}

pub fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn median_of(records: &[ExperimentRecord], n: usize, pick: fn(&ExperimentRecord) -> f64) -> f64 {
    let mut v: Vec<f64> = records.iter().filter(|r| r.n == n).map(pick).collect();
    median(&mut v)
}

/// Medians per `N` and the trend criteria. The pilot threshold applies only
/// to the bundled benchmark at `N = 512`.
pub fn experiment_summary(scenario: &str, value_limit: f64, records: &[ExperimentRecord]) -> (Value, bool) {
    let mut ns: Vec<usize> = records.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let gap: Vec<f64> = ns.iter().map(|&n| median_of(records, n, |r| r.abs_gap)).collect();
    let w1: Vec<f64> = ns.iter().map(|&n| median_of(records, n, |r| r.w1_to_limit)).collect();
    let ex: Vec<f64> = ns.iter().map(|&n| median_of(records, n, |r| r.exploitability)).collect();
    let medians: Vec<Value> = ns
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            json!({
                "N": n,
                "replicas": records.iter().filter(|r| r.n == n).count(),
                "value_N": median_of(records, n, |r| r.value_n),
                "abs_gap": gap[k],
                "w1_to_limit": w1[k],
                "exploitability": ex[k],
            })
        })
        .collect();
    let pilot =
        (scenario == "benchmark_line5").then(|| ns.iter().position(|&n| n == 512)).flatten().map(|k| gap[k] < PILOT_GAP_THRESHOLD_N512);
    let criteria = json!({
        "abs_gap_decreasing": strictly_decreasing(&gap),
        "w1_decreasing": strictly_decreasing(&w1),
        "exploitability_decreasing": strictly_decreasing(&ex),
        "gap_below_pilot_threshold": pilot,
    });
    let pass = !ns.is_empty() && strictly_decreasing(&gap) && strictly_decreasing(&w1) && strictly_decreasing(&ex) && pilot != Some(false);
    let summary = json!({
        "schema": 1,
        "scenario": scenario,
        "value_limit": value_limit,
        "medians": medians,
        "criteria": criteria,
        "pass": pass,
    });
    (summary, pass)
}

pub fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Writes to `path`, or to standard output when absent.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    let res = match path {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    res.map_err(|e| Failure::Io(format!("{}: {e}", path.map_or("<stdout>".into(), |p| p.display().to_string()))))
}
