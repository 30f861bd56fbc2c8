//! Parameter sweeps: one run per (value, replicate), aggregated per value.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::engine::{self, MetricsRecord, CSV_HEADER};
use crate::error::{Error, Result};

/// Keys that are legitimately absent from a default config.
const OPTIONAL_KEYS: [&str; 4] = [
    "holding.h",
    "holding.k_s",
    "channel.energy_per_bit",
    "traffic.max_packets_per_source",
];

/// Short names accepted on the command line.
pub fn canonical_key(key: &str) -> &str {
    match key {
        "k" => "holding.k_s",
        "h" => "holding.h",
        "v" | "speed" => "mobility.speed_mps",
        "N" | "n" | "sensors" => "network.sensors",
        "gamma" => "qlearning.gamma",
        "alpha" => "qlearning.alpha",
        "protocol" => "protocol",
        other => other,
    }
}

/// Parses a single TOML scalar such as `0.05`, `3`, `true` or `"dbr"`.
/// Bare words are taken as strings.
pub fn parse_value(text: &str) -> toml::Value {
    let doc = format!("v = {text}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(text.into())),
        Err(_) => toml::Value::String(text.into()),
    }
}

/// Returns a copy of `cfg` with the dotted `key` set to `value`.
pub fn apply_override(cfg: &ScenarioConfig, key: &str, value: &toml::Value) -> Result<ScenarioConfig> {
    let key = canonical_key(key);
    let mut root = toml::Value::try_from(cfg).map_err(|e| Error::Config(e.to_string()))?;
    let parts: Vec<&str> = key.split('.').collect();
    let (last, path) = parts.split_last().ok_or_else(|| Error::SweepKey(key.into()))?;
    let mut table = root.as_table_mut().expect("config serialises to a table");
    for p in path {
        table = table
            .get_mut(*p)
            .and_then(|v| v.as_table_mut())
            .ok_or_else(|| Error::SweepKey(key.into()))?;
    }
    let existing = table.get(*last);
    if existing.is_none() && !OPTIONAL_KEYS.contains(&key) {
        return Err(Error::SweepKey(key.into()));
    }
    let value = match (existing, value) {
        (Some(toml::Value::Float(_)), toml::Value::Integer(i)) => toml::Value::Float(*i as f64),
        _ => value.clone(),
    };
    table.insert((*last).to_string(), value);
    // The two holding parameterisations are exclusive.
    match key {
        "holding.h" => {
            table.remove("k_s");
        }
        "holding.k_s" => {
            table.remove("h");
        }
        _ => {}
    }
    let text = toml::to_string(&root).map_err(|e| Error::Config(e.to_string()))?;
    ScenarioConfig::from_toml_str(&text, Path::new(&format!("<sweep {key}>")))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRun {
    pub value: String,
    pub replicate: u32,
    pub record: MetricsRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: String,
    pub metric: &'static str,
    pub mean: f64,
    /// Sample standard deviation; NaN with fewer than two finite samples.
    pub stddev: f64,
    /// Number of runs with a finite value of this metric.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub parameter: String,
    pub runs: Vec<SweepRun>,
    pub rows: Vec<SweepRow>,
}

fn render(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn sort_key(label: &str) -> (u8, f64, String) {
    match label.parse::<f64>() {
        Ok(x) => (0, x, String::new()),
        Err(_) => (1, 0.0, label.to_string()),
    }
}

/// Mean and sample standard deviation of the finite entries.
pub fn mean_stddev(samples: &[f64]) -> (f64, f64, usize) {
    let finite: Vec<f64> = samples.iter().copied().filter(|x| x.is_finite()).collect();
    let n = finite.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let mean = finite.iter().sum::<f64>() / n as f64;
    let sd = if n < 2 {
        f64::NAN
    } else {
        (finite.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    (mean, sd, n)
}

/// Runs `replicates` seeds (`cfg.seed + r`) for every value of `key`, in
/// parallel, and aggregates each metric per value.
pub fn run_sweep(cfg: &ScenarioConfig, key: &str, values: &[toml::Value]) -> Result<SweepTable> {
    let key = canonical_key(key).to_string();
    let mut jobs = Vec::new();
    for v in values {
        let base = apply_override(cfg, &key, v)?;
        for r in 0..cfg.replicates {
            let mut c = base.clone();
            c.seed = cfg.seed + u64::from(r);
            jobs.push((render(v), r, c));
        }
    }
    let mut runs: Vec<SweepRun> = jobs
        .into_par_iter()
        .map(|(value, replicate, c)| {
            engine::run(&c).map(|record| SweepRun {
                value,
                replicate,
                record,
            })
        })
        .collect::<Result<_>>()?;
    runs.sort_by(|a, b| {
        let (ka, kb) = (sort_key(&a.value), sort_key(&b.value));
        ka.0.cmp(&kb.0)
            .then(ka.1.total_cmp(&kb.1))
            .then(ka.2.cmp(&kb.2))
            .then(a.replicate.cmp(&b.replicate))
    });
    let mut rows = Vec::new();
    let mut i = 0;
    while i < runs.len() {
        let j = i + runs[i..].iter().take_while(|r| r.value == runs[i].value).count();
        let group = &runs[i..j];
        for (m, (name, _)) in group[0].record.scalars().into_iter().enumerate() {
            let samples: Vec<f64> = group.iter().map(|r| r.record.scalars()[m].1).collect();
            let (mean, stddev, n) = mean_stddev(&samples);
            rows.push(SweepRow {
                value: group[0].value.clone(),
                metric: name,
                mean,
                stddev,
                n,
            });
        }
        i = j;
    }
    Ok(SweepTable {
        parameter: key,
        runs,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown output format `{other}`"))),
        }
    }
}

pub fn write_summary_csv<W: Write>(table: &SweepTable, mut w: W) -> std::io::Result<()> {
    writeln!(w, "value,metric,mean,stddev,n")?;
    for r in &table.rows {
        writeln!(w, "{},{},{},{},{}", r.value, r.metric, r.mean, r.stddev, r.n)?;
    }
    Ok(())
}

pub fn write_runs_csv<W: Write>(table: &SweepTable, mut w: W) -> std::io::Result<()> {
    writeln!(w, "value,replicate,{CSV_HEADER}")?;
    for r in &table.runs {
        writeln!(w, "{},{},{}", r.value, r.replicate, r.record.csv_row())?;
    }
    Ok(())
}

pub fn summary_json(table: &SweepTable) -> serde_json::Value {
    let num = |x: f64| {
        if x.is_finite() {
            serde_json::json!(x)
        } else {
            serde_json::Value::Null
        }
    };
    serde_json::json!({
        "parameter": table.parameter,
        "rows": table.rows.iter().map(|r| serde_json::json!({
            "value": r.value,
            "metric": r.metric,
            "mean": num(r.mean),
            "stddev": num(r.stddev),
            "n": r.n,
        })).collect::<Vec<_>>(),
    })
}

/// Writes `summary.csv` plus `runs.csv`, or `summary.json`, into `dir`.
pub fn emit_results(table: &SweepTable, format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    if table.rows.is_empty() {
        return Err(Error::EmptyTable);
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: Vec<u8>| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    match format {
        Format::Csv => {
            let mut s = Vec::new();
            write_summary_csv(table, &mut s).expect("writing to a Vec cannot fail");
            put("summary.csv", s)?;
            let mut r = Vec::new();
            write_runs_csv(table, &mut r).expect("writing to a Vec cannot fail");
            put("runs.csv", r)?;
        }
        Format::Json => {
            let mut s = serde_json::to_vec_pretty(&summary_json(table))?;
            s.push(b'\n');
            put("summary.json", s)?;
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        let mut c = ScenarioConfig {
            region: crate::world::Region::cube(300.0),
            max_sim_time_s: 60.0,
            replicates: 2,
            ..ScenarioConfig::default()
        };
        c.network.sensors = 20;
        c
    }

    #[test]
    fn overrides_by_alias_and_path() {
        let c = ScenarioConfig::default();
        assert_eq!(apply_override(&c, "k", &parse_value("0.01")).unwrap().holding.k_s, Some(0.01));
        let h = apply_override(&c, "holding.h", &parse_value("2")).unwrap();
        assert_eq!(h.holding, crate::config::HoldingConfig { k_s: None, h: Some(2) });
        assert_eq!(apply_override(&c, "v", &parse_value("1")).unwrap().mobility.speed_mps, 1.0);
        assert_eq!(
            apply_override(&c, "protocol", &parse_value("dbr")).unwrap().protocol,
            crate::config::Protocol::Dbr
        );
    }

    #[test]
    fn unknown_key_is_rejected() {
        let c = ScenarioConfig::default();
        assert!(matches!(
            apply_override(&c, "network.bogus", &parse_value("1")),
            Err(Error::SweepKey(_))
        ));
        assert!(matches!(
            apply_override(&c, "nosuch.section", &parse_value("1")),
            Err(Error::SweepKey(_))
        ));
    }

    #[test]
    fn out_of_range_value_is_a_config_error() {
        let c = ScenarioConfig::default();
        assert!(matches!(
            apply_override(&c, "qlearning.gamma", &parse_value("1.5")),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn aggregation_matches_recomputation() {
        let t = run_sweep(&small(), "k", &[parse_value("0.1"), parse_value("0.01")]).unwrap();
        assert_eq!(t.runs.len(), 4);
        assert_eq!(t.runs[0].value, "0.01");
        assert_eq!(t.runs[0].record.seed, 1);
        assert_eq!(t.runs[1].record.seed, 2);
        let pdr = t.rows.iter().find(|r| r.value == "0.1" && r.metric == "pdr").unwrap();
        let xs: Vec<f64> = t.runs.iter().filter(|r| r.value == "0.1").map(|r| r.record.pdr).collect();
        let m = (xs[0] + xs[1]) / 2.0;
        assert_eq!(pdr.mean, m);
        let sd = (((xs[0] - m).powi(2) + (xs[1] - m).powi(2)) / 1.0).sqrt();
        assert!((pdr.stddev - sd).abs() < 1e-15);
    }

    #[test]
    fn mean_stddev_edge_cases() {
        let (m, s, n) = mean_stddev(&[2.0, f64::NAN, 4.0]);
        assert_eq!((m, n), (3.0, 2));
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
        assert!(mean_stddev(&[1.0]).1.is_nan());
        assert_eq!(mean_stddev(&[]).2, 0);
    }

    #[test]
    fn empty_table_is_refused() {
        let t = SweepTable {
            parameter: "k".into(),
            runs: vec![],
            rows: vec![],
        };
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(emit_results(&t, Format::Csv, dir.path()), Err(Error::EmptyTable)));
    }

    #[test]
    fn json_mirrors_csv() {
        let mut c = small();
        c.replicates = 1;
        let t = run_sweep(&c, "v", &[parse_value("1")]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        emit_results(&t, Format::Csv, dir.path()).unwrap();
        emit_results(&t, Format::Json, dir.path()).unwrap();
        let csv = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        let rows = json["rows"].as_array().unwrap();
        for (line, row) in csv.lines().skip(1).zip(rows) {
            let f: Vec<&str> = line.split(',').collect();
            assert_eq!(f[1], row["metric"].as_str().unwrap());
            let mean: f64 = f[2].parse().unwrap();
            match row["mean"].as_f64() {
                Some(x) => assert_eq!(x, mean),
                None => assert!(mean.is_nan()),
            }
        }
        assert_eq!(csv.lines().count() - 1, rows.len());
    }
}
