//! Verdicts, measurement rows and the on-disk run directory.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, ExperimentName};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Inconclusive,
    Fail,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Inconclusive => "inconclusive",
            Status::Fail => "fail",
        }
    }

    /// 0 pass, 2 fail, 3 inconclusive.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 2,
            Status::Inconclusive => 3,
        }
    }
}

/// Overall status: any failure wins, then any inconclusive.
pub fn combine(statuses: impl IntoIterator<Item = Status>) -> Status {
    statuses.into_iter().max().unwrap_or(Status::Pass)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    /// `AC1`…`AC11` for acceptance clauses, `SUPP-…` for supplementary checks.
    pub clause_id: String,
    pub check: String,
    pub status: Status,
    /// `null` when the quantity could not be measured.
    pub measured: Option<f64>,
    pub expected: String,
    pub tolerance: Option<f64>,
}

impl Verdict {
    pub fn new(clause: &str, check: impl Into<String>, status: Status, measured: f64, expected: impl Into<String>) -> Self {
        Self {
            clause_id: clause.to_string(),
            check: check.into(),
            status,
            measured: measured.is_finite().then_some(measured),
            expected: expected.into(),
            tolerance: None,
        }
    }

    /// `measured ≤ limit`.
    pub fn at_most(clause: &str, check: impl Into<String>, measured: f64, limit: f64) -> Self {
        let mut v = Self::new(clause, check, Status::from_bool(measured <= limit), measured, format!("<= {limit:e}"));
        v.tolerance = Some(limit);
        v
    }

    /// `|measured − expected| ≤ tol`.
    pub fn within(clause: &str, check: impl Into<String>, measured: f64, expected: f64, tol: f64) -> Self {
        let ok = (measured - expected).abs() <= tol;
        let mut v = Self::new(clause, check, Status::from_bool(ok), measured, format!("{expected}"));
        v.tolerance = Some(tol);
        v
    }

    /// Could not be evaluated; `why` goes into the check text.
    pub fn inconclusive(clause: &str, check: impl Into<String>, why: impl std::fmt::Display) -> Self {
        Self::new(clause, format!("{} [{why}]", check.into()), Status::Inconclusive, f64::NAN, "")
    }

    pub fn with_status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }
}

/// One diagnostics.csv record.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub t: f64,
    pub name: String,
    pub value: f64,
    pub flags: String,
}

/// Two-column plot series written as `<name>.dat`.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub columns: [String; 2],
    pub points: Vec<(f64, f64)>,
}

/// Everything an experiment produces.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub verdicts: Vec<Verdict>,
    pub rows: Vec<Row>,
    pub series: Vec<Series>,
    /// Grid/run audit flags such as `contaminated` or `saturated`.
    pub flags: Vec<String>,
    pub notes: Vec<String>,
}

/// Flags that void a run: it may not report `pass` while one is set.
pub const VOIDING_FLAGS: [&str; 3] = ["contaminated", "saturated", "blow_up"];

impl Report {
    pub fn row(&mut self, t: f64, name: impl Into<String>, value: f64) {
        self.rows.push(Row {
            t,
            name: name.into(),
            value,
            flags: String::new(),
        });
    }

    pub fn row_flagged(&mut self, t: f64, name: impl Into<String>, value: f64, flags: &[&str]) {
        self.rows.push(Row {
            t,
            name: name.into(),
            value,
            flags: flags.join("|"),
        });
    }

    pub fn series(&mut self, name: &str, x: &str, y: &str, points: Vec<(f64, f64)>) {
        self.series.push(Series {
            name: name.to_string(),
            columns: [x.to_string(), y.to_string()],
            points,
        });
    }

    pub fn flag(&mut self, flag: &str) {
        if !self.flags.iter().any(|f| f == flag) {
            self.flags.push(flag.to_string());
        }
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn verdict(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    pub fn is_void(&self) -> bool {
        self.flags.iter().any(|f| VOIDING_FLAGS.contains(&f.as_str()))
    }

    /// Downgrades passes to inconclusive on a voided run.
    pub fn finalize(mut self) -> Self {
        if self.is_void() {
            let why = self.flags.join("|");
            for v in &mut self.verdicts {
                if v.status == Status::Pass {
                    v.status = Status::Inconclusive;
                    v.check = format!("{} [run flagged: {why}]", v.check);
                }
            }
        }
        self
    }

    pub fn status(&self) -> Status {
        combine(self.verdicts.iter().map(|v| v.status))
    }

    pub fn verdict_for(&self, clause: &str) -> impl Iterator<Item = &Verdict> {
        let clause = clause.to_string();
        self.verdicts.iter().filter(move |v| v.clause_id == clause)
    }
}

/// Flat CSV with header `run_id,t,name,value,flags`. Floats use Rust's
/// shortest round-trip formatting (exponent form outside `[1e-5, 1e16)`),
/// so equal runs give equal bytes.
pub fn diagnostics_csv(run_id: &str, rows: &[Row]) -> String {
    let mut s = String::from("run_id,t,name,value,flags\n");
    for r in rows {
        let _ = writeln!(s, "{run_id},{},{},{},{}", num(r.t), r.name, num(r.value), r.flags);
    }
    s
}

fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn dat_file(series: &Series) -> String {
    let mut s = format!("# {} {}\n", series.columns[0], series.columns[1]);
    for (x, y) in &series.points {
        let _ = writeln!(s, "{x} {y}");
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub run_id: String,
    pub experiment: ExperimentName,
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub flags: Vec<String>,
    pub status: Status,
    pub files: Vec<String>,
    pub notes: Vec<String>,
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(cfg.canonical_json().as_bytes()))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> io::Result<()> {
    let mut f = fs::File::create(dir.join(name))?;
    f.write_all(contents.as_bytes())
}

/// Writes manifest.json, diagnostics.csv, verdicts.json, summary.txt and one
/// `.dat` file per series into `dir`.
pub fn write_run(dir: &Path, cfg: &ExperimentConfig, report: &Report) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let run_id = cfg.run_id();
    let mut files = vec![
        "diagnostics.csv".to_string(),
        "verdicts.json".to_string(),
        "summary.txt".to_string(),
    ];
    write_file(dir, "diagnostics.csv", &diagnostics_csv(&run_id, &report.rows))?;
    write_file(
        dir,
        "verdicts.json",
        &(serde_json::to_string_pretty(&report.verdicts).map_err(io::Error::other)? + "\n"),
    )?;
    for s in &report.series {
        let name = format!("{}.dat", s.name);
        write_file(dir, &name, &dat_file(s))?;
        files.push(name);
    }
    write_file(dir, "summary.txt", &render_summary(&run_id, cfg.experiment, report.status(), &report.verdicts, &report.notes))?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        run_id,
        experiment: cfg.experiment,
        config_sha256: config_hash(cfg),
        config: serde_json::to_value(cfg).map_err(io::Error::other)?,
        flags: report.flags.clone(),
        status: report.status(),
        files,
        notes: report.notes.clone(),
    };
    write_file(
        dir,
        "manifest.json",
        &(serde_json::to_string_pretty(&manifest).map_err(io::Error::other)? + "\n"),
    )?;
    Ok(dir.to_path_buf())
}

pub fn render_summary(run_id: &str, experiment: ExperimentName, status: Status, verdicts: &[Verdict], notes: &[String]) -> String {
    let mut s = format!("{run_id} ({experiment}): {}\n", status.as_str().to_uppercase());
    for v in verdicts {
        let measured = v.measured.map_or("n/a".to_string(), |m| format!("{m:.6e}"));
        let tol = v.tolerance.map_or(String::new(), |t| format!(" ± {t:e}"));
        let _ = writeln!(
            s,
            "  [{:<12}] {:<13} {}  measured {measured}, expected {}{tol}",
            v.status.as_str(),
            v.clause_id,
            v.check,
            v.expected
        );
    }
    for n in notes {
        let _ = writeln!(s, "  note: {n}");
    }
    s
}

/// A finished run read back from disk.
#[derive(Clone, Debug)]
pub struct StoredRun {
    pub manifest: Manifest,
    pub verdicts: Vec<Verdict>,
}

impl StoredRun {
    pub fn load(dir: &Path) -> io::Result<Self> {
        let read = |name: &str| fs::read_to_string(dir.join(name));
        let manifest: Manifest = serde_json::from_str(&read("manifest.json")?).map_err(io::Error::other)?;
        let verdicts: Vec<Verdict> = serde_json::from_str(&read("verdicts.json")?).map_err(io::Error::other)?;
        Ok(Self { manifest, verdicts })
    }

    pub fn status(&self) -> Status {
        combine(self.verdicts.iter().map(|v| v.status))
    }

    pub fn render(&self) -> String {
        render_summary(
            &self.manifest.run_id,
            self.manifest.experiment,
            self.status(),
            &self.verdicts,
            &self.manifest.notes,
        )
    }
}
