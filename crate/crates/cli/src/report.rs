//! Merging result CSVs into a markdown summary.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::path::{Path, PathBuf};

use crate::config::Experiment;
use crate::error::CliError;
use crate::experiments::{header, LEADING, TRAILING};
use crate::run::csv_writer;

/// Rows of one experiment, merged across files.
#[derive(Debug, Clone)]
pub struct Table {
    pub experiment: Experiment,
    pub header: Vec<String>,
    pub config_hash: String,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn col(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    fn floats(&self, row: &[String], name: &str) -> Option<f64> {
        self.col(name).and_then(|i| row[i].parse().ok())
    }

    fn text<'a>(&self, row: &'a [String], name: &str) -> &'a str {
        self.col(name).map_or("", |i| row[i].as_str())
    }

    /// `(passed, evaluated)` over rows with a non-empty pass flag.
    pub fn pass_counts(&self) -> (usize, usize) {
        let i = self.col("pass").expect("pass column");
        let flags: Vec<&str> = self.rows.iter().map(|r| r[i].as_str()).filter(|v| !v.is_empty()).collect();
        (flags.iter().filter(|v| **v == "true").count(), flags.len())
    }

    /// Minimum fitted constant per body.
    pub fn fitted(&self) -> BTreeMap<String, f64> {
        let mut out: BTreeMap<String, f64> = BTreeMap::new();
        if self.col("fitted_c").is_none() {
            return out;
        }
        for r in &self.rows {
            if let Some(v) = self.floats(r, "fitted_c").filter(|v| v.is_finite()) {
                let e = out.entry(self.text(r, "body").to_string()).or_insert(v);
                *e = e.min(v);
            }
        }
        out
    }
}

fn read(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let mut r = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let header: Vec<String> =
        r.headers().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        rows.push(rec.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

/// Reads and merges result files. Schema mismatches and conflicting
/// config hashes for one experiment are configuration errors.
pub fn merge(paths: &[PathBuf]) -> Result<BTreeMap<Experiment, Table>, CliError> {
    let mut tables: BTreeMap<Experiment, Table> = BTreeMap::new();
    let mut seen: BTreeMap<Experiment, BTreeSet<Vec<String>>> = BTreeMap::new();
    for path in paths {
        let (head, rows) = read(path)?;
        let bad = || CliError::Config(format!("{}: not a result file (unexpected header)", path.display()));
        if head.len() < LEADING.len() + TRAILING.len() || head[..3] != LEADING || head[head.len() - 5..] != TRAILING {
            return Err(bad());
        }
        let Some(first) = rows.first() else { continue };
        let exp = Experiment::from_id(&first[0]).ok_or_else(bad)?;
        if head != header(exp) {
            return Err(CliError::Config(format!("{}: schema mismatch for experiment {}", path.display(), exp.id())));
        }
        let hash_col = head.len() - 2;
        for r in &rows {
            if r[0] != exp.id() {
                return Err(CliError::Config(format!("{}: mixed experiments in one file", path.display())));
            }
            let t = tables.entry(exp).or_insert_with(|| Table {
                experiment: exp,
                header: head.clone(),
                config_hash: r[hash_col].clone(),
                rows: Vec::new(),
            });
            if t.config_hash != r[hash_col] {
                return Err(CliError::Config(format!(
                    "{}: conflicting config hashes for {}: {} vs {}",
                    path.display(),
                    exp.id(),
                    t.config_hash,
                    r[hash_col]
                )));
            }
            if seen.entry(exp).or_default().insert(r.clone()) {
                t.rows.push(r.clone());
            }
        }
    }
    Ok(tables)
}

pub fn write_merged(tables: &BTreeMap<Experiment, Table>, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for t in tables.values() {
        let p = dir.join(format!("{}.merged.csv", t.experiment.id()));
        let mut w = csv_writer(&p)?;
        w.write_record(&t.header)?;
        for r in &t.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        out.push(p);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Pass(String),
    Fail(String),
    NoData,
    /// Checked by the library test suite rather than by experiment rows.
    Library,
}

impl Status {
    fn cell(&self) -> String {
        match self {
            Status::Pass(d) => format!("pass | {d}"),
            Status::Fail(d) => format!("FAIL | {d}"),
            Status::NoData => "no data | ".into(),
            Status::Library => "library test | covered by the acceptance test target".into(),
        }
    }
}

fn rate_status(tables: &BTreeMap<Experiment, Table>, e: Experiment, floor: f64) -> Status {
    let Some(t) = tables.get(&e) else { return Status::NoData };
    let (p, n) = t.pass_counts();
    if n == 0 {
        return Status::NoData;
    }
    let rate = p as f64 / n as f64;
    let d = format!("{p}/{n} rows pass ({:.1}%, need {:.0}%)", 100.0 * rate, 100.0 * floor);
    if rate >= floor {
        Status::Pass(d)
    } else {
        Status::Fail(d)
    }
}

/// `b_t` never above `1/t`, and equal to it where certified.
fn hull_certificate(t: &Table) -> Status {
    let mut worst: f64 = 0.0;
    let mut over = 0;
    for r in &t.rows {
        let (Some(tt), Some(b)) = (t.floats(r, "t"), t.floats(r, "b_t")) else { continue };
        if b > 1.0 / tt + 1e-6 {
            over += 1;
        }
        if t.text(r, "b_certified") == "true" {
            worst = worst.max((b - 1.0 / tt).abs());
        }
    }
    let d = format!("max abs(b_t - 1/t) = {worst:.2e}, {over} rows above 1/t");
    if over == 0 && worst <= 1e-6 {
        Status::Pass(d)
    } else {
        Status::Fail(d)
    }
}

fn fitted_floor(t: &Table, floor: f64) -> Status {
    let f = t.fitted();
    let Some((body, min)) = f.iter().min_by(|a, b| a.1.total_cmp(b.1)) else { return Status::NoData };
    let d = format!("min fitted c = {min:.4} ({} families; worst {body})", f.len());
    if *min >= floor {
        Status::Pass(d)
    } else {
        Status::Fail(d)
    }
}

/// `M_t` non-increasing and `t·M_t` non-decreasing in `t` within three
/// standard errors, per (body, n, seed).
fn monotonicity(t: &Table) -> Status {
    let mut groups: BTreeMap<(String, String, String), Vec<(f64, f64, f64)>> = BTreeMap::new();
    for r in &t.rows {
        let (Some(tt), Some(m), Some(se)) = (t.floats(r, "t"), t.floats(r, "m_t"), t.floats(r, "m_t_stderr")) else {
            continue;
        };
        let key = (t.text(r, "body").into(), t.text(r, "n").into(), t.text(r, "seed").into());
        groups.entry(key).or_default().push((tt, m, se));
    }
    let mut violations = 0;
    for v in groups.values_mut() {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in v.windows(2) {
            let (t0, m0, s0) = w[0];
            let (t1, m1, s1) = w[1];
            let tol = 3.0 * s0.max(s1);
            if m1 > m0 + tol || t1 * m1 < t0 * m0 - t1 * tol {
                violations += 1;
            }
        }
    }
    let d = format!("{} groups, {violations} violations", groups.len());
    if groups.is_empty() {
        Status::NoData
    } else if violations == 0 {
        Status::Pass(d)
    } else {
        Status::Fail(d)
    }
}

fn mean_values(t: &Table) -> Status {
    let mut parts = Vec::new();
    let mut by_body: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for r in &t.rows {
        if let Some(m) = t.floats(r, "mean_m") {
            by_body.entry((t.text(r, "body").into(), t.text(r, "n").into())).or_default().push(m);
        }
    }
    for ((body, n), v) in &by_body {
        parts.push(format!("{body} n={n}: M={:.4}", v.iter().sum::<f64>() / v.len() as f64));
    }
    if parts.is_empty() {
        Status::NoData
    } else {
        Status::Pass(format!("reported: {}", parts.join("; ")))
    }
}

/// One line per acceptance criterion, evaluated from whatever rows are present.
pub fn acceptance(tables: &BTreeMap<Experiment, Table>) -> Vec<(usize, &'static str, Status)> {
    let lemma = tables.get(&Experiment::Lemma1);
    vec![
        (1, "John positioning exactness", Status::Library),
        (2, "Gauge duality suite", Status::Library),
        (3, "Hull b_t certificate", lemma.map_or(Status::NoData, hull_certificate)),
        (4, "Hull ratio fitted constant", lemma.map_or(Status::NoData, |t| fitted_floor(t, 0.1))),
        (5, "Monotonicity of M_t and t·M_t", lemma.map_or(Status::NoData, monotonicity)),
        (6, "Mean values", tables.get(&Experiment::Stats).map_or(Status::NoData, mean_values)),
        (7, "Gaussian comparison ordering", rate_status(tables, Experiment::Schsch, 1.0)),
        (8, "Gaussian order statistics", rate_status(tables, Experiment::Orderstats, 1.0)),
        (9, "Orthogonal splitting", rate_status(tables, Experiment::Kashin, 0.9)),
        (10, "Block decomposition", rate_status(tables, Experiment::Blocks, 0.9)),
        (11, "Sup-norm refuter", rate_status(tables, Experiment::Refute, 1.0)),
        (12, "Classical RIP", rate_status(tables, Experiment::Rip, 0.95)),
        (13, "Sparse JL", rate_status(tables, Experiment::Jl, 0.9)),
        (14, "Combinatorial oracles", Status::Library),
        (15, "Determinism", Status::Library),
    ]
}

/// Markdown summary of merged tables.
pub fn summary(tables: &BTreeMap<Experiment, Table>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Results\n");
    let _ = writeln!(s, "| experiment | config hash | rows | evaluated | passed | pass rate |");
    let _ = writeln!(s, "|---|---|---|---|---|---|");
    for t in tables.values() {
        let (p, n) = t.pass_counts();
        let rate = if n > 0 { format!("{:.1}%", 100.0 * p as f64 / n as f64) } else { "-".into() };
        let _ = writeln!(s, "| {} | {} | {} | {n} | {p} | {rate} |", t.experiment.id(), t.config_hash, t.rows.len());
    }
    let fitted: Vec<(&str, String, f64)> = tables
        .values()
        .flat_map(|t| t.fitted().into_iter().map(move |(b, v)| (t.experiment.id(), b, v)))
        .collect();
    if !fitted.is_empty() {
        let _ = writeln!(s, "\n## Fitted constants (minimum per family)\n");
        let _ = writeln!(s, "| experiment | body | min fitted c |");
        let _ = writeln!(s, "|---|---|---|");
        for (e, b, v) in fitted {
            let _ = writeln!(s, "| {e} | `{b}` | {v:.6} |");
        }
    }
    let _ = writeln!(s, "\n## Acceptance\n");
    let _ = writeln!(s, "| # | criterion | status | detail |");
    let _ = writeln!(s, "|---|---|---|---|");
    for (i, name, st) in acceptance(tables) {
        let _ = writeln!(s, "| {i} | {name} | {} |", st.cell());
    }
    s
}
