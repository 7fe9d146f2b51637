//! Per-experiment cell execution and frozen CSV schemas.

use banach_core::arrangements::{
    block_decomposition, default_block_size, kashin_experiment, linfty_refute, loc_hilbert_check,
    random_basis_experiment, BasisExperiment, DistortionSearch, LocHilbertOptions, Side,
};
use banach_core::johnpos::john_transform;
use banach_core::normspace::{Body, BodySpec, PSpec};
use banach_core::rip_jl::{
    cotype_gap_check, gaussian_rip, general_rip, jl_sparse, random_sparse_family, NormedBasis, RatioSearch, RipReport,
};
use banach_core::spherestats::{
    d_u_estimate, estimate_stats_with, lemma1_ratio, order_stats_experiment, sample_orthogonal, schsch_compare,
    small_ball, sphere_gauges, BSearch, Lemma1Options,
};
use banach_core::{Matrix, Seed, Vector};
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::config::{Axis, BasisKind, Experiment, ExperimentConfig};

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i128),
    Float(f64),
    Bool(bool),
    Text(String),
    Null,
}

impl Value {
    /// 17 significant digits, so every float round-trips.
    pub fn render(&self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            Value::Float(v) if v.is_nan() => "NaN".into(),
            Value::Float(v) if v.is_infinite() => if *v > 0.0 { "inf" } else { "-inf" }.into(),
            Value::Float(v) => format!("{v:.16e}"),
            Value::Bool(b) => b.to_string(),
            Value::Text(s) => s.clone(),
            Value::Null => String::new(),
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i128)
    }
}

impl From<u128> for Value {
    fn from(v: u128) -> Self {
        Value::Int(v.min(i128::MAX as u128) as i128)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Null, Into::into)
    }
}

/// Parameter and metric columns, between the fixed leading
/// `experiment,body,n` and trailing `pass,seed,version,config_hash,status`.
pub struct Schema {
    pub params: &'static [&'static str],
    pub metrics: &'static [&'static str],
}

pub const LEADING: [&str; 3] = ["experiment", "body", "n"];
pub const TRAILING: [&str; 5] = ["pass", "seed", "version", "config_hash", "status"];

pub fn schema(e: Experiment) -> Schema {
    let (params, metrics): (&[&str], &[&str]) = match e {
        Experiment::Stats => (
            &[],
            &[
                "mean_m",
                "median",
                "b_max",
                "b_certified",
                "stderr_mean",
                "stderr_median",
                "k_dvoretzky",
                "q10",
                "q25",
                "q75",
                "q90",
            ],
        ),
        Experiment::Lemma1 => (
            &["t"],
            &["m_t", "m_t_stderr", "mean_t", "b_t", "b_certified", "ratio", "bound_unit", "fitted_c", "skipped"],
        ),
        Experiment::Smallball => {
            (&["t"], &["threshold", "count", "estimate", "wilson_lo", "wilson_hi", "upper95", "censored", "bound"])
        }
        Experiment::Du => (&["u"], &["mean_m", "d_u", "probability", "count", "censored"]),
        Experiment::Schsch => (&["t"], &["cdf_body", "se_body", "cdf_inf", "se_inf", "se_diff"]),
        Experiment::Orderstats => {
            (&["m", "s"], &["trials", "c_prime", "threshold_count", "frequency", "mean_count", "min_count"])
        }
        Experiment::Basis => (&["k", "support_kind"], &["support", "lo", "hi", "ratio", "d_raw", "t", "m_t"]),
        Experiment::Kashin => (&["trial"], &["ratio_first", "ratio_second", "worst"]),
        Experiment::Blocks => (&["k", "eps"], &["blocks", "median", "max_deviation", "all_within_eps", "max_b_scaled"]),
        Experiment::Lochilbert => (
            &["k", "eps", "basis"],
            &[
                "supports_total",
                "supports_checked",
                "partial",
                "lo",
                "hi",
                "worst_violation",
                "witness_side",
                "witness_support",
            ],
        ),
        Experiment::Refute => (&["eps", "basis"], &["witness_support", "image_norm", "side", "verified"]),
        Experiment::Rip | Experiment::Generalrip => {
            (&["k", "eps", "m"], &["tested_supports", "partial", "exact", "worst_lo", "worst_hi", "reason"])
        }
        Experiment::Jl => (&["k", "eps", "points"], &["m", "pairs", "max_error"]),
        Experiment::Cotype => (&["q"], &["beta", "m_estimate", "m_stderr", "bound", "fitted_c"]),
    };
    Schema { params, metrics }
}

pub fn header(e: Experiment) -> Vec<String> {
    let s = schema(e);
    LEADING.iter().chain(s.params).chain(s.metrics).chain(TRAILING.iter()).map(|c| c.to_string()).collect()
}

/// One grid point and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub n: Option<usize>,
    pub t: Option<f64>,
    pub k: Option<usize>,
    pub eps: Option<f64>,
    pub m: Option<usize>,
    pub u: Option<f64>,
    pub s: Option<f64>,
    pub q: Option<PSpec>,
    pub seed: u64,
}

/// A computed row before the trailing bookkeeping columns.
#[derive(Debug, Clone)]
pub struct CellRow {
    pub body: String,
    pub n: Option<usize>,
    pub params: Vec<Value>,
    pub metrics: Vec<Value>,
    pub pass: Option<bool>,
}

fn axis_values<T: Clone>(v: &Option<Vec<T>>) -> Vec<Option<T>> {
    match v {
        Some(v) => v.iter().cloned().map(Some).collect(),
        None => vec![None],
    }
}

/// Cross product of the experiment's cell axes and the seeds, in grid order
/// (seeds vary fastest). Lemma 1 and the Gaussian comparison take the whole
/// `t` grid inside one cell.
pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let e = cfg.experiment;
    let uses = |a: Axis| e.axes().contains(&a);
    let dims: Vec<Option<usize>> = if uses(Axis::N) { cfg.dims().into_iter().map(Some).collect() } else { vec![None] };
    let g = &cfg.grid;
    let pick = |a: Axis| uses(a) && !(a == Axis::T && matches!(e, Experiment::Lemma1 | Experiment::Schsch));
    let ts = if pick(Axis::T) { axis_values(&g.t) } else { vec![None] };
    let ks = if pick(Axis::K) { axis_values(&g.k) } else { vec![None] };
    let epss = if pick(Axis::Eps) { axis_values(&g.eps) } else { vec![None] };
    let ms = if pick(Axis::M) { axis_values(&g.m) } else { vec![None] };
    let us = if pick(Axis::U) { axis_values(&g.u) } else { vec![None] };
    let ss = if pick(Axis::S) { axis_values(&g.s) } else { vec![None] };
    let qs = if pick(Axis::Q) { axis_values(&g.q) } else { vec![None] };
    let mut out = Vec::new();
    for &n in &dims {
        for &t in &ts {
            for &k in &ks {
                for &eps in &epss {
                    for &m in &ms {
                        for &u in &us {
                            for &s in &ss {
                                for &q in &qs {
                                    for &seed in &cfg.seeds {
                                        out.push(Cell { n, t, k, eps, m, u, s, q, seed });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

type Res<T> = Result<T, banach_core::Error>;

fn body_spec(cfg: &ExperimentConfig, n: usize) -> Res<BodySpec> {
    cfg.body.as_ref().expect("validated: experiment has a body").with_dim(n)
}

/// Builds the body; for a top-level `john` spec also returns the contact
/// points, which certify maxima of the gauge.
fn build(spec: &BodySpec) -> Res<(Body<f64>, Vec<Vector>)> {
    match spec {
        BodySpec::John { inner } => {
            let jp = john_transform(&inner.build::<f64>()?)?;
            Ok((jp.body, jp.certificate.contacts))
        }
        other => Ok((other.build()?, Vec::new())),
    }
}

fn basis_matrix(kind: BasisKind, n: usize, seed: Seed) -> Res<Matrix> {
    let mut rng = seed.derive_str("basis").rng();
    match kind {
        BasisKind::Identity => Ok(Matrix::identity(n, n)),
        BasisKind::Haar => sample_orthogonal(n, &mut rng),
        BasisKind::PerturbedPermutation => {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let mut t = Matrix::zeros(n, n);
            for (j, &i) in perm.iter().enumerate() {
                t[(i, j)] = if rng.random::<bool>() { 1.0 } else { -1.0 };
            }
            let sigma = 0.05 / (n as f64).sqrt();
            for v in t.iter_mut() {
                *v += sigma * rng.sample::<f64, _>(rand_distr::StandardNormal);
            }
            Ok(t)
        }
    }
}

fn basis_name(kind: BasisKind) -> &'static str {
    match kind {
        BasisKind::Identity => "identity",
        BasisKind::Haar => "haar",
        BasisKind::PerturbedPermutation => "perturbed_permutation",
    }
}

fn support_text(s: &[usize]) -> String {
    s.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::Lower => "lower",
        Side::Upper => "upper",
    }
}

fn pspec_value(q: PSpec) -> Value {
    match q {
        PSpec::Finite(v) => Value::Float(v),
        PSpec::Named(_) => Value::Text("inf".into()),
    }
}

/// `⌈c·eps⁻²·k·ln(en/k)⌉`
pub fn default_sketch_dim(c_rip: f64, n: usize, k: usize, eps: f64) -> usize {
    (c_rip / (eps * eps) * k as f64 * (std::f64::consts::E * n as f64 / k as f64).ln()).ceil() as usize
}

fn rip_row(body: String, n: usize, k: usize, eps: f64, r: RipReport) -> CellRow {
    CellRow {
        body,
        n: Some(n),
        params: vec![k.into(), eps.into(), r.m.into()],
        metrics: vec![
            r.tested_supports.into(),
            r.partial.into(),
            r.exact.into(),
            r.worst_lo.into(),
            r.worst_hi.into(),
            r.reason.clone().into(),
        ],
        pass: Some(r.pass),
    }
}

fn distortion_search(cfg: &ExperimentConfig, n_samples: usize) -> DistortionSearch {
    let c = &cfg.constants;
    let d = DistortionSearch::default();
    DistortionSearch {
        n_samples: c.search_samples.unwrap_or(n_samples),
        restarts: c.restarts.unwrap_or(d.restarts),
        max_steps: c.max_steps.unwrap_or(d.max_steps),
    }
}

/// Runs one cell and returns its rows.
pub fn run_cell(cfg: &ExperimentConfig, cell: &Cell) -> Res<Vec<CellRow>> {
    let c = &cfg.constants;
    let seed = Seed(cell.seed);
    let samples = cfg.samples;
    let n = cell.n.unwrap_or(0);
    let c_floor = c.c_floor.unwrap_or(0.1);
    match cfg.experiment {
        Experiment::Stats => {
            let spec = body_spec(cfg, n)?;
            let (body, contacts) = build(&spec)?;
            let search = BSearch { contacts, restarts: c.restarts.unwrap_or(20), max_steps: c.max_steps.unwrap_or(100) };
            let s = estimate_stats_with(&body, samples, seed, &search)?;
            Ok(vec![CellRow {
                body: spec.to_json(),
                n: Some(n),
                params: vec![],
                metrics: vec![
                    s.mean_m.into(),
                    s.median.into(),
                    s.b_max.into(),
                    s.b_certified.into(),
                    s.stderr_mean.into(),
                    s.stderr_median.into(),
                    s.k_dvoretzky.into(),
                    s.quantile(0.1).into(),
                    s.quantile(0.25).into(),
                    s.quantile(0.75).into(),
                    s.quantile(0.9).into(),
                ],
                pass: None,
            }])
        }
        Experiment::Lemma1 => {
            let spec = body_spec(cfg, n)?;
            let (body, contacts) = build(&spec)?;
            let ts: Vec<f64> = cfg.grid.t.clone().unwrap_or_default().into_iter().filter(|t| *t >= 1.0 && *t <= (n as f64).sqrt()).collect();
            if ts.is_empty() {
                return Ok(vec![]);
            }
            let opts = Lemma1Options { c_prime: c.c_prime.unwrap_or(4.0), contacts, restarts: c.restarts.unwrap_or(20) };
            let table = lemma1_ratio(&body, &ts, samples, seed, &opts)?;
            Ok(table
                .rows
                .into_iter()
                .map(|r| CellRow {
                    body: spec.to_json(),
                    n: Some(n),
                    params: vec![r.t.into()],
                    metrics: vec![
                        r.m_t.into(),
                        r.m_t_stderr.into(),
                        r.mean_t.into(),
                        r.b_t.into(),
                        r.b_certified.into(),
                        r.ratio.into(),
                        r.bound_unit.into(),
                        r.fitted_c.into(),
                        r.skipped.into(),
                    ],
                    pass: r.fitted_c.map(|f| f >= c_floor),
                })
                .collect())
        }
        Experiment::Smallball => {
            let t = cell.t.expect("t axis");
            if !(t >= 1.0 && t <= (n as f64).sqrt()) {
                return Ok(vec![]);
            }
            let spec = body_spec(cfg, n)?;
            let (body, _) = build(&spec)?;
            let r = small_ball(&body, t, samples, seed, &c.small_ball.unwrap_or_default())?;
            Ok(vec![CellRow {
                body: spec.to_json(),
                n: Some(n),
                params: vec![t.into()],
                metrics: vec![
                    r.threshold.into(),
                    r.count.into(),
                    r.estimate.into(),
                    r.wilson_lo.into(),
                    r.wilson_hi.into(),
                    r.upper95.into(),
                    r.censored.into(),
                    r.bound.into(),
                ],
                pass: Some(r.wilson_lo <= r.bound),
            }])
        }
        Experiment::Du => {
            let u = cell.u.expect("u axis");
            let spec = body_spec(cfg, n)?;
            let (body, _) = build(&spec)?;
            let vals = sphere_gauges(&body, samples, seed.derive_str("mean"))?;
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let d = d_u_estimate(&body, u, mean, samples, seed)?;
            Ok(vec![CellRow {
                body: spec.to_json(),
                n: Some(n),
                params: vec![u.into()],
                metrics: vec![mean.into(), d.value.into(), d.probability.into(), d.count.into(), d.censored.into()],
                pass: None,
            }])
        }
        Experiment::Schsch => {
            let spec = body_spec(cfg, n)?;
            let (body, _) = build(&spec)?;
            let ts = cfg.grid.t.clone().unwrap_or_default();
            Ok(schsch_compare(&body, &ts, samples, seed)?
                .into_iter()
                .map(|r| CellRow {
                    body: spec.to_json(),
                    n: Some(n),
                    params: vec![r.t.into()],
                    metrics: vec![
                        r.cdf_body.into(),
                        r.se_body.into(),
                        r.cdf_inf.into(),
                        r.se_inf.into(),
                        r.se_diff.into(),
                    ],
                    pass: Some(r.cdf_body <= r.cdf_inf + 2.0 * r.se_diff),
                })
                .collect())
        }
        Experiment::Orderstats => {
            let (m, s) = (cell.m.expect("m axis"), cell.s.expect("s axis"));
            let c_prime = c.c_prime.unwrap_or(0.05);
            let r = order_stats_experiment(m, s, samples, c_prime, c.c_upper.unwrap_or(1.0), seed)?;
            Ok(vec![CellRow {
                body: String::new(),
                n: None,
                params: vec![m.into(), s.into()],
                metrics: vec![
                    r.trials.into(),
                    c_prime.into(),
                    r.threshold_count.into(),
                    r.frequency.into(),
                    r.mean_count.into(),
                    r.min_count.into(),
                ],
                pass: Some(r.frequency >= 0.5),
            }])
        }
        Experiment::Basis => {
            let spec = body_spec(cfg, n)?;
            let (body, _) = build(&spec)?;
            let mut supports = Vec::new();
            let mut kinds = Vec::new();
            let mut rng = seed.derive_str("supports").rng();
            for &k in cfg.grid.k.as_deref().unwrap_or(&[]) {
                if k > n {
                    continue;
                }
                supports.push((0..k).collect::<Vec<_>>());
                kinds.push((k, "contiguous"));
                supports.push((0..k).map(|i| i * n / k).collect());
                kinds.push((k, "spread"));
                let mut r = sample(&mut rng, n, k).into_vec();
                r.sort_unstable();
                supports.push(r);
                kinds.push((k, "random"));
            }
            let exp = BasisExperiment {
                search: distortion_search(cfg, 1000),
                median_samples: samples,
                ratio_limit: c.ratio_limit.unwrap_or(3.0),
            };
            let rows = random_basis_experiment(&body, &supports, &exp, seed)?;
            Ok(rows
                .into_iter()
                .zip(kinds)
                .map(|(r, (k, kind))| CellRow {
                    body: spec.to_json(),
                    n: Some(n),
                    params: vec![k.into(), kind.into()],
                    metrics: vec![
                        support_text(&r.support).into(),
                        r.lo.into(),
                        r.hi.into(),
                        r.ratio.into(),
                        r.d_raw.into(),
                        r.t.into(),
                        r.m_t.into(),
                    ],
                    pass: Some(r.pass),
                })
                .collect())
        }
        Experiment::Kashin => {
            let trials = c.trials.unwrap_or(1);
            let limit = c.ratio_limit.unwrap_or(3.0);
            let spec = BodySpec::john(BodySpec::pnorm(PSpec::Finite(1.0), n));
            Ok(kashin_experiment::<f64>(n, trials, &distortion_search(cfg, samples), seed)?
                .into_iter()
                .map(|r| CellRow {
                    body: spec.to_json(),
                    n: Some(n),
                    params: vec![r.trial.into()],
                    metrics: vec![r.ratio_first.into(), r.ratio_second.into(), r.worst.into()],
                    pass: Some(r.worst <= limit),
                })
                .collect())
        }
        Experiment::Blocks => {
            let eps = cell.eps.expect("eps axis");
            let k = cell.k.unwrap_or_else(|| default_block_size(n));
            let spec = body_spec(cfg, n)?;
            let (body, _) = build(&spec)?;
            let r = block_decomposition(&body, k, eps, &distortion_search(cfg, samples), seed)?;
            let max_dev = r.blocks.iter().map(|b| b.deviation).fold(0.0, f64::max);
            let limit = c.b_limit.unwrap_or(5.0);
            Ok(vec![CellRow {
                body: spec.to_json(),
                n: Some(n),
                params: vec![k.into(), eps.into()],
                metrics: vec![
                    r.blocks.len().into(),
                    r.median.into(),
                    max_dev.into(),
                    r.all_within_eps.into(),
                    r.max_b_scaled.into(),
                ],
                pass: Some(r.all_within_eps && r.max_b_scaled <= limit),
            }])
        }
        Experiment::Lochilbert => {
            let (k, eps) = (cell.k.expect("k axis"), cell.eps.expect("eps axis"));
            let spec = body_spec(cfg, n)?;
            let (body, _) = build(&spec)?;
            let kind = c.basis.unwrap_or(BasisKind::Haar);
            let basis = basis_matrix(kind, n, seed)?;
            let d = LocHilbertOptions::default();
            let opts = LocHilbertOptions {
                search: DistortionSearch {
                    n_samples: c.search_samples.unwrap_or(d.search.n_samples),
                    restarts: c.restarts.unwrap_or(d.search.restarts),
                    max_steps: c.max_steps.unwrap_or(d.search.max_steps),
                },
                cap: c.support_cap.unwrap_or(d.cap),
            };
            let r = loc_hilbert_check(&body, &basis, k, eps, &opts, seed)?;
            Ok(vec![CellRow {
                body: spec.to_json(),
                n: Some(n),
                params: vec![k.into(), eps.into(), basis_name(kind).into()],
                metrics: vec![
                    r.supports_total.into(),
                    r.supports_checked.into(),
                    r.partial.into(),
                    r.lo.into(),
                    r.hi.into(),
                    r.worst_violation.into(),
                    r.witness_side.map(side_name).into(),
                    support_text(&r.witness_support).into(),
                ],
                pass: Some(r.worst_violation == 0.0),
            }])
        }
        Experiment::Refute => {
            let eps = cell.eps.expect("eps axis");
            let kind = c.basis.unwrap_or(BasisKind::Haar);
            let t = basis_matrix(kind, n, seed)?;
            let w = linfty_refute(&t, eps)?;
            let x = Vector::from_vec(w.vector.clone());
            let image = (&t * &x).amax();
            let verified = (x.norm() - 1.0).abs() < 1e-12
                && x.iter().filter(|v| **v != 0.0).count() <= 2
                && (image < 1.0 - eps || image > 1.0 + eps);
            let support: Vec<usize> = (0..n).filter(|&i| w.vector[i] != 0.0).collect();
            Ok(vec![CellRow {
                body: BodySpec::pnorm(PSpec::INF, n).to_json(),
                n: Some(n),
                params: vec![eps.into(), basis_name(kind).into()],
                metrics: vec![support_text(&support).into(), image.into(), side_name(w.side).into(), verified.into()],
                pass: Some(verified),
            }])
        }
        Experiment::Rip => {
            let (k, eps) = (cell.k.expect("k axis"), cell.eps.expect("eps axis"));
            let m = cell.m.unwrap_or_else(|| default_sketch_dim(c.c_rip.unwrap_or(4.0), n, k, eps));
            let r = gaussian_rip(n, m, k, eps, seed, c.support_cap.unwrap_or(100_000))?;
            Ok(vec![rip_row(BodySpec::pnorm(PSpec::Finite(2.0), n).to_json(), n, k, eps, r)])
        }
        Experiment::Generalrip => {
            let (k, eps) = (cell.k.expect("k axis"), cell.eps.expect("eps axis"));
            let m = cell.m.unwrap_or_else(|| default_sketch_dim(c.c_rip.unwrap_or(4.0), n, k, eps));
            let spec = body_spec(cfg, n)?;
            let (body, _) = build(&spec)?;
            let kind = c.basis.unwrap_or(BasisKind::Identity);
            let x = NormedBasis::new(body, basis_matrix(kind, n, seed)?)?;
            let target = match &cfg.target {
                Some(t) => build(&t.with_dim(m)?)?.0,
                None => Body::euclidean(m),
            };
            let y = NormedBasis::standard(target);
            let d = RatioSearch::default();
            let search = RatioSearch {
                n_samples: c.search_samples.unwrap_or(d.n_samples),
                restarts: c.restarts.unwrap_or(d.restarts),
                max_steps: c.max_steps.unwrap_or(d.max_steps),
            };
            let r = general_rip(&x, &y, k, eps, seed, &search, c.support_cap.unwrap_or(100_000))?;
            Ok(vec![rip_row(spec.to_json(), n, k, eps, r)])
        }
        Experiment::Jl => {
            let (k, eps) = (cell.k.expect("k axis"), cell.eps.expect("eps axis"));
            let points = c.points.unwrap_or(32);
            let spec = body_spec(cfg, n)?;
            let (body, _) = build(&spec)?;
            let kind = c.basis.unwrap_or(BasisKind::Identity);
            let x = NormedBasis::new(body, basis_matrix(kind, n, seed)?)?;
            let omega = random_sparse_family::<f64>(n, k, points, seed.derive_str("points"))?;
            let r = jl_sparse(&x, &omega, k, eps, c.c_jl.unwrap_or(8.0), seed)?;
            Ok(vec![CellRow {
                body: spec.to_json(),
                n: Some(n),
                params: vec![k.into(), eps.into(), points.into()],
                metrics: vec![r.m.into(), r.pairs.into(), r.max_error.into()],
                pass: Some(r.pass),
            }])
        }
        Experiment::Cotype => {
            let q = cell.q.expect("q axis");
            let spec = body_spec(cfg, n)?;
            let (body, _) = build(&spec)?;
            let beta = c.beta.unwrap_or(1.0);
            let r = cotype_gap_check(&body, q.to_exponent::<f64>()?, beta, samples, seed)?;
            Ok(vec![CellRow {
                body: spec.to_json(),
                n: Some(n),
                params: vec![pspec_value(q)],
                metrics: vec![beta.into(), r.m_estimate.into(), r.m_stderr.into(), r.bound.into(), r.fitted_c.into()],
                pass: Some(r.m_estimate >= r.bound),
            }])
        }
    }
}
