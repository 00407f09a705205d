//! Experiment configs, the runner that turns them into reports, and
//! parameter sweeps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{json, Value};

use crate::arith::{mertens_series, partial_sums_series, GFunctionSpec};
use crate::dickman::{default_table, RhoTable, DEFAULT_PER_UNIT, DEFAULT_U_MAX};
use crate::error::{Error, Result};
use crate::estimate::{map_chunks, Moments};
use crate::pdprocess::{
    box_function_exact, corr_mc, joint_cdf_mc, joint_cdf_size_biased, pd_correlation_quadrature,
    sample_pd_indexed, BoxFunction, DEFAULT_TRUNCATION, MIN_SIZE_BIASED_THRESHOLD,
};
use crate::sequences::SequenceSpec;
use crate::stats::{
    empirical_corr, empirical_joint_cdf, lod_error_sum_with, repeated_factor_frequency,
    sieve_survivor_experiment, tail_frequency, SampleOptions, SampleSet, Subsample,
    DEFAULT_MAX_MEMBERS,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Rows of sampled draws kept in a `pd-sample` table.
const PD_SAMPLE_TABLE_ROWS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    RhoTable,
    PdSample,
    PdCorr,
    SeqCorr,
    JointCdf,
    Tail,
    Lod,
    Repeated,
    SieveSurvivors,
    Mertens,
    Growth,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::RhoTable => "rho-table",
            ExperimentKind::PdSample => "pd-sample",
            ExperimentKind::PdCorr => "pd-corr",
            ExperimentKind::SeqCorr => "seq-corr",
            ExperimentKind::JointCdf => "joint-cdf",
            ExperimentKind::Tail => "tail",
            ExperimentKind::Lod => "lod",
            ExperimentKind::Repeated => "repeated",
            ExperimentKind::SieveSurvivors => "sieve-survivors",
            ExperimentKind::Mertens => "mertens",
            ExperimentKind::Growth => "growth",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// One experiment, as a flat JSON document. Every field is optional here;
/// each experiment checks the ones it needs before computing anything.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<SequenceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<GFunctionSpec>,
    #[serde(default, deserialize_with = "de_count", skip_serializing_if = "Option::is_none")]
    pub x: Option<u64>,
    #[serde(default, deserialize_with = "de_counts", skip_serializing_if = "Option::is_none")]
    pub x_grid: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boxes: Option<BoxFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, deserialize_with = "de_count", skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, deserialize_with = "de_count", skip_serializing_if = "Option::is_none")]
    pub max_members: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard_band: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
}

/// Parses a count written as an integer, an integral float (`1e7`), or a
/// string of either form.
pub fn parse_count(s: &str) -> std::result::Result<u64, String> {
    let s = s.trim().replace('_', "");
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 1.8e19 => Ok(v as u64),
        _ => Err(format!("`{s}` is not a non-negative integer")),
    }
}

fn count_from_value(v: &Value) -> std::result::Result<u64, String> {
    match v {
        Value::Number(n) => n
            .as_u64()
            .map(Ok)
            .unwrap_or_else(|| parse_count(&n.to_string())),
        Value::String(s) => parse_count(s),
        other => Err(format!("expected a count, got {other}")),
    }
}

fn de_count<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<u64>, D::Error> {
    let v = Option::<Value>::deserialize(d)?;
    v.map(|v| count_from_value(&v).map_err(serde::de::Error::custom))
        .transpose()
}

fn de_counts<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<u64>>, D::Error> {
    let v = Option::<Vec<Value>>::deserialize(d)?;
    v.map(|vs| {
        vs.iter()
            .map(|v| count_from_value(v).map_err(serde::de::Error::custom))
            .collect()
    })
    .transpose()
}

fn config_error(e: serde_json::Error) -> Error {
    let msg = e.to_string();
    let field = msg
        .split('`')
        .nth(1)
        .filter(|_| msg.starts_with("unknown field"))
        .unwrap_or("config")
        .to_string();
    Error::invalid(field, msg)
}

impl ExperimentConfig {
    /// Parses a config document. A report is accepted too, in which case its
    /// embedded parameters are used, so every report can be re-run.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(config_error)?;
        Self::from_value(v)
    }

    pub fn from_value(mut v: Value) -> Result<Self> {
        if let Some(obj) = v.as_object_mut() {
            if obj.contains_key("schema_version") {
                if let Some(p) = obj.remove("parameters") {
                    v = p;
                }
            }
        }
        serde_json::from_value(v).map_err(config_error)
    }

    fn kind(&self) -> Result<ExperimentKind> {
        self.experiment
            .ok_or_else(|| Error::invalid("experiment", "missing experiment kind"))
    }

    /// The config without scheduling and output fields.
    pub fn parameters(&self) -> ExperimentConfig {
        ExperimentConfig {
            threads: None,
            out: None,
            format: None,
            ..self.clone()
        }
    }

    /// Checks every field the chosen experiment needs, without computing.
    pub fn validate(&self) -> Result<()> {
        Plan::new(self).map(|_| ())
    }
}

fn need<T: Clone>(v: &Option<T>, field: &str, kind: ExperimentKind) -> Result<T> {
    v.clone().ok_or_else(|| {
        Error::invalid(field, format!("required by experiment `{}`", kind.as_str()))
    })
}

fn in_open_unit(v: f64, field: &str) -> Result<f64> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(Error::invalid(field, format!("must be in (0, 1), got {v}")))
    }
}

/// A validated experiment, ready to run.
enum Plan {
    RhoTable { u_max: f64, step: f64 },
    PdSample { n: u64, k: usize, c: f64, truncation: f64, seed: u64 },
    PdCorr { eta: BoxFunction, n: u64, seed: u64 },
    SeqCorr { sample: SampleArgs, eta: BoxFunction },
    JointCdfSeq { sample: SampleArgs, c: Vec<f64> },
    JointCdfPd { c: Vec<f64>, n: u64, seed: u64 },
    Tail { sample: SampleArgs, eps: f64 },
    Lod { spec: SequenceSpec, g: GFunctionSpec, x: u64, c: f64 },
    Repeated { sample: SampleArgs, alpha: f64, c: f64 },
    Sieve { sample: SampleArgs, eps: f64, z0: f64, delta0: f64 },
    Mertens { g: GFunctionSpec, grid: Vec<u64> },
    Growth { g: GFunctionSpec, grid: Vec<u64> },
}

struct SampleArgs {
    spec: SequenceSpec,
    x: u64,
    opts: SampleOptions,
}

fn default_grid(x: u64, start: u64) -> Vec<u64> {
    let mut grid: Vec<u64> = std::iter::successors(Some(start), |&v| v.checked_mul(10))
        .take_while(|&v| v < x)
        .collect();
    grid.push(x);
    grid
}

impl Plan {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        use ExperimentKind as K;
        let kind = cfg.kind()?;
        let seed = cfg.seed.unwrap_or(0);
        if cfg.threads == Some(0) {
            return Err(Error::invalid("threads", "must be >= 1"));
        }
        if let Some(k) = cfg.k {
            if k == 0 {
                return Err(Error::invalid("k", "must be >= 1"));
            }
        }
        if let Some(g) = cfg.guard_band {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::invalid("guard_band", "must be a positive number"));
            }
        }
        let samples = |default: u64| -> Result<u64> {
            let n = cfg.n_samples.unwrap_or(default);
            if n < 2 {
                return Err(Error::invalid("n_samples", "must be >= 2"));
            }
            Ok(n)
        };
        let sample_args = || -> Result<SampleArgs> {
            let spec = need(&cfg.spec, "spec", kind)?;
            let x = need(&cfg.x, "x", kind)?;
            if x == 0 {
                return Err(Error::invalid("x", "must be >= 1"));
            }
            let max_members = cfg.max_members.unwrap_or(DEFAULT_MAX_MEMBERS);
            if max_members == 0 {
                return Err(Error::invalid("max_members", "must be >= 1"));
            }
            Ok(SampleArgs {
                spec,
                x,
                opts: SampleOptions { max_members, seed },
            })
        };
        let boxes = || -> Result<BoxFunction> {
            let eta = need(&cfg.boxes, "boxes", kind)?;
            if let Some(k) = cfg.k {
                if k != eta.dim() {
                    return Err(Error::invalid("k", format!("boxes have dimension {}", eta.dim())));
                }
            }
            Ok(eta)
        };
        let thresholds = || -> Result<Vec<f64>> {
            let c = need(&cfg.thresholds, "thresholds", kind)?;
            if c.is_empty() || c.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
                return Err(Error::invalid("thresholds", "need one or more values in (0, 1]"));
            }
            Ok(c)
        };
        let g_of = |spec: Option<&SequenceSpec>| -> Result<GFunctionSpec> {
            cfg.g
                .clone()
                .or_else(|| spec.map(SequenceSpec::g_function))
                .ok_or_else(|| Error::invalid("g", format!("`g` or `spec` is required by `{}`", kind.as_str())))
        };
        let grid = |start: u64, min_x: u64| -> Result<Vec<u64>> {
            let x = need(&cfg.x, "x", kind)?;
            if x < min_x {
                return Err(Error::invalid("x", format!("must be >= {min_x}")));
            }
            let mut grid = cfg.x_grid.clone().unwrap_or_else(|| default_grid(x, start));
            if grid.iter().any(|&v| v < min_x || v > x) {
                return Err(Error::invalid("x_grid", format!("values must lie in [{min_x}, x]")));
            }
            grid.sort_unstable();
            grid.dedup();
            Ok(grid)
        };
        Ok(match kind {
            K::RhoTable => {
                let u_max = cfg.u_max.unwrap_or(10.0);
                if !(u_max >= 1.0 && u_max <= 200.0) {
                    return Err(Error::invalid("u_max", "must be in [1, 200]"));
                }
                let step = cfg.step.unwrap_or(0.01);
                if !(step > 0.0 && u_max / step <= 1e7) {
                    return Err(Error::invalid("step", "must be > 0 with at most 10^7 rows"));
                }
                Plan::RhoTable { u_max, step }
            }
            K::PdSample => {
                let truncation = cfg.truncation.unwrap_or(DEFAULT_TRUNCATION);
                if !(truncation > 0.0 && truncation <= 1e-6) {
                    return Err(Error::invalid("truncation", "must be in (0, 1e-6]"));
                }
                let c = match &cfg.thresholds {
                    Some(_) => {
                        let c = thresholds()?;
                        if c.len() != 1 {
                            return Err(Error::invalid("thresholds", "pd-sample takes one threshold"));
                        }
                        c[0]
                    }
                    None => 0.5,
                };
                Plan::PdSample {
                    n: samples(10_000)?,
                    k: cfg.k.unwrap_or(5),
                    c,
                    truncation,
                    seed,
                }
            }
            K::PdCorr => Plan::PdCorr {
                eta: boxes()?,
                n: samples(1_000_000)?,
                seed,
            },
            K::SeqCorr => Plan::SeqCorr {
                sample: sample_args()?,
                eta: boxes()?,
            },
            K::JointCdf => {
                let c = thresholds()?;
                if cfg.spec.is_some() {
                    Plan::JointCdfSeq {
                        sample: sample_args()?,
                        c,
                    }
                } else {
                    Plan::JointCdfPd {
                        c,
                        n: samples(1_000_000)?,
                        seed,
                    }
                }
            }
            K::Tail => Plan::Tail {
                sample: sample_args()?,
                eps: in_open_unit(need(&cfg.eps, "eps", kind)?, "eps")?,
            },
            K::Lod => {
                let spec = need(&cfg.spec, "spec", kind)?;
                let x = need(&cfg.x, "x", kind)?;
                if x < 2 {
                    return Err(Error::invalid("x", "must be >= 2"));
                }
                Plan::Lod {
                    g: g_of(Some(&spec))?,
                    spec,
                    x,
                    c: in_open_unit(need(&cfg.c, "c", kind)?, "c")?,
                }
            }
            K::Repeated => {
                let alpha = need(&cfg.alpha, "alpha", kind)?;
                let c = need(&cfg.c, "c", kind)?;
                if !(alpha > 0.0 && alpha < c) {
                    return Err(Error::invalid("alpha", "need 0 < alpha < c"));
                }
                if c > 1.0 {
                    return Err(Error::invalid("c", "must be <= 1"));
                }
                Plan::Repeated {
                    sample: sample_args()?,
                    alpha,
                    c,
                }
            }
            K::SieveSurvivors => {
                let eps = in_open_unit(need(&cfg.eps, "eps", kind)?, "eps")?;
                let delta0 = need(&cfg.delta0, "delta0", kind)?;
                if !(delta0 > eps && delta0 <= 1.0) {
                    return Err(Error::invalid("delta0", "need eps < delta0 <= 1"));
                }
                let z0 = cfg.z0.unwrap_or(0.0);
                if !(z0 >= 0.0 && z0.is_finite()) {
                    return Err(Error::invalid("z0", "must be a finite number >= 0"));
                }
                Plan::Sieve {
                    sample: sample_args()?,
                    eps,
                    z0,
                    delta0,
                }
            }
            K::Mertens => Plan::Mertens {
                g: g_of(cfg.spec.as_ref())?,
                grid: grid(100, 2)?,
            },
            K::Growth => Plan::Growth {
                g: g_of(cfg.spec.as_ref())?,
                grid: grid(10, 1)?,
            },
        })
    }
}

/// Named columns of numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// The outcome of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub spec: Option<SequenceSpec>,
    pub x: Option<u64>,
    /// The full config minus scheduling and output fields.
    pub parameters: ExperimentConfig,
    pub seed: Option<u64>,
    pub estimate: Option<f64>,
    pub std_error: Option<f64>,
    pub oracle_value: Option<f64>,
    pub guard_band: Option<f64>,
    /// True when every member (or the whole deterministic computation) was
    /// used rather than random samples.
    pub exhaustive: bool,
    pub subsample: Option<Subsample>,
    pub warnings: Vec<String>,
    pub details: BTreeMap<String, Value>,
    pub table: Option<Table>,
    pub threads: usize,
    pub wall_time: f64,
}

impl ExperimentReport {
    fn new(cfg: &ExperimentConfig, kind: ExperimentKind) -> Self {
        ExperimentReport {
            schema_version: SCHEMA_VERSION,
            experiment: kind,
            spec: cfg.spec.clone(),
            x: cfg.x,
            parameters: cfg.parameters(),
            seed: None,
            estimate: None,
            std_error: None,
            oracle_value: None,
            guard_band: cfg.guard_band,
            exhaustive: true,
            subsample: None,
            warnings: Vec::new(),
            details: BTreeMap::new(),
            table: None,
            threads: 0,
            wall_time: 0.0,
        }
    }

    fn detail(&mut self, key: &str, v: impl Serialize) {
        self.details
            .insert(key.into(), serde_json::to_value(v).expect("serializable detail"));
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The JSON report without `threads` and `wall_time`; identical for
    /// identical configs and seeds.
    pub fn payload_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        let obj = v.as_object_mut().expect("report is an object");
        obj.remove("threads");
        obj.remove("wall_time");
        serde_json::to_string_pretty(&v).expect("value serializes")
    }

    /// The table as CSV, or a one-row summary when there is no table.
    pub fn to_csv(&self) -> String {
        if let Some(t) = &self.table {
            return t.to_csv();
        }
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "experiment,spec,x,seed,estimate,std_error,oracle_value,guard_band,exhaustive\n{},{},{},{},{},{},{},{},{}\n",
            self.experiment.as_str(),
            csv_field(&self.spec.as_ref().map(|s| s.name()).unwrap_or_default()),
            self.x.map(|x| x.to_string()).unwrap_or_default(),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            opt(self.estimate),
            opt(self.std_error),
            opt(self.oracle_value),
            opt(self.guard_band),
            self.exhaustive
        )
    }

    /// Short human-readable summary.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "experiment   {}", self.experiment.as_str());
        if let Some(s) = &self.spec {
            let _ = writeln!(out, "sequence     {}", s.name());
        }
        if let Some(x) = self.x {
            let _ = writeln!(out, "x            {x}");
        }
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed         {seed}");
        }
        match (self.estimate, self.std_error) {
            (Some(e), Some(se)) => {
                let _ = writeln!(out, "estimate     {e:.6} +/- {se:.6}");
            }
            (Some(e), None) => {
                let _ = writeln!(out, "estimate     {e:.10}");
            }
            _ => {}
        }
        if let Some(o) = self.oracle_value {
            let _ = writeln!(out, "oracle       {o:.10}");
        }
        if let Some(g) = self.guard_band {
            let _ = writeln!(out, "guard band   {g}");
        }
        let _ = writeln!(out, "exhaustive   {}", self.exhaustive);
        for (k, v) in &self.details {
            let _ = writeln!(out, "{k:<12} {v}");
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning      {w}");
        }
        if let Some(t) = &self.table {
            let _ = writeln!(out, "table        {} rows: {}", t.rows.len(), t.columns.join(", "));
        }
        let _ = writeln!(out, "wall time    {:.3} s on {} threads", self.wall_time, self.threads);
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Runs one experiment on a pool with the configured thread count.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let plan = Plan::new(cfg)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Internal(format!("cannot start worker pool: {e}")))?;
    let start = Instant::now();
    let mut report = pool.install(|| execute(cfg, plan))?;
    report.threads = pool.current_num_threads();
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Reference value of `eta`'s Poisson-Dirichlet correlation: the rectangle
/// formula when it applies, else quadrature for `k <= 3`.
fn pd_oracle(eta: &BoxFunction, report: &mut ExperimentReport) -> Result<Option<f64>> {
    let quad = if eta.dim() <= 3 {
        Some(pd_correlation_quadrature(eta)?)
    } else {
        None
    };
    if let Some(q) = quad {
        report.detail("quadrature", q);
    }
    match box_function_exact(eta) {
        Ok(v) => {
            report.detail("oracle_source", "rectangle formula");
            Ok(Some(v))
        }
        Err(Error::Hypothesis(msg)) => {
            report
                .warnings
                .push(format!("rectangle formula does not apply ({msg}); oracle from quadrature"));
            if quad.is_some() {
                report.detail("oracle_source", "quadrature");
            }
            Ok(quad)
        }
        Err(e) => Err(e),
    }
}

fn build_sample(args: &SampleArgs, report: &mut ExperimentReport) -> Result<SampleSet> {
    let s = SampleSet::build(&args.spec, args.x, args.opts)?;
    report.exhaustive = s.is_exhaustive();
    report.subsample = s.subsample().cloned();
    report.seed = Some(args.opts.seed);
    report.detail("n_total", s.n_total());
    report.detail("sample_size", s.len());
    Ok(s)
}

fn execute(cfg: &ExperimentConfig, plan: Plan) -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new(cfg, cfg.kind()?);
    match plan {
        Plan::RhoTable { u_max, step } => {
            let owned;
            let table = if u_max <= DEFAULT_U_MAX as f64 {
                default_table()
            } else {
                owned = RhoTable::build(DEFAULT_PER_UNIT, u_max.ceil() as u32)?;
                &owned
            };
            let mut t = Table::new(&["u", "rho(u)"]);
            for (u, v) in table.sample_points(u_max, step)? {
                t.rows.push(vec![u, v]);
            }
            r.estimate = Some(table.rho(u_max)?);
            r.detail("per_unit", table.per_unit());
            r.table = Some(t);
        }
        Plan::PdSample {
            n,
            k,
            c,
            truncation,
            seed,
        } => {
            r.seed = Some(seed);
            r.exhaustive = false;
            #[derive(Default)]
            struct Acc {
                hits: u64,
                l1: Moments,
                max_mass_error: f64,
                inexact_prefix: u64,
                rows: Vec<Vec<f64>>,
            }
            let parts = map_chunks(n, |range| -> Result<Acc> {
                let mut acc = Acc::default();
                for i in range {
                    let s = sample_pd_indexed(seed, i, truncation)?;
                    acc.hits += (s.get(0) <= c) as u64;
                    acc.l1.push(s.get(0));
                    let mass: f64 = s.entries().iter().sum::<f64>() + s.tail_mass();
                    acc.max_mass_error = acc.max_mass_error.max((mass - 1.0).abs());
                    acc.inexact_prefix += (!s.exact_prefix(k.min(s.entries().len()))) as u64;
                    if i < PD_SAMPLE_TABLE_ROWS {
                        let mut row = vec![i as f64];
                        row.extend((0..k).map(|j| s.get(j)));
                        row.push(s.tail_mass());
                        acc.rows.push(row);
                    }
                }
                Ok(acc)
            });
            let mut total = Acc::default();
            for p in parts {
                let p = p?;
                total.hits += p.hits;
                total.l1.merge(&p.l1);
                total.max_mass_error = total.max_mass_error.max(p.max_mass_error);
                total.inexact_prefix += p.inexact_prefix;
                total.rows.extend(p.rows);
            }
            let est = crate::estimate::Estimate::binomial(total.hits, n);
            r.estimate = Some(est.value);
            r.std_error = Some(est.std_error);
            r.oracle_value = Some(default_table().cdf_l1(c)?);
            let l1 = total.l1.estimate();
            r.detail("threshold", c);
            r.detail("mean_l1", l1.value);
            r.detail("mean_l1_std_error", l1.std_error);
            r.detail("max_mass_error", total.max_mass_error);
            r.detail("inexact_prefixes", total.inexact_prefix);
            let mut columns: Vec<String> = vec!["sample".into()];
            columns.extend((1..=k).map(|j| format!("L{j}")));
            columns.push("tail_mass".into());
            r.table = Some(Table {
                columns,
                rows: total.rows,
            });
        }
        Plan::PdCorr { eta, n, seed } => {
            r.seed = Some(seed);
            r.exhaustive = false;
            let est = corr_mc(&eta, n, seed)?;
            r.estimate = Some(est.value);
            r.std_error = Some(est.std_error);
            r.oracle_value = pd_oracle(&eta, &mut r)?;
        }
        Plan::SeqCorr { sample, eta } => {
            let s = build_sample(&sample, &mut r)?;
            let est = empirical_corr(&s, &eta)?;
            r.estimate = Some(est.value);
            r.std_error = Some(est.std_error);
            r.oracle_value = pd_oracle(&eta, &mut r)?;
        }
        Plan::JointCdfSeq { sample, c } => {
            let s = build_sample(&sample, &mut r)?;
            let est = empirical_joint_cdf(&s, &c)?;
            r.estimate = Some(est.value);
            r.std_error = Some(est.std_error);
            if c.len() == 1 {
                r.oracle_value = Some(default_table().cdf_l1(c[0])?);
            }
        }
        Plan::JointCdfPd { c, n, seed } => {
            r.seed = Some(seed);
            r.exhaustive = false;
            let est = joint_cdf_mc(&c, n, seed)?;
            r.estimate = Some(est.value);
            r.std_error = Some(est.std_error);
            if c.len() == 1 {
                r.oracle_value = Some(default_table().cdf_l1(c[0])?);
            }
            let min_c = c.iter().copied().fold(f64::INFINITY, f64::min);
            if min_c >= MIN_SIZE_BIASED_THRESHOLD {
                let sb = joint_cdf_size_biased(&c, n, seed)?;
                let se = (est.std_error.powi(2) + sb.std_error.powi(2)).sqrt();
                r.detail("size_biased_estimate", sb.value);
                r.detail("size_biased_std_error", sb.std_error);
                r.detail("estimator_z", if se > 0.0 { (est.value - sb.value) / se } else { 0.0 });
            }
        }
        Plan::Tail { sample, eps } => {
            let s = build_sample(&sample, &mut r)?;
            let est = tail_frequency(&s, eps)?;
            r.estimate = Some(est.value);
            r.std_error = Some(est.std_error);
            let limit = 1.0 - default_table().cdf_l1(1.0 - eps)?;
            r.oracle_value = Some(limit);
            if let Some(gb) = cfg.guard_band {
                r.detail("guard_bound", gb * limit);
                r.detail("within_guard_band", est.value <= gb * limit);
            }
        }
        Plan::Lod { spec, g, x, c } => {
            let res = lod_error_sum_with(&spec, &g, x, c)?;
            r.estimate = Some(res.normalized_sum);
            r.detail("d_max", res.d_max);
            r.detail("max_abs_r", res.max_abs_r);
            r.detail("n_total", res.n_total);
            r.detail("g", g.name());
            if matches!(spec, SequenceSpec::Uniform) {
                let bound = (x as f64).powf(c - 1.0);
                r.detail("closed_bound", bound);
                r.detail("within_closed_bound", res.normalized_sum <= bound);
            }
        }
        Plan::Repeated { sample, alpha, c } => {
            let s = build_sample(&sample, &mut r)?;
            let res = repeated_factor_frequency(&s, alpha, c)?;
            r.estimate = Some(res.estimate.value);
            r.std_error = Some(res.estimate.std_error);
            r.oracle_value = Some(res.oracle);
            r.detail("p_lo", res.p_lo);
            r.detail("p_hi", res.p_hi);
        }
        Plan::Sieve {
            sample,
            eps,
            z0,
            delta0,
        } => {
            let s = build_sample(&sample, &mut r)?;
            let res = sieve_survivor_experiment(&s, eps, z0, delta0)?;
            r.estimate = Some(res.ratio);
            r.detail("survivors", res.survivors);
            r.detail("density", res.density);
            r.detail("v", res.v);
            r.detail("window_primes", res.window_primes);
            r.detail("p_lo", res.p_lo);
            r.detail("p_hi", res.p_hi);
        }
        Plan::Mertens { g, grid } => {
            let devs = mertens_series(&g, &grid)?;
            let mut t = Table::new(&["x", "deviation"]);
            for (&x, &d) in grid.iter().zip(&devs) {
                t.rows.push(vec![x as f64, d]);
            }
            r.estimate = devs.last().copied();
            let max_abs = devs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            r.detail("max_abs_deviation", max_abs);
            r.detail("g", g.name());
            r.table = Some(t);
        }
        Plan::Growth { g, grid } => {
            let sums = partial_sums_series(&g, &grid)?;
            let mut t = Table::new(&["x", "sum_g", "sum_h", "log_x"]);
            for s in &sums {
                t.rows.push(vec![
                    s.x as f64,
                    s.sum_g,
                    s.sum_h.map_or(f64::NAN, |h| h as f64),
                    (s.x as f64).ln(),
                ]);
            }
            let last = sums.last().expect("grid is non-empty");
            r.estimate = Some(last.sum_g);
            if let Some(h) = last.sum_h {
                r.detail("sum_h", h);
            }
            // Slope of log sum_g against log log x over the grid.
            let pts: Vec<(f64, f64)> = sums
                .iter()
                .filter(|s| s.x >= 3 && s.sum_g > 0.0)
                .map(|s| ((s.x as f64).ln().ln(), s.sum_g.ln()))
                .collect();
            if pts.len() >= 2 {
                let (a, b) = (pts[0], pts[pts.len() - 1]);
                r.detail("loglog_slope", (b.1 - a.1) / (b.0 - a.0));
            }
            r.detail("g", g.name());
            r.table = Some(t);
        }
    }
    Ok(r)
}

/// Reports from a sweep and their combined CSV.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis: String,
    pub reports: Vec<ExperimentReport>,
}

impl SweepResult {
    /// One row per report: the axis value and the headline numbers.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},estimate,std_error,oracle_value,exhaustive\n", self.axis);
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.reports {
            let params = serde_json::to_value(&r.parameters).expect("config serializes");
            let value = params.get(&self.axis).map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                csv_field(&value),
                opt(r.estimate),
                opt(r.std_error),
                opt(r.oracle_value),
                r.exhaustive
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&json!({
            "axis": self.axis,
            "reports": self.reports,
        }))
        .expect("sweep serializes")
    }
}

/// Runs `template` once per value of the field `axis`.
pub fn sweep(template: &ExperimentConfig, axis: &str, values: &[Value]) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::invalid("values", "sweep needs at least one value"));
    }
    let base = serde_json::to_value(template).expect("config serializes");
    let configs = values
        .iter()
        .map(|v| {
            let mut obj = base.clone();
            obj.as_object_mut()
                .expect("config is an object")
                .insert(axis.to_string(), v.clone());
            ExperimentConfig::from_value(obj)
        })
        .collect::<Result<Vec<_>>>()?;
    for c in &configs {
        c.validate()?;
    }
    let reports = configs.iter().map(run).collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        axis: axis.to_string(),
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(v: Value) -> ExperimentConfig {
        ExperimentConfig::from_value(v).unwrap()
    }

    #[test]
    fn rho_table_report() {
        let r = run(&cfg(json!({"experiment": "rho-table", "u_max": 5}))).unwrap();
        let t = r.table.as_ref().unwrap();
        let at = |u: f64| t.rows.iter().find(|row| row[0] == u).unwrap()[1];
        assert_eq!(at(1.0), 1.0);
        assert!((at(2.0) - (1.0 - 2f64.ln())).abs() < 1e-12);
        assert!(r.to_csv().starts_with("u,rho(u)\n"));
    }

    #[test]
    fn missing_field_is_named() {
        let err = run(&cfg(json!({"experiment": "tail", "spec": {"kind": "uniform"}, "eps": 0.1}))).unwrap_err();
        assert!(matches!(err, Error::Invalid { ref field, .. } if field == "x"));
        let err = ExperimentConfig::from_json(r#"{"experiment":"tail","bogus":1}"#).unwrap_err();
        assert!(matches!(err, Error::Invalid { ref field, .. } if field == "bogus"));
        assert!(run(&ExperimentConfig::default()).is_err());
    }

    #[test]
    fn counts_accept_float_notation() {
        let c = cfg(json!({"experiment": "tail", "x": 1e5, "n_samples": "2e3"}));
        assert_eq!(c.x, Some(100_000));
        assert_eq!(c.n_samples, Some(2_000));
        assert!(ExperimentConfig::from_value(json!({"x": 1.5})).is_err());
    }

    #[test]
    fn report_round_trips_into_config() {
        let c = cfg(json!({"experiment": "tail", "spec": {"kind": "uniform"}, "x": 10000, "eps": 0.1, "seed": 3, "threads": 2}));
        let r = run(&c).unwrap();
        let again = ExperimentConfig::from_json(&r.to_json()).unwrap();
        assert_eq!(again, c.parameters());
        assert_eq!(run(&again).unwrap().payload_json(), r.payload_json());
    }

    #[test]
    fn sweep_basics() {
        let t = cfg(json!({"experiment": "lod", "spec": {"kind": "uniform"}, "c": 0.5}));
        assert!(sweep(&t, "x", &[]).is_err());
        let s = sweep(&t, "x", &[json!(1000), json!(10000)]).unwrap();
        assert_eq!(s.reports.len(), 2);
        let csv = s.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("x,estimate"));
    }

    #[test]
    fn pd_corr_falls_back_to_quadrature() {
        let c = cfg(json!({
            "experiment": "pd-corr",
            "boxes": [{"lower": [0.4, 0.5], "upper": [0.6, 0.7]}],
            "n_samples": 1000,
        }));
        let r = run(&c).unwrap();
        assert_eq!(r.warnings.len(), 1);
        assert_eq!(r.details["oracle_source"], "quadrature");
        assert!(r.oracle_value.unwrap() > 0.0);
    }
}
