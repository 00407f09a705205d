//! `pdspectra` command-line front end.
//!
//! Each subcommand maps onto one experiment kind. A `--config` file supplies
//! the base document and flags override its fields one by one.

use std::fs;
use std::panic;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use pdspectra::experiment::{self, parse_count, ExperimentConfig, ExperimentReport};
use pdspectra::{Error, ErrorClass};

#[derive(Parser)]
#[command(name = "pdspectra", version, about = "Prime-factor spectra of arithmetic sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON experiment config (a previous report works too).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Write the report here instead of printing a summary.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Args, Clone, Default)]
struct SeqArgs {
    /// Sequence: `uniform`, `thue-morse`, `shifted-primes[:a]`, `poly:c0,c1,..`
    /// (constant term first) or a JSON object.
    #[arg(long)]
    spec: Option<String>,
    #[arg(long, value_parser = parse_count)]
    x: Option<u64>,
    #[arg(long, value_parser = parse_count)]
    max_members: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the Dickman function.
    Rho {
        #[arg(long)]
        u_max: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Sample the Poisson-Dirichlet process.
    Pd {
        #[arg(long, value_parser = parse_count)]
        n_samples: Option<u64>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        truncation: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Correlation sum of a box function, over a sequence or the PD process.
    Corr {
        #[command(flatten)]
        seq: SeqArgs,
        /// One box, `a1:b1[,a2:b2..][@weight]`; repeat for a sum of boxes.
        #[arg(long = "box", value_name = "BOX")]
        boxes: Vec<String>,
        #[arg(long, value_parser = parse_count)]
        n_samples: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Joint CDF of the largest normalized factors.
    Cdf {
        #[command(flatten)]
        seq: SeqArgs,
        /// Comma-separated thresholds `c1,c2,..`.
        #[arg(long)]
        thresholds: Option<String>,
        #[arg(long, value_parser = parse_count)]
        n_samples: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Frequency of a dominant prime factor.
    Tail {
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        guard_band: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Level-of-distribution error sum.
    Lod {
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long)]
        c: Option<f64>,
        /// Density override: `reciprocal`, `reciprocal-totient[:a]`,
        /// `root-density:c0,c1,..` or JSON.
        #[arg(long)]
        g: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Frequency of repeated prime factors in a window.
    Repeated {
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Survivors of a prime-window sieve.
    Sieve {
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        z0: Option<f64>,
        #[arg(long)]
        delta0: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Mertens-type deviation of a density.
    Mertens {
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long)]
        g: Option<String>,
        /// Comma-separated list of x values.
        #[arg(long)]
        x_grid: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Partial sums of a density and its root count.
    Growth {
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long)]
        g: Option<String>,
        #[arg(long)]
        x_grid: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Run a config template across values of one field.
    Sweep {
        /// Field to vary, e.g. `x` or `eps`.
        #[arg(long)]
        axis: String,
        /// Comma-separated values; counts like `1e6` are accepted.
        #[arg(long)]
        values: String,
        #[command(flatten)]
        common: Common,
    },
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::invalid(field, reason)
}

fn parse_ints(s: &str, field: &str) -> Result<Vec<i64>, Error> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| invalid(field, format!("`{t}` is not an integer")))
        })
        .collect()
}

fn parse_floats(s: &str, field: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| invalid(field, format!("`{t}` is not a number")))
        })
        .collect()
}

fn parse_json(s: &str, field: &str) -> Result<Value, Error> {
    serde_json::from_str(s).map_err(|e| invalid(field, e.to_string()))
}

fn parse_spec(s: &str) -> Result<Value, Error> {
    let s = s.trim();
    if s.starts_with('{') {
        return parse_json(s, "spec");
    }
    let (name, arg) = s.split_once(':').unwrap_or((s, ""));
    Ok(match name.replace('_', "-").as_str() {
        "uniform" => json!({"kind": "uniform"}),
        "thue-morse" => json!({"kind": "thue_morse"}),
        "shifted-primes" if arg.is_empty() => json!({"kind": "shifted_primes"}),
        "shifted-primes" => json!({"kind": "shifted_primes", "shift": parse_ints(arg, "spec")?[0]}),
        "poly" => json!({"kind": "poly", "coeffs": parse_ints(arg, "spec")?}),
        _ => return Err(invalid("spec", format!("unknown sequence `{s}`"))),
    })
}

fn parse_g(s: &str) -> Result<Value, Error> {
    let s = s.trim();
    if s.starts_with('{') {
        return parse_json(s, "g");
    }
    let (name, arg) = s.split_once(':').unwrap_or((s, ""));
    Ok(match name.replace('_', "-").as_str() {
        "reciprocal" => json!({"kind": "reciprocal"}),
        "reciprocal-totient" if arg.is_empty() => json!({"kind": "reciprocal_totient"}),
        "reciprocal-totient" => json!({"kind": "reciprocal_totient", "shift": parse_ints(arg, "g")?[0]}),
        "root-density" => json!({"kind": "root_density", "coeffs": parse_ints(arg, "g")?}),
        _ => return Err(invalid("g", format!("unknown density `{s}`"))),
    })
}

/// `a1:b1,a2:b2@w` into a weighted box.
fn parse_box(s: &str) -> Result<Value, Error> {
    let (sides, weight) = match s.split_once('@') {
        Some((b, w)) => (
            b,
            w.trim()
                .parse::<f64>()
                .map_err(|_| invalid("boxes", format!("bad weight in `{s}`")))?,
        ),
        None => (s, 1.0),
    };
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for side in sides.split(',') {
        let (a, b) = side
            .split_once(':')
            .ok_or_else(|| invalid("boxes", format!("expected `a:b`, got `{side}`")))?;
        let v = parse_floats(&format!("{a},{b}"), "boxes")?;
        lower.push(v[0]);
        upper.push(v[1]);
    }
    Ok(json!({"lower": lower, "upper": upper, "weight": weight}))
}

fn parse_grid(s: &str) -> Result<Value, Error> {
    let xs = s
        .split(',')
        .map(|t| parse_count(t).map_err(|e| invalid("x_grid", e)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(json!(xs))
}

fn sweep_value(s: &str) -> Value {
    let s = s.trim();
    if let Ok(v) = serde_json::from_str::<Value>(s) {
        if let Some(f) = v.as_f64() {
            if f.fract() == 0.0 && f >= 0.0 && f < 1.8e19 {
                return json!(f as u64);
            }
        }
        return v;
    }
    json!(s)
}

struct Overrides(Map<String, Value>);

impl Overrides {
    fn set(&mut self, key: &str, v: Option<Value>) {
        if let Some(v) = v {
            self.0.insert(key.to_string(), v);
        }
    }

    fn num<T: Into<Value>>(&mut self, key: &str, v: Option<T>) {
        self.set(key, v.map(Into::into));
    }

    fn seq(&mut self, seq: &SeqArgs) -> Result<(), Error> {
        self.set("spec", seq.spec.as_deref().map(parse_spec).transpose()?);
        self.num("x", seq.x);
        self.num("max_members", seq.max_members);
        Ok(())
    }

    fn common(&mut self, c: &Common) {
        self.num("seed", c.seed);
        self.num("threads", c.threads);
    }
}

fn load_base(path: Option<&Path>) -> Result<Value, Error> {
    let Some(path) = path else {
        return Ok(json!({}));
    };
    let text = fs::read_to_string(path)
        .map_err(|e| invalid("config", format!("cannot read {}: {e}", path.display())))?;
    let cfg = ExperimentConfig::from_json(&text)?;
    Ok(serde_json::to_value(cfg).expect("config serializes"))
}

/// Builds the effective config: the `--config` document overridden by flags,
/// with the experiment kind fixed by the subcommand.
fn build_config(
    kind: Option<&str>,
    common: &Common,
    overrides: Overrides,
) -> Result<ExperimentConfig, Error> {
    let mut base = load_base(common.config.as_deref())?;
    let obj = base.as_object_mut().expect("config is an object");
    for (k, v) in overrides.0 {
        obj.insert(k, v);
    }
    if let Some(kind) = kind {
        let kind = match kind {
            "corr" => {
                if obj.contains_key("spec") {
                    "seq-corr"
                } else {
                    "pd-corr"
                }
            }
            "cdf" => "joint-cdf",
            k => k,
        };
        match obj.get("experiment").and_then(Value::as_str) {
            Some(existing) if existing != kind => {
                return Err(invalid(
                    "experiment",
                    format!("config is for `{existing}` but the subcommand runs `{kind}`"),
                ));
            }
            _ => {
                obj.insert("experiment".into(), json!(kind));
            }
        }
    }
    ExperimentConfig::from_value(base)
}

fn output_format(common: &Common) -> Format {
    common.format.unwrap_or_else(|| match &common.out {
        Some(p) if p.extension().is_some_and(|e| e == "csv") => Format::Csv,
        _ => Format::Json,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::Internal(format!("cannot write {}: {e}", path.display())))
}

fn emit_report(report: &ExperimentReport, common: &Common) -> Result<(), Error> {
    match (&common.out, common.format) {
        (None, None) => print!("{}", report.summary()),
        (None, Some(Format::Csv)) => print!("{}", report.to_csv()),
        (None, Some(Format::Json)) => println!("{}", report.to_json()),
        (Some(path), _) => {
            let format = output_format(common);
            match format {
                Format::Csv => write_file(path, &report.to_csv())?,
                Format::Json => {
                    write_file(path, &report.to_json())?;
                    if report.table.is_some() {
                        write_file(&path.with_extension("csv"), &report.to_csv())?;
                    }
                }
            }
            print!("{}", report.summary());
            println!("wrote {} ({})", path.display(), format.as_str());
        }
    }
    Ok(())
}

fn dispatch(cmd: Command) -> Result<(), Error> {
    let mut o = Overrides(Map::new());
    let (kind, common) = match cmd {
        Command::Sweep {
            axis,
            values,
            common,
        } => {
            if common.config.is_none() {
                return Err(invalid("config", "sweep needs a --config template"));
            }
            o.common(&common);
            let template = build_config(None, &common, o)?;
            let values: Vec<Value> = if values.trim().is_empty() {
                Vec::new()
            } else {
                values.split(',').map(sweep_value).collect()
            };
            let result = experiment::sweep(&template, &axis, &values)?;
            match (&common.out, output_format(&common)) {
                (Some(path), Format::Csv) => write_file(path, &result.to_csv())?,
                (Some(path), Format::Json) => {
                    write_file(path, &result.to_json())?;
                    write_file(&path.with_extension("csv"), &result.to_csv())?;
                }
                (None, _) => {}
            }
            match (&common.out, common.format) {
                (None, Some(Format::Json)) => println!("{}", result.to_json()),
                _ => print!("{}", result.to_csv()),
            }
            return Ok(());
        }
        Command::Rho {
            u_max,
            step,
            common,
        } => {
            o.num("u_max", u_max);
            o.num("step", step);
            ("rho-table", common)
        }
        Command::Pd {
            n_samples,
            k,
            threshold,
            truncation,
            common,
        } => {
            o.num("n_samples", n_samples);
            o.num("k", k);
            o.set("thresholds", threshold.map(|t| json!([t])));
            o.num("truncation", truncation);
            ("pd-sample", common)
        }
        Command::Corr {
            seq,
            boxes,
            n_samples,
            common,
        } => {
            o.seq(&seq)?;
            if !boxes.is_empty() {
                let bs = boxes.iter().map(|b| parse_box(b)).collect::<Result<Vec<_>, _>>()?;
                o.set("boxes", Some(Value::Array(bs)));
            }
            o.num("n_samples", n_samples);
            ("corr", common)
        }
        Command::Cdf {
            seq,
            thresholds,
            n_samples,
            common,
        } => {
            o.seq(&seq)?;
            o.set(
                "thresholds",
                thresholds.map(|t| parse_floats(&t, "thresholds")).transpose()?.map(|v| json!(v)),
            );
            o.num("n_samples", n_samples);
            ("cdf", common)
        }
        Command::Tail {
            seq,
            eps,
            guard_band,
            common,
        } => {
            o.seq(&seq)?;
            o.num("eps", eps);
            o.num("guard_band", guard_band);
            ("tail", common)
        }
        Command::Lod { seq, c, g, common } => {
            o.seq(&seq)?;
            o.num("c", c);
            o.set("g", g.as_deref().map(parse_g).transpose()?);
            ("lod", common)
        }
        Command::Repeated {
            seq,
            alpha,
            c,
            common,
        } => {
            o.seq(&seq)?;
            o.num("alpha", alpha);
            o.num("c", c);
            ("repeated", common)
        }
        Command::Sieve {
            seq,
            eps,
            z0,
            delta0,
            common,
        } => {
            o.seq(&seq)?;
            o.num("eps", eps);
            o.num("z0", z0);
            o.num("delta0", delta0);
            ("sieve-survivors", common)
        }
        Command::Mertens {
            seq,
            g,
            x_grid,
            common,
        } => {
            o.seq(&seq)?;
            o.set("g", g.as_deref().map(parse_g).transpose()?);
            o.set("x_grid", x_grid.as_deref().map(parse_grid).transpose()?);
            ("mertens", common)
        }
        Command::Growth {
            seq,
            g,
            x_grid,
            common,
        } => {
            o.seq(&seq)?;
            o.set("g", g.as_deref().map(parse_g).transpose()?);
            o.set("x_grid", x_grid.as_deref().map(parse_grid).transpose()?);
            ("growth", common)
        }
    };
    o.common(&common);
    let cfg = build_config(Some(kind), &common, o)?;
    let report = experiment::run(&cfg)?;
    emit_report(&report, &common)
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Validation => 2,
        ErrorClass::Resource => 3,
        ErrorClass::Internal => 4,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match panic::catch_unwind(|| dispatch(cli.command)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => ExitCode::from(4),
    }
}
