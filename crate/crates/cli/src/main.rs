use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use idealistic_core::expansion::{expand, ord_h_expansion, ord_h_membership};
use idealistic_core::instance::{Instance, InstanceFile};
use idealistic_core::invariants::{check_nsp, mu_tilde, stratify, MuValue, Verdict};
use idealistic_core::leading::{extract_lgs, sigma};
use idealistic_core::random::{random_instance, rng_from_seed, RandomParams};
use idealistic_core::verify::{run_suite, Suite};
use idealistic_core::{with_instance, Field, Point};

#[derive(Parser)]
#[command(
    name = "idealistic",
    version,
    about = "Invariants of D-saturated idealistic filtrations"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Instance file (JSON).
    #[arg(long, global = true)]
    instance: Option<PathBuf>,
    /// Point as comma-separated coordinates; defaults to the first listed
    /// point or the origin.
    #[arg(long, global = true)]
    point: Option<String>,
    /// Override the instance truncation.
    #[arg(long, global = true)]
    truncation: Option<usize>,
    /// Override the instance horizon.
    #[arg(long, global = true)]
    horizon: Option<u32>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 50)]
    trials: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Print the saturated generator list.
    Saturate,
    Sigma,
    /// Extract a leading generator system.
    Lgs,
    /// Expand a polynomial along the leading generator system.
    Expand {
        #[arg(long)]
        poly: String,
    },
    /// Order modulo the system, by expansion and by ideal membership.
    Ordh {
        #[arg(long)]
        poly: String,
    },
    Mu,
    /// Invariants at every listed point, with the group comparisons.
    Stratify,
    /// Nonsingularity check at the point.
    Nsp,
    /// Run a property suite.
    Verify {
        /// fcl, coeff, uniq, independence, semicont, nsp or all.
        suite: String,
    },
    /// Emit a reproducible random instance file.
    RandomInstance {
        #[arg(long, default_value_t = 2)]
        p: u64,
        #[arg(long, default_value_t = 1)]
        ext_degree: u32,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        n_gens: usize,
        #[arg(long, default_value_t = 3)]
        max_deg: u32,
        #[arg(long, default_value_t = 2)]
        max_level: u32,
        #[arg(long)]
        homogeneous: bool,
        #[arg(long)]
        fractional: bool,
        /// Extra random points grouped around the origin.
        #[arg(long, default_value_t = 0)]
        points: usize,
    },
}

/// A failure that maps onto an exit code.
enum Failure {
    Usage(String),
}

type Outcome = Result<(Value, bool), Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((report, pass)) => {
            emit(&report, cli.global.format);
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    let g = &cli.global;
    if let Command::RandomInstance {
        p,
        ext_degree,
        d,
        n_gens,
        max_deg,
        max_level,
        homogeneous,
        fractional,
        points,
    } = cli.command
    {
        let params = RandomParams {
            p,
            ext_degree,
            d,
            n_gens,
            max_deg,
            max_level,
            truncation: g.truncation.unwrap_or(8),
            seed: g.seed,
            homogeneous,
            fractional,
            points,
        };
        let mut file = random_instance(&params).map_err(usage)?;
        file.horizon = g.horizon;
        let value = serde_json::to_value(&file).expect("serializable");
        return Ok((value, true));
    }
    let path = g
        .instance
        .as_ref()
        .ok_or_else(|| usage("--instance is required"))?;
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut file = InstanceFile::from_json(&text).map_err(usage)?;
    if let Some(t) = g.truncation {
        file.truncation = t;
    }
    if g.horizon.is_some() {
        file.horizon = g.horizon;
    }
    let any = file.load().map_err(usage)?;
    let (mut value, pass) = with_instance!(any, inst => compute(&inst, &cli.command, g))?;
    let obj = value.as_object_mut().expect("reports are objects");
    let mut head = Map::new();
    head.insert("command".into(), json!(command_name(&cli.command)));
    head.append(obj);
    Ok((Value::Object(head), pass))
}

fn command_name(c: &Command) -> String {
    match c {
        Command::Saturate => "saturate".into(),
        Command::Sigma => "sigma".into(),
        Command::Lgs => "lgs".into(),
        Command::Expand { .. } => "expand".into(),
        Command::Ordh { .. } => "ordh".into(),
        Command::Mu => "mu".into(),
        Command::Stratify => "stratify".into(),
        Command::Nsp => "nsp".into(),
        Command::Verify { suite } => format!("verify {suite}"),
        Command::RandomInstance { .. } => "random-instance".into(),
    }
}

fn point_of<K: Field>(inst: &Instance<K>, g: &Global) -> Result<Point<K>, Failure> {
    match &g.point {
        Some(s) => inst
            .ring
            .parse_point(s)
            .map_err(|e| usage(format!("--point: {e}"))),
        None => Ok(inst.base_point()),
    }
}

fn compute<K: Field>(inst: &Instance<K>, cmd: &Command, g: &Global) -> Outcome {
    let ring = &inst.ring;
    let f = &inst.filtration;
    let t = inst.truncation;
    let e = inst.horizon;
    let mut out = Map::new();
    out.insert("T".into(), json!(t));
    out.insert("E".into(), json!(e));
    let mut pass = true;
    match cmd {
        Command::Saturate => {
            let file = inst.saturated_file();
            out.insert(
                "generators".into(),
                serde_json::to_value(&file.generators).expect("plain"),
            );
            out.insert("delta".into(), json!(f.denominator_bound()));
        }
        Command::Sigma => {
            let p = point_of(inst, g)?;
            let s = sigma(f, &p, e, t).map_err(usage)?;
            out.insert("point".into(), json!(ring.format_point(&p)));
            out.insert("sigma".into(), json!(s.values));
            out.insert("censored".into(), json!(s.censored));
        }
        Command::Lgs => {
            let p = point_of(inst, g)?;
            let lgs = extract_lgs(&f.localize(&p).map_err(usage)?, e, t).map_err(usage)?;
            out.insert("point".into(), json!(ring.format_point(&p)));
            out.insert("lgs".into(), lgs_json(&lgs.format()));
            let field = ring.field();
            let rows: Vec<Vec<String>> = lgs
                .coords()
                .iter()
                .map(|r| r.iter().map(|c| field.format(c)).collect())
                .collect();
            out.insert("coordinates".into(), json!(rows));
        }
        Command::Expand { poly } | Command::Ordh { poly } => {
            let p = point_of(inst, g)?;
            let h = ring
                .parse_poly(poly)
                .map_err(|e| usage(format!("--poly: {e}")))?;
            let lgs = extract_lgs(&f.localize(&p).map_err(usage)?, e, t).map_err(usage)?;
            out.insert("point".into(), json!(ring.format_point(&p)));
            out.insert("lgs".into(), lgs_json(&lgs.format()));
            if matches!(cmd, Command::Expand { .. }) {
                let r = expand(&h, &lgs, t).map_err(usage)?;
                out.insert(
                    "coefficients".into(),
                    serde_json::to_value(r.dump(ring)).expect("plain"),
                );
                out.insert("ord_h".into(), json!(r.ord_h().to_string()));
            } else {
                let a = ord_h_expansion(&h, &lgs, t).map_err(usage)?;
                let b = ord_h_membership(&h, &lgs, t).map_err(usage)?;
                pass = a == b;
                out.insert("ord_h".into(), json!(a.to_string()));
                out.insert("ord_h_membership".into(), json!(b.to_string()));
                out.insert("agree".into(), json!(pass));
            }
        }
        Command::Mu => {
            let p = point_of(inst, g)?;
            let mu = if f.in_support(&p).map_err(usage)? {
                let lgs = extract_lgs(&f.localize(&p).map_err(usage)?, e, t).map_err(usage)?;
                mu_tilde(f, &p, &lgs, t).map_err(usage)?
            } else {
                MuValue::Exact(0.into())
            };
            out.insert("point".into(), json!(ring.format_point(&p)));
            out.insert("mu".into(), json!(mu.to_string()));
        }
        Command::Stratify => {
            let points = if inst.points.is_empty() {
                vec![ring.origin()]
            } else {
                inst.points.clone()
            };
            let r = stratify(f, &points, &inst.groups, e, t).map_err(usage)?;
            pass = r.semicontinuity.pass && r.purification.iter().all(|row| row.pass);
            merge(&mut out, serde_json::to_value(&r).expect("plain"));
        }
        Command::Nsp => {
            let p = point_of(inst, g)?;
            let mut rng = rng_from_seed(g.seed);
            let r = check_nsp(f, &p, e, t, &inst.points, 5, &mut rng).map_err(usage)?;
            pass = r.verdict != Verdict::Refuted;
            out.insert("point".into(), json!(ring.format_point(&p)));
            merge(&mut out, serde_json::to_value(&r).expect("plain"));
        }
        Command::Verify { suite } => {
            let which: Suite = suite.parse().map_err(usage)?;
            let mut rng = rng_from_seed(g.seed);
            let reports = run_suite(inst, which, &mut rng, g.trials).map_err(usage)?;
            pass = reports.iter().all(|r| r.pass);
            out.insert("seed".into(), json!(g.seed));
            out.insert(
                "reports".into(),
                serde_json::to_value(&reports).expect("plain"),
            );
        }
        Command::RandomInstance { .. } => unreachable!("handled before loading"),
    }
    out.insert("pass".into(), json!(pass));
    Ok((Value::Object(out), pass))
}

fn lgs_json(entries: &[(String, u32)]) -> Value {
    entries
        .iter()
        .map(|(poly, e)| json!({"poly": poly, "e": e}))
        .collect()
}

fn merge(out: &mut Map<String, Value>, v: Value) {
    if let Value::Object(m) = v {
        for (k, v) in m {
            out.insert(k, v);
        }
    }
}

fn emit(report: &Value, format: Format) {
    let body = match format {
        Format::Json => serde_json::to_string_pretty(report).expect("serializable"),
        Format::Text => {
            let mut lines = Vec::new();
            text_lines(report, "", &mut lines);
            lines.join("\n")
        }
    };
    // A closed pipe is not an error for a report writer.
    let _ = writeln!(std::io::stdout().lock(), "{body}");
}

fn text_lines(v: &Value, prefix: &str, lines: &mut Vec<String>) {
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                text_lines(v, &key, lines);
            }
        }
        Value::Array(items) if items.iter().any(|i| i.is_object() || i.is_array()) => {
            for (i, item) in items.iter().enumerate() {
                text_lines(item, &format!("{prefix}[{i}]"), lines);
            }
        }
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(scalar).collect();
            lines.push(format!("{prefix}: [{}]", parts.join(", ")));
        }
        other => lines.push(format!("{prefix}: {}", scalar(other))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_rendering_flattens_nested_values() {
        let v = json!({"a": 1, "b": {"c": [1, 2], "d": [{"e": "x"}]}});
        let mut lines = Vec::new();
        text_lines(&v, "", &mut lines);
        assert_eq!(lines, vec!["a: 1", "b.c: [1, 2]", "b.d[0].e: x"]);
    }
}
