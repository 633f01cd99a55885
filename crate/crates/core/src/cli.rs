//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 failed verification.

use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde_json::{json, Value};

use crate::coeffs::{parse_rational, rational_to_string, GaussianRational};
use crate::exec::Execution;
use crate::expr::{format_poly, parse_poly, poly_from_json_str, poly_to_json};
use crate::kicked::KickedSystem;
use crate::lie::{generator_as_operator, BracketKind, Generator, Order, PolyDiffOperator};
use crate::poly::{PhasePoint, PhasePoly};
use crate::star::{cross, moyal, poisson, star, star_bopp};
use crate::star_exp::{mlt_equivalence_defect, star_conjugate, star_exponential_series};
use crate::verify::{run_suite, Suite, VerifyConfig};

#[derive(Parser, Debug)]
#[command(name = "moyal", version, about = "Exact phase-space quantum mechanics on polynomial symbols")]
struct Cli {
    /// Output format; csv is only available for trajectories
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Seed for the verification suites
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Iteration cap for exact flows
    #[arg(long = "max-iter", global = true, default_value_t = 64)]
    max_iter: u32,
    /// Read the last polynomial operand from a PhasePoly JSON file
    #[arg(long, global = true, value_name = "FILE")]
    input: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Groenewold,
    Bopp,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BracketType {
    Poisson,
    Moyal,
    Cross,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Classical,
    MoyalRaw,
    MoyalNorm,
}

impl From<Kind> for BracketKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Classical => BracketKind::Classical,
            Kind::MoyalRaw => BracketKind::MoyalRaw,
            Kind::MoyalNorm => BracketKind::MoyalNormalized,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Exact,
    Float,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("truncation").required(true).args(["order", "exact"])))]
struct FlowArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Generator symbol
    #[arg(long)]
    gen: String,
    /// Flow parameter, a constant expression such as 1/3 or (1/2)*i
    #[arg(long, allow_hyphen_values = true)]
    param: String,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    exact: bool,
}

impl FlowArgs {
    fn truncation(&self) -> Order {
        match self.order {
            Some(n) if !self.exact => Order::Truncated(n),
            _ => Order::Exact,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Star product f ⋆ g
    Star {
        #[arg(long, value_enum, default_value_t = Method::Groenewold)]
        method: Method,
        f: String,
        g: Option<String>,
    },
    /// Poisson, Moyal or half-Poisson (×) bracket
    Bracket {
        #[arg(long = "type", value_enum)]
        kind: BracketType,
        f: String,
        g: Option<String>,
    },
    /// One application of the generator G to f
    Apply {
        #[arg(long, value_enum)]
        kind: Kind,
        gen: String,
        f: Option<String>,
    },
    /// Lie flow exp(c L_G) f
    Flow {
        #[command(flatten)]
        flow: FlowArgs,
        f: Option<String>,
    },
    /// Images of q and p under the flow
    Coords {
        #[command(flatten)]
        flow: FlowArgs,
    },
    /// Differential operator of f ↦ {A, f}_M
    Operator { a: String },
    /// Periodically kicked system p²/2 + λ V(q) δ_T(t)
    #[command(group(ArgGroup::new("what").required(true).args(["observable", "q0"])))]
    Kick {
        #[arg(long)]
        potential: String,
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long = "T", allow_hyphen_values = true)]
        period: String,
        /// Evolve this observable symbolically
        #[arg(long)]
        observable: Option<String>,
        #[arg(long, allow_hyphen_values = true, requires_all = ["p0", "steps"])]
        q0: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        p0: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        hbar: Option<String>,
        /// Periods to evolve (trajectory length, or symbolic steps with --observable)
        #[arg(long)]
        steps: Option<usize>,
        /// Also print quantum minus classical evolution of the observable
        #[arg(long, requires = "observable")]
        defect: bool,
        /// Print the one-period defect of Q = q + a p³
        #[arg(long, allow_hyphen_values = true)]
        gauge: Option<String>,
        /// Trajectory arithmetic
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        /// Warn when symbolic evolution exceeds this many steps
        #[arg(long = "symbolic-budget", default_value_t = 5)]
        symbolic_budget: usize,
    },
    /// Truncated star exponential and conjugation
    Starexp {
        #[arg(long)]
        gen: String,
        #[arg(long, allow_hyphen_values = true)]
        param: String,
        #[arg(long)]
        order: usize,
        #[arg(long)]
        conjugate: Option<String>,
        /// Check conjugation against the Moyal-Lie flow with parameter −c
        #[arg(long = "check-mlt", requires = "conjugate")]
        check_mlt: bool,
    },
    /// Run a seeded invariant suite: algebra, covariance, kick, starexp or all
    Verify { suite: String },
}

/// A failure that maps to an exit code.
enum Failure {
    Usage(String),
    Verification(String),
}

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

type Outcome = Result<String, Failure>;

/// Parses `args` (including the program name) and writes the result to
/// `out`, diagnostics to `err`; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", text);
                    0
                }
                _ => {
                    let _ = write!(err, "{}", text);
                    1
                }
            };
        }
    };
    match execute(&cli, err) {
        Ok(text) => {
            let _ = writeln!(out, "{}", text);
            0
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {}", msg);
            1
        }
        Err(Failure::Verification(text)) => {
            let _ = writeln!(out, "{}", text);
            2
        }
    }
}

fn parse_expr(label: &str, src: &str) -> Result<PhasePoly, Failure> {
    parse_poly(src).map_err(|e| Failure::Usage(format!("{}: {}", label, e)))
}

fn parse_constant(label: &str, src: &str) -> Result<GaussianRational, Failure> {
    let f = parse_expr(label, src)?;
    f.as_constant()
        .ok_or_else(|| Failure::Usage(format!("{} must be a constant, got {}", label, format_poly(&f))))
}

fn parse_rat(label: &str, src: &str) -> Result<BigRational, Failure> {
    parse_rational(src).ok_or_else(|| Failure::Usage(format!("{}: invalid rational {:?}", label, src)))
}

/// The trailing polynomial operand, from the command line or `--input`.
fn trailing(cli: &Cli, label: &str, arg: &Option<String>) -> Result<PhasePoly, Failure> {
    match (arg, &cli.input) {
        (Some(_), Some(_)) => usage(format!("give <{}> either on the command line or via --input, not both", label)),
        (Some(src), None) => parse_expr(label, src),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("--input {}: {}", path.display(), e)))?;
            poly_from_json_str(&text).map_err(|e| Failure::Usage(format!("--input {}: {}", path.display(), e)))
        }
        (None, None) => usage(format!("missing operand <{}>", label)),
    }
}

fn reject_input(cli: &Cli, command: &str) -> Result<(), Failure> {
    if cli.input.is_some() {
        return usage(format!("{} takes no polynomial operand from --input", command));
    }
    Ok(())
}

fn emit_poly(cli: &Cli, f: &PhasePoly) -> Outcome {
    match cli.format {
        Format::Text => Ok(format_poly(f)),
        Format::Json => Ok(poly_to_json(f).to_string()),
        Format::Csv => usage("csv output is only available for kick trajectories"),
    }
}

fn emit_object(cli: &Cli, text: Vec<(String, String)>, value: Value) -> Outcome {
    match cli.format {
        Format::Text => Ok(text
            .into_iter()
            .map(|(k, v)| format!("{}: {}", k, v))
            .collect::<Vec<_>>()
            .join("\n")),
        Format::Json => Ok(value.to_string()),
        Format::Csv => usage("csv output is only available for kick trajectories"),
    }
}

fn generator(cli: &Cli, kind: BracketKind, symbol: PhasePoly) -> Generator {
    Generator::new(kind, symbol).with_max_iter(cli.max_iter as usize)
}

fn execute(cli: &Cli, err: &mut dyn Write) -> Outcome {
    match &cli.command {
        Command::Star { method, f, g } => {
            let f = parse_expr("f", f)?;
            let g = trailing(cli, "g", g)?;
            let r = match method {
                Method::Groenewold => star(&f, &g),
                Method::Bopp => star_bopp(&f, &g),
            };
            emit_poly(cli, &r)
        }
        Command::Bracket { kind, f, g } => {
            let f = parse_expr("f", f)?;
            let g = trailing(cli, "g", g)?;
            let r = match kind {
                BracketType::Poisson => poisson(&f, &g),
                BracketType::Moyal => moyal(&f, &g),
                BracketType::Cross => cross(&f, &g),
            };
            emit_poly(cli, &r)
        }
        Command::Apply { kind, gen, f } => {
            let g = parse_expr("G", gen)?;
            let f = trailing(cli, "f", f)?;
            emit_poly(cli, &generator(cli, (*kind).into(), g).apply(&f))
        }
        Command::Flow { flow, f } => {
            let g = parse_expr("G", &flow.gen)?;
            let c = parse_constant("param", &flow.param)?;
            let f = trailing(cli, "f", f)?;
            let r = generator(cli, flow.kind.into(), g)
                .flow(&c, &f, flow.truncation())
                .map_err(|e| Failure::Usage(e.to_string()))?;
            emit_poly(cli, &r)
        }
        Command::Coords { flow } => {
            reject_input(cli, "coords")?;
            let g = parse_expr("G", &flow.gen)?;
            let c = parse_constant("param", &flow.param)?;
            let gen = generator(cli, flow.kind.into(), g);
            let image = |x: PhasePoly| gen.flow(&c, &x, flow.truncation()).map_err(|e| Failure::Usage(e.to_string()));
            let (big_q, big_p) = (image(PhasePoly::q())?, image(PhasePoly::p())?);
            emit_object(
                cli,
                vec![("Q".into(), format_poly(&big_q)), ("P".into(), format_poly(&big_p))],
                json!({"Q": poly_to_json(&big_q), "P": poly_to_json(&big_p)}),
            )
        }
        Command::Operator { a } => {
            reject_input(cli, "operator")?;
            let a = parse_expr("A", a)?;
            let deg = a.degree();
            let op = generator_as_operator(&a, deg, deg);
            match cli.format {
                Format::Text => Ok(op.to_string()),
                Format::Json => Ok(operator_json(&op).to_string()),
                Format::Csv => usage("csv output is only available for kick trajectories"),
            }
        }
        Command::Kick { .. } => kick(cli, err),
        Command::Starexp {
            gen,
            param,
            order,
            conjugate,
            check_mlt,
        } => {
            reject_input(cli, "starexp")?;
            let a = parse_expr("A", gen)?;
            let c = parse_constant("param", param)?;
            let exp = star_exponential_series(&a, &c, *order);
            let mut text = vec![("exponential".to_string(), format_poly(&exp))];
            let mut value = json!({"exponential": poly_to_json(&exp)});
            let mut failed = false;
            if let Some(f) = conjugate {
                let f = parse_expr("f", f)?;
                let conj = star_conjugate(&a, &c, &f, *order);
                text.push(("conjugate".into(), format_poly(&conj)));
                value["conjugate"] = poly_to_json(&conj);
                if *check_mlt {
                    let d = mlt_equivalence_defect(&a, &c, &f, *order).map_err(|e| Failure::Usage(e.to_string()))?;
                    failed = !d.is_zero();
                    text.push(("mlt_defect".into(), format_poly(&d)));
                    value["mlt_defect"] = poly_to_json(&d);
                }
            }
            let rendered = emit_object(cli, text, value)?;
            if failed {
                let _ = writeln!(err, "conjugation disagrees with the Moyal-Lie flow");
                return Err(Failure::Verification(rendered));
            }
            Ok(rendered)
        }
        Command::Verify { suite } => {
            reject_input(cli, "verify")?;
            let suite: Suite = suite.parse().map_err(|e: crate::verify::VerifyError| Failure::Usage(e.to_string()))?;
            let cfg = VerifyConfig::new(cli.seed)
                .with_execution(Execution::Parallel)
                .with_max_iter(cli.max_iter as usize);
            let report = run_suite(suite, &cfg);
            let rendered = match cli.format {
                Format::Text => report.to_string(),
                Format::Json => report.to_json_string(),
                Format::Csv => return usage("csv output is only available for kick trajectories"),
            };
            if let Some(fail) = report.first_failure() {
                let _ = writeln!(
                    err,
                    "verification failed: {}: {}",
                    fail.name,
                    fail.counterexample.as_deref().unwrap_or("")
                );
                return Err(Failure::Verification(rendered));
            }
            Ok(rendered)
        }
    }
}

fn operator_json(op: &PolyDiffOperator) -> Value {
    let terms: Vec<Value> = op
        .terms()
        .map(|(&(dq, dp), c)| json!({"dq": dq, "dp": dp, "coeff": poly_to_json(c)}))
        .collect();
    json!({ "terms": terms })
}

fn kick(cli: &Cli, err: &mut dyn Write) -> Outcome {
    let Command::Kick {
        potential,
        lambda,
        period,
        observable,
        q0,
        p0,
        hbar,
        steps,
        defect,
        gauge,
        mode,
        symbolic_budget,
    } = &cli.command
    else {
        unreachable!("dispatched on Kick")
    };
    reject_input(cli, "kick")?;
    let v = parse_expr("potential", potential)?;
    let sys = KickedSystem::new(v, parse_rat("lambda", lambda)?, parse_rat("T", period)?)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let gauge = gauge.as_deref().map(|a| parse_rat("gauge", a)).transpose()?;

    if let Some(f) = observable {
        let f = parse_expr("observable", f)?;
        let n = steps.unwrap_or(1);
        if n > *symbolic_budget {
            let _ = writeln!(
                err,
                "warning: {} symbolic steps exceed the budget of {}; degrees grow with every period",
                n, symbolic_budget
            );
        }
        let quantum = sys.evolve_observable(&f, n, true);
        let classical = sys.evolve_observable(&f, n, false);
        let mut text = vec![
            ("quantum".to_string(), format_poly(&quantum)),
            ("classical".to_string(), format_poly(&classical)),
        ];
        let mut value = json!({"quantum": poly_to_json(&quantum), "classical": poly_to_json(&classical)});
        if *defect {
            let d = &quantum - &classical;
            text.push(("defect".into(), format_poly(&d)));
            value["defect"] = poly_to_json(&d);
        }
        if let Some(a) = &gauge {
            let d = sys.gauge_defect(a);
            text.push(("gauge_defect".into(), format_poly(&d)));
            value["gauge_defect"] = poly_to_json(&d);
        }
        return emit_object(cli, text, value);
    }

    if gauge.is_some() {
        return usage("--gauge needs --observable");
    }
    let (Some(q0), Some(p0), Some(n)) = (q0, p0, steps) else {
        return usage("trajectories need --q0, --p0 and --steps");
    };
    let (q0, p0) = (parse_rat("q0", q0)?, parse_rat("p0", p0)?);
    let h = match hbar {
        Some(h) => parse_rat("hbar", h)?,
        None => BigRational::from_integer(0.into()),
    };
    if h < BigRational::from_integer(0.into()) {
        return usage("hbar must be non-negative");
    }
    let rows: Vec<(String, String, Value, Value)> = match mode {
        Mode::Exact => sys
            .trajectory(&PhasePoint::exact(q0, p0, h), *n)
            .into_iter()
            .map(|pt| {
                let (q, p) = (rational_to_string(pt.q.re()), rational_to_string(pt.p.re()));
                (q.clone(), p.clone(), Value::from(q), Value::from(p))
            })
            .collect(),
        Mode::Float => {
            let to_f = |r: &BigRational| GaussianRational::from_real(r.clone()).to_complex64().re;
            let start = PhasePoint::float(to_f(&q0), to_f(&p0), to_f(&h)).map_err(|e| Failure::Usage(e.to_string()))?;
            sys.trajectory(&start, *n)
                .into_iter()
                .map(|pt| {
                    let (q, p) = (pt.q.re, pt.p.re);
                    (format!("{:e}", q), format!("{:e}", p), json!(q), json!(p))
                })
                .collect()
        }
    };
    Ok(match cli.format {
        Format::Csv => {
            let mut s = String::from("step,q,p");
            for (i, (q, p, _, _)) in rows.iter().enumerate() {
                s.push_str(&format!("\n{},{},{}", i, q, p));
            }
            s
        }
        Format::Text => rows
            .iter()
            .enumerate()
            .map(|(i, (q, p, _, _))| format!("{} {} {}", i, q, p))
            .collect::<Vec<_>>()
            .join("\n"),
        Format::Json => Value::Array(
            rows.into_iter()
                .enumerate()
                .map(|(i, (_, _, q, p))| json!({"step": i, "q": q, "p": p}))
                .collect(),
        )
        .to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("moyal").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn star_prints_canonical_form() {
        let (code, out, _) = call(&["star", "p", "q"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "p*q - (1/2)*i*hbar");
        let (code, out, _) = call(&["star", "--method", "bopp", "q", "p"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "p*q + (1/2)*i*hbar");
    }

    #[test]
    fn missing_operand_is_usage_error() {
        let (code, _, err) = call(&["flow", "--kind", "moyal-norm", "--gen", "(1/4)*q^4", "--param", "1", "--exact"]);
        assert_eq!(code, 1);
        assert!(err.contains("missing operand"));
        let (code, _, _) = call(&["flow", "--kind", "moyal-norm", "--gen", "(1/4)*q^4"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn parse_errors_exit_one() {
        let (code, _, err) = call(&["star", "i*hbar/2", "q"]);
        assert_eq!(code, 1);
        assert!(err.contains("column"));
        let (code, _, _) = call(&["verify", "nosuch"]);
        assert_eq!(code, 1);
        let (code, _, _) = call(&["star", "--format", "csv", "p", "q"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("verify"));
    }

    #[test]
    fn flow_param_accepts_negative_and_complex() {
        let (code, out, _) = call(&["flow", "--kind", "classical", "--gen", "(1/2)*p^2", "--param", "-2", "--exact", "q"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "q + 2*p");
        let (code, _, err) = call(&["flow", "--kind", "classical", "--gen", "p", "--param", "q", "--exact", "q"]);
        assert_eq!(code, 1);
        assert!(err.contains("constant"));
    }
}
