//! `qcircle <eval|verify|gram> <subject> [flags]`
//!
//! Exit codes: 0 when every gating identity passed, 1 when one failed, 2 on
//! invalid input.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qcircle::biortho::{self, BiorthoParams};
use qcircle::qcore::INF_PRODUCT_TOL;
use qcircle::suite::{run_suite, OutputFormat, SuiteConfig, SuiteName, SuiteReport};
use qcircle::{szego, CircleGrid, Complex64, GramTable, IdentityReport, QParam, DEFAULT_GRID, QUADRATURE_TOL};

#[derive(Parser, Debug)]
#[command(
    name = "qcircle",
    version,
    about = "Szegő polynomials and biorthogonal rational functions on the unit circle"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a function at a point.
    Eval {
        subject: EvalSubject,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run an identity suite.
    Verify {
        subject: VerifySubject,
        #[command(flatten)]
        flags: Flags,
    },
    /// Print a Gram matrix next to its closed form.
    Gram {
        subject: GramSubject,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum EvalSubject {
    Szego,
    R,
    S,
    Weight,
    Kappa,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum VerifySubject {
    Szego,
    Biortho,
    Sears,
    Qsl,
    All,
}

impl From<VerifySubject> for SuiteName {
    fn from(s: VerifySubject) -> Self {
        match s {
            VerifySubject::Szego => SuiteName::Szego,
            VerifySubject::Biortho => SuiteName::Biortho,
            VerifySubject::Sears => SuiteName::Sears,
            VerifySubject::Qsl => SuiteName::Qsl,
            VerifySubject::All => SuiteName::All,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum GramSubject {
    Szego,
    Biortho,
}

#[derive(ValueEnum, Clone, Copy, Debug, Default)]
enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
            Format::Text => OutputFormat::Text,
        }
    }
}

#[derive(Args, Debug)]
struct Flags {
    /// Base q, 0 < q < 1.
    #[arg(long, default_value_t = 0.5)]
    q: f64,
    /// Degree (eval) or Sears order (verify sears).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "max-n")]
    max_n: Option<usize>,
    /// Evaluation point, e.g. `1.0` or `0.3+0.1i`.
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    /// `a,alpha,b,beta` in one argument.
    #[arg(long, allow_hyphen_values = true)]
    params: Option<String>,
    /// Number of quadrature nodes.
    #[arg(long)]
    grid: Option<usize>,
    /// Overrides the default tolerances.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_complex(label: &str, s: &str) -> Result<Complex64> {
    s.trim()
        .parse::<Complex64>()
        .map_err(|_| anyhow!("--{label}: cannot parse '{s}' as a complex number (use re+imi, e.g. 0.3+0.1i)"))
}

impl Flags {
    fn qparam(&self) -> Result<QParam> {
        Ok(QParam::new(self.q)?)
    }

    fn grid(&self) -> Result<CircleGrid> {
        Ok(CircleGrid::new(self.grid.unwrap_or(DEFAULT_GRID))?)
    }

    fn z(&self) -> Result<Complex64> {
        let s = self.z.as_deref().ok_or_else(|| anyhow!("--z is required"))?;
        parse_complex("z", s)
    }

    fn n(&self) -> Result<usize> {
        self.n.ok_or_else(|| anyhow!("--n is required"))
    }

    /// Parameters from `--params` or the four separate flags; `None` when
    /// neither was given.
    fn biortho(&self) -> Result<Option<BiorthoParams>> {
        let separate = [&self.a, &self.alpha, &self.b, &self.beta];
        let values: Vec<Complex64> = match (&self.params, separate.iter().any(|v| v.is_some())) {
            (Some(_), true) => bail!("give either --params or --a/--alpha/--b/--beta, not both"),
            (None, false) => return Ok(None),
            (Some(csv), false) => {
                let parts: Vec<&str> = csv.split(',').collect();
                if parts.len() != 4 {
                    bail!("--params needs four comma-separated values a,alpha,b,beta; got {}", parts.len());
                }
                parts.iter().map(|p| parse_complex("params", p)).collect::<Result<_>>()?
            }
            (None, true) => separate
                .iter()
                .zip(["a", "alpha", "b", "beta"])
                .map(|(v, name)| {
                    let s = v
                        .as_deref()
                        .ok_or_else(|| anyhow!("--{name} is missing (all of --a --alpha --b --beta are needed)"))?;
                    parse_complex(name, s)
                })
                .collect::<Result<_>>()?,
        };
        Ok(Some(BiorthoParams::new(values[0], values[1], values[2], values[3], self.qparam()?)?))
    }

    fn require_biortho(&self) -> Result<BiorthoParams> {
        self.biortho()?.ok_or_else(|| anyhow!("parameters required: --params a,alpha,b,beta or --a --alpha --b --beta"))
    }

    fn config(&self) -> Result<SuiteConfig> {
        let config = SuiteConfig {
            q: self.q,
            max_n: self.max_n.unwrap_or(5),
            grid_size: self.grid.unwrap_or(DEFAULT_GRID),
            tolerance: self.tol,
            params: self.biortho()?,
            seed: self.seed,
            n: self.n,
            output_format: self.format.into(),
        };
        config.validate()?;
        Ok(config)
    }
}

fn pair(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn show(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{z}")
    }
}

/// Evaluated quantity: label and value(s).
struct Evaluation {
    subject: &'static str,
    inputs: Value,
    values: Vec<(&'static str, Complex64)>,
}

fn eval(subject: EvalSubject, flags: &Flags) -> Result<Evaluation> {
    let q = flags.qparam()?;
    Ok(match subject {
        EvalSubject::Szego => {
            let (n, z) = (flags.n()?, flags.z()?);
            Evaluation {
                subject: "szego",
                inputs: json!({ "n": n, "q": q.value(), "z": pair(z) }),
                values: vec![("H_n", szego::szego_poly(n, q).eval(z))],
            }
        }
        EvalSubject::R | EvalSubject::S => {
            let (n, z, p) = (flags.n()?, flags.z()?, flags.require_biortho()?);
            let (name, label, v) = match subject {
                EvalSubject::R => ("r", "r_n", p.r(n, z)?),
                _ => ("s", "s_n", p.s(n, z)?),
            };
            let mut inputs = p.to_json();
            inputs["n"] = json!(n);
            inputs["z"] = pair(z);
            Evaluation { subject: name, inputs, values: vec![(label, v)] }
        }
        EvalSubject::Weight => {
            let z = flags.z()?;
            match flags.biortho()? {
                Some(p) => {
                    let mut inputs = p.to_json();
                    inputs["z"] = pair(z);
                    Evaluation { subject: "weight", inputs, values: vec![("w", p.weight(z, INF_PRODUCT_TOL))] }
                }
                None => Evaluation {
                    subject: "weight",
                    inputs: json!({ "q": q.value(), "z": pair(z) }),
                    values: vec![("w", szego::szego_weight(z, q, INF_PRODUCT_TOL))],
                },
            }
        }
        EvalSubject::Kappa => {
            let grid = flags.grid()?;
            match flags.biortho()? {
                Some(p) => {
                    let mut inputs = p.to_json();
                    inputs["grid"] = json!(grid.len());
                    Evaluation {
                        subject: "kappa",
                        inputs,
                        values: vec![
                            ("closed", p.kappa(INF_PRODUCT_TOL)?),
                            ("quadrature", biortho::kappa_quadrature(&p, &grid)),
                        ],
                    }
                }
                None => Evaluation {
                    subject: "kappa",
                    inputs: json!({ "q": q.value(), "grid": grid.len() }),
                    values: vec![
                        ("closed", Complex64::new(szego::total_mass(q), 0.0)),
                        (
                            "quadrature",
                            qcircle::circle::contour_mean(|z| szego::szego_weight(z, q, INF_PRODUCT_TOL), &grid),
                        ),
                    ],
                },
            }
        }
    })
}

fn render_eval(e: &Evaluation, format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => {
            let values: serde_json::Map<String, Value> =
                e.values.iter().map(|(k, v)| (k.to_string(), pair(*v))).collect();
            serde_json::to_string_pretty(&json!({ "subject": e.subject, "inputs": e.inputs, "values": values }))? + "\n"
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["subject", "quantity", "re", "im"])?;
            for (k, v) in &e.values {
                w.write_record([e.subject, k, &v.re.to_string(), &v.im.to_string()])?;
            }
            String::from_utf8(w.into_inner()?)?
        }
        Format::Text => {
            if e.values.len() == 1 {
                format!("{}\n", show(e.values[0].1))
            } else {
                e.values.iter().map(|(k, v)| format!("{k}: {}\n", show(*v))).collect()
            }
        }
    })
}

fn render_suite(report: &SuiteReport, format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => reports_csv(&report.reports)?,
        Format::Text => {
            let mut out = String::new();
            for r in &report.reports {
                out.push_str(&text_line(r));
            }
            let s = &report.summary;
            out.push_str(&format!(
                "{}: {} passed, {} failed, {} informational\n",
                report.suite, s.passed, s.failed, s.informational
            ));
            out
        }
    })
}

fn text_line(r: &IdentityReport) -> String {
    let status = match (r.informational, r.passed) {
        (true, _) => "INFO",
        (false, true) => "PASS",
        (false, false) => "FAIL",
    };
    let notes = if r.notes.is_empty() { String::new() } else { format!("  ({})", r.notes) };
    format!("{status} {} residual={:.3e} tol={:.1e}{notes}\n", r.name, r.residual, r.tolerance)
}

fn reports_csv(reports: &[IdentityReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["name", "residual", "tolerance", "passed", "grid_size", "informational", "notes"])?;
    for r in reports {
        w.write_record([
            r.name.clone(),
            format!("{:e}", r.residual),
            format!("{:e}", r.tolerance),
            r.passed.to_string(),
            r.grid_size.to_string(),
            r.informational.to_string(),
            r.notes.clone(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn gram(subject: GramSubject, flags: &Flags) -> Result<(GramTable, IdentityReport, Value)> {
    let q = flags.qparam()?;
    let grid = flags.grid()?;
    let max_n = flags.max_n.unwrap_or(3);
    if grid.len() <= 2 * max_n + 2 {
        bail!("grid of {} nodes is too small for max_n = {max_n}", grid.len());
    }
    let tol = flags.tol.unwrap_or(QUADRATURE_TOL);
    Ok(match subject {
        GramSubject::Szego => {
            let (t, r) = szego::szego_gram(max_n, q, &grid, tol);
            (t, r, json!({ "subject": "szego", "q": q.value(), "max_n": max_n, "grid": grid.len() }))
        }
        GramSubject::Biortho => {
            let p = match flags.biortho()? {
                Some(p) => p,
                None => BiorthoParams::real(0.3, 0.2, 0.4, 0.1, q.value())?,
            };
            let (t, r) = biortho::biortho_gram(max_n, &p, &grid, tol)?;
            let mut cfg = p.to_json();
            cfg["subject"] = json!("biortho");
            cfg["max_n"] = json!(max_n);
            cfg["grid"] = json!(grid.len());
            (t, r, cfg)
        }
    })
}

fn render_gram(table: &GramTable, report: &IdentityReport, config: &Value, format: Format) -> Result<String> {
    let residuals = table.residuals();
    let size = table.size();
    Ok(match format {
        Format::Json => {
            let grid_of = |m: &Vec<Vec<Complex64>>| -> Vec<Vec<Value>> {
                m.iter().map(|row| row.iter().map(|&v| pair(v)).collect()).collect()
            };
            serde_json::to_string_pretty(&json!({
                "config": config,
                "entries": grid_of(&table.entries),
                "expected": grid_of(&table.expected),
                "residuals": residuals,
                "report": report,
            }))? + "\n"
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["m", "n", "re", "im", "expected_re", "expected_im", "residual"])?;
            for m in 0..size {
                for n in 0..size {
                    let (v, e) = (table.entries[m][n], table.expected[m][n]);
                    w.write_record([
                        m.to_string(),
                        n.to_string(),
                        format!("{:e}", v.re),
                        format!("{:e}", v.im),
                        format!("{:e}", e.re),
                        format!("{:e}", e.im),
                        format!("{:e}", residuals[m][n]),
                    ])?;
                }
            }
            String::from_utf8(w.into_inner()?)?
        }
        Format::Text => {
            let mut out = format!("{:>3} {:>24} {:>24} {:>10}\n", "n", "G[n][n]", "expected", "max |res|");
            for n in 0..size {
                let row_max = residuals[n].iter().cloned().fold(0.0, f64::max);
                out.push_str(&format!(
                    "{n:>3} {:>24.15e} {:>24.15e} {row_max:>10.2e}\n",
                    table.entries[n][n].re, table.expected[n][n].re
                ));
            }
            out.push_str(&text_line(report));
            out
        }
    })
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// `Ok(true)` when every gating identity passed.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Eval { subject, flags } => {
            let e = eval(subject, &flags)?;
            emit(&render_eval(&e, flags.format)?, flags.out.as_ref())?;
            Ok(true)
        }
        Command::Verify { subject, flags } => {
            let config = flags.config()?;
            let report = run_suite(subject.into(), &config)?;
            emit(&render_suite(&report, flags.format)?, flags.out.as_ref())?;
            Ok(report.all_passed())
        }
        Command::Gram { subject, flags } => {
            let (table, report, config) = gram(subject, &flags)?;
            emit(&render_gram(&table, &report, &config, flags.format)?, flags.out.as_ref())?;
            Ok(report.passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
