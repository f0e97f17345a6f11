//! Command-line front end: schedule generation, comparison tables,
//! verification suites, dynamic sequences and asymptotic diagnostics.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use stepcat::analysis::{self, gradient_bound, objective_bound};
use stepcat::dp::{self, TableOrigin};
use stepcat::{sequences, Execution, Family, Kind, Schedule};

pub mod file;
pub mod table;
pub mod verify;

pub use file::{Node, ScheduleFile};

/// Bad arguments or input files; exits with status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

/// Largest `l` for which `nu_l` is computed.
pub const L_MAX_BUDGET: u32 = 20;

#[derive(Debug, Parser)]
#[command(
    name = "stepcat",
    version,
    about = "Gradient-descent stepsize schedules built by concatenation"
)]
pub struct Cli {
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Primitive,
    Dominant,
    Gbounded,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Family {
        match f {
            FamilyArg::Primitive => Family::Circ,
            FamilyArg::Dominant => Family::Bullet,
            FamilyArg::Gbounded => Family::Triangle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Pp,
    Gp,
    Tv,
    Rotaru,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the length-n member of a family.
    Generate {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        n: usize,
    },
    /// Bound constants for several methods.
    Table {
        #[arg(long, value_enum, default_value_t = table::Metric::Objective)]
        metric: table::Metric,
        /// Comma-separated lengths.
        #[arg(long, value_delimiter = ',')]
        rows: Option<Vec<usize>>,
        /// Comma-separated methods; defaults depend on the metric.
        #[arg(long, value_enum, value_delimiter = ',')]
        columns: Option<Vec<table::Method>>,
        #[arg(long, default_value_t = 8192)]
        n_max: usize,
    },
    /// Run check suites, or check a saved schedule.
    Verify {
        #[arg(long, value_enum, default_value_t = verify::Suite::All)]
        suite: verify::Suite,
        #[arg(long, default_value_t = 8192)]
        n_max: usize,
        /// Check this schedule file instead of the families.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Anytime sequences and their bound at every completed prefix.
    Dynamic {
        #[arg(long, value_enum)]
        variant: Variant,
        /// The block is the primitive schedule of this length.
        #[arg(long, default_value_t = 0)]
        block_n: usize,
        #[arg(long)]
        length: usize,
    },
    /// Growth exponent, omega, nu_l and ratio extrema.
    Asymptotics {
        #[arg(long, default_value_t = 12)]
        l_max: u32,
        #[arg(long, default_value_t = 8192)]
        n_max: usize,
    },
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Cli {
    fn exec(&self) -> Execution {
        match self.threads {
            Some(1) => Execution::Sequential,
            _ => Execution::Parallel,
        }
    }

    fn emit(&self, body: &str) -> anyhow::Result<()> {
        match &self.out {
            Some(p) => fs::write(p, body).with_context(|| format!("writing {}", p.display())),
            None => {
                let mut so = std::io::stdout().lock();
                so.write_all(body.as_bytes())?;
                Ok(())
            }
        }
    }
}

/// Sets up the thread pool and dispatches.
pub fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(UsageError("--threads must be at least 1".into()).into());
        }
        #[cfg(feature = "parallel")]
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            log::warn!("thread pool already configured: {e}");
        }
        #[cfg(not(feature = "parallel"))]
        log::warn!("built without the `parallel` feature; --threads only selects sequential mode");
    }
    let exec = cli.exec();
    match &cli.command {
        Command::Generate { family, n } => cmd_generate((*family).into(), *n, cli, exec),
        Command::Table {
            metric,
            rows,
            columns,
            n_max,
        } => {
            let spec = table::TableSpec {
                metric: *metric,
                rows: rows.clone().unwrap_or_else(|| table::DEFAULT_ROWS.to_vec()),
                columns: columns
                    .clone()
                    .unwrap_or_else(|| table::TableSpec::default_columns(*metric)),
            };
            cmd_table(&spec, *n_max, cli, exec)
        }
        Command::Verify {
            suite,
            n_max,
            input,
        } => cmd_verify(*suite, *n_max, input.as_ref(), cli, exec),
        Command::Dynamic {
            variant,
            block_n,
            length,
        } => cmd_dynamic(*variant, *block_n, *length, cli),
        Command::Asymptotics { l_max, n_max } => cmd_asymptotics(*l_max, *n_max, cli, exec),
    }
}

fn require_json(cli: &Cli, what: &str) -> Result<(), UsageError> {
    match cli.format {
        Format::Json => Ok(()),
        Format::Csv => Err(UsageError(format!("{what} output is JSON only"))),
    }
}

pub fn generate(family: Family, n: usize, exec: Execution) -> anyhow::Result<Schedule> {
    let store = match family {
        Family::Circ => dp::pri_dp_with(n, exec),
        Family::Bullet => dp::dom_pp_with(n, exec),
        Family::Triangle => dp::tri_family_with(n, exec)?,
    };
    Ok(store.schedule(n)?)
}

fn cmd_generate(family: Family, n: usize, cli: &Cli, exec: Execution) -> anyhow::Result<Outcome> {
    require_json(cli, "generate")?;
    let h = generate(family, n, exec)?;
    cli.emit(&(ScheduleFile::from_schedule(&h).to_json()? + "\n"))?;
    Ok(Outcome::Pass)
}

fn cmd_table(
    spec: &table::TableSpec,
    n_max: usize,
    cli: &Cli,
    exec: Execution,
) -> anyhow::Result<Outcome> {
    let t = table::build(spec, n_max, exec)?;
    let body = match cli.format {
        Format::Json => serde_json::to_string_pretty(&t)? + "\n",
        Format::Csv => {
            let mut buf = Vec::new();
            t.write_csv(&mut buf)?;
            String::from_utf8(buf)?
        }
    };
    cli.emit(&body)?;
    Ok(Outcome::Pass)
}

fn cmd_verify(
    suite: verify::Suite,
    n_max: usize,
    input: Option<&PathBuf>,
    cli: &Cli,
    exec: Execution,
) -> anyhow::Result<Outcome> {
    let report = match input {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let f = ScheduleFile::from_json(&text)
                .map_err(|e| UsageError(format!("{}: {e}", p.display())))?;
            verify::schedule_checks(&f.to_schedule()?)
        }
        None => verify::run(suite, n_max, exec),
    };
    let body = match cli.format {
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "suite",
                "name",
                "achieved",
                "expected",
                "tolerance",
                "relation",
                "passed",
                "detail",
            ])?;
            for c in &report.checks {
                w.write_record([
                    c.suite.to_string(),
                    c.name.clone(),
                    c.achieved.to_string(),
                    c.expected.to_string(),
                    c.tolerance.to_string(),
                    format!("{:?}", c.relation).to_lowercase(),
                    c.passed.to_string(),
                    c.detail.clone().unwrap_or_default(),
                ])?;
            }
            String::from_utf8(w.into_inner()?)?
        }
    };
    for c in report.checks.iter().filter(|c| !c.passed) {
        log::error!("{} / {} failed: achieved {}", c.suite, c.name, c.achieved);
    }
    cli.emit(&body)?;
    Ok(if report.passed {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}

#[derive(Debug, Serialize)]
pub struct DynamicOutput {
    pub variant: &'static str,
    pub block_n: usize,
    pub schedule: ScheduleFile,
    /// `(n, constant)` at every certified prefix.
    pub series: Vec<(usize, f64)>,
}

pub fn dynamic(variant: Variant, block_n: usize, length: usize) -> anyhow::Result<DynamicOutput> {
    let (name, steps, kind, series) = match variant {
        Variant::Tv | Variant::Rotaru => {
            let (h, kind) = if variant == Variant::Tv {
                (sequences::teboulle_vaisbourd(length), Kind::Primitive)
            } else {
                (sequences::rotaru(length), Kind::GBounded)
            };
            let series = (1..=length)
                .map(|n| {
                    let p = Schedule::new(h.steps()[..n].to_vec(), kind)?;
                    let c = if kind == Kind::Primitive {
                        objective_bound(&p)
                    } else {
                        gradient_bound(&p)
                    };
                    c.map(|c| (n, c))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let name = if variant == Variant::Tv {
                "tv"
            } else {
                "rotaru"
            };
            (name, h.into_steps(), kind, series)
        }
        Variant::Pp | Variant::Gp => {
            let block = dp::pri_dp(block_n).schedule(block_n)?;
            let stride = block_n + 1;
            let blocks = length.div_ceil(stride);
            let e = Schedule::empty();
            let seq = if variant == Variant::Pp {
                sequences::dynamic_pp(&e, &block, blocks)?
            } else {
                sequences::dynamic_gp(&e, &block, blocks)?
            };
            let series: Vec<(usize, f64)> = seq
                .prefix_bounds()
                .into_iter()
                .filter(|(n, _)| *n >= 1 && *n <= length)
                .collect();
            let mut steps = seq.steps().to_vec();
            steps.truncate(length);
            let kind = if length % stride == 0 {
                seq.kind()
            } else {
                Kind::Unclassified
            };
            let name = if variant == Variant::Pp { "pp" } else { "gp" };
            (name, steps, kind, series)
        }
    };
    let h = Schedule::new(steps, kind)?;
    Ok(DynamicOutput {
        variant: name,
        block_n,
        schedule: ScheduleFile::from_schedule(&h),
        series,
    })
}

fn cmd_dynamic(
    variant: Variant,
    block_n: usize,
    length: usize,
    cli: &Cli,
) -> anyhow::Result<Outcome> {
    let out = dynamic(variant, block_n, length)?;
    let body = match cli.format {
        Format::Json => serde_json::to_string_pretty(&out)? + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["n", "step", "constant"])?;
            for (i, s) in out.schedule.steps.iter().enumerate() {
                let c = out
                    .series
                    .iter()
                    .find(|(n, _)| *n == i + 1)
                    .map(|(_, c)| format!("{c:.6}"));
                w.write_record([(i + 1).to_string(), s.to_string(), c.unwrap_or_default()])?;
            }
            String::from_utf8(w.into_inner()?)?
        }
    };
    cli.emit(&body)?;
    Ok(Outcome::Pass)
}

/// One `quantity,index,value,note` line of the asymptotics report.
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub quantity: String,
    pub index: Option<usize>,
    pub value: f64,
    pub note: String,
}

pub fn asymptotics_rows(l_max: u32, n_max: usize, exec: Execution) -> anyhow::Result<Vec<Row>> {
    let l = l_max.min(L_MAX_BUDGET);
    let rep = analysis::asymptotics(l, n_max, exec)?;
    let row = |q: &str, i: Option<usize>, v: f64, note: String| Row {
        quantity: q.into(),
        index: i,
        value: v,
        note,
    };
    let mut rows = vec![
        row("rho", None, rep.rho, String::new()),
        row(
            "omega",
            None,
            rep.omega,
            format!("attained at mu = {:.9}", rep.omega_argmax),
        ),
    ];
    let origin = match rep.nu_origin {
        TableOrigin::FullDp => "full dp",
        TableOrigin::ConjectureAccelerated => "midpoint split",
    };
    for (i, v) in rep.nu.iter().enumerate() {
        rows.push(row("nu", Some(i), *v, origin.into()));
    }
    for (name, s) in [("primitive", &rep.circ), ("dominant", &rep.bullet)] {
        let range = format!("n in [{}, {}]", s.n_lo, s.n_hi);
        rows.push(row(
            &format!("{name}_ratio_min"),
            Some(s.argmin),
            s.min,
            range.clone(),
        ));
        rows.push(row(
            &format!("{name}_ratio_max"),
            Some(s.argmax),
            s.max,
            range,
        ));
    }
    let gate = match rep.midpoint_gate {
        None => row("midpoint_gate", None, f64::NAN, "not needed".into()),
        Some(ok) => row(
            "midpoint_gate",
            None,
            if ok { 1.0 } else { 0.0 },
            format!("agrees with full dp for n <= {}", dp::MIDPOINT_GATE),
        ),
    };
    rows.push(gate);
    if l < l_max {
        rows.push(row(
            "partial",
            Some(l as usize),
            f64::NAN,
            format!("nu computed up to l = {l} of requested {l_max}"),
        ));
    }
    Ok(rows)
}

fn cmd_asymptotics(
    l_max: u32,
    n_max: usize,
    cli: &Cli,
    exec: Execution,
) -> anyhow::Result<Outcome> {
    let rows = asymptotics_rows(l_max, n_max, exec)?;
    let body = match cli.format {
        Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["quantity", "index", "value", "note"])?;
            for r in &rows {
                let v = if r.value.is_nan() {
                    String::new()
                } else {
                    r.value.to_string()
                };
                w.write_record([
                    r.quantity.clone(),
                    r.index.map(|i| i.to_string()).unwrap_or_default(),
                    v,
                    r.note.clone(),
                ])?;
            }
            String::from_utf8(w.into_inner()?)?
        }
    };
    cli.emit(&body)?;
    Ok(Outcome::Pass)
}
