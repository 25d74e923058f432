//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::experiments::rwt::{rwt_search, Search};
use crate::experiments::{
    dirac_rwt_check, glue_consistency_check, growth::growth_table_on, strong11_check, Report, Row,
};
use crate::function::WeightedFunction;
use crate::generators::{
    build, derive_sequences, describe_params, describe_space, glue, point_count, structural_ball,
    GenParams, Generation,
};
use crate::maximal::{maximal, weak_ratio, Operator};
use crate::scalar::{set_working_precision, working_precision, ExtScalar};
use crate::space::{ball, Mode, Space, REPRESENTATIVE_RADII};

/// Exit status when every asserted bound holds.
pub const EXIT_PASS: i32 = 0;
/// Exit status for usage and parameter errors.
pub const EXIT_USAGE: i32 = 1;
/// Exit status when an asserted bound fails.
pub const EXIT_FAIL: i32 = 2;

/// Largest explicit space used when no mode is given.
const AUTO_EXPLICIT_POINTS: u128 = 20_000;

#[derive(Parser, Debug)]
#[command(
    name = "maxtype",
    version,
    about = "Maximal operators on generated non-doubling spaces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Describe the parameters and the generated space.
    GenInfo {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Include every stored point.
        #[arg(long)]
        points: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Compare the listed ball descriptions with distance scans.
    VerifyBalls {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, value_enum, default_value = "explicit")]
        mode: ModeArg,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Evaluate a maximal operator on one function.
    EvalMaximal {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, value_enum, default_value = "centered")]
        op: OpArg,
        #[arg(long, value_enum, default_value = "extremal")]
        function: FunctionArg,
        /// Level of the extremal function (defaults to N).
        #[arg(long)]
        level: Option<u32>,
        /// Exponent of the weak quasinorm (defaults to p0).
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Weak-type ratios of the extremal functions against the lower bound.
    GrowthTable {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, value_enum, default_value = "quotient")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "centered")]
        op: OpArg,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Strong (1,1) ratios of the centered operator.
    Strong11Check {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Largest restricted weak functional over subsets.
    RwtSearch {
        #[command(flatten)]
        space: SpaceArgs,
        /// Subset search strategy.
        #[arg(long, value_enum, default_value = "exhaustive")]
        mode: SearchArg,
        #[arg(long, value_enum, default_value = "explicit")]
        space_mode: ModeArg,
        #[arg(long, value_enum, default_value = "noncentered")]
        op: OpArg,
        /// Exponent (defaults to p0).
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Restricted weak functional of every branch-point Dirac mass.
    DiracRwt {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, value_enum, default_value = "quotient")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "noncentered")]
        op: OpArg,
        #[arg(long)]
        p: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Maximal operators on the glued union against the parts.
    GlueCheck {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, value_enum, default_value = "explicit")]
        mode: ModeArg,
        #[arg(long, default_value_t = 500)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args, Debug, Clone)]
pub struct SpaceArgs {
    #[arg(long, default_value_t = 2.0)]
    pub p0: f64,
    #[arg(long, default_value_t = 2)]
    pub nmax: u32,
    #[arg(long = "gen", value_enum, default_value = "first")]
    pub generation: GenArg,
    /// Custom first-generation table, levels separated by ';'
    /// (e.g. "1;2,2"), with F = 1 and m_n = 2^n.
    #[arg(long)]
    pub tau: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
    #[arg(long, default_value_t = 128)]
    pub precision_bits: usize,
    /// Worker threads; output does not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenArg {
    First,
    Second,
    Glued,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeArg {
    Explicit,
    Quotient,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Explicit => Mode::Explicit,
            ModeArg::Quotient => Mode::Quotient,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpArg {
    Centered,
    Noncentered,
}

impl From<OpArg> for Operator {
    fn from(o: OpArg) -> Operator {
        match o {
            OpArg::Centered => Operator::Centered,
            OpArg::Noncentered => Operator::NonCentered,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchArg {
    Exhaustive,
    Random,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FunctionArg {
    /// The weighted sum of branch-point Diracs of one level.
    Extremal,
    /// Log-uniform values on a random support.
    Random,
    Constant,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormatArg {
    Json,
    Csv,
}

fn parse_tau(s: &str) -> Result<Vec<Vec<u128>>> {
    s.split(';')
        .map(|level| {
            level
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<u128>()
                        .map_err(|_| Error::Usage(format!("bad tau entry '{t}'")))
                })
                .collect()
        })
        .collect()
}

impl SpaceArgs {
    pub fn params(&self) -> Result<GenParams> {
        match &self.tau {
            Some(t) => GenParams::simple(parse_tau(t)?),
            None => derive_sequences(self.p0, self.nmax),
        }
    }

    fn generations(&self) -> &'static [Generation] {
        match self.generation {
            GenArg::First => &[Generation::First],
            GenArg::Second => &[Generation::Second],
            GenArg::Glued => &[Generation::First, Generation::Second],
        }
    }

    fn points(&self, params: &GenParams, mode: Mode) -> u128 {
        self.generations()
            .iter()
            .map(|&g| point_count(params, g, mode))
            .sum()
    }

    /// Explicit when small enough, quotient otherwise.
    fn auto_mode(&self, params: &GenParams, mode: Option<ModeArg>) -> Mode {
        match mode {
            Some(m) => m.into(),
            None if self.points(params, Mode::Explicit) <= AUTO_EXPLICIT_POINTS => Mode::Explicit,
            None => Mode::Quotient,
        }
    }

    pub fn build(&self, params: &GenParams, mode: Mode) -> Result<Space> {
        match self.generation {
            GenArg::First => build(params, Generation::First, mode),
            GenArg::Second => build(params, Generation::Second, mode),
            GenArg::Glued => glue(
                &build(params, Generation::First, mode)?,
                &build(params, Generation::Second, mode)?,
            ),
        }
    }

    fn single_generation(&self) -> Result<Generation> {
        match self.generation {
            GenArg::First => Ok(Generation::First),
            GenArg::Second => Ok(Generation::Second),
            GenArg::Glued => Err(Error::Usage(
                "this command needs --gen first or --gen second".into(),
            )),
        }
    }

    fn gen_name(&self) -> &'static str {
        match self.generation {
            GenArg::First => "first",
            GenArg::Second => "second",
            GenArg::Glued => "glued",
        }
    }

    /// Identifies the space in golden files.
    fn key(&self, params: &GenParams) -> String {
        match &self.tau {
            Some(t) => format!("gen={} tau={}", self.gen_name(), t.replace(' ', "")),
            None => format!(
                "gen={} p0={} nmax={}",
                self.gen_name(),
                params.p0,
                params.nmax
            ),
        }
    }

    fn echo(&self, report: &mut Report, params: &GenParams) {
        let mut echo = serde_json::Map::new();
        match &self.tau {
            Some(t) => {
                echo.insert("tau".into(), t.clone().into());
            }
            None => {
                echo.insert("p0".into(), params.p0.into());
                echo.insert("nmax".into(), params.nmax.into());
            }
        }
        echo.insert("gen".into(), self.gen_name().into());
        for (k, v) in std::mem::take(&mut report.params) {
            echo.entry(k).or_insert(v);
        }
        report.params = echo;
    }
}

/// Directory holding golden values.
pub fn golden_dir() -> PathBuf {
    std::env::var_os("MAXTYPE_GOLDEN_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/golden")))
}

/// Golden value stored under `key` in `<dir>/<file>`, if any.
pub fn golden_value(file: &str, key: &str) -> Result<Option<ExtScalar>> {
    let path = golden_dir().join(file);
    if !path.exists() {
        return Ok(None);
    }
    let v: Value = serde_json::from_str(&fs::read_to_string(&path)?)?;
    let Some(entry) = v.get("values").and_then(|m| m.get(key)) else {
        return Ok(None);
    };
    let exp2 = entry
        .get("exp2")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::InvalidStructure(format!("golden entry '{key}' lacks exp2")))?;
    ExtScalar::parse_exp2(exp2)
        .map(Some)
        .ok_or_else(|| Error::InvalidStructure(format!("golden entry '{key}' is malformed")))
}

/// Compares a measured value with its golden entry and records the outcome.
fn check_golden(report: &mut Report, file: &str, key: &str, measured: &ExtScalar) -> Result<()> {
    match golden_value(file, key)? {
        Some(g) => {
            let ok = &g == measured;
            report.assert(ok);
            report.golden_ref = Some(format!("{file}: {key}"));
            report.push(
                Row::new()
                    .with("golden_key", key)
                    .with("golden", g)
                    .with("measured", measured)
                    .with("golden_match", ok),
            );
        }
        None => report.note(format!("no golden value for '{key}' in {file}")),
    }
    Ok(())
}

fn verify_balls(space: &Space) -> Result<Report> {
    let mut report = Report::new("verify-balls").param("mode", serde_json::to_value(space.mode())?);
    let mut total = 0u64;
    for &r in &REPRESENTATIVE_RADII {
        let mut bad = 0u64;
        let mut first = None;
        for c in space.ids() {
            if structural_ball(space, c, r)? != ball(space, c, r)? {
                bad += 1;
                first.get_or_insert_with(|| space.label(c).to_string());
            }
        }
        total += bad;
        report.assert(bad == 0);
        report.push(
            Row::new()
                .with("radius", ExtScalar::from_f64(r))
                .with("centers", space.len())
                .with("mismatches", bad)
                .with("first_mismatch", first.unwrap_or_else(|| "none".into()))
                .with("ok", bad == 0),
        );
    }
    if total == 0 {
        report.note("balls checked: all match");
    } else {
        report.note(format!("balls checked: {total} mismatches"));
    }
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn eval_maximal(
    space: &Space,
    params: &GenParams,
    generation: Option<Generation>,
    op: Operator,
    function: FunctionArg,
    level: Option<u32>,
    p: f64,
    seed: u64,
) -> Result<Report> {
    let f = match function {
        FunctionArg::Extremal => {
            let generation = generation
                .ok_or_else(|| Error::Usage("the extremal function needs one generation".into()))?;
            let n = level.unwrap_or(params.nmax);
            crate::experiments::extremal_function(space, params, n, generation)?
        }
        FunctionArg::Random => {
            let mut rng = crate::experiments::rng::trial_rng(seed, 0);
            crate::experiments::rng::random_function(space, &mut rng)
        }
        FunctionArg::Constant => WeightedFunction::constant(space, ExtScalar::one())?,
    };
    let g = maximal(space, &f, op)?;
    let mut report = Report::new("eval-maximal")
        .param("mode", serde_json::to_value(space.mode())?)
        .param("op", op.to_string())
        .param("p", p);
    if function == FunctionArg::Extremal {
        report = report.param("level", level.unwrap_or(params.nmax));
    }
    if function == FunctionArg::Random {
        report = report.param("seed", seed);
    }
    crate::experiments::params_json(&mut report);
    for q in space.ids() {
        report.push(
            Row::new()
                .with("point", space.label(q).to_string())
                .with("multiplicity", space.multiplicity(q).to_string())
                .with("mass", space.mass(q))
                .with("f", f.value(q))
                .with("Mf", g.value(q)),
        );
    }
    if !f.is_zero() {
        report.push(
            Row::new()
                .with("point", "weak ratio")
                .with("Mf", weak_ratio(space, &f, p, op)?),
        );
    }
    Ok(report)
}

fn gen_info(args: &SpaceArgs, params: &GenParams, space: &Space, points: bool) -> Report {
    let mut report = Report::new("gen-info");
    args.echo(&mut report, params);
    report
        .params
        .insert("parameters".into(), describe_params(params));
    report
        .params
        .insert("space".into(), describe_space(space, points));
    for p in space.ids() {
        report.push(
            Row::new()
                .with("part", space.part_of(p) as u64)
                .with("point", space.label(p).to_string())
                .with("multiplicity", space.multiplicity(p).to_string())
                .with("mass", space.mass(p)),
        );
    }
    report
}

fn execute(command: &Command) -> Result<Report> {
    match command {
        Command::GenInfo {
            space: a,
            mode,
            points,
            ..
        } => {
            let params = a.params()?;
            let s = a.build(&params, a.auto_mode(&params, *mode))?;
            Ok(gen_info(a, &params, &s, *points))
        }
        Command::VerifyBalls { space: a, mode, .. } => {
            let params = a.params()?;
            let mut r = verify_balls(&a.build(&params, (*mode).into())?)?;
            a.echo(&mut r, &params);
            Ok(r)
        }
        Command::EvalMaximal {
            space: a,
            mode,
            op,
            function,
            level,
            p,
            seed,
            ..
        } => {
            let params = a.params()?;
            let s = a.build(&params, a.auto_mode(&params, *mode))?;
            let generation = a.single_generation().ok();
            let p = p.unwrap_or(params.p0);
            let mut r = eval_maximal(
                &s,
                &params,
                generation,
                (*op).into(),
                *function,
                *level,
                p,
                *seed,
            )?;
            a.echo(&mut r, &params);
            Ok(r)
        }
        Command::GrowthTable {
            space: a, mode, op, ..
        } => {
            if a.tau.is_some() {
                return Err(Error::Usage(
                    "growth-table needs derived parameters, not --tau".into(),
                ));
            }
            let params = a.params()?;
            let generation = a.single_generation()?;
            let s = build(&params, generation, (*mode).into())?;
            growth_table_on(&s, &params, generation, (*op).into())
        }
        Command::Strong11Check {
            space: a,
            mode,
            trials,
            seed,
            ..
        } => {
            let params = a.params()?;
            let s = a.build(&params, a.auto_mode(&params, *mode))?;
            let mut r = strong11_check(&s, &params, *trials, *seed)?;
            a.echo(&mut r, &params);
            let measured = crate::experiments::strong11::max_ratio(&r).expect("rows present");
            let key = format!(
                "{} mode={} trials={trials} seed={seed} precision_bits={}",
                a.key(&params),
                serde_json::to_value(s.mode())?.as_str().unwrap_or_default(),
                working_precision()
            );
            check_golden(&mut r, "strong11.json", &key, &measured)?;
            Ok(r)
        }
        Command::RwtSearch {
            space: a,
            mode,
            space_mode,
            op,
            p,
            budget,
            seed,
            ..
        } => {
            let params = a.params()?;
            let s = a.build(&params, (*space_mode).into())?;
            let p = p.unwrap_or(params.p0);
            let search = match mode {
                SearchArg::Exhaustive => Search::Exhaustive,
                SearchArg::Random => Search::Random {
                    budget: *budget,
                    seed: *seed,
                },
            };
            let op: Operator = (*op).into();
            let (mut r, out) = rwt_search(&s, p, op, search)?;
            a.echo(&mut r, &params);
            if search == Search::Exhaustive {
                let key = format!(
                    "{} p={p} op={op} precision_bits={}",
                    a.key(&params),
                    working_precision()
                );
                check_golden(&mut r, "rwt_exhaustive.json", &key, &out.max)?;
            }
            Ok(r)
        }
        Command::DiracRwt {
            space: a,
            mode,
            op,
            p,
            ..
        } => {
            let params = a.params()?;
            let s = a.build(&params, (*mode).into())?;
            let mut r = dirac_rwt_check(&s, p.unwrap_or(params.p0), (*op).into())?;
            a.echo(&mut r, &params);
            Ok(r)
        }
        Command::GlueCheck {
            space: a,
            mode,
            trials,
            seed,
            ..
        } => {
            let params = a.params()?;
            let mode: Mode = (*mode).into();
            let x = build(&params, Generation::First, mode)?;
            let y = build(&params, Generation::Second, mode)?;
            let mut r = glue_consistency_check(&x, &y, *trials, *seed)?;
            r.params.insert("gen".into(), "glued".into());
            let mut echo = serde_json::Map::new();
            echo.insert("p0".into(), params.p0.into());
            echo.insert("nmax".into(), params.nmax.into());
            echo.extend(std::mem::take(&mut r.params));
            r.params = echo;
            Ok(r)
        }
    }
}

fn output(command: &Command) -> &OutputArgs {
    match command {
        Command::GenInfo { out, .. }
        | Command::VerifyBalls { out, .. }
        | Command::EvalMaximal { out, .. }
        | Command::GrowthTable { out, .. }
        | Command::Strong11Check { out, .. }
        | Command::RwtSearch { out, .. }
        | Command::DiracRwt { out, .. }
        | Command::GlueCheck { out, .. } => out,
    }
}

/// Runs one parsed command and renders its report.
pub fn run_command(cli: &Cli) -> Result<(Report, String)> {
    let out = output(&cli.command);
    if out.precision_bits < crate::scalar::MIN_PRECISION {
        return Err(Error::Usage(format!(
            "--precision-bits must be at least {}",
            crate::scalar::MIN_PRECISION
        )));
    }
    set_working_precision(out.precision_bits);
    let report = match out.threads {
        Some(0) => return Err(Error::Usage("--threads must be positive".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Usage(e.to_string()))?
            .install(|| execute(&cli.command))?,
        None => execute(&cli.command)?,
    };
    let text = match out.format {
        FormatArg::Json => report.to_json(),
        FormatArg::Csv => report.to_csv(),
    };
    match &out.out {
        Some(path) => fs::write(path, &text)?,
        None => print!("{text}"),
    }
    Ok((report, text))
}

/// Parses `args` (including the program name) and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            let _ = e.print();
            return code;
        }
    };
    match run_command(&cli) {
        Ok((report, _)) if report.passed() => EXIT_PASS,
        Ok(_) => EXIT_FAIL,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
