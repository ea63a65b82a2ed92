//! Command dispatch. [`run`] never exits the process; it returns the exit
//! code together with what would go to stdout and stderr.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use densitylab_core::densities::{
    density_witness_asymptotic, dyadic_values, eval_classical, eval_omega_partition, eval_sup_tad,
    richness_witness_omega, ClassicalKind, DensityEvaluator, DensityValue, Settings,
};
use densitylab_core::families::{build_tad, member_positivity, verify_tad_pair, TadFamily};
use densitylab_core::ideals::{ideal_member, recheck, IdealOracle, Partition, Verdict, Weight};
use densitylab_core::verify::{
    check_axioms, check_null_ideal, check_translation, default_corpus, gallery_block_set, gallery_gap_set, Report,
};
use densitylab_core::{Branch, Budget, Rational, SetExpr};
use num_traits::{One, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::files::{parse_assignment, parse_corpus};
use crate::json;
use crate::parse::{parse_expr, parse_scheme};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "densitylab", version, about = "Exact densities, ideals and families on subsets of the naturals")]
pub struct Cli {
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    /// Element budget for enumerating procedures.
    #[arg(long, global = true, env = "DENSITYLAB_BUDGET")]
    budget: Option<u64>,
    /// Translation range: family supremum shifts, or the suite range.
    #[arg(long, global = true)]
    shifts: Option<u64>,
    /// Pieces summed explicitly by the ω-partition density.
    #[arg(long, global = true)]
    terms: Option<u64>,
    /// Prefix length for uncertified estimates.
    #[arg(long, global = true)]
    horizon: Option<u64>,
    /// Include wall time in JSON reports.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ExprArg {
    /// Set expression, e.g. "blocks(geo(2,1), ap(2,2))".
    #[arg(required_unless_present = "file", conflicts_with = "file")]
    expr: Option<String>,
    /// Read the expression from a file.
    #[arg(long, short = 'f')]
    file: Option<String>,
}

#[derive(Debug, Args)]
struct FamilyArgs {
    /// Interval scheme of the family.
    #[arg(long, default_value = "geo(2,1)")]
    scheme: String,
    /// Comma separated branch literals, e.g. "|0,0|1".
    #[arg(long, conflicts_with_all = ["assign", "canonical"])]
    branches: Option<String>,
    /// Assignment file: one `BRANCH VALUE` per line.
    #[arg(long, conflicts_with = "canonical")]
    assign: Option<String>,
    /// The first N canonical branches.
    #[arg(long)]
    canonical: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a density on one set.
    Eval {
        /// asymptotic | lower-asymptotic | logarithmic | banach | omega | two-valued:IDEAL | sup-tad
        #[arg(long, default_value = "asymptotic")]
        density: String,
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        expr: ExprArg,
    },
    /// Decide ideal membership with a certificate.
    Ideal {
        /// fin | density-zero | summable:harmonic | summable:P/Q | piece-finite
        #[arg(long)]
        ideal: String,
        #[command(flatten)]
        expr: ExprArg,
    },
    /// Certify a translation almost disjoint family.
    Tad {
        #[command(flatten)]
        family: FamilyArgs,
        /// Enumeration limit for confirming certificate supersets.
        #[arg(long, default_value_t = 1_000_000)]
        limit: u64,
        /// Pattern intervals checked per member.
        #[arg(long, default_value_t = 10)]
        probe: usize,
    },
    /// Check density axioms, translation consistency and the null ideal.
    Axioms {
        #[arg(long, default_value = "omega")]
        density: String,
        #[command(flatten)]
        family: FamilyArgs,
        /// Corpus file, one expression per line; the built-in corpus otherwise.
        #[arg(long)]
        corpus: Option<String>,
        /// Pairs used for monotonicity and subadditivity.
        #[arg(long, default_value_t = 400)]
        pairs: usize,
        /// Also check translation consistency for |k| up to --shifts.
        #[arg(long)]
        translation: bool,
        /// Also compare the zero set with this ideal.
        #[arg(long)]
        null_ideal: Option<String>,
    },
    /// Run a concrete computation.
    Gallery {
        #[arg(value_enum)]
        which: Gallery,
        /// Largest interval index (block) or enumeration bound (gap).
        #[arg(long)]
        n: Option<u64>,
    },
    /// Build a set with a prescribed density.
    Witness {
        /// omega | asymptotic
        #[arg(long, default_value = "asymptotic")]
        density: String,
        /// Target value p/q.
        value: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Gallery {
    Block,
    Gap,
}

/// Result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Output {
    fn usage(message: impl std::fmt::Display) -> Self {
        Output {
            code: EXIT_USAGE,
            stdout: String::new(),
            stderr: format!("error: {message}\n"),
        }
    }
}

struct Ctx {
    format: Format,
    settings: Settings,
    shifts: Option<u64>,
    timing: bool,
}

pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Output {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Output {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    let mut settings = Settings::default();
    if let Some(b) = cli.budget {
        settings.budget = Budget::new(b);
    }
    if let Some(t) = cli.terms {
        settings.terms = t;
    }
    if let Some(h) = cli.horizon {
        settings.horizon = h;
    }
    if let Some(s) = cli.shifts {
        settings.shifts = s;
    }
    let ctx = Ctx {
        format: cli.format,
        settings,
        shifts: cli.shifts,
        timing: cli.timing,
    };
    match dispatch(&ctx, cli.command) {
        Ok(o) => o,
        Err(m) => Output::usage(m),
    }
}

type Usage = String;

fn read_file(path: &str) -> Result<String, Usage> {
    std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))
}

fn expr_of(a: &ExprArg) -> Result<SetExpr, Usage> {
    match (&a.expr, &a.file) {
        (Some(t), _) => parse_expr(t).map_err(|e| e.to_string()),
        (None, Some(p)) => parse_expr(&read_file(p)?).map_err(|e| format!("{p}:{e}")),
        (None, None) => Err("missing expression".into()),
    }
}

pub fn parse_ideal(s: &str) -> Result<IdealOracle, Usage> {
    let s = s.trim();
    match s {
        "fin" => return Ok(IdealOracle::Fin),
        "density-zero" | "zero" => return Ok(IdealOracle::DensityZero),
        "piece-finite" | "piece-finite:dyadic" => return Ok(IdealOracle::PieceFinite(Partition::Dyadic)),
        "summable" | "summable:harmonic" => return Ok(IdealOracle::Summable(Weight::Harmonic)),
        _ => {}
    }
    if let Some(p) = s.strip_prefix("summable:") {
        let p = json::parse_rational(p).ok_or_else(|| format!("bad exponent in '{s}'"))?;
        return Weight::power_law(p)
            .map(IdealOracle::Summable)
            .map_err(|e| e.to_string());
    }
    Err(format!("unknown ideal '{s}'"))
}

fn family_of(a: &FamilyArgs) -> Result<(TadFamily, Vec<Rational>), Usage> {
    let scheme = parse_scheme(&a.scheme).map_err(|e| format!("--scheme {e}"))?;
    let (branches, values) = if let Some(path) = &a.assign {
        let asg = parse_assignment(&read_file(path)?).map_err(|e| format!("{path}: {e}"))?;
        (asg.branches, Some(asg.values))
    } else if let Some(list) = &a.branches {
        let bs = list
            .split(',')
            .map(|t| t.trim().parse::<Branch>().map_err(|e| format!("'{t}': {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        (bs, None)
    } else {
        let n = a.canonical.unwrap_or(64);
        let mut len = 1;
        while Branch::canonical_up_to(len).len() < n {
            len += 1;
        }
        (Branch::canonical_up_to(len).into_iter().take(n).collect(), None)
    };
    let values = values.unwrap_or_else(|| dyadic_values(branches.len()));
    let fam = build_tad(scheme, branches).map_err(|e| e.to_string())?;
    Ok((fam, values))
}

fn evaluator(name: &str, family: &FamilyArgs) -> Result<DensityEvaluator, Usage> {
    let classical = match name {
        "asymptotic" | "upper" => Some(ClassicalKind::Asymptotic),
        "lower-asymptotic" | "lower" => Some(ClassicalKind::LowerAsymptotic),
        "logarithmic" | "log" => Some(ClassicalKind::Logarithmic),
        "banach" => Some(ClassicalKind::Banach),
        _ => None,
    };
    if let Some(k) = classical {
        return Ok(DensityEvaluator::ClassicalUpper(k));
    }
    if name == "omega" {
        return Ok(DensityEvaluator::OmegaPartition {
            ideal: IdealOracle::PieceFinite(Partition::Dyadic),
            pieces: Partition::Dyadic,
        });
    }
    if name == "sup-tad" {
        let (family, values) = family_of(family)?;
        return Ok(DensityEvaluator::SupTad { family, values });
    }
    if let Some(i) = name.strip_prefix("two-valued:") {
        return Ok(DensityEvaluator::TwoValued(parse_ideal(i)?));
    }
    Err(format!("unknown density '{name}'"))
}

fn decimal(r: &Rational) -> String {
    format!("{:.6}", r.to_f64().unwrap_or(f64::NAN))
}

fn value_text(v: &DensityValue) -> String {
    match v {
        DensityValue::Exact(r) => format!("{v} ({})", decimal(r)),
        DensityValue::Enclosure { lo, hi } => format!("{v} ({}, {})", decimal(lo), decimal(hi)),
        DensityValue::LowerBound(r) | DensityValue::Estimate(r) => format!("{v} ({})", decimal(r)),
    }
}

/// Estimates and the trivial enclosure `[0, 1]` count as unknown.
fn value_code(v: &DensityValue) -> i32 {
    let trivial = v.lo().is_zero() && v.hi().is_one();
    if v.is_certified() && !(trivial && v.exact().is_none()) {
        EXIT_OK
    } else {
        EXIT_UNKNOWN
    }
}

fn emit(ctx: &Ctx, code: i32, value: Value, text: String) -> Output {
    let stdout = match ctx.format {
        Format::Json => serde_json::to_string_pretty(&value).unwrap() + "\n",
        Format::Text => text,
    };
    Output {
        code,
        stdout,
        stderr: String::new(),
    }
}

pub fn report_code(r: &Report) -> i32 {
    let c = r.counts();
    if c.fail > 0 {
        EXIT_VIOLATION
    } else if c.unknown > 0 {
        EXIT_UNKNOWN
    } else {
        EXIT_OK
    }
}

fn report_text(r: &Report, elapsed_ms: u128) -> String {
    let c = r.counts();
    let mut s = String::new();
    for ch in r.checks.iter().filter(|c| c.outcome != densitylab_core::verify::Outcome::Pass) {
        let _ = writeln!(
            s,
            "{}: {} [{}] expected {}, got {}",
            ch.outcome.name(),
            ch.name,
            ch.input,
            ch.expected,
            ch.got
        );
    }
    let _ = writeln!(
        s,
        "{}: {} pass, {} fail, {} unknown ({} ms)",
        r.suite, c.pass, c.fail, c.unknown, elapsed_ms
    );
    s
}

fn emit_reports(ctx: &Ctx, reports: Vec<Report>, start: Instant) -> Output {
    let ms = start.elapsed().as_millis();
    let code = reports.iter().map(report_code).max().unwrap_or(EXIT_OK);
    let wall = ctx.timing.then_some(ms);
    let value = if reports.len() == 1 {
        json::report(&reports[0], wall)
    } else {
        Value::Array(reports.iter().map(|r| json::report(r, wall)).collect())
    };
    let text = reports.iter().map(|r| report_text(r, ms)).collect();
    emit(ctx, code, value, text)
}

fn dispatch(ctx: &Ctx, cmd: Command) -> Result<Output, Usage> {
    let start = Instant::now();
    let s = &ctx.settings;
    match cmd {
        Command::Eval { density, family, expr } => {
            let ev = evaluator(&density, &family)?;
            let e = expr_of(&expr)?;
            let (value, extra) = match &ev {
                DensityEvaluator::SupTad { family, values } => {
                    let v = eval_sup_tad(family, values, &e, s.shifts, s.members, s.budget);
                    let extra = json::sup_tad(&v)["certificate"].clone();
                    (v.value, extra)
                }
                DensityEvaluator::OmegaPartition { ideal, pieces } => {
                    let v = eval_omega_partition(ideal, *pieces, &e, s.terms, s.budget).map_err(|e| e.to_string())?;
                    (v, Value::Null)
                }
                DensityEvaluator::ClassicalUpper(k) => (eval_classical(*k, &e, s.budget, s.horizon), Value::Null),
                ev => (ev.evaluate_with(&e, s), Value::Null),
            };
            let mut j = json!({ "density": density, "expr": e.to_string(), "value": json::density(&value) });
            if !extra.is_null() {
                j["certificate"] = extra;
            }
            Ok(emit(ctx, value_code(&value), j, value_text(&value) + "\n"))
        }
        Command::Ideal { ideal, expr } => {
            let oracle = parse_ideal(&ideal)?;
            let e = expr_of(&expr)?;
            let v = ideal_member(&oracle, &e, s.budget);
            let checked = recheck(&oracle, &e, &v);
            let mut j = json::verdict(&v);
            j["ideal"] = json!(ideal);
            j["expr"] = json!(e.to_string());
            j["recheck"] = match checked {
                Ok(()) => json!("ok"),
                Err(m) => json!(m),
            };
            let code = match (&v, checked) {
                (_, Err(_)) => EXIT_VIOLATION,
                (Verdict::Unknown(_), _) => EXIT_UNKNOWN,
                _ => EXIT_OK,
            };
            let mut text = format!("{}\n", j["verdict"].as_str().unwrap());
            let detail = j.get("certificate").or_else(|| j.get("reason")).cloned().unwrap_or(Value::Null);
            text += &serde_json::to_string_pretty(&detail).unwrap();
            text += &format!("\nrecheck: {}\n", j["recheck"].as_str().unwrap());
            Ok(emit(ctx, code, j, text))
        }
        Command::Tad { family, limit, probe } => {
            let (fam, _) = family_of(&family)?;
            let k_max = ctx.shifts.unwrap_or(16) as i64;
            Ok(emit_reports(ctx, vec![tad_report(&fam, k_max, limit, probe)], start))
        }
        Command::Axioms {
            density,
            family,
            corpus,
            pairs,
            translation,
            null_ideal,
        } => {
            let ev = evaluator(&density, &family)?;
            let corpus = match corpus {
                Some(p) => parse_corpus(&read_file(&p)?).map_err(|e| format!("{p}:{e}"))?,
                None => default_corpus(),
            };
            let null = null_ideal.as_deref().map(parse_ideal).transpose()?;
            let mut reports = vec![check_axioms(&SettingsBound { ev: &ev, settings: s }, &corpus, pairs)];
            if translation {
                reports.push(check_translation(&ev, &corpus, ctx.shifts.unwrap_or(4), s));
            }
            if let Some(i) = null {
                reports.push(check_null_ideal(&ev, &i, &corpus));
            }
            Ok(emit_reports(ctx, reports, start))
        }
        Command::Gallery { which, n } => {
            let r = match which {
                Gallery::Block => gallery_block_set(n.unwrap_or(20), ctx.shifts.unwrap_or(8)),
                Gallery::Gap => gallery_gap_set(n.unwrap_or(1_000_000), ctx.shifts.unwrap_or(100)),
            };
            Ok(emit_reports(ctx, vec![r], start))
        }
        Command::Witness { density, value } => {
            let r = json::parse_rational(&value).ok_or_else(|| format!("bad value '{value}'"))?;
            let (e, got) = match density.as_str() {
                "omega" => {
                    let e = richness_witness_omega(&r).map_err(|e| e.to_string())?;
                    let v = eval_omega_partition(
                        &IdealOracle::PieceFinite(Partition::Dyadic),
                        Partition::Dyadic,
                        &e,
                        s.terms,
                        s.budget,
                    )
                    .map_err(|e| e.to_string())?;
                    (e, v)
                }
                "asymptotic" => {
                    let e = density_witness_asymptotic(&r).map_err(|e| e.to_string())?;
                    let v = eval_classical(ClassicalKind::Asymptotic, &e, s.budget, s.horizon);
                    (e, v)
                }
                _ => return Err(format!("no witness construction for '{density}'")),
            };
            let ok = got.exact() == Some(&r);
            let j = json!({
                "density": density,
                "target": json::rational(&r),
                "expr": e.to_string(),
                "value": json::density(&got),
            });
            let text = format!("{e}\n{}\n", value_text(&got));
            Ok(emit(ctx, if ok { EXIT_OK } else { EXIT_VIOLATION }, j, text))
        }
    }
}

/// Evaluates with the command line settings rather than the defaults.
struct SettingsBound<'a> {
    ev: &'a DensityEvaluator,
    settings: &'a Settings,
}

impl densitylab_core::densities::UpperDensity for SettingsBound<'_> {
    fn name(&self) -> String {
        self.ev.name()
    }

    fn evaluate(&self, e: &SetExpr) -> DensityValue {
        self.ev.evaluate_with(e, self.settings)
    }
}

/// Every unordered pair for every `0 < |k| <= k_max`, then member positivity.
pub fn tad_report(fam: &TadFamily, k_max: i64, limit: u64, probe: usize) -> Report {
    use densitylab_core::verify::{Check, Outcome};
    let mut rep = Report::new(&format!("tad/{}", fam.scheme()));
    let push = |rep: &mut Report, name: &str, input: String, expected: &str, got: String, outcome| {
        rep.checks.push(Check {
            name: name.into(),
            input,
            expected: expected.into(),
            got,
            outcome,
        })
    };
    let bs = fam.branches();
    for i in 0..fam.len() {
        for j in i + 1..fam.len() {
            for k in -k_max..=k_max {
                let input = format!("{}, {}, k = {k}", bs[i], bs[j]);
                match verify_tad_pair(fam, i, j, k, limit) {
                    Ok(c) => push(
                        &mut rep,
                        "pair",
                        input,
                        "certified",
                        format!("< {} and {} blocks", c.bound, c.blocks.len()),
                        Outcome::Pass,
                    ),
                    Err(densitylab_core::Error::InvalidValue(m)) => {
                        push(&mut rep, "pair", input, "certified", m.into(), Outcome::Fail)
                    }
                    Err(e) => push(&mut rep, "pair", input, "certified", e.to_string(), Outcome::Unknown),
                }
            }
        }
    }
    for i in 0..fam.len() {
        let v = member_positivity(fam, i, probe);
        let outcome = match &v {
            Verdict::NotIn(_) => Outcome::Pass,
            Verdict::In(_) => Outcome::Fail,
            Verdict::Unknown(_) => Outcome::Unknown,
        };
        push(
            &mut rep,
            "positive",
            bs[i].to_string(),
            "not-in",
            densitylab_core::verify::verdict_name(&v).into(),
            outcome,
        );
    }
    rep
}
