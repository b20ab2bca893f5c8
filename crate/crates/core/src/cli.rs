//! Command-line front end: argument parsing, report assembly and exit codes.
//!
//! Every command builds a JSON report with a deterministic `report` section
//! and a separate `timings` section; `--text` renders a summary instead.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::algebra::{validate_algebra, AlgebraDocument, FiniteAlgebra};
use crate::bounds::{
    bip_exponent, build_level_chain, check_bip, check_cor, check_level_identity, check_nte, level_instances,
    r_of_k, s_of, t_of, BoundsContext, BoundsError, BoundsVerdict, NteFamily,
};
use crate::corpus::{builtin, BUILTIN_NAMES};
use crate::free::{free_algebra_with_cap, term_expression_of, FreeError, DEFAULT_ELEMENT_CAP};
use crate::identity::{
    check_quantified, parse_identity, pretty_print, verify_counterexample, CheckError, CheckOptions,
    IdentityAst, Status, Verdict,
};
use crate::maltsev::{
    condition_ii_setup, decide_condition_ii, extract_terms, verify_condition_f, verify_day_conditions,
    verify_term_chain, ChainReport, ConditionII, MaltsevError,
};
use crate::relations::{all_congruences_bounded, RelationError, SampleSpec, DEFAULT_CONGRUENCE_BOUND};

pub const CAP_ENV: &str = "MALTSEVKIT_CAP";

/// Most level-chain certificates built by `bounds`.
const MAX_CERTIFICATES: usize = 10_000;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAP: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "maltsev-kit", version, about = "Congruence identities and Maltsev conditions on finite algebras")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Print the full JSON report.
    #[arg(long, global = true, conflicts_with = "text")]
    json: bool,
    /// Print a plain-text summary (default).
    #[arg(long, global = true)]
    text: bool,
    /// Worker threads for quantified sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
struct Source {
    /// Algebra JSON file, or `builtin:NAME`.
    #[arg(long, value_name = "FILE")]
    algebra: Option<String>,
    /// Built-in algebra name.
    #[arg(long, value_name = "NAME")]
    builtin: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List all congruences and their covering order.
    Congruences {
        #[command(flatten)]
        source: Source,
    },
    /// Check a quantified congruence identity.
    Check {
        #[command(flatten)]
        source: Source,
        /// Identity text, e.g. "a & (b o c o b) <= (a & b) o[k] c; forall a, b, c: congruence; param k".
        #[arg(long)]
        identity: Option<String>,
        /// Parameter value, `NAME=INT`; repeatable.
        #[arg(long = "param", value_name = "NAME=INT", value_parser = parse_param)]
        params: Vec<(String, usize)>,
        /// Largest generating pair set for sampled tolerances.
        #[arg(long, default_value_t = 2)]
        max_pairs: usize,
        /// Re-verify the verdict embedded in a JSON report.
        #[arg(long, value_name = "FILE", conflicts_with_all = ["identity", "params"])]
        verify_report: Option<PathBuf>,
    },
    /// Least k with (x,w) in (α∧β) o[k] γ in the free algebra on x, y, z, w.
    MinK {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        k_max: Option<usize>,
        /// Also extract and print the term chain.
        #[arg(long)]
        dump_terms: bool,
    },
    /// Extract the term chain d_0..d_k and verify its equations.
    Terms {
        #[command(flatten)]
        source: Source,
        /// Pad the chain to this many links.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Size of the free algebra on four generators.
    Free {
        #[command(flatten)]
        source: Source,
        /// List every element with a term and its table.
        #[arg(long)]
        dump: bool,
    },
    /// Factor-count formulas and the identities they bound.
    Bounds {
        #[command(flatten)]
        source: Source,
        /// Print r(k) for an inclusive range, e.g. `3..8`.
        #[arg(long, value_name = "LO..HI", value_parser = parse_range)]
        r_table: Option<(u64, u64)>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        p: Option<u64>,
        #[arg(long, default_value_t = 2)]
        ell: u64,
        /// Largest generating pair set for sampled representable tolerances.
        #[arg(long, default_value_t = 2)]
        max_pairs: usize,
    },
}

fn parse_param(s: &str) -> Result<(String, usize), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=INT, got `{s}`"))?;
    let value = value.trim().parse().map_err(|e| format!("`{value}`: {e}"))?;
    Ok((name.trim().to_string(), value))
}

fn parse_range(s: &str) -> Result<(u64, u64), String> {
    let (lo, hi) = s.split_once("..").ok_or_else(|| format!("expected LO..HI, got `{s}`"))?;
    let lo: u64 = lo.trim().parse().map_err(|e| format!("`{lo}`: {e}"))?;
    let hi: u64 = hi.trim().parse().map_err(|e| format!("`{hi}`: {e}"))?;
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<FreeError> for Failure {
    fn from(e: FreeError) -> Self {
        let code = match e {
            FreeError::CapExceeded { .. } => EXIT_CAP,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: format!("{e} (set {CAP_ENV} to change the cap)"),
        }
    }
}

impl From<RelationError> for Failure {
    fn from(e: RelationError) -> Self {
        let code = match e {
            RelationError::BoundExceeded { .. } => EXIT_CAP,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<CheckError> for Failure {
    fn from(e: CheckError) -> Self {
        match e {
            CheckError::Relation(r) => r.into(),
            e => Failure::usage(e.to_string()),
        }
    }
}

impl From<MaltsevError> for Failure {
    fn from(e: MaltsevError) -> Self {
        match e {
            MaltsevError::Free(f) => f.into(),
            MaltsevError::Relation(r) => r.into(),
            e => Failure::usage(e.to_string()),
        }
    }
}

impl From<BoundsError> for Failure {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::Check(c) => c.into(),
            BoundsError::Maltsev(m) => m.into(),
            e => Failure::usage(e.to_string()),
        }
    }
}

/// Result of one command: the deterministic report, its text rendering and
/// the exit code.
struct Outcome {
    report: Value,
    text: String,
    code: i32,
}

/// Runs the tool on `args` (including the program name), writing to `out`
/// and `err`; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let started = Instant::now();
    match dispatch(&cli) {
        Ok(outcome) => {
            let printed = if cli.json {
                let doc = json!({
                    "report": outcome.report,
                    "timings": { "total_ms": started.elapsed().as_secs_f64() * 1e3, "jobs": cli.jobs },
                });
                serde_json::to_string_pretty(&doc).expect("reports serialize") + "\n"
            } else {
                outcome.text
            };
            let _ = out.write_all(printed.as_bytes());
            outcome.code
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn cap() -> Result<usize, Failure> {
    match std::env::var(CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("{CAP_ENV}: `{v}` is not a non-negative integer"))),
        Err(_) => Ok(DEFAULT_ELEMENT_CAP),
    }
}

fn load(source: &Source) -> Result<FiniteAlgebra, Failure> {
    let name = match (&source.algebra, &source.builtin) {
        (Some(path), None) => match path.strip_prefix("builtin:") {
            Some(name) => name.to_string(),
            None => return load_file(path),
        },
        (None, Some(name)) => name.clone(),
        _ => return Err(Failure::usage("an algebra is required (--algebra FILE or --builtin NAME)")),
    };
    builtin(&name)
        .ok_or_else(|| Failure::usage(format!("unknown built-in `{name}` (known: {})", BUILTIN_NAMES.join(", "))))
}

fn load_file(path: &str) -> Result<FiniteAlgebra, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{path}: {e}")))?;
    let doc: AlgebraDocument =
        serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{path}: {e}")))?;
    validate_algebra(&doc).map_err(|e| Failure::usage(format!("{path}: {e}")))
}

fn algebra_json(alg: &FiniteAlgebra) -> Value {
    json!({ "document": alg.to_document(), "fingerprint": alg.fingerprint() })
}

fn header(alg: &FiniteAlgebra) -> String {
    format!("algebra {} (size {}, fingerprint {})\n", alg.name(), alg.size(), &alg.fingerprint()[..16])
}

fn dispatch(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Congruences { source } => congruences(&load(source)?),
        Command::Check {
            source,
            identity,
            params,
            max_pairs,
            verify_report,
        } => {
            let opts = CheckOptions {
                jobs: cli.jobs,
                congruence_bound: DEFAULT_CONGRUENCE_BOUND,
                sample: SampleSpec { max_pairs: *max_pairs },
            };
            match (verify_report, identity) {
                (Some(path), _) => verify_report_file(path, cli.jobs),
                (None, Some(text)) => check(&load(source)?, text, params, &opts),
                (None, None) => Err(Failure::usage("check needs --identity TEXT or --verify-report FILE")),
            }
        }
        Command::MinK {
            source,
            k_max,
            dump_terms,
        } => min_k(&load(source)?, *k_max, *dump_terms),
        Command::Terms { source, k } => terms(&load(source)?, *k),
        Command::Free { source, dump } => free(&load(source)?, *dump),
        Command::Bounds {
            source,
            r_table,
            k,
            p,
            ell,
            max_pairs,
        } => {
            let alg = if source.algebra.is_some() || source.builtin.is_some() {
                Some(load(source)?)
            } else {
                None
            };
            let opts = CheckOptions {
                jobs: cli.jobs,
                congruence_bound: DEFAULT_CONGRUENCE_BOUND,
                sample: SampleSpec { max_pairs: *max_pairs },
            };
            bounds(alg.as_ref(), *r_table, *k, *p, *ell, &opts)
        }
    }
}

fn congruences(alg: &FiniteAlgebra) -> Result<Outcome, Failure> {
    let congs = all_congruences_bounded(alg, DEFAULT_CONGRUENCE_BOUND)?;
    let below = |i: usize, j: usize| i != j && congs[i].is_below(&congs[j]);
    let covers: Vec<[usize; 2]> = (0..congs.len())
        .flat_map(|i| (0..congs.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| below(i, j) && !(0..congs.len()).any(|m| below(i, m) && below(m, j)))
        .map(|(i, j)| [i, j])
        .collect();
    let mut text = header(alg);
    let _ = writeln!(text, "{} congruences", congs.len());
    for (i, c) in congs.iter().enumerate() {
        let _ = writeln!(text, "  {i}: {c}");
    }
    let cover_text: Vec<String> = covers.iter().map(|[i, j]| format!("{i}<{j}")).collect();
    let _ = writeln!(text, "covers: {}", cover_text.join(" "));
    Ok(Outcome {
        report: json!({
            "command": { "name": "congruences" },
            "algebra": algebra_json(alg),
            "count": congs.len(),
            "congruences": congs,
            "covers": covers,
        }),
        text,
        code: EXIT_OK,
    })
}

fn parse(text: &str) -> Result<IdentityAst, Failure> {
    parse_identity(text).map_err(|e| Failure::usage(format!("identity {e}")))
}

fn verdict_text(v: &Verdict) -> String {
    let mut text = String::new();
    match (&v.status, &v.counterexample) {
        (Status::Holds, _) => {
            let _ = writeln!(text, "holds ({} bindings)", v.bindings);
        }
        (Status::Fails, Some(cex)) => {
            let _ = writeln!(text, "fails: pair ({}, {}) is on the left but not the right", cex.pair.0, cex.pair.1);
            for b in &cex.binding {
                let _ = writeln!(text, "  {} : {} = {:?}", b.name, b.sort.keyword(), b.relation.pairs());
            }
        }
        (Status::Fails, None) => {
            let _ = writeln!(text, "fails");
        }
    }
    text
}

fn check(
    alg: &FiniteAlgebra,
    identity: &str,
    params: &[(String, usize)],
    opts: &CheckOptions,
) -> Result<Outcome, Failure> {
    let ast = parse(identity)?;
    let map: HashMap<String, usize> = params.iter().cloned().collect();
    let verdict = check_quantified(alg, &ast, &map, opts)?;
    let sorted: std::collections::BTreeMap<_, _> = map.into_iter().collect();
    let mut text = header(alg);
    let _ = writeln!(text, "{}", pretty_print(&ast));
    text += &verdict_text(&verdict);
    let code = if verdict.holds() { EXIT_OK } else { EXIT_FAILS };
    Ok(Outcome {
        report: json!({
            "command": {
                "name": "check",
                "identity": pretty_print(&ast),
                "params": sorted,
                "max_pairs": opts.sample.max_pairs,
                "congruence_bound": opts.congruence_bound,
            },
            "algebra": algebra_json(alg),
            "verdict": verdict,
        }),
        text,
        code,
    })
}

fn field<'a>(v: &'a Value, path: &[&str]) -> Result<&'a Value, Failure> {
    path.iter().try_fold(v, |v, key| {
        v.get(key)
            .ok_or_else(|| Failure::usage(format!("report has no `{}`", path.join("."))))
    })
}

fn decode<T: serde::de::DeserializeOwned>(v: &Value, path: &[&str]) -> Result<T, Failure> {
    serde_json::from_value(field(v, path)?.clone())
        .map_err(|e| Failure::usage(format!("report field `{}`: {e}", path.join("."))))
}

/// Rebuilds the algebra and identity from a `check` report and re-verifies
/// its verdict: a counterexample is checked directly, a positive verdict by
/// re-running the check.
fn verify_report_file(path: &PathBuf, jobs: usize) -> Result<Outcome, Failure> {
    let raw = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&raw).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let report = doc.get("report").unwrap_or(&doc);
    let name: String = decode(report, &["command", "name"])?;
    if name != "check" {
        return Err(Failure::usage(format!("cannot verify a `{name}` report")));
    }
    let alg_doc: AlgebraDocument = decode(report, &["algebra", "document"])?;
    let alg = validate_algebra(&alg_doc).map_err(|e| Failure::usage(format!("embedded algebra: {e}")))?;
    let fingerprint: String = decode(report, &["algebra", "fingerprint"])?;
    let identity: String = decode(report, &["command", "identity"])?;
    let ast = parse(&identity)?;
    let params: HashMap<String, usize> = decode(report, &["command", "params"])?;
    let max_pairs: usize = decode(report, &["command", "max_pairs"])?;
    let congruence_bound: usize = decode(report, &["command", "congruence_bound"])?;
    let verdict: Verdict = decode(report, &["verdict"])?;

    let fingerprint_ok = fingerprint == alg.fingerprint();
    let verdict_ok = match (&verdict.status, &verdict.counterexample) {
        (Status::Fails, Some(cex)) => verify_counterexample(&alg, &ast, &params, cex)?,
        (Status::Fails, None) => false,
        (Status::Holds, _) => {
            let opts = CheckOptions {
                jobs,
                congruence_bound,
                sample: SampleSpec { max_pairs },
            };
            check_quantified(&alg, &ast, &params, &opts)?.holds()
        }
    };
    let verified = fingerprint_ok && verdict_ok;
    let mut text = header(&alg);
    let _ = writeln!(text, "{identity}");
    let _ = writeln!(
        text,
        "{} verdict {}",
        match verdict.status {
            Status::Holds => "positive",
            Status::Fails => "negative",
        },
        if verified { "re-verified" } else { "does NOT re-verify" }
    );
    if !fingerprint_ok {
        let _ = writeln!(text, "fingerprint mismatch");
    }
    Ok(Outcome {
        report: json!({
            "command": { "name": "verify-report" },
            "algebra": algebra_json(&alg),
            "identity": identity,
            "status": verdict.status,
            "fingerprint_matches": fingerprint_ok,
            "verified": verified,
        }),
        text,
        code: if verified { EXIT_OK } else { EXIT_FAILS },
    })
}

fn chain_reports(chain: &crate::maltsev::TermChain) -> (Value, bool, String) {
    let reports: Vec<(&str, ChainReport)> = vec![
        ("equations", verify_term_chain(chain)),
        ("condition_f", verify_condition_f(chain)),
        ("day", verify_day_conditions(chain)),
    ];
    let ok = reports.iter().all(|(_, r)| r.holds());
    let mut text = String::new();
    for (_, r) in &reports[..2] {
        for e in &r.equations {
            let _ = write!(text, "  {:<40} ", e.formula);
            match &e.first_failure {
                None => {
                    let _ = writeln!(text, "holds ({} substitutions)", e.checked);
                }
                Some(f) => {
                    let _ = writeln!(text, "FAILS at i = {}, (x,y,z,w) = {:?}", f.index, f.tuple);
                }
            }
        }
    }
    let _ = writeln!(text, "  Day's conditions: {}", if reports[2].1.holds() { "hold" } else { "FAIL" });
    let value = Value::Object(
        reports
            .into_iter()
            .map(|(k, r)| (k.to_string(), serde_json::to_value(r).expect("serializes")))
            .collect(),
    );
    (value, ok, text)
}

fn min_k(alg: &FiniteAlgebra, k_max: Option<usize>, dump_terms: bool) -> Result<Outcome, Failure> {
    let setup = condition_ii_setup(alg, cap()?)?;
    let decision = decide_condition_ii(&setup, k_max)?;
    let mut text = header(alg);
    let _ = writeln!(text, "free algebra: {} elements", setup.free.len());
    let _ = match decision {
        ConditionII::NoK => writeln!(text, "no k: (x,w) is not in the join of α∧β and γ"),
        ConditionII::MinK { k } => writeln!(text, "least k = {k}"),
        ConditionII::AboveLimit { k_max } => writeln!(text, "least k exceeds {k_max}"),
    };
    let mut report = json!({
        "command": { "name": "min-k", "k_max": k_max },
        "algebra": algebra_json(alg),
        "free_size": setup.free.len(),
        "decision": decision,
    });
    if let (true, Some(k)) = (dump_terms, decision.min_k()) {
        let chain = extract_terms(&setup, k)?;
        let ids = chain.element_ids.clone().unwrap_or_default();
        let terms: Vec<String> = ids.iter().map(|&e| term_expression_of(&setup.free, e).to_string()).collect();
        for (i, t) in terms.iter().enumerate() {
            let _ = writeln!(text, "  d_{i} = {t}");
        }
        report["terms"] = json!(terms);
    }
    Ok(Outcome {
        report,
        text,
        code: EXIT_OK,
    })
}

fn terms(alg: &FiniteAlgebra, pad: Option<usize>) -> Result<Outcome, Failure> {
    let setup = condition_ii_setup(alg, cap()?)?;
    let decision = decide_condition_ii(&setup, None)?;
    let mut text = header(alg);
    let Some(k) = decision.min_k() else {
        let _ = writeln!(text, "no term chain: no k exists");
        return Ok(Outcome {
            report: json!({
                "command": { "name": "terms", "k": pad },
                "algebra": algebra_json(alg),
                "decision": decision,
                "chain": null,
            }),
            text,
            code: EXIT_OK,
        });
    };
    let chain = extract_terms(&setup, k.max(pad.unwrap_or(0)))?;
    let ids = chain.element_ids.clone().unwrap_or_default();
    let exprs: Vec<String> = ids.iter().map(|&e| term_expression_of(&setup.free, e).to_string()).collect();
    let _ = writeln!(text, "least k = {k}, chain of {} links", chain.k());
    for (i, t) in exprs.iter().enumerate() {
        let _ = writeln!(text, "  d_{i} = {t}");
    }
    let (checks, ok, check_text) = chain_reports(&chain);
    text += &check_text;
    Ok(Outcome {
        report: json!({
            "command": { "name": "terms", "k": pad },
            "algebra": algebra_json(alg),
            "decision": decision,
            "chain": chain,
            "terms": exprs,
            "checks": checks,
        }),
        text,
        code: if ok { EXIT_OK } else { EXIT_FAILS },
    })
}

fn free(alg: &FiniteAlgebra, dump: bool) -> Result<Outcome, Failure> {
    let f = free_algebra_with_cap(alg, cap()?)?;
    let mut text = header(alg);
    let _ = writeln!(text, "free algebra on x, y, z, w: {} elements", f.len());
    let mut report = json!({
        "command": { "name": "free", "dump": dump },
        "algebra": algebra_json(alg),
        "size": f.len(),
        "generators": f.generator_ids(),
    });
    if dump {
        let elements: Vec<Value> = (0..f.len())
            .map(|e| {
                json!({
                    "term": term_expression_of(&f, e).to_string(),
                    "table": f.elements()[e].values(),
                })
            })
            .collect();
        for (e, el) in elements.iter().enumerate() {
            let _ = writeln!(text, "  {e}: {}", el["term"].as_str().unwrap_or_default());
        }
        report["elements"] = Value::Array(elements);
    }
    Ok(Outcome {
        report,
        text,
        code: EXIT_OK,
    })
}

fn bounds_line(text: &mut String, label: &str, v: &BoundsVerdict) {
    let status = match &v.verdict {
        None => "hypothesis not met".to_string(),
        Some(verdict) if verdict.holds() => format!("holds ({} bindings)", verdict.bindings),
        Some(_) => "FAILS".to_string(),
    };
    let _ = writeln!(text, "  {label:<22} {status}");
    let _ = writeln!(text, "      {}  {:?}", v.identity, v.params);
}

fn bounds(
    alg: Option<&FiniteAlgebra>,
    r_table: Option<(u64, u64)>,
    k: Option<usize>,
    p: Option<u64>,
    ell: u64,
    opts: &CheckOptions,
) -> Result<Outcome, Failure> {
    if alg.is_none() && r_table.is_none() && k.is_none() && p.is_none() {
        return Err(Failure::usage("bounds needs --r-table, --k, --p or an algebra"));
    }
    let mut text = String::new();
    let mut report = json!({
        "command": { "name": "bounds", "r_table": r_table, "k": k, "p": p, "ell": ell,
                     "max_pairs": opts.sample.max_pairs },
    });
    let mut code = EXIT_OK;

    if let Some((lo, hi)) = r_table {
        let rows = (lo..=hi)
            .map(|k| Ok(json!({ "k": k, "r": r_of_k(k)? })))
            .collect::<Result<Vec<_>, BoundsError>>()?;
        let _ = writeln!(text, "   k    r(k)");
        for row in &rows {
            let _ = writeln!(text, "{:>4} {:>7}", row["k"].as_u64().unwrap_or(0), row["r"].as_u64().unwrap_or(0));
        }
        report["r_table"] = json!(rows);
    }
    let mut formulas = serde_json::Map::new();
    if let Some(k) = k {
        if k >= 3 {
            formulas.insert("r".into(), json!(r_of_k(k as u64)?));
        }
        formulas.insert("bip_exponent".into(), json!(bip_exponent(k.max(2) as u64, ell)?));
    }
    if let Some(p) = p {
        formulas.insert("s".into(), json!(s_of(p, ell)?));
        formulas.insert("t".into(), json!(t_of(p)?));
    }
    for (name, v) in &formulas {
        let _ = writeln!(text, "{name} = {v}");
    }
    report["formulas"] = Value::Object(formulas);

    if let Some(alg) = alg {
        text.insert_str(0, &header(alg));
        report["algebra"] = algebra_json(alg);
        let cap = cap()?;
        let ctx = match k {
            Some(k) => Some(BoundsContext::new(alg, k, cap, *opts)?),
            None => BoundsContext::own_k(alg, cap, *opts)?,
        };
        match ctx {
            None => {
                let _ = writeln!(text, "no k exists; consequences not checked");
                report["hypothesis"] = json!({ "grounds": "not_met" });
            }
            Some(ctx) => {
                let _ = writeln!(text, "k = {}, hypothesis {}", ctx.k, json!(ctx.hypothesis));
                let mut checks = vec![
                    ("level", check_level_identity(&ctx)?),
                    ("bip", check_bip(&ctx, ell)?),
                    ("nte", check_nte(&ctx, NteFamily::Representable(opts.sample))?),
                    ("nte_congruence", check_nte(&ctx, NteFamily::Congruences)?),
                ];
                if let Some(p) = p {
                    let exp = u32::try_from(p).ok().and_then(|p| 1usize.checked_shl(p)).unwrap_or(usize::MAX);
                    let cor_ctx = BoundsContext::new(alg, exp, cap, *opts)?;
                    checks.push(("cor", check_cor(&cor_ctx, p, ell)?));
                }
                for (label, v) in &checks {
                    bounds_line(&mut text, label, v);
                    if v.verdict.as_ref().is_some_and(|v| !v.holds()) {
                        code = EXIT_FAILS;
                    }
                }
                report["k"] = json!(ctx.k);
                report["hypothesis"] = json!(ctx.hypothesis);
                report["checks"] = Value::Object(
                    checks
                        .into_iter()
                        .map(|(l, v)| (l.to_string(), serde_json::to_value(v).expect("serializes")))
                        .collect(),
                );
                if let Some(summary) = certificates(alg, ctx.k, cap, opts)? {
                    let _ = writeln!(
                        text,
                        "  certificates           {} built, {} verified, max {} factors (r = {})",
                        summary["built"], summary["verified"], summary["max_factors"], summary["r"]
                    );
                    if summary["built"] != summary["verified"] {
                        code = EXIT_FAILS;
                    }
                    report["certificates"] = summary;
                }
            }
        }
    }
    Ok(Outcome { report, text, code })
}

/// Level-chain certificates over the algebra's congruence instances, using
/// the chain extracted from the free algebra; `None` when that is out of reach.
fn certificates(alg: &FiniteAlgebra, k: usize, cap: usize, opts: &CheckOptions) -> Result<Option<Value>, Failure> {
    let setup = match condition_ii_setup(alg, cap) {
        Ok(s) => s,
        Err(MaltsevError::Free(FreeError::CapExceeded { .. })) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let Some(k_star) = decide_condition_ii(&setup, Some(k))?.min_k() else {
        return Ok(None);
    };
    let chain = extract_terms(&setup, k_star.max(k))?;
    let congs = all_congruences_bounded(alg, opts.congruence_bound)?;
    let instances = level_instances(&congs);
    let mut built = 0;
    let mut verified = 0;
    let mut max_factors = 0;
    let mut r = r_of_k(chain.k().max(3) as u64)?;
    for inst in instances.iter().take(MAX_CERTIFICATES) {
        built += 1;
        if let Ok(cert) = build_level_chain(
            &chain,
            inst.elements,
            &congs[inst.alpha],
            &congs[inst.beta],
            &congs[inst.gamma],
        ) {
            r = cert.r as u64;
            max_factors = max_factors.max(cert.factors());
            if cert.is_verified() {
                verified += 1;
            }
        }
    }
    Ok(Some(json!({
        "instances": instances.len(),
        "built": built,
        "verified": verified,
        "max_factors": max_factors,
        "r": r,
    })))
}
