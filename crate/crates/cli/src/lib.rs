//! `gasp`: run queries, abduction, guideline checks and the brute-force oracle from files.
//!
//! Exit codes: 0 when answers are found or a proposal is compliant, 1 when
//! there are none or the proposal is rejected, 2 on usage or input errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gasp_core::abduction::{Abducer, AbductionProblem};
use gasp_core::compliance::{Advisor, CheckOptions, CorClass, Recommendation, Verdict};
use gasp_core::engine::{Engine, EngineConfig};
use gasp_core::grounder::ground;
use gasp_core::hf_kb::{load_profile, KnowledgeBase, PatientProfile};
use gasp_core::oracle::{enumerate_stable_models_with_limit, DEFAULT_BASE_LIMIT};
use gasp_core::syntax::{parse_program, parse_query, render_set, Literal, Program, Sign};
use serde_json::json;

pub const EXIT_FOUND: u8 = 0;
pub const EXIT_NONE: u8 = 1;
pub const EXIT_ERROR: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "gasp", version, about = "Goal-directed answer set programming with abduction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the partial answer sets supporting a query.
    Solve(QueryArgs),
    /// Print answers and the abducibles each one assumes.
    Abduce(QueryArgs),
    /// Print every recommendation the guideline supports for a profile.
    Recommend(ProfileArgs),
    /// Check a proposed treatment against the guideline.
    Check(CheckArgs),
    /// Print all stable models by brute force.
    Oracle(OracleArgs),
}

#[derive(Args, Debug)]
pub struct Common {
    /// Stop after this many answers.
    #[arg(long)]
    pub max_answers: Option<usize>,
    /// Maximum goal-stack depth before giving up.
    #[arg(long, default_value_t = EngineConfig::default().depth_limit)]
    pub depth_limit: usize,
    /// Machine-readable output.
    #[arg(long)]
    pub json: bool,
    /// Report phase durations on the error stream.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug)]
pub struct QueryArgs {
    /// Program file.
    #[arg(short, long)]
    pub program: PathBuf,
    /// Query, e.g. "q, not r"; defaults to the program's own `?-` query.
    #[arg(short, long)]
    pub query: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ProfileArgs {
    /// Patient profile in fact syntax.
    #[arg(long)]
    pub profile: PathBuf,
    /// Guideline rules replacing the shipped knowledge base.
    #[arg(long)]
    pub kb: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[arg(long)]
    pub treatment: String,
    /// Class of recommendation: class_1, class_2a, class_2b or class_3.
    #[arg(long = "class")]
    pub cor_class: String,
    /// Keep only subset-minimal explanations.
    #[arg(long)]
    pub minimal: bool,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(short, long)]
    pub program: PathBuf,
    /// Refuse programs whose ground base exceeds this many atoms.
    #[arg(long, default_value_t = DEFAULT_BASE_LIMIT)]
    pub base_limit: usize,
    #[arg(long)]
    pub json: bool,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_FOUND };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn execute(command: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8> {
    match command {
        Command::Solve(a) => solve(a, out, err),
        Command::Abduce(a) => abduce(a, out, err),
        Command::Recommend(a) => recommend(a, out, err),
        Command::Check(a) => check(a, out, err),
        Command::Oracle(a) => oracle(a, out),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_program(path: &Path) -> Result<Program> {
    parse_program(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn query_of(program: &Program, query: Option<&str>) -> Result<Vec<Literal>> {
    match query {
        Some(q) => parse_query(q).context("in query"),
        None => match program.queries.first() {
            Some(q) => Ok(q.clone()),
            None => bail!("no query given and the program has none"),
        },
    }
}

fn ms(d: Duration) -> String {
    format!("{:.3} ms", d.as_secs_f64() * 1000.0)
}

fn strings<T: ToString>(items: impl IntoIterator<Item = T>) -> Vec<String> {
    items.into_iter().map(|x| x.to_string()).collect()
}

fn found(any: bool) -> u8 {
    if any {
        EXIT_FOUND
    } else {
        EXIT_NONE
    }
}

fn solve(a: &QueryArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8> {
    let program = load_program(&a.program)?;
    let query = query_of(&program, a.query.as_deref())?;
    let start = Instant::now();
    let engine = Engine::with_config(ground(&program)?, EngineConfig { depth_limit: a.common.depth_limit });
    let grounding = start.elapsed();

    let start = Instant::now();
    let mut seen = std::collections::HashSet::new();
    let mut answers = Vec::new();
    for answer in engine.solve(&query) {
        if a.common.max_answers.is_some_and(|m| answers.len() >= m) {
            break;
        }
        let answer = answer?;
        let chs = answer.chs.without_hidden();
        if seen.insert((chs.render(), answer.bindings.clone())) {
            answers.push((chs, answer.bindings));
        }
    }
    let solving = start.elapsed();

    if a.common.json {
        let list: Vec<_> = answers
            .iter()
            .map(|(chs, b)| {
                let bindings: serde_json::Map<String, serde_json::Value> =
                    b.iter().map(|(k, v)| (k.clone(), json!(v.to_string()))).collect();
                json!({ "chs": strings(chs.literals()), "bindings": bindings })
            })
            .collect();
        writeln!(out, "{}", serde_json::to_string_pretty(&json!({ "query": strings(&query), "answers": list }))?)?;
    } else if answers.is_empty() {
        writeln!(out, "false")?;
    } else {
        for (chs, bindings) in &answers {
            if !bindings.is_empty() {
                let parts: Vec<String> = bindings.iter().map(|(k, v)| format!("{k} = {v}")).collect();
                writeln!(out, "{}", parts.join(", "))?;
            }
            writeln!(out, "{}", chs.render())?;
        }
    }
    if a.common.timing {
        writeln!(err, "grounding: {}\nsolving: {}", ms(grounding), ms(solving))?;
    }
    Ok(found(!answers.is_empty()))
}

fn abduce(a: &QueryArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8> {
    let program = load_program(&a.program)?;
    let query = query_of(&program, a.query.as_deref())?;
    let start = Instant::now();
    let problem = AbductionProblem::from_program(program, query.clone())?;
    let abducer = Abducer::with_config(problem, EngineConfig { depth_limit: a.common.depth_limit })?;
    let grounding = start.elapsed();

    let start = Instant::now();
    let answers = abducer.abduce_all(a.common.max_answers)?;
    let abduction = start.elapsed();

    if a.common.json {
        let list: Vec<_> = answers
            .iter()
            .map(|ans| json!({ "chs": strings(ans.chs.literals()), "abducibles": ans.explanation }))
            .collect();
        writeln!(out, "{}", serde_json::to_string_pretty(&json!({ "query": strings(&query), "answers": list }))?)?;
    } else if answers.is_empty() {
        writeln!(out, "false")?;
    } else {
        for (i, ans) in answers.iter().enumerate() {
            if i > 0 {
                writeln!(out)?;
            }
            writeln!(out, "{}\n\nAbducibles: {}", ans.render(), ans.explanation.render())?;
        }
    }
    if a.common.timing {
        writeln!(err, "grounding: {}\nabduction: {}", ms(grounding), ms(abduction))?;
    }
    Ok(found(!answers.is_empty()))
}

fn advisor(a: &ProfileArgs) -> Result<Advisor> {
    let profile: PatientProfile =
        load_profile(&read(&a.profile)?).with_context(|| format!("in profile {}", a.profile.display()))?;
    let config = EngineConfig { depth_limit: a.common.depth_limit };
    let advisor = match &a.kb {
        Some(path) => {
            let kb = KnowledgeBase::from_source(&read(path)?).with_context(|| format!("in {}", path.display()))?;
            Advisor::with_kb(&kb, profile, config)?
        }
        None => Advisor::with_config(profile, config)?,
    };
    Ok(advisor)
}

fn recommend(a: &ProfileArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8> {
    let start = Instant::now();
    let advisor = advisor(a)?;
    let grounding = start.elapsed();
    let start = Instant::now();
    let mut recs = advisor.recommendations()?;
    let enumeration = start.elapsed();
    if let Some(m) = a.common.max_answers {
        recs.truncate(m);
    }

    if a.common.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&json!({ "recommendations": recs }))?)?;
    } else if recs.is_empty() {
        writeln!(out, "none")?;
    } else {
        for r in &recs {
            writeln!(out, "{r}")?;
        }
    }
    if a.common.timing {
        writeln!(err, "grounding: {}\nenumeration: {}", ms(grounding), ms(enumeration))?;
    }
    Ok(found(!recs.is_empty()))
}

fn check(a: &CheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8> {
    let advisor = advisor(&a.profile)?;
    let proposed = Recommendation { treatment: a.treatment.clone(), cor_class: a.cor_class.parse::<CorClass>()? };
    let mut opts = CheckOptions { minimal_only: a.minimal, ..CheckOptions::default() };
    if let Some(m) = a.profile.common.max_answers {
        opts.max_explanations = m;
    }
    let report = advisor.check(&proposed, &opts)?;

    if a.profile.common.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    } else {
        writeln!(out, "Proposed: {}", report.proposed)?;
        let verdict = match report.verdict {
            Verdict::Compliant => "Compliant",
            Verdict::RepairableWithEvidence => "Repairable with evidence",
            Verdict::Rejected => "Rejected",
        };
        writeln!(out, "Verdict: {verdict}")?;
        for ans in &report.answers {
            writeln!(out, "\n{}\n\nAbducibles: {}", ans.render(), ans.explanation.render())?;
        }
        if report.compliant_set.is_empty() {
            writeln!(out, "\nCompliant recommendations: none")?;
        } else {
            writeln!(out, "\nCompliant recommendations:")?;
            for r in &report.compliant_set {
                writeln!(out, "  {r}")?;
            }
        }
    }
    if a.profile.common.timing {
        let t = &report.timings_ms;
        writeln!(
            err,
            "grounding: {:.3} ms\nenumeration: {:.3} ms\nabduction: {:.3} ms",
            t.grounding, t.enumeration, t.abduction
        )?;
    }
    Ok(match report.verdict {
        Verdict::Compliant | Verdict::RepairableWithEvidence => EXIT_FOUND,
        Verdict::Rejected => EXIT_NONE,
    })
}

fn oracle(a: &OracleArgs, out: &mut dyn Write) -> Result<u8> {
    let program = load_program(&a.program)?;
    let models = enumerate_stable_models_with_limit(&ground(&program)?, a.base_limit)?;
    if a.json {
        let list: Vec<Vec<String>> = models.models.iter().map(strings).collect();
        writeln!(out, "{}", serde_json::to_string_pretty(&json!({ "models": list }))?)?;
    } else if models.is_empty() {
        writeln!(out, "false")?;
    } else {
        for m in &models.models {
            writeln!(out, "{}", render_set(m.iter().map(|a| (a, Sign::Positive))))?;
        }
    }
    Ok(found(!models.is_empty()))
}
