use std::io::{self, BufRead, IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use cdc_core::kb_io::{self, parse_fact, Severity};
use cdc_core::query::{DomainMode, QueryError, QueryOptions};
use cdc_core::workload::{run_bench, WorkloadSpec, DEFAULT_SEED};
use cdc_core::{ConceptId, DomainExpr, Execution, KnowledgeBase, LoadReport};

#[derive(Parser, Debug)]
#[command(
    name = "cdc",
    version,
    about = "Domain-contextualized concept graph engine"
)]
struct Cli {
    /// Fact file to load (repeatable).
    #[arg(long = "kb", global = true, env = "CDC_KB_PATH")]
    kb: Vec<PathBuf>,

    /// Bundled case study to load: education, enterprise, techdocs, cbt (repeatable).
    #[arg(long = "case", global = true)]
    case: Vec<String>,

    /// Reject cycle-closing facts and require `materialize` before derived queries.
    #[arg(long, global = true)]
    strict: bool,

    #[arg(long, global = true, value_enum, default_value_t = DomainModeArg::Exact)]
    domain_mode: DomainModeArg,

    /// Answer from asserted facts only.
    #[arg(long, global = true)]
    asserted_only: bool,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Seed for the benchmark generator.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DomainModeArg {
    Exact,
    Inherit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    JsonLines,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load the knowledge bases and report what was read.
    Load,
    /// Write the loaded facts in canonical form.
    Save {
        /// Output file; standard output when omitted.
        out: Option<PathBuf>,
    },
    /// Validate: cycles are errors, near-duplicate domains are warnings.
    Check,
    /// Compute and print the derived facts.
    Materialize,
    /// Run one query, e.g. `is_a_star(quadratic_function, ?S, "math@algebra")`.
    Query { text: String },
    /// Show the derivation of a fact.
    Explain { fact: String },
    /// Everything a concept transitively requires in a domain, dependencies first.
    Prereqs { concept: String, domain: String },
    /// Write an ISO-Prolog rendering of facts and closure rules.
    ExportProlog { out: Option<PathBuf> },
    /// Fact counts per domain.
    Stats,
    /// Synthetic partition-scan and materialization benchmark.
    Bench {
        facts: usize,
        domains: usize,
        /// Materialize on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Interactive session: clauses assert, `retract(clause).` retracts, `?- goal` queries.
    Repl,
}

impl Cli {
    fn query_options(&self) -> QueryOptions {
        QueryOptions {
            include_derived: !self.asserted_only,
            domain_mode: match self.domain_mode {
                DomainModeArg::Exact => DomainMode::Exact,
                DomainModeArg::Inherit => DomainMode::PrefixInherit,
            },
        }
    }
}

fn print_diagnostics(report: &LoadReport) {
    for d in &report.diagnostics {
        eprintln!("{d}");
    }
}

/// Loads every `--kb` and `--case`; I/O failures are errors, bad clauses are
/// collected in the report.
fn load(cli: &Cli) -> Result<(KnowledgeBase, LoadReport)> {
    let mut kb = KnowledgeBase::new();
    kb.strict = cli.strict;
    let mut report = LoadReport::default();
    for path in &cli.kb {
        report.merge(kb.load_file(path)?);
    }
    for name in &cli.case {
        report.merge(kb.load_case_study(name)?);
    }
    Ok((kb, report))
}

fn load_clean(cli: &Cli) -> Result<KnowledgeBase> {
    if cli.kb.is_empty() && cli.case.is_empty() {
        bail!("no knowledge base given; use --kb <path>, --case <name> or CDC_KB_PATH");
    }
    let (kb, report) = load(cli)?;
    print_diagnostics(&report);
    if report.has_errors() {
        bail!("knowledge base has {} error(s)", report.errors().count());
    }
    Ok(kb)
}

fn caret(text: &str, offset: usize) -> String {
    let column = text[..offset.min(text.len())].chars().count();
    format!("  {text}\n  {}^", " ".repeat(column))
}

fn cmd_query(cli: &Cli, text: &str) -> Result<ExitCode> {
    let kb = load_clean(cli)?;
    match kb.query(text, cli.query_options()) {
        Ok(bindings) => {
            match cli.format {
                Format::Text if bindings.is_empty() => println!("false."),
                Format::Text => print!("{bindings}"),
                Format::JsonLines => {
                    for solution in &bindings.solutions {
                        println!("{}", json!(bindings.to_map(solution)));
                    }
                }
            }
            Ok(if bindings.is_empty() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(offset) = e.offset() {
                eprintln!("{}", caret(text, offset));
            }
            Ok(ExitCode::from(2))
        }
    }
}

fn cmd_check(cli: &Cli) -> Result<ExitCode> {
    let (kb, report) = match load(cli) {
        Ok(loaded) => loaded,
        Err(e) => {
            eprintln!("error: {e:#}");
            return Ok(ExitCode::from(2));
        }
    };
    let consistency = kb.check();
    let load_errors: Vec<_> = report.errors().collect();
    let json = cli.format == Format::JsonLines;
    for d in &load_errors {
        if json {
            println!(
                "{}",
                json!({"kind": "error", "location": d.span.to_string(), "message": d.message})
            );
        } else {
            println!("{d}");
        }
    }
    for v in &consistency.errors {
        if json {
            let facts: Vec<String> = v.facts.iter().map(|f| f.to_string()).collect();
            println!(
                "{}",
                json!({"kind": "error", "relation": v.relation, "domain": v.domain.canonical(), "message": v.description(), "facts": facts})
            );
        } else {
            println!("{v}");
        }
    }
    let lints = consistency
        .warnings
        .iter()
        .cloned()
        .chain(report.duplicate_lints());
    for w in lints {
        if json {
            println!("{}", json!({"kind": "warning", "message": w.to_string()}));
        } else {
            println!("{w}");
        }
    }
    for s in &consistency.separation_witnesses {
        if json {
            println!(
                "{}",
                json!({
                    "kind": "separation",
                    "relation": s.relation,
                    "concept": s.concept.as_str(),
                    "first": [s.first.0.as_str(), s.first.1.canonical()],
                    "second": [s.second.0.as_str(), s.second.1.canonical()],
                })
            );
        } else {
            println!("{s}");
        }
    }
    let errors = load_errors.len() + consistency.errors.len();
    if !json {
        println!(
            "{} fact(s), {errors} error(s), {} warning(s), {} separation witness(es)",
            kb.store().len(),
            consistency.warnings.len() + report.duplicates.len(),
            consistency.separation_witnesses.len()
        );
    }
    Ok(if errors == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_materialize(cli: &Cli) -> Result<ExitCode> {
    let mut kb = load_clean(cli)?;
    kb.execution = Execution::default();
    let closure = kb.materialize()?;
    for (fact, provenance) in closure.iter() {
        match cli.format {
            Format::Text => println!("{fact}.  % {} depth {}", provenance.rule, provenance.depth),
            Format::JsonLines => println!(
                "{}",
                json!({"fact": fact.to_string(), "rule": provenance.rule.name(), "depth": provenance.depth})
            ),
        }
    }
    if cli.format == Format::Text {
        eprintln!("{} derived fact(s)", closure.len());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_explain(cli: &Cli, text: &str) -> Result<ExitCode> {
    let mut kb = load_clean(cli)?;
    let fact = match parse_fact(kb.store().registry(), text, true) {
        Ok(f) => f,
        Err(d) => {
            eprintln!("error: {}", d.message);
            eprintln!("{}", caret(text, d.span.column.saturating_sub(1)));
            return Ok(ExitCode::from(2));
        }
    };
    match kb.explain(&fact) {
        Ok(trace) => {
            match cli.format {
                Format::Text => print!("{}", trace.render()),
                Format::JsonLines => {
                    for leaf in trace.leaves() {
                        println!(
                            "{}",
                            json!({"fact": fact.to_string(), "depth": trace.depth(), "leaf": leaf.to_string()})
                        );
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(cdc_core::InferenceError::NotDerivable(f)) => {
            println!("{f} is neither asserted nor derivable");
            Ok(ExitCode::from(1))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_prereqs(cli: &Cli, concept: &str, domain: &str) -> Result<ExitCode> {
    let kb = load_clean(cli)?;
    let domain: DomainExpr = domain
        .parse()
        .with_context(|| format!("invalid domain \"{domain}\""))?;
    let order =
        cdc_core::inference::all_prerequisites(kb.store(), &ConceptId::new(concept), &domain)?;
    match cli.format {
        Format::Text => {
            for c in &order {
                println!("{c}");
            }
        }
        Format::JsonLines => {
            for (position, c) in order.iter().enumerate() {
                println!(
                    "{}",
                    json!({"position": position + 1, "concept": c.as_str()})
                );
            }
        }
    }
    Ok(if order.is_empty() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn write_out(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_stats(cli: &Cli) -> Result<ExitCode> {
    let kb = load_clean(cli)?;
    let stats = kb.store().stats();
    match cli.format {
        Format::Text => {
            println!("facts: {}", stats.total_facts);
            println!("domains: {}", stats.facts_per_domain.len());
            for (domain, count) in &stats.facts_per_domain {
                println!("  {count:>6}  {domain}");
            }
        }
        Format::JsonLines => {
            println!(
                "{}",
                json!({"total_facts": stats.total_facts, "domains": stats.facts_per_domain.len()})
            );
            for (domain, count) in &stats.facts_per_domain {
                println!("{}", json!({"domain": domain.canonical(), "facts": count}));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(cli: &Cli, facts: usize, domains: usize, sequential: bool) -> Result<ExitCode> {
    let execution = if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let report = run_bench(&WorkloadSpec::new(facts, domains).seed(cli.seed), execution)?;
    match cli.format {
        Format::Text => {
            println!(
                "facts: {}  domains: {}  seed: {}",
                report.facts, report.domains, report.seed
            );
            println!(
                "partition sizes: {}..{}",
                report.min_partition, report.max_partition
            );
            println!("entries scanned, full scan:       {}", report.full_scanned);
            println!(
                "entries scanned, domain-filtered: {}",
                report.filtered_scanned
            );
            println!("reduction factor: {:.2}", report.reduction());
            println!(
                "materialize ({execution:?}): {:.3} ms, {} derived facts",
                report.materialize_time.as_secs_f64() * 1e3,
                report.closure_facts
            );
        }
        Format::JsonLines => println!(
            "{}",
            json!({
                "facts": report.facts,
                "domains": report.domains,
                "seed": report.seed,
                "full_scanned": report.full_scanned,
                "filtered_scanned": report.filtered_scanned,
                "reduction": report.reduction(),
                "min_partition": report.min_partition,
                "max_partition": report.max_partition,
                "materialize_ms": report.materialize_time.as_secs_f64() * 1e3,
                "derived_facts": report.closure_facts,
            })
        ),
    }
    Ok(ExitCode::SUCCESS)
}

fn repl_line(cli: &Cli, kb: &mut KnowledgeBase, line: &str) -> Result<()> {
    if let Some(query) = line.strip_prefix("?-") {
        match kb.query(query, cli.query_options()) {
            Ok(b) if b.is_empty() => println!("false."),
            Ok(b) => print!("{b}"),
            Err(e @ QueryError::Unmaterialized) => println!("error: {e}"),
            Err(e) => {
                println!("error: {e}");
                if let Some(offset) = e.offset() {
                    println!("{}", caret(query, offset));
                }
            }
        }
        return Ok(());
    }
    match line {
        ":materialize" => {
            match kb.materialize() {
                Ok(c) => println!("{} derived fact(s)", c.len()),
                Err(e) => println!("error: {e}"),
            }
            return Ok(());
        }
        ":check" => {
            let report = kb.check();
            for v in &report.errors {
                println!("{v}");
            }
            println!("{} error(s)", report.errors.len());
            return Ok(());
        }
        ":save" => {
            print!("{}", kb.save_string());
            return Ok(());
        }
        _ => {}
    }
    if let Some(inner) = line
        .strip_prefix("retract(")
        .and_then(|rest| rest.trim_end().strip_suffix('.'))
        .and_then(|rest| rest.trim_end().strip_suffix(')'))
    {
        match parse_fact(kb.store().registry(), inner, false) {
            Ok(fact) => match kb.retract_fact(&fact)? {
                true => println!("retracted."),
                false => println!("not present."),
            },
            Err(d) => println!("error: {}", d.message),
        }
        return Ok(());
    }
    let report = kb.load_str(line, "<repl>");
    for d in &report.diagnostics {
        let level = if d.severity == Severity::Error {
            "error"
        } else {
            "warning"
        };
        println!("{level}: {}", d.message);
    }
    if !report.facts.is_empty() {
        println!("asserted {}.", report.facts.len());
    }
    Ok(())
}

fn cmd_repl(cli: &Cli) -> Result<ExitCode> {
    let (mut kb, report) = load(cli)?;
    print_diagnostics(&report);
    let interactive = io::stdin().is_terminal();
    let prompt = || {
        if interactive {
            print!("cdc> ");
            let _ = io::stdout().flush();
        }
    };
    prompt();
    for line in io::stdin().lock().lines() {
        let line = line?;
        let line = line.trim();
        if matches!(line, ":quit" | ":q" | "halt.") {
            break;
        }
        if !line.is_empty() && !line.starts_with('%') {
            repl_line(cli, &mut kb, line)?;
        }
        prompt();
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Load => {
            let (kb, report) = load(cli)?;
            print_diagnostics(&report);
            println!(
                "loaded {} fact(s) in {} domain(s); {} duplicate(s), {} error(s)",
                kb.store().len(),
                kb.store().stats().facts_per_domain.len(),
                report.duplicates.len(),
                report.errors().count()
            );
            Ok(if report.has_errors() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Save { out } => {
            let kb = load_clean(cli)?;
            write_out(out.as_ref(), &kb.save_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Check => cmd_check(cli),
        Command::Materialize => cmd_materialize(cli),
        Command::Query { text } => cmd_query(cli, text),
        Command::Explain { fact } => cmd_explain(cli, fact),
        Command::Prereqs { concept, domain } => cmd_prereqs(cli, concept, domain),
        Command::ExportProlog { out } => {
            let kb = load_clean(cli)?;
            write_out(out.as_ref(), &kb_io::export_interop(kb.store()))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Stats => cmd_stats(cli),
        Command::Bench {
            facts,
            domains,
            sequential,
        } => cmd_bench(cli, *facts, *domains, *sequential),
        Command::Repl => cmd_repl(cli),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
