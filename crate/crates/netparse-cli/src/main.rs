use std::fs;
use std::io::Read as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use netparse::analysis::{detect_left_recursion, AnalysisTables};
use netparse::dot::{net_to_dot, pcfg_to_dot, pilot_to_dot};
use netparse::earley::earley_parse;
use netparse::ell::{
    build_pcfg, check_ell1, describe_predictive, emit_recursive_descent, parse_pointerless, parse_predictive,
    Ell1Report, Pcfg,
};
use netparse::elr::{parse_elr_cid, parse_elr_vector, ParseOptions};
use netparse::grammar::{load_net, right_linearize, BuildOptions, RightLinearizedGrammar};
use netparse::lr1::{build_lr1_pilot, check_lr1, BnfGrammar};
use netparse::net::{MachineNet, TermId};
use netparse::outcome::{describe_trace, ParseOutcome};
use netparse::pilot::{build_pilot, check_elr1, check_stp, compact_pilot, ConflictReport, Pilot};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "netparse", version, about = "Analyze EBNF grammars as machine nets and parse with them")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Minimize every machine before normalization.
    #[arg(long, global = true)]
    minimize: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Algo {
    Elr,
    ElrVector,
    Pointerless,
    Predictive,
    Earley,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum What {
    Net,
    Pilot,
    Compact,
    Pcfg,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the ELR(1) and/or ELL(1) condition (ELR(1) when neither flag is given).
    Check {
        grammar: PathBuf,
        #[arg(long)]
        elr1: bool,
        #[arg(long)]
        ell1: bool,
    },
    /// Print the net, its analyses, the pilot and the parser control-flow graph.
    Analyze { grammar: PathBuf },
    /// Export a graph in DOT.
    Graph {
        grammar: PathBuf,
        #[arg(long, value_enum, default_value_t = What::Net)]
        what: What,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse an input string.
    Parse {
        grammar: PathBuf,
        /// Whitespace-separated tokens; read from --input-file or stdin when absent.
        input: Option<String>,
        #[arg(long)]
        input_file: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Algo::Elr)]
        algo: Algo,
        /// Print the parser configurations.
        #[arg(long)]
        trace: bool,
        /// Treat every non-blank character as a token.
        #[arg(long)]
        chars: bool,
    },
    /// Emit recursive-descent pseudo-code for an ELL(1) net.
    EmitRd { grammar: PathBuf },
    /// Run the canonical LR(1) construction on the right-linearized grammar.
    Oracle {
        grammar: PathBuf,
        /// Also run the ELR(1) check and compare the verdicts.
        #[arg(long)]
        compare: bool,
    },
}

/// A failed run: exit code and message for stderr.
struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

/// Printed output plus the success flag deciding between exit 0 and 1.
struct Report {
    text: String,
    ok: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(r) => {
            print!("{}", r.text);
            if !r.text.is_empty() && !r.text.ends_with('\n') {
                println!();
            }
            ExitCode::from(if r.ok { 0 } else { 1 })
        }
        Err(f) => {
            eprintln!("netparse: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(path: &Path, minimize: bool) -> Result<MachineNet, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    load_net(&text, BuildOptions { minimize }).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Analyses shared by several commands.
struct Session {
    net: MachineNet,
    tables: AnalysisTables,
    pilot: Pilot,
}

impl Session {
    fn new(path: &Path, minimize: bool) -> Result<Self, Failure> {
        let net = load(path, minimize)?;
        let tables = AnalysisTables::compute(&net);
        let pilot = build_pilot(&net, &tables);
        Ok(Session { net, tables, pilot })
    }

    fn pcfg(&self) -> Pcfg {
        build_pcfg(&self.net, &self.tables)
    }

    fn ell1(&self, pcfg: &Pcfg) -> Result<Ell1Report, Failure> {
        check_ell1(&self.net, &self.tables, &self.pilot, pcfg).map_err(|e| Failure {
            code: 1,
            message: e.to_string(),
        })
    }
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    match &cli.command {
        Command::Check { grammar, elr1, ell1 } => {
            let s = Session::new(grammar, cli.minimize)?;
            let want_elr = *elr1 || !*ell1;
            check(&s, want_elr, *ell1, cli.format)
        }
        Command::Analyze { grammar } => {
            let s = Session::new(grammar, cli.minimize)?;
            analyze(&s, cli.format)
        }
        Command::Graph { grammar, what, out } => {
            let s = Session::new(grammar, cli.minimize)?;
            let dot = graph(&s, *what)?;
            match out {
                Some(p) => {
                    fs::write(p, dot).map_err(|e| usage(format!("cannot write {}: {e}", p.display())))?;
                    Ok(Report {
                        text: String::new(),
                        ok: true,
                    })
                }
                None => Ok(Report { text: dot, ok: true }),
            }
        }
        Command::Parse {
            grammar,
            input,
            input_file,
            algo,
            trace,
            chars,
        } => {
            let s = Session::new(grammar, cli.minimize)?;
            let text = read_input(input.as_deref(), input_file.as_deref())?;
            let tokens = if *chars {
                s.net.tokenize_chars(&text)
            } else {
                s.net.tokenize(&text)
            }
            .map_err(|e| usage(e.to_string()))?;
            parse(&s, &tokens, *algo, *trace, cli.format)
        }
        Command::EmitRd { grammar } => {
            let s = Session::new(grammar, cli.minimize)?;
            let pcfg = s.pcfg();
            let report = s.ell1(&pcfg)?;
            match emit_recursive_descent(&s.net, &pcfg, &report) {
                Ok(code) => Ok(Report { text: code, ok: true }),
                Err(e) => Ok(Report {
                    text: format!("{e}\n{}", lines(&report.describe(&s.net))),
                    ok: false,
                }),
            }
        }
        Command::Oracle { grammar, compare } => {
            let s = Session::new(grammar, cli.minimize)?;
            oracle(&s, *compare, cli.format)
        }
    }
}

fn read_input(arg: Option<&str>, file: Option<&Path>) -> Result<String, Failure> {
    match (arg, file) {
        (Some(_), Some(_)) => Err(usage("give the input either as an argument or with --input-file")),
        (Some(s), None) => Ok(s.to_string()),
        (None, Some(p)) => fs::read_to_string(p).map_err(|e| usage(format!("cannot read {}: {e}", p.display()))),
        (None, None) => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| usage(format!("cannot read stdin: {e}")))?;
            Ok(s)
        }
    }
}

fn lines(items: &[String]) -> String {
    items.iter().map(|l| format!("  {l}\n")).collect()
}

fn json_text(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn conflicts_json(net: &MachineNet, r: &ConflictReport) -> Value {
    json!({
        "shift_reduce": r.shift_reduce.iter().map(|c| json!({
            "mstate": c.mstate,
            "candidate": net.state_name(c.candidate),
            "terminal": net.term_name(c.terminal),
        })).collect::<Vec<_>>(),
        "reduce_reduce": r.reduce_reduce.iter().map(|c| json!({
            "mstate": c.mstate,
            "first": net.state_name(c.first),
            "second": net.state_name(c.second),
            "overlap": names(net, c.overlap.iter().copied()),
        })).collect::<Vec<_>>(),
        "convergence": r.convergence.iter().map(|c| json!({
            "mstate": c.mstate,
            "symbol": net.sym_name(c.symbol),
            "target": net.state_name(c.target),
            "overlap": names(net, c.overlap.iter().copied()),
        })).collect::<Vec<_>>(),
        "messages": r.describe(net),
    })
}

fn names(net: &MachineNet, ts: impl Iterator<Item = TermId>) -> Vec<String> {
    ts.map(|t| net.term_name(t).to_string()).collect()
}

fn check(s: &Session, elr: bool, ell: bool, format: Format) -> Result<Report, Failure> {
    let net = &s.net;
    let mut ok = true;
    let mut text = String::new();
    let mut out = json!({ "schema": SCHEMA_VERSION });
    if elr {
        let report = check_elr1(net, &s.pilot);
        ok &= report.is_clean();
        if report.is_clean() {
            text.push_str(&format!("ELR(1): OK, pilot m-states: {}\n", s.pilot.len()));
        } else {
            text.push_str(&format!("ELR(1): FAILED, pilot m-states: {}\n", s.pilot.len()));
            text.push_str(&lines(&report.describe(net)));
        }
        out["elr1"] = json!({
            "ok": report.is_clean(),
            "mstates": s.pilot.len(),
            "convergent_edges": s.pilot.convergent_edges().len(),
            "conflicts": conflicts_json(net, &report),
        });
    }
    if ell {
        let pcfg = s.pcfg();
        let report = s.ell1(&pcfg)?;
        ok &= report.is_clean();
        if report.is_clean() {
            text.push_str("ELL(1): OK\n");
        } else {
            text.push_str("ELL(1): FAILED\n");
        }
        text.push_str(&lines(&report.describe(net)));
        out["ell1"] = json!({
            "ok": report.is_clean(),
            "left_recursion": report.left_recursion.as_ref().map(|c| c.iter().map(|&q| net.state_name(q)).collect::<Vec<_>>()),
            "stp_violation": report.stp_violation.as_ref().map(|v| json!({
                "mstate": v.mstate,
                "symbol": net.sym_name(v.symbol),
                "first": net.state_name(v.first),
                "second": net.state_name(v.second),
            })),
            "elr1_conflicts": conflicts_json(net, &report.elr1_conflicts),
            "guide_overlaps": report.guide_overlaps.iter().map(|g| json!({
                "state": net.state_name(g.state),
                "first": g.first.describe(net),
                "second": g.second.describe(net),
                "overlap": names(net, g.overlap.iter().copied()),
            })).collect::<Vec<_>>(),
            "warnings": report.warnings,
        });
    }
    Ok(match format {
        Format::Json => Report { text: json_text(out), ok },
        _ => Report { text, ok },
    })
}

fn analyze(s: &Session, format: Format) -> Result<Report, Failure> {
    let net = &s.net;
    let rl = right_linearize(net);
    let pcfg = s.pcfg();
    let left_rec = detect_left_recursion(net, &s.tables);
    let compact = if check_stp(net, &s.pilot).is_none() {
        compact_pilot(net, &s.pilot).ok()
    } else {
        None
    };
    if format == Format::Json {
        let states = net.states();
        let out = json!({
            "schema": SCHEMA_VERSION,
            "axiom": net.nt_name(net.axiom),
            "terminals": net.terminals,
            "nonterminals": net.nonterminals,
            "states": states.iter().map(|&q| json!({
                "name": net.state_name(q),
                "initial": net.is_initial(q),
                "final": net.is_final(q),
                "nullable": s.tables.nullable(q),
                "ini": names(net, s.tables.ini(q).iter().copied()),
                "edges": net.edges(q).map(|(x, r)| json!([net.sym_name(x), net.state_name(r)])).collect::<Vec<_>>(),
                "prospect": net.is_final(q).then(|| names(net, pcfg.prospect(q).iter().copied())),
            })).collect::<Vec<_>>(),
            "right_linearized": rl.rules.iter().map(|r| RightLinearizedGrammar::rule_string(net, r)).collect::<Vec<_>>(),
            "left_recursion": left_rec.as_ref().map(|c| c.iter().map(|&q| net.state_name(q)).collect::<Vec<_>>()),
            "pilot": pilot_json(net, &s.pilot),
            "compact_pilot": compact.as_ref().map(|c| pilot_json(net, c)),
            "guides": pcfg.calls.iter().map(|c| json!({
                "from": net.state_name(c.from),
                "to": net.state_name(c.to),
                "guide": names(net, c.guide.iter().copied()),
            })).collect::<Vec<_>>(),
            "fixpoint_iterations": pcfg.iterations(),
        });
        return Ok(Report {
            text: json_text(out),
            ok: true,
        });
    }
    let mut text = String::new();
    text.push_str("Machine net\n");
    text.push_str(&net.describe());
    text.push_str("\nNullable states and initials\n");
    for q in net.states() {
        text.push_str(&format!(
            "  {:<8} nullable={:<5} Ini={{{}}}\n",
            net.state_name(q),
            s.tables.nullable(q),
            net.la_string(s.tables.ini(q))
        ));
    }
    text.push_str("\nRight-linearized grammar\n");
    text.push_str(&rl.display(net));
    text.push_str("\nLeft recursion: ");
    match &left_rec {
        Some(c) => text.push_str(&c.iter().map(|&q| net.state_name(q)).collect::<Vec<_>>().join(" -> ")),
        None => text.push_str("none"),
    }
    text.push_str(&format!("\n\nPilot ({} m-states)\n", s.pilot.len()));
    text.push_str(&describe_pilot(net, &s.pilot));
    if let Some(c) = &compact {
        text.push_str(&format!("\nCompact pilot ({} m-states)\n", c.len()));
        text.push_str(&describe_pilot(net, c));
    }
    text.push_str(&format!(
        "\nProspect and guide sets (fixpoint rows: {})\n",
        pcfg.iterations()
    ));
    for q in net.states() {
        if net.is_final(q) {
            text.push_str(&format!(
                "  prospect {} = {{{}}}\n",
                net.state_name(q),
                net.la_string(pcfg.prospect(q))
            ));
        }
    }
    for c in &pcfg.calls {
        text.push_str(&format!(
            "  guide {} -> {} = {{{}}}\n",
            net.state_name(c.from),
            net.state_name(c.to),
            net.la_string(&c.guide)
        ));
    }
    Ok(Report { text, ok: true })
}

fn describe_pilot(net: &MachineNet, p: &Pilot) -> String {
    let convergent = p.convergent_edges();
    let mut out = String::new();
    for (i, m) in p.mstates.iter().enumerate() {
        out.push_str(&format!("  I{i}"));
        if p.merged_from[i].len() > 1 {
            let from: Vec<String> = p.merged_from[i].iter().map(|j| format!("I{j}")).collect();
            out.push_str(&format!(" (from {})", from.join(", ")));
        }
        out.push_str(&format!(": {}\n", m.describe(net)));
        for (x, j) in p.transitions(i) {
            let mark = if convergent.contains(&(i, x)) { " (convergent)" } else { "" };
            out.push_str(&format!("    {} -> I{j}{mark}\n", net.sym_name(x)));
        }
    }
    out
}

fn pilot_json(net: &MachineNet, p: &Pilot) -> Value {
    let convergent = p.convergent_edges();
    json!(p
        .mstates
        .iter()
        .enumerate()
        .map(|(i, m)| json!({
            "id": i,
            "merged_from": p.merged_from[i],
            "candidates": m.cands.iter().map(|(q, la)| json!({
                "state": net.state_name(*q),
                "lookahead": names(net, la.iter().copied()),
            })).collect::<Vec<_>>(),
            "transitions": p.transitions(i).map(|(x, j)| json!({
                "symbol": net.sym_name(x),
                "target": j,
                "convergent": convergent.contains(&(i, x)),
            })).collect::<Vec<_>>(),
        }))
        .collect::<Vec<_>>())
}

fn graph(s: &Session, what: What) -> Result<String, Failure> {
    let net = &s.net;
    Ok(match what {
        What::Net => net_to_dot(net),
        What::Pilot => pilot_to_dot(net, &s.pilot, "pilot"),
        What::Compact => {
            let c = compact_pilot(net, &s.pilot).map_err(|e| Failure {
                code: 1,
                message: e.to_string(),
            })?;
            pilot_to_dot(net, &c, "compact")
        }
        What::Pcfg => pcfg_to_dot(net, &s.pcfg()),
    })
}

fn outcome_json(net: &MachineNet, o: &ParseOutcome) -> Value {
    json!({
        "accepted": o.accepted,
        "tree": o.tree.as_ref().map(|t| t.render(net)),
        "reductions": o.reductions.iter().map(|r| r.render(net, " ")).collect::<Vec<_>>(),
        "error": o.error.as_ref().map(|e| json!({
            "position": e.position,
            "found": net.term_name(e.found),
            "expected": names(net, e.expected.iter().copied()),
        })),
    })
}

fn outcome_text(net: &MachineNet, o: &ParseOutcome) -> String {
    let mut text = String::new();
    for r in &o.reductions {
        text.push_str(&format!("reduce {}\n", r.render(net, " ")));
    }
    if let Some(t) = &o.tree {
        text.push_str(&format!("tree: {}\n", t.render(net)));
    }
    if let Some(e) = &o.error {
        text.push_str(&format!("{}\n", e.describe(net)));
    }
    text.push_str(if o.accepted { "accepted\n" } else { "rejected\n" });
    text
}

fn engine_failure(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 1,
        message: e.to_string(),
    }
}

fn parse(s: &Session, tokens: &[TermId], algo: Algo, trace: bool, format: Format) -> Result<Report, Failure> {
    let net = &s.net;
    let opts = ParseOptions { trace };
    let mut extra = json!({});
    let (outcome, trace_text) = match algo {
        Algo::Elr | Algo::ElrVector | Algo::Pointerless => {
            let conflicts = check_elr1(net, &s.pilot);
            if !conflicts.is_clean() {
                return Err(engine_failure(format!(
                    "the net is not ELR(1):\n{}",
                    lines(&conflicts.describe(net))
                )));
            }
            let o = match algo {
                Algo::Elr => parse_elr_cid(net, &s.pilot, tokens, opts),
                Algo::ElrVector => parse_elr_vector(net, &s.pilot, tokens, opts),
                _ => {
                    let compact = compact_pilot(net, &s.pilot).map_err(engine_failure)?;
                    parse_pointerless(net, &compact, tokens, opts)
                }
            }
            .map_err(engine_failure)?;
            let t = describe_trace(net, tokens, &o.trace);
            (o, t)
        }
        Algo::Predictive => {
            let pcfg = s.pcfg();
            let report = s.ell1(&pcfg)?;
            if !report.is_clean() {
                return Err(engine_failure(format!(
                    "the net is not ELL(1):\n{}",
                    lines(&report.describe(net))
                )));
            }
            let p = parse_predictive(net, &pcfg, tokens).map_err(engine_failure)?;
            let t = describe_predictive(net, tokens, &p.steps, net.initial(net.axiom));
            extra = json!({
                "derivation": p.derivation.iter().map(|r| RightLinearizedGrammar::rule_string(net, r)).collect::<Vec<_>>(),
            });
            (p.outcome, t)
        }
        Algo::Earley => {
            let (accepted, tree, e) = earley_parse(net, tokens).map_err(engine_failure)?;
            let outcome = ParseOutcome {
                accepted,
                tree,
                ..ParseOutcome::default()
            };
            (outcome, e.describe(net))
        }
    };
    if format == Format::Json {
        let mut out = outcome_json(net, &outcome);
        out["schema"] = json!(SCHEMA_VERSION);
        if let Value::Object(m) = extra {
            for (k, v) in m {
                out[k] = v;
            }
        }
        if trace {
            out["trace"] = json!(trace_text.lines().collect::<Vec<_>>());
        }
        return Ok(Report {
            text: json_text(out),
            ok: outcome.accepted,
        });
    }
    let mut text = String::new();
    if trace {
        text.push_str(&trace_text);
    }
    if let Some(d) = extra.get("derivation").and_then(Value::as_array) {
        for r in d {
            text.push_str(&format!("rule {}\n", r.as_str().unwrap_or_default()));
        }
    }
    text.push_str(&outcome_text(net, &outcome));
    Ok(Report {
        text,
        ok: outcome.accepted,
    })
}

fn oracle(s: &Session, compare: bool, format: Format) -> Result<Report, Failure> {
    let net = &s.net;
    let rl = right_linearize(net);
    let g = BnfGrammar::from_right_linearized(net, &rl);
    let automaton = build_lr1_pilot(&g);
    let lr = check_lr1(&automaton);
    let sinks = (0..automaton.states.len()).filter(|&i| automaton.is_sink(i)).count();
    let elr = compare.then(|| check_elr1(net, &s.pilot));
    let agree = elr.as_ref().map_or(true, |e| e.is_clean() == lr.is_clean());
    let ok = lr.is_clean() && agree;
    if format == Format::Json {
        let mut out = json!({
            "schema": SCHEMA_VERSION,
            "lr1": {
                "ok": lr.is_clean(),
                "states": automaton.states.len(),
                "sinks": sinks,
                "messages": lr.describe(&g),
            },
        });
        if let Some(e) = &elr {
            out["elr1"] = json!({ "ok": e.is_clean(), "conflicts": conflicts_json(net, e) });
            out["agree"] = json!(agree);
        }
        return Ok(Report {
            text: json_text(out),
            ok,
        });
    }
    let mut text = format!(
        "LR(1) of the right-linearized grammar: {}, states: {} ({} sinks)\n",
        if lr.is_clean() { "OK" } else { "FAILED" },
        automaton.states.len(),
        sinks
    );
    text.push_str(&lines(&lr.describe(&g)));
    if let Some(e) = &elr {
        text.push_str(&format!(
            "ELR(1) of the net: {}\n",
            if e.is_clean() { "OK" } else { "FAILED" }
        ));
        text.push_str(&lines(&e.describe(net)));
        text.push_str(if agree {
            "verdicts agree\n"
        } else {
            "verdicts DISAGREE\n"
        });
    }
    Ok(Report { text, ok })
}
