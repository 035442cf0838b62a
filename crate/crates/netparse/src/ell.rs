//! Top-down machinery: prospect and guide sets, the parser control-flow
//! graph, the ELL(1) check, the pointerless and predictive parsers, and
//! recursive-descent code emission.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::analysis::{detect_left_recursion, AnalysisTables};
use crate::elr::{Driver, Mode, ParseOptions};
use crate::grammar::{RlRule, RlSymbol};
use crate::net::{LaSet, MachineNet, NtId, StateId, Symbol, TermId};
use crate::outcome::{EngineError, ParseOutcome, SyntaxError, Tree};
use crate::pilot::{check_elr1, check_stp, ConflictReport, Pilot, StpViolation};

/// A call edge `from ⇢ 0_nt`, paired with the nonterminal shift
/// `from -nt→ ret`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CallEdge {
    pub from: StateId,
    pub nt: NtId,
    pub to: StateId,
    pub ret: StateId,
    pub guide: LaSet,
}

/// Prospect sets of every state and guide sets of every call edge, as
/// recorded after one sweep of the fixpoint iteration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixpointRow {
    pub prospect: BTreeMap<StateId, LaSet>,
    pub guide: BTreeMap<(StateId, NtId), LaSet>,
}

/// The parser control-flow graph: the net plus prospect sets on states and
/// guide sets on call edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pcfg {
    /// Prospect set of every state; the guide of a final state's exit.
    pub prospect: BTreeMap<StateId, LaSet>,
    /// Call edges sorted by (source state, nonterminal).
    pub calls: Vec<CallEdge>,
    /// Row 0 holds the initial values, then one row per sweep; the last
    /// sweep changed nothing.
    pub rows: Vec<FixpointRow>,
}

impl Pcfg {
    pub fn calls_from(&self, q: StateId) -> impl Iterator<Item = &CallEdge> {
        self.calls.iter().filter(move |c| c.from == q)
    }

    pub fn call(&self, q: StateId, nt: NtId) -> Option<&CallEdge> {
        self.calls.iter().find(|c| c.from == q && c.nt == nt)
    }

    pub fn prospect(&self, q: StateId) -> &LaSet {
        &self.prospect[&q]
    }

    /// Number of fixpoint rows including the initial one.
    pub fn iterations(&self) -> usize {
        self.rows.len()
    }

    /// Every decision available in state q with its guide set: terminal
    /// shifts, calls, and the exit of a final state.
    pub fn decisions(&self, net: &MachineNet, q: StateId) -> Vec<(Decision, LaSet)> {
        let mut out = Vec::new();
        for (x, _) in net.edges(q) {
            if let Symbol::T(t) = x {
                out.push((Decision::Shift(t), LaSet::from([t])));
            }
        }
        for c in self.calls_from(q) {
            out.push((Decision::Call(c.nt), c.guide.clone()));
        }
        if net.is_final(q) {
            out.push((Decision::Return, self.prospect(q).clone()));
        }
        out
    }

    /// Pairs of decisions of one state whose guide sets intersect.
    pub fn guide_overlaps(&self, net: &MachineNet) -> Vec<GuideOverlap> {
        let mut out = Vec::new();
        for q in net.states() {
            let ds = self.decisions(net, q);
            for (i, (d1, g1)) in ds.iter().enumerate() {
                for (d2, g2) in &ds[i + 1..] {
                    let overlap: LaSet = g1.intersection(g2).copied().collect();
                    if !overlap.is_empty() {
                        out.push(GuideOverlap {
                            state: q,
                            first: *d1,
                            second: *d2,
                            overlap,
                        });
                    }
                }
            }
        }
        out
    }
}

/// A move of the predictive parser from some state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Decision {
    Shift(TermId),
    Call(NtId),
    Return,
}

impl Decision {
    pub fn describe(&self, net: &MachineNet) -> String {
        match self {
            Decision::Shift(t) => format!("shift {}", net.term_name(*t)),
            Decision::Call(n) => format!("call {}", net.nt_name(*n)),
            Decision::Return => "return".to_string(),
        }
    }
}

/// Two decisions of one state with intersecting guide sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuideOverlap {
    pub state: StateId,
    pub first: Decision,
    pub second: Decision,
    pub overlap: LaSet,
}

/// Computes prospect and guide sets by Gauss–Seidel sweeps over the
/// defining equations, states and call edges in sorted order, starting from
/// π(0_S) = {⊣} and all other sets empty.
///
/// Prospects: a non-initial state q collects π(p) over its incoming edges
/// p -X→ q; an initial state 0_A collects Ini(r), plus π(q) when r is
/// nullable, over the call sites q -A→ r. Guides of q ⇢ 0_A (with q -A→ r):
/// Ini(0_A), plus Ini(r) when A is nullable, plus π(r) when A and r are both
/// nullable, plus the guides of the call edges leaving 0_A.
pub fn fixpoint_prospect_guide(net: &MachineNet, tables: &AnalysisTables) -> Pcfg {
    let states = net.states();
    let mut preds: BTreeMap<StateId, Vec<StateId>> = BTreeMap::new();
    let mut call_sites: BTreeMap<NtId, Vec<(StateId, StateId)>> = BTreeMap::new();
    let mut calls = Vec::new();
    for &p in &states {
        for (x, r) in net.edges(p) {
            preds.entry(r).or_default().push(p);
            if let Symbol::N(b) = x {
                call_sites.entry(b).or_default().push((p, r));
                calls.push(CallEdge {
                    from: p,
                    nt: b,
                    to: net.initial(b),
                    ret: r,
                    guide: LaSet::new(),
                });
            }
        }
    }
    let axiom0 = net.initial(net.axiom);
    let mut prospect: BTreeMap<StateId, LaSet> = states.iter().map(|&s| (s, LaSet::new())).collect();
    prospect.get_mut(&axiom0).unwrap().insert(TermId::END);
    let mut guide: BTreeMap<(StateId, NtId), LaSet> = calls.iter().map(|c| ((c.from, c.nt), LaSet::new())).collect();
    let mut rows = vec![FixpointRow {
        prospect: prospect.clone(),
        guide: guide.clone(),
    }];
    loop {
        let mut changed = false;
        for &s in &states {
            let mut add = LaSet::new();
            if net.is_initial(s) {
                for &(q, r) in call_sites.get(&s.nt).map(Vec::as_slice).unwrap_or(&[]) {
                    add.extend(tables.ini(r).iter().copied());
                    if tables.nullable(r) {
                        add.extend(prospect[&q].iter().copied());
                    }
                }
            } else {
                for p in preds.get(&s).map(Vec::as_slice).unwrap_or(&[]) {
                    add.extend(prospect[p].iter().copied());
                }
            }
            let cur = prospect.get_mut(&s).unwrap();
            let before = cur.len();
            cur.extend(add);
            changed |= cur.len() != before;
        }
        for c in &calls {
            let a0 = c.to;
            let mut add = tables.ini(a0).clone();
            if tables.nullable(a0) {
                add.extend(tables.ini(c.ret).iter().copied());
                if tables.nullable(c.ret) {
                    add.extend(prospect[&c.ret].iter().copied());
                }
            }
            for (x, _) in net.edges(a0) {
                if let Symbol::N(b) = x {
                    add.extend(guide[&(a0, b)].iter().copied());
                }
            }
            let cur = guide.get_mut(&(c.from, c.nt)).unwrap();
            let before = cur.len();
            cur.extend(add);
            changed |= cur.len() != before;
        }
        rows.push(FixpointRow {
            prospect: prospect.clone(),
            guide: guide.clone(),
        });
        if !changed {
            break;
        }
    }
    for c in &mut calls {
        c.guide = guide[&(c.from, c.nt)].clone();
    }
    Pcfg { prospect, calls, rows }
}

/// Builds the parser control-flow graph directly from the net.
pub fn build_pcfg(net: &MachineNet, tables: &AnalysisTables) -> Pcfg {
    fixpoint_prospect_guide(net, tables)
}

/// Everything that can prevent a net from being ELL(1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ell1Report {
    pub left_recursion: Option<Vec<StateId>>,
    pub stp_violation: Option<StpViolation>,
    pub elr1_conflicts: ConflictReport,
    pub guide_overlaps: Vec<GuideOverlap>,
    /// Advisory notes, e.g. on nonterminals that only derive ε.
    pub warnings: Vec<String>,
}

impl Ell1Report {
    pub fn is_clean(&self) -> bool {
        self.left_recursion.is_none()
            && self.stp_violation.is_none()
            && self.elr1_conflicts.is_clean()
            && self.guide_overlaps.is_empty()
    }

    /// One line per finding.
    pub fn describe(&self, net: &MachineNet) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(cycle) = &self.left_recursion {
            let names: Vec<String> = cycle.iter().map(|&s| net.state_name(s)).collect();
            out.push(format!("left recursion: {}", names.join(" -> ")));
        }
        if let Some(v) = &self.stp_violation {
            out.push(format!(
                "single transition property violated in I{}: {} and {} both shift {}",
                v.mstate,
                net.state_name(v.first),
                net.state_name(v.second),
                net.sym_name(v.symbol)
            ));
        }
        out.extend(self.elr1_conflicts.describe(net));
        for g in &self.guide_overlaps {
            out.push(format!(
                "guide sets overlap at {}: {} and {} share {{{}}}",
                net.state_name(g.state),
                g.first.describe(net),
                g.second.describe(net),
                net.la_string(&g.overlap)
            ));
        }
        out.extend(self.warnings.iter().cloned());
        out
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EllError {
    #[error("guide-set disjointness ({guides_disjoint}) disagrees with the structural ELL(1) conditions ({structural})")]
    Inconsistent { guides_disjoint: bool, structural: bool },
    #[error("the net is not ELL(1)")]
    NotEll1,
}

/// Checks the ELL(1) condition both structurally (no left recursion, ELR(1)
/// clean, single transition property) and through guide-set disjointness.
/// The two routes must agree; a disagreement is reported as a warning when
/// the net has a nonterminal deriving only ε, and as an error otherwise.
pub fn check_ell1(net: &MachineNet, tables: &AnalysisTables, pilot: &Pilot, pcfg: &Pcfg) -> Result<Ell1Report, EllError> {
    let mut report = Ell1Report {
        left_recursion: detect_left_recursion(net, tables),
        stp_violation: check_stp(net, pilot),
        elr1_conflicts: check_elr1(net, pilot),
        guide_overlaps: pcfg.guide_overlaps(net),
        warnings: Vec::new(),
    };
    let structural =
        report.left_recursion.is_none() && report.stp_violation.is_none() && report.elr1_conflicts.is_clean();
    let guides_disjoint = report.guide_overlaps.is_empty();
    if structural != guides_disjoint {
        let eps_only = tables.epsilon_only(net);
        if eps_only.is_empty() {
            return Err(EllError::Inconsistent {
                guides_disjoint,
                structural,
            });
        }
        let names: Vec<&str> = eps_only.iter().map(|&n| net.nt_name(n)).collect();
        report.warnings.push(format!(
            "nonterminal(s) {} derive only ε; the guide-set test and the structural conditions disagree; inline them",
            names.join(", ")
        ));
    }
    Ok(report)
}

/// Parses with the pointerless engine, driven by a compact pilot.
pub fn parse_pointerless(
    net: &MachineNet,
    compact: &Pilot,
    tokens: &[TermId],
    opts: ParseOptions,
) -> Result<ParseOutcome, EngineError> {
    Driver::new(net, compact, Mode::Pointerless, opts).run(tokens)
}

/// A right-linearized production applied by the predictive parser.
pub type LeftDerivation = Vec<RlRule>;

/// One item of a sentential form of the right-linearized grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormItem {
    Terminal(TermId),
    State(StateId),
    /// Marks the position of the most recent ε-production.
    Epsilon,
}

/// One row of a predictive-parser trace: the configuration before the move,
/// the move's predicate, and the sentential form after it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictiveStep {
    pub stack: Vec<StateId>,
    pub position: usize,
    pub predicate: String,
    pub form: Vec<FormItem>,
}

/// Result of a predictive parse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictiveOutcome {
    pub outcome: ParseOutcome,
    pub derivation: LeftDerivation,
    pub steps: Vec<PredictiveStep>,
}

pub fn render_form(net: &MachineNet, form: &[FormItem]) -> String {
    form.iter()
        .map(|f| match f {
            FormItem::Terminal(t) => net.term_name(*t).to_string(),
            FormItem::State(s) => net.state_name(*s),
            FormItem::Epsilon => "ε".to_string(),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Renders a predictive trace, one row per move.
pub fn describe_predictive(net: &MachineNet, tokens: &[TermId], steps: &[PredictiveStep], axiom: StateId) -> String {
    let mut out = String::new();
    for (i, s) in steps.iter().enumerate() {
        let stack: Vec<String> = s.stack.iter().map(|&q| format!("<{}>", net.state_name(q))).collect();
        let rest: Vec<&str> = tokens[s.position.min(tokens.len())..]
            .iter()
            .map(|&t| net.term_name(t))
            .chain(std::iter::once(crate::net::END_MARKER))
            .collect();
        let arrow = if i == 0 { "=>" } else { "=>+" };
        let _ = writeln!(
            out,
            "{:<32} {:>16} | {:<28} | {} {} {}",
            stack.join(""),
            rest.join(" "),
            s.predicate,
            net.state_name(axiom),
            arrow,
            render_form(net, &s.form)
        );
    }
    out
}

/// The predictive recognizer with left-derivation output. The stack holds
/// states only: the active machine's state on top and suspended return
/// states below.
pub fn parse_predictive(
    net: &MachineNet,
    pcfg: &Pcfg,
    tokens: &[TermId],
) -> Result<PredictiveOutcome, EngineError> {
    let mut stack = vec![net.initial(net.axiom)];
    let mut nodes: Vec<(NtId, Vec<Tree>)> = vec![(net.axiom, Vec::new())];
    let mut derivation = Vec::new();
    let mut steps = Vec::new();
    let mut consumed: Vec<FormItem> = Vec::new();
    let mut pos = 0;
    let form_after = |consumed: &[FormItem], eps: bool, stack: &[StateId]| {
        let mut f = consumed.to_vec();
        if eps {
            f.push(FormItem::Epsilon);
        }
        f.extend(stack.iter().rev().map(|&s| FormItem::State(s)));
        f
    };
    loop {
        let cc = tokens.get(pos).copied().unwrap_or(TermId::END);
        let q = *stack.last().expect("stack never empties before acceptance");
        let before = stack.clone();
        let scan = if cc.is_end() { None } else { net.delta(q, Symbol::T(cc)) };
        let call = pcfg.calls_from(q).find(|c| c.guide.contains(&cc));
        let final_ok = net.is_final(q) && pcfg.prospect(q).contains(&cc);
        let ret = final_ok && stack.len() > 1;
        let accept = net.is_final(q) && stack.len() == 1 && cc.is_end();
        let enabled = usize::from(scan.is_some()) + usize::from(call.is_some()) + usize::from(ret || accept);
        if enabled > 1 {
            return Err(EngineError::Nondeterministic {
                position: pos,
                detail: format!("{} moves enabled in {} on `{}`", enabled, net.state_name(q), net.term_name(cc)),
            });
        }
        if let Some(r) = scan {
            *stack.last_mut().unwrap() = r;
            derivation.push(RlRule {
                lhs: q,
                rhs: Some((RlSymbol::Terminal(cc), r)),
            });
            nodes.last_mut().unwrap().1.push(Tree::Leaf(cc));
            consumed.push(FormItem::Terminal(cc));
            steps.push(PredictiveStep {
                stack: before,
                position: pos,
                predicate: "scan".to_string(),
                form: form_after(&consumed, false, &stack),
            });
            pos += 1;
        } else if let Some(c) = call {
            *stack.last_mut().unwrap() = c.ret;
            stack.push(c.to);
            derivation.push(RlRule {
                lhs: q,
                rhs: Some((RlSymbol::Call(c.to), c.ret)),
            });
            nodes.push((c.nt, Vec::new()));
            steps.push(PredictiveStep {
                stack: before,
                position: pos,
                predicate: format!("{} in guide {{{}}}", net.term_name(cc), net.la_string(&c.guide)),
                form: form_after(&consumed, false, &stack),
            });
        } else if ret || accept {
            stack.pop();
            derivation.push(RlRule { lhs: q, rhs: None });
            let (nt, children) = nodes.pop().unwrap();
            let tree = Tree::node(nt, children);
            let predicate = format!(
                "{} in prospect {{{}}}{}",
                net.term_name(cc),
                net.la_string(pcfg.prospect(q)),
                if accept { " accept" } else { "" }
            );
            steps.push(PredictiveStep {
                stack: before,
                position: pos,
                predicate,
                form: form_after(&consumed, true, &stack),
            });
            if accept {
                return Ok(PredictiveOutcome {
                    outcome: ParseOutcome {
                        accepted: true,
                        tree: Some(tree),
                        ..ParseOutcome::default()
                    },
                    derivation,
                    steps,
                });
            }
            nodes.last_mut().unwrap().1.push(tree);
        } else {
            let mut expected: LaSet = pcfg.decisions(net, q).into_iter().flat_map(|(_, g)| g).collect();
            if stack.len() == 1 && net.is_final(q) {
                expected.insert(TermId::END);
            }
            steps.push(PredictiveStep {
                stack: before,
                position: pos,
                predicate: "reject".to_string(),
                form: form_after(&consumed, false, &stack),
            });
            return Ok(PredictiveOutcome {
                outcome: ParseOutcome {
                    accepted: false,
                    error: Some(SyntaxError {
                        position: pos,
                        found: cc,
                        expected,
                    }),
                    ..ParseOutcome::default()
                },
                derivation,
                steps,
            });
        }
    }
}

fn guard(net: &MachineNet, set: &LaSet) -> String {
    format!("cc in {{ {} }}", net.la_string(set))
}

/// Emits recursive-descent pseudo-code: a main program and one procedure per
/// machine. Each procedure loops over the machine's states, and in every state
/// a chain of guarded branches scans a terminal, calls another procedure, or
/// returns, driven by the guide sets. Refuses nets that are not ELL(1).
pub fn emit_recursive_descent(net: &MachineNet, pcfg: &Pcfg, report: &Ell1Report) -> Result<String, EllError> {
    if !report.is_clean() {
        return Err(EllError::NotEll1);
    }
    let mut out = String::new();
    let _ = writeln!(out, "program");
    let _ = writeln!(out, "    cc := next");
    let _ = writeln!(out, "    call {}", net.nt_name(net.axiom));
    let _ = writeln!(out, "    if cc in {{ {} }} then", crate::net::END_MARKER);
    let _ = writeln!(out, "        accept");
    let _ = writeln!(out, "    else");
    let _ = writeln!(out, "        error");
    let _ = writeln!(out, "    end if");
    let _ = writeln!(out, "end program");
    for a in net.nonterminal_ids() {
        let m = net.machine(a);
        let _ = writeln!(out);
        let _ = writeln!(out, "procedure {}", net.nt_name(a));
        let _ = writeln!(out, "    state := {}", net.state_name(net.initial(a)));
        let _ = writeln!(out, "    while true do");
        for q in 0..m.num_states {
            let s = StateId { nt: a, q };
            let kw = if q == 0 { "if" } else { "else if" };
            let _ = writeln!(out, "        {kw} state = {} then", net.state_name(s));
            let mut first = true;
            let mut branch = |out: &mut String, set: &LaSet, body: &[String]| {
                let kw = if first { "if" } else { "else if" };
                first = false;
                let _ = writeln!(out, "            {kw} {} then", guard(net, set));
                for line in body {
                    let _ = writeln!(out, "                {line}");
                }
            };
            for (x, r) in net.edges(s) {
                if let Symbol::T(t) = x {
                    branch(
                        &mut out,
                        &LaSet::from([t]),
                        &["cc := next".to_string(), format!("state := {}", net.state_name(r))],
                    );
                }
            }
            for c in pcfg.calls_from(s) {
                branch(
                    &mut out,
                    &c.guide,
                    &[format!("call {}", net.nt_name(c.nt)), format!("state := {}", net.state_name(c.ret))],
                );
            }
            if net.is_final(s) {
                branch(&mut out, pcfg.prospect(s), &["return".to_string()]);
            }
            let _ = writeln!(out, "            else");
            let _ = writeln!(out, "                error");
            let _ = writeln!(out, "            end if");
        }
        let _ = writeln!(out, "        end if");
        let _ = writeln!(out, "    end while");
        let _ = writeln!(out, "end procedure");
    }
    Ok(out)
}

/// States whose prospect sets differ from the union of their look-aheads
/// across the m-states of a compact pilot.
pub fn prospect_pilot_disagreements(net: &MachineNet, pcfg: &Pcfg, compact: &Pilot) -> BTreeSet<StateId> {
    let mut union: BTreeMap<StateId, LaSet> = BTreeMap::new();
    for m in &compact.mstates {
        for (s, la) in &m.cands {
            union.entry(*s).or_default().extend(la.iter().copied());
        }
    }
    net.states()
        .into_iter()
        .filter(|s| net.is_final(*s))
        .filter(|s| union.get(s).cloned().unwrap_or_default() != *pcfg.prospect(*s))
        .collect()
}
