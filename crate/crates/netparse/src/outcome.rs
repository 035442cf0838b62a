//! Results shared by the parse engines: syntax trees, reductions, syntax
//! errors and step traces.

use std::fmt::Write as _;

use thiserror::Error;

use crate::net::{LaSet, MachineNet, NtId, StateId, Symbol, TermId};

/// An EBNF-shaped syntax tree: each internal node is a nonterminal whose
/// children spell a string accepted by its machine.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Tree {
    Leaf(TermId),
    /// The only child of a node whose nonterminal derived the empty string.
    Epsilon,
    Node(NtId, Vec<Tree>),
}

impl Tree {
    /// Builds an internal node; an empty child list becomes a single ε leaf.
    pub fn node(nt: NtId, children: Vec<Tree>) -> Tree {
        if children.is_empty() {
            Tree::Node(nt, vec![Tree::Epsilon])
        } else {
            Tree::Node(nt, children)
        }
    }

    /// Parenthesized form, e.g. `( a ( ε )_B )_S`.
    pub fn render(&self, net: &MachineNet) -> String {
        let mut out = String::new();
        self.render_into(net, &mut out);
        out
    }

    fn render_into(&self, net: &MachineNet, out: &mut String) {
        match self {
            Tree::Leaf(t) => out.push_str(net.term_name(*t)),
            Tree::Epsilon => out.push('ε'),
            Tree::Node(nt, children) => {
                out.push('(');
                for c in children {
                    out.push(' ');
                    c.render_into(net, out);
                }
                let _ = write!(out, " )_{}", net.nt_name(*nt));
            }
        }
    }

    /// The leaves, with ε leaves elided.
    pub fn frontier(&self) -> Vec<TermId> {
        let mut out = Vec::new();
        self.frontier_into(&mut out);
        out
    }

    fn frontier_into(&self, out: &mut Vec<TermId>) {
        match self {
            Tree::Leaf(t) => out.push(*t),
            Tree::Epsilon => {}
            Tree::Node(_, cs) => cs.iter().for_each(|c| c.frontier_into(out)),
        }
    }

    /// The grammar symbol labelling this tree's root, if any.
    pub fn label(&self) -> Option<Symbol> {
        match self {
            Tree::Leaf(t) => Some(Symbol::T(*t)),
            Tree::Epsilon => None,
            Tree::Node(nt, _) => Some(Symbol::N(*nt)),
        }
    }

    /// Child labels of an internal node, ε leaves elided.
    pub fn child_labels(&self) -> Vec<Symbol> {
        match self {
            Tree::Node(_, cs) => cs.iter().filter_map(Tree::label).collect(),
            _ => Vec::new(),
        }
    }

    /// The sentential forms of the leftmost derivation encoded by the tree,
    /// starting from the root nonterminal and ending with the frontier.
    pub fn leftmost_derivation(&self) -> Vec<Vec<Symbol>> {
        let mut form: Vec<&Tree> = vec![self];
        let mut out = vec![vec_labels(&form)];
        while let Some(i) = form.iter().position(|t| matches!(t, Tree::Node(..))) {
            let Tree::Node(_, cs) = form[i] else { unreachable!() };
            let expansion: Vec<&Tree> = cs.iter().filter(|c| !matches!(c, Tree::Epsilon)).collect();
            form.splice(i..=i, expansion);
            out.push(vec_labels(&form));
        }
        out
    }
}

fn vec_labels(form: &[&Tree]) -> Vec<Symbol> {
    form.iter().filter_map(|t| t.label()).collect()
}

/// Joins symbol names with `sep`, or returns `ε` for the empty string.
pub fn symbols_string(net: &MachineNet, syms: &[Symbol], sep: &str) -> String {
    if syms.is_empty() {
        "ε".to_string()
    } else {
        syms.iter().map(|&x| net.sym_name(x)).collect::<Vec<_>>().join(sep)
    }
}

/// A reduction `handle ⤳ A`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Reduction {
    pub handle: Vec<Symbol>,
    pub nt: NtId,
}

impl Reduction {
    /// E.g. `(E)⤳T` with `sep = ""`, or `( E )⤳T` with `sep = " "`.
    pub fn render(&self, net: &MachineNet, sep: &str) -> String {
        format!("{}⤳{}", symbols_string(net, &self.handle, sep), net.nt_name(self.nt))
    }
}

/// Where and why the input was rejected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntaxError {
    /// Index of the offending token; equal to the input length at the end.
    pub position: usize,
    pub found: TermId,
    /// Terminals that would have allowed a move.
    pub expected: LaSet,
}

impl SyntaxError {
    pub fn describe(&self, net: &MachineNet) -> String {
        format!(
            "syntax error at token {} (`{}`), expected one of {{{}}}",
            self.position,
            net.term_name(self.found),
            net.la_string(&self.expected)
        )
    }
}

/// Failures of a deterministic engine run on a net that does not meet the
/// engine's precondition.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("nondeterministic parser configuration at token {position}: {detail}")]
    Nondeterministic { position: usize, detail: String },
    #[error("the net does not satisfy the engine's precondition: {0}")]
    Precondition(String),
}

/// How a stack candidate refers to the stack below it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Link {
    /// Candidate identifier ⊥: the candidate's state is initial.
    Bottom,
    /// 1-based position of the source candidate in the element below.
    Cid(usize),
    /// Index of the stack element holding the machine's initial activation.
    Elem(usize),
    /// A pointerless candidate still active.
    Live,
    /// A pointerless candidate cancelled by a shift.
    Pruned,
}

/// One candidate of a stack element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandView {
    pub state: StateId,
    pub la: LaSet,
    pub link: Link,
}

/// One stack element and the grammar symbol pushed just below it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElemView {
    pub symbol: Option<Symbol>,
    pub mstate: usize,
    pub cands: Vec<CandView>,
}

/// A parser move.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Move {
    /// Terminal or nonterminal shift between m-states.
    Shift { from: usize, symbol: Symbol, to: usize },
    /// A reduction; `pop_to` is the stack element left on top.
    Reduce { reduction: Reduction, pop_to: usize },
    Accept,
    Reject,
}

/// A stack snapshot taken before a move.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub position: usize,
    pub stack: Vec<ElemView>,
    pub action: Move,
}

/// The result of a bottom-up parse.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParseOutcome {
    pub accepted: bool,
    pub tree: Option<Tree>,
    pub reductions: Vec<Reduction>,
    pub error: Option<SyntaxError>,
    /// Every move, in execution order.
    pub moves: Vec<Move>,
    /// Stack snapshots; filled only when tracing was requested.
    pub trace: Vec<TraceStep>,
}

impl ParseOutcome {
    /// The reductions rendered with no separator, e.g. `TT⤳E`.
    pub fn reduction_strings(&self, net: &MachineNet) -> Vec<String> {
        self.reductions.iter().map(|r| r.render(net, "")).collect()
    }
}

/// Renders a move.
pub fn describe_move(net: &MachineNet, m: &Move) -> String {
    match m {
        Move::Shift { from, symbol, to } => {
            format!("shift {} : I{} -> I{}", net.sym_name(*symbol), from, to)
        }
        Move::Reduce { reduction, pop_to } => {
            format!("reduce {} (pop to J{})", reduction.render(net, " "), pop_to)
        }
        Move::Accept => "accept".to_string(),
        Move::Reject => "reject".to_string(),
    }
}

/// Renders a stack element, e.g. `( J3:I5 [2_A d #1, 2_A -| #2] `.
pub fn describe_elem(net: &MachineNet, e: &ElemView, index: usize) -> String {
    let mut out = String::new();
    if let Some(x) = e.symbol {
        let _ = write!(out, "{} ", net.sym_name(x));
    }
    let cands: Vec<String> = e
        .cands
        .iter()
        .map(|c| {
            let link = match c.link {
                Link::Bottom => " ⊥".to_string(),
                Link::Cid(i) => format!(" #{i}"),
                Link::Elem(i) => format!(" @{i}"),
                Link::Live => String::new(),
                Link::Pruned => " (pruned)".to_string(),
            };
            format!("{} {}{}", net.state_name(c.state), net.la_string(&c.la), link)
        })
        .collect();
    let _ = write!(out, "J{}:I{}[{}]", index, e.mstate, cands.join(", "));
    out
}

/// Renders a whole trace as one line per step.
pub fn describe_trace(net: &MachineNet, tokens: &[TermId], trace: &[TraceStep]) -> String {
    let mut out = String::new();
    for (n, step) in trace.iter().enumerate() {
        let stack: Vec<String> = step
            .stack
            .iter()
            .enumerate()
            .map(|(i, e)| describe_elem(net, e, i))
            .collect();
        let rest: Vec<&str> = tokens[step.position.min(tokens.len())..]
            .iter()
            .map(|&t| net.term_name(t))
            .chain(std::iter::once(crate::net::END_MARKER))
            .collect();
        let _ = writeln!(
            out,
            "{:>3}  {}  || {}  => {}",
            n,
            stack.join(" "),
            rest.join(" "),
            describe_move(net, &step.action)
        );
    }
    out
}
