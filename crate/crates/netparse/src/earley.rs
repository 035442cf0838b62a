//! Tabular Earley recognition over a machine net, without look-ahead, and
//! syntax-tree extraction for non-ambiguous grammars.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use indexmap::IndexSet;
use thiserror::Error;

use crate::net::{MachineNet, NtId, StateId, Symbol, TermId};
use crate::outcome::Tree;

/// A pair ⟨state, origin⟩: the machine of `state` was activated at input
/// position `origin`.
pub type EarleyPair = (StateId, usize);

/// The Earley vector E[0..=n]; each element keeps insertion order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EarleyVector {
    pub tokens: Vec<TermId>,
    pub sets: Vec<IndexSet<EarleyPair>>,
}

impl EarleyVector {
    pub fn new(tokens: &[TermId]) -> Self {
        EarleyVector {
            tokens: tokens.to_vec(),
            sets: vec![IndexSet::new(); tokens.len() + 1],
        }
    }

    pub fn contains(&self, i: usize, pair: EarleyPair) -> bool {
        self.sets[i].contains(&pair)
    }

    /// Columns rendered as `E_i: q j, ...`.
    pub fn describe(&self, net: &MachineNet) -> String {
        let mut out = String::new();
        for (i, set) in self.sets.iter().enumerate() {
            let label = if i == 0 {
                String::new()
            } else {
                format!(" ({})", net.term_name(self.tokens[i - 1]))
            };
            let pairs: Vec<String> = set.iter().map(|(s, j)| format!("{} {}", net.state_name(*s), j)).collect();
            let _ = writeln!(out, "E_{i}{label}: {}", pairs.join(", "));
        }
        out
    }
}

/// Completes E[i]: adds ⟨0_X, i⟩ for every call edge of a pair in E[i], and,
/// for every final pair ⟨f, j⟩ of machine X and caller ⟨p, l⟩ ∈ E[j] with
/// p -X→ q, adds ⟨q, l⟩; repeats until nothing is added.
pub fn completion(e: &mut EarleyVector, i: usize, net: &MachineNet) {
    loop {
        let mut added = false;
        let mut k = 0;
        while k < e.sets[i].len() {
            let (p, j) = e.sets[i][k];
            for (x, _) in net.edges(p) {
                if let Symbol::N(b) = x {
                    added |= e.sets[i].insert((net.initial(b), i));
                }
            }
            if net.is_final(p) {
                let callers: Vec<EarleyPair> = e.sets[j].iter().copied().collect();
                for (c, l) in callers {
                    if let Some(q) = net.delta(c, Symbol::N(p.nt)) {
                        added |= e.sets[i].insert((q, l));
                    }
                }
            }
            k += 1;
        }
        if !added {
            break;
        }
    }
}

/// Adds to E[i] the terminal shifts of E[i-1] on the i-th token.
pub fn terminal_shift(e: &mut EarleyVector, i: usize, net: &MachineNet) {
    let x = Symbol::T(e.tokens[i - 1]);
    let shifted: Vec<EarleyPair> = e.sets[i - 1]
        .iter()
        .filter_map(|&(p, j)| net.delta(p, x).map(|q| (q, j)))
        .collect();
    e.sets[i].extend(shifted);
}

/// Runs the Earley analysis. Stops early when an element is empty. The
/// input is accepted iff E[n] holds a final axiom state with origin 0.
pub fn earley_recognize(net: &MachineNet, tokens: &[TermId]) -> (bool, EarleyVector) {
    let mut e = EarleyVector::new(tokens);
    e.sets[0].insert((net.initial(net.axiom), 0));
    completion(&mut e, 0, net);
    for i in 1..=tokens.len() {
        if e.sets[i - 1].is_empty() {
            break;
        }
        terminal_shift(&mut e, i, net);
        completion(&mut e, i, net);
    }
    let n = tokens.len();
    let accepted = e.sets[n]
        .iter()
        .any(|&(f, j)| j == 0 && f.nt == net.axiom && net.is_final(f));
    (accepted, e)
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("ambiguous input: {0}")]
    Ambiguous(String),
    #[error("no derivation step explains {0}; the call arguments are not a completed pair")]
    Internal(String),
}

#[derive(Clone, Copy, Debug)]
enum Witness {
    Terminal { p: StateId },
    Nonterminal { p: StateId, y: NtId, e: StateId, h: usize },
}

/// Builds the tree rooted at X for the completed pair ⟨f, j⟩ ∈ E[i],
/// walking the machine of X backwards from f to its initial state. Each step
/// must be explained by exactly one terminal shift or one completed
/// nonterminal shift; otherwise the input is ambiguous.
pub fn build_tree(
    net: &MachineNet,
    e: &EarleyVector,
    x: NtId,
    f: StateId,
    j: usize,
    i: usize,
) -> Result<Tree, TreeError> {
    let mut active = BTreeSet::new();
    build(net, e, x, f, j, i, &mut active)
}

fn build(
    net: &MachineNet,
    e: &EarleyVector,
    x: NtId,
    f: StateId,
    j: usize,
    i: usize,
    active: &mut BTreeSet<(StateId, usize, usize)>,
) -> Result<Tree, TreeError> {
    let call = format!("BT({}, {}, {}, {})", net.nt_name(x), net.state_name(f), j, i);
    if !active.insert((f, j, i)) {
        return Err(TreeError::Ambiguous(format!("{call} re-enters itself")));
    }
    let mut children = Vec::new();
    let mut seen = BTreeSet::new();
    let (mut q, mut k) = (f, i);
    while q != net.initial(x) {
        if !seen.insert((q, k)) {
            return Err(TreeError::Ambiguous(format!("{call} loops at {} {}", net.state_name(q), k)));
        }
        let mut witnesses = Vec::new();
        if k > j {
            let a = Symbol::T(e.tokens[k - 1]);
            for &(p, origin) in &e.sets[k - 1] {
                if origin == j && net.delta(p, a) == Some(q) {
                    witnesses.push(Witness::Terminal { p });
                }
            }
        }
        for h in j..=k {
            for &(p, origin) in &e.sets[h] {
                if origin != j {
                    continue;
                }
                for (sym, r) in net.edges(p) {
                    let Symbol::N(y) = sym else { continue };
                    if r != q {
                        continue;
                    }
                    for &(ef, eh) in &e.sets[k] {
                        if eh == h && ef.nt == y && net.is_final(ef) {
                            witnesses.push(Witness::Nonterminal { p, y, e: ef, h });
                        }
                    }
                }
            }
        }
        match witnesses.as_slice() {
            [] => return Err(TreeError::Internal(format!("{call} at {} {}", net.state_name(q), k))),
            [Witness::Terminal { p }] => {
                children.push(Tree::Leaf(e.tokens[k - 1]));
                q = *p;
                k -= 1;
            }
            [Witness::Nonterminal { p, y, e: ef, h }] => {
                children.push(build(net, e, *y, *ef, *h, k, active)?);
                q = *p;
                k = *h;
            }
            many => {
                return Err(TreeError::Ambiguous(format!(
                    "{call}: {} ways to reach {} at {}",
                    many.len(),
                    net.state_name(q),
                    k
                )))
            }
        }
    }
    active.remove(&(f, j, i));
    if k != j {
        return Err(TreeError::Internal(format!("{call} reached the initial state at {k}")));
    }
    children.reverse();
    Ok(Tree::node(x, children))
}

/// Recognizes the input and, if accepted, extracts its tree from the unique
/// completed axiom pair.
pub fn earley_parse(net: &MachineNet, tokens: &[TermId]) -> Result<(bool, Option<Tree>, EarleyVector), TreeError> {
    let (accepted, e) = earley_recognize(net, tokens);
    if !accepted {
        return Ok((false, None, e));
    }
    let n = tokens.len();
    let roots: Vec<StateId> = e.sets[n]
        .iter()
        .filter(|&&(f, j)| j == 0 && f.nt == net.axiom && net.is_final(f))
        .map(|&(f, _)| f)
        .collect();
    if roots.len() > 1 {
        return Err(TreeError::Ambiguous(format!("{} completed axiom pairs", roots.len())));
    }
    let tree = build_tree(net, &e, net.axiom, roots[0], 0, n)?;
    Ok((true, Some(tree), e))
}
