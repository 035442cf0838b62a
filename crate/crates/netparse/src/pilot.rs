//! The ELR(1) pilot: a DFA over m-states (sets of candidates) that controls
//! the shift-reduce parsers, with conflict detection and kernel compaction.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::analysis::{closure, AnalysisTables, CandSet};
use crate::net::{LaSet, MachineNet, StateId, Symbol, TermId};

/// A macro-state: candidates grouped by state, sorted by state.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MState {
    pub cands: CandSet,
}

impl MState {
    /// Candidates whose state is not initial.
    pub fn base<'a>(&'a self, net: &'a MachineNet) -> impl Iterator<Item = (&'a StateId, &'a LaSet)> + 'a {
        self.cands.iter().filter(move |(s, _)| !net.is_initial(**s))
    }

    /// Candidates whose state is initial.
    pub fn closure_part<'a>(&'a self, net: &'a MachineNet) -> impl Iterator<Item = (&'a StateId, &'a LaSet)> + 'a {
        self.cands.iter().filter(move |(s, _)| net.is_initial(**s))
    }

    /// The states of the m-state, ignoring look-aheads.
    pub fn kernel(&self) -> BTreeSet<StateId> {
        self.cands.keys().copied().collect()
    }

    /// Renders candidates as `state [la]`, base first, separated by `; `
    /// between base and closure.
    pub fn describe(&self, net: &MachineNet) -> String {
        let part = |it: &mut dyn Iterator<Item = (&StateId, &LaSet)>| {
            it.map(|(s, la)| format!("{} [{}]", net.state_name(*s), net.la_string(la)))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let base = part(&mut self.base(net));
        let clos = part(&mut self.closure_part(net));
        format!("{{{base} | {clos}}}")
    }
}

/// One shifted candidate: source state, target state and carried look-ahead.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftedCandidate {
    pub source: StateId,
    pub target: StateId,
    pub la: LaSet,
}

/// The result of shifting an m-state on a symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shift {
    /// Shifted candidates before merging, in source order.
    pub pieces: Vec<ShiftedCandidate>,
    /// Shifted candidates merged by state.
    pub merged: CandSet,
}

impl Shift {
    /// Pairs of distinct sources that reach the same target.
    pub fn convergent_pairs(&self) -> Vec<(&ShiftedCandidate, &ShiftedCandidate)> {
        let mut out = Vec::new();
        for (i, a) in self.pieces.iter().enumerate() {
            for b in &self.pieces[i + 1..] {
                if a.target == b.target {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

/// The shift of every candidate of `cands` whose state has an `x` edge,
/// keeping the look-ahead of each source.
pub fn shift_candidates(net: &MachineNet, cands: &CandSet, x: Symbol) -> Shift {
    let mut pieces = Vec::new();
    let mut merged = CandSet::new();
    for (&p, la) in cands {
        if let Some(q) = net.delta(p, x) {
            pieces.push(ShiftedCandidate {
                source: p,
                target: q,
                la: la.clone(),
            });
            merged.entry(q).or_default().extend(la.iter().copied());
        }
    }
    Shift { pieces, merged }
}

/// A convergent transition: two candidates of the source m-state reach the
/// same state on the same symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Convergence {
    pub mstate: usize,
    pub symbol: Symbol,
    pub target: StateId,
    pub first: (StateId, LaSet),
    pub second: (StateId, LaSet),
    /// Common look-aheads; non-empty means a convergence conflict.
    pub overlap: LaSet,
}

/// The pilot graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pilot {
    pub mstates: Vec<MState>,
    pub initial: usize,
    pub theta: BTreeMap<(usize, Symbol), usize>,
    /// Every convergent source-candidate pair, by (m-state, symbol).
    pub convergences: Vec<Convergence>,
    /// For a compact pilot, the original m-states merged into each m-state;
    /// for an ordinary pilot, singletons.
    pub merged_from: Vec<Vec<usize>>,
}

impl Pilot {
    pub fn len(&self) -> usize {
        self.mstates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mstates.is_empty()
    }

    pub fn goto(&self, i: usize, x: Symbol) -> Option<usize> {
        self.theta.get(&(i, x)).copied()
    }

    /// Outgoing transitions of m-state `i`, in symbol order.
    pub fn transitions(&self, i: usize) -> impl Iterator<Item = (Symbol, usize)> + '_ {
        self.theta
            .range((i, Symbol::T(TermId(0)))..)
            .take_while(move |((j, _), _)| *j == i)
            .map(|((_, x), t)| (*x, *t))
    }

    /// The m-state reached from the initial one by a sequence of symbols.
    pub fn walk(&self, path: &[Symbol]) -> Option<usize> {
        let mut i = self.initial;
        for &x in path {
            i = self.goto(i, x)?;
        }
        Some(i)
    }

    /// The m-state reached by a sequence of symbol names.
    pub fn walk_names(&self, net: &MachineNet, path: &[&str]) -> Option<usize> {
        let syms: Option<Vec<Symbol>> = path.iter().map(|n| net.symbol(n)).collect();
        self.walk(&syms?)
    }

    /// The set of (m-state, symbol) pairs whose transition is convergent.
    pub fn convergent_edges(&self) -> BTreeSet<(usize, Symbol)> {
        self.convergences.iter().map(|c| (c.mstate, c.symbol)).collect()
    }
}

/// Builds the pilot. The initial m-state is the closure of ⟨0_S, ⊣⟩; m-states
/// are discovered breadth-first with symbols in order, and two m-states are
/// identical when their candidate sets (states and look-aheads) are equal.
pub fn build_pilot(net: &MachineNet, tables: &AnalysisTables) -> Pilot {
    let seed = CandSet::from([(net.initial(net.axiom), LaSet::from([TermId::END]))]);
    let i0 = MState {
        cands: closure(net, tables, &seed),
    };
    let mut index: HashMap<MState, usize> = HashMap::from([(i0.clone(), 0)]);
    let mut mstates = vec![i0];
    let mut theta = BTreeMap::new();
    let mut convergences = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let symbols: BTreeSet<Symbol> = mstates[i]
            .cands
            .keys()
            .flat_map(|&s| net.edges(s).map(|(x, _)| x))
            .collect();
        for x in symbols {
            let shift = shift_candidates(net, &mstates[i].cands, x);
            for (a, b) in shift.convergent_pairs() {
                convergences.push(Convergence {
                    mstate: i,
                    symbol: x,
                    target: a.target,
                    first: (a.source, a.la.clone()),
                    second: (b.source, b.la.clone()),
                    overlap: a.la.intersection(&b.la).copied().collect(),
                });
            }
            let target = MState {
                cands: closure(net, tables, &shift.merged),
            };
            let j = match index.get(&target) {
                Some(&j) => j,
                None => {
                    let j = mstates.len();
                    index.insert(target.clone(), j);
                    mstates.push(target);
                    queue.push_back(j);
                    j
                }
            };
            theta.insert((i, x), j);
        }
    }
    let merged_from = (0..mstates.len()).map(|i| vec![i]).collect();
    Pilot {
        mstates,
        initial: 0,
        theta,
        convergences,
        merged_from,
    }
}

/// A final candidate whose look-ahead contains a terminal the m-state shifts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftReduceConflict {
    pub mstate: usize,
    pub candidate: StateId,
    pub terminal: TermId,
}

/// Two final candidates with overlapping look-aheads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReduceReduceConflict {
    pub mstate: usize,
    pub first: StateId,
    pub second: StateId,
    pub overlap: LaSet,
}

/// Every violation of the ELR(1) condition.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConflictReport {
    pub shift_reduce: Vec<ShiftReduceConflict>,
    pub reduce_reduce: Vec<ReduceReduceConflict>,
    pub convergence: Vec<Convergence>,
}

impl ConflictReport {
    pub fn is_clean(&self) -> bool {
        self.shift_reduce.is_empty() && self.reduce_reduce.is_empty() && self.convergence.is_empty()
    }

    /// One line per conflict.
    pub fn describe(&self, net: &MachineNet) -> Vec<String> {
        let mut out = Vec::new();
        for c in &self.shift_reduce {
            out.push(format!(
                "shift-reduce conflict in I{}: final {} has look-ahead {} which is also shifted",
                c.mstate,
                net.state_name(c.candidate),
                net.term_name(c.terminal)
            ));
        }
        for c in &self.reduce_reduce {
            out.push(format!(
                "reduce-reduce conflict in I{}: {} and {} share look-ahead {{{}}}",
                c.mstate,
                net.state_name(c.first),
                net.state_name(c.second),
                net.la_string(&c.overlap)
            ));
        }
        for c in &self.convergence {
            out.push(format!(
                "convergence conflict on I{} --{}-->: {} and {} both reach {} with look-ahead {{{}}}",
                c.mstate,
                net.sym_name(c.symbol),
                net.state_name(c.first.0),
                net.state_name(c.second.0),
                net.state_name(c.target),
                net.la_string(&c.overlap)
            ));
        }
        out
    }
}

/// Lists every shift-reduce, reduce-reduce and convergence conflict.
pub fn check_elr1(net: &MachineNet, pilot: &Pilot) -> ConflictReport {
    let mut report = ConflictReport::default();
    for (i, m) in pilot.mstates.iter().enumerate() {
        let finals: Vec<(&StateId, &LaSet)> = m.cands.iter().filter(|(s, _)| net.is_final(**s)).collect();
        for &(s, la) in &finals {
            for &t in la {
                if !t.is_end() && pilot.goto(i, Symbol::T(t)).is_some() {
                    report.shift_reduce.push(ShiftReduceConflict {
                        mstate: i,
                        candidate: *s,
                        terminal: t,
                    });
                }
            }
        }
        for (k, &(s1, la1)) in finals.iter().enumerate() {
            for &(s2, la2) in &finals[k + 1..] {
                let overlap: LaSet = la1.intersection(la2).copied().collect();
                if !overlap.is_empty() {
                    report.reduce_reduce.push(ReduceReduceConflict {
                        mstate: i,
                        first: *s1,
                        second: *s2,
                        overlap,
                    });
                }
            }
        }
    }
    report.convergence = pilot.convergences.iter().filter(|c| !c.overlap.is_empty()).cloned().collect();
    report
}

/// Two candidates of one m-state with transitions on the same symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StpViolation {
    pub mstate: usize,
    pub symbol: Symbol,
    pub first: StateId,
    pub second: StateId,
}

/// Every pair of candidates of one m-state with transitions on the same
/// symbol, by m-state and symbol.
pub fn stp_violations(net: &MachineNet, pilot: &Pilot) -> Vec<StpViolation> {
    let mut out = Vec::new();
    for (i, m) in pilot.mstates.iter().enumerate() {
        let mut by_symbol: BTreeMap<Symbol, Vec<StateId>> = BTreeMap::new();
        for &s in m.cands.keys() {
            for (x, _) in net.edges(s) {
                by_symbol.entry(x).or_default().push(s);
            }
        }
        for (x, states) in by_symbol {
            for (k, &first) in states.iter().enumerate() {
                for &second in &states[k + 1..] {
                    out.push(StpViolation {
                        mstate: i,
                        symbol: x,
                        first,
                        second,
                    });
                }
            }
        }
    }
    out
}

/// Returns the first m-state (in numbering order) violating the single
/// transition property, with the lowest offending symbol.
pub fn check_stp(net: &MachineNet, pilot: &Pilot) -> Option<StpViolation> {
    stp_violations(net, pilot).into_iter().next()
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("m-state I{mstate} violates the single transition property; the pilot cannot be compacted")]
pub struct CompactError {
    pub mstate: usize,
}

/// Merges kernel-identical m-states, uniting look-aheads. Compact m-states
/// are numbered by their smallest member.
pub fn compact_pilot(net: &MachineNet, pilot: &Pilot) -> Result<Pilot, CompactError> {
    if let Some(v) = check_stp(net, pilot) {
        return Err(CompactError { mstate: v.mstate });
    }
    let mut class_of = vec![0usize; pilot.len()];
    let mut kernels: HashMap<BTreeSet<StateId>, usize> = HashMap::new();
    let mut merged_from: Vec<Vec<usize>> = Vec::new();
    let mut mstates: Vec<MState> = Vec::new();
    for (i, m) in pilot.mstates.iter().enumerate() {
        let k = m.kernel();
        let c = *kernels.entry(k).or_insert_with(|| {
            merged_from.push(Vec::new());
            mstates.push(MState { cands: CandSet::new() });
            mstates.len() - 1
        });
        class_of[i] = c;
        for &orig in &pilot.merged_from[i] {
            merged_from[c].push(orig);
        }
        for (s, la) in &m.cands {
            mstates[c].cands.entry(*s).or_default().extend(la.iter().copied());
        }
    }
    for group in &mut merged_from {
        group.sort_unstable();
    }
    let theta = pilot
        .theta
        .iter()
        .map(|(&(i, x), &j)| ((class_of[i], x), class_of[j]))
        .collect();
    Ok(Pilot {
        mstates,
        initial: class_of[pilot.initial],
        theta,
        convergences: Vec::new(),
        merged_from,
    })
}
