//! Canonical LR(1) construction and conflict check for BNF grammars, used as
//! a reference on the right-linearized grammar of a net.
//!
//! The automaton has no augmented start rule: its initial state is the
//! closure of the axiom's rules with the end marker as look-ahead, matching
//! the initial m-state of the net's pilot.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use crate::grammar::{RightLinearizedGrammar, RlSymbol};
use crate::net::{MachineNet, TermId, END_MARKER};

/// A BNF symbol: terminal id or nonterminal index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BSym {
    T(TermId),
    N(usize),
}

/// A BNF grammar; a rule is (left-hand side, possibly empty right part).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BnfGrammar {
    pub terminals: Vec<String>,
    pub nonterminals: Vec<String>,
    pub axiom: usize,
    pub rules: Vec<(usize, Vec<BSym>)>,
}

impl BnfGrammar {
    /// Builds a grammar from named rules. Every left-hand side is a
    /// nonterminal; every other name is a terminal.
    pub fn from_rules(axiom: &str, rules: &[(&str, &[&str])]) -> Self {
        let nts: BTreeSet<&str> = rules.iter().map(|(l, _)| *l).collect();
        let ts: BTreeSet<&str> = rules
            .iter()
            .flat_map(|(_, r)| r.iter().copied())
            .filter(|s| !nts.contains(s))
            .collect();
        let nonterminals: Vec<String> = nts.iter().map(|s| s.to_string()).collect();
        let terminals: Vec<String> = ts.iter().map(|s| s.to_string()).collect();
        let nt = |s: &str| nonterminals.iter().position(|n| n == s).unwrap();
        let sym = |s: &str| match nonterminals.iter().position(|n| n == s) {
            Some(i) => BSym::N(i),
            None => BSym::T(TermId(terminals.iter().position(|t| t == s).unwrap() as u32)),
        };
        let rules = rules
            .iter()
            .map(|(l, r)| (nt(l), r.iter().map(|s| sym(s)).collect()))
            .collect();
        BnfGrammar {
            axiom: nt(axiom),
            terminals: terminals.clone(),
            nonterminals: nonterminals.clone(),
            rules,
        }
    }

    /// Encodes a right-linearized grammar: nonterminals are the net states in
    /// sorted order, terminals keep the net's ids.
    pub fn from_right_linearized(net: &MachineNet, rl: &RightLinearizedGrammar) -> Self {
        let states = net.states();
        let index: HashMap<_, _> = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let rules = rl
            .rules
            .iter()
            .map(|r| {
                let rhs = match r.rhs {
                    None => Vec::new(),
                    Some((RlSymbol::Terminal(t), q)) => vec![BSym::T(t), BSym::N(index[&q])],
                    Some((RlSymbol::Call(b), q)) => vec![BSym::N(index[&b]), BSym::N(index[&q])],
                };
                (index[&r.lhs], rhs)
            })
            .collect();
        BnfGrammar {
            terminals: net.terminals.clone(),
            nonterminals: states.iter().map(|&s| net.state_name(s)).collect(),
            axiom: index[&rl.axiom],
            rules,
        }
    }

    pub fn term_name(&self, t: TermId) -> &str {
        if t.is_end() {
            END_MARKER
        } else {
            &self.terminals[t.0 as usize]
        }
    }

    pub fn sym_name(&self, x: BSym) -> &str {
        match x {
            BSym::T(t) => self.term_name(t),
            BSym::N(n) => &self.nonterminals[n],
        }
    }

    pub fn rule_string(&self, r: usize) -> String {
        let (lhs, rhs) = &self.rules[r];
        let body = if rhs.is_empty() {
            "ε".to_string()
        } else {
            rhs.iter().map(|&x| self.sym_name(x)).collect::<Vec<_>>().join(" ")
        };
        format!("{} -> {}", self.nonterminals[*lhs], body)
    }
}

/// A marked rule with one look-ahead terminal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lr1Item {
    pub rule: usize,
    pub dot: usize,
    pub la: TermId,
}

/// A canonical LR(1) state.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lr1MState {
    pub items: BTreeSet<Lr1Item>,
}

/// The canonical LR(1) automaton.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lr1Automaton {
    pub grammar: BnfGrammar,
    pub states: Vec<Lr1MState>,
    pub goto: BTreeMap<(usize, BSym), usize>,
}

impl Lr1Automaton {
    /// A state with no outgoing transitions whose items are all complete.
    pub fn is_sink(&self, i: usize) -> bool {
        !self.goto.keys().any(|&(j, _)| j == i)
            && self.states[i]
                .items
                .iter()
                .all(|it| it.dot == self.grammar.rules[it.rule].1.len())
    }

    pub fn describe(&self) -> String {
        let mut out = String::new();
        for (i, st) in self.states.iter().enumerate() {
            let _ = writeln!(out, "state {i}{}", if self.is_sink(i) { " (sink)" } else { "" });
            let mut grouped: BTreeMap<(usize, usize), Vec<&str>> = BTreeMap::new();
            for it in &st.items {
                grouped.entry((it.rule, it.dot)).or_default().push(self.grammar.term_name(it.la));
            }
            for ((r, d), las) in grouped {
                let (lhs, rhs) = &self.grammar.rules[r];
                let mut body: Vec<&str> = rhs.iter().map(|&x| self.grammar.sym_name(x)).collect();
                body.insert(d, "•");
                let _ = writeln!(
                    out,
                    "  {} -> {} , {}",
                    self.grammar.nonterminals[*lhs],
                    body.join(" "),
                    las.join(" ")
                );
            }
        }
        out
    }
}

struct First {
    nullable: Vec<bool>,
    first: Vec<BTreeSet<TermId>>,
}

fn compute_first(g: &BnfGrammar) -> First {
    let n = g.nonterminals.len();
    let mut nullable = vec![false; n];
    let mut first = vec![BTreeSet::new(); n];
    let mut changed = true;
    while changed {
        changed = false;
        for (lhs, rhs) in &g.rules {
            let mut add = BTreeSet::new();
            let mut all_nullable = true;
            for &x in rhs {
                match x {
                    BSym::T(t) => {
                        add.insert(t);
                        all_nullable = false;
                    }
                    BSym::N(b) => {
                        add.extend(first[b].iter().copied());
                        all_nullable = nullable[b];
                    }
                }
                if !all_nullable {
                    break;
                }
            }
            let before = first[*lhs].len();
            first[*lhs].extend(add);
            if first[*lhs].len() != before || (all_nullable && !nullable[*lhs]) {
                changed = true;
            }
            nullable[*lhs] |= all_nullable;
        }
    }
    First { nullable, first }
}

impl First {
    fn of_suffix(&self, seq: &[BSym], la: TermId) -> BTreeSet<TermId> {
        let mut out = BTreeSet::new();
        for &x in seq {
            match x {
                BSym::T(t) => {
                    out.insert(t);
                    return out;
                }
                BSym::N(b) => {
                    out.extend(self.first[b].iter().copied());
                    if !self.nullable[b] {
                        return out;
                    }
                }
            }
        }
        out.insert(la);
        out
    }
}

fn closure(g: &BnfGrammar, first: &First, seed: BTreeSet<Lr1Item>) -> BTreeSet<Lr1Item> {
    let mut items = seed;
    let mut work: Vec<Lr1Item> = items.iter().copied().collect();
    while let Some(it) = work.pop() {
        let rhs = &g.rules[it.rule].1;
        let Some(&BSym::N(b)) = rhs.get(it.dot) else { continue };
        let las = first.of_suffix(&rhs[it.dot + 1..], it.la);
        for (r, (lhs, _)) in g.rules.iter().enumerate() {
            if *lhs != b {
                continue;
            }
            for &la in &las {
                let new = Lr1Item { rule: r, dot: 0, la };
                if items.insert(new) {
                    work.push(new);
                }
            }
        }
    }
    items
}

/// Builds the canonical LR(1) collection, numbering states in breadth-first
/// discovery order with symbols in order.
pub fn build_lr1_pilot(g: &BnfGrammar) -> Lr1Automaton {
    let first = compute_first(g);
    let seed = g
        .rules
        .iter()
        .enumerate()
        .filter(|(_, (lhs, _))| *lhs == g.axiom)
        .map(|(r, _)| Lr1Item {
            rule: r,
            dot: 0,
            la: TermId::END,
        })
        .collect();
    let i0 = Lr1MState {
        items: closure(g, &first, seed),
    };
    let mut index = HashMap::from([(i0.clone(), 0usize)]);
    let mut states = vec![i0];
    let mut goto = BTreeMap::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let mut by_symbol: BTreeMap<BSym, BTreeSet<Lr1Item>> = BTreeMap::new();
        for it in &states[i].items {
            if let Some(&x) = g.rules[it.rule].1.get(it.dot) {
                by_symbol.entry(x).or_default().insert(Lr1Item {
                    dot: it.dot + 1,
                    ..*it
                });
            }
        }
        for (x, kernel) in by_symbol {
            let target = Lr1MState {
                items: closure(g, &first, kernel),
            };
            let j = *index.entry(target.clone()).or_insert_with(|| {
                states.push(target);
                queue.push_back(states.len() - 1);
                states.len() - 1
            });
            goto.insert((i, x), j);
        }
    }
    Lr1Automaton {
        grammar: g.clone(),
        states,
        goto,
    }
}

/// Shift-reduce and reduce-reduce conflicts of an LR(1) automaton.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lr1ConflictReport {
    /// (state, completed rule, terminal also shifted)
    pub shift_reduce: Vec<(usize, usize, TermId)>,
    /// (state, first rule, second rule, shared look-ahead)
    pub reduce_reduce: Vec<(usize, usize, usize, TermId)>,
}

impl Lr1ConflictReport {
    pub fn is_clean(&self) -> bool {
        self.shift_reduce.is_empty() && self.reduce_reduce.is_empty()
    }

    pub fn describe(&self, g: &BnfGrammar) -> Vec<String> {
        let mut out = Vec::new();
        for &(i, r, t) in &self.shift_reduce {
            out.push(format!(
                "shift-reduce conflict in state {i}: reduce {} on {} vs shift",
                g.rule_string(r),
                g.term_name(t)
            ));
        }
        for &(i, r1, r2, t) in &self.reduce_reduce {
            out.push(format!(
                "reduce-reduce conflict in state {i}: {} vs {} on {}",
                g.rule_string(r1),
                g.rule_string(r2),
                g.term_name(t)
            ));
        }
        out
    }
}

/// Lists every conflict.
pub fn check_lr1(a: &Lr1Automaton) -> Lr1ConflictReport {
    let mut report = Lr1ConflictReport::default();
    for (i, st) in a.states.iter().enumerate() {
        let complete: Vec<&Lr1Item> = st
            .items
            .iter()
            .filter(|it| it.dot == a.grammar.rules[it.rule].1.len())
            .collect();
        for it in &complete {
            if !it.la.is_end() && a.goto.contains_key(&(i, BSym::T(it.la))) {
                report.shift_reduce.push((i, it.rule, it.la));
            }
        }
        for (k, x) in complete.iter().enumerate() {
            for y in &complete[k + 1..] {
                if x.la == y.la && x.rule != y.rule {
                    report.reduce_reduce.push((i, x.rule, y.rule, x.la));
                }
            }
        }
    }
    report
}
