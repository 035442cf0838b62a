//! Machine nets: one deterministic finite machine per nonterminal.
//!
//! Every identifier is a small integer. Terminal and nonterminal ids are
//! assigned in lexicographic order of their names, so the derived ordering of
//! [`Symbol`] (terminals first, then nonterminals) is the symbol order used
//! for state numbering, worklists and printing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

/// A terminal symbol, or the reserved end marker [`TermId::END`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermId(pub u32);

impl TermId {
    /// The end-of-input marker. Sorts after every real terminal.
    pub const END: TermId = TermId(u32::MAX);

    pub fn is_end(self) -> bool {
        self == Self::END
    }
}

/// A nonterminal; also indexes its machine inside the net.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NtId(pub u32);

/// An edge label: a terminal or a nonterminal (a call site).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    T(TermId),
    N(NtId),
}

/// A machine state, globally unique across the net: state `q` of the machine
/// owned by `nt`, printed as `q_Name`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId {
    pub nt: NtId,
    pub q: u32,
}

/// A look-ahead (or prospect, or guide) set of terminals, possibly with the
/// end marker.
pub type LaSet = BTreeSet<TermId>;

/// Printed form of the end marker.
pub const END_MARKER: &str = "-|";

/// A deterministic finite machine over terminals and nonterminals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Machine {
    pub owner: NtId,
    pub num_states: u32,
    pub initial: u32,
    pub finals: BTreeSet<u32>,
    pub delta: BTreeMap<(u32, Symbol), u32>,
}

impl Machine {
    /// Outgoing edges of local state `q`, in symbol order.
    pub fn edges_from(&self, q: u32) -> impl Iterator<Item = (Symbol, u32)> + '_ {
        let lo = (q, Symbol::T(TermId(0)));
        self.delta
            .range(lo..)
            .take_while(move |((p, _), _)| *p == q)
            .map(|((_, x), r)| (*x, *r))
    }

    pub fn step(&self, q: u32, x: Symbol) -> Option<u32> {
        self.delta.get(&(q, x)).copied()
    }

    pub fn is_final(&self, q: u32) -> bool {
        self.finals.contains(&q)
    }

    /// True when some edge re-enters the initial state.
    pub fn reenters_initial(&self) -> bool {
        self.delta.values().any(|&r| r == self.initial)
    }

    /// Whether the machine accepts the given label string.
    pub fn accepts(&self, word: &[Symbol]) -> bool {
        let mut q = self.initial;
        for &x in word {
            match self.step(q, x) {
                Some(r) => q = r,
                None => return false,
            }
        }
        self.is_final(q)
    }

    /// Checks determinism-independent structural invariants: every state is
    /// reachable from the initial state and co-reachable to a final state.
    pub fn is_reduced(&self) -> bool {
        let n = self.num_states as usize;
        let mut fwd = vec![false; n];
        let mut stack = vec![self.initial];
        fwd[self.initial as usize] = true;
        while let Some(q) = stack.pop() {
            for (_, r) in self.edges_from(q) {
                if !fwd[r as usize] {
                    fwd[r as usize] = true;
                    stack.push(r);
                }
            }
        }
        let mut back = vec![false; n];
        for &f in &self.finals {
            back[f as usize] = true;
        }
        let mut changed = true;
        while changed {
            changed = false;
            for (&(p, _), &r) in &self.delta {
                if back[r as usize] && !back[p as usize] {
                    back[p as usize] = true;
                    changed = true;
                }
            }
        }
        fwd.iter().zip(&back).all(|(a, b)| *a && *b)
    }
}

/// Structural problems found when assembling a net from raw machines.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetError {
    #[error("machine list does not match the nonterminal list")]
    MachineCount,
    #[error("machine {0} is owned by a different nonterminal")]
    WrongOwner(String),
    #[error("machine {0} has a state or edge out of range")]
    OutOfRange(String),
    #[error("machine {0} is not reduced (unreachable or dead states)")]
    NotReduced(String),
    #[error("machine {0} re-enters its initial state")]
    NotNormalized(String),
    #[error("terminal names must be sorted, unique and not the end marker")]
    BadTerminals,
    #[error("nonterminal names must be sorted and unique")]
    BadNonterminals,
    #[error("axiom is out of range")]
    BadAxiom,
}

/// A collection of machines, one per nonterminal, with a distinguished axiom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineNet {
    pub terminals: Vec<String>,
    pub nonterminals: Vec<String>,
    pub axiom: NtId,
    pub machines: Vec<Machine>,
}

/// Token names that do not belong to the terminal alphabet.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown token `{token}` at index {index}")]
pub struct TokenError {
    pub token: String,
    pub index: usize,
}

impl MachineNet {
    /// Assembles a net, checking every structural invariant: names sorted and
    /// unique, machines deterministic (by construction), reduced and
    /// normalized, and every edge label in range.
    pub fn new(
        terminals: Vec<String>,
        nonterminals: Vec<String>,
        axiom: NtId,
        machines: Vec<Machine>,
    ) -> Result<Self, NetError> {
        if terminals.windows(2).any(|w| w[0] >= w[1]) || terminals.iter().any(|t| t == END_MARKER)
        {
            return Err(NetError::BadTerminals);
        }
        if nonterminals.windows(2).any(|w| w[0] >= w[1]) {
            return Err(NetError::BadNonterminals);
        }
        if axiom.0 as usize >= nonterminals.len() {
            return Err(NetError::BadAxiom);
        }
        if machines.len() != nonterminals.len() {
            return Err(NetError::MachineCount);
        }
        for (i, m) in machines.iter().enumerate() {
            let name = nonterminals[i].clone();
            if m.owner.0 as usize != i {
                return Err(NetError::WrongOwner(name));
            }
            let in_range = |x: &Symbol| match x {
                Symbol::T(t) => (t.0 as usize) < terminals.len(),
                Symbol::N(n) => (n.0 as usize) < nonterminals.len(),
            };
            if m.initial >= m.num_states
                || m.finals.iter().any(|&f| f >= m.num_states)
                || m
                    .delta
                    .iter()
                    .any(|(&(p, x), &r)| p >= m.num_states || r >= m.num_states || !in_range(&x))
            {
                return Err(NetError::OutOfRange(name));
            }
            if !m.is_reduced() {
                return Err(NetError::NotReduced(name));
            }
            if m.reenters_initial() {
                return Err(NetError::NotNormalized(name));
            }
        }
        Ok(MachineNet {
            terminals,
            nonterminals,
            axiom,
            machines,
        })
    }

    pub fn machine(&self, nt: NtId) -> &Machine {
        &self.machines[nt.0 as usize]
    }

    pub fn initial(&self, nt: NtId) -> StateId {
        StateId {
            nt,
            q: self.machine(nt).initial,
        }
    }

    pub fn is_initial(&self, s: StateId) -> bool {
        self.machine(s.nt).initial == s.q
    }

    pub fn is_final(&self, s: StateId) -> bool {
        self.machine(s.nt).is_final(s.q)
    }

    pub fn delta(&self, s: StateId, x: Symbol) -> Option<StateId> {
        self.machine(s.nt).step(s.q, x).map(|q| StateId { nt: s.nt, q })
    }

    /// Outgoing edges of `s`, in symbol order.
    pub fn edges(&self, s: StateId) -> impl Iterator<Item = (Symbol, StateId)> + '_ {
        self.machine(s.nt)
            .edges_from(s.q)
            .map(move |(x, q)| (x, StateId { nt: s.nt, q }))
    }

    /// Every state of the net, sorted by (machine, local number).
    pub fn states(&self) -> Vec<StateId> {
        self.machines
            .iter()
            .flat_map(|m| (0..m.num_states).map(move |q| StateId { nt: m.owner, q }))
            .collect()
    }

    pub fn nonterminal_ids(&self) -> impl Iterator<Item = NtId> {
        (0..self.nonterminals.len() as u32).map(NtId)
    }

    pub fn terminal_ids(&self) -> impl Iterator<Item = TermId> {
        (0..self.terminals.len() as u32).map(TermId)
    }

    pub fn num_states(&self) -> usize {
        self.machines.iter().map(|m| m.num_states as usize).sum()
    }

    pub fn term_name(&self, t: TermId) -> &str {
        if t.is_end() {
            END_MARKER
        } else {
            &self.terminals[t.0 as usize]
        }
    }

    pub fn nt_name(&self, n: NtId) -> &str {
        &self.nonterminals[n.0 as usize]
    }

    pub fn sym_name(&self, x: Symbol) -> &str {
        match x {
            Symbol::T(t) => self.term_name(t),
            Symbol::N(n) => self.nt_name(n),
        }
    }

    pub fn state_name(&self, s: StateId) -> String {
        format!("{}_{}", s.q, self.nt_name(s.nt))
    }

    /// Space-separated look-ahead set, e.g. `a ( -|`.
    pub fn la_string(&self, la: &LaSet) -> String {
        let mut out = String::new();
        for (i, &t) in la.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(self.term_name(t));
        }
        out
    }

    pub fn term_id(&self, name: &str) -> Option<TermId> {
        if name == END_MARKER {
            return Some(TermId::END);
        }
        self.terminals
            .binary_search_by(|t| t.as_str().cmp(name))
            .ok()
            .map(|i| TermId(i as u32))
    }

    pub fn nt_id(&self, name: &str) -> Option<NtId> {
        self.nonterminals
            .binary_search_by(|t| t.as_str().cmp(name))
            .ok()
            .map(|i| NtId(i as u32))
    }

    /// Resolves a symbol name, preferring the terminal reading when a name is
    /// both a terminal and a nonterminal.
    pub fn symbol(&self, name: &str) -> Option<Symbol> {
        self.term_id(name)
            .filter(|t| !t.is_end())
            .map(Symbol::T)
            .or_else(|| self.nt_id(name).map(Symbol::N))
    }

    /// Parses a state name of the form `q_Name`.
    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        let (q, nt) = name.split_once('_')?;
        let q: u32 = q.parse().ok()?;
        let nt = self.nt_id(nt)?;
        (q < self.machine(nt).num_states).then_some(StateId { nt, q })
    }

    /// The state reached in machine `nt` from its initial state by reading the
    /// named symbols.
    pub fn state_by_path(&self, nt: &str, path: &[&str]) -> Option<StateId> {
        let mut s = self.initial(self.nt_id(nt)?);
        for name in path {
            s = self.delta(s, self.symbol(name)?)?;
        }
        Some(s)
    }

    /// Converts whitespace-separated token names into terminal ids.
    pub fn tokenize(&self, input: &str) -> Result<Vec<TermId>, TokenError> {
        input
            .split_whitespace()
            .enumerate()
            .map(|(index, tok)| self.lookup_token(tok, index))
            .collect()
    }

    /// Converts every non-whitespace character into a terminal id.
    pub fn tokenize_chars(&self, input: &str) -> Result<Vec<TermId>, TokenError> {
        input
            .chars()
            .filter(|c| !c.is_whitespace())
            .enumerate()
            .map(|(index, c)| self.lookup_token(&c.to_string(), index))
            .collect()
    }

    fn lookup_token(&self, tok: &str, index: usize) -> Result<TermId, TokenError> {
        match self.term_id(tok) {
            Some(t) if !t.is_end() => Ok(t),
            _ => Err(TokenError {
                token: tok.to_string(),
                index,
            }),
        }
    }

    /// Space-separated token names.
    pub fn tokens_string(&self, tokens: &[TermId]) -> String {
        tokens
            .iter()
            .map(|&t| self.term_name(t))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Human-readable listing of every machine.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        for m in &self.machines {
            let _ = writeln!(
                out,
                "machine {} (initial {}, finals {})",
                self.nt_name(m.owner),
                self.state_name(StateId {
                    nt: m.owner,
                    q: m.initial
                }),
                m.finals
                    .iter()
                    .map(|&q| self.state_name(StateId { nt: m.owner, q }))
                    .collect::<Vec<_>>()
                    .join(" ")
            );
            for (&(p, x), &r) in &m.delta {
                let _ = writeln!(
                    out,
                    "  {} --{}--> {}",
                    self.state_name(StateId { nt: m.owner, q: p }),
                    self.sym_name(x),
                    self.state_name(StateId { nt: m.owner, q: r })
                );
            }
        }
        out
    }
}
