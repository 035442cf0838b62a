//! Static analyses over a machine net: nullable states, initial-terminal sets,
//! candidate closure and left-recursion detection.

use std::collections::{BTreeMap, BTreeSet};

use crate::net::{LaSet, MachineNet, NtId, StateId, Symbol};

/// A set of candidates grouped by state: each state maps to its look-ahead
/// set. This is the canonical in-memory form of an m-state.
pub type CandSet = BTreeMap<StateId, LaSet>;

/// Nullability and initial-terminal sets of every state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalysisTables {
    /// `nullable[A][q]`: whether the language accepted from state q of
    /// machine A contains the empty string.
    pub nullable: Vec<Vec<bool>>,
    /// `ini[A][q]`: terminals that can start a string accepted from q.
    pub ini: Vec<Vec<LaSet>>,
}

impl AnalysisTables {
    pub fn compute(net: &MachineNet) -> Self {
        let nullable = compute_nullable(net);
        let ini = compute_ini(net, &nullable);
        AnalysisTables { nullable, ini }
    }

    pub fn nullable(&self, s: StateId) -> bool {
        self.nullable[s.nt.0 as usize][s.q as usize]
    }

    pub fn nt_nullable(&self, net: &MachineNet, a: NtId) -> bool {
        self.nullable(net.initial(a))
    }

    pub fn ini(&self, s: StateId) -> &LaSet {
        &self.ini[s.nt.0 as usize][s.q as usize]
    }

    /// Nonterminals whose language is exactly {ε}.
    pub fn epsilon_only(&self, net: &MachineNet) -> Vec<NtId> {
        net.nonterminal_ids()
            .filter(|&a| self.nt_nullable(net, a) && self.ini(net.initial(a)).is_empty())
            .collect()
    }
}

/// Least fixpoint: q is nullable iff q is final, or some edge q -B→ r has a
/// nullable nonterminal B and a nullable target r.
pub fn compute_nullable(net: &MachineNet) -> Vec<Vec<bool>> {
    let mut nullable: Vec<Vec<bool>> = net
        .machines
        .iter()
        .map(|m| (0..m.num_states).map(|q| m.is_final(q)).collect())
        .collect();
    let states = net.states();
    let mut changed = true;
    while changed {
        changed = false;
        for &s in &states {
            if nullable[s.nt.0 as usize][s.q as usize] {
                continue;
            }
            let hit = net.edges(s).any(|(x, r)| match x {
                Symbol::N(b) => {
                    let b0 = net.initial(b);
                    nullable[b0.nt.0 as usize][b0.q as usize] && nullable[r.nt.0 as usize][r.q as usize]
                }
                Symbol::T(_) => false,
            });
            if hit {
                nullable[s.nt.0 as usize][s.q as usize] = true;
                changed = true;
            }
        }
    }
    nullable
}

/// Least fixpoint of the three clauses: a terminal edge q -a→ contributes a;
/// an edge q -B→ contributes Ini(0_B); and, when B is nullable, the edge
/// q -B→ r also contributes Ini(r).
pub fn compute_ini(net: &MachineNet, nullable: &[Vec<bool>]) -> Vec<Vec<LaSet>> {
    let mut ini: Vec<Vec<LaSet>> = net
        .machines
        .iter()
        .map(|m| vec![LaSet::new(); m.num_states as usize])
        .collect();
    let states = net.states();
    let get = |ini: &Vec<Vec<LaSet>>, s: StateId| ini[s.nt.0 as usize][s.q as usize].clone();
    let mut changed = true;
    while changed {
        changed = false;
        for &s in &states {
            let mut add = LaSet::new();
            for (x, r) in net.edges(s) {
                match x {
                    Symbol::T(t) => {
                        add.insert(t);
                    }
                    Symbol::N(b) => {
                        let b0 = net.initial(b);
                        add.extend(get(&ini, b0));
                        if nullable[b0.nt.0 as usize][b0.q as usize] {
                            add.extend(get(&ini, r));
                        }
                    }
                }
            }
            let cur = &mut ini[s.nt.0 as usize][s.q as usize];
            let before = cur.len();
            cur.extend(add);
            changed |= cur.len() != before;
        }
    }
    ini
}

/// Ini(L(r)·π): the initials of r, plus π when r is nullable.
pub fn ini_followed_by(tables: &AnalysisTables, r: StateId, pi: &LaSet) -> LaSet {
    let mut out = tables.ini(r).clone();
    if tables.nullable(r) {
        out.extend(pi.iter().copied());
    }
    out
}

/// Closure of a candidate set: for every candidate ⟨q, π⟩ and call edge
/// q -B→ r, adds ⟨0_B, Ini(L(r)·π)⟩, until nothing changes. Candidates with
/// equal states are merged by look-ahead union.
pub fn closure(net: &MachineNet, tables: &AnalysisTables, seed: &CandSet) -> CandSet {
    let mut out = seed.clone();
    let mut work: Vec<StateId> = out.keys().copied().collect();
    while let Some(q) = work.pop() {
        let pi = out[&q].clone();
        for (x, r) in net.edges(q) {
            let Symbol::N(b) = x else { continue };
            let la = ini_followed_by(tables, r, &pi);
            if la.is_empty() {
                // Only possible when L(r) is empty; such a call never completes.
                continue;
            }
            let b0 = net.initial(b);
            let entry = out.entry(b0).or_default();
            let before = entry.len();
            entry.extend(la);
            if entry.len() != before {
                work.push(b0);
            }
        }
    }
    out
}

/// The left-recursion graph: an edge A → B when machine A can reach, from
/// its initial state through edges labelled by nullable nonterminals only, a
/// state with an outgoing edge labelled B.
pub fn left_recursion_graph(net: &MachineNet, tables: &AnalysisTables) -> BTreeMap<NtId, BTreeSet<NtId>> {
    let mut graph = BTreeMap::new();
    for a in net.nonterminal_ids() {
        let mut seen = BTreeSet::from([net.initial(a)]);
        let mut stack = vec![net.initial(a)];
        let mut succ = BTreeSet::new();
        while let Some(q) = stack.pop() {
            for (x, r) in net.edges(q) {
                let Symbol::N(b) = x else { continue };
                succ.insert(b);
                if tables.nt_nullable(net, b) && seen.insert(r) {
                    stack.push(r);
                }
            }
        }
        graph.insert(a, succ);
    }
    graph
}

/// Returns a cycle of the left-recursion graph as a list of initial states
/// whose first and last elements coincide, or `None` if the net is not
/// left-recursive.
pub fn detect_left_recursion(net: &MachineNet, tables: &AnalysisTables) -> Option<Vec<StateId>> {
    let graph = left_recursion_graph(net, tables);
    // 0 = unvisited, 1 = on the current path, 2 = done.
    let mut color: BTreeMap<NtId, u8> = BTreeMap::new();
    let mut path: Vec<NtId> = Vec::new();

    fn dfs(
        a: NtId,
        graph: &BTreeMap<NtId, BTreeSet<NtId>>,
        color: &mut BTreeMap<NtId, u8>,
        path: &mut Vec<NtId>,
    ) -> Option<Vec<NtId>> {
        color.insert(a, 1);
        path.push(a);
        for &b in &graph[&a] {
            match color.get(&b).copied().unwrap_or(0) {
                1 => {
                    let start = path.iter().position(|&x| x == b).unwrap();
                    let mut cycle = path[start..].to_vec();
                    cycle.push(b);
                    return Some(cycle);
                }
                0 => {
                    if let Some(c) = dfs(b, graph, color, path) {
                        return Some(c);
                    }
                }
                _ => {}
            }
        }
        path.pop();
        color.insert(a, 2);
        None
    }

    for a in net.nonterminal_ids() {
        if color.get(&a).copied().unwrap_or(0) == 0 {
            if let Some(c) = dfs(a, &graph, &mut color, &mut path) {
                return Some(c.into_iter().map(|n| net.initial(n)).collect());
            }
        }
    }
    None
}
