//! Shared fixtures and brute-force oracles for the integration tests. The
//! oracles only read the raw machines of a net; none of them calls into the
//! analyses, pilots or engines they are used to check.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use netparse::analysis::CandSet;
use netparse::grammar::{load_net, normalize_machine, renumber, BuildOptions, RlRule, RlSymbol};
use netparse::net::{Machine, MachineNet, NtId, StateId, Symbol, TermId};
use netparse::outcome::{Reduction, Tree};
use netparse::pilot::Pilot;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

// ---------------------------------------------------------------------------
// Fixtures

pub fn grammar_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../grammars")
        .join(format!("{name}.g"))
}

/// Loads `grammars/<name>.g`.
pub fn net(name: &str) -> MachineNet {
    let text = std::fs::read_to_string(grammar_path(name)).expect("grammar file");
    load_net(&text, BuildOptions::default()).expect("valid grammar")
}

pub fn net_from(text: &str) -> MachineNet {
    load_net(text, BuildOptions::default()).expect("valid grammar")
}

fn machine(owner: u32, num_states: u32, finals: &[u32], edges: &[(u32, Symbol, u32)]) -> Machine {
    Machine {
        owner: NtId(owner),
        num_states,
        initial: 0,
        finals: finals.iter().copied().collect(),
        delta: edges.iter().map(|&(p, x, r)| ((p, x), r)).collect(),
    }
}

/// The BNF net with rules S → a b c | a b d | b c | A e and A → a S, made
/// deterministic by sharing the `a b` prefix while keeping one final state
/// per alternative.
pub fn bnf_prefix_net() -> MachineNet {
    let t = |i| Symbol::T(TermId(i));
    let (a, b, c, d, e) = (t(0), t(1), t(2), t(3), t(4));
    let (na, ns) = (Symbol::N(NtId(0)), Symbol::N(NtId(1)));
    let m_a = machine(0, 3, &[2], &[(0, a, 1), (1, ns, 2)]);
    let m_s = machine(
        1,
        9,
        &[3, 4, 6, 8],
        &[
            (0, a, 1),
            (1, b, 2),
            (2, c, 3),
            (2, d, 4),
            (0, b, 5),
            (5, c, 6),
            (0, na, 7),
            (7, e, 8),
        ],
    );
    MachineNet::new(
        ["a", "b", "c", "d", "e"].map(String::from).to_vec(),
        vec!["A".into(), "S".into()],
        NtId(1),
        vec![m_a, m_s],
    )
    .expect("valid net")
}

/// The worked-example nets that enter the ELR(1)/LR(1)
/// differential, by role.
pub fn reference_nets() -> Vec<(&'static str, MachineNet)> {
    vec![
        ("paren_list", net("paren_list")),
        ("bnf_prefix", bnf_prefix_net()),
        ("convergent_conflict", net("convergent_conflict")),
        ("convergent", net("convergent")),
        ("multi_base", net("multi_base")),
        ("nested_lists", net("nested_lists")),
    ]
}

/// Every net from the grammar corpus plus the BNF net.
pub fn all_fixture_nets() -> Vec<(&'static str, MachineNet)> {
    let mut v = reference_nets();
    for name in ["two_base", "left_recursive", "hidden_left_recursion"] {
        v.push((name, net(name)));
    }
    v
}

pub fn toks(net: &MachineNet, s: &str) -> Vec<TermId> {
    net.tokenize(s).expect("known tokens")
}

pub fn state(net: &MachineNet, name: &str) -> StateId {
    net.state_by_name(name).unwrap_or_else(|| panic!("no state {name}"))
}

pub fn la(net: &MachineNet, names: &[&str]) -> BTreeSet<TermId> {
    names.iter().map(|n| net.term_id(n).expect("terminal")).collect()
}

// ---------------------------------------------------------------------------
// Pilot fixtures

pub fn cands(net: &MachineNet, items: &[(&str, &[&str])]) -> CandSet {
    items.iter().map(|&(s, l)| (state(net, s), la(net, l))).collect()
}

pub fn find(pilot: &Pilot, c: &CandSet) -> usize {
    let hits: Vec<usize> = (0..pilot.len()).filter(|&i| &pilot.mstates[i].cands == c).collect();
    assert_eq!(hits.len(), 1, "m-state {c:?} should occur exactly once");
    hits[0]
}

/// The nine m-states of the running example's pilot, by content.
pub fn running_mstates(net: &MachineNet) -> Vec<CandSet> {
    let all = ["a", "(", "-|"];
    let inner = ["a", "(", ")"];
    vec![
        cands(net, &[("0_E", &["-|"]), ("0_T", &all)]),
        cands(net, &[("1_E", &["-|"]), ("0_T", &all)]),
        cands(net, &[("3_T", &all)]),
        cands(net, &[("1_T", &all), ("0_E", &[")"]), ("0_T", &inner)]),
        cands(net, &[("1_E", &[")"]), ("0_T", &inner)]),
        cands(net, &[("3_T", &inner)]),
        cands(net, &[("1_T", &inner), ("0_E", &[")"]), ("0_T", &inner)]),
        cands(net, &[("2_T", &inner)]),
        cands(net, &[("2_T", &all)]),
    ]
}

// ---------------------------------------------------------------------------
// Membership and language enumeration

/// Substring derivability over the right-linearized reading of the net:
/// `table[s][i][j]` holds when the language of state `s` contains
/// `tokens[i..j]`. Computed as a least fixpoint, so nullable cycles are fine.
pub struct Derives {
    index: HashMap<StateId, usize>,
    n: usize,
    table: Vec<Vec<Vec<bool>>>,
}

impl Derives {
    pub fn new(net: &MachineNet, tokens: &[TermId]) -> Self {
        let states = all_states(net);
        let index: HashMap<StateId, usize> = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let n = tokens.len();
        let mut table = vec![vec![vec![false; n + 1]; n + 1]; states.len()];
        let edges: Vec<Vec<(Symbol, usize)>> = states
            .iter()
            .map(|s| {
                let m = &net.machines[s.nt.0 as usize];
                m.delta
                    .iter()
                    .filter(|((p, _), _)| *p == s.q)
                    .map(|(&(_, x), &r)| (x, index[&StateId { nt: s.nt, q: r }]))
                    .collect()
            })
            .collect();
        let init: Vec<usize> = net
            .machines
            .iter()
            .map(|m| index[&StateId { nt: m.owner, q: m.initial }])
            .collect();
        let mut changed = true;
        while changed {
            changed = false;
            for (si, s) in states.iter().enumerate() {
                let fin = net.machines[s.nt.0 as usize].finals.contains(&s.q);
                for i in 0..=n {
                    for j in i..=n {
                        if table[si][i][j] {
                            continue;
                        }
                        let mut ok = fin && i == j;
                        for &(x, r) in &edges[si] {
                            if ok {
                                break;
                            }
                            match x {
                                Symbol::T(t) => ok = i < j && tokens[i] == t && table[r][i + 1][j],
                                Symbol::N(b) => {
                                    let b0 = init[b.0 as usize];
                                    ok = (i..=j).any(|k| table[b0][i][k] && table[r][k][j]);
                                }
                            }
                        }
                        if ok {
                            table[si][i][j] = true;
                            changed = true;
                        }
                    }
                }
            }
        }
        Derives { index, n, table }
    }

    pub fn holds(&self, s: StateId, i: usize, j: usize) -> bool {
        self.table[self.index[&s]][i][j]
    }

    pub fn len(&self) -> usize {
        self.n
    }
}

fn all_states(net: &MachineNet) -> Vec<StateId> {
    net.machines
        .iter()
        .flat_map(|m| (0..m.num_states).map(move |q| StateId { nt: m.owner, q }))
        .collect()
}

/// Brute-force membership of a token string in the net's language.
pub fn member(net: &MachineNet, tokens: &[TermId]) -> bool {
    let d = Derives::new(net, tokens);
    let s0 = StateId {
        nt: net.axiom,
        q: net.machines[net.axiom.0 as usize].initial,
    };
    d.holds(s0, 0, tokens.len())
}

/// Every string over the net's terminals of length at most `max`.
pub fn all_strings(net: &MachineNet, max: usize) -> Vec<Vec<TermId>> {
    let sigma: Vec<TermId> = (0..net.terminals.len() as u32).map(TermId).collect();
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max {
        let mut next = Vec::new();
        for w in &layer {
            for &a in &sigma {
                let mut v: Vec<TermId> = w.clone();
                v.push(a);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// The strings of length at most `max` generated by a right-linearized
/// grammar, computed bottom-up over its rules: each state's set grows from
/// its ε rule, terminal rules and call rules until nothing changes.
pub fn rl_language(net: &MachineNet, rules: &[RlRule], max: usize) -> BTreeSet<Vec<TermId>> {
    let mut lang: BTreeMap<StateId, BTreeSet<Vec<TermId>>> = BTreeMap::new();
    let mut changed = true;
    while changed {
        changed = false;
        for r in rules {
            let add: Vec<Vec<TermId>> = match r.rhs {
                None => vec![Vec::new()],
                Some((RlSymbol::Terminal(t), q)) => lang
                    .get(&q)
                    .into_iter()
                    .flatten()
                    .filter(|w| w.len() < max)
                    .map(|w| {
                        let mut v = vec![t];
                        v.extend(w);
                        v
                    })
                    .collect(),
                Some((RlSymbol::Call(b), q)) => {
                    let empty = BTreeSet::new();
                    let lb = lang.get(&b).unwrap_or(&empty);
                    let lq = lang.get(&q).unwrap_or(&empty);
                    let mut v = Vec::new();
                    for u in lb {
                        for w in lq {
                            if u.len() + w.len() <= max {
                                let mut x = u.clone();
                                x.extend(w);
                                v.push(x);
                            }
                        }
                    }
                    v
                }
            };
            let set = lang.entry(r.lhs).or_default();
            for w in add {
                changed |= set.insert(w);
            }
        }
    }
    lang.remove(&StateId {
        nt: net.axiom,
        q: net.machines[net.axiom.0 as usize].initial,
    })
    .unwrap_or_default()
}

/// Whether the machine's language (over labels) agrees on every label string
/// of length at most `max`.
pub fn same_label_language(m1: &Machine, m2: &Machine, alphabet: &[Symbol], max: usize) -> bool {
    let mut layer: Vec<Vec<Symbol>> = vec![Vec::new()];
    for len in 0..=max {
        if layer.iter().any(|w| m1.accepts(w) != m2.accepts(w)) {
            return false;
        }
        if len == max {
            break;
        }
        layer = layer
            .iter()
            .flat_map(|w| {
                alphabet.iter().map(move |&x| {
                    let mut v = w.clone();
                    v.push(x);
                    v
                })
            })
            .collect();
    }
    true
}

// ---------------------------------------------------------------------------
// Earley invariant

/// Whether the right-linearized grammar derives `0_A ⇒* x_{j+1}…x_i q_A`,
/// i.e. some path of machine A from its initial state to `q` spells
/// `tokens[j..i]` when each nonterminal label is expanded to a derivable
/// substring.
pub fn prefix_path(net: &MachineNet, d: &Derives, tokens: &[TermId], q: StateId, j: usize, i: usize) -> bool {
    let m = &net.machines[q.nt.0 as usize];
    let mut seen: BTreeSet<(u32, usize)> = BTreeSet::new();
    let mut stack = vec![(m.initial, j)];
    while let Some((p, k)) = stack.pop() {
        if !seen.insert((p, k)) {
            continue;
        }
        if p == q.q && k == i {
            return true;
        }
        for (&(src, x), &r) in &m.delta {
            if src != p {
                continue;
            }
            match x {
                Symbol::T(t) => {
                    if k < i && tokens[k] == t {
                        stack.push((r, k + 1));
                    }
                }
                Symbol::N(b) => {
                    let b0 = StateId {
                        nt: b,
                        q: net.machines[b.0 as usize].initial,
                    };
                    for h in k..=i {
                        if d.holds(b0, k, h) {
                            stack.push((r, h));
                        }
                    }
                }
            }
        }
    }
    false
}

// ---------------------------------------------------------------------------
// Tree and derivation replays

/// Checks that every internal node's children spell a string its machine
/// accepts and that the frontier equals the input.
pub fn tree_is_valid(net: &MachineNet, tree: &Tree, tokens: &[TermId]) -> bool {
    fn nodes_ok(net: &MachineNet, t: &Tree) -> bool {
        match t {
            Tree::Node(nt, cs) => {
                net.machines[nt.0 as usize].accepts(&t.child_labels()) && cs.iter().all(|c| nodes_ok(net, c))
            }
            _ => true,
        }
    }
    matches!(tree, Tree::Node(nt, _) if *nt == net.axiom) && nodes_ok(net, tree) && tree.frontier() == tokens
}

/// Replays the reductions, last first, as a rightmost derivation of the
/// input from the axiom; every handle must be accepted by its machine.
pub fn replay_rightmost(net: &MachineNet, reductions: &[Reduction], tokens: &[TermId]) -> bool {
    let mut form = vec![Symbol::N(net.axiom)];
    for r in reductions.iter().rev() {
        let Some(pos) = form.iter().rposition(|x| matches!(x, Symbol::N(_))) else {
            return false;
        };
        if form[pos] != Symbol::N(r.nt) || !net.machines[r.nt.0 as usize].accepts(&r.handle) {
            return false;
        }
        form.splice(pos..=pos, r.handle.iter().copied());
    }
    form == tokens.iter().map(|&t| Symbol::T(t)).collect::<Vec<_>>()
}

/// Replays right-linearized productions leftmost from the axiom's initial
/// state; the final sentential form must be the input.
pub fn replay_leftmost(net: &MachineNet, rules: &[RlRule], tokens: &[TermId]) -> bool {
    #[derive(Clone, Copy, PartialEq)]
    enum F {
        T(TermId),
        S(StateId),
    }
    let s0 = StateId {
        nt: net.axiom,
        q: net.machines[net.axiom.0 as usize].initial,
    };
    let mut form = vec![F::S(s0)];
    for r in rules {
        let Some(pos) = form.iter().position(|x| matches!(x, F::S(_))) else {
            return false;
        };
        if form[pos] != F::S(r.lhs) {
            return false;
        }
        let m = &net.machines[r.lhs.nt.0 as usize];
        let rhs = match r.rhs {
            None => {
                if !m.finals.contains(&r.lhs.q) {
                    return false;
                }
                vec![]
            }
            Some((RlSymbol::Terminal(t), q)) => {
                if m.step(r.lhs.q, Symbol::T(t)) != Some(q.q) || q.nt != r.lhs.nt {
                    return false;
                }
                vec![F::T(t), F::S(q)]
            }
            Some((RlSymbol::Call(b), q)) => {
                if m.step(r.lhs.q, Symbol::N(b.nt)) != Some(q.q) || q.nt != r.lhs.nt {
                    return false;
                }
                vec![F::S(b), F::S(q)]
            }
        };
        form.splice(pos..=pos, rhs);
    }
    form == tokens.iter().map(|&t| F::T(t)).collect::<Vec<_>>()
}

// ---------------------------------------------------------------------------
// Recursive-descent pseudo-code interpreter

#[derive(Debug, Clone)]
enum Action {
    Next,
    Call(String),
    Goto(String),
    Return,
    Accept,
    Error,
}

#[derive(Debug, Default, Clone)]
struct Branch {
    /// `None` for the trailing `else`.
    guard: Option<BTreeSet<String>>,
    actions: Vec<Action>,
}

#[derive(Debug, Default)]
pub struct RdProgram {
    main: Vec<Branch>,
    procs: BTreeMap<String, (String, BTreeMap<String, Vec<Branch>>)>,
}

fn guard_set(line: &str) -> BTreeSet<String> {
    let open = line.find('{').expect("guard set");
    let close = line.rfind('}').expect("guard set");
    line[open + 1..close].split_whitespace().map(String::from).collect()
}

fn action(line: &str) -> Option<Action> {
    Some(match line {
        "cc := next" => Action::Next,
        "return" => Action::Return,
        "accept" => Action::Accept,
        "error" => Action::Error,
        _ => {
            if let Some(x) = line.strip_prefix("call ") {
                Action::Call(x.to_string())
            } else if let Some(q) = line.strip_prefix("state := ") {
                Action::Goto(q.to_string())
            } else {
                return None;
            }
        }
    })
}

impl RdProgram {
    /// Reads the emitted pseudo-code by keyword, ignoring indentation.
    pub fn parse(text: &str) -> RdProgram {
        let mut prog = RdProgram::default();
        let mut current: Option<String> = None;
        let mut state: Option<String> = None;
        let mut branches: Vec<Branch> = Vec::new();
        let mut in_main = false;
        for raw in text.lines() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if line == "program" {
                in_main = true;
                prog.main.push(Branch {
                    guard: None,
                    actions: Vec::new(),
                });
            } else if line == "end program" {
                in_main = false;
            } else if let Some(name) = line.strip_prefix("procedure ") {
                current = Some(name.to_string());
                prog.procs.insert(name.to_string(), (String::new(), BTreeMap::new()));
            } else if line == "end procedure" {
                if let (Some(p), Some(s)) = (&current, state.take()) {
                    prog.procs.get_mut(p).unwrap().1.insert(s, std::mem::take(&mut branches));
                }
                current = None;
            } else if line.starts_with("if state = ") || line.starts_with("else if state = ") {
                let p = current.clone().expect("inside a procedure");
                if let Some(s) = state.take() {
                    prog.procs.get_mut(&p).unwrap().1.insert(s, std::mem::take(&mut branches));
                }
                let q = line.rsplit("state = ").next().unwrap().trim_end_matches(" then");
                state = Some(q.to_string());
            } else if line.starts_with("if cc in ") || line.starts_with("else if cc in ") {
                let b = Branch {
                    guard: Some(guard_set(line)),
                    actions: Vec::new(),
                };
                if in_main {
                    prog.main.push(b);
                } else {
                    branches.push(b);
                }
            } else if line == "else" {
                let b = Branch::default();
                if in_main {
                    prog.main.push(b);
                } else {
                    branches.push(b);
                }
            } else if let Some(q) = line.strip_prefix("state := ").filter(|_| state.is_none() && current.is_some()) {
                let p = current.clone().unwrap();
                prog.procs.get_mut(&p).unwrap().0 = q.to_string();
            } else if let Some(a) = action(line) {
                let target = if in_main { prog.main.last_mut() } else { branches.last_mut() };
                target.expect("an open branch").actions.push(a);
            }
        }
        prog
    }

    pub fn procedures(&self) -> Vec<String> {
        self.procs.keys().cloned().collect()
    }

    /// Runs the program on token names; `true` iff it reaches `accept`.
    pub fn run(&self, tokens: &[&str]) -> bool {
        let mut rt = Runtime {
            prog: self,
            tokens,
            pos: 0,
            cc: "",
            fuel: 100_000,
        };
        rt.run_main().unwrap_or(false)
    }
}

struct Runtime<'a> {
    prog: &'a RdProgram,
    tokens: &'a [&'a str],
    pos: usize,
    cc: &'a str,
    fuel: usize,
}

enum Flow {
    Continue,
    Return,
    Accept,
}

impl<'a> Runtime<'a> {
    fn next(&mut self) {
        self.cc = self.tokens.get(self.pos).copied().unwrap_or("-|");
        self.pos += 1;
    }

    fn exec(&mut self, actions: &[Action], state: &mut String) -> Option<Flow> {
        for a in actions {
            match a {
                Action::Next => self.next(),
                Action::Call(x) => self.call(x)?,
                Action::Goto(q) => *state = q.clone(),
                Action::Return => return Some(Flow::Return),
                Action::Accept => return Some(Flow::Accept),
                Action::Error => return None,
            }
        }
        Some(Flow::Continue)
    }

    fn choose<'b>(&self, branches: &'b [Branch]) -> Option<&'b Branch> {
        branches.iter().find(|b| b.guard.as_ref().map_or(true, |g| g.contains(self.cc)))
    }

    fn run_main(&mut self) -> Option<bool> {
        let mut dummy = String::new();
        let first = self.prog.main.first()?;
        self.exec(&first.actions, &mut dummy)?;
        let b = self.choose(&self.prog.main[1..])?;
        Some(matches!(self.exec(&b.actions, &mut dummy)?, Flow::Accept))
    }

    fn call(&mut self, name: &str) -> Option<()> {
        let (init, states) = self.prog.procs.get(name)?;
        let mut state = init.clone();
        loop {
            self.fuel = self.fuel.checked_sub(1)?;
            let branches = states.get(&state)?;
            let b = self.choose(branches)?;
            match self.exec(&b.actions, &mut state)? {
                Flow::Continue => {}
                Flow::Return => return Some(()),
                Flow::Accept => return None,
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Random nets

const NT_NAMES: [&str; 3] = ["S", "A", "B"];
const T_NAMES: [&str; 3] = ["a", "b", "c"];

fn random_regex(rng: &mut StdRng, syms: &[String], depth: u32) -> String {
    let leaf = depth == 0 || rng.gen_bool(0.35);
    if leaf {
        if rng.gen_bool(0.1) {
            return "%empty".into();
        }
        return syms.choose(rng).unwrap().clone();
    }
    match rng.gen_range(0..4) {
        0 => format!(
            "( {} | {} )",
            random_regex(rng, syms, depth - 1),
            random_regex(rng, syms, depth - 1)
        ),
        1 | 2 => format!(
            "{} {}",
            random_regex(rng, syms, depth - 1),
            random_regex(rng, syms, depth - 1)
        ),
        _ => {
            let op = ["*", "+", "?"].choose(rng).unwrap();
            format!("( {} ){op}", random_regex(rng, syms, depth - 1))
        }
    }
}

/// A random grammar text with 1–3 nonterminals over 1–3 terminals.
pub fn random_grammar_text(rng: &mut StdRng) -> String {
    let k = rng.gen_range(1..=3);
    let sigma = rng.gen_range(1..=3);
    let mut syms: Vec<String> = T_NAMES[..sigma].iter().map(|t| format!("'{t}'")).collect();
    syms.extend(NT_NAMES[..k].iter().map(|s| s.to_string()));
    let mut text = String::new();
    for a in &NT_NAMES[..k] {
        let alts: Vec<String> = (0..rng.gen_range(1..=2)).map(|_| random_regex(rng, &syms, 2)).collect();
        text.push_str(&format!("{a} : {} ;\n", alts.join(" | ")));
    }
    text
}

/// Nonterminals with a non-empty language, by least fixpoint over machine
/// paths using only terminal edges and edges of already productive
/// nonterminals.
fn productive(net: &MachineNet) -> Vec<bool> {
    let mut prod = vec![false; net.machines.len()];
    let mut changed = true;
    while changed {
        changed = false;
        for (i, m) in net.machines.iter().enumerate() {
            if prod[i] {
                continue;
            }
            let mut live: BTreeSet<u32> = m.finals.clone();
            let mut grow = true;
            while grow {
                grow = false;
                for (&(p, x), r) in &m.delta {
                    let usable = match x {
                        Symbol::T(_) => true,
                        Symbol::N(b) => prod[b.0 as usize],
                    };
                    if usable && live.contains(r) && live.insert(p) {
                        grow = true;
                    }
                }
            }
            if live.contains(&m.initial) {
                prod[i] = true;
                changed = true;
            }
        }
    }
    prod
}

/// Whether every nonterminal is productive and reachable from the axiom.
pub fn is_clean_net(net: &MachineNet) -> bool {
    if !productive(net).iter().all(|&p| p) {
        return false;
    }
    let mut seen = BTreeSet::from([net.axiom]);
    let mut stack = vec![net.axiom];
    while let Some(a) = stack.pop() {
        for (&(_, x), _) in &net.machines[a.0 as usize].delta {
            if let Symbol::N(b) = x {
                if seen.insert(b) {
                    stack.push(b);
                }
            }
        }
    }
    seen.len() == net.machines.len()
}

/// Whether some nonterminal derives itself (A ⇒+ A). Such a net has
/// infinitely many trees for every sentence whose derivation passes the cycle.
pub fn has_circular_derivation(net: &MachineNet) -> bool {
    let d = Derives::new(net, &[]);
    let nullable = |s: StateId| d.holds(s, 0, 0);
    // unit[A] = nonterminals B with A ⇒ αBβ where α and β are nullable.
    let mut unit: BTreeMap<NtId, BTreeSet<NtId>> = BTreeMap::new();
    for m in &net.machines {
        let mut reach = BTreeSet::from([m.initial]);
        let mut stack = vec![m.initial];
        while let Some(q) = stack.pop() {
            for (x, r) in m.edges_from(q) {
                let Symbol::N(b) = x else { continue };
                let target = StateId { nt: m.owner, q: r };
                if nullable(target) {
                    unit.entry(m.owner).or_default().insert(b);
                }
                if nullable(net.initial(b)) && reach.insert(r) {
                    stack.push(r);
                }
            }
        }
    }
    net.nonterminal_ids().any(|a| {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<NtId> = unit.get(&a).into_iter().flatten().copied().collect();
        while let Some(b) = stack.pop() {
            if b == a {
                return true;
            }
            if seen.insert(b) {
                stack.extend(unit.get(&b).into_iter().flatten().copied());
            }
        }
        false
    })
}

/// A random net from a random grammar text, kept when all nonterminals are
/// productive and reachable and the net has at most `max_states` states.
pub fn random_regex_net(rng: &mut StdRng, max_states: usize) -> MachineNet {
    loop {
        let text = random_grammar_text(rng);
        let Ok(net) = load_net(&text, BuildOptions::default()) else { continue };
        if net.num_states() <= max_states && is_clean_net(&net) {
            return net;
        }
    }
}

/// Removes states that are unreachable or cannot reach a final state, using
/// only edges whose nonterminal labels are in `usable`.
fn trim(m: &Machine, usable: &[bool]) -> Option<Machine> {
    let ok = |x: &Symbol| match x {
        Symbol::T(_) => true,
        Symbol::N(b) => usable[b.0 as usize],
    };
    let mut fwd = BTreeSet::from([m.initial]);
    let mut stack = vec![m.initial];
    while let Some(p) = stack.pop() {
        for (&(s, x), &r) in &m.delta {
            if s == p && ok(&x) && fwd.insert(r) {
                stack.push(r);
            }
        }
    }
    let mut back: BTreeSet<u32> = m.finals.iter().copied().filter(|f| fwd.contains(f)).collect();
    let mut grow = true;
    while grow {
        grow = false;
        for (&(p, x), r) in &m.delta {
            if ok(&x) && fwd.contains(&p) && back.contains(r) && back.insert(p) {
                grow = true;
            }
        }
    }
    if !back.contains(&m.initial) {
        return None;
    }
    let keep: Vec<u32> = (0..m.num_states).filter(|q| back.contains(q)).collect();
    let id = |q: u32| keep.iter().position(|&k| k == q).unwrap() as u32;
    Some(Machine {
        owner: m.owner,
        num_states: keep.len() as u32,
        initial: id(m.initial),
        finals: m.finals.iter().filter(|f| back.contains(f)).map(|&f| id(f)).collect(),
        delta: m
            .delta
            .iter()
            .filter(|((p, x), r)| ok(x) && back.contains(p) && back.contains(r))
            .map(|(&(p, x), &r)| ((id(p), x), id(r)))
            .collect(),
    })
}

/// A random net from raw random transition tables: each machine gets 1–3
/// states, random edges and finals; dead parts are trimmed, machines whose
/// initial state dies are dropped (with their call edges), and the result is
/// normalized. Kept when every nonterminal is reachable and the net has at
/// most `max_states` states.
pub fn random_dfa_net(rng: &mut StdRng, max_states: usize) -> MachineNet {
    'outer: loop {
        let k = rng.gen_range(1..=3usize);
        let sigma = rng.gen_range(1..=3usize);
        let mut raw = Vec::new();
        for i in 0..k {
            let n = rng.gen_range(1..=3u32);
            let mut delta = BTreeMap::new();
            for p in 0..n {
                for _ in 0..rng.gen_range(0..=2) {
                    let x = if rng.gen_bool(0.6) {
                        Symbol::T(TermId(rng.gen_range(0..sigma as u32)))
                    } else {
                        Symbol::N(NtId(rng.gen_range(0..k as u32)))
                    };
                    delta.insert((p, x), rng.gen_range(0..n));
                }
            }
            let finals: BTreeSet<u32> = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
            raw.push(Machine {
                owner: NtId(i as u32),
                num_states: n,
                initial: 0,
                finals,
                delta,
            });
        }
        let mut usable = vec![true; k];
        let trimmed = loop {
            let t: Vec<Option<Machine>> = raw.iter().map(|m| trim(m, &usable)).collect();
            let now: Vec<bool> = t.iter().map(Option::is_some).collect();
            if now == usable {
                break t;
            }
            usable = now;
        };
        // Nonterminal ids are assigned in name order; the axiom is S (index 0
        // in generation order).
        if trimmed[0].is_none() {
            continue;
        }
        let live: Vec<usize> = (0..k).filter(|&i| trimmed[i].is_some()).collect();
        let mut names: Vec<(&str, usize)> = live.iter().map(|&i| (NT_NAMES[i], i)).collect();
        names.sort();
        let new_id = |old: usize| names.iter().position(|&(_, i)| i == old).unwrap() as u32;
        let mut machines = Vec::new();
        for &(_, old) in &names {
            let m = trimmed[old].clone().unwrap();
            let m = Machine {
                owner: NtId(new_id(old)),
                delta: m
                    .delta
                    .iter()
                    .map(|(&(p, x), &r)| {
                        let x = match x {
                            Symbol::N(b) => Symbol::N(NtId(new_id(b.0 as usize))),
                            t => t,
                        };
                        ((p, x), r)
                    })
                    .collect(),
                ..m
            };
            machines.push(normalize_machine(&renumber(&m)));
        }
        let terminals: Vec<String> = T_NAMES[..sigma].iter().map(|s| s.to_string()).collect();
        let nonterminals: Vec<String> = names.iter().map(|(n, _)| n.to_string()).collect();
        let Ok(net) = MachineNet::new(terminals, nonterminals, NtId(new_id(0)), machines) else {
            continue 'outer;
        };
        if net.num_states() <= max_states && is_clean_net(&net) {
            return net;
        }
    }
}

/// Alternates between the two generators.
pub fn random_net(rng: &mut StdRng, i: usize, max_states: usize) -> MachineNet {
    if i % 2 == 0 {
        random_regex_net(rng, max_states)
    } else {
        random_dfa_net(rng, max_states)
    }
}

/// A random sentence of the net, produced by a bounded random walk; `None`
/// when the walk exceeds the budget.
pub fn random_sentence(net: &MachineNet, rng: &mut StdRng, budget: usize) -> Option<Vec<TermId>> {
    fn walk(net: &MachineNet, nt: NtId, rng: &mut StdRng, out: &mut Vec<TermId>, budget: &mut usize, depth: usize) -> bool {
        if depth > 12 {
            return false;
        }
        let m = &net.machines[nt.0 as usize];
        let mut q = m.initial;
        loop {
            if *budget == 0 {
                return false;
            }
            *budget -= 1;
            let edges: Vec<(Symbol, u32)> = m.edges_from(q).collect();
            if m.is_final(q) && (edges.is_empty() || rng.gen_bool(0.3)) {
                return true;
            }
            let Some(&(x, r)) = edges.choose(rng) else { return false };
            match x {
                Symbol::T(t) => out.push(t),
                Symbol::N(b) => {
                    if !walk(net, b, rng, out, budget, depth + 1) {
                        return false;
                    }
                }
            }
            q = r;
        }
    }
    let mut out = Vec::new();
    let mut b = budget;
    walk(net, net.axiom, rng, &mut out, &mut b, 0).then_some(out)
}

/// Random strings longer than `min_len`: half uniformly random, half
/// sampled sentences (so that acceptance is exercised too).
pub fn random_long_strings(net: &MachineNet, rng: &mut StdRng, count: usize, min_len: usize, max_len: usize) -> Vec<Vec<TermId>> {
    let sigma = net.terminals.len() as u32;
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count / 2 && attempts < 20_000 {
        attempts += 1;
        if let Some(w) = random_sentence(net, rng, 60) {
            if w.len() > min_len && w.len() <= max_len {
                out.push(w);
            }
        }
    }
    while sigma > 0 && out.len() < count {
        let n = rng.gen_range(min_len + 1..=max_len);
        out.push((0..n).map(|_| TermId(rng.gen_range(0..sigma))).collect());
    }
    out
}
