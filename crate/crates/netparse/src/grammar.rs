//! Grammar frontend: the textual EBNF format, regular right parts, their
//! compilation into deterministic machines, and the right-linearized grammar
//! of a net.
//!
//! Grammar files contain rules `Name : alternatives ;`. Quoted names
//! (`'a'` or `"a"`) are terminals, bare identifiers are nonterminals, and the
//! operators are `|`, `*`, `+`, `?` and parentheses. `%empty` denotes the empty
//! string, as does an empty alternative. `#` and `//` start comments. The
//! left-hand side of the first rule is the axiom.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::net::{Machine, MachineNet, NtId, StateId, Symbol, TermId, END_MARKER};

/// A regular expression over grammar symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RegexAst {
    Epsilon,
    Terminal(String),
    Nonterminal(String),
    /// At least two alternatives.
    Union(Vec<RegexAst>),
    /// At least two factors.
    Concat(Vec<RegexAst>),
    Star(Box<RegexAst>),
}

impl RegexAst {
    /// Builds a union, flattening nested unions; a single alternative is
    /// returned as is.
    pub fn union(children: Vec<RegexAst>) -> RegexAst {
        let mut flat = Vec::new();
        for c in children {
            match c {
                RegexAst::Union(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => RegexAst::Epsilon,
            1 => flat.pop().unwrap(),
            _ => RegexAst::Union(flat),
        }
    }

    /// Builds a concatenation, flattening nested concatenations and dropping
    /// ε factors.
    pub fn concat(children: Vec<RegexAst>) -> RegexAst {
        let mut flat = Vec::new();
        for c in children {
            match c {
                RegexAst::Concat(inner) => flat.extend(inner),
                RegexAst::Epsilon => {}
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => RegexAst::Epsilon,
            1 => flat.pop().unwrap(),
            _ => RegexAst::Concat(flat),
        }
    }

    pub fn star(child: RegexAst) -> RegexAst {
        RegexAst::Star(Box::new(child))
    }

    fn visit_names<'a>(&'a self, out: &mut Vec<&'a RegexAst>) {
        match self {
            RegexAst::Epsilon => {}
            RegexAst::Terminal(_) | RegexAst::Nonterminal(_) => out.push(self),
            RegexAst::Union(cs) | RegexAst::Concat(cs) => cs.iter().for_each(|c| c.visit_names(out)),
            RegexAst::Star(c) => c.visit_names(out),
        }
    }
}

/// A grammar with exactly one regular right part per nonterminal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grammar {
    pub terminals: BTreeSet<String>,
    pub nonterminals: BTreeSet<String>,
    pub axiom: String,
    pub rules: BTreeMap<String, RegexAst>,
}

/// Grammar-file errors, positioned at 1-based line and column.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GrammarError {
    #[error("{line}:{col}: syntax error: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{line}:{col}: duplicate rule for nonterminal `{name}`")]
    DuplicateRule { line: usize, col: usize, name: String },
    #[error("{line}:{col}: undefined nonterminal `{name}`")]
    UndefinedNonterminal { line: usize, col: usize, name: String },
    #[error("grammar has no rules")]
    Empty,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Quoted(String),
    Colon,
    Semi,
    Bar,
    Star,
    Plus,
    Question,
    LParen,
    RParen,
    Empty,
    Eof,
}

#[derive(Clone, Debug)]
struct Lexeme {
    tok: Tok,
    line: usize,
    col: usize,
}

fn syntax(line: usize, col: usize, message: impl Into<String>) -> GrammarError {
    GrammarError::Syntax {
        line,
        col,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Lexeme>, GrammarError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => advance(1, &mut i, &mut col),
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            ':' | ';' | '|' | '*' | '+' | '?' | '(' | ')' => {
                let tok = match c {
                    ':' => Tok::Colon,
                    ';' => Tok::Semi,
                    '|' => Tok::Bar,
                    '*' => Tok::Star,
                    '+' => Tok::Plus,
                    '?' => Tok::Question,
                    '(' => Tok::LParen,
                    _ => Tok::RParen,
                };
                out.push(Lexeme {
                    tok,
                    line: l0,
                    col: c0,
                });
                advance(1, &mut i, &mut col);
            }
            '\'' | '"' => {
                let quote = c;
                let mut j = i + 1;
                while j < chars.len() && chars[j] != quote && chars[j] != '\n' {
                    j += 1;
                }
                if j >= chars.len() || chars[j] != quote {
                    return Err(syntax(l0, c0, "unterminated quoted terminal"));
                }
                let name: String = chars[i + 1..j].iter().collect();
                if name.is_empty() {
                    return Err(syntax(l0, c0, "empty terminal name"));
                }
                if name == END_MARKER {
                    return Err(syntax(l0, c0, "the end marker -| is reserved"));
                }
                out.push(Lexeme {
                    tok: Tok::Quoted(name),
                    line: l0,
                    col: c0,
                });
                let n = j + 1 - i;
                advance(n, &mut i, &mut col);
            }
            '%' => {
                let word: String = chars[i + 1..]
                    .iter()
                    .take_while(|c| c.is_ascii_alphanumeric() || **c == '_')
                    .collect();
                if word != "empty" {
                    return Err(syntax(l0, c0, format!("unknown directive `%{word}`")));
                }
                out.push(Lexeme {
                    tok: Tok::Empty,
                    line: l0,
                    col: c0,
                });
                advance(1 + word.len(), &mut i, &mut col);
            }
            c if c.is_alphabetic() || c == '_' => {
                let word: String = chars[i..]
                    .iter()
                    .take_while(|c| c.is_alphanumeric() || **c == '_')
                    .collect();
                let n = word.chars().count();
                out.push(Lexeme {
                    tok: Tok::Ident(word),
                    line: l0,
                    col: c0,
                });
                advance(n, &mut i, &mut col);
            }
            other => return Err(syntax(l0, c0, format!("unexpected character `{other}`"))),
        }
    }
    out.push(Lexeme {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Lexeme>,
    pos: usize,
    /// First reference position of every bare identifier.
    refs: Vec<(String, usize, usize)>,
}

impl Parser {
    fn peek(&self) -> &Lexeme {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Lexeme {
        let l = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        l
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), GrammarError> {
        let l = self.bump();
        if l.tok == tok {
            Ok(())
        } else {
            Err(syntax(l.line, l.col, format!("expected {what}")))
        }
    }

    fn alternatives(&mut self) -> Result<RegexAst, GrammarError> {
        let mut alts = vec![self.sequence()?];
        while self.peek().tok == Tok::Bar {
            self.bump();
            alts.push(self.sequence()?);
        }
        Ok(RegexAst::union(alts))
    }

    fn sequence(&mut self) -> Result<RegexAst, GrammarError> {
        let mut factors = Vec::new();
        while matches!(
            self.peek().tok,
            Tok::Ident(_) | Tok::Quoted(_) | Tok::LParen | Tok::Empty
        ) {
            factors.push(self.postfix()?);
        }
        Ok(RegexAst::concat(factors))
    }

    fn postfix(&mut self) -> Result<RegexAst, GrammarError> {
        let mut e = self.atom()?;
        loop {
            match self.peek().tok {
                Tok::Star => e = RegexAst::star(e),
                Tok::Plus => e = RegexAst::concat(vec![e.clone(), RegexAst::star(e)]),
                Tok::Question => e = RegexAst::union(vec![e, RegexAst::Epsilon]),
                _ => return Ok(e),
            }
            self.bump();
        }
    }

    fn atom(&mut self) -> Result<RegexAst, GrammarError> {
        let l = self.bump();
        match l.tok {
            Tok::Ident(name) => {
                self.refs.push((name.clone(), l.line, l.col));
                Ok(RegexAst::Nonterminal(name))
            }
            Tok::Quoted(name) => Ok(RegexAst::Terminal(name)),
            Tok::Empty => Ok(RegexAst::Epsilon),
            Tok::LParen => {
                let e = self.alternatives()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => Err(syntax(l.line, l.col, "expected a symbol or `(`")),
        }
    }
}

/// Parses a grammar file. Alternatives of a rule are merged into one union;
/// the first rule's left-hand side becomes the axiom.
pub fn parse_ebnf(text: &str) -> Result<Grammar, GrammarError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        refs: Vec::new(),
    };
    let mut rules = BTreeMap::new();
    let mut axiom = None;
    while p.peek().tok != Tok::Eof {
        let l = p.bump();
        let Tok::Ident(name) = l.tok else {
            return Err(syntax(l.line, l.col, "expected a rule name"));
        };
        p.expect(Tok::Colon, "`:`")?;
        let rhs = p.alternatives()?;
        p.expect(Tok::Semi, "`;` or `|`")?;
        if rules.contains_key(&name) {
            return Err(GrammarError::DuplicateRule {
                line: l.line,
                col: l.col,
                name,
            });
        }
        axiom.get_or_insert_with(|| name.clone());
        rules.insert(name, rhs);
    }
    let axiom = axiom.ok_or(GrammarError::Empty)?;
    if let Some((name, line, col)) = p.refs.iter().find(|(n, _, _)| !rules.contains_key(n)) {
        return Err(GrammarError::UndefinedNonterminal {
            line: *line,
            col: *col,
            name: name.clone(),
        });
    }
    let mut terminals = BTreeSet::new();
    for rhs in rules.values() {
        let mut leaves = Vec::new();
        rhs.visit_names(&mut leaves);
        for leaf in leaves {
            if let RegexAst::Terminal(t) = leaf {
                terminals.insert(t.clone());
            }
        }
    }
    Ok(Grammar {
        terminals,
        nonterminals: rules.keys().cloned().collect(),
        axiom,
        rules,
    })
}

/// Name-to-id tables for a grammar's symbols; ids follow name order.
#[derive(Clone, Debug)]
pub struct SymbolTable {
    pub terminals: Vec<String>,
    pub nonterminals: Vec<String>,
}

impl SymbolTable {
    pub fn of(g: &Grammar) -> Self {
        SymbolTable {
            terminals: g.terminals.iter().cloned().collect(),
            nonterminals: g.nonterminals.iter().cloned().collect(),
        }
    }

    pub fn nt(&self, name: &str) -> NtId {
        NtId(self.nonterminals.binary_search_by(|n| n.as_str().cmp(name)).expect("known nonterminal") as u32)
    }

    fn leaf(&self, leaf: &RegexAst) -> Symbol {
        match leaf {
            RegexAst::Terminal(t) => Symbol::T(TermId(
                self.terminals.binary_search(t).expect("known terminal") as u32,
            )),
            RegexAst::Nonterminal(n) => Symbol::N(self.nt(n)),
            _ => unreachable!("only leaves carry symbols"),
        }
    }
}

/// Position marker standing for "end of the right part" in follower sets.
const END_POS: usize = usize::MAX;

struct Positions {
    syms: Vec<Symbol>,
    follow: Vec<BTreeSet<usize>>,
}

impl Positions {
    /// Returns (nullable, first, last) of `ast`, numbering its leaves and
    /// recording follower positions.
    fn walk(&mut self, ast: &RegexAst, table: &SymbolTable) -> (bool, BTreeSet<usize>, BTreeSet<usize>) {
        match ast {
            RegexAst::Epsilon => (true, BTreeSet::new(), BTreeSet::new()),
            RegexAst::Terminal(_) | RegexAst::Nonterminal(_) => {
                let p = self.syms.len();
                self.syms.push(table.leaf(ast));
                self.follow.push(BTreeSet::new());
                (false, BTreeSet::from([p]), BTreeSet::from([p]))
            }
            RegexAst::Union(cs) => {
                let (mut n, mut f, mut l): (bool, BTreeSet<usize>, BTreeSet<usize>) = (false, BTreeSet::new(), BTreeSet::new());
                for c in cs {
                    let (cn, cf, cl) = self.walk(c, table);
                    n |= cn;
                    f.extend(cf);
                    l.extend(cl);
                }
                (n, f, l)
            }
            RegexAst::Concat(cs) => {
                let (mut n, mut f, mut l): (bool, BTreeSet<usize>, BTreeSet<usize>) = (true, BTreeSet::new(), BTreeSet::new());
                for c in cs {
                    let (cn, cf, cl) = self.walk(c, table);
                    for &p in &l {
                        self.follow[p].extend(cf.iter().copied());
                    }
                    if n {
                        f.extend(cf.iter().copied());
                    }
                    if cn {
                        l.extend(cl);
                    } else {
                        l = cl;
                    }
                    n &= cn;
                }
                (n, f, l)
            }
            RegexAst::Star(c) => {
                let (_, cf, cl) = self.walk(c, table);
                for &p in &cl {
                    self.follow[p].extend(cf.iter().copied());
                }
                (true, cf, cl)
            }
        }
    }
}

/// Compiles a right part into a deterministic machine with the Berry–Sethi
/// construction: each machine state is the set of positions that may be read
/// next, together with an end mark when the state is final. States are
/// numbered in depth-first preorder from the initial state, following edges in
/// symbol order. The result is reduced but not necessarily normalized.
pub fn regex_to_machine(owner: NtId, ast: &RegexAst, table: &SymbolTable) -> Machine {
    let mut pos = Positions {
        syms: Vec::new(),
        follow: Vec::new(),
    };
    let (nullable, first, last) = pos.walk(ast, table);
    for &p in &last {
        pos.follow[p].insert(END_POS);
    }
    let mut init = first;
    if nullable {
        init.insert(END_POS);
    }
    let mut ids: HashMap<BTreeSet<usize>, u32> = HashMap::new();
    let mut sets = vec![init.clone()];
    ids.insert(init, 0);
    let mut delta = BTreeMap::new();
    let mut i = 0;
    while i < sets.len() {
        let mut targets: BTreeMap<Symbol, BTreeSet<usize>> = BTreeMap::new();
        for &p in &sets[i] {
            if p != END_POS {
                targets.entry(pos.syms[p]).or_default().extend(pos.follow[p].iter().copied());
            }
        }
        for (x, t) in targets {
            let next = sets.len() as u32;
            let id = *ids.entry(t.clone()).or_insert_with(|| {
                sets.push(t);
                next
            });
            delta.insert((i as u32, x), id);
        }
        i += 1;
    }
    let finals = sets
        .iter()
        .enumerate()
        .filter(|(_, s)| s.contains(&END_POS))
        .map(|(i, _)| i as u32)
        .collect();
    renumber(&Machine {
        owner,
        num_states: sets.len() as u32,
        initial: 0,
        finals,
        delta,
    })
}

/// Renumbers the reachable part of a machine in depth-first preorder from the
/// initial state, exploring edges in symbol order. The initial state becomes 0.
pub fn renumber(m: &Machine) -> Machine {
    fn visit(m: &Machine, q: u32, order: &mut Vec<Option<u32>>, next: &mut u32) {
        order[q as usize] = Some(*next);
        *next += 1;
        for (_, r) in m.edges_from(q) {
            if order[r as usize].is_none() {
                visit(m, r, order, next);
            }
        }
    }
    let mut order = vec![None; m.num_states as usize];
    let mut next = 0;
    visit(m, m.initial, &mut order, &mut next);
    let map = |q: u32| order[q as usize];
    Machine {
        owner: m.owner,
        num_states: next,
        initial: 0,
        finals: m.finals.iter().filter_map(|&f| map(f)).collect(),
        delta: m
            .delta
            .iter()
            .filter_map(|(&(p, x), &r)| Some(((map(p)?, x), map(r)?)))
            .collect(),
    }
}

/// Ensures no edge enters the initial state. If one does, a fresh initial
/// state copying the old initial's outgoing edges is added (final iff the old
/// initial was final); the old initial stays as an ordinary state. The result
/// is renumbered so the fresh state is 0. A machine that already satisfies the
/// property is returned unchanged.
pub fn normalize_machine(m: &Machine) -> Machine {
    if !m.reenters_initial() {
        return m.clone();
    }
    let fresh = m.num_states;
    let mut out = m.clone();
    out.num_states += 1;
    for (x, r) in m.edges_from(m.initial) {
        out.delta.insert((fresh, x), r);
    }
    if m.is_final(m.initial) {
        out.finals.insert(fresh);
    }
    out.initial = fresh;
    renumber(&out)
}

/// Minimizes a reduced deterministic machine by partition refinement and
/// renumbers the result. The result may need normalization.
pub fn minimize_machine(m: &Machine) -> Machine {
    let n = m.num_states as usize;
    let mut class: Vec<usize> = (0..n).map(|q| usize::from(m.is_final(q as u32))).collect();
    loop {
        let mut sigs: HashMap<(usize, Vec<(Symbol, usize)>), usize> = HashMap::new();
        let mut next = vec![0; n];
        for q in 0..n {
            let sig = (
                class[q],
                m.edges_from(q as u32).map(|(x, r)| (x, class[r as usize])).collect(),
            );
            let k = sigs.len();
            next[q] = *sigs.entry(sig).or_insert(k);
        }
        let stable = sigs.len() == class.iter().collect::<BTreeSet<_>>().len();
        class = next;
        if stable {
            break;
        }
    }
    let num_states = class.iter().max().map_or(0, |c| c + 1) as u32;
    renumber(&Machine {
        owner: m.owner,
        num_states,
        initial: class[m.initial as usize] as u32,
        finals: m.finals.iter().map(|&f| class[f as usize] as u32).collect(),
        delta: m
            .delta
            .iter()
            .map(|(&(p, x), &r)| ((class[p as usize] as u32, x), class[r as usize] as u32))
            .collect(),
    })
}

/// Options for assembling a net from a grammar.
#[derive(Clone, Copy, Debug, Default)]
pub struct BuildOptions {
    /// Minimize every machine before normalization.
    pub minimize: bool,
}

/// Builds one normalized machine per nonterminal.
pub fn build_net(g: &Grammar, opts: BuildOptions) -> MachineNet {
    let table = SymbolTable::of(g);
    let machines = table
        .nonterminals
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let mut m = regex_to_machine(NtId(i as u32), &g.rules[name], &table);
            if opts.minimize {
                m = minimize_machine(&m);
            }
            normalize_machine(&m)
        })
        .collect();
    let axiom = table.nt(&g.axiom);
    MachineNet::new(table.terminals, table.nonterminals, axiom, machines)
        .expect("machines built from a grammar satisfy the net invariants")
}

/// Parses a grammar file and builds its net.
pub fn load_net(text: &str, opts: BuildOptions) -> Result<MachineNet, GrammarError> {
    Ok(build_net(&parse_ebnf(text)?, opts))
}

/// The first symbol of a right-linearized production.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RlSymbol {
    Terminal(TermId),
    /// The initial state of the called machine.
    Call(StateId),
}

/// A production `lhs → X rhs_state` or `lhs → ε`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RlRule {
    pub lhs: StateId,
    pub rhs: Option<(RlSymbol, StateId)>,
}

/// The BNF grammar whose nonterminals are the net states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RightLinearizedGrammar {
    pub axiom: StateId,
    pub rules: Vec<RlRule>,
}

impl RightLinearizedGrammar {
    pub fn rule_string(net: &MachineNet, r: &RlRule) -> String {
        match r.rhs {
            None => format!("{} -> ε", net.state_name(r.lhs)),
            Some((x, q)) => format!(
                "{} -> {} {}",
                net.state_name(r.lhs),
                rl_symbol_name(net, x),
                net.state_name(q)
            ),
        }
    }

    /// One line per left-hand side, alternatives separated by `|`.
    pub fn display(&self, net: &MachineNet) -> String {
        let mut grouped: BTreeMap<StateId, Vec<String>> = BTreeMap::new();
        for r in &self.rules {
            grouped.entry(r.lhs).or_default().push(match r.rhs {
                None => "ε".to_string(),
                Some((x, q)) => format!("{} {}", rl_symbol_name(net, x), net.state_name(q)),
            });
        }
        let mut out = String::new();
        for (lhs, alts) in grouped {
            let _ = writeln!(out, "{} -> {}", net.state_name(lhs), alts.join(" | "));
        }
        out
    }
}

pub fn rl_symbol_name(net: &MachineNet, x: RlSymbol) -> String {
    match x {
        RlSymbol::Terminal(t) => net.term_name(t).to_string(),
        RlSymbol::Call(s) => net.state_name(s),
    }
}

/// Derives the right-linearized grammar: `p → a r` for every terminal edge,
/// `p → 0_B r` for every edge labelled by nonterminal `B`, and `p → ε` for
/// every final state. Rules are listed by state, edges in symbol order, the
/// ε rule last.
pub fn right_linearize(net: &MachineNet) -> RightLinearizedGrammar {
    let mut rules = Vec::new();
    for s in net.states() {
        for (x, r) in net.edges(s) {
            let first = match x {
                Symbol::T(t) => RlSymbol::Terminal(t),
                Symbol::N(b) => RlSymbol::Call(net.initial(b)),
            };
            rules.push(RlRule {
                lhs: s,
                rhs: Some((first, r)),
            });
        }
        if net.is_final(s) {
            rules.push(RlRule { lhs: s, rhs: None });
        }
    }
    RightLinearizedGrammar {
        axiom: net.initial(net.axiom),
        rules,
    }
}
