//! Shift-reduce engines driven by a pilot.
//!
//! The three engines share one driver and differ in how a stack candidate
//! refers to the stack below it, which determines how a reduction finds the
//! start of its handle:
//!
//! * candidate identifiers: each candidate links to the 1-based position of
//!   its source candidate in the element below, and a reduction follows the
//!   chain down to a candidate linked to ⊥;
//! * vector stack: each candidate records the index of the stack element
//!   where its machine was activated, and a reduction pops straight to it;
//! * pointerless (compact pilot, single transition property): shifting from a
//!   non-initial candidate cancels the other candidates of the element, and a
//!   reduction of machine A pops to the topmost lower element that still holds
//!   the initial state of A.

use crate::net::{LaSet, MachineNet, StateId, Symbol, TermId};
use crate::outcome::{CandView, ElemView, EngineError, Link, Move, ParseOutcome, Reduction, SyntaxError, Tree, TraceStep};
use crate::pilot::Pilot;

/// Engine options.
#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    /// Record a stack snapshot before every move.
    pub trace: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    Cid,
    Vector,
    Pointerless,
}

/// Parses with candidate-identifier chains.
pub fn parse_elr_cid(
    net: &MachineNet,
    pilot: &Pilot,
    tokens: &[TermId],
    opts: ParseOptions,
) -> Result<ParseOutcome, EngineError> {
    Driver::new(net, pilot, Mode::Cid, opts).run(tokens)
}

/// Parses with element identifiers on a vector stack.
pub fn parse_elr_vector(
    net: &MachineNet,
    pilot: &Pilot,
    tokens: &[TermId],
    opts: ParseOptions,
) -> Result<ParseOutcome, EngineError> {
    Driver::new(net, pilot, Mode::Vector, opts).run(tokens)
}

pub(crate) struct Driver<'a> {
    net: &'a MachineNet,
    pilot: &'a Pilot,
    mode: Mode,
    opts: ParseOptions,
    stack: Vec<ElemView>,
    /// `trees[k - 1]` is the subtree of the symbol below element k.
    trees: Vec<Tree>,
    out: ParseOutcome,
    /// Pointerless mode: the stack and forest before the first reduction at
    /// the current token, kept to explain a delayed error.
    checkpoint: Option<(Vec<ElemView>, Vec<Tree>)>,
    /// Set on the throwaway drivers that test which terminals can continue.
    probing: bool,
}

enum Step {
    /// A terminal was shifted.
    Consumed,
    Continue,
    Done,
}

impl<'a> Driver<'a> {
    pub(crate) fn new(net: &'a MachineNet, pilot: &'a Pilot, mode: Mode, opts: ParseOptions) -> Self {
        Driver {
            net,
            pilot,
            mode,
            opts,
            stack: Vec::new(),
            trees: Vec::new(),
            out: ParseOutcome::default(),
            checkpoint: None,
            probing: false,
        }
    }

    fn link_for_closure(&self, position: usize) -> Link {
        match self.mode {
            Mode::Cid => Link::Bottom,
            Mode::Vector => Link::Elem(position),
            Mode::Pointerless => Link::Live,
        }
    }

    /// Candidates of m-state `i`: base first, then closure, each sorted by
    /// state. Used for whole m-states (the initial element and pointerless
    /// elements).
    fn mstate_cands(&self, i: usize, position: usize) -> Vec<CandView> {
        let m = &self.pilot.mstates[i];
        let base = m.base(self.net).map(|(s, la)| CandView {
            state: *s,
            la: la.clone(),
            link: Link::Live,
        });
        let clos = m.closure_part(self.net).map(|(s, la)| CandView {
            state: *s,
            la: la.clone(),
            link: self.link_for_closure(position),
        });
        base.chain(clos).collect()
    }

    pub(crate) fn run(mut self, tokens: &[TermId]) -> Result<ParseOutcome, EngineError> {
        let cands = self.mstate_cands(self.pilot.initial, 0);
        self.stack.push(ElemView {
            symbol: None,
            mstate: self.pilot.initial,
            cands,
        });
        let mut pos = 0;
        loop {
            let a = tokens.get(pos).copied().unwrap_or(TermId::END);
            match self.step(a, pos, tokens.len())? {
                Step::Consumed => {
                    self.checkpoint = None;
                    pos += 1;
                }
                Step::Continue => {}
                Step::Done => return Ok(self.out),
            }
        }
    }

    fn snapshot(&mut self, pos: usize, action: &Move) {
        if self.opts.trace {
            self.out.trace.push(TraceStep {
                position: pos,
                stack: self.stack.clone(),
                action: action.clone(),
            });
        }
    }

    fn record(&mut self, pos: usize, action: Move) {
        self.snapshot(pos, &action);
        self.out.moves.push(action);
    }

    fn step(&mut self, a: TermId, pos: usize, n: usize) -> Result<Step, EngineError> {
        let k = self.stack.len() - 1;
        let top = &self.stack[k];
        let reducible: Vec<usize> = top
            .cands
            .iter()
            .enumerate()
            .filter(|(_, c)| c.link != Link::Pruned && self.net.is_final(c.state) && c.la.contains(&a))
            .map(|(i, _)| i)
            .collect();
        let shift = if a.is_end() {
            None
        } else {
            self.pilot.goto(top.mstate, Symbol::T(a))
        };
        match (reducible.as_slice(), shift) {
            ([], Some(_)) => {
                self.shift(Symbol::T(a), Tree::Leaf(a), pos)?;
                Ok(Step::Consumed)
            }
            ([], None) => {
                let expected = match &self.checkpoint {
                    Some(_) => self.expected_from_checkpoint(pos),
                    None => {
                        let mut expected: LaSet = self
                            .pilot
                            .transitions(top.mstate)
                            .filter_map(|(x, _)| match x {
                                Symbol::T(t) => Some(t),
                                Symbol::N(_) => None,
                            })
                            .collect();
                        for c in &top.cands {
                            if c.link != Link::Pruned && self.net.is_final(c.state) {
                                expected.extend(c.la.iter().copied());
                            }
                        }
                        expected
                    }
                };
                self.reject(a, pos.min(n), expected);
                Ok(Step::Done)
            }
            ([c], None) => {
                if self.mode == Mode::Pointerless && !self.probing && self.checkpoint.is_none() {
                    self.checkpoint = Some((self.stack.clone(), self.trees.clone()));
                }
                self.reduce(*c, a, pos)
            }
            _ => Err(EngineError::Nondeterministic {
                position: pos,
                detail: format!(
                    "{} reducible candidates{} on `{}`",
                    reducible.len(),
                    if shift.is_some() { " and a shift" } else { "" },
                    self.net.term_name(a)
                ),
            }),
        }
    }

    /// Shifts `x` from the top element, pushing `tree` and the target element.
    fn shift(&mut self, x: Symbol, tree: Tree, pos: usize) -> Result<(), EngineError> {
        let k = self.stack.len() - 1;
        let from = self.stack[k].mstate;
        let to = self.pilot.goto(from, x).ok_or_else(|| EngineError::Nondeterministic {
            position: pos,
            detail: format!("no transition on `{}` from I{}", self.net.sym_name(x), from),
        })?;
        let cands = match self.mode {
            Mode::Cid | Mode::Vector => {
                let mut cands = Vec::new();
                for (i, c) in self.stack[k].cands.iter().enumerate() {
                    if let Some(q) = self.net.delta(c.state, x) {
                        let link = match (self.mode, c.link) {
                            (Mode::Cid, _) => Link::Cid(i + 1),
                            (_, Link::Elem(e)) => Link::Elem(e),
                            _ => unreachable!("vector candidates carry element ids"),
                        };
                        cands.push(CandView {
                            state: q,
                            la: c.la.clone(),
                            link,
                        });
                    }
                }
                let link = self.link_for_closure(k + 1);
                cands.extend(self.pilot.mstates[to].closure_part(self.net).map(|(s, la)| CandView {
                    state: *s,
                    la: la.clone(),
                    link,
                }));
                cands
            }
            Mode::Pointerless => {
                let shifters: Vec<StateId> = self.stack[k]
                    .cands
                    .iter()
                    .filter(|c| c.link != Link::Pruned && self.net.delta(c.state, x).is_some())
                    .map(|c| c.state)
                    .collect();
                let [shifter] = shifters.as_slice() else {
                    return Err(EngineError::Precondition(format!(
                        "{} active candidates shift `{}` in I{}",
                        shifters.len(),
                        self.net.sym_name(x),
                        from
                    )));
                };
                if !self.net.is_initial(*shifter) {
                    for c in &mut self.stack[k].cands {
                        if c.state != *shifter {
                            c.link = Link::Pruned;
                        }
                    }
                }
                self.mstate_cands(to, k + 1)
            }
        };
        self.record(pos, Move::Shift { from, symbol: x, to });
        self.trees.push(tree);
        self.stack.push(ElemView {
            symbol: Some(x),
            mstate: to,
            cands,
        });
        Ok(())
    }

    /// Index of the element where the machine of candidate `c` (on top) was
    /// activated.
    fn handle_start(&self, c: usize) -> Result<usize, EngineError> {
        let k = self.stack.len() - 1;
        let cand = &self.stack[k].cands[c];
        if self.net.is_initial(cand.state) {
            return Ok(k);
        }
        let internal = |detail: String| EngineError::Nondeterministic { position: 0, detail };
        match self.mode {
            Mode::Cid => {
                let (mut e, mut i) = (k, c);
                loop {
                    match self.stack[e].cands[i].link {
                        Link::Cid(j) => {
                            e -= 1;
                            i = j - 1;
                        }
                        Link::Bottom => break,
                        other => return Err(internal(format!("unexpected link {other:?}"))),
                    }
                }
                debug_assert_eq!(self.stack[e].cands[i].state, self.net.initial(cand.state.nt));
                Ok(e)
            }
            Mode::Vector => match cand.link {
                Link::Elem(h) => Ok(h),
                other => Err(internal(format!("unexpected link {other:?}"))),
            },
            Mode::Pointerless => {
                let init = self.net.initial(cand.state.nt);
                (0..k)
                    .rev()
                    .find(|&h| {
                        self.stack[h]
                            .cands
                            .iter()
                            .any(|c| c.link != Link::Pruned && c.state == init)
                    })
                    .ok_or_else(|| internal("no element holds the initial state".to_string()))
            }
        }
    }

    fn reduce(&mut self, c: usize, a: TermId, pos: usize) -> Result<Step, EngineError> {
        let k = self.stack.len() - 1;
        let nt = self.stack[k].cands[c].state.nt;
        let h = self.handle_start(c)?;
        let handle: Vec<Symbol> = self.stack[h + 1..].iter().filter_map(|e| e.symbol).collect();
        let reduction = Reduction { handle, nt };
        self.record(
            pos,
            Move::Reduce {
                reduction: reduction.clone(),
                pop_to: h,
            },
        );
        self.out.reductions.push(reduction);
        let children = self.trees.split_off(h);
        self.stack.truncate(h + 1);
        let tree = Tree::node(nt, children);
        if nt == self.net.axiom && h == 0 && a.is_end() {
            self.record(pos, Move::Accept);
            self.out.accepted = true;
            self.out.tree = Some(tree);
            return Ok(Step::Done);
        }
        let from = self.stack[h].mstate;
        if self.mode == Mode::Pointerless && self.pilot.goto(from, Symbol::N(nt)).is_none() {
            // Merged look-aheads let a compact pilot reduce on a token that
            // cannot follow; the error surfaces as a missing goto.
            let expected = if self.probing { LaSet::new() } else { self.expected_from_checkpoint(pos) };
            self.reject(a, pos, expected);
            return Ok(Step::Done);
        }
        self.shift(Symbol::N(nt), tree, pos)?;
        Ok(Step::Continue)
    }

    fn reject(&mut self, a: TermId, pos: usize, expected: LaSet) {
        self.out.error = Some(SyntaxError {
            position: pos,
            found: a,
            expected,
        });
        self.record(pos, Move::Reject);
    }

    /// The terminals that, read at `pos` from the checkpointed stack, lead to
    /// a shift or to acceptance.
    fn expected_from_checkpoint(&self, pos: usize) -> LaSet {
        let Some((stack, trees)) = &self.checkpoint else {
            return LaSet::new();
        };
        let mut expected = LaSet::new();
        for b in self.net.terminal_ids().chain(std::iter::once(TermId::END)) {
            let mut probe = Driver::new(self.net, self.pilot, self.mode, ParseOptions::default());
            probe.probing = true;
            probe.stack = stack.clone();
            probe.trees = trees.clone();
            let viable = loop {
                match probe.step(b, pos, usize::MAX) {
                    Ok(Step::Consumed) => break true,
                    Ok(Step::Continue) => {}
                    Ok(Step::Done) => break probe.out.accepted,
                    Err(_) => break false,
                }
            };
            if viable {
                expected.insert(b);
            }
        }
        expected
    }
}
