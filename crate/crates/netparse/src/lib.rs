//! Parser toolkit for EBNF grammars represented as machine nets.
//!
//! A grammar is compiled into a net of deterministic machines, one per
//! nonterminal ([`grammar`]). Static analyses ([`analysis`]) feed the ELR(1)
//! pilot ([`pilot`]), which drives shift-reduce parsers with candidate
//! identifiers or a vector stack ([`elr`]). Under the single transition
//! property the pilot compacts and the pointerless and predictive parsers
//! apply ([`ell`]). The Earley engine ([`earley`]) handles every net, and a
//! canonical LR(1) construction ([`lr1`]) over the right-linearized grammar
//! serves as a reference for the ELR(1) condition.
//!
//! ```
//! use netparse::prelude::*;
//!
//! let net = load_net("E : T* ; T : '(' E ')' | 'a' ;", BuildOptions::default()).unwrap();
//! let tables = AnalysisTables::compute(&net);
//! let pilot = build_pilot(&net, &tables);
//! assert!(check_elr1(&net, &pilot).is_clean());
//! let tokens = net.tokenize("( a )").unwrap();
//! let out = parse_elr_cid(&net, &pilot, &tokens, ParseOptions::default()).unwrap();
//! assert_eq!(out.tree.unwrap().render(&net), "( ( ( ( ( a )_T )_E ) )_T )_E");
//! ```

pub mod analysis;
pub mod dot;
pub mod earley;
pub mod ell;
pub mod elr;
pub mod grammar;
pub mod lr1;
pub mod net;
pub mod outcome;
pub mod pilot;

/// The commonly used items.
pub mod prelude {
    pub use crate::analysis::{closure, detect_left_recursion, AnalysisTables, CandSet};
    pub use crate::earley::{build_tree, earley_parse, earley_recognize, EarleyVector, TreeError};
    pub use crate::ell::{
        build_pcfg, check_ell1, emit_recursive_descent, fixpoint_prospect_guide, parse_pointerless,
        parse_predictive, Ell1Report, EllError, Pcfg,
    };
    pub use crate::elr::{parse_elr_cid, parse_elr_vector, ParseOptions};
    pub use crate::grammar::{
        build_net, load_net, normalize_machine, parse_ebnf, regex_to_machine, right_linearize, BuildOptions,
        Grammar, GrammarError, RegexAst,
    };
    pub use crate::lr1::{build_lr1_pilot, check_lr1, BnfGrammar};
    pub use crate::net::{LaSet, Machine, MachineNet, NtId, StateId, Symbol, TermId};
    pub use crate::outcome::{EngineError, ParseOutcome, Reduction, Tree};
    pub use crate::pilot::{build_pilot, check_elr1, check_stp, compact_pilot, stp_violations, ConflictReport, Pilot};
}
