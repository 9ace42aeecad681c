//! Earley recognition over nulling-free grammars.
//!
//! A user grammar is augmented, classified, rewritten into CHAF (or NNF),
//! stripped of nulling symbols, and then recognized by a three-phase
//! Earley engine with precomputed prediction closures. Nulling markup and
//! rewrite bindings let traces, progress reports and semantics be given in
//! terms of the original grammar.

pub mod ahfa;
pub mod cli;
pub mod evaluator;
pub mod grammar;
pub mod oracle;
pub mod recognizer;
pub mod rewrite;
pub mod semantics;

pub use grammar::{
    classify, parse_grammar, Grammar, GrammarBuilder, GrammarError, NullClass, Rule, RuleId, Symbol,
    SymbolClass, SymbolId, Token,
};
