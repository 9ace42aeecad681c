//! Semantic actions keyed by the rules and symbols of the pre-rewrite
//! grammar.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::grammar::{Grammar, RuleId, SymbolId, Token};

/// Everything a semantic function may look at besides its child values.
pub struct ParseContext<'a> {
    /// The pre-rewrite (user) grammar.
    pub grammar: &'a Grammar,
    pub input: &'a [Token],
    /// Input span `[start, end)` of the node being evaluated.
    pub span: (usize, usize),
}

pub type RuleFn<V> = Box<dyn Fn(&ParseContext<'_>, RuleId, &[V]) -> V + Send + Sync>;
pub type TokenFn<V> = Box<dyn Fn(&ParseContext<'_>, SymbolId, &str) -> V + Send + Sync>;
pub type NulledFn<V> = Box<dyn Fn(&ParseContext<'_>, SymbolId) -> V + Send + Sync>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("no semantic function for rule {0}")]
    MissingRule(String),
    #[error("rule {rule} expects {expected} child values, got {got}")]
    Arity {
        rule: String,
        expected: usize,
        got: usize,
    },
}

/// Rule, token and nulled-symbol functions.
///
/// Missing token and nulled functions fall back to the inert value.
/// A missing rule function is an error when that rule is evaluated.
pub struct Semantics<V> {
    rules: HashMap<RuleId, RuleFn<V>>,
    any_rule: Option<RuleFn<V>>,
    tokens: HashMap<SymbolId, TokenFn<V>>,
    any_token: Option<TokenFn<V>>,
    nulled: HashMap<SymbolId, NulledFn<V>>,
    inert: V,
}

impl<V: Clone> Semantics<V> {
    pub fn new(inert: V) -> Self {
        Semantics {
            rules: HashMap::new(),
            any_rule: None,
            tokens: HashMap::new(),
            any_token: None,
            nulled: HashMap::new(),
            inert,
        }
    }

    pub fn rule(
        mut self,
        rule: RuleId,
        f: impl Fn(&ParseContext<'_>, &[V]) -> V + Send + Sync + 'static,
    ) -> Self {
        self.rules.insert(rule, Box::new(move |ctx, _, children| f(ctx, children)));
        self
    }

    /// Fallback for every rule without its own function.
    pub fn any_rule(
        mut self,
        f: impl Fn(&ParseContext<'_>, RuleId, &[V]) -> V + Send + Sync + 'static,
    ) -> Self {
        self.any_rule = Some(Box::new(f));
        self
    }

    pub fn token(
        mut self,
        symbol: SymbolId,
        f: impl Fn(&ParseContext<'_>, &str) -> V + Send + Sync + 'static,
    ) -> Self {
        self.tokens.insert(symbol, Box::new(move |ctx, _, v| f(ctx, v)));
        self
    }

    pub fn any_token(
        mut self,
        f: impl Fn(&ParseContext<'_>, SymbolId, &str) -> V + Send + Sync + 'static,
    ) -> Self {
        self.any_token = Some(Box::new(f));
        self
    }

    pub fn nulled(
        mut self,
        symbol: SymbolId,
        f: impl Fn(&ParseContext<'_>, SymbolId) -> V + Send + Sync + 'static,
    ) -> Self {
        self.nulled.insert(symbol, Box::new(f));
        self
    }

    pub fn inert(&self) -> &V {
        &self.inert
    }

    pub fn apply_rule(
        &self,
        ctx: &ParseContext<'_>,
        rule: RuleId,
        children: &[V],
    ) -> Result<V, SemanticsError> {
        let expected = ctx.grammar.rule(rule).rhs.len();
        if children.len() != expected {
            return Err(SemanticsError::Arity {
                rule: ctx.grammar.display_rule(rule).to_string(),
                expected,
                got: children.len(),
            });
        }
        let f = self
            .rules
            .get(&rule)
            .or(self.any_rule.as_ref())
            .ok_or_else(|| SemanticsError::MissingRule(ctx.grammar.display_rule(rule).to_string()))?;
        Ok(f(ctx, rule, children))
    }

    pub fn apply_token(&self, ctx: &ParseContext<'_>, symbol: SymbolId, value: &str) -> V {
        match self.tokens.get(&symbol).or(self.any_token.as_ref()) {
            Some(f) => f(ctx, symbol, value),
            None => self.inert.clone(),
        }
    }

    pub fn apply_nulled(&self, ctx: &ParseContext<'_>, symbol: SymbolId) -> V {
        match self.nulled.get(&symbol) {
            Some(f) => f(ctx, symbol),
            None => self.inert.clone(),
        }
    }
}

/// Value of the collecting semantics: every node records what it was
/// built from, so two evaluations agree iff they describe the same tree.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Collected {
    Inert,
    Token(String, String),
    Nulled(String),
    Node(usize, Vec<Collected>),
}

impl fmt::Display for Collected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Collected::Inert => f.write_str("()"),
            Collected::Token(name, value) if name == value => f.write_str(name),
            Collected::Token(name, value) => write!(f, "{name}={value}"),
            Collected::Nulled(name) => write!(f, "{name}?"),
            Collected::Node(rule, children) => {
                write!(f, "(r{rule}")?;
                for c in children {
                    write!(f, " {c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Rule value = rule index plus children; tokens and nulled symbols are
/// tagged with their names.
pub fn collecting(g: &Grammar) -> Semantics<Collected> {
    let mut sem = Semantics::new(Collected::Inert)
        .any_rule(|_, rule, children| Collected::Node(rule.index(), children.to_vec()))
        .any_token(|ctx, sym, value| Collected::Token(ctx.grammar.name(sym).to_string(), value.to_string()));
    for sym in g.symbols().filter(|&s| !g.is_terminal(s)) {
        sem = sem.nulled(sym, |ctx, s| Collected::Nulled(ctx.grammar.name(s).to_string()));
    }
    sem
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_grammar;

    #[test]
    fn missing_rule_and_arity_errors() {
        let g = parse_grammar("start: S\nS ::= a b").unwrap();
        let ctx = ParseContext {
            grammar: &g,
            input: &[],
            span: (0, 2),
        };
        let sem: Semantics<u32> = Semantics::new(0);
        let r = g.rule_ids().next().unwrap();
        assert!(matches!(sem.apply_rule(&ctx, r, &[1, 2]), Err(SemanticsError::MissingRule(_))));
        let sem = sem.rule(r, |_, c| c.iter().sum());
        assert_eq!(sem.apply_rule(&ctx, r, &[1, 2]), Ok(3));
        assert!(matches!(sem.apply_rule(&ctx, r, &[1]), Err(SemanticsError::Arity { .. })));
    }

    #[test]
    fn defaults_are_inert() {
        let g = parse_grammar("start: S\nS ::= a").unwrap();
        let ctx = ParseContext {
            grammar: &g,
            input: &[],
            span: (0, 0),
        };
        let sem: Semantics<&str> = Semantics::new("inert");
        assert_eq!(sem.apply_nulled(&ctx, g.start()), "inert");
        assert_eq!(sem.apply_token(&ctx, g.lookup("a").unwrap(), "a"), "inert");
    }
}
