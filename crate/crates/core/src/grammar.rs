//! Grammar data model, text ingestion, augmentation and nullability
//! classification.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolId(u32);

impl SymbolId {
    pub(crate) fn new(index: usize) -> Self {
        SymbolId(index as u32)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleId(u32);

impl RuleId {
    pub(crate) fn new(index: usize) -> Self {
        RuleId(index as u32)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Symbol {
    pub name: String,
    pub is_terminal: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub lhs: SymbolId,
    pub rhs: Vec<SymbolId>,
}

/// An input token: a terminal plus the text value handed to semantics.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Token {
    pub symbol: SymbolId,
    pub value: String,
}

impl Token {
    pub fn new(symbol: SymbolId, value: impl Into<String>) -> Self {
        Token {
            symbol,
            value: value.into(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GrammarError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate start declaration")]
    DuplicateStart { line: usize },
    #[error("grammar has no start declaration")]
    MissingStart,
    #[error("start symbol `{0}` has no rules")]
    UndefinedStart(String),
    #[error("grammar is already augmented")]
    AlreadyAugmented,
}

/// A context-free grammar. Symbols and rules are addressed by dense ids.
///
/// Terminals are fixed when the grammar is built: a symbol is a terminal
/// iff it appears on no LHS. Symbols introduced later by rewrites are
/// always nonterminals, even if a rewrite leaves them without rules.
#[derive(Clone, Debug)]
pub struct Grammar {
    symbols: Vec<Symbol>,
    by_name: HashMap<String, SymbolId>,
    rules: Vec<Rule>,
    by_lhs: Vec<Vec<RuleId>>,
    start: SymbolId,
    accept: Option<RuleId>,
}

impl Grammar {
    pub(crate) fn from_parts(
        symbols: Vec<Symbol>,
        rules: Vec<Rule>,
        start: SymbolId,
        accept: Option<RuleId>,
    ) -> Self {
        let by_name = symbols
            .iter()
            .enumerate()
            .map(|(i, s)| (s.name.clone(), SymbolId::new(i)))
            .collect();
        let mut by_lhs = vec![Vec::new(); symbols.len()];
        for (i, rule) in rules.iter().enumerate() {
            by_lhs[rule.lhs.index()].push(RuleId::new(i));
        }
        Grammar {
            symbols,
            by_name,
            rules,
            by_lhs,
            start,
            accept,
        }
    }

    pub fn symbols(&self) -> impl Iterator<Item = SymbolId> + '_ {
        (0..self.symbols.len()).map(SymbolId::new)
    }

    pub fn symbol_count(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbol(&self, id: SymbolId) -> &Symbol {
        &self.symbols[id.index()]
    }

    pub fn name(&self, id: SymbolId) -> &str {
        &self.symbols[id.index()].name
    }

    pub fn is_terminal(&self, id: SymbolId) -> bool {
        self.symbols[id.index()].is_terminal
    }

    pub fn lookup(&self, name: &str) -> Option<SymbolId> {
        self.by_name.get(name).copied()
    }

    pub fn terminals(&self) -> impl Iterator<Item = SymbolId> + '_ {
        self.symbols().filter(|&s| self.is_terminal(s))
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule_ids(&self) -> impl Iterator<Item = RuleId> {
        (0..self.rules.len()).map(RuleId::new)
    }

    pub fn rule(&self, id: RuleId) -> &Rule {
        &self.rules[id.index()]
    }

    pub fn rules_for(&self, lhs: SymbolId) -> &[RuleId] {
        &self.by_lhs[lhs.index()]
    }

    /// The symbol the accept rule derives (the user's start symbol).
    pub fn start(&self) -> SymbolId {
        self.start
    }

    pub fn accept_rule(&self) -> Option<RuleId> {
        self.accept
    }

    pub fn accept(&self) -> Option<SymbolId> {
        self.accept.map(|r| self.rule(r).lhs)
    }

    pub fn is_augmented(&self) -> bool {
        self.accept.is_some()
    }

    /// The symbol sentences are derived from: the accept symbol when
    /// augmented, the start symbol otherwise.
    pub fn root(&self) -> SymbolId {
        self.accept().unwrap_or(self.start)
    }

    /// Adds a fresh accept symbol and the rule `accept ::= start`.
    pub fn augment(&self) -> Result<Grammar, GrammarError> {
        if self.accept.is_some() {
            return Err(GrammarError::AlreadyAugmented);
        }
        let mut symbols = self.symbols.clone();
        let mut name = format!("{}′", self.name(self.start));
        while self.by_name.contains_key(&name) {
            name.push('′');
        }
        let accept = SymbolId::new(symbols.len());
        symbols.push(Symbol {
            name,
            is_terminal: false,
        });
        let mut rules = self.rules.clone();
        let accept_rule = RuleId::new(rules.len());
        rules.push(Rule {
            lhs: accept,
            rhs: vec![self.start],
        });
        Ok(Grammar::from_parts(symbols, rules, self.start, Some(accept_rule)))
    }

    pub fn display_rule(&self, id: RuleId) -> DisplayRule<'_> {
        DisplayRule {
            grammar: self,
            rule: self.rule(id),
            dot: None,
        }
    }

    pub fn display_dotted(&self, id: RuleId, dot: usize) -> DisplayRule<'_> {
        DisplayRule {
            grammar: self,
            rule: self.rule(id),
            dot: Some(dot),
        }
    }
}

/// Renders a rule as `LHS ::= RHS`, optionally with a dot.
pub struct DisplayRule<'a> {
    grammar: &'a Grammar,
    rule: &'a Rule,
    dot: Option<usize>,
}

impl fmt::Display for DisplayRule<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ::=", self.grammar.name(self.rule.lhs))?;
        for (i, &sym) in self.rule.rhs.iter().enumerate() {
            if self.dot == Some(i) {
                write!(f, " •")?;
            }
            write!(f, " {}", self.grammar.name(sym))?;
        }
        if self.dot == Some(self.rule.rhs.len()) {
            write!(f, " •")?;
        }
        Ok(())
    }
}

/// Builds a grammar from symbol names. Duplicate rules are dropped.
#[derive(Default)]
pub struct GrammarBuilder {
    names: Vec<String>,
    index: HashMap<String, usize>,
    rules: Vec<(usize, Vec<usize>)>,
    start: Option<String>,
}

impl GrammarBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), self.names.len() - 1);
        self.names.len() - 1
    }

    pub fn start(mut self, name: &str) -> Self {
        self.start = Some(name.to_string());
        self
    }

    pub fn rule(mut self, lhs: &str, rhs: &[&str]) -> Self {
        self.push_rule(lhs, rhs);
        self
    }

    pub fn push_rule(&mut self, lhs: &str, rhs: &[&str]) {
        let lhs = self.intern(lhs);
        let rhs = rhs.iter().map(|s| self.intern(s)).collect::<Vec<_>>();
        if !self.rules.iter().any(|(l, r)| *l == lhs && *r == rhs) {
            self.rules.push((lhs, rhs));
        }
    }

    pub fn build(self) -> Result<Grammar, GrammarError> {
        let start_name = self.start.ok_or(GrammarError::MissingStart)?;
        let mut is_lhs = vec![false; self.names.len()];
        for (lhs, _) in &self.rules {
            is_lhs[*lhs] = true;
        }
        let start = match self.index.get(&start_name) {
            Some(&i) if is_lhs[i] => SymbolId::new(i),
            _ => return Err(GrammarError::UndefinedStart(start_name)),
        };
        let symbols = self
            .names
            .into_iter()
            .zip(is_lhs)
            .map(|(name, lhs)| Symbol {
                name,
                is_terminal: !lhs,
            })
            .collect();
        let rules = self
            .rules
            .into_iter()
            .map(|(lhs, rhs)| Rule {
                lhs: SymbolId::new(lhs),
                rhs: rhs.into_iter().map(SymbolId::new).collect(),
            })
            .collect();
        Ok(Grammar::from_parts(symbols, rules, start, None))
    }
}

/// Parses the line-oriented grammar format:
///
/// ```text
/// # comment
/// start: S
/// S ::= A B
/// A ::=
/// ```
pub fn parse_grammar(text: &str) -> Result<Grammar, GrammarError> {
    let mut builder = GrammarBuilder::new();
    let mut start_line = None;
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |message: &str| GrammarError::Syntax {
            line: line_no,
            message: message.to_string(),
        };
        if let Some(rest) = line.strip_prefix("start:") {
            if start_line.is_some() {
                return Err(GrammarError::DuplicateStart { line: line_no });
            }
            let mut names = rest.split_whitespace();
            let name = names.next().ok_or_else(|| syntax("missing start symbol name"))?;
            if names.next().is_some() {
                return Err(syntax("start declaration takes exactly one symbol"));
            }
            if name.contains("::=") {
                return Err(syntax("`::=` is not a valid symbol name"));
            }
            start_line = Some(line_no);
            builder.start = Some(name.to_string());
            continue;
        }
        let (lhs, rhs) = line
            .split_once("::=")
            .ok_or_else(|| syntax("expected `start: <name>` or `<lhs> ::= <rhs>`"))?;
        let mut lhs_names = lhs.split_whitespace();
        let lhs = lhs_names.next().ok_or_else(|| syntax("rule has no left-hand side"))?;
        if lhs_names.next().is_some() {
            return Err(syntax("left-hand side must be a single symbol"));
        }
        if rhs.contains("::=") {
            return Err(syntax("more than one `::=` on a line"));
        }
        let rhs: Vec<&str> = rhs.split_whitespace().collect();
        builder.push_rule(lhs, &rhs);
    }
    builder.build()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NullClass {
    NonNullable,
    ProperNullable,
    Nulling,
}

impl NullClass {
    pub fn is_nullable(self) -> bool {
        self != NullClass::NonNullable
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NullClass::NonNullable => "non-nullable",
            NullClass::ProperNullable => "proper-nullable",
            NullClass::Nulling => "nulling",
        }
    }
}

impl fmt::Display for NullClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-symbol and per-rule nullability of one grammar.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolClass {
    symbols: Vec<NullClass>,
    rules: Vec<NullClass>,
}

impl SymbolClass {
    pub fn symbol(&self, id: SymbolId) -> NullClass {
        self.symbols[id.index()]
    }

    pub fn rule(&self, id: RuleId) -> NullClass {
        self.rules[id.index()]
    }

    pub fn is_nullable(&self, id: SymbolId) -> bool {
        self.symbol(id).is_nullable()
    }

    pub fn is_nulling(&self, id: SymbolId) -> bool {
        self.symbol(id) == NullClass::Nulling
    }

    pub fn is_proper_nullable(&self, id: SymbolId) -> bool {
        self.symbol(id) == NullClass::ProperNullable
    }

    pub fn count(&self, class: NullClass) -> usize {
        self.symbols.iter().filter(|&&c| c == class).count()
    }
}

/// Classifies every symbol and rule.
///
/// Two least fixed points: `nullable` (some rule has an all-nullable RHS)
/// and `escapes` (the symbol can derive a sentential form containing a
/// non-nullable symbol). A symbol is nulling iff it is nullable and does
/// not escape.
pub fn classify(g: &Grammar) -> SymbolClass {
    let n = g.symbol_count();
    let mut nullable = vec![false; n];
    loop {
        let mut changed = false;
        for rule in g.rules() {
            if !nullable[rule.lhs.index()] && rule.rhs.iter().all(|s| nullable[s.index()]) {
                nullable[rule.lhs.index()] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut escapes: Vec<bool> = nullable.iter().map(|&b| !b).collect();
    loop {
        let mut changed = false;
        for rule in g.rules() {
            if !escapes[rule.lhs.index()] && rule.rhs.iter().any(|s| escapes[s.index()]) {
                escapes[rule.lhs.index()] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let symbols: Vec<NullClass> = (0..n)
        .map(|i| match (nullable[i], escapes[i]) {
            (false, _) => NullClass::NonNullable,
            (true, true) => NullClass::ProperNullable,
            (true, false) => NullClass::Nulling,
        })
        .collect();
    let rules = g
        .rules()
        .iter()
        .map(|rule| {
            if rule.rhs.iter().all(|s| symbols[s.index()] == NullClass::Nulling) {
                NullClass::Nulling
            } else if rule.rhs.iter().all(|s| symbols[s.index()].is_nullable()) {
                NullClass::ProperNullable
            } else {
                NullClass::NonNullable
            }
        })
        .collect();
    SymbolClass { symbols, rules }
}
