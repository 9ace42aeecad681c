//! Semantics-preserving grammar rewrites.
//!
//! [`chaf_rewrite`] removes proper nullables by splitting long rules into
//! chunks with at most two proper nullables each and factoring every chunk
//! over the null/non-null choice of its proper nullables. [`nnf_rewrite`]
//! factors whole rules instead (2^pn rules each). [`eliminate_nulling`]
//! then drops every nulling symbol, recording where each one was in the
//! rule's [`NullingMarkup`].
//!
//! Every rule of a [`RewrittenGrammar`] carries a [`RewriteBinding`] that
//! ties it back to the user's rule and says which child-value slots its
//! RHS positions fill.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::grammar::{classify, Grammar, Rule, RuleId, Symbol, SymbolClass, SymbolId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    PassThrough,
    Verbatim,
    ChafHead,
    ChafInner,
    ChafTail,
    NullingAlias,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::PassThrough => "pass-through",
            Role::Verbatim => "verbatim",
            Role::ChafHead => "chaf-head",
            Role::ChafInner => "chaf-inner",
            Role::ChafTail => "chaf-tail",
            Role::NullingAlias => "nulling-alias",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Links a rewritten rule to the pre-rewrite rule it came from.
///
/// `slot_map` is indexed by position in the nulling-present RHS. `None`
/// marks the continuation symbol of a CHAF head or inner rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewriteBinding {
    pub pre_rewrite: Option<RuleId>,
    pub role: Role,
    pub slot_map: Vec<Option<usize>>,
    pub childv_len: usize,
}

impl RewriteBinding {
    fn identity(role: Role, pre: RuleId, len: usize) -> Self {
        RewriteBinding {
            pre_rewrite: Some(pre),
            role,
            slot_map: (0..len).map(Some).collect(),
            childv_len: len,
        }
    }

    /// The continuation symbol position, for CHAF head and inner rules.
    pub fn continuation(&self) -> Option<usize> {
        self.slot_map.iter().position(Option::is_none)
    }

    pub fn slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.slot_map.iter().flatten().copied()
    }
}

/// Where nulling symbols were removed from a rule.
///
/// Each entry `(pos, sym)` means `sym` sat immediately before position
/// `pos` of the nulling-free RHS; entries sharing a position are in
/// left-to-right order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NullingMarkup {
    /// Id of the nulling-present rule in the grammar that was stripped.
    pub present_id: RuleId,
    pub present: Rule,
    pub removed: Vec<(usize, SymbolId)>,
}

impl NullingMarkup {
    /// Re-inserts the removed symbols into a nulling-free RHS.
    pub fn restore(&self, nulling_free: &[SymbolId]) -> Vec<SymbolId> {
        let mut out = Vec::with_capacity(nulling_free.len() + self.removed.len());
        let mut removed = self.removed.iter().peekable();
        for k in 0..=nulling_free.len() {
            while let Some(&&(pos, sym)) = removed.peek() {
                if pos != k {
                    break;
                }
                out.push(sym);
                removed.next();
            }
            if k < nulling_free.len() {
                out.push(nulling_free[k]);
            }
        }
        out
    }

    /// Dot position in the nulling-present rule. Nulled symbols right
    /// before the next non-null symbol count as already passed.
    pub fn present_dot(&self, dot: usize) -> usize {
        dot + self.removed.iter().filter(|&&(pos, _)| pos <= dot).count()
    }

    /// Merges nulling-free child values with values for the removed
    /// symbols, in nulling-present order.
    pub fn interleave<V>(&self, children: Vec<V>, mut nulled: impl FnMut(SymbolId) -> V) -> Vec<V> {
        let n = children.len();
        let mut out = Vec::with_capacity(n + self.removed.len());
        let mut removed = self.removed.iter().peekable();
        let mut children = children.into_iter();
        for k in 0..=n {
            while let Some(&&(pos, sym)) = removed.peek() {
                if pos != k {
                    break;
                }
                out.push(nulled(sym));
                removed.next();
            }
            if let Some(c) = children.next() {
                out.push(c);
            }
        }
        out
    }
}

/// Identity of a rule that also takes its nulling markup into account.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleKey {
    pub lhs: SymbolId,
    pub rhs: Vec<SymbolId>,
    pub markup: Vec<(usize, SymbolId)>,
}

pub fn rule_identity(rule: &Rule, markup: Option<&NullingMarkup>) -> RuleKey {
    RuleKey {
        lhs: rule.lhs,
        rhs: rule.rhs.clone(),
        markup: markup.map(|m| m.removed.clone()).unwrap_or_default(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Form {
    Nnf,
    Chaf,
    NullFree,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RewriteError {
    #[error("grammar must be augmented before rewriting")]
    NotAugmented,
    #[error("nulling elimination needs a CHAF or NNF grammar")]
    NotFactored,
    #[error("rule {rule} has {pn} proper nullables; NNF would need {count} rules")]
    TooManyFactorings { rule: String, pn: usize, count: u64 },
    #[error("CHAF slot maps of {rule} do not partition its child slots")]
    SlotCoverage { rule: String },
}

/// A rewritten grammar plus everything needed to map it back.
#[derive(Clone, Debug)]
pub struct RewrittenGrammar {
    original: Grammar,
    grammar: Grammar,
    bindings: Vec<RewriteBinding>,
    markup: Vec<Option<NullingMarkup>>,
    aliases: BTreeMap<SymbolId, SymbolId>,
    nullable_start: bool,
    form: Form,
}

impl RewrittenGrammar {
    /// The augmented pre-rewrite grammar.
    pub fn original(&self) -> &Grammar {
        &self.original
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn form(&self) -> Form {
        self.form
    }

    pub fn binding(&self, rule: RuleId) -> &RewriteBinding {
        &self.bindings[rule.index()]
    }

    pub fn markup(&self, rule: RuleId) -> Option<&NullingMarkup> {
        self.markup[rule.index()].as_ref()
    }

    /// True iff the pre-rewrite grammar derives the empty string.
    pub fn nullable_start(&self) -> bool {
        self.nullable_start
    }

    /// Nulling aliases, mapped to the proper nullable they stand for.
    pub fn aliases(&self) -> &BTreeMap<SymbolId, SymbolId> {
        &self.aliases
    }

    /// The pre-rewrite symbol whose nulled value a nulled `sym` carries.
    pub fn nulled_origin(&self, sym: SymbolId) -> SymbolId {
        self.aliases.get(&sym).copied().unwrap_or(sym)
    }

    pub fn key(&self, rule: RuleId) -> RuleKey {
        rule_identity(self.grammar.rule(rule), self.markup(rule))
    }

    /// The rule as it was before nulling symbols were stripped.
    pub fn present_rule(&self, rule: RuleId) -> &Rule {
        match self.markup(rule) {
            Some(m) => &m.present,
            None => self.grammar.rule(rule),
        }
    }

    /// Maps a dot on a rewritten rule to a dot on its pre-rewrite rule.
    ///
    /// For CHAF pieces the dot is the one reached in the whole pre-rewrite
    /// rule, assuming earlier chunks are complete.
    pub fn pre_rewrite_dot(&self, rule: RuleId, dot: usize) -> Option<(RuleId, usize)> {
        let binding = self.binding(rule);
        let pre = binding.pre_rewrite?;
        let present_dot = match self.markup(rule) {
            Some(m) => m.present_dot(dot),
            None => dot,
        };
        let passed = binding.slot_map[..present_dot]
            .iter()
            .map(|s| s.map_or(binding.childv_len, |s| s + 1))
            .max();
        let pre_dot = passed.unwrap_or_else(|| binding.slots().min().unwrap_or(0));
        Some((pre, pre_dot))
    }

    /// `LHS ::= RHS   # role=... pre=... markup=...` per rule.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for r in self.grammar.rule_ids() {
            let b = self.binding(r);
            let pre = match b.pre_rewrite {
                Some(p) => self.original.display_rule(p).to_string(),
                None => "-".to_string(),
            };
            let markup = match self.markup(r) {
                Some(m) if !m.removed.is_empty() => m
                    .removed
                    .iter()
                    .map(|&(pos, sym)| format!("({pos},{})", self.grammar.name(sym)))
                    .collect::<Vec<_>>()
                    .join(","),
                _ => "-".to_string(),
            };
            let _ = writeln!(
                out,
                "{}   # role={} pre={} markup={}",
                self.grammar.display_rule(r),
                b.role,
                pre,
                markup
            );
        }
        out
    }

    /// Number of rewritten rules per role.
    pub fn role_counts(&self) -> BTreeMap<Role, usize> {
        let mut counts = BTreeMap::new();
        for b in &self.bindings {
            *counts.entry(b.role).or_insert(0) += 1;
        }
        counts
    }

    /// Number of rewritten rules that came from `pre`.
    pub fn rules_from(&self, pre: RuleId) -> usize {
        self.bindings.iter().filter(|b| b.pre_rewrite == Some(pre)).count()
    }
}

struct SymbolTable {
    symbols: Vec<Symbol>,
    taken: HashSet<String>,
}

impl SymbolTable {
    fn from(g: &Grammar) -> Self {
        let symbols: Vec<Symbol> = g.symbols().map(|s| g.symbol(s).clone()).collect();
        let taken = symbols.iter().map(|s| s.name.clone()).collect();
        SymbolTable { symbols, taken }
    }

    fn fresh(&mut self, candidates: impl IntoIterator<Item = String>) -> SymbolId {
        let name = candidates
            .into_iter()
            .find(|n| !self.taken.contains(n))
            .expect("candidate names are unbounded");
        self.taken.insert(name.clone());
        self.symbols.push(Symbol {
            name,
            is_terminal: false,
        });
        SymbolId::new(self.symbols.len() - 1)
    }
}

/// Shared state of the NNF and CHAF rewrites.
struct Factoring<'a> {
    g: &'a Grammar,
    cls: &'a SymbolClass,
    table: SymbolTable,
    aliases: BTreeMap<SymbolId, SymbolId>,
    alias_order: Vec<SymbolId>,
    continuations: HashMap<SymbolId, usize>,
    rules: Vec<Rule>,
    bindings: Vec<RewriteBinding>,
}

impl<'a> Factoring<'a> {
    fn new(g: &'a Grammar, cls: &'a SymbolClass) -> Result<Self, RewriteError> {
        if !g.is_augmented() {
            return Err(RewriteError::NotAugmented);
        }
        Ok(Factoring {
            g,
            cls,
            table: SymbolTable::from(g),
            aliases: BTreeMap::new(),
            alias_order: Vec::new(),
            continuations: HashMap::new(),
            rules: Vec::new(),
            bindings: Vec::new(),
        })
    }

    fn alias(&mut self, sym: SymbolId) -> SymbolId {
        if let Some(&a) = self.aliases.iter().find(|(_, &orig)| orig == sym).map(|(a, _)| a) {
            return a;
        }
        let base = format!("{}e", self.g.name(sym));
        let alias = self
            .table
            .fresh(std::iter::once(base.clone()).chain((1..).map(|n| format!("{base}{n}"))));
        self.aliases.insert(alias, sym);
        self.alias_order.push(alias);
        alias
    }

    fn continuation(&mut self, lhs: SymbolId) -> SymbolId {
        let base = self.g.name(lhs).to_string();
        let next = self.continuations.entry(lhs).or_insert(1);
        while self.table.taken.contains(&format!("{base}{next}")) {
            *next += 1;
        }
        let name = format!("{base}{next}");
        *next += 1;
        self.table.fresh(std::iter::once(name))
    }

    fn is_nulling(&self, sym: SymbolId) -> bool {
        self.aliases.contains_key(&sym) || (sym.index() < self.g.symbol_count() && self.cls.is_nulling(sym))
    }

    fn push(&mut self, lhs: SymbolId, rhs: Vec<SymbolId>, binding: RewriteBinding) {
        debug_assert_eq!(rhs.len(), binding.slot_map.len());
        self.rules.push(Rule { lhs, rhs });
        self.bindings.push(binding);
    }

    /// Rules needing no factoring. Returns false if `r` has proper
    /// nullables and still needs to be factored.
    fn pass_unfactored(&mut self, r: RuleId) -> bool {
        let rule = self.g.rule(r);
        if Some(r) == self.g.accept_rule() {
            self.push(rule.lhs, rule.rhs.clone(), RewriteBinding::identity(Role::PassThrough, r, 1));
            return true;
        }
        if self.cls.rule(r) == crate::grammar::NullClass::Nulling {
            // the empty derivations of a proper nullable live on in its alias
            if self.cls.is_nulling(rule.lhs) {
                let b = RewriteBinding::identity(Role::Verbatim, r, rule.rhs.len());
                self.push(rule.lhs, rule.rhs.clone(), b);
            }
            return true;
        }
        if !rule.rhs.iter().any(|&s| self.cls.is_proper_nullable(s)) {
            let b = RewriteBinding::identity(Role::Verbatim, r, rule.rhs.len());
            self.push(rule.lhs, rule.rhs.clone(), b);
            return true;
        }
        false
    }

    /// Replaces the proper nullables at `positions` selected by `mask`
    /// with their aliases.
    fn factor(&mut self, rhs: &[SymbolId], positions: &[usize], mask: u64, offset: usize) -> Vec<SymbolId> {
        let mut out = rhs.to_vec();
        for (bit, &p) in positions.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                out[p - offset] = self.alias(rhs[p - offset]);
            }
        }
        out
    }

    fn finish(mut self, form: Form) -> RewrittenGrammar {
        for alias in std::mem::take(&mut self.alias_order) {
            let orig = self.aliases[&alias];
            let empty = self
                .g
                .rules_for(orig)
                .iter()
                .copied()
                .find(|&r| self.g.rule(r).rhs.is_empty());
            let binding = match empty {
                Some(r) => RewriteBinding::identity(Role::Verbatim, r, 0),
                None => RewriteBinding {
                    pre_rewrite: None,
                    role: Role::NullingAlias,
                    slot_map: Vec::new(),
                    childv_len: 0,
                },
            };
            self.push(alias, Vec::new(), binding);
        }
        let accept_rule = self.bindings.iter().position(|b| b.role == Role::PassThrough);
        let grammar = Grammar::from_parts(
            self.table.symbols,
            self.rules,
            self.g.start(),
            accept_rule.map(RuleId::new),
        );
        let n = grammar.rules().len();
        RewrittenGrammar {
            nullable_start: self.cls.is_nullable(self.g.start()),
            original: self.g.clone(),
            grammar,
            bindings: self.bindings,
            markup: vec![None; n],
            aliases: self.aliases,
            form,
        }
    }
}

fn proper_positions(rhs: &[SymbolId], cls: &SymbolClass) -> Vec<usize> {
    rhs.iter()
        .enumerate()
        .filter(|(_, &s)| cls.is_proper_nullable(s))
        .map(|(i, _)| i)
        .collect()
}

/// Whether NNF output still lets `sym` derive the empty string: some rule
/// of `sym` has a proper nullable and nothing but nullables, so its
/// all-nulled factoring keeps `sym` on the left.
fn nnf_keeps_nullable(g: &Grammar, cls: &SymbolClass, sym: SymbolId) -> bool {
    g.rules_for(sym)
        .iter()
        .any(|&r| cls.rule(r) == crate::grammar::NullClass::ProperNullable)
}

/// True if NNF must add `S′ ::= Se` to keep the empty sentence: the
/// start symbol is proper nullable only through rules that move to its
/// alias.
fn nnf_nulls_accept(g: &Grammar, cls: &SymbolClass) -> bool {
    cls.is_proper_nullable(g.start()) && !nnf_keeps_nullable(g, cls, g.start())
}

/// Number of rules NNF emits for `r`, without building them.
pub fn nnf_rule_count(g: &Grammar, cls: &SymbolClass, r: RuleId) -> u64 {
    let rule = g.rule(r);
    if Some(r) == g.accept_rule() {
        return 1 + u64::from(nnf_nulls_accept(g, cls));
    }
    if cls.rule(r) == crate::grammar::NullClass::Nulling {
        return u64::from(cls.is_nulling(rule.lhs));
    }
    1u64 << proper_positions(&rule.rhs, cls).len()
}

/// Largest number of proper nullables in one rule NNF will materialize.
pub const NNF_MAX_PROPER_NULLABLES: usize = 20;

/// Nihilist normal form: every rule with `pn` proper nullables becomes
/// 2^pn rules, one per choice of nulled occurrences. The accept rule is
/// left as is unless the start symbol would lose its empty derivation,
/// in which case `S′ ::= Se` is added beside it.
pub fn nnf_rewrite(g: &Grammar, cls: &SymbolClass) -> Result<RewrittenGrammar, RewriteError> {
    let mut f = Factoring::new(g, cls)?;
    for r in g.rule_ids() {
        if f.pass_unfactored(r) {
            if Some(r) == g.accept_rule() && nnf_nulls_accept(g, cls) {
                let nulled = f.alias(g.start());
                let b = RewriteBinding::identity(Role::PassThrough, r, 1);
                f.push(g.rule(r).lhs, vec![nulled], b);
            }
            continue;
        }
        let rule = g.rule(r);
        let positions = proper_positions(&rule.rhs, cls);
        if positions.len() > NNF_MAX_PROPER_NULLABLES {
            return Err(RewriteError::TooManyFactorings {
                rule: g.display_rule(r).to_string(),
                pn: positions.len(),
                count: nnf_rule_count(g, cls, r),
            });
        }
        for mask in (0..1u64 << positions.len()).rev() {
            let rhs = f.factor(&rule.rhs, &positions, mask, 0);
            let b = RewriteBinding::identity(Role::Verbatim, r, rhs.len());
            f.push(rule.lhs, rhs, b);
        }
    }
    Ok(f.finish(Form::Nnf))
}

/// Splits a rule's RHS so that no piece has more than two proper
/// nullables: cut right after the first proper nullable while more than
/// two remain. Returns half-open position ranges.
fn chaf_chunks(len: usize, positions: &[usize]) -> Vec<(usize, usize)> {
    let mut chunks = Vec::new();
    let mut start = 0;
    let mut rest = positions;
    while rest.len() > 2 {
        chunks.push((start, rest[0] + 1));
        start = rest[0] + 1;
        rest = &rest[1..];
    }
    chunks.push((start, len));
    chunks
}

/// Chomsky-Horspool-Aycock form.
///
/// Rules with proper nullables are split into chunks (see `chaf_chunks`)
/// joined by fresh continuation symbols `S1`, `S2`, …, and each chunk is
/// factored over its proper nullables. Alternatives whose RHS would be
/// entirely nulling are dropped; an empty parse of the start symbol is
/// reported through [`RewrittenGrammar::nullable_start`] instead.
pub fn chaf_rewrite(g: &Grammar, cls: &SymbolClass) -> Result<RewrittenGrammar, RewriteError> {
    let mut f = Factoring::new(g, cls)?;
    for r in g.rule_ids() {
        if f.pass_unfactored(r) {
            continue;
        }
        let rule = g.rule(r).clone();
        let n = rule.rhs.len();
        let positions = proper_positions(&rule.rhs, cls);
        let chunks = chaf_chunks(n, &positions);
        let mut heads = vec![rule.lhs];
        for _ in 1..chunks.len() {
            heads.push(f.continuation(rule.lhs));
        }
        for (k, &(start, end)) in chunks.iter().enumerate() {
            let lhs = heads[k];
            let last = k + 1 == chunks.len();
            let chunk_positions: Vec<usize> = positions.iter().copied().filter(|&p| start <= p && p < end).collect();
            let slots: Vec<Option<usize>> = (start..end).map(Some).collect();
            let rest_nullable = rule.rhs[end..].iter().all(|&s| cls.is_nullable(s));
            for mask in 0..1u64 << chunk_positions.len() {
                let piece = f.factor(&rule.rhs[start..end], &chunk_positions, mask, start);
                if !last {
                    let mut rhs = piece.clone();
                    rhs.push(heads[k + 1]);
                    let mut slot_map = slots.clone();
                    slot_map.push(None);
                    let role = if k == 0 { Role::ChafHead } else { Role::ChafInner };
                    f.push(
                        lhs,
                        rhs,
                        RewriteBinding {
                            pre_rewrite: Some(r),
                            role,
                            slot_map,
                            childv_len: n,
                        },
                    );
                    if !rest_nullable {
                        continue;
                    }
                }
                let mut rhs = piece;
                for &s in &rule.rhs[end..] {
                    rhs.push(if cls.is_proper_nullable(s) { f.alias(s) } else { s });
                }
                if rhs.iter().all(|&s| f.is_nulling(s)) {
                    continue;
                }
                let role = if k == 0 && !last { Role::Verbatim } else { Role::ChafTail };
                f.push(
                    lhs,
                    rhs,
                    RewriteBinding {
                        pre_rewrite: Some(r),
                        role,
                        slot_map: (start..n).map(Some).collect(),
                        childv_len: n,
                    },
                );
            }
        }
    }
    let rg = f.finish(Form::Chaf);
    verify_slot_coverage(&rg)?;
    Ok(rg)
}

/// Checks that along every CHAF chain the slot maps partition the child
/// slots of the pre-rewrite rule.
///
/// Checked per continuation symbol: every rule of a continuation must
/// cover the same slots, and a chunk-0 rule's own slots plus its
/// continuation's slots must be exactly `0..childv_len` with no overlap.
pub fn verify_slot_coverage(rg: &RewrittenGrammar) -> Result<(), RewriteError> {
    let g = rg.grammar();
    let mut covered: HashMap<SymbolId, Option<BTreeSet<usize>>> = HashMap::new();

    fn cover(
        rg: &RewrittenGrammar,
        sym: SymbolId,
        memo: &mut HashMap<SymbolId, Option<BTreeSet<usize>>>,
    ) -> Option<BTreeSet<usize>> {
        if let Some(c) = memo.get(&sym) {
            return c.clone();
        }
        let g = rg.grammar();
        let mut result: Option<BTreeSet<usize>> = None;
        let mut consistent = true;
        for &r in g.rules_for(sym) {
            let Some(mine) = rule_cover(rg, r, memo) else {
                consistent = false;
                break;
            };
            match &result {
                None => result = Some(mine),
                Some(prev) if *prev == mine => {}
                Some(_) => {
                    consistent = false;
                    break;
                }
            }
        }
        let out = if consistent { result } else { None };
        memo.insert(sym, out.clone());
        out
    }

    fn rule_cover(
        rg: &RewrittenGrammar,
        r: RuleId,
        memo: &mut HashMap<SymbolId, Option<BTreeSet<usize>>>,
    ) -> Option<BTreeSet<usize>> {
        let b = rg.binding(r);
        let mut own = BTreeSet::new();
        for s in b.slots() {
            if s >= b.childv_len || !own.insert(s) {
                return None;
            }
        }
        if let Some(pos) = b.continuation() {
            let cont = rg.present_rule(r).rhs[pos];
            let rest = cover(rg, cont, memo)?;
            if !own.is_disjoint(&rest) {
                return None;
            }
            own.extend(rest);
        }
        Some(own)
    }

    for r in g.rule_ids() {
        let b = rg.binding(r);
        let Some(pre) = b.pre_rewrite else { continue };
        let chain_start = rg.present_rule(r).lhs == rg.original().rule(pre).lhs;
        if !chain_start || b.role == Role::NullingAlias {
            continue;
        }
        let full: BTreeSet<usize> = (0..b.childv_len).collect();
        if rule_cover(rg, r, &mut covered) != Some(full) {
            return Err(RewriteError::SlotCoverage {
                rule: g.display_rule(r).to_string(),
            });
        }
    }
    Ok(())
}

/// Removes every nulling symbol from every RHS and every rule that
/// defines a nulling symbol. The removed positions are kept as nulling
/// markup; rules that end up with an empty RHS are dropped.
pub fn eliminate_nulling(rg: &RewrittenGrammar) -> Result<RewrittenGrammar, RewriteError> {
    if rg.form == Form::NullFree {
        return Err(RewriteError::NotFactored);
    }
    let g = &rg.grammar;
    let cls = classify(g);
    let mut rules = Vec::new();
    let mut bindings = Vec::new();
    let mut markup = Vec::new();
    let mut accept = None;
    for r in g.rule_ids() {
        let rule = g.rule(r);
        if cls.is_nulling(rule.lhs) {
            continue;
        }
        let mut rhs = Vec::new();
        let mut removed = Vec::new();
        for &s in &rule.rhs {
            if cls.is_nulling(s) {
                removed.push((rhs.len(), s));
            } else {
                rhs.push(s);
            }
        }
        if rhs.is_empty() {
            continue;
        }
        if Some(r) == g.accept_rule() {
            accept = Some(RuleId::new(rules.len()));
        }
        rules.push(Rule { lhs: rule.lhs, rhs });
        bindings.push(rg.bindings[r.index()].clone());
        markup.push(Some(NullingMarkup {
            present_id: r,
            present: rule.clone(),
            removed,
        }));
    }
    let symbols = g.symbols().map(|s| g.symbol(s).clone()).collect();
    Ok(RewrittenGrammar {
        original: rg.original.clone(),
        grammar: Grammar::from_parts(symbols, rules, g.start(), accept),
        bindings,
        markup,
        aliases: rg.aliases.clone(),
        nullable_start: rg.nullable_start,
        form: Form::NullFree,
    })
}

/// The usual pipeline: classify, CHAF, strip nulling symbols.
pub fn nulling_free(g: &Grammar) -> Result<RewrittenGrammar, RewriteError> {
    let cls = classify(g);
    eliminate_nulling(&chaf_rewrite(g, &cls)?)
}
