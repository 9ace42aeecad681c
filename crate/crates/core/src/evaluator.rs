//! Parse trees from a finished chart, and evaluation of those trees with
//! semantics written against the pre-rewrite grammar.
//!
//! A tree is built over the nulling-free grammar. Evaluation puts the
//! user's view back together: nulled symbols are re-inserted from the
//! nulling markup, pass-through rules hand their child up unchanged, and
//! the pieces of a CHAF-factored rule fill one shared child-value array
//! (`ChildV`) that the head of the chain hands to the original rule
//! function.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::grammar::{Grammar, RuleId, SymbolId, Token};
use crate::recognizer::{Chart, DottedRule};
use crate::rewrite::{RewriteBinding, RewrittenGrammar, Role};
use crate::semantics::{ParseContext, Semantics, SemanticsError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    /// A rule of the nulling-free grammar.
    Rule { rule: RuleId, children: Vec<ParseNode> },
    Terminal { symbol: SymbolId, value: String },
    Nulled { symbol: SymbolId },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseNode {
    pub kind: NodeKind,
    /// `[start, end)` in token positions.
    pub span: (usize, usize),
}

impl ParseNode {
    pub fn children(&self) -> &[ParseNode] {
        match &self.kind {
            NodeKind::Rule { children, .. } => children,
            _ => &[],
        }
    }

    /// `rule <LHS ::= RHS> span=[i,j)`, `token <name>=<value>` or
    /// `nulled <name>`, indented two spaces per level, over `g`.
    pub fn render(&self, g: &Grammar) -> String {
        let mut out = String::new();
        self.render_into(g, 0, &mut out);
        out
    }

    fn render_into(&self, g: &Grammar, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        match &self.kind {
            NodeKind::Rule { rule, children } => {
                let _ = writeln!(
                    out,
                    "{pad}rule <{}> span=[{},{})",
                    g.display_rule(*rule),
                    self.span.0,
                    self.span.1
                );
                for c in children {
                    c.render_into(g, depth + 1, out);
                }
            }
            NodeKind::Terminal { symbol, value } => {
                let _ = writeln!(out, "{pad}token {}={}", g.name(*symbol), value);
            }
            NodeKind::Nulled { symbol } => {
                let _ = writeln!(out, "{pad}nulled {}", g.name(*symbol));
            }
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("the input was not accepted")]
    NotAccepted,
    #[error("more than {0} parse trees")]
    TooAmbiguous(usize),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("childV slot {slot} written twice by {rule}")]
    SlotCollision { rule: String, slot: usize },
    #[error("childV slot {slot} empty when {rule} finished the chain")]
    UnpopulatedSlot { rule: String, slot: usize },
    #[error("{rule} expected a childV from its continuation symbol")]
    MissingChildV { rule: String },
}

/// Child values of one pre-rewrite rule, gathered across the pieces of
/// its CHAF chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChildV<V> {
    slots: Vec<Option<V>>,
}

impl<V> ChildV<V> {
    pub fn new(len: usize) -> Self {
        ChildV {
            slots: (0..len).map(|_| None).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn is_populated(&self, slot: usize) -> bool {
        self.slots[slot].is_some()
    }

    pub fn get(&self, slot: usize) -> Option<&V> {
        self.slots[slot].as_ref()
    }

    /// Writes a slot; `Err(slot)` if it already holds a value.
    pub fn set(&mut self, slot: usize, v: V) -> Result<(), usize> {
        match &mut self.slots[slot] {
            Some(_) => Err(slot),
            empty => {
                *empty = Some(v);
                Ok(())
            }
        }
    }

    /// All values, or `Err(slot)` naming the first empty slot.
    pub fn into_values(self) -> Result<Vec<V>, usize> {
        self.slots
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or(i))
            .collect()
    }
}

/// What a node evaluates to: a finished value, or a partly filled
/// `ChildV` on its way up a CHAF chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Partial<V> {
    Value(V),
    ChildV(ChildV<V>),
}

/// Writes this piece's values into `childv`, right to left, at the slots
/// its binding names. The continuation position is skipped.
fn fill<V>(binding: &RewriteBinding, childv: &mut ChildV<V>, values: Vec<Option<V>>, rule: &str) -> Result<(), EvalError> {
    for (pos, v) in values.into_iter().enumerate().rev() {
        let (Some(slot), Some(v)) = (binding.slot_map[pos], v) else {
            continue;
        };
        childv.set(slot, v).map_err(|slot| EvalError::SlotCollision {
            rule: rule.to_string(),
            slot,
        })?;
    }
    Ok(())
}

fn take_childv<V>(binding: &RewriteBinding, values: &mut [Option<Partial<V>>], rule: &str) -> Result<ChildV<V>, EvalError> {
    let missing = || EvalError::MissingChildV { rule: rule.to_string() };
    let pos = binding.continuation().ok_or_else(missing)?;
    match values[pos].take() {
        Some(Partial::ChildV(c)) => Ok(c),
        _ => Err(missing()),
    }
}

fn plain<V>(values: Vec<Option<Partial<V>>>, rule: &str) -> Result<Vec<Option<V>>, EvalError> {
    values
        .into_iter()
        .map(|v| match v {
            None => Ok(None),
            Some(Partial::Value(v)) => Ok(Some(v)),
            Some(Partial::ChildV(_)) => Err(EvalError::MissingChildV { rule: rule.to_string() }),
        })
        .collect()
}

/// Last piece of a chain: creates the `ChildV` and fills its own slots.
pub fn chaf_tail_step<V>(binding: &RewriteBinding, values: Vec<V>, rule: &str) -> Result<ChildV<V>, EvalError> {
    let mut childv = ChildV::new(binding.childv_len);
    fill(binding, &mut childv, values.into_iter().map(Some).collect(), rule)?;
    Ok(childv)
}

/// Middle piece: fills its slots in the `ChildV` carried by its last
/// child and passes it on.
pub fn chaf_inner_step<V>(binding: &RewriteBinding, values: Vec<Partial<V>>, rule: &str) -> Result<ChildV<V>, EvalError> {
    let mut values: Vec<Option<Partial<V>>> = values.into_iter().map(Some).collect();
    let mut childv = take_childv(binding, &mut values, rule)?;
    fill(binding, &mut childv, plain(values, rule)?, rule)?;
    Ok(childv)
}

/// First piece: fills the remaining slots and returns the complete child
/// values for the pre-rewrite rule. A head without continuation starts
/// its own `ChildV`.
pub fn chaf_head_step<V>(binding: &RewriteBinding, values: Vec<Partial<V>>, rule: &str) -> Result<Vec<V>, EvalError> {
    let mut values: Vec<Option<Partial<V>>> = values.into_iter().map(Some).collect();
    let mut childv = if binding.continuation().is_some() {
        take_childv(binding, &mut values, rule)?
    } else {
        ChildV::new(binding.childv_len)
    };
    fill(binding, &mut childv, plain(values, rule)?, rule)?;
    childv.into_values().map_err(|slot| EvalError::UnpopulatedSlot {
        rule: rule.to_string(),
        slot,
    })
}

struct Evaluator<'a, V> {
    rg: &'a RewrittenGrammar,
    input: &'a [Token],
    sem: &'a Semantics<V>,
}

impl<V: Clone> Evaluator<'_, V> {
    fn ctx(&self, span: (usize, usize)) -> ParseContext<'_> {
        ParseContext {
            grammar: self.rg.original(),
            input: self.input,
            span,
        }
    }

    fn nulled(&self, sym: SymbolId, at: usize) -> V {
        let origin = self.rg.nulled_origin(sym);
        self.sem.apply_nulled(&self.ctx((at, at)), origin)
    }

    fn eval(&self, node: &ParseNode) -> Result<Partial<V>, EvalError> {
        let (rule, children) = match &node.kind {
            NodeKind::Terminal { symbol, value } => {
                return Ok(Partial::Value(self.sem.apply_token(&self.ctx(node.span), *symbol, value)));
            }
            NodeKind::Nulled { symbol } => return Ok(Partial::Value(self.nulled(*symbol, node.span.0))),
            NodeKind::Rule { rule, children } => (*rule, children),
        };
        let mut values = Vec::with_capacity(children.len());
        for c in children {
            values.push(self.eval(c)?);
        }
        let values = match self.rg.markup(rule) {
            Some(m) => {
                let at = |k: usize| children.get(k).map_or(node.span.1, |c| c.span.0);
                let mut located = Vec::with_capacity(m.removed.len());
                for &(pos, sym) in &m.removed {
                    located.push(Partial::Value(self.nulled(sym, at(pos))));
                }
                let mut located = located.into_iter();
                m.interleave(values, |_| located.next().expect("one value per removed symbol"))
            }
            None => values,
        };

        let binding = self.rg.binding(rule);
        let name = || self.rg.grammar().display_rule(rule).to_string();
        let Some(pre) = binding.pre_rewrite else {
            return Err(EvalError::MissingChildV { rule: name() });
        };
        let tops_chain = self.rg.original().rule(pre).lhs == self.rg.grammar().rule(rule).lhs;
        match binding.role {
            Role::PassThrough => Ok(values.into_iter().next_back().expect("pass-through has one child")),
            Role::Verbatim | Role::NullingAlias => {
                let vals = plain(values.into_iter().map(Some).collect(), &name())?;
                self.finish(pre, node.span, vals.into_iter().flatten().collect())
            }
            Role::ChafTail => {
                let vals: Vec<V> = plain(values.into_iter().map(Some).collect(), &name())?
                    .into_iter()
                    .flatten()
                    .collect();
                let childv = chaf_tail_step(binding, vals, &name())?;
                if tops_chain {
                    let vals = childv.into_values().map_err(|slot| EvalError::UnpopulatedSlot { rule: name(), slot })?;
                    self.finish(pre, node.span, vals)
                } else {
                    Ok(Partial::ChildV(childv))
                }
            }
            Role::ChafInner => Ok(Partial::ChildV(chaf_inner_step(binding, values, &name())?)),
            Role::ChafHead => {
                let vals = chaf_head_step(binding, values, &name())?;
                self.finish(pre, node.span, vals)
            }
        }
    }

    fn finish(&self, pre: RuleId, span: (usize, usize), values: Vec<V>) -> Result<Partial<V>, EvalError> {
        Ok(Partial::Value(self.sem.apply_rule(&self.ctx(span), pre, &values)?))
    }
}

/// Evaluates `tree` bottom-up, leftmost child first.
pub fn evaluate<V: Clone>(
    rg: &RewrittenGrammar,
    tree: &ParseNode,
    input: &[Token],
    sem: &Semantics<V>,
) -> Result<V, EvalError> {
    let ev = Evaluator { rg, input, sem };
    match ev.eval(tree)? {
        Partial::Value(v) => Ok(v),
        Partial::ChildV(_) => Err(EvalError::MissingChildV {
            rule: "the root".to_string(),
        }),
    }
}

/// Searches the chart top-down for derivation trees.
struct TreeSearch<'c, 'r> {
    chart: &'c Chart<'r>,
    rg: &'r RewrittenGrammar,
    /// (lhs, origin, end) -> completed rules, lowest rule identity first
    completed: HashMap<(SymbolId, usize, usize), Vec<RuleId>>,
    stack: Vec<(SymbolId, usize, usize)>,
}

impl<'c, 'r> TreeSearch<'c, 'r> {
    fn new(chart: &'c Chart<'r>) -> Self {
        let rg = chart.recognizer().rewritten();
        let g = rg.grammar();
        let mut completed: HashMap<(SymbolId, usize, usize), Vec<RuleId>> = HashMap::new();
        for set in chart.sets() {
            for item in set.items() {
                let rule = g.rule(item.dr.rule);
                if item.dr.dot == rule.rhs.len() {
                    completed
                        .entry((rule.lhs, item.origin, item.current))
                        .or_default()
                        .push(item.dr.rule);
                }
            }
        }
        for rules in completed.values_mut() {
            rules.sort_by_key(|&r| rg.key(r));
        }
        TreeSearch {
            chart,
            rg,
            completed,
            stack: Vec::new(),
        }
    }

    fn derives(&self, sym: SymbolId, from: usize, to: usize) -> bool {
        let g = self.rg.grammar();
        if g.is_terminal(sym) {
            to == from + 1 && self.chart.input()[from].symbol == sym
        } else {
            self.completed.contains_key(&(sym, from, to))
        }
    }

    /// Up to `limit` trees for `sym` over `[from, to)`.
    fn symbol(&mut self, sym: SymbolId, from: usize, to: usize, limit: usize) -> Vec<ParseNode> {
        let g = self.rg.grammar();
        if g.is_terminal(sym) {
            if !self.derives(sym, from, to) {
                return Vec::new();
            }
            return vec![ParseNode {
                kind: NodeKind::Terminal {
                    symbol: sym,
                    value: self.chart.input()[from].value.clone(),
                },
                span: (from, to),
            }];
        }
        let key = (sym, from, to);
        if self.stack.contains(&key) {
            return Vec::new();
        }
        let rules = self.completed.get(&key).cloned().unwrap_or_default();
        self.stack.push(key);
        let mut out = Vec::new();
        for r in rules {
            if out.len() >= limit {
                break;
            }
            let more = self.rule(r, from, to, limit - out.len());
            out.extend(more);
        }
        self.stack.pop();
        out
    }

    /// Up to `limit` trees for rule `r` over `[from, to)`. Splits are
    /// tried longest leftmost child first.
    fn rule(&mut self, r: RuleId, from: usize, to: usize, limit: usize) -> Vec<ParseNode> {
        let rhs = self.rg.grammar().rule(r).rhs.clone();
        // ends[d]: locations where rhs[d..] can start and still reach `to`
        let mut ends = vec![Vec::new(); rhs.len() + 1];
        ends[rhs.len()].push(to);
        for d in (0..rhs.len()).rev() {
            for loc in (from..to).rev() {
                let prefix_ok = if d == 0 {
                    loc == from
                } else {
                    self.chart.set(loc).contains(DottedRule::new(r, d), from)
                };
                if prefix_ok && ends[d + 1].iter().any(|&e| e > loc && self.derives(rhs[d], loc, e)) {
                    ends[d].push(loc);
                }
            }
        }
        let mut out = Vec::new();
        if !ends[0].contains(&from) {
            return out;
        }
        let mut partial = Vec::with_capacity(rhs.len());
        self.splits(&rhs, &ends, 0, from, limit, &mut partial, &mut |children| {
            out.push(ParseNode {
                kind: NodeKind::Rule { rule: r, children },
                span: (from, to),
            })
        });
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn splits(
        &mut self,
        rhs: &[SymbolId],
        ends: &[Vec<usize>],
        d: usize,
        loc: usize,
        limit: usize,
        partial: &mut Vec<ParseNode>,
        emit: &mut dyn FnMut(Vec<ParseNode>),
    ) -> usize {
        if d == rhs.len() {
            emit(partial.clone());
            return 1;
        }
        let mut made = 0;
        // ends[d + 1] is in descending order
        for &e in &ends[d + 1] {
            if made >= limit {
                break;
            }
            if e <= loc || !self.derives(rhs[d], loc, e) {
                continue;
            }
            for child in self.symbol(rhs[d], loc, e, limit - made) {
                partial.push(child);
                made += self.splits(rhs, ends, d + 1, e, limit - made, partial, emit);
                partial.pop();
                if made >= limit {
                    break;
                }
            }
        }
        made
    }

    fn root(&mut self, limit: usize) -> Vec<ParseNode> {
        let n = self.chart.frontier();
        if n == 0 {
            if self.rg.nullable_start() {
                return vec![ParseNode {
                    kind: NodeKind::Nulled {
                        symbol: self.rg.original().start(),
                    },
                    span: (0, 0),
                }];
            }
            return Vec::new();
        }
        match self.rg.grammar().accept_rule() {
            Some(accept) => self.rule(accept, 0, n, limit),
            None => Vec::new(),
        }
    }
}

/// The canonical tree for an accepted chart: lowest rule identity first,
/// then longest leftmost child.
pub fn build_tree(chart: &Chart<'_>) -> Option<ParseNode> {
    if !chart.accepted() {
        return None;
    }
    TreeSearch::new(chart).root(1).into_iter().next()
}

/// Every tree of an accepted chart, in canonical order. Derivations that
/// revisit a symbol over the same span are skipped.
pub fn all_trees(chart: &Chart<'_>, cap: usize) -> Result<Vec<ParseNode>, EvalError> {
    if !chart.accepted() {
        return Err(EvalError::NotAccepted);
    }
    let trees = TreeSearch::new(chart).root(cap.saturating_add(1));
    if trees.len() > cap {
        return Err(EvalError::TooAmbiguous(cap));
    }
    Ok(trees)
}

/// Values of every tree.
pub fn parse_values<V: Clone>(chart: &Chart<'_>, sem: &Semantics<V>, cap: usize) -> Result<Vec<V>, EvalError> {
    let rg = chart.recognizer().rewritten();
    all_trees(chart, cap)?
        .iter()
        .map(|t| evaluate(rg, t, chart.input(), sem))
        .collect()
}

/// The tree with CHAF chains reassembled and nulled symbols restored,
/// over the pre-rewrite grammar.
pub fn pre_rewrite_tree(rg: &RewrittenGrammar, tree: &ParseNode, input: &[Token]) -> Result<ParseNode, EvalError> {
    let g = rg.original();
    let mut sem = Semantics::new(ParseNode {
        kind: NodeKind::Nulled { symbol: g.start() },
        span: (0, 0),
    })
    .any_rule(|ctx, rule, children| ParseNode {
        kind: NodeKind::Rule {
            rule,
            children: children.to_vec(),
        },
        span: ctx.span,
    })
    .any_token(|ctx, symbol, value| ParseNode {
        kind: NodeKind::Terminal {
            symbol,
            value: value.to_string(),
        },
        span: ctx.span,
    });
    for sym in g.symbols().filter(|&s| !g.is_terminal(s)) {
        sem = sem.nulled(sym, |ctx, symbol| ParseNode {
            kind: NodeKind::Nulled { symbol },
            span: ctx.span,
        });
    }
    evaluate(rg, tree, input, &sem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_grammar;
    use crate::recognizer::Recognizer;
    use crate::rewrite::nulling_free;
    use crate::semantics::collecting;

    const FIG2: &str = "start: S\nS ::= A A A A\nA ::= a\nA ::=\n";

    fn recognizer(src: &str) -> Recognizer {
        let g = parse_grammar(src).unwrap().augment().unwrap();
        Recognizer::new(nulling_free(&g).unwrap()).unwrap()
    }

    fn toks(g: &Grammar, s: &str) -> Vec<Token> {
        s.split_whitespace().map(|n| Token::new(g.lookup(n).unwrap(), n)).collect()
    }

    fn concat(g: &Grammar) -> Semantics<String> {
        let s_rule = g.rule_ids().find(|&r| g.display_rule(r).to_string() == "S ::= A A A A").unwrap();
        let a_rule = g.rule_ids().find(|&r| g.display_rule(r).to_string() == "A ::= a").unwrap();
        let a = g.lookup("A").unwrap();
        Semantics::new(String::new())
            .rule(s_rule, |_, c| c.concat())
            .rule(a_rule, |_, c| c.concat())
            .any_token(|_, _, v| v.to_string())
            .nulled(a, |_, _| "_".to_string())
    }

    fn rules_used(rg: &RewrittenGrammar, t: &ParseNode, out: &mut Vec<String>) {
        if let NodeKind::Rule { rule, children } = &t.kind {
            out.push(rg.grammar().display_rule(*rule).to_string());
            for c in children {
                rules_used(rg, c, out);
            }
        }
    }

    #[test]
    fn four_as_has_one_tree_through_the_chain() {
        let rec = recognizer(FIG2);
        let g = rec.grammar();
        let chart = rec.recognize(&toks(g, "a a a a")).unwrap();
        let trees = all_trees(&chart, 10).unwrap();
        assert_eq!(trees.len(), 1);
        let mut used = Vec::new();
        rules_used(rec.rewritten(), &trees[0], &mut used);
        for r in ["S ::= A S1", "S1 ::= A S2", "S2 ::= A A"] {
            assert!(used.iter().any(|u| u == r), "{r} in {used:?}");
        }
        assert_eq!(build_tree(&chart).as_ref(), Some(&trees[0]));
    }

    #[test]
    fn concatenation_matches_positions() {
        let rec = recognizer(FIG2);
        let g = rec.grammar();
        let sem = concat(rec.rewritten().original());
        let chart = rec.recognize(&toks(g, "a a a a")).unwrap();
        let tree = build_tree(&chart).unwrap();
        assert_eq!(evaluate(rec.rewritten(), &tree, chart.input(), &sem).unwrap(), "aaaa");
        let chart = rec.recognize(&toks(g, "a")).unwrap();
        let mut values = parse_values(&chart, &sem, 100).unwrap();
        values.sort();
        assert_eq!(values, ["___a", "__a_", "_a__", "a___"]);
    }

    #[test]
    fn empty_input_is_the_nulled_start() {
        let rec = recognizer(FIG2);
        let chart = rec.chart();
        let tree = build_tree(&chart).unwrap();
        let start = rec.rewritten().original().start();
        assert_eq!(tree.kind, NodeKind::Nulled { symbol: start });
        let sem = concat(rec.rewritten().original()).nulled(start, |_, _| "S?".to_string());
        assert_eq!(evaluate(rec.rewritten(), &tree, &[], &sem).unwrap(), "S?");
    }

    #[test]
    fn canonical_tree_is_stable() {
        let rec = recognizer(FIG2);
        let g = rec.grammar();
        let chart = rec.recognize(&toks(g, "a")).unwrap();
        let a = build_tree(&chart).unwrap();
        let b = build_tree(&rec.recognize(&toks(g, "a")).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejected_input_has_no_tree() {
        let rec = recognizer(FIG2);
        let g = rec.grammar();
        let chart = rec.recognize(&toks(g, "a a a a a")).unwrap();
        assert_eq!(build_tree(&chart), None);
        assert_eq!(all_trees(&chart, 5), Err(EvalError::NotAccepted));
    }

    #[test]
    fn tail_step_fills_from_the_right() {
        let binding = RewriteBinding {
            pre_rewrite: Some(RuleId::new(0)),
            role: Role::ChafTail,
            slot_map: vec![Some(2), Some(3)],
            childv_len: 4,
        };
        let c = chaf_tail_step(&binding, vec!["nulledA", "vA"], "S2 ::= Ae A").unwrap();
        assert_eq!(c.get(2), Some(&"nulledA"));
        assert_eq!(c.get(3), Some(&"vA"));
        assert!(!c.is_populated(0) && !c.is_populated(1));
    }

    #[test]
    fn inner_and_head_steps() {
        let inner = RewriteBinding {
            pre_rewrite: Some(RuleId::new(0)),
            role: Role::ChafInner,
            slot_map: vec![Some(1), None],
            childv_len: 4,
        };
        let head = RewriteBinding {
            role: Role::ChafHead,
            slot_map: vec![Some(0), None],
            ..inner.clone()
        };
        let mut c = ChildV::new(4);
        c.set(2, 'c').unwrap();
        c.set(3, 'd').unwrap();
        let c = chaf_inner_step(&inner, vec![Partial::Value('b'), Partial::ChildV(c)], "S1").unwrap();
        assert_eq!(c.get(1), Some(&'b'));
        let vals = chaf_head_step(&head, vec![Partial::Value('a'), Partial::ChildV(c.clone())], "S").unwrap();
        assert_eq!(vals, ['a', 'b', 'c', 'd']);

        let err = chaf_inner_step(&inner, vec![Partial::Value('x'), Partial::ChildV(c.clone())], "S1");
        assert!(matches!(err, Err(EvalError::SlotCollision { slot: 1, .. })));
        let mut short = ChildV::new(4);
        short.set(3, 'd').unwrap();
        let err = chaf_head_step(&head, vec![Partial::Value('a'), Partial::ChildV(short)], "S");
        assert!(matches!(err, Err(EvalError::UnpopulatedSlot { slot: 1, .. })));
        let err = chaf_head_step(&head, vec![Partial::Value('a'), Partial::Value('b')], "S");
        assert!(matches!(err, Err(EvalError::MissingChildV { .. })));
    }

    #[test]
    fn head_without_continuation_creates_childv() {
        let head = RewriteBinding {
            pre_rewrite: Some(RuleId::new(0)),
            role: Role::ChafHead,
            slot_map: vec![Some(0), Some(1), Some(2)],
            childv_len: 3,
        };
        let vals = chaf_head_step(&head, vec![Partial::Value(1), Partial::Value(2), Partial::Value(3)], "H").unwrap();
        assert_eq!(vals, [1, 2, 3]);
    }

    #[test]
    fn pass_through_returns_start_value() {
        let rec = recognizer("start: S\nS ::= a");
        let g = rec.grammar();
        let orig = rec.rewritten().original();
        let s = orig.rule_ids().find(|&r| orig.rule(r).lhs == orig.start()).unwrap();
        let sem = Semantics::new(0).rule(s, |_, _| 42);
        let chart = rec.recognize(&toks(g, "a")).unwrap();
        let tree = build_tree(&chart).unwrap();
        assert_eq!(evaluate(rec.rewritten(), &tree, chart.input(), &sem).unwrap(), 42);
    }

    #[test]
    fn missing_rule_function_is_an_error() {
        let rec = recognizer(FIG2);
        let g = rec.grammar();
        let chart = rec.recognize(&toks(g, "a a")).unwrap();
        let tree = build_tree(&chart).unwrap();
        let sem: Semantics<u8> = Semantics::new(0);
        assert!(matches!(
            evaluate(rec.rewritten(), &tree, chart.input(), &sem),
            Err(EvalError::Semantics(SemanticsError::MissingRule(_)))
        ));
    }

    #[test]
    fn unit_cycles_do_not_loop() {
        let rec = recognizer("start: S\nS ::= T\nT ::= S\nS ::= a");
        let g = rec.grammar();
        let chart = rec.recognize(&toks(g, "a")).unwrap();
        let trees = all_trees(&chart, 10).unwrap();
        assert!(!trees.is_empty());
        assert!(build_tree(&chart).is_some());
    }

    #[test]
    fn collecting_values_and_pre_rewrite_view() {
        let rec = recognizer(FIG2);
        let g = rec.grammar();
        let orig = rec.rewritten().original();
        let chart = rec.recognize(&toks(g, "a a")).unwrap();
        let tree = build_tree(&chart).unwrap();
        let v = evaluate(rec.rewritten(), &tree, chart.input(), &collecting(orig)).unwrap();
        assert_eq!(v.to_string().matches("A?").count(), 2);
        let view = pre_rewrite_tree(rec.rewritten(), &tree, chart.input()).unwrap();
        let text = view.render(orig);
        assert!(text.starts_with("rule <S ::= A A A A> span=[0,2)\n"), "{text}");
        assert_eq!(text.matches("nulled A").count(), 2);
        assert_eq!(text.matches("token a=a").count(), 2);
    }
}
