//! Brute-force reference implementations.
//!
//! Everything here works directly on a [`Grammar`] and shares no code with
//! the rewrite, recognizer or evaluator modules. It is slow on purpose and
//! only meant for desk-scale grammars and inputs.

use std::collections::{BTreeSet, HashSet, VecDeque};

use thiserror::Error;

use crate::grammar::{Grammar, RuleId, SymbolId, Token};
use crate::semantics::{ParseContext, Semantics, SemanticsError};

/// Terminal strings of length at most `max_len` derivable from the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SentenceSet {
    pub max_len: usize,
    pub sentences: BTreeSet<Vec<SymbolId>>,
}

impl SentenceSet {
    pub fn contains(&self, w: &[SymbolId]) -> bool {
        self.sentences.contains(w)
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Drops the empty sentence.
    pub fn without_empty(&self) -> SentenceSet {
        let mut sentences = self.sentences.clone();
        sentences.remove(&Vec::new());
        SentenceSet {
            max_len: self.max_len,
            sentences,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("more than {0} derivations")]
    TooAmbiguous(usize),
    #[error("infinitely many derivations through symbol `{0}`")]
    Cyclic(String),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

/// Breadth-first leftmost rewriting from `⟨s⟩`, looking for ε.
///
/// Forms that contain a terminal can never vanish and are dropped. A
/// minimal-height derivation of ε has height at most the number of
/// nonterminals, so leftmost forms longer than that times the longest RHS
/// are not needed either. `max_steps` caps the number of forms expanded.
pub fn bf_nullable_bounded(g: &Grammar, s: SymbolId, max_steps: usize) -> bool {
    if g.is_terminal(s) {
        return false;
    }
    let nonterminals = g.symbols().filter(|&x| !g.is_terminal(x)).count();
    let longest = g.rules().iter().map(|r| r.rhs.len()).max().unwrap_or(0).max(1);
    let bound = nonterminals * longest;

    let mut seen: HashSet<Vec<SymbolId>> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(vec![s]);
    queue.push_back(vec![s]);
    let mut steps = 0;
    while let Some(form) = queue.pop_front() {
        if form.is_empty() {
            return true;
        }
        steps += 1;
        if steps > max_steps {
            break;
        }
        let head = form[0];
        for &r in g.rules_for(head) {
            let rhs = &g.rule(r).rhs;
            if rhs.iter().any(|&x| g.is_terminal(x)) {
                continue;
            }
            let next: Vec<SymbolId> = rhs.iter().chain(&form[1..]).copied().collect();
            if next.len() <= bound && seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    false
}

pub fn bf_nullable(g: &Grammar, s: SymbolId) -> bool {
    bf_nullable_bounded(g, s, 1_000_000)
}

/// A symbol is nulling iff every sentential form it derives can still
/// vanish, i.e. every symbol reachable from it is nullable.
pub fn bf_nulling(g: &Grammar, s: SymbolId) -> bool {
    let mut seen = HashSet::from([s]);
    let mut stack = vec![s];
    while let Some(x) = stack.pop() {
        if !bf_nullable(g, x) {
            return false;
        }
        for &r in g.rules_for(x) {
            for &y in &g.rule(r).rhs {
                if seen.insert(y) {
                    stack.push(y);
                }
            }
        }
    }
    true
}

type Lang = BTreeSet<Vec<SymbolId>>;

fn concat(left: &Lang, right: &Lang, max_len: usize) -> Lang {
    let mut out = Lang::new();
    for u in left {
        for v in right {
            if u.len() + v.len() <= max_len {
                let mut uv = u.clone();
                uv.extend_from_slice(v);
                out.insert(uv);
            }
        }
    }
    out
}

/// Per-symbol languages truncated at `max_len`, by iterating rule
/// expansion until nothing changes.
fn symbol_languages(g: &Grammar, max_len: usize) -> Vec<Lang> {
    let mut langs: Vec<Lang> = g
        .symbols()
        .map(|s| {
            if g.is_terminal(s) && max_len >= 1 {
                Lang::from([vec![s]])
            } else {
                Lang::new()
            }
        })
        .collect();
    loop {
        let mut changed = false;
        for rule in g.rules() {
            let mut acc = Lang::from([Vec::new()]);
            for &x in &rule.rhs {
                acc = concat(&acc, &langs[x.index()], max_len);
                if acc.is_empty() {
                    break;
                }
            }
            let target = &mut langs[rule.lhs.index()];
            for w in acc {
                changed |= target.insert(w);
            }
        }
        if !changed {
            return langs;
        }
    }
}

pub fn bf_language(g: &Grammar, max_len: usize) -> SentenceSet {
    let mut langs = symbol_languages(g, max_len);
    SentenceSet {
        max_len,
        sentences: std::mem::take(&mut langs[g.root().index()]),
    }
}

pub fn bf_recognize(g: &Grammar, w: &[SymbolId]) -> bool {
    bf_language(g, w.len()).contains(w)
}

fn productive(g: &Grammar) -> Vec<bool> {
    let mut prod: Vec<bool> = g.symbols().map(|s| g.is_terminal(s)).collect();
    loop {
        let mut changed = false;
        for rule in g.rules() {
            if !prod[rule.lhs.index()] && rule.rhs.iter().all(|x| prod[x.index()]) {
                prod[rule.lhs.index()] = true;
                changed = true;
            }
        }
        if !changed {
            return prod;
        }
    }
}

/// Prefixes (length ≤ `max_len`) of sentences derivable from the root.
pub fn bf_prefixes(g: &Grammar, max_len: usize) -> Lang {
    let langs = symbol_languages(g, max_len);
    let prod = productive(g);
    let mut prefixes: Vec<Lang> = g
        .symbols()
        .map(|s| {
            if g.is_terminal(s) && max_len >= 1 {
                Lang::from([Vec::new(), vec![s]])
            } else if g.is_terminal(s) {
                Lang::from([Vec::new()])
            } else {
                Lang::new()
            }
        })
        .collect();
    loop {
        let mut changed = false;
        for rule in g.rules() {
            if !rule.rhs.iter().all(|x| prod[x.index()]) {
                continue;
            }
            let mut found = Lang::from([Vec::new()]);
            // complete yields of rhs[..i] followed by a prefix of rhs[i]
            let mut complete = Lang::from([Vec::new()]);
            for &x in &rule.rhs {
                found.extend(concat(&complete, &prefixes[x.index()], max_len));
                complete = concat(&complete, &langs[x.index()], max_len);
                if complete.is_empty() {
                    break;
                }
            }
            found.extend(complete);
            let target = &mut prefixes[rule.lhs.index()];
            for w in found {
                changed |= target.insert(w);
            }
        }
        if !changed {
            break;
        }
    }
    std::mem::take(&mut prefixes[g.root().index()])
}

/// Terminals `t` such that `prefix · t` starts some sentence.
pub fn bf_acceptable_tokens(g: &Grammar, prefix: &[SymbolId]) -> BTreeSet<SymbolId> {
    let prefixes = bf_prefixes(g, prefix.len() + 1);
    prefixes
        .iter()
        .filter(|p| p.len() == prefix.len() + 1 && p[..prefix.len()] == *prefix)
        .map(|p| p[prefix.len()])
        .collect()
}

struct TreeSearch<'a, V> {
    g: &'a Grammar,
    input: &'a [Token],
    sem: &'a Semantics<V>,
    cap: usize,
    nullable: Vec<bool>,
    path: Vec<(SymbolId, usize, usize)>,
}

impl<V: Clone> TreeSearch<'_, V> {
    fn ctx(&self, span: (usize, usize)) -> ParseContext<'_> {
        ParseContext {
            grammar: self.g,
            input: self.input,
            span,
        }
    }

    /// Values of every tree for `x` over `input[i..j]`. Subtrees over an
    /// empty span collapse to the nulled value of their topmost symbol.
    fn values(&mut self, x: SymbolId, i: usize, j: usize) -> Result<Vec<V>, OracleError> {
        if i == j {
            return Ok(if self.nullable[x.index()] {
                vec![self.sem.apply_nulled(&self.ctx((i, i)), x)]
            } else {
                Vec::new()
            });
        }
        if self.g.is_terminal(x) {
            return Ok(if j == i + 1 && self.input[i].symbol == x {
                vec![self.sem.apply_token(&self.ctx((i, j)), x, &self.input[i].value)]
            } else {
                Vec::new()
            });
        }
        if self.path.contains(&(x, i, j)) {
            return Err(OracleError::Cyclic(self.g.name(x).to_string()));
        }
        self.path.push((x, i, j));
        let mut out = Vec::new();
        for &r in self.g.rules_for(x) {
            if self.g.rule(r).rhs.is_empty() {
                continue;
            }
            let children = self.rule_children(r, 0, i, j)?;
            for c in children {
                out.push(self.sem.apply_rule(&self.ctx((i, j)), r, &c)?);
                if out.len() > self.cap {
                    return Err(OracleError::TooAmbiguous(self.cap));
                }
            }
        }
        self.path.pop();
        Ok(out)
    }

    /// Child-value vectors for `rhs[k..]` of rule `r` spanning `input[i..j]`.
    fn rule_children(&mut self, r: RuleId, k: usize, i: usize, j: usize) -> Result<Vec<Vec<V>>, OracleError> {
        let rhs_len = self.g.rule(r).rhs.len();
        if k == rhs_len {
            return Ok(if i == j { vec![Vec::new()] } else { Vec::new() });
        }
        let x = self.g.rule(r).rhs[k];
        let mut out = Vec::new();
        let last = k + 1 == rhs_len;
        for mid in i..=j {
            if last && mid != j {
                continue;
            }
            // check the empty side first so a same-span recursion only
            // happens when it can really produce trees
            let (heads, tails) = if mid == i {
                let heads = self.values(x, i, mid)?;
                if heads.is_empty() {
                    continue;
                }
                (heads, self.rule_children(r, k + 1, mid, j)?)
            } else {
                let tails = self.rule_children(r, k + 1, mid, j)?;
                if tails.is_empty() {
                    continue;
                }
                (self.values(x, i, mid)?, tails)
            };
            for h in &heads {
                for t in &tails {
                    let mut v = Vec::with_capacity(rhs_len - k);
                    v.push(h.clone());
                    v.extend(t.iter().cloned());
                    out.push(v);
                    if out.len() > self.cap {
                        return Err(OracleError::TooAmbiguous(self.cap));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Root values of every derivation tree of `input` from the start symbol.
///
/// The accept rule, if any, passes its child through and is not evaluated.
/// Errors if there are more than `cap` trees or infinitely many.
pub fn bf_parse_values<V: Clone>(
    g: &Grammar,
    input: &[Token],
    sem: &Semantics<V>,
    cap: usize,
) -> Result<Vec<V>, OracleError> {
    let nullable = g.symbols().map(|s| bf_nullable(g, s)).collect();
    let mut search = TreeSearch {
        g,
        input,
        sem,
        cap,
        nullable,
        path: Vec::new(),
    };
    search.values(g.start(), 0, input.len())
}

/// An item of the reference engine: rule, dot, origin.
pub type RefItem = (RuleId, usize, usize);

/// Textbook Earley recognizer: each set is closed by re-running predict,
/// complete and scan over all its items until nothing changes. Handles
/// nullable rules through same-set completion. Returns every set.
pub fn reference_earley(g: &Grammar, input: &[SymbolId]) -> Vec<BTreeSet<RefItem>> {
    let mut sets: Vec<BTreeSet<RefItem>> = vec![BTreeSet::new(); input.len() + 1];
    let Some(accept) = g.accept_rule() else {
        return sets;
    };
    sets[0].insert((accept, 0, 0));
    for i in 0..=input.len() {
        loop {
            let before = sets[i].len();
            let items: Vec<RefItem> = sets[i].iter().copied().collect();
            for (r, dot, origin) in items {
                let rhs = &g.rule(r).rhs;
                if dot == rhs.len() {
                    let lhs = g.rule(r).lhs;
                    let parents: Vec<RefItem> = sets[origin]
                        .iter()
                        .filter(|&&(pr, pd, _)| g.rule(pr).rhs.get(pd) == Some(&lhs))
                        .copied()
                        .collect();
                    for (pr, pd, po) in parents {
                        sets[i].insert((pr, pd + 1, po));
                    }
                } else if !g.is_terminal(rhs[dot]) {
                    for &p in g.rules_for(rhs[dot]) {
                        sets[i].insert((p, 0, i));
                    }
                }
            }
            if sets[i].len() == before {
                break;
            }
        }
        if i < input.len() {
            let scanned: Vec<RefItem> = sets[i]
                .iter()
                .filter(|&&(r, d, _)| g.rule(r).rhs.get(d) == Some(&input[i]))
                .map(|&(r, d, o)| (r, d + 1, o))
                .collect();
            sets[i + 1].extend(scanned);
        }
    }
    sets
}

pub fn reference_accepts(g: &Grammar, input: &[SymbolId]) -> bool {
    let Some(accept) = g.accept_rule() else {
        return false;
    };
    reference_earley(g, input)[input.len()].contains(&(accept, 1, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{classify, parse_grammar};
    use crate::semantics::collecting;

    fn aug(src: &str) -> Grammar {
        parse_grammar(src).unwrap().augment().unwrap()
    }

    fn word(g: &Grammar, s: &str) -> Vec<SymbolId> {
        s.split_whitespace().map(|n| g.lookup(n).unwrap()).collect()
    }

    fn render(g: &Grammar, w: &[SymbolId]) -> String {
        w.iter().map(|&s| g.name(s)).collect::<Vec<_>>().join(" ")
    }

    const FIG1: &str = "start: S\nS ::= A B\nA ::= B\nA ::= x a\nB ::= x b\n";
    const FIG2: &str = "start: S\nS ::= A A A A\nA ::= a\nA ::=\n";

    #[test]
    fn nullable_examples() {
        let g = aug("start: S\nS ::= A A\nA ::= a\nA ::=");
        assert!(bf_nullable(&g, g.lookup("A").unwrap()));
        assert!(!bf_nullable(&g, g.lookup("a").unwrap()));
        let g1 = aug(FIG1);
        assert!(!bf_nullable(&g1, g1.lookup("B").unwrap()));
    }

    #[test]
    fn nulling_examples() {
        let g = aug("start: S\nS ::= A N b\nA ::= a\nA ::=\nN ::= M M\nM ::=");
        assert!(bf_nulling(&g, g.lookup("N").unwrap()));
        assert!(bf_nulling(&g, g.lookup("M").unwrap()));
        assert!(!bf_nulling(&g, g.lookup("A").unwrap()));
    }

    #[test]
    fn language_of_four_optional_as() {
        let g = aug(FIG2);
        let lang = bf_language(&g, 4);
        let got: Vec<String> = lang.sentences.iter().map(|w| render(&g, w)).collect();
        assert_eq!(got, ["", "a", "a a", "a a a", "a a a a"]);
        assert!(bf_recognize(&g, &word(&g, "a a")));
        assert!(!bf_recognize(&g, &word(&g, "a a a a a")));
    }

    #[test]
    fn language_of_figure_one() {
        let g = aug(FIG1);
        let lang = bf_language(&g, 4);
        let got: Vec<String> = lang.sentences.iter().map(|w| render(&g, w)).collect();
        assert_eq!(got.len(), 2);
        assert!(got.contains(&"x a x b".to_string()));
        assert!(got.contains(&"x b x b".to_string()));
    }

    #[test]
    fn nulling_start_language_is_epsilon() {
        let g = aug("start: S\nS ::= N N\nN ::=");
        assert_eq!(bf_language(&g, 3).sentences, BTreeSet::from([Vec::new()]));
        let g = aug(FIG1);
        assert!(!bf_recognize(&g, &[]));
    }

    #[test]
    fn undefined_symbol_language() {
        let g = aug("start: A\nA ::= Z");
        let lang = bf_language(&g, 3);
        assert_eq!(lang.sentences, BTreeSet::from([vec![g.lookup("Z").unwrap()]]));
    }

    #[test]
    fn acceptable_tokens_figure_one() {
        let g = aug(FIG1);
        let names = |set: BTreeSet<SymbolId>| set.into_iter().map(|s| g.name(s).to_string()).collect::<Vec<_>>();
        assert_eq!(names(bf_acceptable_tokens(&g, &[])), ["x"]);
        assert_eq!(names(bf_acceptable_tokens(&g, &word(&g, "x"))), ["a", "b"]);
        assert!(bf_acceptable_tokens(&g, &word(&g, "a")).is_empty());
        assert!(bf_acceptable_tokens(&g, &word(&g, "x b x b")).is_empty());
    }

    #[test]
    fn acceptable_tokens_need_productive_continuations() {
        // `x` could only be followed by U, which derives nothing
        let g = aug("start: S\nS ::= x U\nS ::= y\nU ::= U z");
        assert!(bf_acceptable_tokens(&g, &[]).iter().all(|&s| g.name(s) == "y"));
    }

    fn tokens(g: &Grammar, s: &str) -> Vec<Token> {
        word(g, s).into_iter().map(|sym| Token::new(sym, g.name(sym))).collect()
    }

    #[test]
    fn parse_values_one_a() {
        let g = aug(FIG2);
        let sem = collecting(&g);
        let values = bf_parse_values(&g, &tokens(&g, "a"), &sem, 1000).unwrap();
        assert_eq!(values.len(), 4);
        let distinct: BTreeSet<_> = values.iter().collect();
        assert_eq!(distinct.len(), 4);
    }

    #[test]
    fn parse_values_unambiguous_and_rejected() {
        let g = aug(FIG1);
        let sem = collecting(&g);
        assert_eq!(bf_parse_values(&g, &tokens(&g, "x a x b"), &sem, 10).unwrap().len(), 1);
        assert!(bf_parse_values(&g, &tokens(&g, "x a"), &sem, 10).unwrap().is_empty());
    }

    #[test]
    fn parse_values_detects_cycles_and_cap() {
        let g = aug("start: S\nS ::= S\nS ::= a");
        let sem = collecting(&g);
        assert!(matches!(
            bf_parse_values(&g, &tokens(&g, "a"), &sem, 10),
            Err(OracleError::Cyclic(_))
        ));
        let g = aug("start: S\nS ::= S S\nS ::= a");
        let sem = collecting(&g);
        assert_eq!(
            bf_parse_values(&g, &tokens(&g, "a a a a a a"), &sem, 10),
            Err(OracleError::TooAmbiguous(10))
        );
    }

    #[test]
    fn reference_engine_agrees_with_language() {
        let g = aug(FIG2);
        for n in 0..=5 {
            let w = vec![g.lookup("a").unwrap(); n];
            assert_eq!(reference_accepts(&g, &w), n <= 4);
        }
    }

    #[test]
    fn fixed_point_nullability_matches_oracle_on_samples() {
        for src in [FIG1, FIG2, "start: S\nS ::= A B\nA ::=\nB ::= A A\nB ::= b", "start: S\nS ::=\nS ::= U\nU ::= U"] {
            let g = aug(src);
            let cls = classify(&g);
            for s in g.symbols() {
                assert_eq!(cls.is_nullable(s), bf_nullable(&g, s), "{src} {}", g.name(s));
                assert_eq!(cls.is_nulling(s), bf_nulling(&g, s), "{src} {}", g.name(s));
            }
        }
    }
}
