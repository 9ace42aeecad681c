#![allow(dead_code)]

use chaf_earley::{Grammar, GrammarBuilder, SymbolId, Token};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Shape of a random grammar.
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub nonterminals: usize,
    pub terminals: usize,
    pub rules: usize,
    pub max_rhs: usize,
    /// Probability that a rule has an empty RHS.
    pub empty: f64,
}

impl Shape {
    /// At most 6 symbols, with empty rules.
    pub fn nullable(rng: &mut StdRng) -> Shape {
        let nonterminals = rng.gen_range(1..=3);
        Shape {
            nonterminals,
            terminals: rng.gen_range(1..=6 - nonterminals).min(3),
            rules: rng.gen_range(nonterminals..=8),
            max_rhs: 4,
            empty: 0.3,
        }
    }

    /// At most 8 symbols and 14 rules, without empty rules.
    pub fn nulling_free(rng: &mut StdRng) -> Shape {
        let nonterminals = rng.gen_range(1..=5);
        Shape {
            nonterminals,
            terminals: rng.gen_range(1..=8 - nonterminals),
            rules: rng.gen_range(nonterminals..=14),
            max_rhs: 4,
            empty: 0.0,
        }
    }
}

/// An augmented grammar over `N0..` and `t0..` with start `N0`; every
/// nonterminal has at least one rule.
pub fn random_grammar(rng: &mut StdRng, shape: Shape) -> Grammar {
    let nts: Vec<String> = (0..shape.nonterminals).map(|i| format!("N{i}")).collect();
    let ts: Vec<String> = (0..shape.terminals).map(|i| format!("t{i}")).collect();
    let mut b = GrammarBuilder::new().start("N0");
    for i in 0..shape.rules {
        let lhs = if i < nts.len() { i } else { rng.gen_range(0..nts.len()) };
        let len = if rng.gen_bool(shape.empty) { 0 } else { rng.gen_range(1..=shape.max_rhs) };
        let rhs: Vec<&str> = (0..len)
            .map(|_| {
                let k = rng.gen_range(0..nts.len() + ts.len());
                if k < nts.len() {
                    nts[k].as_str()
                } else {
                    ts[k - nts.len()].as_str()
                }
            })
            .collect();
        b = b.rule(&nts[lhs], &rhs);
    }
    b.build().expect("N0 has a rule").augment().expect("fresh grammar")
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Every string over `terminals` of length `0..=max_len`, shortest first,
/// at most `cap` of them.
pub fn all_inputs(terminals: &[SymbolId], max_len: usize, cap: usize) -> Vec<Vec<SymbolId>> {
    let mut out = vec![Vec::new()];
    let mut level = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &level {
            for &t in terminals {
                let mut v: Vec<SymbolId> = w.clone();
                v.push(t);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        level = next;
        if out.len() >= cap {
            break;
        }
    }
    out.truncate(cap);
    out
}

pub fn tokens(g: &Grammar, w: &[SymbolId]) -> Vec<Token> {
    w.iter().map(|&s| Token::new(s, g.name(s))).collect()
}

pub fn terminals(g: &Grammar) -> Vec<SymbolId> {
    g.terminals().collect()
}
