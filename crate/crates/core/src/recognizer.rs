//! Three-phase Earley recognizer over a nulling-free grammar.
//!
//! Each Earley set is finished before the next one is started: scanned
//! items first, then reductions to a fixed point, then predictions taken
//! from a precomputed closure table. Since no rule has an empty RHS, a
//! prediction is never a completion in its own set, so the prediction
//! phase never feeds back into reduction.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::grammar::{Grammar, RuleId, SymbolId, Token};
use crate::rewrite::RewrittenGrammar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DottedRule {
    pub rule: RuleId,
    pub dot: usize,
}

impl DottedRule {
    pub fn new(rule: RuleId, dot: usize) -> Self {
        DottedRule { rule, dot }
    }
}

/// Symbol after the dot, or `None` for a completion.
pub fn postdot(g: &Grammar, dr: DottedRule) -> Option<SymbolId> {
    g.rule(dr.rule).rhs.get(dr.dot).copied()
}

pub fn next_dr(g: &Grammar, dr: DottedRule) -> Option<DottedRule> {
    postdot(g, dr).map(|_| DottedRule::new(dr.rule, dr.dot + 1))
}

pub fn is_completion(g: &Grammar, dr: DottedRule) -> bool {
    dr.dot == g.rule(dr.rule).rhs.len()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EarleyItem {
    pub dr: DottedRule,
    pub origin: usize,
    pub current: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Seed,
    Scan,
    Reduce,
    Predict,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Seed => "seed",
            Phase::Scan => "scan",
            Phase::Reduce => "reduce",
            Phase::Predict => "predict",
        }
    }
}

/// One Earley set. Items keep insertion order; `(dotted rule, origin)`
/// pairs are unique.
#[derive(Clone, Debug)]
pub struct EarleySet {
    location: usize,
    items: Vec<EarleyItem>,
    phases: Vec<Phase>,
    index: HashMap<(DottedRule, usize), usize>,
    by_postdot: HashMap<SymbolId, Vec<usize>>,
    live: Vec<bool>,
}

impl EarleySet {
    fn new(location: usize) -> Self {
        EarleySet {
            location,
            items: Vec::new(),
            phases: Vec::new(),
            index: HashMap::new(),
            by_postdot: HashMap::new(),
            live: Vec::new(),
        }
    }

    pub fn location(&self) -> usize {
        self.location
    }

    pub fn items(&self) -> &[EarleyItem] {
        &self.items
    }

    pub fn phase(&self, i: usize) -> Phase {
        self.phases[i]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Whether item `i` can still be part of a complete parse: the rest
    /// of its rule and of every rule above it can derive terminals.
    pub fn is_live(&self, i: usize) -> bool {
        self.live[i]
    }

    pub fn contains(&self, dr: DottedRule, origin: usize) -> bool {
        self.index.contains_key(&(dr, origin))
    }

    /// Items whose postdot symbol is `sym`.
    pub fn waiting_for(&self, sym: SymbolId) -> impl Iterator<Item = &EarleyItem> {
        self.by_postdot
            .get(&sym)
            .into_iter()
            .flatten()
            .map(|&i| &self.items[i])
    }
}

/// For every nonterminal, the rules predicted (transitively) when it is
/// the postdot symbol, as a bit set over rule ids.
#[derive(Clone, Debug)]
pub struct PredictionClosure {
    masks: Vec<FixedBitSet>,
}

impl PredictionClosure {
    pub fn new(g: &Grammar) -> Self {
        let n = g.symbol_count();
        // left-corner relation X -> Y for rules X ::= Y ..., made
        // reflexive and transitive
        let mut corner: Vec<FixedBitSet> = (0..n).map(|_| FixedBitSet::with_capacity(n)).collect();
        for sym in g.symbols().filter(|&s| !g.is_terminal(s)) {
            corner[sym.index()].insert(sym.index());
        }
        for rule in g.rules() {
            if let Some(&first) = rule.rhs.first() {
                if !g.is_terminal(first) {
                    corner[rule.lhs.index()].insert(first.index());
                }
            }
        }
        for k in 0..n {
            let via = corner[k].clone();
            for row in corner.iter_mut() {
                if row.contains(k) {
                    row.union_with(&via);
                }
            }
        }
        let rules = g.rules().len();
        let mut direct: Vec<FixedBitSet> = (0..n).map(|_| FixedBitSet::with_capacity(rules)).collect();
        for r in g.rule_ids() {
            direct[g.rule(r).lhs.index()].insert(r.index());
        }
        let masks = corner
            .iter()
            .map(|row| {
                let mut mask = FixedBitSet::with_capacity(rules);
                for y in row.ones() {
                    mask.union_with(&direct[y]);
                }
                mask
            })
            .collect();
        PredictionClosure { masks }
    }

    pub fn mask(&self, sym: SymbolId) -> &FixedBitSet {
        &self.masks[sym.index()]
    }

    pub fn rules(&self, sym: SymbolId) -> impl Iterator<Item = RuleId> + '_ {
        self.masks[sym.index()].ones().map(RuleId::new)
    }
}

/// Earley's original prediction: dot-0 items for the postdot symbol's
/// rules, at the current location.
pub fn opred(g: &Grammar, x: &EarleyItem) -> BTreeSet<EarleyItem> {
    let Some(sym) = postdot(g, x.dr) else {
        return BTreeSet::new();
    };
    g.rules_for(sym)
        .iter()
        .map(|&r| EarleyItem {
            dr: DottedRule::new(r, 0),
            origin: x.current,
            current: x.current,
        })
        .collect()
}

/// Transitive closure of [`opred`]: the union over `n` of
/// `predN(n, opred(x))`, where `predN(n + 1, s)` applies `opred` to every
/// member of `predN(n, s)`.
pub fn ahpred(g: &Grammar, x: &EarleyItem) -> BTreeSet<EarleyItem> {
    let mut all = opred(g, x);
    let mut level = all.clone();
    while !level.is_empty() {
        let next: BTreeSet<EarleyItem> = level.iter().flat_map(|e| opred(g, e)).collect();
        level = next.difference(&all).copied().collect();
        all.extend(level.iter().copied());
    }
    all
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RecognizeError {
    #[error("rule {0} has an empty RHS; strip nulling symbols before recognizing")]
    NullableGrammar(String),
    #[error("`{0}` is not a terminal of the grammar")]
    UnknownToken(String),
    #[error("no input left at location {0}")]
    InputExhausted(usize),
}

/// A nulling-free grammar with its prediction table. Shareable across
/// any number of charts.
#[derive(Clone, Debug)]
pub struct Recognizer {
    rg: RewrittenGrammar,
    closure: PredictionClosure,
    /// Per rule, the first dot position from which the rest of the RHS
    /// derives some terminal string.
    productive_from: Vec<usize>,
}

impl Recognizer {
    pub fn new(rg: RewrittenGrammar) -> Result<Self, RecognizeError> {
        let g = rg.grammar();
        if let Some(r) = g.rule_ids().find(|&r| g.rule(r).rhs.is_empty()) {
            return Err(RecognizeError::NullableGrammar(g.display_rule(r).to_string()));
        }
        let closure = PredictionClosure::new(g);
        let productive = productive_symbols(g);
        let productive_from = g
            .rules()
            .iter()
            .map(|r| {
                r.rhs
                    .iter()
                    .rposition(|s| !productive[s.index()])
                    .map_or(0, |k| k + 1)
            })
            .collect();
        Ok(Recognizer {
            rg,
            closure,
            productive_from,
        })
    }

    pub fn rewritten(&self) -> &RewrittenGrammar {
        &self.rg
    }

    pub fn grammar(&self) -> &Grammar {
        self.rg.grammar()
    }

    pub fn closure(&self) -> &PredictionClosure {
        &self.closure
    }

    pub fn chart(&self) -> Chart<'_> {
        Chart::new(self)
    }

    /// Runs the whole input.
    pub fn recognize(&self, input: &[Token]) -> Result<Chart<'_>, RecognizeError> {
        let mut chart = Chart::with_input(self, input.to_vec());
        while chart.frontier() < input.len() {
            chart.step()?;
        }
        Ok(chart)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChartStats {
    pub items_per_set: Vec<usize>,
    pub attempts_per_set: Vec<usize>,
    pub total_items: usize,
    pub total_attempts: usize,
    pub duplicate_attempts: usize,
}

/// A pre-rewrite dotted rule reached at some origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProgressEntry {
    /// Rule of the pre-rewrite grammar.
    pub rule: RuleId,
    pub dot: usize,
    pub origin: usize,
}

/// The Earley sets built so far. Sets up to the frontier are final.
#[derive(Clone, Debug)]
pub struct Chart<'r> {
    rec: &'r Recognizer,
    sets: Vec<EarleySet>,
    input: Vec<Token>,
    attempts: Vec<usize>,
    duplicates: usize,
}

impl<'r> Chart<'r> {
    /// A chart with set 0 built.
    pub fn new(rec: &'r Recognizer) -> Self {
        Self::with_input(rec, Vec::new())
    }

    /// A chart with set 0 built and `input` queued for [`Chart::step`].
    pub fn with_input(rec: &'r Recognizer, input: Vec<Token>) -> Self {
        let mut chart = Chart {
            rec,
            sets: vec![EarleySet::new(0)],
            input,
            attempts: vec![0],
            duplicates: 0,
        };
        chart.initialize();
        chart
    }

    fn grammar(&self) -> &'r Grammar {
        self.rec.grammar()
    }

    fn initialize(&mut self) {
        if let Some(accept) = self.grammar().accept_rule() {
            self.add(0, DottedRule::new(accept, 0), 0, Phase::Seed);
        }
        self.predict(0);
        self.mark_live(0);
    }

    fn add(&mut self, loc: usize, dr: DottedRule, origin: usize, phase: Phase) {
        self.attempts[loc] += 1;
        let g = self.rec.grammar();
        let set = &mut self.sets[loc];
        if set.index.contains_key(&(dr, origin)) {
            self.duplicates += 1;
            return;
        }
        let idx = set.items.len();
        set.index.insert((dr, origin), idx);
        set.items.push(EarleyItem {
            dr,
            origin,
            current: loc,
        });
        set.phases.push(phase);
        if let Some(sym) = postdot(g, dr) {
            set.by_postdot.entry(sym).or_default().push(idx);
        }
    }

    fn predict(&mut self, loc: usize) {
        let g = self.grammar();
        let closure = &self.rec.closure;
        let mut wanted = FixedBitSet::with_capacity(g.rules().len());
        for &sym in self.sets[loc].by_postdot.keys() {
            if !g.is_terminal(sym) {
                wanted.union_with(closure.mask(sym));
            }
        }
        for r in wanted.ones() {
            debug_assert!(!g.rule(RuleId::new(r)).rhs.is_empty());
            self.add(loc, DottedRule::new(RuleId::new(r), 0), loc, Phase::Predict);
        }
    }

    /// Consumes `token` and builds the next Earley set.
    pub fn advance(&mut self, token: Token) -> Result<(), RecognizeError> {
        let g = self.grammar();
        if token.symbol.index() >= g.symbol_count() || !g.is_terminal(token.symbol) {
            let name = if token.symbol.index() < g.symbol_count() {
                g.name(token.symbol).to_string()
            } else {
                format!("#{}", token.symbol.index())
            };
            return Err(RecognizeError::UnknownToken(name));
        }
        let from = self.frontier();
        let to = from + 1;
        if self.input.len() == from {
            self.input.push(token.clone());
        } else {
            self.input[from] = token.clone();
        }
        self.sets.push(EarleySet::new(to));
        self.attempts.push(0);

        let scanned: Vec<EarleyItem> = self.sets[from].waiting_for(token.symbol).copied().collect();
        for item in scanned {
            self.add(to, DottedRule::new(item.dr.rule, item.dr.dot + 1), item.origin, Phase::Scan);
        }

        let mut cursor = 0;
        while cursor < self.sets[to].items.len() {
            let item = self.sets[to].items[cursor];
            cursor += 1;
            if !is_completion(g, item.dr) {
                continue;
            }
            debug_assert!(item.origin < to);
            let lhs = g.rule(item.dr.rule).lhs;
            let mainstems: Vec<EarleyItem> = self.sets[item.origin].waiting_for(lhs).copied().collect();
            for m in mainstems {
                self.add(to, DottedRule::new(m.dr.rule, m.dr.dot + 1), m.origin, Phase::Reduce);
            }
        }

        self.predict(to);
        self.mark_live(to);
        Ok(())
    }

    /// Advances over the next queued input token.
    pub fn step(&mut self) -> Result<(), RecognizeError> {
        let at = self.frontier();
        let token = self
            .input
            .get(at)
            .cloned()
            .ok_or(RecognizeError::InputExhausted(at))?;
        self.advance(token)
    }

    /// Location of the last finished set.
    pub fn frontier(&self) -> usize {
        self.sets.len() - 1
    }

    pub fn sets(&self) -> &[EarleySet] {
        &self.sets
    }

    pub fn set(&self, i: usize) -> &EarleySet {
        &self.sets[i]
    }

    pub fn input(&self) -> &[Token] {
        &self.input[..self.frontier()]
    }

    pub fn recognizer(&self) -> &'r Recognizer {
        self.rec
    }

    /// Whether the input read so far is a sentence.
    pub fn accepted(&self) -> bool {
        let n = self.frontier();
        if n == 0 && self.rec.rg.nullable_start() {
            return true;
        }
        match self.grammar().accept_rule() {
            Some(accept) => self.sets[n].contains(DottedRule::new(accept, 1), 0),
            None => false,
        }
    }

    /// Live items have a productive remainder all the way up to the
    /// accept item. Items of dead rules stay in the set, so the chart
    /// itself is unchanged, but they are ignored by token queries.
    fn mark_live(&mut self, loc: usize) {
        let g = self.rec.grammar();
        let accept = g.accept_rule();
        let n = self.sets[loc].items.len();
        let mut live = vec![false; n];
        loop {
            let mut changed = false;
            for k in 0..n {
                if live[k] {
                    continue;
                }
                let item = self.sets[loc].items[k];
                if item.dr.dot < self.rec.productive_from[item.dr.rule.index()] {
                    continue;
                }
                let is_root = Some(item.dr.rule) == accept && item.origin == 0;
                let lhs = g.rule(item.dr.rule).lhs;
                let parent_live = |i: usize| {
                    if item.origin == loc {
                        live[i]
                    } else {
                        self.sets[item.origin].live[i]
                    }
                };
                let has_live_parent = self.sets[item.origin]
                    .by_postdot
                    .get(&lhs)
                    .is_some_and(|ps| ps.iter().any(|&i| parent_live(i)));
                if is_root || has_live_parent {
                    live[k] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        self.sets[loc].live = live;
    }

    /// Terminals that some live item at the frontier expects next: the
    /// tokens that would let the parse continue toward a sentence.
    pub fn acceptable_tokens(&self) -> BTreeSet<SymbolId> {
        let g = self.grammar();
        let set = &self.sets[self.frontier()];
        set.by_postdot
            .iter()
            .filter(|(s, items)| g.is_terminal(**s) && items.iter().any(|&i| set.live[i]))
            .map(|(&s, _)| s)
            .collect()
    }

    pub fn stats(&self) -> ChartStats {
        let items_per_set: Vec<usize> = self.sets.iter().map(EarleySet::len).collect();
        ChartStats {
            total_items: items_per_set.iter().sum(),
            total_attempts: self.attempts.iter().sum(),
            items_per_set,
            attempts_per_set: self.attempts.clone(),
            duplicate_attempts: self.duplicates,
        }
    }

    /// Items of set `i` as pre-rewrite dotted rules with pre-rewrite
    /// origins. A CHAF piece is traced back through the items that
    /// predicted its continuation symbol to where the whole rule started.
    pub fn progress_report(&self, i: usize) -> Vec<ProgressEntry> {
        let rg = &self.rec.rg;
        let mut out = BTreeSet::new();
        for item in &self.sets[i].items {
            let Some((rule, dot)) = rg.pre_rewrite_dot(item.dr.rule, item.dr.dot) else {
                continue;
            };
            for origin in self.chain_origins(item) {
                out.insert(ProgressEntry { rule, dot, origin });
            }
        }
        out.into_iter().collect()
    }

    fn chain_origins(&self, item: &EarleyItem) -> BTreeSet<usize> {
        let rg = &self.rec.rg;
        let g = self.grammar();
        let lhs = g.rule(item.dr.rule).lhs;
        let starts_chain = match rg.binding(item.dr.rule).pre_rewrite {
            Some(pre) => rg.original().rule(pre).lhs == lhs,
            None => true,
        };
        if starts_chain {
            return BTreeSet::from([item.origin]);
        }
        self.sets[item.origin]
            .waiting_for(lhs)
            .flat_map(|parent| self.chain_origins(parent))
            .collect()
    }

    /// One line per item:
    /// `set=<i> item=<LHS ::= pre • post> origin=<j> phase=<phase>`.
    pub fn trace(&self) -> String {
        let g = self.grammar();
        let mut out = String::new();
        for set in &self.sets {
            for (k, item) in set.items.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "set={} item=<{}> origin={} phase={}",
                    set.location,
                    g.display_dotted(item.dr.rule, item.dr.dot),
                    item.origin,
                    set.phases[k].as_str()
                );
            }
        }
        out
    }

    /// The progress report for set `i` in the trace layout.
    pub fn render_progress(&self, i: usize) -> String {
        let orig = self.rec.rg.original();
        let mut out = String::new();
        for e in self.progress_report(i) {
            let _ = writeln!(
                out,
                "set={} item=<{}> origin={}",
                i,
                orig.display_dotted(e.rule, e.dot),
                e.origin
            );
        }
        out
    }
}

fn productive_symbols(g: &Grammar) -> Vec<bool> {
    let mut prod: Vec<bool> = g.symbols().map(|s| g.is_terminal(s)).collect();
    loop {
        let mut changed = false;
        for rule in g.rules() {
            if !prod[rule.lhs.index()] && rule.rhs.iter().all(|s| prod[s.index()]) {
                prod[rule.lhs.index()] = true;
                changed = true;
            }
        }
        if !changed {
            return prod;
        }
    }
}

/// Builds a chart for `input` over `rg`.
pub fn recognize(rg: &RewrittenGrammar, input: &[Token]) -> Result<bool, RecognizeError> {
    let rec = Recognizer::new(rg.clone())?;
    let chart = rec.recognize(input)?;
    Ok(chart.accepted())
}
