//! Aycock-Horspool automaton: the split LR(0) ε-DFA over an NNF grammar,
//! plus the size and duplication statistics used to characterize it.
//!
//! Nothing here drives recognition; the automaton is built to be looked
//! at and measured.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::grammar::{classify, Grammar, SymbolClass, SymbolId};
use crate::recognizer::{is_completion, next_dr, postdot, DottedRule};
use crate::rewrite::{Form, RewrittenGrammar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StateKind {
    Confirmed,
    Predicted,
}

impl StateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StateKind::Confirmed => "confirmed",
            StateKind::Predicted => "predicted",
        }
    }

    fn prefix(self) -> char {
        match self {
            StateKind::Confirmed => 'C',
            StateKind::Predicted => 'P',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AhfaState {
    pub id: usize,
    pub kind: StateKind,
    pub items: BTreeSet<DottedRule>,
}

impl AhfaState {
    /// `C<id>` or `P<id>`.
    pub fn label(&self) -> String {
        format!("{}{}", self.kind.prefix(), self.id)
    }
}

/// Transition label: a grammar symbol or ε.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Epsilon,
    Symbol(SymbolId),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GotoTable {
    edges: BTreeMap<(usize, Label), usize>,
}

impl GotoTable {
    pub fn get(&self, state: usize, label: Label) -> Option<usize> {
        self.edges.get(&(state, label)).copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, Label, usize)> + '_ {
        self.edges.iter().map(|(&(from, label), &to)| (from, label, to))
    }

    pub fn edges_from(&self, state: usize) -> impl Iterator<Item = (Label, usize)> + '_ {
        self.edges
            .range((state, Label::Epsilon)..)
            .take_while(move |((from, _), _)| *from == state)
            .map(|(&(_, label), &to)| (label, to))
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AhfaError {
    #[error("AHFA construction needs an NNF-rewritten grammar, got {0:?}")]
    NotNnf(Form),
}

#[derive(Clone, Debug)]
pub struct Ahfa {
    grammar: Grammar,
    states: Vec<AhfaState>,
    goto: GotoTable,
}

/// Builds the automaton for an NNF grammar.
pub fn build_ahfa(rg: &RewrittenGrammar) -> Result<Ahfa, AhfaError> {
    if rg.form() != Form::Nnf {
        return Err(AhfaError::NotNnf(rg.form()));
    }
    Ok(Ahfa::build(rg.grammar()))
}

/// Looks up a transition.
pub fn goto(table: &GotoTable, state: usize, label: Label) -> Option<usize> {
    table.get(state, label)
}

struct Builder<'g> {
    g: &'g Grammar,
    cls: SymbolClass,
}

impl Builder<'_> {
    /// Adds `next_dr(d)` for every item whose postdot symbol is nulling.
    fn nulling_closure(&self, mut items: BTreeSet<DottedRule>) -> BTreeSet<DottedRule> {
        let mut work: Vec<DottedRule> = items.iter().copied().collect();
        while let Some(dr) = work.pop() {
            if let Some(sym) = postdot(self.g, dr) {
                if self.cls.is_nulling(sym) {
                    let next = next_dr(self.g, dr).expect("postdot exists");
                    if items.insert(next) {
                        work.push(next);
                    }
                }
            }
        }
        items
    }

    /// Dot-0 items for every nonterminal after a dot in `items`, closed
    /// under prediction and nulling-closure.
    fn predict(&self, items: &BTreeSet<DottedRule>) -> BTreeSet<DottedRule> {
        let mut out = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut work: Vec<DottedRule> = items.iter().copied().collect();
        while let Some(dr) = work.pop() {
            let Some(sym) = postdot(self.g, dr) else { continue };
            if self.g.is_terminal(sym) || !seen.insert(sym) {
                continue;
            }
            for &r in self.g.rules_for(sym) {
                let closed = self.nulling_closure(BTreeSet::from([DottedRule::new(r, 0)]));
                for d in closed {
                    if out.insert(d) {
                        work.push(d);
                    }
                }
            }
        }
        out
    }

    fn advance(&self, items: &BTreeSet<DottedRule>, sym: SymbolId) -> BTreeSet<DottedRule> {
        let moved = items
            .iter()
            .filter(|&&d| postdot(self.g, d) == Some(sym))
            .filter_map(|&d| next_dr(self.g, d))
            .collect();
        self.nulling_closure(moved)
    }
}

impl Ahfa {
    fn build(g: &Grammar) -> Ahfa {
        let builder = Builder { g, cls: classify(g) };
        let mut states: Vec<AhfaState> = Vec::new();
        let mut ids: HashMap<(StateKind, BTreeSet<DottedRule>), usize> = HashMap::new();
        let mut goto = GotoTable::default();
        let mut queue = VecDeque::new();

        let mut intern = |kind: StateKind, items: BTreeSet<DottedRule>, states: &mut Vec<AhfaState>, queue: &mut VecDeque<usize>| {
            if let Some(&id) = ids.get(&(kind, items.clone())) {
                return id;
            }
            let id = states.len();
            ids.insert((kind, items.clone()), id);
            states.push(AhfaState { id, kind, items });
            queue.push_back(id);
            id
        };

        if g.accept_rule().is_some() {
            let seeds = g.rules_for(g.root()).iter().map(|&r| DottedRule::new(r, 0)).collect();
            let start = builder.nulling_closure(seeds);
            intern(StateKind::Confirmed, start, &mut states, &mut queue);
        }

        while let Some(id) = queue.pop_front() {
            let items = states[id].items.clone();
            if states[id].kind == StateKind::Confirmed {
                let predicted = builder.predict(&items);
                if !predicted.is_empty() {
                    let to = intern(StateKind::Predicted, predicted, &mut states, &mut queue);
                    goto.edges.insert((id, Label::Epsilon), to);
                }
            }
            let labels: BTreeSet<SymbolId> = items.iter().filter_map(|&d| postdot(g, d)).collect();
            for sym in labels {
                let next = builder.advance(&items, sym);
                let to = intern(StateKind::Confirmed, next, &mut states, &mut queue);
                goto.edges.insert((id, Label::Symbol(sym)), to);
            }
        }

        Ahfa {
            grammar: g.clone(),
            states,
            goto,
        }
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn states(&self) -> &[AhfaState] {
        &self.states
    }

    pub fn state(&self, id: usize) -> &AhfaState {
        &self.states[id]
    }

    pub fn goto_table(&self) -> &GotoTable {
        &self.goto
    }

    pub fn goto(&self, state: usize, label: Label) -> Option<usize> {
        self.goto.get(state, label)
    }

    /// The state whose item set is exactly `items`, if any.
    pub fn find(&self, items: &BTreeSet<DottedRule>) -> Option<usize> {
        self.states.iter().find(|s| &s.items == items).map(|s| s.id)
    }

    pub fn statistics(&self) -> AhfaStats {
        ahfa_statistics(&self.grammar, &self.states)
    }

    pub fn label_name(&self, label: Label) -> String {
        match label {
            Label::Epsilon => "eps".to_string(),
            Label::Symbol(s) => self.grammar.name(s).to_string(),
        }
    }

    /// States with their items and outgoing transitions.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for s in &self.states {
            let _ = writeln!(out, "{} {}", s.label(), s.kind.as_str());
            for d in &s.items {
                let _ = writeln!(out, "  {}", self.grammar.display_dotted(d.rule, d.dot));
            }
            for (label, to) in self.goto.edges_from(s.id) {
                let _ = writeln!(out, "  {} -> {}", self.label_name(label), self.states[to].label());
            }
        }
        out
    }

    /// Graphviz rendering: one box per state listing its items, edges
    /// labeled by symbol or `eps`.
    pub fn render_dot(&self) -> String {
        let mut out = String::from("digraph ahfa {\n  node [shape=box, fontname=\"monospace\"];\n");
        for s in &self.states {
            let mut label = s.label();
            label.push_str("\\n");
            for d in &s.items {
                label.push_str(&escape(&self.grammar.display_dotted(d.rule, d.dot).to_string()));
                label.push_str("\\l");
            }
            let style = match s.kind {
                StateKind::Confirmed => "solid",
                StateKind::Predicted => "dashed",
            };
            let _ = writeln!(out, "  s{} [label=\"{}\", style={}];", s.id, label, style);
        }
        for (from, label, to) in self.goto.edges() {
            let _ = writeln!(out, "  s{} -> s{} [label=\"{}\"];", from, to, escape(&self.label_name(label)));
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[derive(Clone, Debug, PartialEq)]
pub struct KindStats {
    pub kind: StateKind,
    pub states: usize,
    /// state size -> number of states of that size
    pub histogram: BTreeMap<usize, usize>,
    pub mean: f64,
    pub mean_square: f64,
}

impl KindStats {
    fn new(kind: StateKind, sizes: &[usize]) -> Self {
        let mut histogram = BTreeMap::new();
        for &s in sizes {
            *histogram.entry(s).or_insert(0) += 1;
        }
        let n = sizes.len();
        let (mean, mean_square) = if n == 0 {
            (0.0, 0.0)
        } else {
            let sum: usize = sizes.iter().sum();
            let sq: usize = sizes.iter().map(|s| s * s).sum();
            (sum as f64 / n as f64, sq as f64 / n as f64)
        };
        KindStats {
            kind,
            states: n,
            histogram,
            mean,
            mean_square,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AhfaStats {
    pub confirmed: KindStats,
    pub predicted: KindStats,
    /// Distinct completed-LHS symbols per state, indexed by state id.
    pub completed_lhs: Vec<usize>,
    /// number of distinct completed LHS symbols -> number of states
    pub completed_histogram: BTreeMap<usize, usize>,
    /// Dotted rules found in more than one state, with the states' ids.
    pub duplicates: Vec<(DottedRule, Vec<usize>)>,
    pub total_items: usize,
    pub distinct_items: usize,
    duplicate_names: Vec<(String, Vec<String>)>,
}

/// Size histograms, means and completion/duplication counts.
pub fn ahfa_statistics(g: &Grammar, states: &[AhfaState]) -> AhfaStats {
    let sizes = |kind| -> Vec<usize> { states.iter().filter(|s| s.kind == kind).map(|s| s.items.len()).collect() };
    let completed_lhs: Vec<usize> = states
        .iter()
        .map(|s| {
            s.items
                .iter()
                .filter(|&&d| is_completion(g, d))
                .map(|d| g.rule(d.rule).lhs)
                .collect::<BTreeSet<_>>()
                .len()
        })
        .collect();
    let mut completed_histogram = BTreeMap::new();
    for &c in &completed_lhs {
        *completed_histogram.entry(c).or_insert(0) += 1;
    }
    let mut occurrences: BTreeMap<DottedRule, Vec<usize>> = BTreeMap::new();
    for s in states {
        for &d in &s.items {
            occurrences.entry(d).or_default().push(s.id);
        }
    }
    let total_items = states.iter().map(|s| s.items.len()).sum();
    let distinct_items = occurrences.len();
    let duplicates: Vec<(DottedRule, Vec<usize>)> = occurrences.into_iter().filter(|(_, ids)| ids.len() > 1).collect();
    let duplicate_names = duplicates
        .iter()
        .map(|(d, ids)| {
            (
                g.display_dotted(d.rule, d.dot).to_string(),
                ids.iter().map(|&i| states[i].label()).collect(),
            )
        })
        .collect();
    AhfaStats {
        confirmed: KindStats::new(StateKind::Confirmed, &sizes(StateKind::Confirmed)),
        predicted: KindStats::new(StateKind::Predicted, &sizes(StateKind::Predicted)),
        completed_lhs,
        completed_histogram,
        duplicates,
        total_items,
        distinct_items,
        duplicate_names,
    }
}

impl AhfaStats {
    pub fn kinds(&self) -> [&KindStats; 2] {
        [&self.confirmed, &self.predicted]
    }

    /// Largest number of distinct completed LHS symbols in any state.
    pub fn max_completed_lhs(&self) -> usize {
        self.completed_lhs.iter().copied().max().unwrap_or(0)
    }

    /// Rendered duplicated dotted rules with the labels of their states.
    pub fn duplicate_names(&self) -> &[(String, Vec<String>)] {
        &self.duplicate_names
    }

    /// One row per table cell: `table,kind,key,count,value`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut rows: Vec<[String; 5]> = Vec::new();
        for k in self.kinds() {
            let kind = k.kind.as_str().to_string();
            for (size, count) in &k.histogram {
                rows.push([
                    "size".into(),
                    kind.clone(),
                    size.to_string(),
                    count.to_string(),
                    format!("{:.2}", percent(*count, k.states)),
                ]);
            }
            rows.push(["mean".into(), kind.clone(), "size".into(), k.states.to_string(), format!("{:.4}", k.mean)]);
            rows.push([
                "mean_square".into(),
                kind,
                "size".into(),
                k.states.to_string(),
                format!("{:.4}", k.mean_square),
            ]);
        }
        let n = self.completed_lhs.len();
        for (lhs, count) in &self.completed_histogram {
            rows.push([
                "completed_lhs".into(),
                "all".into(),
                lhs.to_string(),
                count.to_string(),
                format!("{:.2}", percent(*count, n)),
            ]);
        }
        for (rule, states) in &self.duplicate_names {
            rows.push(["duplicate".into(), "all".into(), rule.clone(), states.len().to_string(), states.join(" ")]);
        }
        w.write_record(["table", "kind", "key", "count", "value"]).expect("in-memory write");
        for row in rows {
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

fn percent(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

impl fmt::Display for AhfaStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in self.kinds() {
            writeln!(f, "{} states: {}", k.kind.as_str(), k.states)?;
            writeln!(f, "  {:>6}  {:>6}  {:>8}", "size", "states", "percent")?;
            for (size, count) in &k.histogram {
                writeln!(f, "  {:>6}  {:>6}  {:>7.2}%", size, count, percent(*count, k.states))?;
            }
            writeln!(f, "  mean size         {:.4}", k.mean)?;
            writeln!(f, "  mean size squared {:.4}", k.mean_square)?;
        }
        let n = self.completed_lhs.len();
        writeln!(f, "completed LHS symbols per state")?;
        writeln!(f, "  {:>6}  {:>6}  {:>8}", "lhs", "states", "percent")?;
        for (lhs, count) in &self.completed_histogram {
            writeln!(f, "  {:>6}  {:>6}  {:>7.2}%", lhs, count, percent(*count, n))?;
        }
        writeln!(
            f,
            "dotted rules: {} occurrences, {} distinct",
            self.total_items, self.distinct_items
        )?;
        for (rule, states) in &self.duplicate_names {
            writeln!(f, "  duplicated: {} in {}", rule, states.join(", "))?;
        }
        Ok(())
    }
}
