mod common;

use std::collections::BTreeSet;

use chaf_earley::ahfa::{build_ahfa, Label, StateKind};
use chaf_earley::evaluator::{all_trees, build_tree, evaluate, parse_values, pre_rewrite_tree};
use chaf_earley::oracle::{bf_language, bf_nullable, bf_nulling};
use chaf_earley::recognizer::{postdot, DottedRule, Phase, Recognizer};
use chaf_earley::rewrite::{chaf_rewrite, eliminate_nulling, nnf_rewrite, nnf_rule_count, nulling_free, verify_slot_coverage, Role};
use chaf_earley::semantics::collecting;
use chaf_earley::{classify, Grammar, NullClass};
use common::{all_inputs, random_grammar, rng, terminals, tokens, Shape};
use proptest::prelude::*;

fn nullable_grammar(seed: u64) -> Grammar {
    let mut r = rng(seed);
    let shape = Shape::nullable(&mut r);
    random_grammar(&mut r, shape)
}

fn proper_nullables(g: &Grammar, cls: &chaf_earley::SymbolClass, r: chaf_earley::RuleId) -> usize {
    g.rule(r).rhs.iter().filter(|&&s| cls.is_proper_nullable(s)).count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn classification_matches_derivation_search(seed in any::<u64>()) {
        let g = nullable_grammar(seed);
        let cls = classify(&g);
        for s in g.symbols() {
            prop_assert_eq!(cls.is_nullable(s), bf_nullable(&g, s), "{}", g.name(s));
            prop_assert_eq!(cls.is_nulling(s), bf_nulling(&g, s), "{}", g.name(s));
            let expect = match (cls.is_nullable(s), cls.is_nulling(s)) {
                (false, _) => NullClass::NonNullable,
                (true, true) => NullClass::Nulling,
                (true, false) => NullClass::ProperNullable,
            };
            prop_assert_eq!(cls.symbol(s), expect);
        }
    }

    #[test]
    fn rewrites_preserve_the_language(seed in any::<u64>()) {
        let g = nullable_grammar(seed);
        let cls = classify(&g);
        let rg = nulling_free(&g).unwrap();
        let mut rewritten = bf_language(rg.grammar(), 4).sentences;
        if rg.nullable_start() {
            rewritten.insert(Vec::new());
        }
        prop_assert_eq!(&rewritten, &bf_language(&g, 4).sentences);
        let total: u64 = g.rule_ids().map(|r| nnf_rule_count(&g, &cls, r)).sum();
        if total < 4096 {
            let nnf = nnf_rewrite(&g, &cls).unwrap();
            prop_assert_eq!(bf_language(nnf.grammar(), 4).sentences, bf_language(&g, 4).sentences);
        }
    }

    #[test]
    fn chaf_rule_counts_and_bindings(seed in any::<u64>()) {
        let g = nullable_grammar(seed);
        let cls = classify(&g);
        let chaf = chaf_rewrite(&g, &cls).unwrap();
        prop_assert!(verify_slot_coverage(&chaf).is_ok());
        let after = classify(chaf.grammar());
        for s in chaf.grammar().symbols() {
            prop_assert!(!after.is_proper_nullable(s), "{} still proper nullable", chaf.grammar().name(s));
        }
        for r in g.rule_ids() {
            let pn = proper_nullables(&g, &cls, r);
            prop_assert!(chaf.rules_from(r) <= 3 * pn + 1);
            if (1..=6).contains(&pn) && Some(r) != g.accept_rule() {
                prop_assert_eq!(nnf_rule_count(&g, &cls, r), 1u64 << pn);
            }
        }
        for r in chaf.grammar().rule_ids() {
            let b = chaf.binding(r);
            prop_assert_eq!(b.slot_map.len(), chaf.grammar().rule(r).rhs.len());
            prop_assert_eq!(b.continuation().is_some(), matches!(b.role, Role::ChafHead | Role::ChafInner));
        }
    }

    #[test]
    fn markup_restores_the_stripped_rule(seed in any::<u64>()) {
        let g = nullable_grammar(seed);
        let chaf = chaf_rewrite(&g, &classify(&g)).unwrap();
        let nf = eliminate_nulling(&chaf).unwrap();
        let mut keys = BTreeSet::new();
        for r in nf.grammar().rule_ids() {
            let m = nf.markup(r).unwrap();
            prop_assert_eq!(&m.restore(&nf.grammar().rule(r).rhs), &m.present.rhs);
            prop_assert_eq!(chaf.grammar().rule(m.present_id), &m.present);
            prop_assert!(!nf.grammar().rule(r).rhs.is_empty());
            prop_assert!(keys.insert(nf.key(r)), "rule identity repeated");
        }
    }

    #[test]
    fn chart_invariants(seed in any::<u64>(), picks in proptest::collection::vec(any::<prop::sample::Index>(), 0..6)) {
        let g = nullable_grammar(seed);
        let rec = Recognizer::new(nulling_free(&g).unwrap()).unwrap();
        let ts = terminals(&g);
        let w: Vec<_> = if ts.is_empty() { Vec::new() } else { picks.iter().map(|i| ts[i.index(ts.len())]).collect() };
        let chart = rec.recognize(&tokens(&g, &w)).unwrap();
        let rg = rec.grammar();
        for (i, set) in chart.sets().iter().enumerate() {
            let mut seen = BTreeSet::new();
            for (k, item) in set.items().iter().enumerate() {
                prop_assert!(seen.insert((item.dr, item.origin)), "duplicate item");
                prop_assert_eq!(item.current, i);
                prop_assert!(item.origin <= i);
                match set.phase(k) {
                    Phase::Predict => {
                        prop_assert_eq!(item.dr.dot, 0);
                        prop_assert_eq!(item.origin, i);
                        prop_assert!(!rg.rule(item.dr.rule).rhs.is_empty());
                    }
                    Phase::Scan => prop_assert_eq!(Some(w[i - 1]), rg.rule(item.dr.rule).rhs.get(item.dr.dot - 1).copied()),
                    Phase::Reduce => prop_assert!(item.dr.dot > 0),
                    Phase::Seed => prop_assert_eq!(i, 0),
                }
            }
        }
        let stats = chart.stats();
        prop_assert_eq!(stats.total_attempts, stats.total_items + stats.duplicate_attempts);
        // left-eideticism: finished sets never change
        let mut stepped = rec.chart();
        let mut snapshots = Vec::new();
        for t in tokens(&g, &w) {
            snapshots.push(stepped.set(stepped.frontier()).items().to_vec());
            stepped.advance(t).unwrap();
        }
        for (i, snap) in snapshots.iter().enumerate() {
            prop_assert_eq!(stepped.set(i).items(), snap.as_slice());
        }
        prop_assert_eq!(chart.accepted(), bf_language(&g, w.len()).contains(&w));
    }

    #[test]
    fn progress_reports_use_pre_rewrite_rules(seed in any::<u64>()) {
        let g = nullable_grammar(seed);
        let rec = Recognizer::new(nulling_free(&g).unwrap()).unwrap();
        let ts = terminals(&g);
        for w in all_inputs(&ts, 2, 20) {
            let chart = rec.recognize(&tokens(&g, &w)).unwrap();
            for i in 0..=chart.frontier() {
                for e in chart.progress_report(i) {
                    prop_assert!(e.dot <= g.rule(e.rule).rhs.len());
                    prop_assert!(e.origin <= i);
                }
            }
        }
    }

    #[test]
    fn evaluation_is_deterministic_and_complete(seed in any::<u64>()) {
        let g = nullable_grammar(seed);
        let rec = Recognizer::new(nulling_free(&g).unwrap()).unwrap();
        let sem = collecting(&g);
        for w in all_inputs(&terminals(&g), 3, 40) {
            let chart = rec.recognize(&tokens(&g, &w)).unwrap();
            let Some(tree) = build_tree(&chart) else {
                prop_assert!(!chart.accepted());
                continue;
            };
            let a = evaluate(rec.rewritten(), &tree, chart.input(), &sem).unwrap();
            let b = evaluate(rec.rewritten(), &tree, chart.input(), &sem).unwrap();
            prop_assert_eq!(&a, &b);
            if let Ok(trees) = all_trees(&chart, 50) {
                prop_assert_eq!(trees.first(), Some(&tree));
                let values = parse_values(&chart, &sem, 50).unwrap();
                prop_assert!(values.contains(&a));
            }
            let view = pre_rewrite_tree(rec.rewritten(), &tree, chart.input()).unwrap();
            prop_assert_eq!(view.span, (0, w.len()));
        }
    }

    #[test]
    fn ahfa_invariants(seed in any::<u64>()) {
        let g = nullable_grammar(seed);
        let cls = classify(&g);
        let total: u64 = g.rule_ids().map(|r| nnf_rule_count(&g, &cls, r)).sum();
        prop_assume!(total < 2048);
        let nnf = nnf_rewrite(&g, &cls).unwrap();
        let a = build_ahfa(&nnf).unwrap();
        let b = build_ahfa(&nnf).unwrap();
        prop_assert_eq!(a.states(), b.states());
        prop_assert_eq!(a.goto_table(), b.goto_table());

        let ng = nnf.grammar();
        let ncls = classify(ng);
        let stats = a.statistics();
        let mut distinct = BTreeSet::new();
        for s in a.states() {
            distinct.extend(s.items.iter().copied());
            if s.kind == StateKind::Predicted {
                for d in &s.items {
                    let before = &ng.rule(d.rule).rhs[..d.dot];
                    prop_assert!(before.iter().all(|&x| ncls.is_nulling(x)), "kernel item in predicted state");
                }
            }
            let eps = a.goto_table().edges_from(s.id).filter(|(l, _)| *l == Label::Epsilon).count();
            prop_assert!(eps <= 1);
            if let Some(t) = a.goto(s.id, Label::Epsilon) {
                prop_assert_eq!(a.state(t).kind, StateKind::Predicted);
            }
        }
        prop_assert_eq!(a.state(0).kind, StateKind::Confirmed);
        prop_assert_eq!(stats.distinct_items, distinct.len());
        prop_assert!(stats.total_items >= stats.distinct_items);
        prop_assert_eq!(stats.total_items == stats.distinct_items, stats.duplicates.is_empty());
        for k in stats.kinds() {
            prop_assert_eq!(k.histogram.values().sum::<usize>(), k.states);
        }

        // every dotted rule of a reachable LHS shows up somewhere
        let mut reachable = BTreeSet::from([ng.root()]);
        let mut work = vec![ng.root()];
        while let Some(x) = work.pop() {
            for &r in ng.rules_for(x) {
                for &y in &ng.rule(r).rhs {
                    if reachable.insert(y) {
                        work.push(y);
                    }
                }
            }
        }
        for r in ng.rule_ids() {
            if reachable.contains(&ng.rule(r).lhs) {
                for dot in 0..=ng.rule(r).rhs.len() {
                    prop_assert!(distinct.contains(&DottedRule::new(r, dot)), "{} missing", ng.display_dotted(r, dot));
                }
            }
        }
        for s in a.states() {
            for d in &s.items {
                if let Some(x) = postdot(ng, *d) {
                    prop_assert!(a.goto(s.id, Label::Symbol(x)).is_some());
                }
            }
        }
    }
}
