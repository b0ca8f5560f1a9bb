mod common;

use std::collections::BTreeMap;

use adaptrec_core::talkmine::{
    adapt, init_category, propagate_keywords, recommend_records, Answer,
    InterestProfile, Step,
};
use adaptrec_core::{AdaptiveContext, ConversationConfig, FuzzyCategory, HebbianRates, KnowledgeContext, RecordId};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_adaptive(rng: &mut ChaCha8Rng, id: &str) -> AdaptiveContext {
    let records = common::random_records(rng, 60, 20, 10);
    AdaptiveContext::new(id, KnowledgeContext::from_records(records, common::loose()).unwrap())
}

fn random_category(rng: &mut ChaCha8Rng, ctx: &KnowledgeContext, size: usize) -> FuzzyCategory {
    let names = ctx.keywords().names();
    let mut values: BTreeMap<String, f64> = BTreeMap::new();
    for _ in 0..size {
        let k = names[rng.gen_range(0..names.len())].clone();
        values.insert(k, rng.gen_range(0.05..1.0));
    }
    if let Some(first) = values.values_mut().next() {
        *first = 1.0;
    }
    FuzzyCategory::from_memberships(values)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn adaptation_keeps_symmetry_and_bounds(seed in any::<u64>(), rounds in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ctx = random_adaptive(&mut rng, "c");
        prop_assume!(ctx.context().keyword_count() > 1);
        let raw = ctx.raw_keyword_proximity();
        for _ in 0..rounds {
            let size = rng.gen_range(1..5);
            let cat = random_category(&mut rng, ctx.context(), size);
            adapt(&mut ctx, &cat, HebbianRates::default()).unwrap();
        }
        let w = ctx.working();
        prop_assert!(w.all_in_unit_interval());
        for (i, j, v) in w.entries() {
            prop_assert_eq!(w.get(j, i), v);
        }
        prop_assert_eq!(ctx.raw_keyword_proximity(), raw);
    }

    #[test]
    fn finalized_peak_is_one(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_adaptive(&mut rng, "a");
        let b = random_adaptive(&mut rng, "b");
        let names = a.context().keywords().names().to_vec();
        prop_assume!(!names.is_empty());
        let profile = InterestProfile::new([names[rng.gen_range(0..names.len())].clone()]).unwrap();
        let mut state = init_category(&profile, &[&a, &b], None, ConversationConfig::default()).unwrap();
        let mut guard = 0;
        while let Step::Ask(q) = state.next_question() {
            state.apply_answer(&q.keyword, Answer::user(rng.gen_bool(0.5))).unwrap();
            guard += 1;
            prop_assert!(guard <= state.config.question_budget);
        }
        let cat = state.finalize();
        if !cat.is_empty() {
            prop_assert_eq!(cat.peak(), 1.0);
            prop_assert!(cat.members.values().all(|m| m.value >= 0.01 && m.value <= 1.0));
        }
    }
}

#[test]
fn reinforcement_converges_geometrically() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut ctx = random_adaptive(&mut rng, "c");
    let names = ctx.context().keywords().names().to_vec();
    let (a, b) = (names[0].clone(), names[1].clone());
    let cat = FuzzyCategory::from_memberships([(a.clone(), 1.0), (b.clone(), 1.0)]);
    let mut last = ctx.keyword_proximity(&a, &b).unwrap();
    let rates = HebbianRates::default();
    for _ in 0..30 {
        adapt(&mut ctx, &cat, rates).unwrap();
        let next = ctx.keyword_proximity(&a, &b).unwrap();
        assert!(next > last && next <= 1.0);
        // gap to 1 shrinks by exactly the reinforcement factor
        assert!(((1.0 - next) - 0.9 * (1.0 - last)).abs() < 1e-12);
        last = next;
    }
}

#[test]
fn recommendation_matches_scoring_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10 {
        let ctx = random_adaptive(&mut rng, "c");
        if ctx.context().keyword_count() == 0 {
            continue;
        }
        let cat = random_category(&mut rng, ctx.context(), 4);
        let total: f64 = cat.members.values().map(|m| m.value).sum();
        let c = ctx.context();
        let mut oracle: Vec<(usize, f64)> = (0..c.record_count())
            .map(|r| {
                let hit: f64 = cat
                    .members
                    .iter()
                    .filter(|(k, _)| c.qualifies(c.keyword_id(k).unwrap(), RecordId(r)))
                    .map(|(_, m)| m.value)
                    .sum();
                (r, hit / total)
            })
            .filter(|&(_, s)| s > 0.0)
            .collect();
        oracle.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let got = recommend_records(&cat, c, usize::MAX).unwrap();
        assert_eq!(got.len(), oracle.len());
        for ((r, s), (or, os)) in got.iter().zip(&oracle) {
            assert_eq!(r.0, *or);
            assert!((s - os).abs() < 1e-12);
        }
    }
}

#[test]
fn propagated_keyword_strengthens_each_round() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut ctx = random_adaptive(&mut rng, "c");
    let host = ctx.context().keywords().names()[0].clone();
    let cat = FuzzyCategory::from_memberships([(host.clone(), 1.0), ("brand_new".to_string(), 0.8)]);
    let rates = HebbianRates::default();
    let created = propagate_keywords(&mut ctx, &cat, rates.reinforce);
    assert_eq!(created, ["brand_new"]);
    let mut last = ctx.keyword_proximity("brand_new", &host).unwrap();
    assert!((last - 0.08).abs() < 1e-15);
    for _ in 0..10 {
        adapt(&mut ctx, &cat, rates).unwrap();
        propagate_keywords(&mut ctx, &cat, rates.reinforce);
        let next = ctx.keyword_proximity("brand_new", &host).unwrap();
        assert!(next > last);
        last = next;
    }
}
