mod common;

use common::{random_parents, tiny_model, tokens_from_parents, zero_model, TinySpec};
use deprnn::evaluation::{argmax, completion_perplexity, CANDIDATES};
use deprnn::{
    evaluate, load_completion_set, split_dev_test, write_completion_set, CompletionProblem, Mode, RawSentence,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sentence(rng: &mut ChaCha8Rng, len: usize, words: usize) -> RawSentence {
    let parents = random_parents(len, rng);
    let surfaces: Vec<String> = (0..len).map(|_| format!("w{}", rng.gen_range(0..words))).collect();
    tokens_from_parents(&parents, &surfaces, &vec!["dep".into(); len])
}

fn problem(id: usize, candidates: Vec<RawSentence>, gold: usize) -> CompletionProblem {
    CompletionProblem {
        id: format!("p{id}"),
        candidates,
        gold,
    }
}

#[test]
fn ties_pick_the_first_candidate() {
    // one class per word: every token costs log N, so equal lengths tie
    let m = zero_model(8, 11, Mode::Dependency);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let problems: Vec<_> = (0..20)
        .map(|i| problem(i, (0..CANDIDATES).map(|_| sentence(&mut rng, 4, 8)).collect(), i % CANDIDATES))
        .collect();
    for mode in [Mode::Sequential, Mode::Dependency] {
        let r = evaluate(&m, &problems, mode, "dev");
        assert!(r.per_problem.iter().all(|p| p.chosen == 0));
        assert_eq!(r.correct(), 4);
        assert!((r.accuracy - 0.2).abs() < 1e-15);
    }
}

#[test]
fn planted_gold_is_always_found() {
    // under a uniform model the shortest candidate has the highest probability
    let m = zero_model(8, 11, Mode::Dependency);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let problems: Vec<_> = (0..30)
        .map(|i| {
            let gold = rng.gen_range(0..CANDIDATES);
            let candidates = (0..CANDIDATES)
                .map(|k| sentence(&mut rng, if k == gold { 3 } else { 5 }, 8))
                .collect();
            problem(i, candidates, gold)
        })
        .collect();
    let r = evaluate(&m, &problems, Mode::Dependency, "test");
    assert_eq!(r.accuracy, 1.0);
    assert_eq!(r.footer(), "ACCURACY test = 1 (30/30)");
    assert_eq!(r.table().lines().count(), 30);
}

#[test]
fn random_model_is_near_chance() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = tiny_model(
        &TinySpec {
            words: 30,
            classes: 5,
            labels: 2,
            hidden: 8,
            order: 3,
            direct: 101,
            mode: Mode::Dependency,
            scale: 1.0,
        },
        &mut rng,
    );
    let problems: Vec<_> = (0..400)
        .map(|i| {
            let base = sentence(&mut rng, 6, 30);
            let slot = rng.gen_range(0..6);
            let candidates = (0..CANDIDATES)
                .map(|_| {
                    let mut c = base.clone();
                    c[slot].surface = format!("w{}", rng.gen_range(0..30));
                    c
                })
                .collect();
            problem(i, candidates, rng.gen_range(0..CANDIDATES))
        })
        .collect();
    let acc = evaluate(&m, &problems, Mode::Dependency, "all").accuracy;
    assert!((acc - 0.2).abs() <= 0.06, "{acc}");
}

#[test]
fn completion_files_round_trip_and_split() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let problems: Vec<_> = (0..7)
        .map(|i| problem(i, (0..CANDIDATES).map(|_| sentence(&mut rng, 5, 10)).collect(), i % CANDIDATES))
        .collect();
    let mut buf = Vec::new();
    write_completion_set(&mut buf, &problems).unwrap();
    let back = load_completion_set(buf.as_slice()).unwrap();
    assert_eq!(back, problems);
    let (dev, test) = split_dev_test(&back);
    assert_eq!((dev.len(), test.len()), (4, 3));
    assert_eq!(test[0].id, "p4");
}

#[test]
fn malformed_problems_name_their_id() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut p = problem(9, (0..CANDIDATES).map(|_| sentence(&mut rng, 3, 10)).collect(), 1);
    p.candidates[2][0].head = 0;
    p.candidates[2][1].head = 0;
    p.candidates[2][2].head = 0;
    let mut buf = Vec::new();
    write_completion_set(&mut buf, &[p.clone()]).unwrap();
    let err = load_completion_set(buf.as_slice()).unwrap_err().to_string();
    assert!(err.contains("p9"), "{err}");

    p.candidates.pop();
    let mut buf = Vec::new();
    write_completion_set(&mut buf, &[p]).unwrap();
    assert!(load_completion_set(buf.as_slice()).is_err());
    assert!(load_completion_set(&b"#PROBLEM x\n"[..]).is_err());
}

#[test]
fn perplexity_of_uniform_model_on_completions() {
    let m = zero_model(8, 11, Mode::Dependency);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let problems: Vec<_> = (0..5)
        .map(|i| problem(i, (0..CANDIDATES).map(|_| sentence(&mut rng, 4, 8)).collect(), 0))
        .collect();
    let (gold, all) = completion_perplexity(&m, &problems, Mode::Dependency).unwrap();
    let n = m.vocab.len() as f64;
    assert!((gold - n).abs() < 1e-9 && (all - n).abs() < 1e-9);
}

proptest! {
    #[test]
    fn argmax_ignores_constant_shifts(scores in prop::array::uniform5(-50.0f64..0.0), shift in -10.0f64..10.0) {
        let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
        let a = argmax(&scores);
        prop_assert!(scores.iter().all(|&s| s <= scores[a]));
        prop_assert!(scores[..a].iter().all(|&s| s < scores[a]));
        // shifting can merge near-ties through rounding, never reorder distinct gaps
        let b = argmax(&shifted);
        prop_assert!((scores[b] - scores[a]).abs() < 1e-12 * (1.0 + scores[a].abs()) + 1e-9);
    }
}
