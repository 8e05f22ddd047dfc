#![allow(dead_code)]

use deprnn::corpus::{ClassAssignment, LabelInventory, RawToken, Vocabulary};
use deprnn::deptree::DependencyTree;
use deprnn::rnn::{ParamFamily, Parameters};
use deprnn::{Mode, Model, ModelShape};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> String {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

/// Random parent vector for `n` nodes: a random root, every other node
/// attached to a node placed before it in a random order.
pub fn random_parents(n: usize, rng: &mut ChaCha8Rng) -> Vec<Option<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut parents = vec![None; n];
    for k in 1..n {
        parents[order[k]] = Some(order[rng.gen_range(0..k)]);
    }
    parents
}

pub fn random_tree(n: usize, num_words: usize, num_labels: usize, rng: &mut ChaCha8Rng) -> DependencyTree {
    let parents = random_parents(n, rng);
    let words = (0..n).map(|_| rng.gen_range(0..num_words)).collect();
    let labels = (0..n).map(|_| rng.gen_range(0..num_labels.max(1))).collect();
    let surfaces = (0..n).map(|i| format!("n{i}")).collect();
    DependencyTree::from_parents(words, labels, parents, surfaces).unwrap()
}

pub fn tokens_from_parents(parents: &[Option<usize>], words: &[String], labels: &[String]) -> Vec<RawToken> {
    parents
        .iter()
        .enumerate()
        .map(|(i, p)| RawToken {
            position: i + 1,
            surface: words[i].clone(),
            head: p.map_or(0, |p| p + 1),
            label: labels[i].clone(),
        })
        .collect()
}

/// Model over words `w0..w{k-1}` plus sentinels, random classes and
/// parameters uniform in `[-scale, scale]`.
pub struct TinySpec {
    pub words: usize,
    pub classes: usize,
    pub labels: usize,
    pub hidden: usize,
    pub order: usize,
    pub direct: usize,
    pub mode: Mode,
    pub scale: f64,
}

pub fn tiny_model(spec: &TinySpec, rng: &mut ChaCha8Rng) -> Model {
    let words: Vec<(String, u64)> = (0..spec.words)
        .map(|i| (format!("w{i}"), (spec.words - i) as u64))
        .collect();
    let vocab = Vocabulary::from_words(words, 1);
    let n = vocab.len();
    let c = spec.classes.min(n);
    let mut wc: Vec<usize> = (0..n).map(|w| if w < c { w } else { rng.gen_range(0..c) }).collect();
    for i in (1..n).rev() {
        wc.swap(i, rng.gen_range(0..=i));
    }
    let classes = ClassAssignment::from_word_classes(wc, c).unwrap();
    let labels = LabelInventory::from_labels((0..spec.labels.saturating_sub(1)).map(|i| format!("l{i}")));
    let shape = ModelShape {
        hidden: spec.hidden,
        order: spec.order,
        direct_size: spec.direct,
        seed: rng.gen(),
    };
    let mut model = Model::new(spec.mode, vocab, classes, labels, &shape).unwrap();
    randomize(&mut model.params, spec.scale, rng);
    model
}

pub fn randomize(p: &mut Parameters, scale: f64, rng: &mut ChaCha8Rng) {
    for fam in ParamFamily::ALL {
        for x in p.family_mut(fam) {
            *x = rng.gen_range(-scale..scale);
        }
    }
}

pub fn zero_model(words: usize, classes: usize, mode: Mode) -> Model {
    let vocab = Vocabulary::from_words((0..words).map(|i| (format!("w{i}"), 1)).collect(), 1);
    let classes = deprnn::assign_classes(&vocab, classes).unwrap();
    let shape = ModelShape {
        hidden: 3,
        order: 3,
        direct_size: 31,
        seed: 0,
    };
    let mut m = Model::new(mode, vocab, classes, LabelInventory::from_labels(["dep"]), &shape).unwrap();
    for fam in ParamFamily::ALL {
        m.params.family_mut(fam).fill(0.0);
    }
    m
}
