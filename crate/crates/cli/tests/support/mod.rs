#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use deprnn::evaluation::CANDIDATES;
use deprnn::{CompletionProblem, RawSentence, RawToken};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn deprnn(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deprnn"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("running deprnn")
}

/// Sentence from `(surface, head, label)` triples, heads 1-based with 0 for
/// the root.
pub fn sentence(tokens: &[(String, usize, &str)]) -> RawSentence {
    tokens
        .iter()
        .enumerate()
        .map(|(i, (surface, head, label))| RawToken {
            position: i + 1,
            surface: surface.clone(),
            head: *head,
            label: label.to_string(),
        })
        .collect()
}

/// Random parent vector (1-based heads) where each token attaches to an
/// earlier one, usually its predecessor.
pub fn mostly_chain_heads(len: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..len)
        .map(|i| match i {
            0 => 0,
            _ if rng.gen_bool(0.8) => i,
            _ => rng.gen_range(1..=i),
        })
        .collect()
}

/// Random sentences over `w0..w{vocab-1}` with mostly-chain trees.
pub fn random_corpus(rng: &mut ChaCha8Rng, sentences: usize, len: std::ops::RangeInclusive<usize>, vocab: usize) -> Vec<RawSentence> {
    (0..sentences)
        .map(|_| {
            let n = rng.gen_range(len.clone());
            let heads = mostly_chain_heads(n, rng);
            let toks: Vec<(String, usize, &str)> = heads
                .iter()
                .map(|&h| (format!("w{}", rng.gen_range(0..vocab)), h, if h == 0 { "root" } else { "dep" }))
                .collect();
            sentence(&toks)
        })
        .collect()
}

/// Two kinds of sentences whose last word is predictable in different ways.
///
/// Long-distance: `k F F F F o`, the key `k` heads every other word and `o`
/// is fixed by `k`, four surface positions away.
/// Local: `a b z`, a chain in which `z` is fixed by the pair `(a, b)`.
pub struct DirectionTask {
    pub keys: usize,
    pub fillers: usize,
    pub pair_values: usize,
}

impl DirectionTask {
    fn long_distance(&self, key: usize, out: usize, rng: &mut ChaCha8Rng) -> RawSentence {
        let mut toks = vec![(format!("k{key}"), 0, "root")];
        for _ in 0..4 {
            toks.push((format!("f{}", rng.gen_range(0..self.fillers)), 1, "mod"));
        }
        toks.push((format!("o{out}"), 1, "obj"));
        sentence(&toks)
    }

    fn local(&self, a: usize, b: usize, z: usize) -> RawSentence {
        sentence(&[
            (format!("a{a}"), 0, "root"),
            (format!("b{b}"), 1, "nmod"),
            (format!("z{z}"), 2, "dobj"),
        ])
    }

    fn pair_target(&self, a: usize, b: usize) -> usize {
        (a + b) % self.pair_values
    }

    pub fn corpus(&self, rng: &mut ChaCha8Rng, sentences: usize) -> Vec<RawSentence> {
        (0..sentences)
            .map(|i| {
                if i % 2 == 0 {
                    let k = rng.gen_range(0..self.keys);
                    self.long_distance(k, k, rng)
                } else {
                    let (a, b) = (rng.gen_range(0..self.pair_values), rng.gen_range(0..self.pair_values));
                    self.local(a, b, self.pair_target(a, b))
                }
            })
            .collect()
    }

    /// Problems alternating between the two kinds; impostors replace the last
    /// word with another word of the same kind.
    pub fn problems(&self, rng: &mut ChaCha8Rng, count: usize) -> Vec<CompletionProblem> {
        (0..count)
            .map(|i| {
                let gold = rng.gen_range(0..CANDIDATES);
                let candidates = if i % 2 == 0 {
                    let k = rng.gen_range(0..self.keys);
                    let fillers: Vec<usize> = (0..4).map(|_| rng.gen_range(0..self.fillers)).collect();
                    let outs = choices(k, self.keys, gold, rng);
                    outs.iter()
                        .map(|&o| {
                            let mut toks = vec![(format!("k{k}"), 0, "root")];
                            toks.extend(fillers.iter().map(|f| (format!("f{f}"), 1, "mod")));
                            toks.push((format!("o{o}"), 1, "obj"));
                            sentence(&toks)
                        })
                        .collect()
                } else {
                    let (a, b) = (rng.gen_range(0..self.pair_values), rng.gen_range(0..self.pair_values));
                    let z = self.pair_target(a, b);
                    let outs = choices(z, self.pair_values, gold, rng);
                    outs.iter().map(|&o| self.local(a, b, o)).collect()
                };
                CompletionProblem {
                    id: format!("q{i}"),
                    candidates,
                    gold,
                }
            })
            .collect()
    }
}

/// Five distinct values from `0..range` with `keep` at index `gold`.
fn choices(keep: usize, range: usize, gold: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut v: Vec<usize> = (0..range).filter(|&x| x != keep).collect();
    v.shuffle(rng);
    v.truncate(CANDIDATES - 1);
    v.insert(gold, keep);
    v
}
