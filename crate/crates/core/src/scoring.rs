//! Sentence log-likelihoods.
//!
//! Sequential scoring applies the chain rule left to right and predicts the
//! end sentinel. Dependency scoring runs the network over every unroll and
//! counts each node's `log P(w_i | ancestors)` once, on its first visit.

use std::collections::BTreeMap;

use log::warn;

use crate::corpus::RawSentence;
use crate::deptree::{validate_tree, DependencyTree};
use crate::error::{Error, Result};
use crate::model::{Mode, Model};
use crate::rnn::{ContextWindow, HiddenState};
use crate::sequence;

#[derive(Clone, Debug, PartialEq)]
pub struct SentenceScore {
    /// Natural-log probability per scored slot: node index in dependency
    /// mode, word position (with the end sentinel at `len`) in sequential mode.
    pub per_token: BTreeMap<usize, f64>,
    pub total: f64,
    pub token_count: usize,
}

impl SentenceScore {
    fn from_map(per_token: BTreeMap<usize, f64>) -> Self {
        let total = per_token.values().sum();
        let token_count = per_token.len();
        SentenceScore {
            per_token,
            total,
            token_count,
        }
    }
}

pub fn score_sequential(model: &Model, words: &[usize]) -> SentenceScore {
    let seq = sequence::sequential(words, &model.vocab);
    let pass = model.params.forward(&model.classes, &seq);
    SentenceScore::from_map(
        pass.steps
            .iter()
            .enumerate()
            .map(|(t, s)| (t, s.logprob))
            .collect(),
    )
}

pub fn score_dependency(model: &Model, tree: &DependencyTree, use_labels: bool) -> SentenceScore {
    let params = &model.params;
    let mut per_token = BTreeMap::new();
    for unroll in tree.unrolls() {
        let seq = sequence::unroll_sequence(tree, &unroll, &model.vocab, use_labels);
        let mut state = HiddenState::zeros(params.hyper.hidden);
        let mut window = ContextWindow::new(params.hyper.order);
        for (t, &node) in unroll.path.iter().enumerate() {
            if per_token.contains_key(&node) {
                // Same ancestor prefix as the first visit: only the state is
                // needed to continue down this unroll.
                window.push(seq.inputs[t]);
                state = params.hidden_step(&state, seq.inputs[t], seq.label(t));
                continue;
            }
            let step = params.step(
                &model.classes,
                &state,
                &mut window,
                seq.inputs[t],
                seq.label(t),
                seq.targets[t],
            );
            per_token.insert(node, step.logprob);
            state = step.state;
        }
    }
    SentenceScore::from_map(per_token)
}

/// Scores a raw sentence in `mode`; dependency modes require a valid tree.
pub fn score_sentence(model: &Model, sentence: &RawSentence, mode: Mode) -> Result<SentenceScore> {
    match mode {
        Mode::Sequential => {
            let words: Vec<usize> = sentence
                .iter()
                .map(|t| model.vocab.map_token(&t.surface))
                .collect();
            Ok(score_sequential(model, &words))
        }
        Mode::Dependency | Mode::LabelledDependency => {
            let tree = validate_tree(sentence, &model.vocab, &model.labels)?;
            Ok(score_dependency(model, &tree, mode.uses_labels()))
        }
    }
}

/// `exp(-sum(total) / sum(token_count))` over the corpus. Sentences whose
/// trees are malformed are skipped with a warning in dependency modes.
pub fn perplexity(model: &Model, corpus: &[RawSentence], mode: Mode) -> Result<f64> {
    let mut logprob = 0.0;
    let mut tokens = 0usize;
    for (i, sentence) in corpus.iter().enumerate() {
        match score_sentence(model, sentence, mode) {
            Ok(score) => {
                logprob += score.total;
                tokens += score.token_count;
            }
            Err(Error::Tree(e)) => warn!("skipping sentence {i}: {e}"),
            Err(e) => return Err(e),
        }
    }
    if tokens == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok((-logprob / tokens as f64).exp())
}
