//! Online SGD with truncated BPTT over sentences or tree unrolls, per-token
//! learning-rate discounts and validation-triggered annealing.

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{ClassAssignment, RawSentence};
use crate::deptree::validate_tree;
use crate::evaluation::{evaluate, CompletionProblem};
use crate::model::{Mode, Model};
use crate::rnn::{
    ContextWindow, Gradients, HiddenState, Parameters, Sequence, GRADIENT_CLIP,
};
use crate::sequence;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub initial_lr: f64,
    pub decay: f64,
    pub bptt_steps: usize,
    pub max_epochs: usize,
    /// Training stops once the learning rate falls below this.
    pub min_lr: f64,
    pub mode: Mode,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            initial_lr: 0.1,
            decay: 0.66,
            bptt_steps: 5,
            max_epochs: 20,
            min_lr: 1e-4,
            mode: Mode::Dependency,
            shuffle_seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Learning rate used during the epoch.
    pub lr: f64,
    /// Mean per-token entropy in bits, each token counted once.
    pub train_entropy: f64,
    pub dev_accuracy: Option<f64>,
}

impl EpochRecord {
    /// `epoch<TAB>lr<TAB>train_entropy<TAB>dev_accuracy`; a missing dev
    /// accuracy is written as `-`.
    pub fn history_line(&self) -> String {
        let acc = self
            .dev_accuracy
            .map_or_else(|| "-".to_owned(), |a| a.to_string());
        format!("{}\t{}\t{}\t{acc}", self.epoch, self.lr, self.train_entropy)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainState {
    pub epoch: usize,
    pub current_lr: f64,
    pub annealing: bool,
    pub decay: f64,
    pub previous_metric: Option<f64>,
    pub history: Vec<EpochRecord>,
}

impl TrainState {
    pub fn new(initial_lr: f64, decay: f64) -> Self {
        TrainState {
            epoch: 0,
            current_lr: initial_lr,
            annealing: false,
            decay,
            previous_metric: None,
            history: Vec::new(),
        }
    }
}

/// Latches annealing the first time the validation accuracy strictly drops;
/// once latched the rate is multiplied by the decay after every epoch.
pub fn anneal(state: &mut TrainState, accuracy: f64) {
    if !state.annealing {
        if let Some(prev) = state.previous_metric {
            if accuracy < prev {
                state.annealing = true;
            }
        }
    }
    if state.annealing {
        state.current_lr *= state.decay;
    }
    state.previous_metric = Some(accuracy);
}

/// One sequence with its per-position discounts. `slots[t]` identifies the
/// token predicted at position `t` within its sentence (node index, or word
/// position in sequential mode).
#[derive(Clone, Debug, PartialEq)]
pub struct TrainUnit {
    pub seq: Sequence,
    pub discounts: Vec<f64>,
    pub slots: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainSentence {
    pub units: Vec<TrainUnit>,
    /// Distinct predicted tokens in the sentence.
    pub tokens: usize,
}

/// One SGD update, reported to observers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateEvent {
    pub sentence: usize,
    pub slot: usize,
    pub target: usize,
    pub rate: f64,
}

pub fn prepare_sentence(model: &Model, sentence: &RawSentence, mode: Mode) -> Option<TrainSentence> {
    match mode {
        Mode::Sequential => {
            let words: Vec<usize> = sentence
                .iter()
                .map(|t| model.vocab.map_token(&t.surface))
                .collect();
            let seq = sequence::sequential(&words, &model.vocab);
            let len = seq.len();
            Some(TrainSentence {
                units: vec![TrainUnit {
                    seq,
                    discounts: vec![1.0; len],
                    slots: (0..len).collect(),
                }],
                tokens: len,
            })
        }
        Mode::Dependency | Mode::LabelledDependency => {
            let tree = match validate_tree(sentence, &model.vocab, &model.labels) {
                Ok(t) => t,
                Err(e) => {
                    warn!("skipping malformed tree: {e}");
                    return None;
                }
            };
            let stats = tree.node_stats();
            let units = tree
                .unrolls()
                .into_iter()
                .map(|u| TrainUnit {
                    seq: sequence::unroll_sequence(&tree, &u, &model.vocab, mode.uses_labels()),
                    discounts: u.path.iter().map(|&n| stats.discount[n]).collect(),
                    slots: u.path,
                })
                .collect();
            Some(TrainSentence {
                units,
                tokens: tree.len(),
            })
        }
    }
}

/// Preprocesses a corpus for `mode`, dropping malformed trees.
pub fn prepare_corpus(model: &Model, sentences: &[RawSentence], mode: Mode) -> Vec<TrainSentence> {
    let out: Vec<TrainSentence> = sentences
        .iter()
        .filter_map(|s| prepare_sentence(model, s, mode))
        .collect();
    if out.len() < sentences.len() {
        warn!("{} of {} sentences skipped", sentences.len() - out.len(), sentences.len());
    }
    out
}

/// Trains on one sequence from a zeroed hidden state, updating after every
/// position with rate `discounts[t] * lr`. Returns the summed pre-update
/// cross-entropy.
pub fn train_sequence(
    params: &mut Parameters,
    classes: &ClassAssignment,
    seq: &Sequence,
    discounts: &[f64],
    lr: f64,
    bptt_steps: usize,
) -> f64 {
    train_sequence_with(params, classes, seq, discounts, lr, bptt_steps, |_, _, _| {})
        .iter()
        .map(|lp| -lp)
        .sum()
}

/// As [`train_sequence`], calling `on_update(t, rate, logprob)` for every
/// position and returning the per-position pre-update log-probabilities.
pub fn train_sequence_with<F>(
    params: &mut Parameters,
    classes: &ClassAssignment,
    seq: &Sequence,
    discounts: &[f64],
    lr: f64,
    bptt_steps: usize,
    mut on_update: F,
) -> Vec<f64>
where
    F: FnMut(usize, f64, f64),
{
    assert_eq!(discounts.len(), seq.len());
    let mut state = HiddenState::zeros(params.hyper.hidden);
    let mut window = ContextWindow::new(params.hyper.order);
    let mut steps = Vec::with_capacity(seq.len());
    let mut logprobs = Vec::with_capacity(seq.len());
    for t in 0..seq.len() {
        let step = params.step(
            classes,
            &state,
            &mut window,
            seq.inputs[t],
            seq.label(t),
            seq.targets[t],
        );
        logprobs.push(step.logprob);
        state = step.state.clone();
        steps.push(step);

        let rate = discounts[t] * lr;
        if rate != 0.0 {
            let mut grads = Gradients::default();
            params.accumulate_position(classes, seq, &steps, t, bptt_steps, &mut grads);
            grads.clip(GRADIENT_CLIP);
            params.apply(&grads, rate);
        }
        on_update(t, rate, logprobs[t]);
    }
    logprobs
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    /// Mean per-token entropy in bits over deduplicated tokens; 0 when no
    /// tokens were seen.
    pub entropy: f64,
    pub tokens: usize,
    pub updates: usize,
}

/// Visiting order of the sentences for `epoch`, a seeded shuffle.
pub fn epoch_order(n: usize, shuffle_seed: u64, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let seed = shuffle_seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(epoch as u64);
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

/// One pass over `corpus` at rate `lr`, sentences in seeded-shuffled order
/// and unrolls in tree order.
pub fn train_epoch<F>(
    model: &mut Model,
    corpus: &[TrainSentence],
    config: &TrainConfig,
    epoch: usize,
    lr: f64,
    mut observer: F,
) -> EpochStats
where
    F: FnMut(UpdateEvent),
{
    let mut nats = 0.0;
    let mut tokens = 0usize;
    let mut updates = 0usize;
    let Model {
        params, classes, ..
    } = model;
    for si in epoch_order(corpus.len(), config.shuffle_seed, epoch) {
        let sentence = &corpus[si];
        let mut seen = vec![false; sentence.units.iter().flat_map(|u| &u.slots).max().map_or(0, |m| m + 1)];
        for unit in &sentence.units {
            train_sequence_with(
                params,
                classes,
                &unit.seq,
                &unit.discounts,
                lr,
                config.bptt_steps,
                |t, rate, logprob| {
                    let slot = unit.slots[t];
                    if !seen[slot] {
                        seen[slot] = true;
                        nats -= logprob;
                        tokens += 1;
                    }
                    updates += 1;
                    observer(UpdateEvent {
                        sentence: si,
                        slot,
                        target: unit.seq.targets[t],
                        rate,
                    });
                },
            );
        }
    }
    let entropy = if tokens == 0 {
        0.0
    } else {
        nats / tokens as f64 / std::f64::consts::LN_2
    };
    EpochStats {
        entropy,
        tokens,
        updates,
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Model with the best dev accuracy, or the final model without dev data.
    pub model: Model,
    pub history: Vec<EpochRecord>,
}

/// Runs epochs until `max_epochs` or until the rate drops below `min_lr`,
/// evaluating dev accuracy after each epoch to drive annealing and keep the
/// best checkpoint. `on_epoch` sees every history record as it is produced.
pub fn train<F>(
    mut model: Model,
    corpus: &[RawSentence],
    dev: &[CompletionProblem],
    config: &TrainConfig,
    mut on_epoch: F,
) -> TrainOutcome
where
    F: FnMut(&EpochRecord),
{
    let prepared = prepare_corpus(&model, corpus, config.mode);
    let mut state = TrainState::new(config.initial_lr, config.decay);
    let mut best: Option<(f64, Model)> = None;
    while state.epoch < config.max_epochs && state.current_lr >= config.min_lr {
        state.epoch += 1;
        let lr = state.current_lr;
        let stats = train_epoch(&mut model, &prepared, config, state.epoch, lr, |_| {});
        let dev_accuracy = (!dev.is_empty()).then(|| evaluate(&model, dev, config.mode, "dev").accuracy);
        let record = EpochRecord {
            epoch: state.epoch,
            lr,
            train_entropy: stats.entropy,
            dev_accuracy,
        };
        info!(
            "epoch {} lr {} entropy {:.4} bits over {} tokens",
            record.epoch, lr, stats.entropy, stats.tokens
        );
        on_epoch(&record);
        state.history.push(record);
        if let Some(acc) = dev_accuracy {
            if best.as_ref().is_none_or(|(b, _)| acc > *b) {
                best = Some((acc, model.clone()));
            }
            anneal(&mut state, acc);
        }
    }
    TrainOutcome {
        model: best.map_or(model, |(_, m)| m),
        history: state.history,
    }
}
