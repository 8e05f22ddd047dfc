//! Recurrent network numerics: sigmoid hidden dynamics, class-factorized
//! softmax output with optional label features and hashed direct
//! connections, and truncated back-propagation through time.

mod hash;
mod io;

use std::collections::BTreeMap;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::ClassAssignment;
use crate::error::{Error, Result};

pub use hash::{
    class_feature, hash_context, word_feature, word_feature_base, CLASS_PRIME, MAX_ORDER,
    ORDER_PRIMES,
};
pub use io::{deserialize, deserialize_expecting, serialize, MAGIC};

/// Pre-activations are clamped to this range before the sigmoid.
pub const PREACTIVATION_CLIP: f64 = 50.0;
/// Each gradient component is clamped to this range.
pub const GRADIENT_CLIP: f64 = 15.0;
/// Half-width of the uniform initialization interval.
pub const INIT_RANGE: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HyperParams {
    /// Hidden layer size H.
    pub hidden: usize,
    /// Vocabulary size N, sentinels included.
    pub vocab_size: usize,
    /// Output classes C.
    pub classes: usize,
    /// Label feature count M; 0 disables label features.
    pub labels: usize,
    /// Maxent order n; order 1 is a bias-only direct connection.
    pub order: usize,
    /// Length D of the direct-connection array.
    pub direct_size: usize,
    pub seed: u64,
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::HyperParams(m));
        if self.hidden == 0 {
            return bad("hidden size must be at least 1".into());
        }
        if self.classes == 0 || self.classes > self.vocab_size {
            return Err(Error::ClassCount {
                requested: self.classes,
                vocab_size: self.vocab_size,
            });
        }
        if self.order == 0 || self.order > MAX_ORDER {
            return bad(format!("order must be in 1..={MAX_ORDER}, got {}", self.order));
        }
        if self.direct_size == 0 {
            return bad("direct-connection size must be at least 1".into());
        }
        Ok(())
    }

    pub fn uses_labels(&self) -> bool {
        self.labels > 0
    }
}

/// The eight parameter blocks, in serialization and initialization order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamFamily {
    U,
    W,
    Vc,
    Vw,
    F,
    Gc,
    Gw,
    D,
}

impl ParamFamily {
    pub const ALL: [ParamFamily; 8] = [
        ParamFamily::U,
        ParamFamily::W,
        ParamFamily::Vc,
        ParamFamily::Vw,
        ParamFamily::F,
        ParamFamily::Gc,
        ParamFamily::Gw,
        ParamFamily::D,
    ];

    /// `(rows, cols)` of the block, row-major.
    pub fn shape(self, h: &HyperParams) -> (usize, usize) {
        match self {
            ParamFamily::U => (h.vocab_size, h.hidden),
            ParamFamily::W => (h.hidden, h.hidden),
            ParamFamily::Vc => (h.classes, h.hidden),
            ParamFamily::Vw => (h.vocab_size, h.hidden),
            ParamFamily::F => (h.labels, h.hidden),
            ParamFamily::Gc => (h.classes, h.labels),
            ParamFamily::Gw => (h.vocab_size, h.labels),
            ParamFamily::D => (h.direct_size, 1),
        }
    }

    pub fn len(self, h: &HyperParams) -> usize {
        let (r, c) = self.shape(h);
        r * c
    }

    pub fn name(self) -> &'static str {
        match self {
            ParamFamily::U => "U",
            ParamFamily::W => "W",
            ParamFamily::Vc => "Vc",
            ParamFamily::Vw => "Vw",
            ParamFamily::F => "F",
            ParamFamily::Gc => "Gc",
            ParamFamily::Gw => "Gw",
            ParamFamily::D => "d",
        }
    }
}

/// All trainable weights. Matrices are row-major `Vec<f64>`:
/// `u` N×H, `w` H×H, `vc` C×H, `vw` N×H, `f` M×H, `gc` C×M, `gw` N×M and the
/// direct-connection array `d` of length D.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameters {
    pub hyper: HyperParams,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub vc: Vec<f64>,
    pub vw: Vec<f64>,
    pub f: Vec<f64>,
    pub gc: Vec<f64>,
    pub gw: Vec<f64>,
    pub d: Vec<f64>,
}

fn zeroed(len: usize) -> Result<Vec<f64>> {
    let mut v = Vec::new();
    v.try_reserve_exact(len).map_err(|_| Error::Resource {
        bytes: len as u128 * 8,
    })?;
    v.resize(len, 0.0);
    Ok(v)
}

impl Parameters {
    pub fn zeros(hyper: &HyperParams) -> Result<Self> {
        hyper.validate()?;
        let z = |f: ParamFamily| zeroed(f.len(hyper));
        Ok(Parameters {
            hyper: hyper.clone(),
            u: z(ParamFamily::U)?,
            w: z(ParamFamily::W)?,
            vc: z(ParamFamily::Vc)?,
            vw: z(ParamFamily::Vw)?,
            f: z(ParamFamily::F)?,
            gc: z(ParamFamily::Gc)?,
            gw: z(ParamFamily::Gw)?,
            d: z(ParamFamily::D)?,
        })
    }

    /// Uniform `[-0.1, 0.1]` draws from a ChaCha8 stream seeded with
    /// `hyper.seed`, filling U, W, Vc, Vw, F, Gc, Gw in that order (each
    /// row-major). `d` starts at zero.
    pub fn init(hyper: &HyperParams) -> Result<Self> {
        let mut p = Self::zeros(hyper)?;
        let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
        let dist = Uniform::new_inclusive(-INIT_RANGE, INIT_RANGE);
        for fam in &ParamFamily::ALL[..7] {
            for x in p.family_mut(*fam) {
                *x = dist.sample(&mut rng);
            }
        }
        Ok(p)
    }

    pub fn family(&self, fam: ParamFamily) -> &[f64] {
        match fam {
            ParamFamily::U => &self.u,
            ParamFamily::W => &self.w,
            ParamFamily::Vc => &self.vc,
            ParamFamily::Vw => &self.vw,
            ParamFamily::F => &self.f,
            ParamFamily::Gc => &self.gc,
            ParamFamily::Gw => &self.gw,
            ParamFamily::D => &self.d,
        }
    }

    pub fn family_mut(&mut self, fam: ParamFamily) -> &mut [f64] {
        match fam {
            ParamFamily::U => &mut self.u,
            ParamFamily::W => &mut self.w,
            ParamFamily::Vc => &mut self.vc,
            ParamFamily::Vw => &mut self.vw,
            ParamFamily::F => &mut self.f,
            ParamFamily::Gc => &mut self.gc,
            ParamFamily::Gw => &mut self.gw,
            ParamFamily::D => &mut self.d,
        }
    }

    pub fn is_finite(&self) -> bool {
        ParamFamily::ALL
            .iter()
            .all(|f| self.family(*f).iter().all(|x| x.is_finite()))
    }

    fn label_active(&self, label: Option<usize>) -> Option<usize> {
        if self.hyper.uses_labels() {
            label
        } else {
            None
        }
    }

    /// `s = sigmoid(W s_prev + U[word] + F[label])`, pre-activation clamped to
    /// ±50. Labels are ignored when M = 0.
    pub fn hidden_step(&self, prev: &HiddenState, word: usize, label: Option<usize>) -> HiddenState {
        let h = self.hyper.hidden;
        debug_assert!(word < self.hyper.vocab_size);
        let mut a: Vec<f64> = self.u[word * h..(word + 1) * h].to_vec();
        if let Some(l) = self.label_active(label) {
            for (ai, fi) in a.iter_mut().zip(&self.f[l * h..(l + 1) * h]) {
                *ai += fi;
            }
        }
        for (i, ai) in a.iter_mut().enumerate() {
            *ai += dot(&self.w[i * h..(i + 1) * h], &prev.0);
        }
        HiddenState(
            a.into_iter()
                .map(|x| sigmoid(x.clamp(-PREACTIVATION_CLIP, PREACTIVATION_CLIP)))
                .collect(),
        )
    }

    fn context_hashes(&self, window: &ContextWindow) -> Vec<usize> {
        let ids = window.ids();
        (1..=self.hyper.order.min(ids.len() + 1))
            .map(|o| hash_context(ids, o, self.hyper.direct_size))
            .collect()
    }

    /// Class distribution plus the within-class distribution over the members
    /// of `target_class`.
    pub fn output_distribution(
        &self,
        classes: &ClassAssignment,
        s: &HiddenState,
        window: &ContextWindow,
        label: Option<usize>,
        target_class: usize,
    ) -> OutputDistribution {
        let hashes = self.context_hashes(window);
        self.output_with_hashes(classes, s, &hashes, label, target_class)
    }

    fn output_with_hashes(
        &self,
        classes: &ClassAssignment,
        s: &HiddenState,
        hashes: &[usize],
        label: Option<usize>,
        target_class: usize,
    ) -> OutputDistribution {
        let hp = &self.hyper;
        let (h, m, dsz) = (hp.hidden, hp.labels, hp.direct_size);
        let label = self.label_active(label);

        let mut class_logits: Vec<f64> = (0..hp.classes)
            .map(|c| {
                let mut z = dot(&self.vc[c * h..(c + 1) * h], &s.0);
                if let Some(l) = label {
                    z += self.gc[c * m + l];
                }
                for &hs in hashes {
                    z += self.d[class_feature(hs, c, dsz)];
                }
                z
            })
            .collect();
        softmax_in_place(&mut class_logits);

        let members = classes.members(target_class);
        let bases: Vec<usize> = hashes
            .iter()
            .map(|&hs| word_feature_base(hs, target_class, dsz))
            .collect();
        let mut word_logits: Vec<f64> = members
            .iter()
            .enumerate()
            .map(|(j, &w)| {
                let mut z = dot(&self.vw[w * h..(w + 1) * h], &s.0);
                if let Some(l) = label {
                    z += self.gw[w * m + l];
                }
                for &b in &bases {
                    z += self.d[word_feature(b, j, dsz)];
                }
                z
            })
            .collect();
        softmax_in_place(&mut word_logits);

        OutputDistribution {
            class: target_class,
            class_probs: class_logits,
            word_probs: word_logits,
        }
    }

    /// `log P(class(target)) + log P(target | class(target))`.
    pub fn word_logprob(
        &self,
        classes: &ClassAssignment,
        s: &HiddenState,
        window: &ContextWindow,
        label: Option<usize>,
        target: usize,
    ) -> f64 {
        let class = classes.class_of(target);
        self.output_distribution(classes, s, window, label, class)
            .logprob(classes.within_class_index(target))
    }

    /// Runs one step: pushes `input` into `window`, advances the hidden state
    /// and scores `target`.
    pub fn step(
        &self,
        classes: &ClassAssignment,
        prev: &HiddenState,
        window: &mut ContextWindow,
        input: usize,
        label: Option<usize>,
        target: usize,
    ) -> ForwardStep {
        window.push(input);
        let state = self.hidden_step(prev, input, label);
        let hashes = self.context_hashes(window);
        let class = classes.class_of(target);
        let output = self.output_with_hashes(classes, &state, &hashes, label, class);
        let logprob = output.logprob(classes.within_class_index(target));
        ForwardStep {
            state,
            hashes,
            output,
            logprob,
        }
    }

    /// Forward pass over a whole sequence from a zeroed hidden state.
    pub fn forward(&self, classes: &ClassAssignment, seq: &Sequence) -> ForwardPass {
        let mut state = HiddenState::zeros(self.hyper.hidden);
        let mut window = ContextWindow::new(self.hyper.order);
        let mut steps = Vec::with_capacity(seq.len());
        for t in 0..seq.len() {
            let step = self.step(
                classes,
                &state,
                &mut window,
                seq.inputs[t],
                seq.label(t),
                seq.targets[t],
            );
            state = step.state.clone();
            steps.push(step);
        }
        ForwardPass { steps }
    }

    /// Gradient of the summed cross-entropy of `seq`, each position's
    /// recurrent credit truncated to `bptt_steps` hidden steps.
    pub fn backward(
        &self,
        classes: &ClassAssignment,
        seq: &Sequence,
        pass: &ForwardPass,
        bptt_steps: usize,
    ) -> Gradients {
        let mut grads = Gradients::default();
        for t in 0..seq.len() {
            self.accumulate_position(classes, seq, &pass.steps, t, bptt_steps, &mut grads);
        }
        grads.clip(GRADIENT_CLIP);
        grads
    }

    /// Adds the gradient of position `t`'s loss. `steps[..=t]` must hold the
    /// forward results for positions `0..=t`.
    pub fn accumulate_position(
        &self,
        classes: &ClassAssignment,
        seq: &Sequence,
        steps: &[ForwardStep],
        t: usize,
        bptt_steps: usize,
        grads: &mut Gradients,
    ) {
        let hp = &self.hyper;
        let (h, m, dsz) = (hp.hidden, hp.labels, hp.direct_size);
        let step = &steps[t];
        let s = &step.state.0;
        let label = self.label_active(seq.label(t));
        let target = seq.targets[t];
        let class = classes.class_of(target);
        let within = classes.within_class_index(target);

        let mut ds = vec![0.0; h];
        for (c, &p) in step.output.class_probs.iter().enumerate() {
            let e = p - if c == class { 1.0 } else { 0.0 };
            axpy(e, s, grads.vc_row(c, h));
            axpy(e, &self.vc[c * h..(c + 1) * h], &mut ds);
            if let Some(l) = label {
                *grads.gc.entry(c * m + l).or_insert(0.0) += e;
            }
            for &hs in &step.hashes {
                *grads.d.entry(class_feature(hs, c, dsz)).or_insert(0.0) += e;
            }
        }
        let members = classes.members(class);
        for (j, (&w, &p)) in members.iter().zip(&step.output.word_probs).enumerate() {
            let e = p - if j == within { 1.0 } else { 0.0 };
            axpy(e, s, grads.vw.entry(w).or_insert_with(|| vec![0.0; h]));
            axpy(e, &self.vw[w * h..(w + 1) * h], &mut ds);
            if let Some(l) = label {
                *grads.gw.entry(w * m + l).or_insert(0.0) += e;
            }
            for &hs in &step.hashes {
                let idx = word_feature(word_feature_base(hs, class, dsz), j, dsz);
                *grads.d.entry(idx).or_insert(0.0) += e;
            }
        }

        // Back through the hidden chain.
        let lowest = (t + 1).saturating_sub(bptt_steps.max(1));
        let mut g = ds;
        let mut tau = t;
        loop {
            let st = &steps[tau].state.0;
            let delta: Vec<f64> = g
                .iter()
                .zip(st)
                .map(|(gi, si)| gi * si * (1.0 - si))
                .collect();
            axpy(
                1.0,
                &delta,
                grads.u.entry(seq.inputs[tau]).or_insert_with(|| vec![0.0; h]),
            );
            if let Some(l) = self.label_active(seq.label(tau)) {
                axpy(1.0, &delta, grads.f.entry(l).or_insert_with(|| vec![0.0; h]));
            }
            if tau == 0 {
                break;
            }
            let prev = &steps[tau - 1].state.0;
            let gw = grads.w_mut(h);
            for (i, di) in delta.iter().enumerate() {
                if *di != 0.0 {
                    axpy(*di, prev, &mut gw[i * h..(i + 1) * h]);
                }
            }
            if tau == lowest {
                break;
            }
            let mut next = vec![0.0; h];
            for (i, di) in delta.iter().enumerate() {
                axpy(*di, &self.w[i * h..(i + 1) * h], &mut next);
            }
            g = next;
            tau -= 1;
        }
    }

    /// `p -= rate * g` for every component present in `grads`.
    pub fn apply(&mut self, grads: &Gradients, rate: f64) {
        let h = self.hyper.hidden;
        let m = self.hyper.labels;
        for (&r, g) in &grads.u {
            axpy(-rate, g, &mut self.u[r * h..(r + 1) * h]);
        }
        if let Some(gw) = &grads.w {
            axpy(-rate, gw, &mut self.w);
        }
        if let Some(gvc) = &grads.vc {
            axpy(-rate, gvc, &mut self.vc);
        }
        for (&r, g) in &grads.vw {
            axpy(-rate, g, &mut self.vw[r * h..(r + 1) * h]);
        }
        for (&r, g) in &grads.f {
            axpy(-rate, g, &mut self.f[r * h..(r + 1) * h]);
        }
        for (&i, g) in &grads.gc {
            self.gc[i] -= rate * g;
        }
        for (&i, g) in &grads.gw {
            self.gw[i] -= rate * g;
        }
        debug_assert!(grads.gw.keys().all(|&i| i < self.hyper.vocab_size * m));
        for (&i, g) in &grads.d {
            self.d[i] -= rate * g;
        }
    }
}

/// Hidden activations `s(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenState(pub Vec<f64>);

impl HiddenState {
    /// The reset state used at the start of every sentence or unroll.
    pub fn zeros(hidden: usize) -> Self {
        HiddenState(vec![0.0; hidden])
    }
}

/// The up-to-(n−1) most recent inputs, most recent last.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContextWindow {
    ids: Vec<usize>,
    capacity: usize,
}

impl ContextWindow {
    pub fn new(order: usize) -> Self {
        let capacity = order.saturating_sub(1);
        ContextWindow {
            ids: Vec::with_capacity(capacity + 1),
            capacity,
        }
    }

    pub fn from_ids(order: usize, ids: &[usize]) -> Self {
        let mut w = Self::new(order);
        for &id in ids {
            w.push(id);
        }
        w
    }

    pub fn push(&mut self, id: usize) {
        if self.capacity == 0 {
            return;
        }
        if self.ids.len() == self.capacity {
            self.ids.remove(0);
        }
        self.ids.push(id);
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Output of the class-factorized softmax for one target class.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputDistribution {
    pub class: usize,
    pub class_probs: Vec<f64>,
    pub word_probs: Vec<f64>,
}

impl OutputDistribution {
    pub fn logprob(&self, within: usize) -> f64 {
        self.class_probs[self.class].ln() + self.word_probs[within].ln()
    }
}

/// A training or scoring sequence: `inputs[t]` (with `labels[t]`) predicts
/// `targets[t]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sequence {
    pub inputs: Vec<usize>,
    pub labels: Option<Vec<usize>>,
    pub targets: Vec<usize>,
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn label(&self, t: usize) -> Option<usize> {
        self.labels.as_ref().map(|l| l[t])
    }
}

#[derive(Clone, Debug)]
pub struct ForwardStep {
    pub state: HiddenState,
    /// Context hashes of the active orders at this step.
    pub hashes: Vec<usize>,
    pub output: OutputDistribution,
    pub logprob: f64,
}

#[derive(Clone, Debug)]
pub struct ForwardPass {
    pub steps: Vec<ForwardStep>,
}

impl ForwardPass {
    pub fn loss(&self) -> f64 {
        -self.steps.iter().map(|s| s.logprob).sum::<f64>()
    }
}

/// Sparse gradient accumulator. Row-blocks are keyed by row id, `gc`, `gw`
/// and `d` by flat index; `w` and `vc` are dense once touched.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients {
    pub u: BTreeMap<usize, Vec<f64>>,
    pub w: Option<Vec<f64>>,
    pub vc: Option<Vec<f64>>,
    pub vw: BTreeMap<usize, Vec<f64>>,
    pub f: BTreeMap<usize, Vec<f64>>,
    pub gc: BTreeMap<usize, f64>,
    pub gw: BTreeMap<usize, f64>,
    pub d: BTreeMap<usize, f64>,
}

impl Gradients {
    fn w_mut(&mut self, h: usize) -> &mut Vec<f64> {
        self.w.get_or_insert_with(|| vec![0.0; h * h])
    }

    fn vc_row(&mut self, c: usize, h: usize) -> &mut [f64] {
        let vc = self.vc.get_or_insert_with(Vec::new);
        if vc.len() < (c + 1) * h {
            vc.resize((c + 1) * h, 0.0);
        }
        &mut vc[c * h..(c + 1) * h]
    }

    pub fn clip(&mut self, limit: f64) {
        let c = |x: &mut f64| *x = x.clamp(-limit, limit);
        self.u.values_mut().flatten().for_each(c);
        self.w.iter_mut().flatten().for_each(c);
        self.vc.iter_mut().flatten().for_each(c);
        self.vw.values_mut().flatten().for_each(c);
        self.f.values_mut().flatten().for_each(c);
        self.gc.values_mut().for_each(c);
        self.gw.values_mut().for_each(c);
        self.d.values_mut().for_each(c);
    }

    /// Dense copy of one family's gradient, zeros where untouched.
    pub fn dense(&self, fam: ParamFamily, hyper: &HyperParams) -> Vec<f64> {
        let (rows, cols) = fam.shape(hyper);
        let mut out = vec![0.0; rows * cols];
        let mut rows_into = |map: &BTreeMap<usize, Vec<f64>>| {
            for (&r, g) in map {
                out[r * cols..(r + 1) * cols].copy_from_slice(g);
            }
        };
        match fam {
            ParamFamily::U => rows_into(&self.u),
            ParamFamily::Vw => rows_into(&self.vw),
            ParamFamily::F => rows_into(&self.f),
            ParamFamily::W | ParamFamily::Vc => {
                let src = if fam == ParamFamily::W { &self.w } else { &self.vc };
                if let Some(v) = src {
                    out[..v.len()].copy_from_slice(v);
                }
            }
            ParamFamily::Gc | ParamFamily::Gw | ParamFamily::D => {
                let map = match fam {
                    ParamFamily::Gc => &self.gc,
                    ParamFamily::Gw => &self.gw,
                    _ => &self.d,
                };
                for (&i, &g) in map {
                    out[i] = g;
                }
            }
        }
        out
    }
}

/// Largest `f64` below 1.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Logistic sigmoid, capped below 1 so saturated units stay inside (0, 1).
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    (1.0 / (1.0 + (-x).exp())).min(BELOW_ONE)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in z.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in z.iter_mut() {
        *x /= sum;
    }
}
