//! Turning sentences and unrolls into input/target sequences.
//!
//! Every sequence starts from the `<root>` sentinel input. In dependency
//! modes the label fed alongside each input is the label of the node being
//! predicted, so predicting node `i` consumes exactly its label sequence
//! `G(w_i)`.

use crate::corpus::Vocabulary;
use crate::deptree::{DependencyTree, Unroll};
use crate::rnn::Sequence;

/// `<root> w_1 .. w_L` predicting `w_1 .. w_L </s>`.
pub fn sequential(words: &[usize], vocab: &Vocabulary) -> Sequence {
    let mut inputs = Vec::with_capacity(words.len() + 1);
    inputs.push(vocab.root_id());
    inputs.extend_from_slice(words);
    let mut targets = words.to_vec();
    targets.push(vocab.end_id());
    Sequence {
        inputs,
        labels: None,
        targets,
    }
}

/// `<root> w(p_0) .. w(p_{k-1})` predicting `w(p_0) .. w(p_k)` along one
/// unroll `p`.
pub fn unroll_sequence(
    tree: &DependencyTree,
    unroll: &Unroll,
    vocab: &Vocabulary,
    with_labels: bool,
) -> Sequence {
    let path = &unroll.path;
    let mut inputs = Vec::with_capacity(path.len());
    inputs.push(vocab.root_id());
    inputs.extend(path[..path.len() - 1].iter().map(|&n| tree.word(n)));
    let targets = path.iter().map(|&n| tree.word(n)).collect();
    let labels = with_labels.then(|| path.iter().map(|&n| tree.label(n)).collect());
    Sequence {
        inputs,
        labels,
        targets,
    }
}

/// Sequence predicting `node` from its ancestors only.
pub fn ancestor_sequence(
    tree: &DependencyTree,
    node: usize,
    vocab: &Vocabulary,
    with_labels: bool,
) -> Sequence {
    let mut path = tree.ancestors(node);
    path.push(node);
    unroll_sequence(tree, &Unroll { path }, vocab, with_labels)
}
