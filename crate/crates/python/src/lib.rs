//! Python bindings: CoNLL helpers, tree unrolls and a `Model` class covering
//! training, scoring, completion and model files.
//!
//! Sentences cross the boundary as lists of `(surface, head, label)` tuples
//! with 1-based heads and 0 marking the root.

#![allow(clippy::useless_conversion)]

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use deprnn_core::evaluation::split_dev_test;
use deprnn_core::rnn::{deserialize, serialize};
use deprnn_core::scoring::score_sentence;
use deprnn_core::{
    assign_classes, collect_labels, deptree, evaluate, load_completion_set, perplexity, Error, Mode, ModelShape,
    RawSentence, RawToken, TrainConfig, Vocabulary,
};

type PySentence = Vec<(String, usize, String)>;
type History = Vec<(usize, f64, f64, Option<f64>)>;
type Scored = (f64, usize, Vec<(String, f64)>);

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn io_err(e: std::io::Error) -> PyErr {
    PyIOError::new_err(e.to_string())
}

fn to_raw(sentence: &PySentence) -> RawSentence {
    sentence
        .iter()
        .enumerate()
        .map(|(i, (surface, head, label))| RawToken {
            position: i + 1,
            surface: surface.clone(),
            head: *head,
            label: label.clone(),
        })
        .collect()
}

fn from_raw(sentence: &RawSentence) -> PySentence {
    sentence
        .iter()
        .map(|t| (t.surface.clone(), t.head, t.label.clone()))
        .collect()
}

fn parse_mode(mode: &str) -> PyResult<Mode> {
    mode.parse().map_err(to_py_err)
}

fn tree_of(sentence: &PySentence) -> PyResult<(RawSentence, deptree::DependencyTree)> {
    let raw = to_raw(sentence);
    let vocab = Vocabulary::build(std::slice::from_ref(&raw), 1);
    let labels = collect_labels(std::slice::from_ref(&raw));
    let tree = deprnn_core::validate_tree(&raw, &vocab, &labels).map_err(|e| to_py_err(e.into()))?;
    Ok((raw, tree))
}

/// Parses CoNLL text into sentences of `(surface, head, label)` tuples.
#[pyfunction]
fn parse_conll(text: &str) -> PyResult<Vec<PySentence>> {
    let sentences = deprnn_core::parse_conll_str(text).map_err(to_py_err)?;
    Ok(sentences.iter().map(from_raw).collect())
}

#[pyfunction]
fn emit_conll(sentences: Vec<PySentence>) -> String {
    let raw: Vec<RawSentence> = sentences.iter().map(to_raw).collect();
    deprnn_core::emit_conll(&raw)
}

/// Root-to-leaf paths of the sentence's tree, as surface forms.
#[pyfunction]
fn unrolls(sentence: PySentence) -> PyResult<Vec<Vec<String>>> {
    let (_, tree) = tree_of(&sentence)?;
    Ok(tree
        .unrolls()
        .iter()
        .map(|u| u.path.iter().map(|&i| tree.surface(i).to_owned()).collect())
        .collect())
}

/// Surface forms from the root down to the parent of the token at 1-based
/// `position`.
#[pyfunction]
fn ancestors(sentence: PySentence, position: usize) -> PyResult<Vec<String>> {
    let (_, tree) = tree_of(&sentence)?;
    if position == 0 || position > tree.len() {
        return Err(PyValueError::new_err(format!(
            "position {position} outside 1..={}",
            tree.len()
        )));
    }
    Ok(tree
        .ancestors(position - 1)
        .iter()
        .map(|&i| tree.surface(i).to_owned())
        .collect())
}

/// Number of unrolls through each token, in surface order.
#[pyfunction]
fn node_counts(sentence: PySentence) -> PyResult<Vec<usize>> {
    let (_, tree) = tree_of(&sentence)?;
    Ok(tree.node_stats().n)
}

#[pyclass(module = "deprnn")]
struct Model {
    inner: deprnn_core::Model,
}

#[pymethods]
impl Model {
    /// Fresh model with vocabulary, classes and labels taken from `sentences`.
    #[new]
    #[pyo3(signature = (sentences, mode = "dep", hidden = 100, classes = 250, min_count = 5, order = 3, direct_size = 1_000_000, seed = 1))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        sentences: Vec<PySentence>,
        mode: &str,
        hidden: usize,
        classes: usize,
        min_count: u64,
        order: usize,
        direct_size: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let mode = parse_mode(mode)?;
        let raw: Vec<RawSentence> = sentences.iter().map(to_raw).collect();
        let vocab = Vocabulary::build(&raw, min_count);
        let classes = assign_classes(&vocab, classes.clamp(1, vocab.len())).map_err(to_py_err)?;
        let shape = ModelShape {
            hidden,
            order,
            direct_size,
            seed,
        };
        let inner = deprnn_core::Model::new(mode, vocab, classes, collect_labels(&raw), &shape).map_err(to_py_err)?;
        Ok(Model { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let file = File::open(path).map_err(io_err)?;
        let inner = deserialize(BufReader::new(file)).map_err(to_py_err)?;
        Ok(Model { inner })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
        serialize(&self.inner, &mut out).map_err(to_py_err)?;
        out.flush().map_err(io_err)
    }

    /// Trains in place and returns `(epoch, lr, train_entropy, dev_accuracy)`
    /// per epoch. `dev` is a completion-problem file.
    #[pyo3(signature = (sentences, dev = None, lr = 0.1, decay = 0.66, bptt = 5, max_epochs = 20, min_lr = 1e-4, shuffle_seed = 1))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        &mut self,
        py: Python<'_>,
        sentences: Vec<PySentence>,
        dev: Option<&str>,
        lr: f64,
        decay: f64,
        bptt: usize,
        max_epochs: usize,
        min_lr: f64,
        shuffle_seed: u64,
    ) -> PyResult<History> {
        let raw: Vec<RawSentence> = sentences.iter().map(to_raw).collect();
        let dev = match dev {
            Some(path) => load_completion_set(BufReader::new(File::open(path).map_err(io_err)?)).map_err(to_py_err)?,
            None => Vec::new(),
        };
        let config = TrainConfig {
            initial_lr: lr,
            decay,
            bptt_steps: bptt,
            max_epochs,
            min_lr,
            mode: self.inner.mode,
            shuffle_seed,
        };
        let start = self.inner.clone();
        let outcome = py.allow_threads(|| deprnn_core::train(start, &raw, &dev, &config, |_| {}));
        self.inner = outcome.model;
        Ok(outcome
            .history
            .iter()
            .map(|r| (r.epoch, r.lr, r.train_entropy, r.dev_accuracy))
            .collect())
    }

    /// `(total_logprob, token_count, [(surface, logprob), ...])`.
    #[pyo3(signature = (sentence, mode = None))]
    fn score(&self, sentence: PySentence, mode: Option<&str>) -> PyResult<Scored> {
        let mode = mode.map(parse_mode).transpose()?.unwrap_or(self.inner.mode);
        let raw = to_raw(&sentence);
        let s = score_sentence(&self.inner, &raw, mode).map_err(to_py_err)?;
        let items = s
            .per_token
            .iter()
            .map(|(&slot, &lp)| {
                let surface = raw.get(slot).map_or(deprnn_core::corpus::END_TOKEN, |t| t.surface.as_str());
                (surface.to_owned(), lp)
            })
            .collect();
        Ok((s.total, s.token_count, items))
    }

    #[pyo3(signature = (sentences, mode = None))]
    fn perplexity(&self, sentences: Vec<PySentence>, mode: Option<&str>) -> PyResult<f64> {
        let mode = mode.map(parse_mode).transpose()?.unwrap_or(self.inner.mode);
        let raw: Vec<RawSentence> = sentences.iter().map(to_raw).collect();
        perplexity(&self.inner, &raw, mode).map_err(to_py_err)
    }

    /// Accuracies on a completion-problem file: a dict with `dev`, `test`,
    /// `all` and the chosen candidate per problem under `choices`.
    #[pyo3(signature = (path, mode = None))]
    fn complete<'py>(&self, py: Python<'py>, path: &str, mode: Option<&str>) -> PyResult<Bound<'py, PyDict>> {
        let mode = mode.map(parse_mode).transpose()?.unwrap_or(self.inner.mode);
        let problems = load_completion_set(BufReader::new(File::open(path).map_err(io_err)?)).map_err(to_py_err)?;
        let report = evaluate(&self.inner, &problems, mode, "all");
        let (dev, _) = split_dev_test(&problems);
        let out = PyDict::new_bound(py);
        out.set_item("dev", report.subset("dev", 0..dev.len()).accuracy)?;
        out.set_item("test", report.subset("test", dev.len()..problems.len()).accuracy)?;
        out.set_item("all", report.accuracy)?;
        out.set_item(
            "choices",
            report.per_problem.iter().map(|p| p.chosen).collect::<Vec<_>>(),
        )?;
        Ok(out)
    }

    /// `(surface, count)` for every word id, sentinels last.
    fn vocabulary(&self) -> Vec<(String, u64)> {
        self.inner
            .vocab
            .entries()
            .iter()
            .map(|(s, c)| (s.clone(), *c))
            .collect()
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.inner.mode.as_str()
    }

    #[getter]
    fn hidden(&self) -> usize {
        self.inner.hyper().hidden
    }

    #[getter]
    fn vocab_size(&self) -> usize {
        self.inner.hyper().vocab_size
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.inner.hyper().classes
    }

    #[getter]
    fn num_labels(&self) -> usize {
        self.inner.hyper().labels
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.hyper().order
    }

    #[getter]
    fn direct_size(&self) -> usize {
        self.inner.hyper().direct_size
    }

    fn __repr__(&self) -> String {
        let h = self.inner.hyper();
        format!(
            "Model(mode={}, hidden={}, vocab_size={}, classes={}, labels={}, order={}, direct_size={})",
            self.inner.mode, h.hidden, h.vocab_size, h.classes, h.labels, h.order, h.direct_size
        )
    }
}

#[pymodule]
fn deprnn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(parse_conll, m)?)?;
    m.add_function(wrap_pyfunction!(emit_conll, m)?)?;
    m.add_function(wrap_pyfunction!(unrolls, m)?)?;
    m.add_function(wrap_pyfunction!(ancestors, m)?)?;
    m.add_function(wrap_pyfunction!(node_counts, m)?)?;
    m.add_class::<Model>()?;
    Ok(())
}
