use std::fmt;
use std::str::FromStr;

use crate::corpus::{ClassAssignment, LabelInventory, Vocabulary};
use crate::error::{Error, Result};
use crate::rnn::{HyperParams, Parameters};

/// How sentences are presented to the network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Left-to-right word order with an end-of-sentence prediction.
    Sequential,
    /// Every root-to-leaf unroll of the dependency tree.
    Dependency,
    /// Unrolls plus one-hot dependency-label features.
    LabelledDependency,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Sequential => "seq",
            Mode::Dependency => "dep",
            Mode::LabelledDependency => "ldep",
        }
    }

    pub fn is_dependency(self) -> bool {
        !matches!(self, Mode::Sequential)
    }

    pub fn uses_labels(self) -> bool {
        matches!(self, Mode::LabelledDependency)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "seq" | "sequential" => Ok(Mode::Sequential),
            "dep" | "dependency" => Ok(Mode::Dependency),
            "ldep" | "labelled-dependency" | "labeled-dependency" => Ok(Mode::LabelledDependency),
            _ => Err(Error::HyperParams(format!("unknown mode `{s}`"))),
        }
    }
}

/// Network parameters together with the tables that give them meaning.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub mode: Mode,
    pub params: Parameters,
    pub vocab: Vocabulary,
    pub classes: ClassAssignment,
    pub labels: LabelInventory,
}

/// Size settings not implied by the vocabulary and label tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelShape {
    pub hidden: usize,
    pub order: usize,
    pub direct_size: usize,
    pub seed: u64,
}

impl Model {
    /// Freshly initialized model. Label features are sized to the label
    /// inventory in labelled mode and disabled otherwise.
    pub fn new(
        mode: Mode,
        vocab: Vocabulary,
        classes: ClassAssignment,
        labels: LabelInventory,
        shape: &ModelShape,
    ) -> Result<Self> {
        let hyper = Self::hyper_for(mode, &vocab, &classes, &labels, shape);
        let params = Parameters::init(&hyper)?;
        Ok(Model {
            mode,
            params,
            vocab,
            classes,
            labels,
        })
    }

    pub fn hyper_for(
        mode: Mode,
        vocab: &Vocabulary,
        classes: &ClassAssignment,
        labels: &LabelInventory,
        shape: &ModelShape,
    ) -> HyperParams {
        HyperParams {
            hidden: shape.hidden,
            vocab_size: vocab.len(),
            classes: classes.num_classes(),
            labels: if mode.uses_labels() { labels.len() } else { 0 },
            order: shape.order,
            direct_size: shape.direct_size,
            seed: shape.seed,
        }
    }

    pub fn hyper(&self) -> &HyperParams {
        &self.params.hyper
    }

    /// Checks that the parameter shapes agree with the tables and that every
    /// parameter is finite.
    pub fn check(&self) -> Result<()> {
        let h = self.hyper();
        h.validate()?;
        if h.vocab_size != self.vocab.len() || self.classes.num_words() != self.vocab.len() {
            return Err(Error::ShapeMismatch(format!(
                "N={} but the vocabulary has {} words",
                h.vocab_size,
                self.vocab.len()
            )));
        }
        if h.classes != self.classes.num_classes() {
            return Err(Error::ShapeMismatch(format!(
                "C={} but the class table has {} classes",
                h.classes,
                self.classes.num_classes()
            )));
        }
        let want_m = if self.mode.uses_labels() { self.labels.len() } else { 0 };
        if h.labels != want_m {
            return Err(Error::ShapeMismatch(format!(
                "M={} but mode {} with {} labels needs M={want_m}",
                h.labels,
                self.mode,
                self.labels.len()
            )));
        }
        if !self.params.is_finite() {
            return Err(Error::Format("parameters contain NaN or infinite values".into()));
        }
        Ok(())
    }
}
