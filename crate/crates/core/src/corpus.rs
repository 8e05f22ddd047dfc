//! CoNLL ingestion, vocabulary construction, frequency classes and the
//! dependency-label inventory.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::textio::{header_usize, LineReader};

/// Surface form of the sentinel fed as the first input of every unroll
/// (and of every sequential sentence).
pub const ROOT_TOKEN: &str = "<root>";
/// Surface form of the end-of-sentence sentinel predicted in sequential mode.
pub const END_TOKEN: &str = "</s>";
/// Surface form every out-of-vocabulary word maps to.
pub const UNK_TOKEN: &str = "<unk>";
/// Reserved dependency label carried by the root of every tree.
pub const ROOT_LABEL: &str = "root";

/// One CoNLL token line, keeping only the columns the model consumes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawToken {
    /// 1-based position in the sentence.
    pub position: usize,
    pub surface: String,
    /// Head position; 0 attaches the token to the artificial root.
    pub head: usize,
    pub label: String,
}

pub type RawSentence = Vec<RawToken>;

/// Reads tab-separated CoNLL blocks.
///
/// Columns 1 (ID), 2 (FORM), 7 (HEAD) and 8 (DEPREL) are read; lines starting
/// with `#` are comments and multiword/empty-node lines (IDs containing `-`
/// or `.`) are skipped.
pub fn parse_conll<R: BufRead>(reader: R) -> Result<Vec<RawSentence>> {
    let mut lines = LineReader::new(reader);
    let mut sentences = Vec::new();
    let mut current: RawSentence = Vec::new();
    // Line number of each token in `current`, for head range errors.
    let mut token_lines: Vec<usize> = Vec::new();

    loop {
        let lineno = lines.line_number() + 1;
        let Some(line) = lines.next_line()? else {
            break;
        };
        if line.trim().is_empty() {
            if !current.is_empty() {
                check_heads(&current, &token_lines)?;
                sentences.push(std::mem::take(&mut current));
                token_lines.clear();
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 8 {
            return Err(Error::parse(
                lineno,
                format!("expected at least 8 tab-separated columns, found {}", fields.len()),
            ));
        }
        if fields[0].contains('-') || fields[0].contains('.') {
            continue;
        }
        let position: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("ID `{}` is not an integer", fields[0])))?;
        if position != current.len() + 1 {
            return Err(Error::parse(
                lineno,
                format!("ID {position} out of sequence, expected {}", current.len() + 1),
            ));
        }
        let head: usize = fields[6]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("HEAD `{}` is not an integer", fields[6])))?;
        let surface = fields[1];
        if surface.is_empty() {
            return Err(Error::parse(lineno, "empty FORM column"));
        }
        current.push(RawToken {
            position,
            surface: surface.to_owned(),
            head,
            label: fields[7].to_owned(),
        });
        token_lines.push(lineno);
    }
    if !current.is_empty() {
        check_heads(&current, &token_lines)?;
        sentences.push(current);
    }
    Ok(sentences)
}

pub fn parse_conll_str(text: &str) -> Result<Vec<RawSentence>> {
    parse_conll(text.as_bytes())
}

fn check_heads(sentence: &[RawToken], token_lines: &[usize]) -> Result<()> {
    for (tok, &line) in sentence.iter().zip(token_lines) {
        if tok.head > sentence.len() {
            return Err(Error::parse(
                line,
                format!(
                    "HEAD {} out of range for a {}-token sentence",
                    tok.head,
                    sentence.len()
                ),
            ));
        }
    }
    Ok(())
}

/// Writes sentences as 10-column CoNLL with `_` in the unused columns.
pub fn emit_conll(sentences: &[RawSentence]) -> String {
    let mut out = String::new();
    for sentence in sentences {
        for tok in sentence {
            let _ = writeln!(
                out,
                "{}\t{}\t_\t_\t_\t_\t{}\t{}\t_\t_",
                tok.position, tok.surface, tok.head, tok.label
            );
        }
        out.push('\n');
    }
    out
}

/// Word inventory with dense ids.
///
/// Retained words come first, sorted by descending count with ties broken by
/// first occurrence; the sentinels `<root>`, `</s>` and `<unk>` take the last
/// three ids with a count of zero.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    entries: Vec<(String, u64)>,
    index: HashMap<String, usize>,
    min_count: u64,
}

impl Vocabulary {
    pub fn build(sentences: &[RawSentence], min_count: u64) -> Self {
        let min_count = min_count.max(1);
        let mut counts: Vec<(String, u64)> = Vec::new();
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for tok in sentences.iter().flatten() {
            let s = tok.surface.as_str();
            if is_sentinel(s) {
                continue;
            }
            match seen.get(s) {
                Some(&i) => counts[i].1 += 1,
                None => {
                    seen.insert(s, counts.len());
                    counts.push((s.to_owned(), 1));
                }
            }
        }
        // Stable sort keeps first-occurrence order among equal counts.
        counts.sort_by_key(|&(_, c)| std::cmp::Reverse(c));
        counts.retain(|(_, c)| *c >= min_count);
        Self::from_words(counts, min_count)
    }

    /// Builds a vocabulary from retained `(surface, count)` pairs already in
    /// id order, appending the sentinels.
    pub fn from_words(mut words: Vec<(String, u64)>, min_count: u64) -> Self {
        words.retain(|(s, _)| !is_sentinel(s));
        for s in [ROOT_TOKEN, END_TOKEN, UNK_TOKEN] {
            words.push((s.to_owned(), 0));
        }
        let index = words
            .iter()
            .enumerate()
            .map(|(i, (s, _))| (s.clone(), i))
            .collect();
        Vocabulary {
            entries: words,
            index,
            min_count,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// True when only the sentinels are present.
    pub fn is_empty(&self) -> bool {
        self.entries.len() == 3
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// Exact-match lookup; anything unseen maps to `<unk>`.
    pub fn map_token(&self, surface: &str) -> usize {
        self.index
            .get(surface)
            .copied()
            .unwrap_or_else(|| self.unk_id())
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.index.contains_key(surface)
    }

    pub fn surface(&self, id: usize) -> &str {
        &self.entries[id].0
    }

    pub fn count(&self, id: usize) -> u64 {
        self.entries[id].1
    }

    pub fn counts(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|(_, c)| *c)
    }

    pub fn entries(&self) -> &[(String, u64)] {
        &self.entries
    }

    pub fn root_id(&self) -> usize {
        self.entries.len() - 3
    }

    pub fn end_id(&self) -> usize {
        self.entries.len() - 2
    }

    pub fn unk_id(&self) -> usize {
        self.entries.len() - 1
    }
}

// Id assignment is the identity of a vocabulary; the threshold that produced
// it is not recorded in the vocabulary file.
impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl Eq for Vocabulary {}

fn is_sentinel(s: &str) -> bool {
    s == ROOT_TOKEN || s == END_TOKEN || s == UNK_TOKEN
}

pub fn build_vocabulary(sentences: &[RawSentence], min_count: u64) -> Vocabulary {
    Vocabulary::build(sentences, min_count)
}

pub fn map_token(vocab: &Vocabulary, surface: &str) -> usize {
    vocab.map_token(surface)
}

/// Partition of the vocabulary into output classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassAssignment {
    word_class: Vec<usize>,
    within_class: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl ClassAssignment {
    /// Builds the assignment from a class id per word. Members of a class are
    /// ordered by word id; every class must be nonempty.
    pub fn from_word_classes(word_class: Vec<usize>, num_classes: usize) -> Result<Self> {
        if num_classes == 0 || num_classes > word_class.len() {
            return Err(Error::ClassCount {
                requested: num_classes,
                vocab_size: word_class.len(),
            });
        }
        let mut members = vec![Vec::new(); num_classes];
        let mut within_class = vec![0; word_class.len()];
        for (w, &c) in word_class.iter().enumerate() {
            if c >= num_classes {
                return Err(Error::ClassCount {
                    requested: c + 1,
                    vocab_size: num_classes,
                });
            }
            within_class[w] = members[c].len();
            members[c].push(w);
        }
        if let Some(c) = members.iter().position(Vec::is_empty) {
            return Err(Error::HyperParams(format!("class {c} has no members")));
        }
        Ok(ClassAssignment {
            word_class,
            within_class,
            members,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.members.len()
    }

    pub fn num_words(&self) -> usize {
        self.word_class.len()
    }

    pub fn class_of(&self, word: usize) -> usize {
        self.word_class[word]
    }

    pub fn within_class_index(&self, word: usize) -> usize {
        self.within_class[word]
    }

    pub fn members(&self, class: usize) -> &[usize] {
        &self.members[class]
    }

    pub fn word_classes(&self) -> &[usize] {
        &self.word_class
    }
}

/// Greedy equal-mass frequency binning.
///
/// Words are visited in id order (already descending frequency). The current
/// class closes once its mass reaches `total / num_classes`, or when the
/// remaining words are only just enough to give every remaining class one
/// member. The last class takes whatever is left.
pub fn assign_classes(vocab: &Vocabulary, num_classes: usize) -> Result<ClassAssignment> {
    let n = vocab.len();
    if num_classes == 0 || num_classes > n {
        return Err(Error::ClassCount {
            requested: num_classes,
            vocab_size: n,
        });
    }
    let total: u128 = vocab.counts().map(u128::from).sum();
    let c = num_classes as u128;
    let mut word_class = Vec::with_capacity(n);
    let mut class = 0usize;
    let mut mass: u128 = 0;
    for (w, count) in vocab.counts().enumerate() {
        word_class.push(class);
        mass += u128::from(count);
        let words_left = n - w - 1;
        let classes_left = num_classes - class - 1;
        if class + 1 < num_classes && (mass * c >= total || words_left == classes_left) {
            class += 1;
            mass = 0;
        }
    }
    ClassAssignment::from_word_classes(word_class, num_classes)
}

/// Writes the `VOCAB v1` table.
pub fn write_vocab<W: Write>(mut out: W, vocab: &Vocabulary, classes: &ClassAssignment) -> Result<()> {
    writeln!(out, "VOCAB v1 N={} C={}", vocab.len(), classes.num_classes())?;
    for (id, (surface, count)) in vocab.entries().iter().enumerate() {
        writeln!(
            out,
            "{surface}\t{count}\t{}\t{}",
            classes.class_of(id),
            classes.within_class_index(id)
        )?;
    }
    Ok(())
}

pub fn read_vocab<R: BufRead>(reader: R) -> Result<(Vocabulary, ClassAssignment)> {
    read_vocab_lines(&mut LineReader::new(reader))
}

pub(crate) fn read_vocab_lines<R: BufRead>(
    lines: &mut LineReader<R>,
) -> Result<(Vocabulary, ClassAssignment)> {
    let header = lines.expect_line("VOCAB header")?;
    let hl = lines.line_number();
    if !header.starts_with("VOCAB v1") {
        return Err(Error::Version(format!("expected `VOCAB v1`, found `{header}`")));
    }
    let n = header_usize(&header, "N", hl)?;
    let c = header_usize(&header, "C", hl)?;
    if n < 3 {
        return Err(Error::parse(hl, "vocabulary must contain the three sentinels"));
    }
    let mut words = Vec::with_capacity(n);
    let mut word_class = Vec::with_capacity(n);
    let mut within = Vec::with_capacity(n);
    for _ in 0..n {
        let line = lines.expect_line("vocabulary entry")?;
        let ln = lines.line_number();
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(Error::parse(ln, "expected surface, count, class, index"));
        }
        let num = |s: &str, what: &str| -> Result<u64> {
            s.parse()
                .map_err(|_| Error::parse(ln, format!("{what} `{s}` is not an integer")))
        };
        words.push((f[0].to_owned(), num(f[1], "count")?));
        word_class.push(num(f[2], "class")? as usize);
        within.push(num(f[3], "within-class index")? as usize);
    }
    let sentinels: Vec<&str> = words[n - 3..].iter().map(|(s, _)| s.as_str()).collect();
    if sentinels != [ROOT_TOKEN, END_TOKEN, UNK_TOKEN] {
        return Err(Error::parse(hl, "sentinels must occupy the last three ids"));
    }
    let min_count = words[..n - 3].iter().map(|(_, c)| *c).min().unwrap_or(1).max(1);
    words.truncate(n - 3);
    let vocab = Vocabulary::from_words(words, min_count);
    if vocab.len() != n {
        return Err(Error::parse(hl, "duplicate sentinel surface in vocabulary"));
    }
    let classes = ClassAssignment::from_word_classes(word_class, c)?;
    if (0..n).any(|w| classes.within_class_index(w) != within[w]) {
        return Err(Error::parse(hl, "within-class indices disagree with class members"));
    }
    Ok((vocab, classes))
}

/// Dependency relations seen in a corpus, with `root` always present.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelInventory {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelInventory {
    pub fn from_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut inv = LabelInventory {
            labels: Vec::new(),
            index: HashMap::new(),
        };
        for l in labels {
            inv.insert(l.into());
        }
        inv.insert(ROOT_LABEL.to_owned());
        inv
    }

    fn insert(&mut self, label: String) {
        if !self.index.contains_key(&label) {
            self.index.insert(label.clone(), self.labels.len());
            self.labels.push(label);
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Label id, with unknown relations mapped to the reserved `root` label.
    pub fn id_or_root(&self, label: &str) -> usize {
        self.get(label).unwrap_or_else(|| self.root_id())
    }

    pub fn root_id(&self) -> usize {
        self.index[ROOT_LABEL]
    }

    pub fn label(&self, id: usize) -> &str {
        &self.labels[id]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

pub fn collect_labels(sentences: &[RawSentence]) -> LabelInventory {
    LabelInventory::from_labels(sentences.iter().flatten().map(|t| t.label.as_str()))
}

pub fn write_labels<W: Write>(mut out: W, labels: &LabelInventory) -> Result<()> {
    writeln!(out, "LABELS v1 M={}", labels.len())?;
    for l in labels.labels() {
        writeln!(out, "{l}")?;
    }
    Ok(())
}

pub fn read_labels<R: BufRead>(reader: R) -> Result<LabelInventory> {
    read_label_lines(&mut LineReader::new(reader))
}

pub(crate) fn read_label_lines<R: BufRead>(lines: &mut LineReader<R>) -> Result<LabelInventory> {
    let header = lines.expect_line("LABELS header")?;
    let hl = lines.line_number();
    if !header.starts_with("LABELS v1") {
        return Err(Error::Version(format!("expected `LABELS v1`, found `{header}`")));
    }
    let m = header_usize(&header, "M", hl)?;
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        labels.push(lines.expect_line("label")?);
    }
    let inv = LabelInventory::from_labels(labels);
    if inv.len() != m {
        return Err(Error::parse(hl, "label table has duplicates or lacks `root`"));
    }
    Ok(inv)
}
