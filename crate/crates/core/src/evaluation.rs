//! Five-way sentence completion: problem files, dev/test split, argmax
//! selection and accuracy reports.

use std::fmt::Write as _;
use std::io::BufRead;

use log::info;

use crate::corpus::{emit_conll, parse_conll_str, RawSentence};
use crate::deptree::check_structure;
use crate::error::{Error, Result};
use crate::model::{Mode, Model};
use crate::scoring::score_sentence;
use crate::textio::LineReader;

pub const CANDIDATES: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompletionProblem {
    pub id: String,
    /// Exactly five parsed candidate sentences, in file order.
    pub candidates: Vec<RawSentence>,
    pub gold: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemResult {
    pub id: String,
    pub chosen: usize,
    pub gold: usize,
    pub scores: [f64; CANDIDATES],
}

impl ProblemResult {
    pub fn correct(&self) -> bool {
        self.chosen == self.gold
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub split: String,
    pub accuracy: f64,
    pub per_problem: Vec<ProblemResult>,
}

impl EvalReport {
    pub fn correct(&self) -> usize {
        self.per_problem.iter().filter(|p| p.correct()).count()
    }

    /// `problem_id<TAB>chosen<TAB>gold<TAB>s0..s4` rows.
    pub fn table(&self) -> String {
        let mut out = String::new();
        for p in &self.per_problem {
            let _ = write!(out, "{}\t{}\t{}", p.id, p.chosen, p.gold);
            for s in &p.scores {
                let _ = write!(out, "\t{s}");
            }
            out.push('\n');
        }
        out
    }

    /// `ACCURACY <split> = <accuracy> (<correct>/<total>)`.
    pub fn footer(&self) -> String {
        format!(
            "ACCURACY {} = {} ({}/{})",
            self.split,
            self.accuracy,
            self.correct(),
            self.per_problem.len()
        )
    }

    /// Report over a subset of this report's problems.
    pub fn subset(&self, split: &str, range: std::ops::Range<usize>) -> EvalReport {
        Self::from_results(split, self.per_problem[range].to_vec())
    }

    fn from_results(split: &str, per_problem: Vec<ProblemResult>) -> Self {
        let correct = per_problem.iter().filter(|p| p.correct()).count();
        let accuracy = if per_problem.is_empty() {
            0.0
        } else {
            correct as f64 / per_problem.len() as f64
        };
        EvalReport {
            split: split.to_owned(),
            accuracy,
            per_problem,
        }
    }
}

/// Reads records introduced by `#PROBLEM <id> GOLD=<k>`, each followed by
/// five blank-line separated CoNLL blocks.
pub fn load_completion_set<R: BufRead>(reader: R) -> Result<Vec<CompletionProblem>> {
    let mut lines = LineReader::new(reader);
    let mut problems = Vec::new();
    let mut current: Option<(String, Option<usize>, String)> = None;
    while let Some(line) = lines.next_line()? {
        if let Some(rest) = line.strip_prefix("#PROBLEM") {
            let header = rest.trim().to_owned();
            if let Some(record) = current.take() {
                problems.push(finish_problem(record)?);
            }
            current = Some(parse_header(&header, lines.line_number())?);
            continue;
        }
        match current.as_mut() {
            Some((_, _, body)) => {
                body.push_str(line);
                body.push('\n');
            }
            None if line.trim().is_empty() || line.starts_with('#') => {}
            None => {
                return Err(Error::parse(
                    lines.line_number(),
                    "content before the first #PROBLEM header",
                ))
            }
        }
    }
    if let Some(record) = current.take() {
        problems.push(finish_problem(record)?);
    }
    Ok(problems)
}

fn parse_header(header: &str, line: usize) -> Result<(String, Option<usize>, String)> {
    let mut parts = header.split_whitespace();
    let id = parts
        .next()
        .ok_or_else(|| Error::parse(line, "#PROBLEM header without an id"))?
        .to_owned();
    let gold = parts
        .find_map(|p| p.strip_prefix("GOLD="))
        .map(|g| {
            g.parse::<usize>().map_err(|_| Error::Problem {
                id: id.clone(),
                message: format!("GOLD=`{g}` is not an integer"),
            })
        })
        .transpose()?;
    Ok((id, gold, String::new()))
}

fn finish_problem((id, gold, body): (String, Option<usize>, String)) -> Result<CompletionProblem> {
    let problem_err = |message: String| Error::Problem {
        id: id.clone(),
        message,
    };
    let gold = gold.ok_or_else(|| problem_err("missing GOLD= marker".into()))?;
    if gold >= CANDIDATES {
        return Err(problem_err(format!("GOLD={gold} is not a candidate index")));
    }
    let candidates = parse_conll_str(&body).map_err(|e| problem_err(format!("malformed CoNLL: {e}")))?;
    if candidates.len() != CANDIDATES {
        return Err(problem_err(format!(
            "expected {CANDIDATES} candidates, found {}",
            candidates.len()
        )));
    }
    for (k, c) in candidates.iter().enumerate() {
        check_structure(c).map_err(|e| problem_err(format!("candidate {k}: {e}")))?;
    }
    Ok(CompletionProblem {
        id,
        candidates,
        gold,
    })
}

/// Writes problems in the format read by [`load_completion_set`].
pub fn write_completion_set<W: std::io::Write>(mut out: W, problems: &[CompletionProblem]) -> Result<()> {
    for p in problems {
        writeln!(out, "#PROBLEM {} GOLD={}", p.id, p.gold)?;
        out.write_all(emit_conll(&p.candidates).as_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// First `ceil(n/2)` problems are dev, the rest test.
pub fn split_dev_test(problems: &[CompletionProblem]) -> (&[CompletionProblem], &[CompletionProblem]) {
    problems.split_at(problems.len().div_ceil(2))
}

/// Index of the highest score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

pub fn candidate_scores(model: &Model, problem: &CompletionProblem, mode: Mode) -> [f64; CANDIDATES] {
    let mut scores = [0.0; CANDIDATES];
    for (s, cand) in scores.iter_mut().zip(&problem.candidates) {
        *s = score_sentence(model, cand, mode)
            .expect("candidate trees are validated when problems are loaded")
            .total;
    }
    scores
}

pub fn evaluate(model: &Model, problems: &[CompletionProblem], mode: Mode, split: &str) -> EvalReport {
    let oov = problems
        .iter()
        .flat_map(|p| p.candidates.iter().flatten())
        .filter(|t| !model.vocab.contains(&t.surface))
        .count();
    if oov > 0 {
        info!("{split}: {oov} candidate tokens are out of vocabulary and scored as <unk>");
    }
    let results = problems
        .iter()
        .map(|p| {
            let scores = candidate_scores(model, p, mode);
            ProblemResult {
                id: p.id.clone(),
                chosen: argmax(&scores),
                gold: p.gold,
                scores,
            }
        })
        .collect();
    EvalReport::from_results(split, results)
}

/// Perplexity over the gold candidates only and over all five candidates.
pub fn completion_perplexity(model: &Model, problems: &[CompletionProblem], mode: Mode) -> Result<(f64, f64)> {
    let mut gold = (0.0, 0usize);
    let mut all = (0.0, 0usize);
    for p in problems {
        for (k, cand) in p.candidates.iter().enumerate() {
            let s = score_sentence(model, cand, mode)?;
            all.0 += s.total;
            all.1 += s.token_count;
            if k == p.gold {
                gold.0 += s.total;
                gold.1 += s.token_count;
            }
        }
    }
    if all.1 == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok((
        (-gold.0 / gold.1 as f64).exp(),
        (-all.0 / all.1 as f64).exp(),
    ))
}
