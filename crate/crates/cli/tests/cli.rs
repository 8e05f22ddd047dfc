mod support;

use std::path::Path;

use deprnn::evaluation::CANDIDATES;
use deprnn::rnn::deserialize;
use deprnn::{emit_conll, write_completion_set, CompletionProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{deprnn, random_corpus, sentence};
use tempfile::TempDir;

fn run_ok(args: &[&str], dir: &Path) -> String {
    let out = deprnn(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn workspace(seed: u64) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let corpus = random_corpus(&mut rng, 30, 3..=8, 12);
    std::fs::write(dir.path().join("train.conll"), emit_conll(&corpus)).unwrap();
    dir
}

const SMALL: [&str; 6] = ["--hidden", "6", "--direct-size", "1009", "--classes", "4"];

fn train_small(dir: &Path, extra: &[&str]) -> String {
    let mut args = vec!["train", "train.conll", "--min-count", "1", "--out", "model.bin"];
    args.extend(SMALL);
    args.extend(extra);
    run_ok(&args, dir)
}

#[test]
fn help_shows_reference_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let help = run_ok(&["build-vocab", "--help"], dir.path());
    assert!(help.contains("[default: 5]") && help.contains("[default: 250]"), "{help}");
    let help = run_ok(&["train", "--help"], dir.path());
    assert!(help.contains("[default: 0.66]") && help.contains("[default: dep]"), "{help}");
}

#[test]
fn build_vocab_with_one_class() {
    let dir = workspace(1);
    run_ok(
        &["build-vocab", "train.conll", "--min-count", "1", "--classes", "1", "--out", "v.txt"],
        dir.path(),
    );
    let (vocab, classes) = deprnn::corpus::read_vocab(std::fs::read(dir.path().join("v.txt")).unwrap().as_slice()).unwrap();
    assert_eq!(classes.num_classes(), 1);
    assert_eq!(classes.members(0).len(), vocab.len());
}

#[test]
fn class_request_is_capped_at_vocabulary_size() {
    let dir = workspace(2);
    let out = deprnn(&["build-vocab", "train.conll", "--min-count", "1", "--out", "v.txt"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("classes requested"));
}

#[test]
fn errors_exit_nonzero_on_stderr() {
    let dir = workspace(3);
    let out = deprnn(&["build-vocab", "missing.conll", "--out", "v.txt"], dir.path());
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.conll"));

    let out = deprnn(&["train", "train.conll", "--out", "m", "--no-such-flag"], dir.path());
    assert!(!out.status.success());

    let out = deprnn(&["train", "train.conll", "--out", "m", "--mode", "tree"], dir.path());
    assert!(!out.status.success());

    std::fs::write(dir.path().join("junk.bin"), "not a model\n").unwrap();
    std::fs::write(dir.path().join("s.conll"), "").unwrap();
    let out = deprnn(&["score", "--model", "junk.bin", "s.conll"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("DEPRNN v1"));
}

#[test]
fn zero_epochs_writes_the_initialized_model() {
    let dir = workspace(4);
    let stdout = train_small(dir.path(), &["--max-epochs", "0", "--seed", "3"]);
    assert!(stdout.is_empty());
    assert_eq!(std::fs::read_to_string(dir.path().join("model.bin.history")).unwrap(), "");
    let model = deserialize(std::fs::read(dir.path().join("model.bin")).unwrap().as_slice()).unwrap();
    assert!(model.params.d.iter().all(|&x| x == 0.0));
    assert!(model.params.u.iter().all(|x| x.abs() <= 0.1));
}

#[test]
fn training_prints_the_history_lines() {
    let dir = workspace(5);
    let stdout = train_small(dir.path(), &["--max-epochs", "2", "--mode", "ldep"]);
    let history = std::fs::read_to_string(dir.path().join("model.bin.history")).unwrap();
    assert_eq!(stdout, history);
    let lines: Vec<Vec<&str>> = history.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0][0], "1");
    assert_eq!(lines[1][1], "0.1");
    assert_eq!(lines[1][3], "-");
    assert!(lines[1][2].parse::<f64>().unwrap() < lines[0][2].parse::<f64>().unwrap());

    let first = std::fs::read(dir.path().join("model.bin")).unwrap();
    train_small(dir.path(), &["--max-epochs", "2", "--mode", "ldep"]);
    assert_eq!(std::fs::read(dir.path().join("model.bin")).unwrap(), first);
}

#[test]
fn score_output_shapes() {
    let dir = workspace(6);
    train_small(dir.path(), &["--max-epochs", "1"]);
    std::fs::write(dir.path().join("empty.conll"), "").unwrap();
    assert_eq!(run_ok(&["score", "--model", "model.bin", "empty.conll"], dir.path()), "");

    let one = sentence(&[("w1".into(), 2, "dep"), ("w2".into(), 0, "root"), ("zzz".into(), 2, "dep")]);
    std::fs::write(dir.path().join("one.conll"), emit_conll(&[one])).unwrap();
    let out = run_ok(&["score", "--model", "model.bin", "one.conll"], dir.path());
    assert_eq!(out.lines().count(), 1);
    let fields: Vec<&str> = out.trim_end().split('\t').collect();
    assert_eq!(fields[1], "3");
    let items: Vec<&str> = fields[2].split(' ').collect();
    assert!(items[0].starts_with("w1:") && items[2].starts_with("zzz:"));
    let total: f64 = fields[0].parse().unwrap();
    let sum: f64 = items.iter().map(|i| i.rsplit(':').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - sum).abs() < 1e-9);
}

#[test]
fn dep_and_seq_scores_of_chains_differ_by_the_end_term() {
    let dir = workspace(7);
    train_small(dir.path(), &["--max-epochs", "2"]);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let chains: Vec<_> = (0..5)
        .map(|_| {
            let n = rng.gen_range(1..=6);
            let toks: Vec<(String, usize, &str)> =
                (0..n).map(|i| (format!("w{}", rng.gen_range(0..12)), i, "dep")).collect();
            sentence(&toks)
        })
        .collect();
    std::fs::write(dir.path().join("chains.conll"), emit_conll(&chains)).unwrap();
    let dep = run_ok(&["score", "--model", "model.bin", "chains.conll", "--mode", "dep"], dir.path());
    let seq = run_ok(&["score", "--model", "model.bin", "chains.conll", "--mode", "seq"], dir.path());
    for (d, s) in dep.lines().zip(seq.lines()) {
        let d: Vec<&str> = d.split('\t').collect();
        let s: Vec<&str> = s.split('\t').collect();
        let end: f64 = s[2].rsplit(' ').next().unwrap().strip_prefix("</s>:").unwrap().parse().unwrap();
        let (dt, st): (f64, f64) = (d[0].parse().unwrap(), s[0].parse().unwrap());
        assert!((dt - (st - end)).abs() < 1e-9, "{dt} vs {st} - {end}");
        assert_eq!(s[1].parse::<usize>().unwrap(), d[1].parse::<usize>().unwrap() + 1);
    }
}

#[test]
fn memorized_gold_candidates_are_all_found() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let golds = random_corpus(&mut rng, 10, 4..=6, 20);
    let mut corpus = Vec::new();
    for _ in 0..5 {
        corpus.extend(golds.iter().cloned());
    }
    std::fs::write(dir.path().join("train.conll"), emit_conll(&corpus)).unwrap();
    let problems: Vec<CompletionProblem> = golds
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let gold = i % CANDIDATES;
            let candidates = (0..CANDIDATES)
                .map(|k| {
                    let mut c = g.clone();
                    if k != gold {
                        let slot = k % c.len();
                        c[slot].surface = format!("never{k}");
                    }
                    c
                })
                .collect();
            CompletionProblem {
                id: format!("m{i}"),
                candidates,
                gold,
            }
        })
        .collect();
    let mut buf = Vec::new();
    write_completion_set(&mut buf, &problems).unwrap();
    std::fs::write(dir.path().join("problems.txt"), buf).unwrap();
    let mut args = vec!["train", "train.conll", "--min-count", "1", "--out", "model.bin", "--max-epochs", "20"];
    args.extend(["--hidden", "16", "--direct-size", "10007", "--classes", "5"]);
    run_ok(&args, dir.path());
    let report = run_ok(&["complete", "--model", "model.bin", "problems.txt"], dir.path());
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines.len(), 13);
    assert_eq!(lines[10], "ACCURACY dev = 1 (5/5)");
    assert_eq!(lines[11], "ACCURACY test = 1 (5/5)");
    assert_eq!(lines[12], "ACCURACY all = 1 (10/10)");
}

#[test]
fn canonical_size_splits_evenly() {
    let dir = workspace(10);
    train_small(dir.path(), &["--max-epochs", "0"]);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let problems: Vec<CompletionProblem> = (0..1040)
        .map(|i| CompletionProblem {
            id: format!("c{i}"),
            candidates: random_corpus(&mut rng, CANDIDATES, 3..=3, 12),
            gold: rng.gen_range(0..CANDIDATES),
        })
        .collect();
    let mut buf = Vec::new();
    write_completion_set(&mut buf, &problems).unwrap();
    std::fs::write(dir.path().join("problems.txt"), buf).unwrap();
    let report = run_ok(&["complete", "--model", "model.bin", "problems.txt"], dir.path());
    let footers: Vec<&str> = report.lines().filter(|l| l.starts_with("ACCURACY")).collect();
    assert!(footers[0].starts_with("ACCURACY dev = ") && footers[0].ends_with("/520)"));
    assert!(footers[1].starts_with("ACCURACY test = ") && footers[1].ends_with("/520)"));
    assert!(footers[2].ends_with("/1040)"));
    assert_eq!(report.lines().count(), 1043);
}
