use std::fs;
use std::path::Path;

use adaffect_core::corpus::load_corpus;
use adaffect_core::pipeline::{run_pipeline, RunConfig};
use adaffect_core::schedule::{InsertionInstance, RelevanceWeights};
use adaffect_core::synth::{generate_synthetic_corpus, SynthConfig};

fn quick(manifest: &Path, out: &Path) -> RunConfig {
    let mut cfg = RunConfig::new(manifest, 11, out);
    cfg.classifier.repeats = 2;
    cfg
}

fn csv_shape(path: &Path) -> (usize, usize) {
    let text = fs::read_to_string(path).unwrap();
    let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    (lines.len() - 1, lines[0].split(',').count())
}

#[test]
fn outputs_are_deterministic_and_shaped() {
    let dir = tempfile::tempdir().unwrap();
    let s = generate_synthetic_corpus(&SynthConfig::new(11, 20, 6, 2.0), &dir.path().join("corpus")).unwrap();
    let a = run_pipeline(&quick(&s.manifest, &dir.path().join("a"))).unwrap();
    let b = run_pipeline(&quick(&s.manifest, &dir.path().join("b"))).unwrap();
    assert_eq!(a.files.len(), b.files.len());
    for (fa, fb) in a.files.iter().zip(&b.files) {
        assert_eq!(fa.path.file_name(), fb.path.file_name());
        assert_eq!(fs::read(&fa.path).unwrap(), fs::read(&fb.path).unwrap(), "{}", fa.path.display());
    }

    // method column plus μ and σ for 3 windows on 2 axes
    assert_eq!(csv_shape(&dir.path().join("a/table3_table.csv")), (18, 13));
    assert_eq!(csv_shape(&dir.path().join("a/table4_table.csv")), (3, 13));
    assert_eq!(csv_shape(&dir.path().join("a/han_unimodal_table.csv")), (6, 13));
    let head = fs::read_to_string(dir.path().join("a/table3_table.csv")).unwrap();
    assert!(head.starts_with("# config="));

    let corpus = load_corpus(&s.manifest).unwrap();
    assert_eq!(a.schedules.len(), 3 * corpus.programs.len());
    for (method, sched) in &a.schedules {
        let scores = &a.scores[&method.parse().unwrap()];
        let program = corpus.programs.iter().find(|p| p.id == sched.program_id).unwrap();
        let inst = InsertionInstance::<f64>::new(program, scores, 5, RelevanceWeights::default()).unwrap();
        sched.verify(&inst).unwrap();
    }
}

#[test]
fn config_hash_ignores_output_dir() {
    let a = RunConfig::new("c/manifest.toml", 3, "x");
    let b = RunConfig::new("c/manifest.toml", 3, "y");
    let c = RunConfig::new("c/manifest.toml", 4, "x");
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), c.hash());
    assert_eq!(a.stamp(), format!("config={} seed=3", a.hash()));
}

#[test]
fn config_file_resolves_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(&path, "corpus = \"corpus/manifest.toml\"\nseed = 5\n\n[classifier]\nrepeats = 3\n").unwrap();
    let cfg = RunConfig::load(&path).unwrap();
    assert_eq!(cfg.corpus, dir.path().join("corpus/manifest.toml"));
    assert_eq!(cfg.output_dir, dir.path().join("results"));
    assert_eq!(cfg.classifier.repeats, 3);
    fs::write(&path, "corpus = \"c\"\n").unwrap();
    assert!(RunConfig::load(&path).is_err());
}

#[test]
fn missing_corpus_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere/manifest.toml");
    let err = run_pipeline(&RunConfig::new(&missing, 1, dir.path().join("out"))).unwrap_err();
    assert_eq!(err.stage, "config");
    assert!(err.message.contains("nowhere"));
}
