use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use adaffect_core::features::media::{write_raw_frames, write_wav_mono};
use adaffect_core::features::Frame;

const SUBCOMMANDS: [&str; 11] =
    ["run", "synth", "agree", "features", "eeg", "train-eval", "fuse", "score", "schedule", "compare-scores", "report"];

fn adaffect(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_adaffect"));
    cmd.args(args).env_remove("ADAFFECT_OUT");
    if let Some(o) = out {
        cmd.env("ADAFFECT_OUT", o);
    }
    cmd.output().unwrap()
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

#[test]
fn every_subcommand_has_help() {
    let top = adaffect(&["--help"], None);
    assert!(top.status.success());
    for sub in SUBCOMMANDS {
        assert!(text(&top).contains(sub), "{sub} missing from --help");
        let o = adaffect(&[sub, "--help"], None);
        assert!(o.status.success(), "{sub}");
        assert!(text(&o).lines().next().is_some_and(|l| !l.trim().is_empty()), "{sub} has no description");
    }
}

#[test]
fn missing_paths_fail_with_their_name() {
    let dir = tempfile::tempdir().unwrap();
    let o = adaffect(&["run", "--config", "/no/such/run.toml"], None);
    assert!(!o.status.success());
    assert!(text(&o).contains("/no/such/run.toml"));

    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "corpus = \"absent/manifest.toml\"\nseed = 1\n").unwrap();
    let o = adaffect(&["run", "--config", cfg.to_str().unwrap()], None);
    assert!(!o.status.success());
    assert!(text(&o).contains("absent/manifest.toml"), "{}", text(&o));
}

#[test]
fn synth_then_stages_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let cfg = dir.path().join("run.toml");
    let o = adaffect(
        &["synth", "--dir", corpus.to_str().unwrap(), "--seed", "4", "--ads", "16", "--raters", "5", "--fc7-dim", "256", "--config", cfg.to_str().unwrap()],
        None,
    );
    assert!(o.status.success(), "{}", text(&o));
    let mut body = fs::read_to_string(&cfg).unwrap();
    body.push_str("\n[classifier]\nrepeats = 1\n");
    fs::write(&cfg, body).unwrap();
    let c = cfg.to_str().unwrap();

    let out = dir.path().join("env_out");
    let o = adaffect(&["score", "--config", c], Some(&out));
    assert!(o.status.success(), "{}", text(&o));
    assert!(out.join("table3_table.csv").exists());
    assert!(out.join("table4_table.csv").exists());
    assert!(out.join("scores.csv").exists());
    assert!(!out.join("schedules_schedules.csv").exists());

    let sched = dir.path().join("sched");
    let o = adaffect(
        &[
            "schedule",
            "--corpus",
            corpus.join("manifest.toml").to_str().unwrap(),
            "--scores",
            out.join("scores.csv").to_str().unwrap(),
            "--method",
            "han",
            "--out",
            sched.to_str().unwrap(),
        ],
        None,
    );
    assert!(o.status.success(), "{}", text(&o));
    let rows = fs::read_to_string(sched.join("schedules_schedules.csv")).unwrap();
    assert_eq!(rows.lines().filter(|l| l.starts_with("han,")).count(), 3 * 5);

    let o = adaffect(&["compare-scores", "--scores", out.join("scores.csv").to_str().unwrap()], Some(&out));
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("deep vs han"));

    let o = adaffect(&["report", "--dir", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("A+V Han RSVM DF"));

    let agree = dir.path().join("agree");
    let o = adaffect(&["agree", "--config", c, "--out", agree.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", text(&o));
    assert!(agree.join("agreement.csv").exists());
    assert!(!agree.join("table3_table.csv").exists());
}

#[test]
fn fuse_reads_posterior_columns() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("post.csv");
    fs::write(&input, "unit,truth,p_audio,p_video\nu1,H,0.9,0.4\nu2,L,0.2,0.3\nu3,H,0.4,0.8\nu4,L,0.6,0.1\n").unwrap();
    let o = adaffect(
        &["fuse", "--input", input.to_str().unwrap(), "--f-audio", "0.8", "--f-video", "0.7", "--out", dir.path().to_str().unwrap()],
        None,
    );
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("fused F1 = 1"));
    let fused = fs::read_to_string(dir.path().join("fused.csv")).unwrap();
    assert_eq!(fused.lines().count(), 5);
}

#[test]
fn features_from_media() {
    let dir = tempfile::tempdir().unwrap();
    let rate = 16_000;
    let audio: Vec<f64> = (0..rate * 12).map(|i| 0.3 * (2.0 * std::f64::consts::PI * 220.0 * i as f64 / rate as f64).sin()).collect();
    let wav = dir.path().join("a.wav");
    write_wav_mono(&wav, &audio, rate as u32).unwrap();
    let frames: Vec<Frame> = (0..120).map(|i| Frame::filled(8, 8, if i < 60 { [10, 20, 30] } else { [200, 180, 20] })).collect();
    let raw = dir.path().join("v.rgb");
    write_raw_frames(&raw, &frames).unwrap();
    let out = dir.path().join("feat");
    let o = adaffect(
        &["features", "--ad", "x1", "--audio", wav.to_str().unwrap(), "--frames", raw.to_str().unwrap(), "--fps", "10"],
        Some(&out),
    );
    assert!(o.status.success(), "{}", text(&o));
    let han = fs::read_to_string(out.join("han_x1.csv")).unwrap();
    assert_eq!(han.lines().next().unwrap(), "ad_id,window,segment,f0,f1,f2,f3,f4");
    assert_eq!(han.lines().count(), 13);
    let keys = fs::read_to_string(out.join("keyframes_x1.csv")).unwrap();
    assert_eq!(keys.lines().count(), 1 + 5);
    assert!(out.join("spectrograms_x1/x1_000.png").exists());
}
