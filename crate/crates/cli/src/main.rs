use std::fs;
use std::path::{Path, PathBuf};

use adaffect_core::corpus::io::{fmt_sig9, write_feature_tables};
use adaffect_core::corpus::{load_corpus, read_eval_runs, FeatureRow, FeatureTable, Level, Window};
use adaffect_core::features::media::{read_frames, read_wav_mono, write_gray_png};
use adaffect_core::features::{extract_keyframes, han_series, segment_count, spectrogram, HanConfig};
use adaffect_core::fusion::{grid_search_fusion, DEFAULT_STEP};
use adaffect_core::pipeline::{
    emit_schedules, read_scores, run_pipeline, schedule_all, score_correlations, write_score_correlations, RunConfig,
    RunSummary, SchedulerConfig, Stages, OUTPUT_DIR_ENV,
};
use adaffect_core::schedule::ScoreMethod;
use adaffect_core::stats::DEFAULT_FDR_Q;
use adaffect_core::synth::{generate_synthetic_corpus, SynthConfig};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adaffect", version, about = "Ad affect recognition and affect-aware ad insertion")]
struct Cli {
    /// Output directory; overrides the config file's `output_dir`.
    #[arg(long, global = true, env = OUTPUT_DIR_ENV)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage of a config file in order.
    Run(ConfigArg),
    /// Write a seeded synthetic corpus.
    Synth(SynthArgs),
    /// Inter-rater agreement and per-quadrant rating summary.
    Agree(ConfigArg),
    /// Per-second audio-visual statistics, keyframes and spectrogram rasters for one ad.
    Features(FeatureArgs),
    /// EEG classification over the F30, L30 and L10 windows.
    Eeg(ConfigArg),
    /// Content classification and decision fusion over the All, L30 and L10 windows.
    TrainEval(ConfigArg),
    /// Decision fusion of two posterior columns with a weight grid search.
    Fuse(FuseArgs),
    /// Per-ad arousal and valence scores from content, Han curves and EEG.
    Score(ConfigArg),
    /// Ad-insertion schedules from a scores file.
    Schedule(ScheduleArgs),
    /// Correlations between score methods from a scores file.
    CompareScores(CompareArgs),
    /// Print result tables from an output directory.
    Report(ReportArgs),
}

#[derive(Args)]
struct ConfigArg {
    /// Run config (TOML).
    #[arg(long, short)]
    config: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Corpus directory to create.
    #[arg(long)]
    dir: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    ads: usize,
    #[arg(long, default_value_t = 14)]
    raters: usize,
    /// Raters with EEG recordings (defaults to min(raters, 4)).
    #[arg(long)]
    eeg_raters: Option<usize>,
    /// Class-mean separation of the content features, in standard deviations.
    #[arg(long, default_value_t = 2.0)]
    separability: f64,
    #[arg(long, default_value_t = 4096)]
    fc7_dim: usize,
    /// Also write a run config pointing at the corpus.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FeatureArgs {
    #[arg(long)]
    ad: String,
    /// WAV audio track.
    #[arg(long)]
    audio: PathBuf,
    /// Raw RGB8 frame dump or directory of PNG frames.
    #[arg(long)]
    frames: PathBuf,
    #[arg(long)]
    fps: f64,
    /// Add per-second colorfulness to the statistics.
    #[arg(long)]
    colorfulness: bool,
}

#[derive(Args)]
struct FuseArgs {
    /// CSV with columns `unit,truth,p_audio,p_video` (P(High) per modality).
    #[arg(long)]
    input: PathBuf,
    /// Training F1 of the audio classifier.
    #[arg(long)]
    f_audio: f64,
    /// Training F1 of the video classifier.
    #[arg(long)]
    f_video: f64,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    step: f64,
}

#[derive(Args)]
struct ScheduleArgs {
    /// Corpus manifest with the programs.
    #[arg(long)]
    corpus: PathBuf,
    /// Scores file written by `score`.
    #[arg(long)]
    scores: PathBuf,
    /// Ads inserted per program.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Restrict to one score method (deep, han, eeg).
    #[arg(long)]
    method: Option<ScoreMethod>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    scores: PathBuf,
    /// False-discovery rate for the Benjamini-Hochberg step-up.
    #[arg(long, default_value_t = DEFAULT_FDR_Q)]
    q: f64,
}

#[derive(Args)]
struct ReportArgs {
    /// Output directory of a run.
    #[arg(long)]
    dir: PathBuf,
}

fn out_dir(cli_out: &Option<PathBuf>) -> PathBuf {
    cli_out.clone().unwrap_or_else(|| PathBuf::from("results"))
}

fn load_config(path: &Path, out: &Option<PathBuf>, stages: Option<Stages>) -> Result<RunConfig> {
    if !path.exists() {
        bail!("config not found: {}", path.display());
    }
    let mut cfg = RunConfig::load(path)?;
    if let Some(o) = out {
        cfg.output_dir = o.clone();
    }
    if let Some(s) = stages {
        cfg.stages = s;
    }
    Ok(cfg)
}

fn only(agreement: bool, content: bool, eeg: bool, score: bool) -> Stages {
    Stages { agreement, content, eeg, score, schedule: false }
}

fn run(cfg: &RunConfig) -> Result<RunSummary> {
    let sum = run_pipeline(cfg)?;
    for line in &sum.log {
        println!("{line}");
    }
    println!("wrote {} files to {}", sum.files.len(), cfg.output_dir.display());
    Ok(sum)
}

fn synth(a: &SynthArgs) -> Result<()> {
    let mut cfg = SynthConfig::new(a.seed, a.ads, a.raters, a.separability);
    cfg.fc7_dim = a.fc7_dim;
    if let Some(n) = a.eeg_raters {
        cfg.n_eeg_raters = n;
    }
    let s = generate_synthetic_corpus(&cfg, &a.dir)?;
    println!("wrote {}", s.manifest.display());
    if let Some(path) = &a.config {
        let corpus = s.manifest.canonicalize()?;
        let text = format!("corpus = {:?}\nseed = {}\n", corpus.display().to_string(), a.seed);
        fs::write(path, text).with_context(|| path.display().to_string())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn features(a: &FeatureArgs, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    let (audio, rate) = read_wav_mono(&a.audio)?;
    let frames = read_frames(&a.frames)?;
    let cfg = HanConfig { colorfulness: a.colorfulness, ..HanConfig::default() };
    let series = han_series(&a.ad, &audio, &frames, rate, a.fps, &cfg)?;
    let dim = series.channels();
    let mut table = FeatureTable::new(&a.ad, Window::All, dim);
    table.rows = series.per_second.iter().enumerate().map(|(segment, s)| FeatureRow { segment, values: s.values() }).collect();
    let han_path = out.join(format!("han_{}.csv", a.ad));
    write_feature_tables(&han_path, &[table], None)?;
    println!("wrote {} ({} seconds, {dim} channels)", han_path.display(), series.per_second.len());

    let keys = extract_keyframes(frames.len(), a.fps)?;
    let mut text = String::from("ad_id,index,t\n");
    for k in &keys {
        text.push_str(&format!("{},{},{}\n", a.ad, k.index, fmt_sig9(k.t)));
    }
    let key_path = out.join(format!("keyframes_{}.csv", a.ad));
    fs::write(&key_path, text)?;
    println!("wrote {} ({} keyframes)", key_path.display(), keys.len());

    let raster_dir = out.join(format!("spectrograms_{}", a.ad));
    fs::create_dir_all(&raster_dir)?;
    let n = segment_count(audio.len(), rate);
    for seg in 0..n {
        let sp = spectrogram(&a.ad, &audio, rate, seg)?;
        let (w, h, px) = sp.to_gray8();
        write_gray_png(&raster_dir.join(format!("{}_{seg:03}.png", a.ad)), w, h, &px)?;
    }
    println!("wrote {n} spectrogram rasters to {}", raster_dir.display());
    Ok(())
}

fn fuse(a: &FuseArgs, out: &Path) -> Result<()> {
    let text = fs::read_to_string(&a.input).with_context(|| a.input.display().to_string())?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    if lines.next().map(str::trim) != Some("unit,truth,p_audio,p_video") {
        bail!("{}: expected header `unit,truth,p_audio,p_video`", a.input.display());
    }
    let (mut units, mut truth, mut pa, mut pv) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (n, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 4 {
            bail!("{}: row {} has {} fields", a.input.display(), n + 1, f.len());
        }
        let lvl: Level = f[1].parse().map_err(anyhow::Error::msg)?;
        let p = |s: &str| -> Result<[f64; 2]> {
            let v: f64 = s.parse().with_context(|| format!("row {}", n + 1))?;
            Ok([1.0 - v, v])
        };
        units.push(f[0].to_string());
        truth.push(lvl);
        pa.push(p(f[2])?);
        pv.push(p(f[3])?);
    }
    let r = grid_search_fusion(&pa, &pv, &truth, (a.f_audio, a.f_video), a.step)?;
    fs::create_dir_all(out)?;
    let mut body = String::from("unit,p_high,label\n");
    for ((u, p), l) in units.iter().zip(&r.posteriors).zip(&r.labels) {
        body.push_str(&format!("{u},{},{}\n", fmt_sig9(p[1]), l.letter()));
    }
    let path = out.join("fused.csv");
    fs::write(&path, body)?;
    println!(
        "alpha = ({}, {}), t = ({}, {}), fused F1 = {} (weights chosen on these labels)",
        fmt_sig9(r.weights.alpha.0),
        fmt_sig9(r.weights.alpha.1),
        fmt_sig9(r.weights.t.0),
        fmt_sig9(r.weights.t.1),
        fmt_sig9(r.fused_f1)
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn schedule(a: &ScheduleArgs, out: &Path) -> Result<()> {
    let corpus = load_corpus(&a.corpus)?;
    let mut scores = read_scores(&a.scores)?;
    if let Some(m) = a.method {
        scores.retain(|k, _| *k == m);
        if scores.is_empty() {
            bail!("no `{}` scores in {}", m.name(), a.scores.display());
        }
    }
    let cfg = SchedulerConfig { k: a.k, ..SchedulerConfig::default() };
    let schedules = schedule_all(&corpus, &scores, &cfg)?;
    fs::create_dir_all(out)?;
    let stamp = format!("scores={}", a.scores.display());
    let files = emit_schedules(&corpus, &schedules, out, &stamp)?;
    for (m, s) in &schedules {
        let ads: Vec<&str> = s.assignments.iter().map(|(_, id)| id.as_str()).collect();
        println!("{m} {}: objective {} [{}]", s.program_id, fmt_sig9(s.objective), ads.join(" "));
    }
    println!("wrote {} files to {}", files.len(), out.display());
    Ok(())
}

fn compare(a: &CompareArgs, out: &Path) -> Result<()> {
    let scores = read_scores(&a.scores)?;
    if scores.len() < 2 {
        bail!("{} holds fewer than two score methods", a.scores.display());
    }
    for c in score_correlations(&scores, a.q)? {
        let f = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.3}"));
        let mark = if c.report.significant_after_fdr { " *" } else { "" };
        println!("{} vs {} {}: rho {} p {}{mark}", c.left.name(), c.right.name(), c.axis.short(), f(c.report.rho), f(c.report.p_value));
    }
    fs::create_dir_all(out)?;
    let stamp = format!("scores={}", a.scores.display());
    let file = write_score_correlations(&out.join("score_correlations.csv"), &scores, a.q, &stamp)?;
    println!("wrote {}", file.path.display());
    Ok(())
}

fn report(a: &ReportArgs) -> Result<()> {
    let mut any = false;
    for (stem, title) in [("table3", "Content-centric recognition"), ("han_unimodal", "Han unimodal"), ("table4", "EEG recognition")] {
        if !a.dir.join(format!("{stem}_runs.csv")).exists() {
            continue;
        }
        any = true;
        let runs = read_eval_runs(&a.dir, stem)?;
        let mut cols: Vec<(String, String)> = Vec::new();
        let mut methods: Vec<String> = Vec::new();
        for r in &runs {
            let c = (r.axis.clone(), r.window.clone());
            if !cols.contains(&c) {
                cols.push(c);
            }
            if !methods.contains(&r.method) {
                methods.push(r.method.clone());
            }
        }
        cols.sort_by_key(|(axis, _)| axis != "val");
        println!("## {title}\n");
        let head: Vec<String> = cols.iter().map(|(ax, w)| format!("{ax} {w}")).collect();
        println!("| method | {} |", head.join(" | "));
        println!("|---|{}", "---|".repeat(cols.len()));
        for m in &methods {
            let cells: Vec<String> = cols
                .iter()
                .map(|(ax, w)| {
                    runs.iter()
                        .find(|r| &r.method == m && &r.axis == ax && &r.window == w)
                        .map_or(String::new(), |r| format!("{:.2} ({:.2})", r.f1_mean, r.f1_std))
                })
                .collect();
            println!("| {m} | {} |", cells.join(" | "));
        }
        println!();
    }
    if !any {
        bail!("no result tables in {}", a.dir.display());
    }
    for name in ["insertion_frequency.txt", "score_correlations.csv"] {
        let p = a.dir.join(name);
        if p.exists() {
            println!("## {name}\n");
            for line in fs::read_to_string(&p)?.lines().filter(|l| !l.starts_with('#')) {
                println!("{line}");
            }
            println!();
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let out = &cli.out;
    match &cli.command {
        Command::Run(c) => run(&load_config(&c.config, out, None)?).map(drop),
        Command::Agree(c) => run(&load_config(&c.config, out, Some(only(true, false, false, false)))?).map(drop),
        Command::TrainEval(c) => run(&load_config(&c.config, out, Some(only(false, true, false, false)))?).map(drop),
        Command::Eeg(c) => run(&load_config(&c.config, out, Some(only(false, false, true, false)))?).map(drop),
        Command::Score(c) => run(&load_config(&c.config, out, Some(only(false, true, true, true)))?).map(drop),
        Command::Synth(a) => synth(a),
        Command::Features(a) => features(a, &out_dir(out)),
        Command::Fuse(a) => fuse(a, &out_dir(out)),
        Command::Schedule(a) => schedule(a, &out_dir(out)),
        Command::CompareScores(a) => compare(a, &out_dir(out)),
        Command::Report(a) => report(a),
    }
}
