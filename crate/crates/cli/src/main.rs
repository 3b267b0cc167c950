//! `sdmnav`: episode generation, simulation, SDM training and evaluation.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sdmnav::agents::AgentKind;
use sdmnav::audio::{compute_spectrogram, export_wav, render_binaural, CategoryLibrary, SoundSet};
use sdmnav::episode::{parse_dataset, write_dataset_with_header, GeneratorConfig};
use sdmnav::harness::{
    generate_suite, make_dataset, parse_results, results_jsonl, run_suite, trajectory_jsonl,
    DatasetOptions, RunOptions,
};
use sdmnav::metrics::{metrics_csv, report_by_goal_count};
use sdmnav::scene::{Heading, Point, Pose, SceneSet};
use sdmnav::sdm::gradcheck::check_gradients;
use sdmnav::sdm::train::{TrainConfig, DEFAULT_BATCH_SIZE, DEFAULT_DROPOUT, DEFAULT_GRAD_CLIP, DEFAULT_LEARNING_RATE, DEFAULT_MOMENTUM};
use sdmnav::sdm::{read_params, read_sdm_dataset, init_for_dataset, train_encoder, write_params, write_sdm_dataset};
use sdmnav::seed::{derive_seed, Stream};
use sdmnav::TOOL_VERSION;
use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser, Debug)]
#[command(name = "sdmnav", version, about = "Multi-goal audio navigation simulator with Sound Direction Maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an episode dataset (JSON Lines) from scene files.
    GenEpisodes(GenEpisodes),
    /// Run an agent over an episode dataset; writes trajectories and results.
    Run(Run),
    /// Compute SUCCESS/SPL/PROGRESS/PPL from a results file.
    Eval(Eval),
    /// Build a teacher-forced SDM dataset from behavior-policy rollouts.
    MakeSdmDataset(MakeSdmDataset),
    /// Train the SDM encoder; writes a params file and a loss-history CSV.
    TrainSdm(TrainSdm),
    /// Compare the analytic encoder gradient against central differences.
    CheckGradients(CheckGradients),
    /// Render the binaural chunk heard at a pose of an episode to WAV.
    RenderAudio(RenderAudio),
}

#[derive(Args, Debug)]
struct SceneArgs {
    /// Scene files or directories of `*.scene` files.
    #[arg(long, num_args = 1.., required = true)]
    scenes: Vec<PathBuf>,
    /// Sound category library JSON (defaults to the built-in parametric set).
    #[arg(long)]
    library: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenEpisodes {
    #[command(flatten)]
    scenes: SceneArgs,
    /// Goal counts, cycled over episodes (e.g. `1,2,3`).
    #[arg(long, value_delimiter = ',', default_value = "1")]
    n_goals: Vec<usize>,
    #[arg(long)]
    n_episodes: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_agent(s: &str) -> std::result::Result<AgentKind, String> {
    s.parse::<AgentKind>().map_err(|_| {
        let names: Vec<&str> = AgentKind::ALL.iter().map(|k| k.name()).collect();
        format!("unknown agent {s:?}; expected one of {}", names.join(", "))
    })
}

#[derive(Args, Debug)]
struct Run {
    #[command(flatten)]
    scenes: SceneArgs,
    #[arg(long)]
    episodes: PathBuf,
    #[arg(long, value_parser = parse_agent)]
    agent: AgentKind,
    /// Encoder params file (greedy-sdm-learned only).
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trajectory log (JSON Lines).
    #[arg(long)]
    out: PathBuf,
    /// Per-episode results (JSON Lines); defaults to `<out>` with `.results.jsonl`.
    #[arg(long)]
    results: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args, Debug)]
struct Eval {
    #[arg(long, num_args = 1.., required = true)]
    scenes: Vec<PathBuf>,
    /// Results file written by `run`.
    #[arg(long)]
    results: PathBuf,
    /// Method column; defaults to the agent recorded in the results header.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MakeSdmDataset {
    #[command(flatten)]
    scenes: SceneArgs,
    #[arg(long)]
    episodes: PathBuf,
    /// Behavior policy.
    #[arg(long, value_parser = parse_agent, default_value = "random")]
    agent: AgentKind,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    max_samples: usize,
    #[arg(long, default_value_t = 2500)]
    max_steps: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainSdm {
    /// SDM dataset file written by `make-sdm-dataset`.
    #[arg(long)]
    dataset: PathBuf,
    /// Initial params; defaults to a fresh initialization from the seed.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = DEFAULT_LEARNING_RATE)]
    lr: f64,
    #[arg(long, default_value_t = DEFAULT_MOMENTUM)]
    momentum: f64,
    #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
    batch_size: usize,
    #[arg(long, default_value_t = DEFAULT_DROPOUT)]
    dropout: f64,
    /// Clip each minibatch gradient to this global L2 norm (0 disables).
    #[arg(long, default_value_t = DEFAULT_GRAD_CLIP.unwrap_or(0.0))]
    grad_clip: f64,
    /// Params file to write.
    #[arg(long)]
    out: PathBuf,
    /// Loss-history CSV; defaults to `<out>` with `.loss.csv`.
    #[arg(long)]
    loss_history: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckGradients {
    /// Number of seeds (0..seeds, offset by --seed).
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Coordinates checked per parameter tensor.
    #[arg(long, default_value_t = 4)]
    coords: usize,
    #[arg(long, default_value_t = 2)]
    batch: usize,
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    /// Optional CSV report.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RenderAudio {
    #[command(flatten)]
    scenes: SceneArgs,
    #[arg(long)]
    episodes: PathBuf,
    /// Index of the episode in the dataset.
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Listener position; defaults to the episode start.
    #[arg(long)]
    x: Option<f64>,
    #[arg(long)]
    y: Option<f64>,
    /// Listener heading in degrees (multiple of 10); defaults to the start heading.
    #[arg(long)]
    heading: Option<u32>,
    /// Episode time in seconds at the start of the chunk.
    #[arg(long, default_value_t = 0.0)]
    time: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Header written into every output: tool version, command, config and seed.
fn header(command: &str, seed: u64, config: Value) -> Value {
    json!({
        "tool": TOOL_VERSION,
        "command": command,
        "seed": seed,
        "config": config,
    })
}

fn paths_json(paths: &[PathBuf]) -> Value {
    paths.iter().map(|p| p.display().to_string()).collect()
}

fn load_library(path: &Option<PathBuf>) -> Result<Arc<CategoryLibrary>> {
    Ok(Arc::new(match path {
        Some(p) => CategoryLibrary::load(p).with_context(|| format!("loading library {}", p.display()))?,
        None => CategoryLibrary::parametric(SoundSet::Default),
    }))
}

fn load_scenes(paths: &[PathBuf]) -> Result<SceneSet> {
    let set = SceneSet::load(paths).context("loading scenes")?;
    if set.is_empty() {
        bail!("no scenes found");
    }
    Ok(set)
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn load_episodes(path: &Path, scenes: &SceneSet) -> Result<Vec<sdmnav::episode::Episode>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_dataset(&text, scenes)?)
}

fn gen_episodes(a: GenEpisodes) -> Result<()> {
    let scenes = load_scenes(&a.scenes.scenes)?;
    let library = load_library(&a.scenes.library)?;
    let config = GeneratorConfig::new(library.ids());
    let episodes = generate_suite(&scenes, &a.n_goals, a.n_episodes, a.seed, &config)?;
    let h = header(
        "gen-episodes",
        a.seed,
        json!({
            "scenes": paths_json(&a.scenes.scenes),
            "n_goals": a.n_goals,
            "n_episodes": a.n_episodes,
        }),
    );
    write_file(&a.out, write_dataset_with_header(&h, &episodes))?;
    eprintln!("wrote {} episodes to {}", episodes.len(), a.out.display());
    Ok(())
}

fn run(a: Run) -> Result<()> {
    let scenes = load_scenes(&a.scenes.scenes)?;
    let library = load_library(&a.scenes.library)?;
    let episodes = load_episodes(&a.episodes, &scenes)?;
    let params = match (&a.params, a.agent) {
        (Some(p), _) => Some(Arc::new(read_params(&fs::read(p)?)?.0)),
        (None, AgentKind::GreedySdmLearned) => bail!("greedy-sdm-learned requires --params"),
        (None, _) => None,
    };
    let options = RunOptions {
        agent: a.agent,
        seed: a.seed,
        workers: a.workers,
        params,
        keep_trajectory: true,
    };
    let runs = run_suite(&scenes, &library, &episodes, &options)?;
    // The worker count does not influence results, so it is not recorded.
    let h = header(
        "run",
        a.seed,
        json!({
            "scenes": paths_json(&a.scenes.scenes),
            "episodes": a.episodes.display().to_string(),
            "agent": a.agent.name(),
            "params": a.params.as_ref().map(|p| p.display().to_string()),
            "library": a.scenes.library.as_ref().map(|p| p.display().to_string()),
        }),
    );
    write_file(&a.out, trajectory_jsonl(&h, &runs))?;
    let results: Vec<_> = runs.into_iter().map(|r| r.result).collect();
    let results_path = a.results.unwrap_or_else(|| sibling(&a.out, ".results.jsonl"));
    write_file(&results_path, results_jsonl(&h, &results))?;
    let reached = results.iter().filter(|r| r.success).count();
    eprintln!(
        "{}: {} episodes, {} successful; trajectories {}, results {}",
        a.agent,
        results.len(),
        reached,
        a.out.display(),
        results_path.display()
    );
    Ok(())
}

fn eval(a: Eval) -> Result<()> {
    let scenes = load_scenes(&a.scenes)?;
    let text = fs::read_to_string(&a.results).with_context(|| format!("reading {}", a.results.display()))?;
    let (run_header, results) = parse_results(&text)?;
    let method = a
        .method
        .or_else(|| {
            run_header
                .as_ref()
                .and_then(|h| h["config"]["agent"].as_str().map(str::to_owned))
        })
        .unwrap_or_else(|| "unknown".into());
    let rows = report_by_goal_count(&scenes, &results)?;
    let seed = run_header.as_ref().and_then(|h| h["seed"].as_u64()).unwrap_or(0);
    let h = header(
        "eval",
        seed,
        json!({
            "scenes": paths_json(&a.scenes),
            "results": a.results.display().to_string(),
            "method": method,
            "run": run_header,
        }),
    );
    let csv = format!("# {h}\n{}", metrics_csv(&method, &rows));
    if let Some(out) = &a.out {
        write_file(out, &csv)?;
    }
    for (n, m) in &rows {
        println!(
            "{method} n_goals={n} SUCCESS={} SPL={} PROGRESS={} PPL={} N={}",
            m.success, m.spl, m.progress, m.ppl, m.n
        );
    }
    Ok(())
}

fn make_sdm_dataset(a: MakeSdmDataset) -> Result<()> {
    let scenes = load_scenes(&a.scenes.scenes)?;
    let library = load_library(&a.scenes.library)?;
    let episodes = load_episodes(&a.episodes, &scenes)?;
    let ds = make_dataset(
        &scenes,
        &library,
        &episodes,
        &DatasetOptions {
            behavior: a.agent,
            seed: a.seed,
            max_samples: a.max_samples,
            max_steps_per_episode: a.max_steps,
        },
    )?;
    let h = header(
        "make-sdm-dataset",
        a.seed,
        json!({
            "scenes": paths_json(&a.scenes.scenes),
            "episodes": a.episodes.display().to_string(),
            "agent": a.agent.name(),
            "max_samples": a.max_samples,
            "max_steps": a.max_steps,
        }),
    );
    write_file(&a.out, write_sdm_dataset(&ds, h))?;
    eprintln!(
        "wrote {} samples from {} rollouts to {}",
        ds.samples.len(),
        ds.episode_lengths.len(),
        a.out.display()
    );
    Ok(())
}

fn train_sdm(a: TrainSdm) -> Result<()> {
    let (ds, _) = read_sdm_dataset(&fs::read(&a.dataset).with_context(|| format!("reading {}", a.dataset.display()))?)?;
    let init = match &a.params {
        Some(p) => read_params(&fs::read(p)?)?.0,
        None => init_for_dataset(derive_seed(a.seed, Stream::Init, 0), &ds.samples),
    };
    let config = TrainConfig {
        epochs: a.epochs,
        learning_rate: a.lr,
        momentum: a.momentum,
        batch_size: a.batch_size,
        dropout: a.dropout,
        grad_clip: (a.grad_clip > 0.0).then_some(a.grad_clip),
        seed: derive_seed(a.seed, Stream::Training, 0),
    };
    let report = train_encoder(init, &ds.samples, &config)?;
    let h = header(
        "train-sdm",
        a.seed,
        json!({
            "dataset": a.dataset.display().to_string(),
            "init_params": a.params.as_ref().map(|p| p.display().to_string()),
            "epochs": a.epochs,
            "lr": a.lr,
            "momentum": a.momentum,
            "batch_size": a.batch_size,
            "dropout": a.dropout,
            "grad_clip": a.grad_clip,
            "samples": ds.samples.len(),
        }),
    );
    write_file(&a.out, write_params(&report.params, h.clone()))?;
    let mut csv = format!("# {h}\nepoch,loss\n");
    for (k, l) in report.loss_history.iter().enumerate() {
        csv.push_str(&format!("{},{l}\n", k + 1));
    }
    let loss_path = a.loss_history.unwrap_or_else(|| sibling(&a.out, ".loss.csv"));
    write_file(&loss_path, csv)?;
    eprintln!(
        "trained {} epochs; final loss {:?}; params {}",
        a.epochs,
        report.loss_history.last(),
        a.out.display()
    );
    Ok(())
}

fn check_gradients_cmd(a: CheckGradients) -> Result<bool> {
    let mut csv = format!(
        "# {}\nseed,max_relative_error,coordinates,kinks_skipped\n",
        header(
            "check-gradients",
            a.seed,
            json!({"seeds": a.seeds, "coords": a.coords, "batch": a.batch, "tolerance": a.tolerance})
        )
    );
    let mut ok = true;
    for s in a.seed..a.seed + a.seeds {
        let r = check_gradients(s, a.coords, a.batch)?;
        let max = r.max_relative_error();
        ok &= max < a.tolerance;
        println!(
            "seed {s}: max relative error {max:.3e} over {} coordinates ({} kinks skipped) {}",
            r.checks.len(),
            r.kinks_skipped,
            if max < a.tolerance { "ok" } else { "FAIL" }
        );
        csv.push_str(&format!("{s},{max:e},{},{}\n", r.checks.len(), r.kinks_skipped));
    }
    if let Some(out) = &a.out {
        write_file(out, csv)?;
    }
    Ok(ok)
}

fn render_audio(a: RenderAudio) -> Result<()> {
    let scenes = load_scenes(&a.scenes.scenes)?;
    let library = load_library(&a.scenes.library)?;
    let episodes = load_episodes(&a.episodes, &scenes)?;
    let ep = episodes
        .get(a.index)
        .with_context(|| format!("episode index {} out of range ({} episodes)", a.index, episodes.len()))?;
    let grid = scenes.get(&ep.scene_id)?;
    let position = Point::new(a.x.unwrap_or(ep.start_pos.x), a.y.unwrap_or(ep.start_pos.y));
    let heading = match a.heading {
        Some(h) => Heading::new(h).with_context(|| format!("heading {h} is not a multiple of 10 in [0, 360)"))?,
        None => ep.start_heading,
    };
    let sources: Vec<_> = ep
        .goals
        .iter()
        .zip(&ep.playback_offsets)
        .map(|(g, &o)| sdmnav::audio::SourceState {
            position: g.position,
            category: g.category,
            offset_s: o,
            active: true,
        })
        .collect();
    let rendered = render_binaural(grid, &library, Pose::new(position, heading), &sources, a.time)?;
    let energy = compute_spectrogram(&rendered.chunk)?.total_energy();
    write_file(&a.out, export_wav(&rendered.chunk)?)?;
    let h = header(
        "render-audio",
        a.seed,
        json!({
            "scenes": paths_json(&a.scenes.scenes),
            "episodes": a.episodes.display().to_string(),
            "index": a.index,
            "pose": [position.x, position.y, heading.degrees()],
            "time": a.time,
        }),
    );
    let mut sidecar = a.out.clone().into_os_string();
    sidecar.push(".json");
    write_file(Path::new(&sidecar), format!("{}\n", json!({ "header": h })))?;
    eprintln!("wrote {} (spectrogram energy {energy:.3})", a.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::GenEpisodes(a) => gen_episodes(a).map(|_| true),
        Command::Run(a) => run(a).map(|_| true),
        Command::Eval(a) => eval(a).map(|_| true),
        Command::MakeSdmDataset(a) => make_sdm_dataset(a).map(|_| true),
        Command::TrainSdm(a) => train_sdm(a).map(|_| true),
        Command::CheckGradients(a) => check_gradients_cmd(a),
        Command::RenderAudio(a) => render_audio(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
