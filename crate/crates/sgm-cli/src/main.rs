//! `sgm`: replay detection traces through the semantic graph memory engine,
//! render graphs and maps from snapshots, and evaluate imitation loss.
//!
//! Every command is deterministic given its arguments and input files. Set
//! `VSGM_LOG` (standard `env_logger` syntax) for diagnostics on stderr.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sgm_core::config::{GlobalMode, RunConfig};
use sgm_core::engine::{Engine, StepOutput};
use sgm_core::error::{Error, Result};
use sgm_core::export;
use sgm_core::feature_bank::FeatureBank;
use sgm_core::heads::{action_name, ACTION_NAMES};
use sgm_core::semantic_graphs::{parse_relation_kb, SemanticGraph};
use sgm_core::trace::Trace;
use sgm_core::weights::WeightSet;

pub const REPORT_FORMAT: &str = "sgm-report";
pub const REPORT_VERSION: u32 = 1;

#[derive(Parser)]
#[command(
    name = "sgm",
    version,
    about = "Semantic graph memory engine over recorded detection traces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a trace; write report.json, per-step snapshots, and renders.
    Replay(ReplayArgs),
    /// Render graphs, the map, or embeddings from a snapshot.
    Export(ExportArgs),
    /// Evaluate the imitation loss of a labeled trace; print loss JSON.
    Loss(LossArgs),
    /// Print the action vocabulary as a canonical JSON list.
    Actions,
}

/// Config file plus the flags that override its fields.
#[derive(Args)]
struct ConfigArgs {
    /// Run configuration JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured weight seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the global-graph dedup threshold.
    #[arg(long)]
    threshold: Option<f64>,
    /// Override the global update mode (cosine | jaccard).
    #[arg(long, value_parser = parse_global_mode)]
    global_mode: Option<GlobalMode>,
}

#[derive(Args)]
struct ReplayArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Detection trace (JSON Lines).
    #[arg(long)]
    trace: PathBuf,
    /// Output directory for report, snapshots, and renders.
    #[arg(long)]
    out_dir: PathBuf,
    /// Resume from a snapshot instead of starting at step 0.
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Engine snapshot to render from.
    #[arg(long)]
    snapshot: PathBuf,
    /// What to render.
    #[arg(long)]
    target: ExportTarget,
    /// Output format; graphs take dot|json, map takes pgm|json,
    /// embeddings take json.
    #[arg(long)]
    format: ExportFormat,
    /// Output directory.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct LossArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Detection trace (JSON Lines) with expert labels on every frame.
    #[arg(long)]
    trace: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportTarget {
    Prior,
    Current,
    Global,
    Map,
    Embeddings,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Dot,
    Json,
    Pgm,
}

fn parse_global_mode(s: &str) -> std::result::Result<GlobalMode, String> {
    GlobalMode::from_str(s).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("VSGM_LOG"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Replay(args) => cmd_replay(&args),
        Command::Export(args) => cmd_export(&args),
        Command::Loss(args) => cmd_loss(&args),
        Command::Actions => cmd_actions(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::FAILURE
        }
    }
}

/// Everything a command needs: effective config, its digest, vocabulary,
/// relation knowledge base, and weight material.
struct Setup {
    config: RunConfig,
    digest: String,
    bank: FeatureBank,
    kb: Vec<(usize, usize)>,
    weights: WeightSet,
}

fn load_setup(args: &ConfigArgs) -> Result<Setup> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(threshold) = args.threshold {
        config.threshold = threshold;
    }
    if let Some(mode) = args.global_mode {
        config.global_mode = mode;
    }
    config.validate()?;
    // The digest covers the effective config, overrides included, so every
    // artifact names exactly the settings that produced it.
    let digest = config.digest();

    let class_file = require_path(&config.class_file, "class_file")?;
    let embedding_file = require_path(&config.embedding_file, "embedding_file")?;
    let (bank, warnings) = FeatureBank::load(class_file, embedding_file)?;
    for warning in warnings {
        log::warn!("{warning}");
    }
    let kb = match &config.relation_file {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_relation_kb(&text)?
        }
        None => Vec::new(),
    };
    let weights = match &config.weights_file {
        Some(path) => WeightSet::load(path, &config)?,
        None => WeightSet::generate(&config, config.seed),
    };
    log::info!("config digest {digest}");
    Ok(Setup {
        config,
        digest,
        bank,
        kb,
        weights,
    })
}

fn require_path<'a>(path: &'a Option<PathBuf>, field: &str) -> Result<&'a Path> {
    path.as_deref().ok_or_else(|| Error::InvalidConfig {
        message: format!("config must set {field}"),
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn step_record(out: &StepOutput) -> serde_json::Value {
    serde_json::json!({
        "step": out.step,
        "t": out.t,
        "current_nodes": out.current_nodes,
        "current_edges": out.current_edges,
        "global_nodes": out.global_nodes,
        "global_edges": out.global_edges,
        "map_cells": out.occupied_cells,
        "action": out.action,
        "action_name": action_name(out.action),
        "object": out.object,
        "loss": out.loss.as_ref().map(|l| {
            serde_json::json!({
                "action_term": l.action_term,
                "object_term": l.object_term,
                "total": l.total,
            })
        }),
        "digests": {
            "current": out.digests.current,
            "global": out.digests.global,
            "map": out.digests.map,
            "embedding": out.digests.embedding,
        },
    })
}

fn loss_summary(outputs: &[StepOutput]) -> Option<serde_json::Value> {
    let mut per_step = Vec::with_capacity(outputs.len());
    let (mut action_term, mut object_term) = (0.0f64, 0.0f64);
    for out in outputs {
        let loss = out.loss.as_ref()?;
        action_term += loss.action_term;
        object_term += loss.object_term;
        per_step.push(serde_json::json!({
            "step": out.step,
            "t": out.t,
            "action_term": loss.action_term,
            "object_term": loss.object_term,
            "total": loss.total,
        }));
    }
    Some(serde_json::json!({
        "total": action_term + object_term,
        "action_term": action_term,
        "object_term": object_term,
        "per_step": per_step,
    }))
}

fn cmd_replay(args: &ReplayArgs) -> Result<()> {
    let setup = load_setup(&args.config)?;
    let (trace, depths) = Trace::load(&args.trace)?;
    let Setup {
        config,
        digest,
        bank,
        kb,
        weights,
    } = setup;

    let mut engine = match &args.resume {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Engine::resume(config, bank, &kb, weights, &text, &digest)?
        }
        None => Engine::new(config, bank, &kb, weights)?,
    };
    let start_step = engine.state().step_index;
    if start_step > trace.frames.len() {
        return Err(Error::parse(
            "resume",
            format!(
                "snapshot is at step {start_step} but the trace has only {} frames",
                trace.frames.len()
            ),
        ));
    }

    let snap_dir = args.out_dir.join("snapshots");
    fs::create_dir_all(&snap_dir).map_err(|e| Error::io(&snap_dir, e))?;

    let provenance = export::provenance_comment(&engine.weights().provenance, &digest);
    let mut outputs = Vec::with_capacity(trace.frames.len() - start_step);
    for (i, frame) in trace.frames.iter().enumerate().skip(start_step) {
        let out = engine.step(frame, &depths[i])?;
        log::info!(
            "step {} t={} action={} global={} cells={}",
            out.step,
            out.t,
            action_name(out.action),
            out.global_nodes,
            out.occupied_cells
        );
        let snap_path = snap_dir.join(format!("step_{:04}.json", engine.state().step_index));
        write_file(&snap_path, engine.snapshot_json(&digest).as_bytes())?;
        outputs.push(out);
    }

    let mut report = serde_json::json!({
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "config_digest": digest,
        "weights": engine.weights().provenance,
        "trace_frames": trace.frames.len(),
        "start_step": start_step,
        "steps": outputs.iter().map(step_record).collect::<Vec<_>>(),
    });
    if trace.has_expert {
        if let Some(summary) = loss_summary(&outputs) {
            report["loss"] = summary;
        }
    }
    write_file(&args.out_dir.join("report.json"), report.to_string().as_bytes())?;

    write_renders(&args.out_dir.join("renders"), &engine, &provenance)?;
    println!(
        "replayed {} steps into {}",
        outputs.len(),
        args.out_dir.display()
    );
    Ok(())
}

/// Final-state renders for a replay: the global graph, the flattened map,
/// the occupancy dump, and the four readout embeddings.
fn write_renders(dir: &Path, engine: &Engine, provenance: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let state = engine.state();
    write_file(
        &dir.join("global.json"),
        export::graph_to_json(&state.global, provenance).to_string().as_bytes(),
    )?;
    write_file(
        &dir.join("global.dot"),
        export::graph_to_dot(&state.global, engine.bank(), provenance)?.as_bytes(),
    )?;
    write_file(
        &dir.join("map_flat.pgm"),
        &export::map_flat_pgm(&state.map, provenance),
    )?;
    write_file(
        &dir.join("map.json"),
        export::map_cells_json(&state.map, provenance).to_string().as_bytes(),
    )?;
    if let Some(lang) = &state.last_lang {
        let (_, roles) = engine.embed_state(
            state.prev_current.as_ref(),
            &state.global,
            &state.map,
            lang,
        )?;
        let mut entries = vec![export::embedding_json("prior", &roles.prior, provenance)];
        if let Some(e) = &roles.current {
            entries.push(export::embedding_json("current", e, provenance));
        }
        if let Some(e) = &roles.global {
            entries.push(export::embedding_json("global", e, provenance));
        }
        entries.push(export::embedding_json("map", &roles.map, provenance));
        write_file(
            &dir.join("embeddings.json"),
            serde_json::Value::Array(entries).to_string().as_bytes(),
        )?;
    }
    Ok(())
}

fn cmd_export(args: &ExportArgs) -> Result<()> {
    let setup = load_setup(&args.config)?;
    let text = fs::read_to_string(&args.snapshot).map_err(|e| Error::io(&args.snapshot, e))?;
    let Setup {
        config,
        digest,
        bank,
        kb,
        weights,
    } = setup;
    let engine = Engine::resume(config, bank, &kb, weights, &text, &digest)?;
    let provenance = export::provenance_comment(&engine.weights().provenance, &digest);
    fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;

    let unsupported = |target: &str, allowed: &str| {
        Err(Error::InvalidConfig {
            message: format!("{target} renders as {allowed}"),
        })
    };
    let write_graph = |name: &str, graph: &SemanticGraph| -> Result<()> {
        match args.format {
            ExportFormat::Dot => write_file(
                &args.out_dir.join(format!("{name}.dot")),
                export::graph_to_dot(graph, engine.bank(), &provenance)?.as_bytes(),
            ),
            ExportFormat::Json => write_file(
                &args.out_dir.join(format!("{name}.json")),
                export::graph_to_json(graph, &provenance).to_string().as_bytes(),
            ),
            ExportFormat::Pgm => unsupported("graphs", "dot or json"),
        }
    };

    let state = engine.state();
    match args.target {
        ExportTarget::Prior => write_graph("prior", engine.prior())?,
        ExportTarget::Global => write_graph("global", &state.global)?,
        ExportTarget::Current => match &state.prev_current {
            Some(graph) => write_graph("current", graph)?,
            None => {
                return Err(Error::InvalidConfig {
                    message: "snapshot predates any frame; it holds no current graph".into(),
                })
            }
        },
        ExportTarget::Map => match args.format {
            ExportFormat::Pgm => {
                for layer in 0..state.map.layers() {
                    write_file(
                        &args.out_dir.join(format!("layer_{layer:03}.pgm")),
                        &export::map_layer_pgm(&state.map, layer, &provenance),
                    )?;
                }
                write_file(
                    &args.out_dir.join("map_flat.pgm"),
                    &export::map_flat_pgm(&state.map, &provenance),
                )?;
            }
            ExportFormat::Json => write_file(
                &args.out_dir.join("map.json"),
                export::map_cells_json(&state.map, &provenance).to_string().as_bytes(),
            )?,
            ExportFormat::Dot => return unsupported("the map", "pgm or json"),
        },
        ExportTarget::Embeddings => match args.format {
            ExportFormat::Json => {
                let lang = state.last_lang.as_ref().ok_or_else(|| Error::InvalidConfig {
                    message: "snapshot predates any frame; it holds no language context".into(),
                })?;
                let (_, roles) = engine.embed_state(
                    state.prev_current.as_ref(),
                    &state.global,
                    &state.map,
                    lang,
                )?;
                let mut entries =
                    vec![export::embedding_json("prior", &roles.prior, &provenance)];
                if let Some(e) = &roles.current {
                    entries.push(export::embedding_json("current", e, &provenance));
                }
                if let Some(e) = &roles.global {
                    entries.push(export::embedding_json("global", e, &provenance));
                }
                entries.push(export::embedding_json("map", &roles.map, &provenance));
                write_file(
                    &args.out_dir.join("embeddings.json"),
                    serde_json::Value::Array(entries).to_string().as_bytes(),
                )?;
            }
            _ => return unsupported("embeddings", "json"),
        },
    }
    println!("exported to {}", args.out_dir.display());
    Ok(())
}

fn cmd_loss(args: &LossArgs) -> Result<()> {
    let setup = load_setup(&args.config)?;
    let (trace, depths) = Trace::load(&args.trace)?;
    if !trace.has_expert {
        return Err(Error::MissingExpertLabels);
    }
    let Setup {
        config,
        digest: _,
        bank,
        kb,
        weights,
    } = setup;
    let mut engine = Engine::new(config, bank, &kb, weights)?;
    let outputs = engine.run(&trace.frames, &depths)?;
    let summary = loss_summary(&outputs).expect("labels checked above");
    println!("{summary}");
    Ok(())
}

fn cmd_actions() -> Result<()> {
    println!(
        "{}",
        serde_json::to_string(&ACTION_NAMES).expect("action names serialize")
    );
    Ok(())
}
