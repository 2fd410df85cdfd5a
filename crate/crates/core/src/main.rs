//! Pipeline CLI: stage-by-stage execution over a run directory, with
//! mandatory review checkpoints and cross-run reporting.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ontoforge::pipeline::{
    build_backend, create_run, emit_report, export_review, import_review, open_run, resume,
    run_stage, PipelineConfig, Stage, StageError,
};

#[derive(Parser)]
#[command(
    name = "ontoforge",
    about = "Construct a domain ontology and knowledge graphs from a text corpus with an LLM backend",
    version
)]
struct Cli {
    /// Directory holding all runs.
    #[arg(long, global = true, default_value = "runs")]
    runs_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create (or reopen) a run and ingest the corpus.
    Ingest {
        /// Pipeline config JSON.
        #[arg(long)]
        config: PathBuf,
        /// Run identifier; generated from the current time when absent.
        #[arg(long)]
        run: Option<String>,
    },
    /// Generate competency questions and export the review file.
    Gencq {
        #[arg(long)]
        run: String,
    },
    /// Re-export the editable review file.
    ReviewExport {
        #[arg(long)]
        run: String,
        /// Write to this path instead of the run's cqs/review.tsv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Import the human-reviewed question file, resolving the checkpoint.
    ReviewImport {
        #[arg(long)]
        run: String,
        /// Read from this path instead of the run's cqs/review.tsv.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Extract concepts and build the normalized ontology.
    Ontology {
        #[arg(long)]
        run: String,
    },
    /// Answer every reviewed question against every document.
    Answer {
        #[arg(long)]
        run: String,
    },
    /// Build, repair, validate, and link the per-document knowledge graphs.
    Buildkg {
        #[arg(long)]
        run: String,
    },
    /// Judge answers against ground truth and verify knowledge-graph
    /// individuals.
    Evaluate {
        #[arg(long)]
        run: String,
        /// Ground-truth TSV (cq_id<TAB>doc_id<TAB>label<TAB>text); copied
        /// into the run directory.
        #[arg(long)]
        ground_truth: Option<PathBuf>,
    },
    /// Emit the cross-run document-by-combination matrix.
    Report {
        /// Comma-separated run ids.
        #[arg(long, value_delimiter = ',')]
        runs: Vec<String>,
        /// Output directory for report.csv / report.md / report.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild the manifest from artifacts and show stage statuses.
    Resume {
        #[arg(long)]
        run: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn stage_by_name(
    runs_dir: &std::path::Path,
    run: &str,
    stage: Stage,
) -> Result<(), StageError> {
    let (paths, config, _manifest) = open_run(runs_dir, run)?;
    let backend = build_backend(&config, &paths)?;
    run_stage(&paths, &config, stage, backend.as_ref())?;
    println!("stage {stage} done for run {run}");
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), StageError> {
    match cli.command {
        Command::Ingest { config, run } => {
            let config = PipelineConfig::load(&config)?;
            let run_id = run.unwrap_or_else(|| {
                format!("run-{}", chrono::Utc::now().format("%Y%m%d-%H%M%S"))
            });
            let paths = create_run(&cli.runs_dir, &run_id, &config)?;
            let backend = build_backend(&config, &paths)?;
            run_stage(&paths, &config, Stage::Ingest, backend.as_ref())?;
            println!("run {run_id} created; corpus ingested");
            Ok(())
        }
        Command::Gencq { run } => {
            let (paths, config, _) = open_run(&cli.runs_dir, &run)?;
            let backend = build_backend(&config, &paths)?;
            run_stage(&paths, &config, Stage::Gencq, backend.as_ref())?;
            println!(
                "questions generated; review {} and run review-import",
                paths.review_file().display()
            );
            Ok(())
        }
        Command::ReviewExport { run, out } => {
            let (paths, _, _) = open_run(&cli.runs_dir, &run)?;
            export_review(&paths, out.as_deref())?;
            println!("review file exported");
            Ok(())
        }
        Command::ReviewImport { run, file } => {
            let (paths, _, _) = open_run(&cli.runs_dir, &run)?;
            let reviewed = import_review(&paths, file.as_deref())?;
            println!(
                "imported {} questions (review round {})",
                reviewed.len(),
                reviewed.review_round
            );
            Ok(())
        }
        Command::Ontology { run } => stage_by_name(&cli.runs_dir, &run, Stage::Ontology),
        Command::Answer { run } => stage_by_name(&cli.runs_dir, &run, Stage::Answer),
        Command::Buildkg { run } => stage_by_name(&cli.runs_dir, &run, Stage::Buildkg),
        Command::Evaluate { run, ground_truth } => {
            let (paths, config, _) = open_run(&cli.runs_dir, &run)?;
            if let Some(source) = ground_truth {
                let body = std::fs::read(&source).map_err(|e| StageError::Io {
                    path: source.display().to_string(),
                    message: e.to_string(),
                })?;
                ontoforge::util::atomic_write(&paths.ground_truth(), &body).map_err(|e| {
                    StageError::Io {
                        path: paths.ground_truth().display().to_string(),
                        message: e.to_string(),
                    }
                })?;
            }
            let backend = build_backend(&config, &paths)?;
            run_stage(&paths, &config, Stage::Evaluate, backend.as_ref())?;
            println!("evaluation complete for run {run}");
            Ok(())
        }
        Command::Report { runs, out } => {
            if runs.is_empty() {
                return Err(StageError::MissingArtifact {
                    run_id: "<none>".into(),
                    what: "at least one --runs id".into(),
                });
            }
            let out_dir = out.unwrap_or_else(|| cli.runs_dir.join("report"));
            let report = emit_report(&cli.runs_dir, &runs, &out_dir)?;
            print!("{}", ontoforge::pipeline::render_markdown(&report));
            println!("written to {}", out_dir.display());
            Ok(())
        }
        Command::Resume { run } => {
            let manifest = resume(&cli.runs_dir, &run)?;
            for (stage, state) in &manifest.stages {
                println!("{stage}\t{:?}", state.status);
            }
            match manifest.next_runnable() {
                Some(stage) => println!("next runnable stage: {stage}"),
                None => println!("run complete; no runnable stages"),
            }
            Ok(())
        }
    }
}
