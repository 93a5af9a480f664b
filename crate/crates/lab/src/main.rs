use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use curio_art::{
    butterfly_circles, code_length_report, face_grid, face_overlay, render_svg, Shape, Style,
};
use curio_core::{History, Predictor};
use curio_lab::{run_experiment, summarize, ExperimentConfig, LabError};

/// Compression-progress curiosity lab.
#[derive(Parser)]
#[command(name = "curio", version, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config.
    Run {
        /// Experiment config file (see `curio defaults`).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the lifetime (number of steps).
        #[arg(long)]
        lifetime: Option<u64>,
        /// Override the replication count.
        #[arg(long)]
        replications: Option<u32>,
    },
    /// Aggregate run directories into CSV (metric,n,mean,stddev,min,max).
    Summarize {
        /// Run directories; incomplete ones are skipped with a warning.
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw the low-complexity pictures.
    Art {
        #[command(subcommand)]
        what: ArtCommand,
    },
    /// Dump stored artefacts as JSON.
    Inspect {
        #[command(subcommand)]
        what: InspectCommand,
    },
    /// Print the default config with every field spelled out.
    Defaults,
}

#[derive(Subcommand)]
enum ArtCommand {
    /// Face construction grid as SVG.
    Face {
        /// Refinement rounds.
        #[arg(long, default_value_t = 0)]
        levels: u32,
        /// Draw only the curated feature lines instead of the whole grid.
        #[arg(long)]
        overlay: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fractal-circle butterfly as SVG.
    Butterfly {
        /// Generations after the two initial circles.
        #[arg(long, default_value_t = 3)]
        depth: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Code-length report of the butterfly as JSON.
    Report {
        #[arg(long, default_value_t = 3)]
        depth: u32,
    },
}

#[derive(Subcommand)]
enum InspectCommand {
    /// Print history steps as JSON lines.
    History {
        file: PathBuf,
        /// Only the last N steps.
        #[arg(long)]
        tail: Option<usize>,
    },
    /// Print a serialized compressor as JSON.
    Predictor { file: PathBuf },
}

fn write_file(path: &Path, text: &str) -> Result<(), LabError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| LabError::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| LabError::io(path, e))
}

fn stdout_line(text: &str) -> Result<(), LabError> {
    let mut out = io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| LabError::io(Path::new("<stdout>"), e))
}

fn json<T: serde::Serialize>(v: &T) -> Result<String, LabError> {
    serde_json::to_string(v).map_err(|e| LabError::Format(e.to_string()))
}

fn execute(cmd: Command) -> Result<(), LabError> {
    match cmd {
        Command::Run {
            config,
            seed,
            out,
            lifetime,
            replications,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(d) = out {
                cfg.output.dir = d;
            }
            if let Some(t) = lifetime {
                cfg.lifetime = t;
            }
            if let Some(r) = replications {
                cfg.replications = r;
            }
            for r in run_experiment(&cfg)? {
                #[derive(serde::Serialize)]
                struct Done<'a> {
                    dir: String,
                    summary: &'a curio_lab::RunSummary,
                }
                stdout_line(&json(&Done {
                    dir: r.dir.display().to_string(),
                    summary: &r.summary,
                })?)?;
            }
        }
        Command::Summarize { dirs, out } => {
            let table = summarize(&dirs)?;
            for w in &table.warnings {
                eprintln!("{}", serde_json::json!({ "warning": w }));
            }
            match out {
                Some(p) => write_file(&p, &table.to_csv())?,
                None => print!("{}", table.to_csv()),
            }
        }
        Command::Art { what } => match what {
            ArtCommand::Face { levels, overlay, out } => {
                let segs = if overlay {
                    face_overlay()?
                } else {
                    face_grid(levels)?.segments
                };
                let shapes: Vec<Shape> = segs.into_iter().map(Shape::Segment).collect();
                write_file(&out, &render_svg(&shapes, &Style::default())?)?;
            }
            ArtCommand::Butterfly { depth, out } => {
                let shapes: Vec<Shape> = butterfly_circles(depth)?.into_iter().map(Shape::Circle).collect();
                write_file(&out, &render_svg(&shapes, &Style::default())?)?;
            }
            ArtCommand::Report { depth } => {
                let shapes: Vec<Shape> = butterfly_circles(depth)?.into_iter().map(Shape::Circle).collect();
                stdout_line(&json(&code_length_report(&shapes))?)?;
            }
        },
        Command::Inspect { what } => match what {
            InspectCommand::History { file, tail } => {
                let f = fs::File::open(&file).map_err(|e| LabError::io(&file, e))?;
                let h = History::read_from(io::BufReader::new(f))
                    .map_err(|e| LabError::Format(format!("{}: {e}", file.display())))?;
                h.write_jsonl(io::stdout().lock(), tail)
                    .map_err(|e| LabError::Format(e.to_string()))?;
            }
            InspectCommand::Predictor { file } => {
                let bytes = fs::read(&file).map_err(|e| LabError::io(&file, e))?;
                let p = Predictor::from_bytes(&bytes)
                    .map_err(|e| LabError::Format(format!("{}: {e}", file.display())))?;
                stdout_line(&json(&serde_json::json!({
                    "model_bits": p.model_bits(),
                    "predictor": p,
                }))?)?;
            }
        },
        Command::Defaults => print!("{}", ExperimentConfig::default().to_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
