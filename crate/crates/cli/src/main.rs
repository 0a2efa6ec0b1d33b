use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fpqe_cli::config::{EnhanceStage, PipelineConfig};
use fpqe_cli::error::CliError;
use fpqe_cli::pipeline::{self, EnhanceJob, Step};
use fpqe_cli::{synth, table};
use fpqe_core::eval::DatasetSpec;

#[derive(Parser)]
#[command(name = "fpqe", version, about = "Quality-adaptive fingerprint enhancement")]
struct Cli {
    /// TOML pipeline configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for clustering initialisation and synthetic data.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract the 11 quality features of every image into a CSV.
    Features {
        #[arg(long)]
        images: Option<PathBuf>,
        #[arg(long, default_value = "features.csv")]
        out: PathBuf,
    },
    /// ANOVA and Tukey HSD feature selection against a labels CSV.
    Select {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value = "selection.json")]
        out: PathBuf,
    },
    /// Fit a fuzzy c-means quality model or apply an existing one.
    #[command(subcommand)]
    Cluster(ClusterCommand),
    /// Enhance images with QAP, QAP then Gabor, or Gabor alone.
    Enhance(EnhanceArgs),
    /// Equal error rate from a score file or by matching an image directory.
    Eval(EvalArgs),
    /// Generate a synthetic corpus named `{subject}_{impression}.png` plus labels.csv.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        subjects: usize,
        #[arg(long, default_value_t = 5)]
        impressions: usize,
        #[arg(long, default_value_t = 192)]
        size: usize,
    },
    /// Full pipeline: features, selection, clustering, enhancement and evaluation.
    Run(RunArgs),
}

#[derive(Subcommand)]
enum ClusterCommand {
    /// Fit on a features CSV and write the model and assignments. Repeating
    /// `--features` fits one model jointly over several datasets.
    Fit {
        #[arg(long, required = true)]
        features: Vec<PathBuf>,
        #[arg(long, default_value = "model.json")]
        model: PathBuf,
        #[arg(long, default_value = "assignments.csv")]
        assignments: PathBuf,
    },
    /// Assign images with a saved model.
    Apply {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "assignments.csv")]
        assignments: PathBuf,
    },
}

#[derive(Args)]
struct EnhanceArgs {
    #[arg(long)]
    images: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// qap, qap+gabor or gabor.
    #[arg(long)]
    stage: Option<EnhanceStage>,
    /// Assignments CSV from `cluster`.
    #[arg(long, conflicts_with = "model")]
    assignments: Option<PathBuf>,
    /// Cluster model; features are extracted and assigned inline.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Write the per-image QAP parameters (label, m, R, A) to this CSV.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write per-block orientation and frequency fields into this directory.
    #[arg(long)]
    fields_dump: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Score CSV with columns type,probe,gallery,score.
    #[arg(long, conflicts_with_all = ["images", "matcher"], required_unless_present = "images")]
    scores: Option<PathBuf>,
    /// Directory of `{subject}_{impression}` images to match.
    #[arg(long)]
    images: Option<PathBuf>,
    /// External matcher template containing {a} and {b}; built-in correlation when absent.
    #[arg(long)]
    matcher: Option<String>,
    #[arg(long, requires = "impressions")]
    subjects: Option<usize>,
    #[arg(long, requires = "subjects")]
    impressions: Option<usize>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    stage: Option<EnhanceStage>,
    /// Also match the enhanced images and report the EER.
    #[arg(long)]
    eval: bool,
    #[arg(long)]
    matcher: Option<String>,
    /// Restart at this step, reading earlier artifacts from the output directory.
    #[arg(long, value_enum, default_value = "features")]
    from: Step,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.clustering.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::Features { images, out } => {
            let dir = images.unwrap_or(cfg.paths.input_dir.clone());
            let rows = pipeline::extract_features(&dir, &cfg.feature_config(), cfg.jobs)?;
            table::write_features(&out, &rows)?;
            println!("{} images -> {}", rows.len(), out.display());
        }
        Command::Select {
            features,
            labels,
            alpha,
            out,
        } => {
            let rows = table::read_features(&features)?;
            let report = pipeline::select(&rows, &labels, alpha.unwrap_or(cfg.alpha))?;
            pipeline::write_json(&out, &report)?;
            println!("kept features {:?} -> {}", report.kept, out.display());
        }
        Command::Cluster(ClusterCommand::Fit {
            features,
            model,
            assignments,
        }) => {
            let mut rows = Vec::new();
            for path in &features {
                rows.extend(table::read_features(path)?);
            }
            let fitted = pipeline::fit_model(&rows, &cfg.clustering.fcm_params())?;
            std::fs::write(&model, fitted.to_json() + "\n").map_err(|e| CliError::input(model.display(), e))?;
            table::write_assignments(&assignments, &pipeline::assign(&fitted, &rows))?;
            println!("model -> {}, assignments -> {}", model.display(), assignments.display());
        }
        Command::Cluster(ClusterCommand::Apply {
            features,
            model,
            assignments,
        }) => {
            let rows = table::read_features(&features)?;
            let model = pipeline::read_model(&model)?;
            table::write_assignments(&assignments, &pipeline::assign(&model, &rows))?;
            println!("{} assignments -> {}", rows.len(), assignments.display());
        }
        Command::Enhance(args) => enhance(args, &mut cfg)?,
        Command::Eval(args) => eval(args, &cfg)?,
        Command::Synth {
            out,
            subjects,
            impressions,
            size,
        } => {
            let labels = synth::write_corpus(&out, subjects, impressions, size, cfg.clustering.seed, cfg.jobs)?;
            println!("{} images -> {}", labels.len(), out.display());
        }
        Command::Run(args) => {
            if let Some(p) = args.input {
                cfg.paths.input_dir = p;
            }
            if let Some(p) = args.output {
                cfg.paths.output_dir = p;
            }
            if args.labels.is_some() {
                cfg.paths.labels = args.labels;
            }
            if let Some(s) = args.stage {
                cfg.stage = s;
            }
            cfg.eval.enabled |= args.eval || args.matcher.is_some();
            if args.matcher.is_some() {
                cfg.eval.matcher = args.matcher;
            }
            let written = pipeline::pipeline_run(&cfg, args.from)?;
            for path in written {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn enhance(args: EnhanceArgs, cfg: &mut PipelineConfig) -> Result<(), CliError> {
    let dir = args.images.unwrap_or(cfg.paths.input_dir.clone());
    if let Some(s) = args.stage {
        cfg.stage = s;
    }
    let assignments = match (&args.assignments, &args.model) {
        (Some(path), _) => Some(table::read_assignments(path)?),
        (None, Some(model)) => {
            let model = pipeline::read_model(model)?;
            let rows = pipeline::extract_features(&dir, &cfg.feature_config(), cfg.jobs)?;
            Some(pipeline::assign(&model, &rows))
        }
        (None, None) => None,
    };
    let report = pipeline::enhance(&EnhanceJob {
        image_dir: &dir,
        out_dir: &args.out,
        stage: cfg.stage,
        assignments: assignments.as_deref(),
        qap: &cfg.qap,
        var_threshold: cfg.var_threshold,
        fields_dir: args.fields_dump.as_deref(),
        jobs: cfg.jobs,
    })?;
    if let Some(path) = &args.report {
        table::write_qap_report(path, &report)?;
    }
    println!("stage {} -> {}", cfg.stage, args.out.display());
    Ok(())
}

fn eval(args: EvalArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let report = match (&args.scores, &args.images) {
        (Some(scores), _) => pipeline::evaluate_scores(scores, &args.out)?,
        (None, Some(images)) => {
            let spec = match (args.subjects, args.impressions) {
                (Some(s), Some(i)) => Some(DatasetSpec::new(s, i)?),
                _ => None,
            };
            let matcher = args.matcher.as_deref().or(cfg.eval.matcher.as_deref());
            let evaluation = pipeline::evaluate_images(images, spec, matcher, cfg.eval.max_shift, cfg.jobs)?;
            pipeline::write_evaluation(&evaluation, &args.out)?;
            evaluation.report
        }
        (None, None) => return Err(CliError::Input("eval needs --scores or --images".into())),
    };
    println!(
        "EER {:.4} at threshold {} ({} genuine, {} impostor, {} failures) -> {}",
        report.eer,
        report.threshold,
        report.genuine_count,
        report.impostor_count,
        report.failures,
        Path::new(&args.out).join(pipeline::EVAL_JSON).display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("{}", e.json_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
