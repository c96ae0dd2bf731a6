//! `threadtoc` command-line driver. Each stage reads the artifacts of the
//! stage before it from the artifact directory and writes its own; failures
//! are reported as one JSON object on stderr.

mod commands;

use std::net::IpAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use threadtoc::framing::FrameSetting;
use threadtoc::metafilter::{PriorMode, SampleRule};
use threadtoc::pipeline::{BackendKind, PipelineConfig};

#[derive(Debug, Parser)]
#[command(name = "threadtoc", version, about = "Indicative table-of-contents summaries for forum discussions")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

fn parse_enum<T: DeserializeOwned>(raw: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(raw.replace('-', "_"))).map_err(|e| e.to_string())
}

/// Settings layered over the config file.
#[derive(Debug, Args, Default)]
struct Overrides {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Meta-cluster posterior threshold.
    #[arg(long, global = true)]
    theta: Option<f64>,
    /// normalized | as-written
    #[arg(long, global = true, value_parser = parse_enum::<PriorMode>)]
    prior_mode: Option<PriorMode>,
    /// max-as-written | min-alternative
    #[arg(long, global = true, value_parser = parse_enum::<SampleRule>)]
    sample_rule: Option<SampleRule>,
    /// Most central sentences per labeling prompt.
    #[arg(long, global = true)]
    top_k: Option<usize>,
    /// Character budget of the labeling prompt's sentence block.
    #[arg(long, global = true)]
    char_budget: Option<usize>,
    /// Labeling template id.
    #[arg(long, global = true)]
    template: Option<String>,
    /// zero-shot-labels | zero-shot-short | zero-shot-full | few-shot
    #[arg(long, global = true, value_parser = parse_enum::<FrameSetting>)]
    frame_setting: Option<FrameSetting>,
    /// Ask for a supporting citation in framing answers.
    #[arg(long, global = true, overrides_with = "no_cite")]
    cite: bool,
    #[arg(long, global = true, overrides_with = "cite")]
    no_cite: bool,
    /// mock | replay | http
    #[arg(long, global = true, value_parser = parse_enum::<BackendKind>)]
    backend: Option<BackendKind>,
    /// Transcript for the replay backend.
    #[arg(long, global = true)]
    transcript: Option<PathBuf>,
    /// Model name for the HTTP backend and the artifact model id.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Write every prompt and answer of this run to a replay transcript.
    #[arg(long, global = true)]
    record: Option<PathBuf>,
    /// Meta-sentence list file.
    #[arg(long, global = true)]
    meta_list: Option<PathBuf>,
}

impl Overrides {
    fn config(&self) -> Result<PipelineConfig, commands::CliError> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::from_path(path)?,
            None => PipelineConfig::default(),
        };
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value.clone() {
                    $field = v;
                }
            };
        }
        set!(cfg.seed, self.seed);
        set!(cfg.metafilter.theta, self.theta);
        set!(cfg.metafilter.prior_mode, self.prior_mode);
        set!(cfg.metafilter.sample_rule, self.sample_rule);
        set!(cfg.labeling.template, self.template);
        set!(cfg.framing.setting, self.frame_setting);
        set!(cfg.backend.kind, self.backend);
        set!(cfg.backend.model, self.model);
        if self.top_k.is_some() {
            cfg.labeling.top_k = self.top_k;
        }
        if self.char_budget.is_some() {
            cfg.labeling.char_budget = self.char_budget;
        }
        if self.transcript.is_some() {
            cfg.backend.transcript = self.transcript.clone();
        }
        if self.meta_list.is_some() {
            cfg.meta_list = self.meta_list.clone();
        }
        if self.cite {
            cfg.framing.include_citation = true;
        }
        if self.no_cite {
            cfg.framing.include_citation = false;
        }
        cfg.metafilter.validate()?;
        Ok(cfg)
    }
}

/// Where a stage finds its discussion.
#[derive(Debug, Args)]
struct Target {
    /// Artifact directory.
    #[arg(long, default_value = "artifacts")]
    dir: PathBuf,
    /// Discussion id; may be omitted when the directory holds one discussion.
    #[arg(long)]
    id: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Drop noise replies and segment a discussion into sentences.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "artifacts")]
        dir: PathBuf,
    },
    /// Embed the segmented sentences.
    Embed(Target),
    /// Cluster sentence embeddings without meta filtering.
    Cluster {
        /// Embedding sidecar to cluster directly instead of an artifact directory.
        #[arg(long, requires = "out")]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        target: Target,
    },
    /// Remove meta-sentence clusters and cluster the remaining sentences.
    Filter(Target),
    /// Label every cluster.
    Label(Target),
    /// Assign frames to every cluster label.
    Frame(Target),
    /// Assemble and print the indicative summary.
    Summarize {
        #[command(flatten)]
        target: Target,
        /// Printed format: markdown or json.
        #[arg(long, default_value = "markdown")]
        format: String,
    },
    /// Score predictions against references.
    Eval {
        /// Frame or label predictions (JSONL).
        #[arg(long, requires = "reference")]
        pred: Option<PathBuf>,
        /// Reference samples (JSONL).
        #[arg(long = "ref")]
        reference: Option<PathBuf>,
        /// Score labels with ROUGE instead of frames with top-k accuracy.
        #[arg(long)]
        labels: bool,
        /// Frames counted per prediction.
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Preference rankings (JSONL) to fuse and test for concordance.
        #[arg(long, conflicts_with_all = ["pred", "labels"])]
        rankings: Option<PathBuf>,
        /// csv or json.
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a meta-sentence list from reviewed corpus clusters.
    #[command(subcommand, name = "bootstrap-meta")]
    BootstrapMeta(Bootstrap),
    /// Serve the artifact directory over HTTP.
    Serve {
        #[arg(long, default_value = "artifacts")]
        dir: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long)]
        static_dir: Option<PathBuf>,
        #[arg(long)]
        cors_origin: Option<String>,
    },
    /// Run every stage on one discussion.
    Pipeline {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "artifacts")]
        dir: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum Bootstrap {
    /// Cluster the sentences of every discussion in the directory into a review file.
    Export {
        #[arg(long, default_value = "artifacts")]
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Collect the clusters marked `meta` into a meta-sentence list.
    Import {
        #[arg(long)]
        review: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn report(err: &dyn std::fmt::Display, kind: &str) {
    eprintln!("{}", serde_json::json!({ "error": kind, "message": err.to_string() }));
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report(&e.render(), "usage");
            return ExitCode::from(2);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e, e.kind());
            ExitCode::FAILURE
        }
    }
}
