use std::net::SocketAddr;
use std::path::Path;

use thiserror::Error;
use threadtoc::bootstrap::{export_review, import_review, BootstrapError, ReviewFile};
use threadtoc::cluster::{rank_by_centrality, ClusteringArtifact};
use threadtoc::eval::{
    accuracy_report, concordance_by_item, label_quality_report, read_jsonl, rrf_fuse, validate_references, EvalError,
    FramePrediction, LabelPrediction, PreferenceRanking, ReferenceSample, RRF_K,
};
use threadtoc::framing::{FrameInventory, FramesArtifact, FramingError};
use threadtoc::ingest::{Discussion, NoisePatterns};
use threadtoc::labeling::{LabelingError, LabelsArtifact};
use threadtoc::llm::{Backend, Catalog, RecordingBackend};
use threadtoc::metafilter::MetaError;
use threadtoc::pipeline::{
    self, read_embeddings, read_json, write_json, write_text, ClustersArtifact, EmbeddingsInfo, Layout,
    PipelineConfig, PipelineError, SentencesArtifact,
};
use threadtoc::summary::IndicativeSummary;
use threadtoc_explorer::{ServeError, ServeOptions};

use crate::{Bootstrap, Cli, Command, Target};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Bootstrap(#[from] BootstrapError),
    #[error(transparent)]
    Serve(#[from] ServeError),
    #[error(transparent)]
    Config(#[from] MetaError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Pipeline(PipelineError::Config(_)) | CliError::Config(_) | CliError::Usage(_) => "config",
            CliError::Pipeline(PipelineError::Io { .. } | PipelineError::Json { .. }) => "io",
            CliError::Pipeline(
                PipelineError::Llm(_)
                | PipelineError::Labeling(LabelingError::Llm(_))
                | PipelineError::Framing(FramingError::Llm(_)),
            ) => "llm",
            CliError::Pipeline(_) => "pipeline",
            CliError::Eval(_) => "eval",
            CliError::Bootstrap(_) => "bootstrap",
            CliError::Serve(_) => "serve",
        }
    }
}

fn io_err(e: impl Into<PipelineError>) -> CliError {
    CliError::Pipeline(e.into())
}

/// Discussion ids present in an artifact directory, sorted.
fn discussion_ids(dir: &Path) -> Result<Vec<String>, CliError> {
    let layout = Layout::new(dir);
    let entries = std::fs::read_dir(dir).map_err(|source| io_err(PipelineError::Io { path: dir.to_path_buf(), source }))?;
    let mut ids: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().to_str().map(str::to_string))
        .filter(|id| layout.sentences(id).is_file())
        .collect();
    ids.sort();
    Ok(ids)
}

fn resolve(target: &Target) -> Result<(Layout, String), CliError> {
    let layout = Layout::new(&target.dir);
    let id = match &target.id {
        Some(id) => id.clone(),
        None => {
            let ids = discussion_ids(&target.dir)?;
            match <[String; 1]>::try_from(ids) {
                Ok([id]) => id,
                Err(ids) => {
                    return Err(CliError::Usage(format!(
                        "{} holds {} discussions; pass --id",
                        target.dir.display(),
                        ids.len()
                    )))
                }
            }
        }
    };
    Ok((layout, id))
}

/// Wraps the configured backend in a recorder when `--record` is set and
/// writes the transcript after `f` succeeds.
fn with_backend<T>(
    cfg: &PipelineConfig,
    record: Option<&Path>,
    f: impl FnOnce(&dyn Backend) -> Result<T, CliError>,
) -> Result<T, CliError> {
    let backend = cfg.backend()?;
    match record {
        None => f(backend.as_ref()),
        Some(path) => {
            let recorder = RecordingBackend::new(backend.as_ref());
            let out = f(&recorder)?;
            write_text(path, &recorder.to_jsonl())?;
            Ok(out)
        }
    }
}

fn print_path(path: &Path) {
    println!("{}", path.display());
}

fn output(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => write_text(path, text).map_err(io_err),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn model_id(cfg: &PipelineConfig) -> Result<String, CliError> {
    Ok(cfg.model_id(cfg.backend()?.as_ref()))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = cli.overrides.config()?;
    let record = cli.overrides.record.as_deref();
    match cli.command {
        Command::Ingest { input, dir } => {
            let discussion = Discussion::from_path(&input).map_err(io_err)?;
            let sentences = pipeline::ingest(&discussion, &NoisePatterns::bundled());
            let layout = Layout::new(dir);
            let path = layout.sentences(&sentences.discussion_id);
            write_json(&path, &sentences)?;
            print_path(&path);
        }
        Command::Embed(target) => {
            let (layout, id) = resolve(&target)?;
            let sentences: SentencesArtifact = read_json(&layout.sentences(&id))?;
            let provider = cfg.provider()?;
            let emb = pipeline::embed(&sentences.units, provider.as_ref(), &cfg)?;
            write_text(&layout.embeddings(&id), &threadtoc::embed::write_sidecar(&emb))?;
            write_json(&layout.embeddings_info(&id), &EmbeddingsInfo::new(&id, provider.model_id(), &emb))?;
            print_path(&layout.embeddings(&id));
        }
        Command::Cluster { input: Some(input), out, .. } => {
            let emb = read_embeddings(&input)?;
            let run = cfg.cluster.pipeline(cfg.seed).run(&emb, emb.len()).map_err(io_err)?;
            let mut config = run.meta;
            config.embedding_model = input.display().to_string();
            let artifact = ClusteringArtifact { config, clustering: rank_by_centrality(run.clustering) };
            let out = out.expect("clap requires --out with --input");
            write_json(&out, &artifact)?;
            print_path(&out);
        }
        Command::Cluster { input: None, target, .. } => {
            let (layout, id) = resolve(&target)?;
            let sentences: SentencesArtifact = read_json(&layout.sentences(&id))?;
            let emb = read_embeddings(&layout.embeddings(&id))?;
            let info: EmbeddingsInfo = read_json(&layout.embeddings_info(&id))?;
            let clusters = pipeline::cluster(&sentences, &emb, &info.embedding_model, &cfg)?;
            write_json(&layout.clusters(&id), &clusters)?;
            print_path(&layout.clusters(&id));
        }
        Command::Filter(target) => {
            let (layout, id) = resolve(&target)?;
            let sentences: SentencesArtifact = read_json(&layout.sentences(&id))?;
            let emb = read_embeddings(&layout.embeddings(&id))?;
            let info: EmbeddingsInfo = read_json(&layout.embeddings_info(&id))?;
            let meta = cfg.meta_list()?;
            let meta_emb = pipeline::embed_meta(&meta, cfg.meta_provider()?.as_ref(), &cfg)?;
            let (audit, clusters) = pipeline::filter(&sentences, &emb, &meta, &meta_emb, &info.embedding_model, &cfg)?;
            write_json(&layout.filter(&id), &audit)?;
            write_json(&layout.clusters(&id), &clusters)?;
            print_path(&layout.clusters(&id));
        }
        Command::Label(target) => {
            let (layout, id) = resolve(&target)?;
            let sentences: SentencesArtifact = read_json(&layout.sentences(&id))?;
            let clusters: ClustersArtifact = read_json(&layout.clusters(&id))?;
            let model = model_id(&cfg)?;
            let labeler = cfg.labeler(Catalog::bundled(), &model)?;
            let labels = with_backend(&cfg, record, |b| {
                Ok(pipeline::label(&sentences, &clusters, &labeler, b, cfg.max_in_flight)?)
            })?;
            let path = layout.model(&id, &model).join("labels.json");
            write_json(&path, &labels)?;
            print_path(&path);
        }
        Command::Frame(target) => {
            let (layout, id) = resolve(&target)?;
            let model = model_id(&cfg)?;
            let labels: LabelsArtifact = read_json(&layout.model(&id, &model).join("labels.json"))?;
            let framer = cfg.framer(FrameInventory::bundled(), Catalog::bundled(), &model);
            let frames = with_backend(&cfg, record, |b| Ok(pipeline::frame(&labels, &framer, b, cfg.max_in_flight)?))?;
            let path = layout.model(&id, &model).join("frames.json");
            write_json(&path, &frames)?;
            print_path(&path);
        }
        Command::Summarize { target, format } => {
            let (layout, id) = resolve(&target)?;
            let model = model_id(&cfg)?;
            let dir = layout.model(&id, &model);
            let labels: LabelsArtifact = read_json(&dir.join("labels.json"))?;
            let frames: FramesArtifact = read_json(&dir.join("frames.json"))?;
            let clusters: ClustersArtifact = read_json(&layout.clusters(&id))?;
            let summary = pipeline::summarize(&labels, &frames, &clusters)?;
            write_text(&dir.join("summary.json"), &summary.to_json())?;
            write_text(&dir.join("summary.md"), &summary.to_markdown())?;
            print_summary(&summary, &format)?;
        }
        Command::Eval { pred, reference, labels, k, rankings, format, out } => {
            let text = eval(pred.as_deref(), reference.as_deref(), labels, k, rankings.as_deref(), &format)?;
            output(&text, out.as_deref())?;
        }
        Command::BootstrapMeta(Bootstrap::Export { dir, out }) => {
            let layout = Layout::new(&dir);
            let mut texts = Vec::new();
            let mut emb: Option<threadtoc::embed::EmbeddingMatrix> = None;
            for id in discussion_ids(&dir)? {
                let sentences: SentencesArtifact = read_json(&layout.sentences(&id))?;
                let e = read_embeddings(&layout.embeddings(&id))?;
                texts.extend(sentences.units.into_iter().map(|u| u.text));
                emb = Some(match emb {
                    None => e,
                    Some(acc) => acc.vstack(&e).map_err(io_err)?,
                });
            }
            let emb = emb.ok_or_else(|| CliError::Usage(format!("no embedded discussions under {}", dir.display())))?;
            let review = export_review(&texts, &emb, &cfg.cluster.pipeline(cfg.seed))?;
            write_json(&out, &review)?;
            print_path(&out);
        }
        Command::BootstrapMeta(Bootstrap::Import { review, out }) => {
            let file: ReviewFile = read_json(&review)?;
            let list = import_review(&file, &review.display().to_string())?;
            write_text(&out, &list.to_text())?;
            print_path(&out);
        }
        Command::Serve { dir, port, host, static_dir, cors_origin } => {
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Serve(ServeError::Io(e)))?;
            let options = ServeOptions { cors_origin, static_dir };
            runtime.block_on(threadtoc_explorer::serve(&dir, SocketAddr::new(host, port), options))?;
        }
        Command::Pipeline { input, dir } => {
            let discussion = Discussion::from_path(&input).map_err(io_err)?;
            let provider = cfg.provider()?;
            let meta_provider = cfg.meta_provider()?;
            let artifacts = with_backend(&cfg, record, |b| {
                Ok(pipeline::run_with(&discussion, &cfg, provider.as_ref(), meta_provider.as_ref(), b)?)
            })?;
            let layout = Layout::new(&dir);
            artifacts.write(&layout)?;
            print_path(&layout.model(&discussion.id, &artifacts.labels.model_id).join("summary.json"));
        }
    }
    Ok(())
}

fn print_summary(summary: &IndicativeSummary, format: &str) -> Result<(), CliError> {
    match format {
        "markdown" | "md" => print!("{}", summary.to_markdown()),
        "json" => print!("{}", summary.to_json()),
        other => return Err(CliError::Usage(format!("unknown format `{other}`"))),
    }
    Ok(())
}

fn eval(
    pred: Option<&Path>,
    reference: Option<&Path>,
    labels: bool,
    k: usize,
    rankings: Option<&Path>,
    format: &str,
) -> Result<String, CliError> {
    if !matches!(format, "csv" | "json") {
        return Err(CliError::Usage(format!("unknown format `{format}`")));
    }
    if let Some(path) = rankings {
        let rankings: Vec<PreferenceRanking> = read_jsonl(path)?;
        let fused = rrf_fuse(&rankings, RRF_K)?;
        let w = concordance_by_item(&rankings)?;
        let mean = w.values().sum::<f64>() / w.len() as f64;
        if format == "json" {
            let body = serde_json::json!({ "rrf": fused, "kendalls_w": w, "mean_kendalls_w": mean });
            return Ok(serde_json::to_string_pretty(&body).expect("json") + "\n");
        }
        let mut out = String::from("model,rrf\n");
        for f in &fused {
            out.push_str(&format!("{},{:.6}\n", f.model_id, f.score));
        }
        return Ok(out);
    }
    let (pred, reference) = match (pred, reference) {
        (Some(p), Some(r)) => (p, r),
        _ => return Err(CliError::Usage("eval needs --pred and --ref, or --rankings".into())),
    };
    let references: Vec<ReferenceSample> = read_jsonl(reference)?;
    if labels {
        let predictions: Vec<LabelPrediction> = read_jsonl(pred)?;
        let report = label_quality_report(&predictions, &references)?;
        return Ok(if format == "csv" { report.to_csv()? } else { report.to_json() });
    }
    validate_references(&references, &FrameInventory::bundled())?;
    let predictions: Vec<FramePrediction> = read_jsonl(pred)?;
    let report = accuracy_report(&predictions, &references, k)?;
    Ok(if format == "csv" { report.to_csv()? } else { report.to_json() })
}

