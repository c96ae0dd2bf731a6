use std::path::{Path, PathBuf};

use threadtoc::bootstrap::{export_review, import_review};
use threadtoc::cluster::ReducerKind;
use threadtoc::embed::{EmbeddingMatrix, HashingProvider};
use threadtoc::ingest::Discussion;
use threadtoc::llm::{MockBackend, RecordingBackend, ReplayBackend};
use threadtoc::metafilter::PriorMode;
use threadtoc::pipeline::{
    read_embeddings, read_json, run, run_with, BackendKind, ClustersArtifact, Layout, PipelineConfig, PipelineError,
    SentencesArtifact,
};
use threadtoc::summary::IndicativeSummary;

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

fn sample() -> Discussion {
    Discussion::from_path(fixture("sample/sample.json")).unwrap()
}

#[test]
fn sample_run_is_deterministic() {
    let cfg = PipelineConfig { seed: 7, ..PipelineConfig::default() };
    let a = run(&sample(), &cfg).unwrap();
    let b = run(&sample(), &cfg).unwrap();
    assert_eq!(a.summary.to_json(), b.summary.to_json());
    assert_eq!(a.summary.to_markdown(), b.summary.to_markdown());
    assert!(a.summary.entry_count() > 0);
}

#[test]
fn different_seeds_change_only_seeded_fields() {
    let a = run(&sample(), &PipelineConfig { seed: 1, ..PipelineConfig::default() }).unwrap();
    let b = run(&sample(), &PipelineConfig { seed: 2, ..PipelineConfig::default() }).unwrap();
    assert_eq!(a.sentences, b.sentences);
    assert_ne!(a.filter.config.seed, b.filter.config.seed);
}

#[test]
fn sample_filtered_fraction_matches_golden() {
    let golden: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("sample/filtered_fraction.json")).unwrap()).unwrap();
    let cfg = PipelineConfig { seed: golden["seed"].as_u64().unwrap(), ..PipelineConfig::default() };
    let a = run(&sample(), &cfg).unwrap();
    assert_eq!(a.filter.verdict.omitted_count() as u64, golden["omitted"].as_u64().unwrap());
    assert_eq!(a.filter.verdict.discussion_size as u64, golden["discussion_size"].as_u64().unwrap());
    assert!((a.filter.filtered_fraction - golden["filtered_fraction"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn noise_replies_are_dropped_before_segmentation() {
    let a = run(&sample(), &PipelineConfig::default()).unwrap();
    assert_eq!(a.sentences.removed_replies, ["c40", "c41"]);
    assert!(a.sentences.units.iter().all(|u| u.reply_id != "c40" && u.reply_id != "c41"));
    assert!(a.sentences.units.iter().enumerate().all(|(i, u)| u.sentence_id == i));
}

#[test]
fn clustered_ids_are_the_kept_sentences() {
    let a = run(&sample(), &PipelineConfig::default()).unwrap();
    let kept = &a.clusters.sentence_ids;
    assert_eq!(kept.len(), a.clusters.clustering.clustering.assignments.len());
    assert_eq!(kept.len() + a.filter.verdict.omitted_count(), a.sentences.units.len());
    assert!(kept.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(a.clusters.clustering.config.regression_input, kept.len());
}

#[test]
fn artifacts_round_trip_through_the_layout() {
    let dir = tempfile::tempdir().unwrap();
    let layout = Layout::new(dir.path());
    let a = run(&sample(), &PipelineConfig::default()).unwrap();
    a.write(&layout).unwrap();
    let id = "t3_housing_cmv";
    let sentences: SentencesArtifact = read_json(&layout.sentences(id)).unwrap();
    assert_eq!(sentences, a.sentences);
    let clusters: ClustersArtifact = read_json(&layout.clusters(id)).unwrap();
    assert_eq!(clusters, a.clusters);
    let emb = read_embeddings(&layout.embeddings(id)).unwrap();
    assert_eq!(emb, a.embeddings);
    let model = layout.model(id, "mock");
    let summary = IndicativeSummary::from_json(&std::fs::read_to_string(model.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary, a.summary);
    let md = std::fs::read_to_string(model.join("summary.md")).unwrap();
    assert_eq!(IndicativeSummary::from_markdown(&md).unwrap(), a.summary);
}

#[test]
fn recorded_transcript_replays_to_the_same_summary() {
    let cfg = PipelineConfig::default();
    let provider = HashingProvider::new(cfg.embed.dim);
    let mock = MockBackend::default();
    let recorder = RecordingBackend::new(&mock);
    let live = run_with(&sample(), &cfg, &provider, &provider, &recorder).unwrap();
    let replay = ReplayBackend::from_jsonl(&recorder.to_jsonl()).unwrap();
    assert_eq!(replay.len(), live.labels.labels.len() + live.frames.assignments.len());
    let cfg = PipelineConfig {
        backend: threadtoc::pipeline::BackendConfig { model: "mock".into(), ..Default::default() },
        ..cfg
    };
    let replayed = run_with(&sample(), &cfg, &provider, &provider, &replay).unwrap();
    assert_eq!(replayed.summary.to_json(), live.summary.to_json());
}

#[test]
fn config_parses_from_toml_with_defaults() {
    let cfg = PipelineConfig::from_toml(
        "seed = 9\n[metafilter]\ntheta = 0.5\nprior_mode = \"as_written\"\n[cluster]\nreducer = \"pca\"\n[labeling]\ntop_k = 5\n",
    )
    .unwrap();
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.metafilter.theta, 0.5);
    assert_eq!(cfg.metafilter.prior_mode, PriorMode::AsWritten);
    assert_eq!(cfg.cluster.reducer, ReducerKind::Pca);
    assert_eq!(cfg.labeling.top_k, Some(5));
    assert_eq!(cfg.labeling.template, "gpt35");
    assert_eq!(cfg.backend.kind, BackendKind::Mock);
    assert!(matches!(PipelineConfig::from_toml("sead = 1\n"), Err(PipelineError::Config(_))));
}

#[test]
fn missing_replay_transcript_is_a_config_error() {
    let cfg = PipelineConfig {
        backend: threadtoc::pipeline::BackendConfig { kind: BackendKind::Replay, ..Default::default() },
        ..PipelineConfig::default()
    };
    assert!(matches!(run(&sample(), &cfg), Err(PipelineError::Config(_))));
}

#[test]
fn hundred_sentence_sidecar_records_min_cluster_size_six() {
    let emb = read_embeddings(&fixture("embeddings/hundred.txt")).unwrap();
    assert_eq!(emb.len(), 100);
    let cfg = PipelineConfig::default();
    let run = cfg.cluster.pipeline(cfg.seed).run(&emb, emb.len()).unwrap();
    assert_eq!(run.meta.min_cluster_size, 6);
    assert!(run.clustering.clusters.iter().all(|c| c.member_ids.len() >= 6));
}

#[test]
fn bootstrap_export_then_import_collects_marked_clusters() {
    let texts: Vec<String> = (0..60)
        .map(|i| match i % 3 {
            0 => format!("Thanks for the reply number {}.", i % 2),
            1 => format!("Zoning reform {} lets builders add more homes near transit.", i % 2),
            _ => format!("Rent control {} caps yearly increases for sitting tenants.", i % 2),
        })
        .collect();
    let provider = HashingProvider::new(64);
    let rows = texts.iter().map(|t| provider.embed_text(t)).collect();
    let emb = EmbeddingMatrix::from_rows(rows).unwrap();
    let cfg = PipelineConfig::default();
    let mut pipeline = cfg.cluster.pipeline(cfg.seed);
    pipeline.reducer = ReducerKind::Pca;
    pipeline.min_cluster_size = Some(5);
    let mut review = export_review(&texts, &emb, &pipeline).unwrap();
    assert_eq!(review.corpus_size, 60);
    let clustered: usize = review.clusters.iter().map(|c| c.size).sum();
    assert_eq!(clustered + review.noise, 60);
    assert!(review.clusters.windows(2).all(|w| w[0].size >= w[1].size));
    assert!(import_review(&review, "review").unwrap().is_empty());
    for c in &mut review.clusters {
        c.meta = c.sentences.iter().all(|s| s.starts_with("Thanks"));
    }
    let json = serde_json::to_string(&review).unwrap();
    let list = import_review(&serde_json::from_str(&json).unwrap(), "review").unwrap();
    assert!(list.sentences.iter().all(|s| s.starts_with("Thanks")));
    assert!(list.len() <= 2);
}
