//! Read-only JSON service over an artifact directory.
//!
//! | route | response |
//! |---|---|
//! | `GET /discussions` | discussion list |
//! | `GET /discussions/{id}/summaries` | one summary per model |
//! | `GET /discussions/{id}/frames/{frame}/sentences?model=M` | sentences of the clusters filed under a frame |
//! | `GET /discussions/{id}/clusters/{cid}/sentences` | cluster members, most central first |
//! | `GET /discussions/{id}/sentences/{sid}/context?window=W` | a sentence with `W` neighbours on each side |
//!
//! `{frame}` is either the frame name or its slug (`health-and-safety`).
//! Without `model` the frame lists the clusters any model files under it.

pub mod store;

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use serde::Serialize;
use sha2::{Digest, Sha256};
use threadtoc::summary::IndicativeSummary;
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::services::ServeDir;

pub use store::{frame_slug, ArtifactStore, DiscussionData, SentenceView, StoreError};

pub const DEFAULT_WINDOW: usize = 3;

#[derive(Debug, Clone, Default)]
pub struct ServeOptions {
    /// Allowed CORS origin; any origin when unset.
    pub cors_origin: Option<String>,
    /// Built UI assets served for paths outside the API.
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn not_found(message: impl Into<String>) -> Self {
        Self { status: StatusCode::NOT_FOUND, code: "not_found", message: message.into() }
    }

    fn unprocessable(message: impl Into<String>) -> Self {
        Self { status: StatusCode::UNPROCESSABLE_ENTITY, code: "invalid_parameter", message: message.into() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.code, "message": self.message });
        (self.status, axum::Json(body)).into_response()
    }
}

/// JSON body with a content-hash ETag; answers 304 when the client already
/// holds it.
fn cached_json<T: Serialize>(headers: &HeaderMap, value: &T) -> Response {
    let body = serde_json::to_vec(value).expect("responses serialize");
    let etag = format!("\"{}\"", hex::encode(&Sha256::digest(&body)[..16]));
    let cache = HeaderValue::from_static("public, max-age=31536000, immutable");
    let etag_value = HeaderValue::from_str(&etag).expect("hex etag");
    let matches = headers
        .get(header::IF_NONE_MATCH)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.split(',').any(|t| t.trim() == etag || t.trim() == "*"));
    if matches {
        return (StatusCode::NOT_MODIFIED, [(header::ETAG, etag_value), (header::CACHE_CONTROL, cache)]).into_response();
    }
    (
        [
            (header::CONTENT_TYPE, HeaderValue::from_static("application/json")),
            (header::ETAG, etag_value),
            (header::CACHE_CONTROL, cache),
        ],
        body,
    )
        .into_response()
}

type Shared = Arc<ArtifactStore>;

fn discussion<'a>(store: &'a ArtifactStore, id: &str) -> Result<&'a DiscussionData, ApiError> {
    store.discussions.get(id).ok_or_else(|| ApiError::not_found(format!("unknown discussion `{id}`")))
}

fn parse_id(raw: &str, what: &str) -> Result<usize, ApiError> {
    raw.parse().map_err(|_| ApiError::not_found(format!("unknown {what} `{raw}`")))
}

#[derive(Debug, Serialize)]
pub struct DiscussionSummaryRow {
    pub discussion_id: String,
    pub title: String,
    pub sentence_count: usize,
    pub cluster_count: usize,
    pub models: Vec<String>,
    pub artifact_hash: String,
}

async fn list_discussions(State(store): State<Shared>, headers: HeaderMap) -> Response {
    let rows: Vec<DiscussionSummaryRow> = store
        .discussions
        .iter()
        .map(|(id, d)| DiscussionSummaryRow {
            discussion_id: id.clone(),
            title: d.sentences.title.clone(),
            sentence_count: d.sentence_count(),
            cluster_count: d.clusters.clustering.clustering.clusters.len(),
            models: d.summaries.keys().cloned().collect(),
            artifact_hash: d.digest.clone(),
        })
        .collect();
    cached_json(&headers, &rows)
}

#[derive(Debug, Serialize)]
pub struct SummariesResponse<'a> {
    pub discussion_id: &'a str,
    pub summaries: Vec<&'a IndicativeSummary>,
}

async fn summaries(State(store): State<Shared>, UrlPath(id): UrlPath<String>, headers: HeaderMap) -> Result<Response, ApiError> {
    let d = discussion(&store, &id)?;
    Ok(cached_json(&headers, &SummariesResponse { discussion_id: &id, summaries: d.summaries.values().collect() }))
}

#[derive(Debug, Serialize)]
pub struct FrameCluster<'a> {
    pub cluster_id: usize,
    pub size: usize,
    /// Keyed by model id.
    pub labels: BTreeMap<&'a str, &'a str>,
}

#[derive(Debug, Serialize)]
pub struct FrameSentencesResponse<'a> {
    pub discussion_id: &'a str,
    /// The requested model, or null for the union over all models.
    pub model_id: Option<&'a str>,
    pub frame: &'a str,
    /// Largest first.
    pub clusters: Vec<FrameCluster<'a>>,
    pub sentences: Vec<&'a SentenceView>,
}

async fn frame_sentences(
    State(store): State<Shared>,
    UrlPath((id, frame)): UrlPath<(String, String)>,
    Query(query): Query<HashMap<String, String>>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let d = discussion(&store, &id)?;
    let model = query.get("model").map(String::as_str);
    let summaries: Vec<(&str, &IndicativeSummary)> = match model {
        Some(m) => {
            let s = d.summaries.get(m).ok_or_else(|| ApiError::not_found(format!("unknown model `{m}`")))?;
            vec![(m, s)]
        }
        None => d.summaries.iter().map(|(m, s)| (m.as_str(), s)).collect(),
    };
    let wanted = frame_slug(&frame);
    let mut name = None;
    let mut clusters: BTreeMap<usize, FrameCluster> = BTreeMap::new();
    for (m, summary) in summaries {
        let Some(section) = summary.sections.iter().find(|s| s.frame == frame || frame_slug(&s.frame) == wanted) else {
            continue;
        };
        name.get_or_insert(section.frame.as_str());
        for e in &section.entries {
            clusters
                .entry(e.cluster_id)
                .or_insert_with(|| FrameCluster { cluster_id: e.cluster_id, size: e.size, labels: BTreeMap::new() })
                .labels
                .insert(m, &e.label);
        }
    }
    let frame_name = name.ok_or_else(|| ApiError::not_found(format!("no clusters under frame `{frame}`")))?;
    let mut clusters: Vec<FrameCluster> = clusters.into_values().collect();
    clusters.sort_by(|a, b| b.size.cmp(&a.size).then(a.cluster_id.cmp(&b.cluster_id)));
    let mut sentences = Vec::new();
    for c in &clusters {
        let members = d.cluster_members(c.cluster_id).expect("validated at load");
        sentences.extend(members.iter().map(|&s| d.sentence(s).expect("validated at load")));
    }
    Ok(cached_json(
        &headers,
        &FrameSentencesResponse { discussion_id: &id, model_id: model, frame: frame_name, clusters, sentences },
    ))
}

#[derive(Debug, Serialize)]
pub struct ClusterLabelView<'a> {
    pub label: &'a str,
    pub frame: &'a str,
    pub secondary_frame: Option<&'a str>,
}

#[derive(Debug, Serialize)]
pub struct ClusterSentencesResponse<'a> {
    pub discussion_id: &'a str,
    pub cluster_id: usize,
    pub size: usize,
    /// Keyed by model id.
    pub labels: BTreeMap<&'a str, ClusterLabelView<'a>>,
    pub sentences: Vec<&'a SentenceView>,
}

async fn cluster_sentences(
    State(store): State<Shared>,
    UrlPath((id, cid)): UrlPath<(String, String)>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let d = discussion(&store, &id)?;
    let cluster_id = parse_id(&cid, "cluster")?;
    let members = d.cluster_members(cluster_id).ok_or_else(|| ApiError::not_found(format!("unknown cluster `{cid}`")))?;
    let mut labels = BTreeMap::new();
    for (model, s) in &d.summaries {
        for section in &s.sections {
            if let Some(e) = section.entries.iter().find(|e| e.cluster_id == cluster_id) {
                labels.insert(
                    model.as_str(),
                    ClusterLabelView { label: &e.label, frame: &section.frame, secondary_frame: e.secondary_frame.as_deref() },
                );
            }
        }
    }
    let sentences = members.iter().map(|&s| d.sentence(s).expect("validated at load")).collect();
    Ok(cached_json(
        &headers,
        &ClusterSentencesResponse { discussion_id: &id, cluster_id, size: members.len(), labels, sentences },
    ))
}

#[derive(Debug, Serialize)]
pub struct ContextResponse<'a> {
    pub discussion_id: &'a str,
    pub sentence_id: usize,
    pub window: usize,
    pub sentences: &'a [SentenceView],
}

async fn sentence_context(
    State(store): State<Shared>,
    UrlPath((id, sid)): UrlPath<(String, String)>,
    Query(query): Query<HashMap<String, String>>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let d = discussion(&store, &id)?;
    let window = match query.get("window") {
        None => DEFAULT_WINDOW,
        Some(raw) => raw
            .parse::<usize>()
            .map_err(|_| ApiError::unprocessable(format!("`window` must be a non-negative integer, got `{raw}`")))?,
    };
    let sentence_id = parse_id(&sid, "sentence")?;
    let sentences = d.context(sentence_id, window).ok_or_else(|| ApiError::not_found(format!("unknown sentence `{sid}`")))?;
    Ok(cached_json(&headers, &ContextResponse { discussion_id: &id, sentence_id, window, sentences }))
}

pub fn router(store: ArtifactStore, options: &ServeOptions) -> Router {
    let cors = CorsLayer::new()
        .allow_methods([axum::http::Method::GET])
        .allow_headers([header::IF_NONE_MATCH])
        .expose_headers([header::ETAG])
        .allow_origin(match &options.cors_origin {
            Some(o) => AllowOrigin::exact(HeaderValue::from_str(o).unwrap_or_else(|_| HeaderValue::from_static("null"))),
            None => AllowOrigin::any(),
        });
    let api = Router::new()
        .route("/discussions", get(list_discussions))
        .route("/discussions/{id}/summaries", get(summaries))
        .route("/discussions/{id}/frames/{frame}/sentences", get(frame_sentences))
        .route("/discussions/{id}/clusters/{cid}/sentences", get(cluster_sentences))
        .route("/discussions/{id}/sentences/{sid}/context", get(sentence_context))
        .with_state(Arc::new(store));
    let app = match &options.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(|| async { ApiError::not_found("no such route") }),
    };
    app.layer(cors)
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Loads the artifacts and serves until Ctrl-C.
pub async fn serve(artifact_dir: &Path, addr: SocketAddr, options: ServeOptions) -> Result<(), ServeError> {
    let store = ArtifactStore::load(artifact_dir)?;
    log::info!("loaded {} discussions from {}", store.discussions.len(), artifact_dir.display());
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|source| ServeError::Bind { addr, source })?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(store, &options))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
