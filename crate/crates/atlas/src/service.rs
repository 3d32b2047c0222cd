//! Read-only HTTP API over an exported bundle and the embedding matrices.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::extract::{Path as UrlPath, Query as UrlQuery, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use atlas_core::atlas::{encode_points, parse_fields, search, AtlasBundle, AtlasPoint, ColorMode, LegendEntry, Provenance};
use atlas_core::retrieval::{self, retrieve_dual, CosineIndex, DualResult, Query, QueryEmbedder, RetrievalHit, Space};
use atlas_core::topics::Topic;

pub type DualPanels = DualResult;

pub const DEFAULT_PAGE: usize = 10_000;
pub const MAX_PAGE: usize = 100_000;

/// Dual retrieval over whichever indexes are loaded. Errors only when
/// neither space can answer; a single missing space becomes a panel error.
pub fn dual_search(
    query: &Query,
    image: Option<&CosineIndex<f32>>,
    description: Option<&CosineIndex<f32>>,
    embedder: &dyn QueryEmbedder,
) -> anyhow::Result<DualResult> {
    query.validate()?;
    if let (Some(i), Some(d)) = (image, description) {
        return Ok(retrieve_dual(query, i, d, embedder)?);
    }
    let text = query.text();
    let run = |space: Space, index: Option<&CosineIndex<f32>>| -> Result<Vec<RetrievalHit>, String> {
        let index = index.ok_or_else(|| "embedding matrix not loaded".to_string())?;
        let v = embedder.embed_query(space, &text)?;
        retrieval::search(index, &v, query.k.min(index.len()), space).map_err(|e| e.to_string())
    };
    let result = DualResult {
        image_space: run(Space::ImageEmbedding, image),
        description_space: run(Space::DescriptionEmbedding, description),
        query: text,
    };
    if result.image_space.is_err() && result.description_space.is_err() {
        anyhow::bail!("{}", result.warnings().join("; "));
    }
    Ok(result)
}

pub struct AtlasState {
    pub bundle: AtlasBundle,
    points_bin: Vec<u8>,
    positions: std::collections::HashMap<String, usize>,
    image: Option<CosineIndex<f32>>,
    description: Option<CosineIndex<f32>>,
    embedder: Option<Arc<dyn QueryEmbedder>>,
    image_root: Option<PathBuf>,
    default_k: usize,
    template: String,
}

impl AtlasState {
    pub fn new(bundle: AtlasBundle) -> Self {
        let positions = bundle.points.iter().enumerate().map(|(i, p)| (p.record_id.clone(), i)).collect();
        Self {
            points_bin: encode_points(&bundle),
            bundle,
            positions,
            image: None,
            description: None,
            embedder: None,
            image_root: None,
            default_k: retrieval::DEFAULT_K,
            template: retrieval::DEFAULT_TEMPLATE.into(),
        }
    }

    pub fn with_indexes(mut self, image: Option<CosineIndex<f32>>, description: Option<CosineIndex<f32>>) -> Self {
        self.image = image;
        self.description = description;
        self
    }

    pub fn with_embedder(mut self, embedder: Arc<dyn QueryEmbedder>) -> Self {
        self.embedder = Some(embedder);
        self
    }

    /// Relative `image_ref`s resolve against this directory. Without it no
    /// thumbnails are served.
    pub fn with_image_root(mut self, root: impl Into<PathBuf>) -> Self {
        self.image_root = Some(root.into());
        self
    }

    pub fn with_retrieval_defaults(mut self, k: usize, template: impl Into<String>) -> Self {
        self.default_k = k;
        self.template = template.into();
        self
    }

    fn point(&self, id: &str) -> Option<(usize, &AtlasPoint)> {
        self.positions.get(id).map(|&i| (i, &self.bundle.points[i]))
    }

    fn topic_label(&self, topic_id: i64) -> &str {
        self.bundle.topic(topic_id).map(|t| t.label.as_str()).unwrap_or("")
    }

    fn colors(&self, i: usize) -> Vec<u16> {
        self.bundle.color_tables.iter().map(|t| t.indices[i]).collect()
    }

    fn thumb_path(&self, p: &AtlasPoint) -> Option<PathBuf> {
        let r = Path::new(p.image_ref.as_deref()?);
        if r.is_absolute() {
            return Some(r.to_path_buf());
        }
        self.image_root.as_ref().map(|root| root.join(r))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LayerSummary {
    pub layer: usize,
    pub labels: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ColorModeSummary {
    pub mode: ColorMode,
    pub legend: Vec<LegendEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Meta {
    pub format_version: u32,
    pub points: usize,
    pub topics: usize,
    pub noise_points: usize,
    pub color_modes: Vec<ColorModeSummary>,
    pub layers: Vec<LayerSummary>,
    pub label_layers: Vec<atlas_core::atlas::LabelLayer>,
    pub point_record_bytes: usize,
    pub retrieval: BTreeMap<String, bool>,
    pub provenance: Provenance,
}

/// A JSON point: the bundle fields plus color indices in [`ColorMode::ALL`]
/// order, matching the binary stream.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PointJson {
    #[serde(flatten)]
    pub point: AtlasPoint,
    pub colors: Vec<u16>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PointsPage {
    pub offset: usize,
    pub limit: usize,
    pub total: usize,
    pub points: Vec<PointJson>,
}

/// The hover payload.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PointDetail {
    pub record_id: String,
    pub app: String,
    pub app_category: String,
    pub participant_id: String,
    pub topic: String,
    pub topic_id: i64,
    pub description: String,
    pub x: f32,
    pub y: f32,
    pub has_image: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SearchResponse {
    pub q: String,
    pub fields: Vec<String>,
    pub record_ids: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RetrieveRequest {
    pub query: String,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default = "yes")]
    pub template: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RetrieveResponse {
    pub query: String,
    pub image_space: Vec<RetrievalHit>,
    pub description_space: Vec<RetrievalHit>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ErrorBody {
    pub error: String,
}

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(ErrorBody { error: msg.into() })).into_response()
}

type Shared = State<Arc<AtlasState>>;

#[derive(Debug, Deserialize)]
struct PageParams {
    offset: Option<String>,
    limit: Option<String>,
}

#[derive(Debug, Deserialize)]
struct SearchParams {
    q: Option<String>,
    fields: Option<String>,
}

fn parse_usize(name: &str, v: Option<&str>, default: usize) -> Result<usize, Response> {
    match v {
        None => Ok(default),
        Some(s) => s.trim().parse().map_err(|_| error(StatusCode::BAD_REQUEST, format!("{name} must be a non-negative integer, got {s:?}"))),
    }
}

async fn meta(State(s): Shared) -> Json<Meta> {
    let b = &s.bundle;
    Json(Meta {
        format_version: b.format_version,
        points: b.points.len(),
        topics: b.topics.iter().filter(|t| t.topic_id >= 0).count(),
        noise_points: b.points.iter().filter(|p| p.topic_id < 0).count(),
        color_modes: b.color_tables.iter().map(|t| ColorModeSummary { mode: t.mode, legend: t.legend.clone() }).collect(),
        layers: b.label_layers.iter().map(|l| LayerSummary { layer: l.layer, labels: l.labels.len() }).collect(),
        label_layers: b.label_layers.clone(),
        point_record_bytes: atlas_core::atlas::POINT_RECORD_BYTES,
        retrieval: BTreeMap::from([
            ("image_embedding".to_string(), s.image.is_some()),
            ("description_embedding".to_string(), s.description.is_some()),
            ("query_embedder".to_string(), s.embedder.is_some()),
        ]),
        provenance: b.provenance.clone(),
    })
}

async fn points(State(s): Shared, UrlQuery(p): UrlQuery<PageParams>) -> Response {
    let offset = match parse_usize("offset", p.offset.as_deref(), 0) {
        Ok(v) => v,
        Err(r) => return r,
    };
    let limit = match parse_usize("limit", p.limit.as_deref(), DEFAULT_PAGE) {
        Ok(v) => v,
        Err(r) => return r,
    };
    if limit == 0 || limit > MAX_PAGE {
        return error(StatusCode::BAD_REQUEST, format!("limit must be in 1..={MAX_PAGE}"));
    }
    let total = s.bundle.points.len();
    let start = offset.min(total);
    let end = start.saturating_add(limit).min(total);
    let points = (start..end).map(|i| PointJson { point: s.bundle.points[i].clone(), colors: s.colors(i) }).collect();
    Json(PointsPage { offset, limit, total, points }).into_response()
}

async fn points_bin(State(s): Shared) -> Response {
    ([(header::CONTENT_TYPE, "application/octet-stream")], Body::from(s.points_bin.clone())).into_response()
}

async fn topics(State(s): Shared) -> Json<Vec<Topic>> {
    Json(s.bundle.topics.clone())
}

async fn topic(State(s): Shared, UrlPath(id): UrlPath<String>) -> Response {
    let Ok(id) = id.parse::<i64>() else {
        return error(StatusCode::BAD_REQUEST, format!("topic id must be an integer, got {id:?}"));
    };
    match s.bundle.topic(id) {
        Some(t) => Json(t.clone()).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("unknown topic {id}")),
    }
}

async fn point(State(s): Shared, UrlPath(id): UrlPath<String>) -> Response {
    let Some((_, p)) = s.point(&id) else {
        return error(StatusCode::NOT_FOUND, format!("unknown record {id}"));
    };
    Json(PointDetail {
        record_id: p.record_id.clone(),
        app: p.app_name.clone(),
        app_category: p.app_category.clone(),
        participant_id: p.participant_id.clone(),
        topic: s.topic_label(p.topic_id).to_owned(),
        topic_id: p.topic_id,
        description: p.description_snippet.clone(),
        x: p.x,
        y: p.y,
        has_image: p.image_ref.is_some(),
    })
    .into_response()
}

async fn search_points(State(s): Shared, UrlQuery(p): UrlQuery<SearchParams>) -> Response {
    let q = p.q.unwrap_or_default();
    if q.trim().is_empty() {
        return error(StatusCode::BAD_REQUEST, "q must be non-empty");
    }
    let fields = match parse_fields(p.fields.as_deref().unwrap_or("")) {
        Ok(f) => f,
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    let record_ids = search(&s.bundle, &q, &fields);
    Json(SearchResponse { q, fields: fields.iter().map(ToString::to_string).collect(), record_ids }).into_response()
}

async fn retrieve(State(s): Shared, body: Result<Json<RetrieveRequest>, axum::extract::rejection::JsonRejection>) -> Response {
    let Json(req) = match body {
        Ok(b) => b,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.body_text()),
    };
    let query = Query {
        raw: req.query,
        template: req.template.then(|| s.template.clone()),
        k: req.k.unwrap_or(s.default_k),
    };
    if let Err(e) = query.validate() {
        return error(StatusCode::BAD_REQUEST, e.to_string());
    }
    let Some(embedder) = s.embedder.clone() else {
        return error(StatusCode::SERVICE_UNAVAILABLE, "no model gateway configured for query embedding");
    };
    if s.image.is_none() && s.description.is_none() {
        return error(StatusCode::SERVICE_UNAVAILABLE, "no embedding matrices loaded");
    }
    let state = s.clone();
    let joined = tokio::task::spawn_blocking(move || dual_search(&query, state.image.as_ref(), state.description.as_ref(), embedder.as_ref())).await;
    match joined {
        Ok(Ok(r)) => {
            let warnings = r.warnings();
            Json(RetrieveResponse {
                query: r.query,
                image_space: r.image_space.unwrap_or_default(),
                description_space: r.description_space.unwrap_or_default(),
                warnings,
            })
            .into_response()
        }
        Ok(Err(e)) => error(StatusCode::SERVICE_UNAVAILABLE, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("webp") => "image/webp",
        Some("gif") => "image/gif",
        Some("svg") => "image/svg+xml",
        _ => "application/octet-stream",
    }
}

async fn thumb(State(s): Shared, UrlPath(id): UrlPath<String>) -> Response {
    let Some((_, p)) = s.point(&id) else {
        return error(StatusCode::NOT_FOUND, format!("unknown record {id}"));
    };
    let Some(path) = s.thumb_path(p) else {
        return error(StatusCode::NOT_FOUND, format!("no image for {id}"));
    };
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(_) => error(StatusCode::NOT_FOUND, format!("no image for {id}")),
    }
}

async fn health() -> &'static str {
    "ok"
}

pub fn router(state: Arc<AtlasState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/atlas/meta", get(meta))
        .route("/atlas/points", get(points))
        .route("/atlas/points.bin", get(points_bin))
        .route("/topics", get(topics))
        .route("/topics/{id}", get(topic))
        .route("/point/{id}", get(point))
        .route("/search", get(search_points))
        .route("/retrieve", post(retrieve))
        .route("/thumb/{id}", get(thumb))
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(state: AtlasState, bind: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    log::info!("serving atlas on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
