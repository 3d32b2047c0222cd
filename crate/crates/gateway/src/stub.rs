//! Deterministic stand-in for the model endpoints. Embeddings are signed
//! hashed bags of words, descriptions are templated from the `<title>` of
//! SVG images, and chat labels are built from the keywords in the prompt.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use atlas_core::topics::{english_stopwords, tokenize, EXAMPLE_LABEL};

use crate::config::{CHAT_PATH, DESCRIPTION_PATH, IMAGE_EMBEDDING_PATH, TEXT_EMBEDDING_PATH};

/// Images whose bytes contain this marker get a `null` description.
pub const FAIL_MARKER: &[u8] = b"data-stub-fail";

#[derive(Debug, Clone, PartialEq)]
pub struct StubConfig {
    pub image_dim: usize,
    pub text_dim: usize,
    /// The first this many requests are answered with HTTP 429.
    pub fail_first: usize,
    /// Chat prompts whose keywords include this word get the few-shot
    /// example label back.
    pub echo_keyword: Option<String>,
    /// Chat prompts longer than this many characters get HTTP 413.
    pub context_chars: usize,
}

impl Default for StubConfig {
    fn default() -> Self {
        Self {
            image_dim: 768,
            text_dim: 1024,
            fail_first: 0,
            echo_keyword: None,
            context_chars: 4096 * 4,
        }
    }
}

/// Title text of an SVG image, if any.
pub fn svg_title(bytes: &[u8]) -> Option<String> {
    let text = std::str::from_utf8(bytes).ok()?;
    let start = text.find("<title>")? + "<title>".len();
    let end = start + text[start..].find("</title>")?;
    let title = text[start..end].trim();
    (!title.is_empty()).then(|| unescape(title))
}

fn unescape(s: &str) -> String {
    s.replace("&lt;", "<").replace("&gt;", ">").replace("&quot;", "\"").replace("&apos;", "'").replace("&amp;", "&")
}

fn digest(bytes: &[u8]) -> [u8; 32] {
    Sha256::digest(bytes).into()
}

/// Unit vector with one signed count per hashed content word; texts without
/// content words hash as a whole.
pub fn hashed_embedding(text: &str, dim: usize, salt: &str) -> Vec<f32> {
    let mut v = vec![0.0f32; dim];
    let mut tokens = tokenize(text, true, english_stopwords());
    if tokens.is_empty() {
        tokens.push(text.to_owned());
    }
    for t in tokens {
        let h = digest(format!("{salt}\u{1f}{t}").as_bytes());
        let idx = (u64::from_le_bytes(h[..8].try_into().unwrap()) % dim as u64) as usize;
        v[idx] += if h[8] & 1 == 0 { 1.0 } else { -1.0 };
    }
    let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
    if norm == 0.0 {
        // every token cancelled out
        v[0] = 1.0;
    } else {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Text the stub "sees" in an image.
pub fn image_text(bytes: &[u8]) -> String {
    svg_title(bytes).unwrap_or_else(|| format!("image {}", hex::encode(&digest(bytes)[..6])))
}

pub fn stub_description(bytes: &[u8]) -> Option<String> {
    if bytes.windows(FAIL_MARKER.len()).any(|w| w == FAIL_MARKER) {
        return None;
    }
    Some(match svg_title(bytes) {
        Some(t) => format!("The screenshot displays {t}."),
        None => format!("The screenshot displays an unrecognized image ({}).", &image_text(bytes)[6..]),
    })
}

/// Keywords listed in a labeling prompt.
pub fn prompt_keywords(prompt: &str) -> Vec<String> {
    const MARK: &str = "following keywords: '";
    let Some(start) = prompt.rfind(MARK).map(|p| p + MARK.len()) else {
        return Vec::new();
    };
    let rest = &prompt[start..];
    let end = rest.find("'.").unwrap_or(rest.len());
    rest[..end].split(',').map(|k| k.trim().to_owned()).filter(|k| !k.is_empty()).collect()
}

/// Label built from the first two keywords, e.g. `Betting and odds`.
pub fn stub_label(keywords: &[String]) -> String {
    let mut words = keywords.iter().take(2);
    let first = words.next().map(String::as_str).unwrap_or("misc");
    let mut label: String = first.chars().next().map(|c| c.to_uppercase().chain(first.chars().skip(1)).collect()).unwrap_or_default();
    if let Some(second) = words.next() {
        label.push_str(" and ");
        label.push_str(second);
    }
    label
}

struct StubState {
    config: StubConfig,
    requests: AtomicUsize,
    items: AtomicUsize,
}

type Shared = Arc<StubState>;

fn error(status: StatusCode, msg: &str) -> Response {
    (status, Json(json!({ "error": msg }))).into_response()
}

fn admit(st: &StubState, req: &Value) -> Result<Vec<Value>, Response> {
    let n = st.requests.fetch_add(1, Ordering::SeqCst);
    if n < st.config.fail_first {
        return Err(error(StatusCode::TOO_MANY_REQUESTS, "rate limited"));
    }
    let inputs = req.get("inputs").and_then(Value::as_array).ok_or_else(|| error(StatusCode::BAD_REQUEST, "missing inputs"))?;
    st.items.fetch_add(inputs.len(), Ordering::SeqCst);
    Ok(inputs.clone())
}

fn decode(v: &Value) -> Result<Vec<u8>, Response> {
    v.as_str()
        .and_then(|s| base64::engine::general_purpose::STANDARD.decode(s).ok())
        .ok_or_else(|| error(StatusCode::BAD_REQUEST, "image inputs must be base64 strings"))
}

fn text(v: &Value) -> Result<&str, Response> {
    v.as_str().ok_or_else(|| error(StatusCode::BAD_REQUEST, "text inputs must be strings"))
}

fn outputs(v: Vec<Value>) -> Response {
    Json(json!({ "outputs": v })).into_response()
}

async fn embed_image(State(st): State<Shared>, Json(req): Json<Value>) -> Response {
    let inputs = match admit(&st, &req) {
        Ok(i) => i,
        Err(r) => return r,
    };
    let as_text = req.pointer("/params/input_type").and_then(Value::as_str) == Some("text");
    let mut out = Vec::with_capacity(inputs.len());
    for v in &inputs {
        let source = if as_text {
            match text(v) {
                Ok(t) => t.to_owned(),
                Err(r) => return r,
            }
        } else {
            match decode(v) {
                Ok(b) => image_text(&b),
                Err(r) => return r,
            }
        };
        out.push(json!(hashed_embedding(&source, st.config.image_dim, "image")));
    }
    outputs(out)
}

async fn embed_text(State(st): State<Shared>, Json(req): Json<Value>) -> Response {
    let inputs = match admit(&st, &req) {
        Ok(i) => i,
        Err(r) => return r,
    };
    let mut out = Vec::with_capacity(inputs.len());
    for v in &inputs {
        match text(v) {
            Ok(t) => out.push(json!(hashed_embedding(t, st.config.text_dim, "text"))),
            Err(r) => return r,
        }
    }
    outputs(out)
}

async fn describe(State(st): State<Shared>, Json(req): Json<Value>) -> Response {
    let inputs = match admit(&st, &req) {
        Ok(i) => i,
        Err(r) => return r,
    };
    let mut out = Vec::with_capacity(inputs.len());
    for v in &inputs {
        match decode(v) {
            Ok(b) => out.push(stub_description(&b).map_or(Value::Null, Value::String)),
            Err(r) => return r,
        }
    }
    outputs(out)
}

async fn chat(State(st): State<Shared>, Json(req): Json<Value>) -> Response {
    let inputs = match admit(&st, &req) {
        Ok(i) => i,
        Err(r) => return r,
    };
    let mut prompt = String::new();
    for v in &inputs {
        match text(v) {
            Ok(t) => prompt.push_str(t),
            Err(r) => return r,
        }
    }
    if prompt.chars().count() > st.config.context_chars {
        return error(StatusCode::PAYLOAD_TOO_LARGE, "context_length_exceeded");
    }
    let keywords = prompt_keywords(&prompt);
    let echo = st.config.echo_keyword.as_ref().is_some_and(|k| keywords.iter().any(|w| w == k));
    let label = if echo { format!("\"{EXAMPLE_LABEL}\"") } else { stub_label(&keywords) };
    // completions carry a leading blank line and trailing chatter
    Json(json!({ "outputs": [format!("\n {label}\nThis label summarizes the documents.")] })).into_response()
}

pub fn router(config: StubConfig) -> Router {
    let state = Arc::new(StubState {
        config,
        requests: AtomicUsize::new(0),
        items: AtomicUsize::new(0),
    });
    router_with(state)
}

fn router_with(state: Shared) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route(IMAGE_EMBEDDING_PATH, post(embed_image))
        .route(TEXT_EMBEDDING_PATH, post(embed_text))
        .route(DESCRIPTION_PATH, post(describe))
        .route(CHAT_PATH, post(chat))
        .with_state(state)
}

/// Stub running on its own thread; stopped on drop.
pub struct StubServer {
    addr: SocketAddr,
    state: Shared,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl StubServer {
    /// Binds `bind` (port 0 picks a free port) and starts serving.
    pub fn start(bind: &str, config: StubConfig) -> std::io::Result<Self> {
        let listener = std::net::TcpListener::bind(bind)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let state = Arc::new(StubState {
            config,
            requests: AtomicUsize::new(0),
            items: AtomicUsize::new(0),
        });
        let app = router_with(state.clone());
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let runtime = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
        let thread = std::thread::spawn(move || {
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener).expect("listener");
                let stop = async {
                    let _ = rx.await;
                };
                if let Err(e) = axum::serve(listener, app).with_graceful_shutdown(stop).await {
                    log::error!("stub server: {e}");
                }
            });
        });
        Ok(Self { addr, state, shutdown: Some(tx), thread: Some(thread) })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Requests received, including rejected ones.
    pub fn requests(&self) -> usize {
        self.state.requests.load(Ordering::SeqCst)
    }

    /// Inputs received across admitted requests.
    pub fn items(&self) -> usize {
        self.state.items.load(Ordering::SeqCst)
    }

    /// Blocks until the server thread exits.
    pub fn wait(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
