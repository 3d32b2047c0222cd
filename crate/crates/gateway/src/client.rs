use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use atlas_core::corpus::DescriptionRecord;
use atlas_core::hash::PartsHasher;

use crate::cache::{Claim, Permits, ResponseCache};
use crate::config::{DescribeParams, Endpoint, GatewayConfig};
use crate::GatewayError;

#[derive(Debug, Serialize)]
pub struct WireRequest<'a> {
    pub model: &'a str,
    pub inputs: &'a [Value],
    pub params: &'a Value,
}

#[derive(Debug, Deserialize)]
pub struct WireResponse {
    pub outputs: Vec<Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Capability {
    ImageEmbedding,
    Description,
    TextEmbedding,
    Chat,
}

impl Capability {
    fn tag(self) -> &'static str {
        match self {
            Self::ImageEmbedding => "image_embedding",
            Self::Description => "description",
            Self::TextEmbedding => "text_embedding",
            Self::Chat => "chat",
        }
    }
}

/// Upstream traffic counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GatewayStats {
    /// HTTP requests sent, retries included.
    pub requests: usize,
    /// Items in successful upstream responses.
    pub items: usize,
}

struct Job {
    key: String,
    input: Value,
}

/// Synchronous client for the four model capabilities. Safe to share across
/// threads; identical inputs are fetched once.
pub struct Gateway {
    config: GatewayConfig,
    agent: ureq::Agent,
    cache: ResponseCache,
    permits: Permits,
    requests: AtomicUsize,
    items: AtomicUsize,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway").field("config", &self.config).finish_non_exhaustive()
    }
}

fn b64(bytes: &[u8]) -> String {
    base64::engine::general_purpose::STANDARD.encode(bytes)
}

impl Gateway {
    pub fn new(config: GatewayConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            cache: ResponseCache::new(config.cache_dir.clone()),
            permits: Permits::new(config.max_parallel),
            config,
            agent,
            requests: AtomicUsize::new(0),
            items: AtomicUsize::new(0),
        })
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    pub fn stats(&self) -> GatewayStats {
        GatewayStats {
            requests: self.requests.load(Ordering::Relaxed),
            items: self.items.load(Ordering::Relaxed),
        }
    }

    fn endpoint(&self, cap: Capability) -> &Endpoint {
        match cap {
            Capability::ImageEmbedding => &self.config.image_embedding,
            Capability::Description => &self.config.description,
            Capability::TextEmbedding => &self.config.text_embedding,
            Capability::Chat => &self.config.chat,
        }
    }

    fn key(&self, cap: Capability, input: &[u8], params: &Value) -> String {
        let ep = self.endpoint(cap);
        PartsHasher::new()
            .part(cap.tag())
            .part(&ep.model_id)
            .part(input)
            .part(serde_json::to_vec(params).expect("serializable"))
            .hex()
    }

    /// One POST with retry on transport errors, 429 and 5xx.
    fn post(&self, ep: &Endpoint, inputs: &[Value], params: &Value, expect: usize) -> Result<Vec<Value>, GatewayError> {
        let body = WireRequest { model: &ep.model_id, inputs, params };
        let mut last = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                let wait = self.config.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                std::thread::sleep(Duration::from_millis(wait));
            }
            let _permit = self.permits.acquire();
            self.requests.fetch_add(1, Ordering::Relaxed);
            let mut resp = match self.agent.post(&ep.url).send_json(&body) {
                Ok(r) => r,
                Err(e) => {
                    log::warn!("{} attempt {}: {e}", ep.url, attempt + 1);
                    last = e.to_string();
                    continue;
                }
            };
            let status = resp.status().as_u16();
            match status {
                200..=299 => {
                    let parsed: WireResponse = resp
                        .body_mut()
                        .read_json()
                        .map_err(|e| GatewayError::Malformed(format!("{}: {e}", ep.url)))?;
                    if parsed.outputs.len() != expect {
                        return Err(GatewayError::Malformed(format!(
                            "{}: {} outputs, expected {expect}",
                            ep.url,
                            parsed.outputs.len()
                        )));
                    }
                    self.items.fetch_add(inputs.len(), Ordering::Relaxed);
                    return Ok(parsed.outputs);
                }
                413 => return Err(GatewayError::ContextOverflow),
                429 | 500..=599 => {
                    last = format!("HTTP {status}");
                    log::warn!("{} attempt {}: {last}", ep.url, attempt + 1);
                }
                _ => {
                    let text = resp.body_mut().read_to_string().unwrap_or_default();
                    if text.contains("context_length") {
                        return Err(GatewayError::ContextOverflow);
                    }
                    return Err(GatewayError::Status { url: ep.url.clone(), code: status, body: text });
                }
            }
        }
        Err(GatewayError::Unreachable {
            url: ep.url.clone(),
            attempts: self.config.max_retries + 1,
            last,
        })
    }

    /// Resolves every job through the cache, fetching misses in batches of
    /// `batch_size` on up to `max_parallel` threads. `check` validates one
    /// output before it is cached.
    fn run(
        &self,
        cap: Capability,
        jobs: Vec<Job>,
        params: &Value,
        batch_size: usize,
        check: &(dyn Fn(&Value) -> Result<(), GatewayError> + Sync),
    ) -> Vec<Result<Value, GatewayError>> {
        let mut out: Vec<Option<Result<Value, GatewayError>>> = (0..jobs.len()).map(|_| None).collect();
        let mut owned: Vec<(String, Value)> = Vec::new();
        let mut busy: Vec<String> = Vec::new();
        let mut first_index: HashMap<&str, usize> = HashMap::new();
        for (i, job) in jobs.iter().enumerate() {
            if first_index.contains_key(job.key.as_str()) {
                continue;
            }
            first_index.insert(&job.key, i);
            match self.cache.claim(&job.key) {
                Claim::Hit(v) => out[i] = Some(Ok(v)),
                Claim::Owned => owned.push((job.key.clone(), job.input.clone())),
                Claim::Busy => busy.push(job.key.clone()),
            }
        }

        let ep = self.endpoint(cap);
        let batches: Vec<&[(String, Value)]> = owned.chunks(batch_size).collect();
        let next = AtomicUsize::new(0);
        let results: std::sync::Mutex<HashMap<String, Result<Value, GatewayError>>> = Default::default();
        let workers = self.config.max_parallel.min(batches.len());
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let b = next.fetch_add(1, Ordering::Relaxed);
                    let Some(batch) = batches.get(b) else { break };
                    let inputs: Vec<Value> = batch.iter().map(|(_, v)| v.clone()).collect();
                    let fetched = self.post(ep, &inputs, params, inputs.len());
                    let mut res = results.lock().unwrap();
                    match fetched {
                        Ok(outputs) => {
                            for ((key, _), v) in batch.iter().zip(outputs) {
                                let r = check(&v).and_then(|_| self.cache.put(key, &v)).map(|_| v);
                                res.insert(key.clone(), r);
                            }
                        }
                        Err(e) => {
                            for (key, _) in batch.iter() {
                                res.insert(key.clone(), Err(e.clone()));
                            }
                        }
                    }
                });
            }
        });
        self.cache.release(owned.iter().map(|(k, _)| k.clone()));
        let mut results = results.into_inner().unwrap();

        for key in busy {
            self.cache.wait_for(&key);
            let r = match self.cache.get(&key) {
                Some(v) => Ok(v),
                None => {
                    // the other caller failed; try once ourselves
                    let job = jobs.iter().find(|j| j.key == key).expect("busy key comes from jobs");
                    self.post(ep, std::slice::from_ref(&job.input), params, 1).and_then(|mut o| {
                        let v = o.remove(0);
                        check(&v)?;
                        self.cache.put(&key, &v)?;
                        Ok(v)
                    })
                }
            };
            results.insert(key, r);
        }

        jobs.iter()
            .map(|job| match &out[first_index[job.key.as_str()]] {
                Some(r) => r.clone(),
                None => results.get(&job.key).cloned().expect("every key resolved"),
            })
            .collect()
    }

    fn vectors(&self, cap: Capability, jobs: Vec<Job>, params: Value) -> Result<Vec<Vec<f32>>, GatewayError> {
        let dim = self.endpoint(cap).dim;
        let check = move |v: &Value| parse_vector(v, dim).map(|_| ());
        let results = self.run(cap, jobs, &params, self.config.batch_size, &check);
        let vecs: Vec<Vec<f32>> = results
            .into_iter()
            .map(|r| r.and_then(|v| parse_vector(&v, dim)))
            .collect::<Result<_, _>>()?;
        if let Some(first) = vecs.first() {
            if let Some(bad) = vecs.iter().find(|v| v.len() != first.len()) {
                return Err(GatewayError::DimensionMismatch { expected: first.len(), got: bad.len() });
            }
        }
        Ok(vecs)
    }

    /// Image-space vectors for raw image bytes, in input order.
    pub fn embed_images(&self, images: &[&[u8]]) -> Result<Vec<Vec<f32>>, GatewayError> {
        let params = json!({ "input_type": "image" });
        let jobs = images
            .iter()
            .map(|b| Job { key: self.key(Capability::ImageEmbedding, b, &params), input: Value::String(b64(b)) })
            .collect();
        self.vectors(Capability::ImageEmbedding, jobs, params)
    }

    /// Text-space vectors, in input order.
    pub fn embed_texts<S: AsRef<str>>(&self, texts: &[S]) -> Result<Vec<Vec<f32>>, GatewayError> {
        let params = json!({});
        let jobs = texts
            .iter()
            .map(|t| {
                let t = t.as_ref();
                Job { key: self.key(Capability::TextEmbedding, t.as_bytes(), &params), input: Value::String(t.to_owned()) }
            })
            .collect();
        self.vectors(Capability::TextEmbedding, jobs, params)
    }

    /// Query text embedded by the image model's text encoder.
    pub fn embed_query_image_space(&self, text: &str) -> Result<Vec<f32>, GatewayError> {
        let params = json!({ "input_type": "text" });
        let job = Job {
            key: self.key(Capability::ImageEmbedding, text.as_bytes(), &params),
            input: Value::String(text.to_owned()),
        };
        Ok(self.vectors(Capability::ImageEmbedding, vec![job], params)?.remove(0))
    }

    /// One description per image, in input order; failures are per item.
    pub fn describe_images(&self, images: &[&[u8]], params: &DescribeParams) -> Vec<Result<String, GatewayError>> {
        if let Err(e) = params.validate() {
            return images.iter().map(|_| Err(e.clone())).collect();
        }
        let wire = json!({
            "prompt": params.prompt,
            "max_new_tokens": params.max_new_tokens,
            "temperature": params.temperature,
        });
        let jobs = images
            .iter()
            .map(|b| Job { key: self.key(Capability::Description, b, &wire), input: Value::String(b64(b)) })
            .collect();
        let check = |v: &Value| parse_text(v).map(|_| ());
        self.run(Capability::Description, jobs, &wire, self.config.batch_size, &check)
            .into_iter()
            .map(|r| r.and_then(|v| parse_text(&v)))
            .collect()
    }

    /// Wraps a description in the record stored on disk.
    pub fn description_record(&self, record_id: &str, text: String, params: &DescribeParams) -> DescriptionRecord {
        DescriptionRecord {
            record_id: record_id.to_owned(),
            text,
            model_id: self.config.description.model_id.clone(),
            prompt_hash: params.prompt_hash(),
        }
    }

    /// Raw completion for ordered prompt blocks.
    pub fn complete_chat<S: AsRef<str>>(&self, blocks: &[S]) -> Result<String, GatewayError> {
        let params = json!({ "max_new_tokens": self.config.chat_max_new_tokens, "temperature": 0.0 });
        let blocks: Vec<Value> = blocks.iter().map(|b| Value::String(b.as_ref().to_owned())).collect();
        let joined = serde_json::to_vec(&blocks).expect("serializable");
        let key = self.key(Capability::Chat, &joined, &params);
        match self.cache.claim(&key) {
            Claim::Hit(v) => return parse_completion(&v),
            Claim::Busy => {
                self.cache.wait_for(&key);
                if let Some(v) = self.cache.get(&key) {
                    return parse_completion(&v);
                }
            }
            Claim::Owned => {}
        }
        let result = self.post(&self.config.chat, &blocks, &params, 1).and_then(|outputs| {
            // one prompt in, one completion out
            let v = outputs.into_iter().next().ok_or_else(|| GatewayError::Malformed("no completion".into()))?;
            parse_completion(&v)?;
            self.cache.put(&key, &v)?;
            Ok(v)
        });
        self.cache.release([key]);
        parse_completion(&result?)
    }
}

fn parse_vector(v: &Value, dim: Option<usize>) -> Result<Vec<f32>, GatewayError> {
    let arr = v.as_array().ok_or_else(|| GatewayError::Malformed("expected a vector".into()))?;
    let vec: Vec<f32> = arr
        .iter()
        .map(|x| x.as_f64().map(|f| f as f32).ok_or_else(|| GatewayError::Malformed("non-numeric vector entry".into())))
        .collect::<Result<_, _>>()?;
    if let Some(d) = dim {
        if vec.len() != d {
            return Err(GatewayError::DimensionMismatch { expected: d, got: vec.len() });
        }
    }
    if vec.is_empty() || vec.iter().any(|x| !x.is_finite()) {
        return Err(GatewayError::Malformed("empty or non-finite vector".into()));
    }
    Ok(vec)
}

fn parse_text(v: &Value) -> Result<String, GatewayError> {
    match v.as_str() {
        Some(s) if !s.trim().is_empty() => Ok(s.to_owned()),
        _ => Err(GatewayError::Malformed("expected a non-empty string".into())),
    }
}

fn parse_completion(v: &Value) -> Result<String, GatewayError> {
    v.as_str().map(str::to_owned).ok_or_else(|| GatewayError::Malformed("expected a string completion".into()))
}
