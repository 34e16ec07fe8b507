//! Translation backends.
//!
//! [`HttpBackend`] speaks a small JSON protocol:
//!
//! ```text
//! POST {endpoint}
//! {"src":"zh","tgt":"en","texts":["…"]}
//!
//! 200 OK
//! {"translations":["…"]}
//! ```
//!
//! Inputs are cut into batches of at most `batch_size`, at most
//! `max_parallel` batches are in flight, and a batch that fails with a
//! transport error or non-200 status is retried up to `max_retries` times
//! with exponential backoff. Any batch that still fails aborts the whole
//! call; there are no partial results.
//!
//! [`MockBackend`] is an exact-match dictionary used by tests and demos, and
//! [`CachedBackend`] adds an opt-in on-disk cache in front of any backend.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{read_to_string, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationResult {
    pub source: String,
    pub translation: String,
    pub backend_id: String,
    #[serde(with = "duration_ms")]
    pub latency: Duration,
}

mod duration_ms {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

/// Anything that turns a list of source texts into order-aligned results.
pub trait Backend: Send + Sync {
    fn backend_id(&self) -> String;

    fn translate_batch(&self, texts: &[String]) -> Result<Vec<TranslationResult>>;

    /// Convenience wrapper returning only the translations.
    fn translate(&self, texts: &[String]) -> Result<Vec<String>> {
        Ok(self
            .translate_batch(texts)?
            .into_iter()
            .map(|r| r.translation)
            .collect())
    }
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn backend_id(&self) -> String {
        (**self).backend_id()
    }

    fn translate_batch(&self, texts: &[String]) -> Result<Vec<TranslationResult>> {
        (**self).translate_batch(texts)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendConfig {
    pub endpoint: String,
    pub src_lang: String,
    pub tgt_lang: String,
    pub batch_size: usize,
    pub timeout: Duration,
    pub max_retries: usize,
    pub max_parallel: usize,
    /// Delay before the first retry; doubles on each further retry.
    pub backoff_base: Duration,
    /// Sent as `Authorization: Bearer <token>` when set.
    pub bearer_token: Option<String>,
}

impl BackendConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        BackendConfig {
            endpoint: endpoint.into(),
            src_lang: "zh".into(),
            tgt_lang: "en".into(),
            batch_size: 16,
            timeout: Duration::from_secs(30),
            max_retries: 2,
            max_parallel: 4,
            backoff_base: Duration::from_millis(250),
            bearer_token: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidBackendConfig("batch_size must be >= 1".into()));
        }
        if self.max_parallel == 0 {
            return Err(Error::InvalidBackendConfig("max_parallel must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

/// One HTTP POST. Split out so retry and batching logic can be exercised
/// against a stub.
pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        body: &[u8],
        bearer_token: Option<&str>,
    ) -> std::result::Result<HttpResponse, String>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        UreqTransport { agent }
    }
}

impl Transport for UreqTransport {
    fn post_json(
        &self,
        url: &str,
        body: &[u8],
        bearer_token: Option<&str>,
    ) -> std::result::Result<HttpResponse, String> {
        let mut request = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(token) = bearer_token {
            request = request.header("Authorization", format!("Bearer {token}"));
        }
        let mut response = request.send(body).map_err(|e| e.to_string())?;
        let status = response.status().as_u16();
        let body = response.body_mut().read_to_vec().map_err(|e| e.to_string())?;
        Ok(HttpResponse { status, body })
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    src: &'a str,
    tgt: &'a str,
    texts: &'a [String],
}

#[derive(Deserialize)]
struct WireResponse {
    translations: Vec<String>,
}

pub struct HttpBackend<T: Transport = UreqTransport> {
    config: BackendConfig,
    transport: T,
}

impl HttpBackend<UreqTransport> {
    pub fn new(config: BackendConfig) -> Result<Self> {
        let transport = UreqTransport::new(config.timeout);
        Self::with_transport(config, transport)
    }
}

/// Translations of one batch and how long the batch took.
type BatchOutput = (Vec<String>, Duration);

enum BatchError {
    Retryable(String),
    Protocol(String),
}

impl<T: Transport> HttpBackend<T> {
    pub fn with_transport(config: BackendConfig, transport: T) -> Result<Self> {
        config.validate()?;
        Ok(HttpBackend { config, transport })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    fn attempt(&self, texts: &[String]) -> std::result::Result<Vec<String>, BatchError> {
        let body = serde_json::to_vec(&WireRequest {
            src: &self.config.src_lang,
            tgt: &self.config.tgt_lang,
            texts,
        })
        .map_err(|e| BatchError::Protocol(e.to_string()))?;
        let response = self
            .transport
            .post_json(&self.config.endpoint, &body, self.config.bearer_token.as_deref())
            .map_err(BatchError::Retryable)?;
        if response.status != 200 {
            return Err(BatchError::Retryable(format!("HTTP {}", response.status)));
        }
        let parsed: WireResponse = serde_json::from_slice(&response.body)
            .map_err(|e| BatchError::Protocol(format!("malformed response: {e}")))?;
        if parsed.translations.len() != texts.len() {
            return Err(BatchError::Protocol(format!(
                "expected {} translations, got {}",
                texts.len(),
                parsed.translations.len()
            )));
        }
        Ok(parsed.translations)
    }

    fn run_batch(&self, index: usize, texts: &[String]) -> Result<Vec<String>> {
        let attempts = self.config.max_retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                let delay = self.config.backoff_base * 2u32.saturating_pow(attempt as u32 - 1);
                log::warn!("batch {index}: retry {attempt} after {delay:?} ({last})");
                std::thread::sleep(delay);
            }
            match self.attempt(texts) {
                Ok(out) => return Ok(out),
                Err(BatchError::Protocol(reason)) => return Err(Error::Protocol { batch: index, reason }),
                Err(BatchError::Retryable(reason)) => last = reason,
            }
        }
        Err(Error::BatchFailed {
            batch: index,
            attempts,
            reason: last,
        })
    }
}

impl<T: Transport> Backend for HttpBackend<T> {
    fn backend_id(&self) -> String {
        format!(
            "http:{}#{}-{}",
            self.config.endpoint, self.config.src_lang, self.config.tgt_lang
        )
    }

    fn translate_batch(&self, texts: &[String]) -> Result<Vec<TranslationResult>> {
        if texts.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let batches: Vec<&[String]> = texts.chunks(self.config.batch_size).collect();
        let slots: Vec<Mutex<Option<BatchOutput>>> = batches.iter().map(|_| Mutex::new(None)).collect();
        let errors: Mutex<Vec<Error>> = Mutex::new(Vec::new());
        let next = AtomicUsize::new(0);
        let abort = AtomicBool::new(false);

        let workers = self.config.max_parallel.min(batches.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    if abort.load(Ordering::SeqCst) {
                        break;
                    }
                    let index = next.fetch_add(1, Ordering::SeqCst);
                    let Some(batch) = batches.get(index) else {
                        break;
                    };
                    let started = Instant::now();
                    match self.run_batch(index, batch) {
                        Ok(out) => *slots[index].lock().expect("slot lock") = Some((out, started.elapsed())),
                        Err(e) => {
                            abort.store(true, Ordering::SeqCst);
                            errors.lock().expect("error lock").push(e);
                        }
                    }
                });
            }
        });

        let mut errors = errors.into_inner().expect("error lock");
        if !errors.is_empty() {
            errors.sort_by_key(|e| match e {
                Error::BatchFailed { batch, .. } | Error::Protocol { batch, .. } => *batch,
                _ => usize::MAX,
            });
            return Err(errors.remove(0));
        }

        let id = self.backend_id();
        let mut results = Vec::with_capacity(texts.len());
        let mut sources = texts.iter();
        for slot in slots {
            let (translations, latency) = slot.into_inner().expect("slot lock").expect("every batch completed");
            for translation in translations {
                let source = sources.next().expect("aligned").clone();
                results.push(TranslationResult {
                    source,
                    translation,
                    backend_id: id.clone(),
                    latency,
                });
            }
        }
        Ok(results)
    }
}

/// Exact-match dictionary backend; unknown inputs come back as
/// `<untranslated:{input}>`.
#[derive(Debug, Clone)]
pub struct MockBackend {
    id: String,
    entries: HashMap<String, String>,
}

impl MockBackend {
    /// Parses `source<TAB>translation` lines; `#` comments and blank lines
    /// are skipped. A source listed twice is an error.
    pub fn parse(text: &str, id: impl Into<String>) -> Result<Self> {
        let mut entries = HashMap::new();
        for (idx, raw) in text.split('\n').enumerate() {
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (source, translation) = line
                .split_once('\t')
                .ok_or_else(|| Error::malformed(idx + 1, "expected source<TAB>translation"))?;
            if source.is_empty() || translation.contains('\t') {
                return Err(Error::malformed(idx + 1, "expected exactly two non-empty fields"));
            }
            if entries.insert(source.to_string(), translation.to_string()).is_some() {
                return Err(Error::malformed(idx + 1, format!("duplicate source {source:?}")));
            }
        }
        Ok(MockBackend { id: id.into(), entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let id = format!(
            "mock:{}",
            path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default()
        );
        Self::parse(&read_to_string(path)?, id)
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        MockBackend {
            id: "mock".into(),
            entries: pairs.into_iter().map(|(a, b)| (a.into(), b.into())).collect(),
        }
    }

    pub fn lookup(&self, text: &str) -> String {
        self.entries
            .get(text)
            .cloned()
            .unwrap_or_else(|| format!("<untranslated:{text}>"))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Backend for MockBackend {
    fn backend_id(&self) -> String {
        self.id.clone()
    }

    fn translate_batch(&self, texts: &[String]) -> Result<Vec<TranslationResult>> {
        if texts.is_empty() {
            return Err(Error::EmptyBatch);
        }
        Ok(texts
            .iter()
            .map(|t| TranslationResult {
                source: t.clone(),
                translation: self.lookup(t),
                backend_id: self.id.clone(),
                latency: Duration::ZERO,
            })
            .collect())
    }
}

/// On-disk cache keyed by SHA-256 of (endpoint, src, tgt, text). Only
/// misses reach the wrapped backend.
pub struct CachedBackend<B> {
    inner: B,
    dir: PathBuf,
    namespace: String,
}

impl<B: Backend> CachedBackend<B> {
    /// `namespace` should identify the engine, e.g. `endpoint\0src\0tgt`.
    pub fn new(inner: B, dir: impl Into<PathBuf>, namespace: impl Into<String>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(CachedBackend {
            inner,
            dir,
            namespace: namespace.into(),
        })
    }

    pub fn for_http(inner: B, dir: impl Into<PathBuf>, config: &BackendConfig) -> Result<Self> {
        let ns = format!("{}\0{}\0{}", config.endpoint, config.src_lang, config.tgt_lang);
        Self::new(inner, dir, ns)
    }

    fn path_for(&self, text: &str) -> PathBuf {
        let mut hasher = Sha256::new();
        hasher.update(self.namespace.as_bytes());
        hasher.update([0u8]);
        hasher.update(text.as_bytes());
        self.dir.join(format!("{}.txt", hex::encode(hasher.finalize())))
    }
}

impl<B: Backend> Backend for CachedBackend<B> {
    fn backend_id(&self) -> String {
        self.inner.backend_id()
    }

    fn translate_batch(&self, texts: &[String]) -> Result<Vec<TranslationResult>> {
        if texts.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let id = self.backend_id();
        let mut results: Vec<Option<TranslationResult>> = Vec::with_capacity(texts.len());
        let mut misses = Vec::new();
        for (i, text) in texts.iter().enumerate() {
            match std::fs::read_to_string(self.path_for(text)) {
                Ok(translation) => results.push(Some(TranslationResult {
                    source: text.clone(),
                    translation,
                    backend_id: id.clone(),
                    latency: Duration::ZERO,
                })),
                Err(_) => {
                    results.push(None);
                    misses.push(i);
                }
            }
        }
        if !misses.is_empty() {
            let to_send: Vec<String> = misses.iter().map(|&i| texts[i].clone()).collect();
            let fresh = self.inner.translate_batch(&to_send)?;
            for (&i, result) in misses.iter().zip(fresh) {
                let path = self.path_for(&texts[i]);
                std::fs::write(&path, &result.translation).map_err(|e| Error::io(&path, e))?;
                results[i] = Some(result);
            }
        }
        Ok(results.into_iter().map(|r| r.expect("filled")).collect())
    }
}

/// Builds a backend from `http:<url>` or `mock:<dict-path>`.
pub fn backend_from_spec(spec: &str, template: &BackendConfig) -> Result<Box<dyn Backend>> {
    if let Some(path) = spec.strip_prefix("mock:") {
        Ok(Box::new(MockBackend::load(path)?))
    } else if let Some(url) = spec.strip_prefix("http:") {
        let url = if url.starts_with("//") {
            format!("http:{url}")
        } else {
            url.to_string()
        };
        let config = BackendConfig {
            endpoint: url,
            ..template.clone()
        };
        Ok(Box::new(HttpBackend::new(config)?))
    } else {
        Err(Error::BackendSpec(spec.to_string()))
    }
}
