//! One completion interface over an HTTP API, a record/replay cache and a scripted mock.
//!
//! Every request goes through [`Gateway::complete`], which consults the cache first,
//! bounds the number of in-flight backend calls and retries rate-limited calls on a
//! fixed backoff schedule. Cache records are keyed by [`cache_key`].

mod cache;
mod http;
mod mock;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cache::{CompletionCache, CompletionRecord};
pub use http::{ApiStyle, HttpBackend};
pub use mock::MockBackend;

pub const DEFAULT_MAX_TOKENS: u32 = 512;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GatewayError {
    #[error("rate limited after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },
    #[error("no cached response for key {key}")]
    CacheMiss { key: String },
    #[error("no scripted response for prompt hash {hash}")]
    Unscripted { hash: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl GatewayError {
    pub(crate) fn io(path: &Path, err: std::io::Error) -> Self {
        GatewayError::Io { path: path.display().to_string(), message: err.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<Vec<String>>,
}

impl CompletionRequest {
    pub fn new(prompt: impl Into<String>, model: impl Into<String>) -> Self {
        CompletionRequest {
            prompt: prompt.into(),
            model: model.into(),
            temperature: 0.0,
            max_tokens: DEFAULT_MAX_TOKENS,
            stop: None,
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.prompt.is_empty() {
            return Err(GatewayError::InvalidRequest("empty prompt".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(GatewayError::InvalidRequest(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        Ok(())
    }
}

/// SHA-256 over a fixed serialization of (model, prompt, temperature, max_tokens).
///
/// Fields are length-prefixed and the temperature is written through `f64`'s shortest
/// round-trip form, so `0` and `0.0` produce the same key.
pub fn cache_key(request: &CompletionRequest) -> String {
    let temperature = format!("{:?}", request.temperature + 0.0);
    let mut hasher = Sha256::new();
    for field in [
        request.model.as_str(),
        request.prompt.as_str(),
        temperature.as_str(),
        &request.max_tokens.to_string(),
    ] {
        hasher.update((field.len() as u64).to_le_bytes());
        hasher.update(field.as_bytes());
    }
    hex::encode(hasher.finalize())
}

/// SHA-256 of the prompt text alone; the key used by scripted mocks.
pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

pub trait CompletionBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError>;

    fn name(&self) -> &str;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Delay before retry `i` is `backoff_ms[min(i, len - 1)]`.
    pub backoff_ms: Vec<u64>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 5, backoff_ms: vec![1000, 2000, 4000, 8000] }
    }
}

impl RetryPolicy {
    fn delay(&self, retry: usize) -> Duration {
        let ms = self
            .backoff_ms
            .get(retry)
            .or(self.backoff_ms.last())
            .copied()
            .unwrap_or(0);
        Duration::from_millis(ms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Replay,
    #[default]
    Mock,
}

impl std::str::FromStr for BackendKind {
    type Err = GatewayError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "http" => Ok(BackendKind::Http),
            "replay" => Ok(BackendKind::Replay),
            "mock" => Ok(BackendKind::Mock),
            other => Err(GatewayError::Config(format!("unknown backend {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint: Option<String>,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub api_style: ApiStyle,
    pub max_parallel: usize,
    pub retry: RetryPolicy,
    /// JSONL cache. Required for replay; for other kinds, responses are recorded into it.
    pub cache: Option<PathBuf>,
    /// JSON object mapping prompt hashes to responses; `"*"` is the fallback response.
    pub mock_script: Option<PathBuf>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub stop: Option<Vec<String>>,
    pub timeout_secs: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Mock,
            endpoint: None,
            model: "gpt-3.5-turbo".to_string(),
            api_key_env: "OPENAI_API_KEY".to_string(),
            api_style: ApiStyle::Chat,
            max_parallel: 4,
            retry: RetryPolicy::default(),
            cache: None,
            mock_script: None,
            temperature: 0.0,
            max_tokens: DEFAULT_MAX_TOKENS,
            stop: None,
            timeout_secs: 120,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        match self.kind {
            BackendKind::Http if self.endpoint.is_none() => {
                return Err(GatewayError::Config("http backend requires an endpoint".into()))
            }
            BackendKind::Replay if self.cache.is_none() => {
                return Err(GatewayError::Config("replay backend requires a cache path".into()))
            }
            _ => {}
        }
        if self.max_parallel == 0 {
            return Err(GatewayError::Config("max_parallel must be at least 1".into()));
        }
        if self.retry.max_attempts == 0 {
            return Err(GatewayError::Config("retry.max_attempts must be at least 1".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(GatewayError::Config(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        Ok(())
    }

    /// A request carrying this config's model and sampling settings.
    pub fn request(&self, prompt: impl Into<String>) -> CompletionRequest {
        CompletionRequest {
            prompt: prompt.into(),
            model: self.model.clone(),
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            stop: self.stop.clone(),
        }
    }
}

/// Counters observable by callers and tests.
#[derive(Debug, Default)]
pub struct GatewayStats {
    pub requests: AtomicUsize,
    pub cache_hits: AtomicUsize,
    pub backend_calls: AtomicUsize,
    pub retries: AtomicUsize,
    pub in_flight: AtomicUsize,
    pub max_in_flight: AtomicUsize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StatsSnapshot {
    pub requests: usize,
    pub cache_hits: usize,
    pub backend_calls: usize,
    pub retries: usize,
    pub max_in_flight: usize,
}

impl GatewayStats {
    pub fn snapshot(&self) -> StatsSnapshot {
        StatsSnapshot {
            requests: self.requests.load(Ordering::SeqCst),
            cache_hits: self.cache_hits.load(Ordering::SeqCst),
            backend_calls: self.backend_calls.load(Ordering::SeqCst),
            retries: self.retries.load(Ordering::SeqCst),
            max_in_flight: self.max_in_flight.load(Ordering::SeqCst),
        }
    }
}

struct Limiter {
    free: Mutex<usize>,
    freed: Condvar,
}

impl Limiter {
    fn new(n: usize) -> Self {
        Limiter { free: Mutex::new(n), freed: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().expect("limiter poisoned");
        while *free == 0 {
            free = self.freed.wait(free).expect("limiter poisoned");
        }
        *free -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Limiter);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("limiter poisoned") += 1;
        self.0.freed.notify_one();
    }
}

pub struct Gateway {
    backend: Option<Box<dyn CompletionBackend>>,
    cache: Option<Arc<CompletionCache>>,
    limiter: Limiter,
    max_parallel: usize,
    retry: RetryPolicy,
    stats: GatewayStats,
}

impl Gateway {
    pub fn new(backend: impl CompletionBackend + 'static) -> Self {
        Self::build(Some(Box::new(backend)), None)
    }

    /// Answers only from `cache`; unseen requests fail with [`GatewayError::CacheMiss`].
    pub fn replay(cache: Arc<CompletionCache>) -> Self {
        Self::build(None, Some(cache))
    }

    fn build(backend: Option<Box<dyn CompletionBackend>>, cache: Option<Arc<CompletionCache>>) -> Self {
        Gateway {
            backend,
            cache,
            limiter: Limiter::new(1),
            max_parallel: 1,
            retry: RetryPolicy::default(),
            stats: GatewayStats::default(),
        }
    }

    pub fn with_cache(mut self, cache: Arc<CompletionCache>) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_max_parallel(mut self, n: usize) -> Self {
        let n = n.max(1);
        self.limiter = Limiter::new(n);
        self.max_parallel = n;
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn from_config(config: &BackendConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        let gateway = match config.kind {
            BackendKind::Replay => {
                let path = config.cache.as_ref().expect("validated");
                let cache = CompletionCache::open_read_only(path)?;
                return Ok(Gateway::replay(Arc::new(cache)).with_max_parallel(config.max_parallel));
            }
            BackendKind::Http => {
                let api_key = std::env::var(&config.api_key_env).ok();
                Gateway::new(HttpBackend::new(
                    config.endpoint.clone().expect("validated"),
                    api_key,
                    config.api_style,
                    Duration::from_secs(config.timeout_secs),
                ))
            }
            BackendKind::Mock => {
                let mut script: HashMap<String, String> = match &config.mock_script {
                    Some(path) => {
                        let text = std::fs::read_to_string(path).map_err(|e| GatewayError::io(path, e))?;
                        serde_json::from_str(&text).map_err(|e| {
                            GatewayError::Config(format!("{}: mock script must map prompt hashes to strings: {e}", path.display()))
                        })?
                    }
                    None => HashMap::new(),
                };
                let fallback = script.remove("*");
                let mock = MockBackend::scripted(script);
                Gateway::new(match fallback {
                    Some(f) => mock.with_fallback(f),
                    None => mock,
                })
            }
        };
        let gateway = gateway.with_max_parallel(config.max_parallel).with_retry(config.retry.clone());
        Ok(match &config.cache {
            Some(path) => gateway.with_cache(Arc::new(CompletionCache::open(path)?)),
            None => gateway,
        })
    }

    pub fn stats(&self) -> &GatewayStats {
        &self.stats
    }

    pub fn cache(&self) -> Option<&Arc<CompletionCache>> {
        self.cache.as_ref()
    }

    pub fn max_parallel(&self) -> usize {
        self.max_parallel
    }

    pub fn backend_name(&self) -> &str {
        self.backend.as_ref().map_or("replay", |b| b.name())
    }

    pub fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        request.validate()?;
        self.stats.requests.fetch_add(1, Ordering::SeqCst);
        let key = cache_key(request);
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&key)) {
            self.stats.cache_hits.fetch_add(1, Ordering::SeqCst);
            return Ok(hit);
        }
        let Some(backend) = &self.backend else {
            return Err(GatewayError::CacheMiss { key });
        };

        let started = Instant::now();
        let response = {
            let _permit = self.limiter.acquire();
            let now = self.stats.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
            self.stats.max_in_flight.fetch_max(now, Ordering::SeqCst);
            let result = self.call_with_retry(backend.as_ref(), request);
            self.stats.in_flight.fetch_sub(1, Ordering::SeqCst);
            result
        }?;

        if let Some(cache) = &self.cache {
            cache.insert(CompletionRecord {
                key,
                request: request.clone(),
                response: response.clone(),
                latency_ms: started.elapsed().as_millis() as u64,
                timestamp: SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
            })?;
        }
        Ok(response)
    }

    fn call_with_retry(
        &self,
        backend: &dyn CompletionBackend,
        request: &CompletionRequest,
    ) -> Result<String, GatewayError> {
        let max_attempts = self.retry.max_attempts.max(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            self.stats.backend_calls.fetch_add(1, Ordering::SeqCst);
            match backend.complete(request) {
                Err(GatewayError::RateLimited { .. }) if attempt < max_attempts => {
                    self.stats.retries.fetch_add(1, Ordering::SeqCst);
                    std::thread::sleep(self.retry.delay(attempt as usize - 1));
                }
                Err(GatewayError::RateLimited { .. }) => {
                    return Err(GatewayError::RateLimited { attempts: attempt })
                }
                other => return other,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicU32;

    fn req(prompt: &str) -> CompletionRequest {
        CompletionRequest::new(prompt, "m")
    }

    #[test]
    fn key_is_stable_and_canonical() {
        let a = req("hello");
        assert_eq!(cache_key(&a), cache_key(&a.clone()));
        let mut b = a.clone();
        b.temperature = -0.0;
        assert_eq!(cache_key(&a), cache_key(&b));
        let mut c = a.clone();
        c.max_tokens = 7;
        assert_ne!(cache_key(&a), cache_key(&c));
        // stop sequences are not part of the key
        let mut d = a.clone();
        d.stop = Some(vec!["\n".into()]);
        assert_eq!(cache_key(&a), cache_key(&d));
        // pinned so keys stay valid across builds and platforms
        assert_eq!(
            cache_key(&a),
            "8a15556258b33830c7f924c1dc33d125259206b055f01605db440641e3d155d3"
        );
    }

    #[test]
    fn key_fields_do_not_run_together() {
        let a = CompletionRequest::new("bc", "a");
        let b = CompletionRequest::new("c", "ab");
        assert_ne!(cache_key(&a), cache_key(&b));
    }

    #[test]
    fn requests_validated() {
        assert!(matches!(req("").validate(), Err(GatewayError::InvalidRequest(_))));
        let mut hot = req("x");
        hot.temperature = 2.5;
        assert!(hot.validate().is_err());
    }

    #[test]
    fn scripted_mock() {
        let mut script = HashMap::new();
        script.insert(prompt_hash("which?"), "Answer: B".to_string());
        let gw = Gateway::new(MockBackend::scripted(script));
        assert_eq!(gw.complete(&req("which?")).unwrap(), "Answer: B");
        assert!(matches!(gw.complete(&req("other")), Err(GatewayError::Unscripted { .. })));
    }

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        {
            let cache = Arc::new(CompletionCache::open(&path).unwrap());
            let gw = Gateway::new(MockBackend::from_fn(|r| Ok(format!("echo {}", r.prompt)))).with_cache(cache);
            assert_eq!(gw.complete(&req("a")).unwrap(), "echo a");
            assert_eq!(gw.complete(&req("a")).unwrap(), "echo a");
            assert_eq!(gw.stats().snapshot().cache_hits, 1);
            assert_eq!(gw.stats().snapshot().backend_calls, 1);
        }
        let replay = Gateway::replay(Arc::new(CompletionCache::open_read_only(&path).unwrap()));
        assert_eq!(replay.complete(&req("a")).unwrap(), "echo a");
        let miss = replay.complete(&req("b")).unwrap_err();
        assert_eq!(miss, GatewayError::CacheMiss { key: cache_key(&req("b")) });
        let lines = std::fs::read_to_string(&path).unwrap();
        assert_eq!(lines.lines().count(), 1);
        let record: CompletionRecord = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
        assert_eq!(record.request.prompt, "a");
    }

    struct Flaky {
        failures: u32,
        calls: AtomicU32,
    }

    impl CompletionBackend for Flaky {
        fn complete(&self, _: &CompletionRequest) -> Result<String, GatewayError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.failures {
                Err(GatewayError::RateLimited { attempts: 1 })
            } else {
                Ok("done".into())
            }
        }

        fn name(&self) -> &str {
            "flaky"
        }
    }

    #[test]
    fn retries_then_records_once() {
        let cache = Arc::new(CompletionCache::in_memory());
        let retry = RetryPolicy { max_attempts: 4, backoff_ms: vec![1] };
        let gw = Gateway::new(Flaky { failures: 2, calls: AtomicU32::new(0) })
            .with_cache(Arc::clone(&cache))
            .with_retry(retry.clone());
        assert_eq!(gw.complete(&req("x")).unwrap(), "done");
        assert_eq!(cache.len(), 1);
        assert_eq!(gw.stats().snapshot().retries, 2);

        let gw = Gateway::new(Flaky { failures: 10, calls: AtomicU32::new(0) }).with_retry(retry);
        assert_eq!(gw.complete(&req("x")).unwrap_err(), GatewayError::RateLimited { attempts: 4 });
    }

    #[test]
    fn in_flight_bounded() {
        let gw = Gateway::new(MockBackend::from_fn(|_| {
            std::thread::sleep(Duration::from_millis(5));
            Ok("ok".into())
        }))
        .with_max_parallel(3);
        std::thread::scope(|s| {
            for i in 0..24 {
                let gw = &gw;
                s.spawn(move || gw.complete(&req(&format!("p{i}"))).unwrap());
            }
        });
        let stats = gw.stats().snapshot();
        assert_eq!(stats.backend_calls, 24);
        assert!(stats.max_in_flight <= 3, "{stats:?}");
        assert!(stats.max_in_flight >= 2, "{stats:?}");
    }

    #[test]
    fn config_validation() {
        let mut c = BackendConfig { kind: BackendKind::Http, ..Default::default() };
        assert!(c.validate().is_err());
        c.endpoint = Some("http://localhost:1".into());
        assert!(c.validate().is_ok());
        let r = BackendConfig { kind: BackendKind::Replay, ..Default::default() };
        assert!(r.validate().is_err());
        assert!(Gateway::from_config(&BackendConfig {
            kind: BackendKind::Replay,
            cache: Some("/nonexistent/cache.jsonl".into()),
            ..Default::default()
        })
        .is_err());
    }

    #[test]
    fn content_hash_ignores_insertion_order() {
        let rec = |k: &str| CompletionRecord {
            key: k.into(),
            request: req(k),
            response: format!("r{k}"),
            latency_ms: 0,
            timestamp: 0,
        };
        let a = CompletionCache::in_memory();
        a.insert(rec("1")).unwrap();
        a.insert(rec("2")).unwrap();
        let b = CompletionCache::in_memory();
        b.insert(rec("2")).unwrap();
        b.insert(rec("1")).unwrap();
        assert_eq!(a.content_hash(), b.content_hash());
        assert!(!b.insert(rec("1")).unwrap());
    }
}
