//! Completion sampling: the chat-completions HTTP client, the on-disk
//! sample cache and the retrying, concurrency-limited sampler.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde_json::{json, Value};

use super::{ModelEndpoint, SamplingPlan};
use crate::dataset::{sha256_hex, write_atomic};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompletionError {
    /// Worth retrying: rate limiting, server errors, network trouble.
    #[error("transient failure: {0}")]
    Transient(String),
    /// Retrying will not help (bad request, auth, malformed reply).
    #[error("request failed: {0}")]
    Fatal(String),
    #[error("cancelled")]
    Cancelled,
}

/// Something that turns a prompt into one completion.
pub trait CompletionClient: Send + Sync {
    fn complete(&self, prompt: &str, temperature: f64) -> Result<String, CompletionError>;
    fn model_name(&self) -> &str;
}

/// OpenAI-compatible `/chat/completions` client.
pub struct HttpClient {
    endpoint: ModelEndpoint,
    url: String,
    token: Option<String>,
    agent: ureq::Agent,
}

impl HttpClient {
    pub fn new(endpoint: ModelEndpoint) -> Self {
        let base = endpoint.base_url.trim_end_matches('/');
        let url = if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        };
        let token = (!endpoint.auth_token_env.is_empty())
            .then(|| std::env::var(&endpoint.auth_token_env).ok())
            .flatten()
            .filter(|t| !t.is_empty());
        if token.is_none() && !endpoint.auth_token_env.is_empty() {
            log::warn!("{} is not set; sending requests without a bearer token", endpoint.auth_token_env);
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(endpoint.request_timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpClient {
            endpoint,
            url,
            token,
            agent,
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl CompletionClient for HttpClient {
    fn complete(&self, prompt: &str, temperature: f64) -> Result<String, CompletionError> {
        let body = json!({
            "model": self.endpoint.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
            "max_tokens": self.endpoint.max_tokens,
            "n": 1,
        })
        .to_string();
        let mut req = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(t) = &self.token {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        let mut resp = req
            .send(body.as_str())
            .map_err(|e| CompletionError::Transient(format!("POST {}: {e}", self.url)))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| CompletionError::Transient(format!("reading reply: {e}")))?;
        match status {
            200..=299 => parse_chat_reply(&text),
            408 | 409 | 429 | 500..=599 => Err(CompletionError::Transient(format!("HTTP {status}: {}", snippet(&text)))),
            _ => Err(CompletionError::Fatal(format!("HTTP {status}: {}", snippet(&text)))),
        }
    }

    fn model_name(&self) -> &str {
        &self.endpoint.model_name
    }
}

fn snippet(text: &str) -> String {
    text.chars().take(200).collect()
}

fn parse_chat_reply(text: &str) -> Result<String, CompletionError> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| CompletionError::Fatal(format!("reply is not JSON: {e}")))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| CompletionError::Fatal("reply has no choices[0].message.content".into()))
}

/// Attempts and backoff for transient failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(1000),
        }
    }
}

/// Key of one sample in the cache: the prompt, the temperature and the
/// sample index, so re-runs with a different `n_samples` reuse a prefix.
pub fn cache_key(prompt: &str, temperature: f64, index: usize) -> String {
    sha256_hex(format!("{prompt}\u{0}{temperature}\u{0}{index}").as_bytes())
}

/// On-disk cache of successful completions, one JSON file per sample under
/// `<root>/<model>/`.
#[derive(Debug, Clone)]
pub struct SampleCache {
    root: PathBuf,
}

impl SampleCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        SampleCache { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, model: &str, key: &str) -> PathBuf {
        let dir: String = model
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
            .collect();
        self.root.join(dir).join(format!("{key}.json"))
    }

    pub fn get(&self, model: &str, key: &str) -> Option<String> {
        let text = std::fs::read_to_string(self.path(model, key)).ok()?;
        let v: Value = serde_json::from_str(&text).ok()?;
        v.get("completion").and_then(Value::as_str).map(str::to_string)
    }

    pub fn put(&self, model: &str, key: &str, completion: &str) -> std::io::Result<()> {
        let path = self.path(model, key);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let body = json!({"model": model, "key": key, "completion": completion});
        write_atomic(&path, body.to_string().as_bytes())
    }
}

/// One sample for one prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub completion: Result<String, CompletionError>,
    pub from_cache: bool,
}

fn sample_one(
    client: &dyn CompletionClient,
    prompt: &str,
    temperature: f64,
    retry: RetryPolicy,
    cancel: &AtomicBool,
) -> Result<String, CompletionError> {
    let mut last = CompletionError::Transient("no attempt made".into());
    for attempt in 0..retry.attempts.max(1) {
        if cancel.load(Ordering::Relaxed) {
            return Err(CompletionError::Cancelled);
        }
        if attempt > 0 {
            let delay = retry.base_delay * 2u32.pow(attempt - 1);
            log::debug!("retrying in {delay:?} after: {last}");
            std::thread::sleep(delay);
        }
        match client.complete(prompt, temperature) {
            Ok(text) => return Ok(text),
            Err(e @ CompletionError::Transient(_)) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

/// Draws `plan.n_samples` completions per prompt, at most
/// `plan.concurrency_limit` requests in flight. Cached samples are reused
/// without a request; fresh successes are written back. The result is
/// indexed `[prompt][sample]`.
pub fn sample_completions(
    client: &dyn CompletionClient,
    cache: Option<&SampleCache>,
    prompts: &[String],
    plan: &SamplingPlan,
    retry: RetryPolicy,
    cancel: &AtomicBool,
) -> Vec<Vec<Sample>> {
    let n = plan.n_samples;
    let total = prompts.len() * n;
    let slots: Vec<Mutex<Option<Sample>>> = (0..total).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let model = client.model_name().to_string();
    let work = || loop {
        let job = next.fetch_add(1, Ordering::Relaxed);
        if job >= total {
            return;
        }
        let (p, s) = (job / n, job % n);
        let prompt = &prompts[p];
        let key = cache_key(prompt, plan.temperature, s);
        let sample = match cache.and_then(|c| c.get(&model, &key)) {
            Some(text) => Sample {
                completion: Ok(text),
                from_cache: true,
            },
            None => {
                let completion = sample_one(client, prompt, plan.temperature, retry, cancel);
                if let (Some(c), Ok(text)) = (cache, &completion) {
                    if let Err(e) = c.put(&model, &key, text) {
                        log::warn!("cannot write cache entry {key}: {e}");
                    }
                }
                Sample {
                    completion,
                    from_cache: false,
                }
            }
        };
        *slots[job].lock().unwrap() = Some(sample);
    };
    let workers = plan.concurrency_limit.max(1).min(total.max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(work);
        }
    });
    let mut flat = slots.into_iter().map(|m| m.into_inner().unwrap().expect("every job ran"));
    (0..prompts.len()).map(|_| flat.by_ref().take(n).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Flaky {
        fails: AtomicUsize,
        calls: AtomicUsize,
    }

    impl CompletionClient for Flaky {
        fn complete(&self, prompt: &str, _t: f64) -> Result<String, CompletionError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            if self.fails.load(Ordering::SeqCst) > 0 {
                self.fails.fetch_sub(1, Ordering::SeqCst);
                return Err(CompletionError::Transient("HTTP 429".into()));
            }
            Ok(format!("echo:{prompt}"))
        }
        fn model_name(&self) -> &str {
            "org/model:v1"
        }
    }

    fn fast() -> RetryPolicy {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(1),
        }
    }

    #[test]
    fn retries_then_caches() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SampleCache::new(dir.path());
        let plan = SamplingPlan {
            n_samples: 2,
            temperature: 0.2,
            concurrency_limit: 1,
        };
        let client = Flaky {
            fails: AtomicUsize::new(2),
            calls: AtomicUsize::new(0),
        };
        let prompts = vec!["a".to_string(), "b".to_string()];
        let stop = AtomicBool::new(false);
        let out = sample_completions(&client, Some(&cache), &prompts, &plan, fast(), &stop);
        assert_eq!(out.len(), 2);
        assert!(out.iter().flatten().all(|s| s.completion.is_ok() && !s.from_cache));
        assert_eq!(out[1][0].completion.as_deref().unwrap(), "echo:b");
        assert_eq!(client.calls.load(Ordering::SeqCst), 6);
        // Warm cache: no further requests.
        let again = sample_completions(&client, Some(&cache), &prompts, &plan, fast(), &stop);
        assert_eq!(client.calls.load(Ordering::SeqCst), 6);
        assert!(again.iter().flatten().all(|s| s.from_cache));
        assert!(dir.path().join("org_model_v1").is_dir());
    }

    #[test]
    fn gives_up_after_attempts() {
        let client = Flaky {
            fails: AtomicUsize::new(10),
            calls: AtomicUsize::new(0),
        };
        let stop = AtomicBool::new(false);
        let plan = SamplingPlan {
            n_samples: 1,
            temperature: 0.0,
            concurrency_limit: 4,
        };
        let out = sample_completions(&client, None, &["p".to_string()], &plan, fast(), &stop);
        assert!(matches!(out[0][0].completion, Err(CompletionError::Transient(_))));
        assert_eq!(client.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn cancelled_before_start() {
        let client = Flaky {
            fails: AtomicUsize::new(0),
            calls: AtomicUsize::new(0),
        };
        let stop = AtomicBool::new(true);
        let out = sample_completions(&client, None, &["p".to_string()], &SamplingPlan::default(), fast(), &stop);
        assert!(out[0].iter().all(|s| s.completion == Err(CompletionError::Cancelled)));
        assert_eq!(client.calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn cache_keys_distinguish_inputs() {
        assert_ne!(cache_key("p", 0.2, 0), cache_key("p", 0.2, 1));
        assert_ne!(cache_key("p", 0.2, 0), cache_key("p", 0.3, 0));
        assert_eq!(cache_key("p", 0.2, 0).len(), 64);
    }

    #[test]
    fn chat_reply_parsing() {
        assert_eq!(
            parse_chat_reply(r#"{"choices":[{"message":{"role":"assistant","content":"hi"}}]}"#).unwrap(),
            "hi"
        );
        assert!(matches!(parse_chat_reply("{}"), Err(CompletionError::Fatal(_))));
    }
}
