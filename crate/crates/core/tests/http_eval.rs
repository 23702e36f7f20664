//! The HTTP completion client against a scripted local server.

mod common;

use std::sync::atomic::AtomicBool;
use std::time::Duration;

use common::MockServer;
use mutabench::eval::{
    sample_completions, CompletionClient, CompletionError, HttpClient, ModelEndpoint, RetryPolicy, SampleCache,
    SamplingPlan,
};

fn endpoint(server: &MockServer) -> ModelEndpoint {
    ModelEndpoint::load_all(&server.endpoint_json("mock-model")).unwrap().remove(0)
}

fn fast_retry() -> RetryPolicy {
    RetryPolicy {
        attempts: 3,
        base_delay: Duration::from_millis(5),
    }
}

#[test]
fn completion_round_trip() {
    let server = MockServer::start(|prompt, _| (200, format!("got {} chars", prompt.len())));
    let client = HttpClient::new(endpoint(&server));
    assert!(client.url().ends_with("/v1/chat/completions"));
    assert_eq!(client.complete("hello", 0.2).unwrap(), "got 5 chars");
}

#[test]
fn rate_limits_are_retried() {
    // The first two requests are throttled, then the server answers.
    let server = MockServer::start(|_, n| if n < 2 { (429, "slow down".into()) } else { (200, "ok".into()) });
    let client = HttpClient::new(endpoint(&server));
    let plan = SamplingPlan {
        n_samples: 1,
        temperature: 0.2,
        concurrency_limit: 1,
    };
    let out = sample_completions(&client, None, &["p".into()], &plan, fast_retry(), &AtomicBool::new(false));
    assert_eq!(out[0][0].completion.as_deref(), Ok("ok"));
    assert_eq!(server.requests(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let server = MockServer::start(|_, _| (401, "bad token".into()));
    let client = HttpClient::new(endpoint(&server));
    let plan = SamplingPlan {
        n_samples: 1,
        temperature: 0.2,
        concurrency_limit: 1,
    };
    let out = sample_completions(&client, None, &["p".into()], &plan, fast_retry(), &AtomicBool::new(false));
    assert!(matches!(&out[0][0].completion, Err(CompletionError::Fatal(m)) if m.contains("401")));
    assert_eq!(server.requests(), 1);
}

#[test]
fn warm_cache_makes_no_requests() {
    let server = MockServer::start(|prompt, _| (200, format!("assert f(1) == {}", prompt.len())));
    let client = HttpClient::new(endpoint(&server));
    let dir = tempfile::tempdir().unwrap();
    let cache = SampleCache::new(dir.path());
    let plan = SamplingPlan {
        n_samples: 5,
        temperature: 0.2,
        concurrency_limit: 4,
    };
    let prompts: Vec<String> = (0..4).map(|i| format!("prompt {i}")).collect();
    let stop = AtomicBool::new(false);
    let cold = sample_completions(&client, Some(&cache), &prompts, &plan, fast_retry(), &stop);
    assert_eq!(server.requests(), 20);
    let warm = sample_completions(&client, Some(&cache), &prompts, &plan, fast_retry(), &stop);
    assert_eq!(server.requests(), 20);
    assert!(warm.iter().flatten().all(|s| s.from_cache));
    let texts = |v: &Vec<Vec<mutabench::eval::Sample>>| -> Vec<String> {
        v.iter().flatten().map(|s| s.completion.clone().unwrap()).collect()
    };
    assert_eq!(texts(&cold), texts(&warm));
}
