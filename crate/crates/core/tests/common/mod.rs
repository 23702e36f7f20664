//! Helpers shared by the integration tests: fixture paths and a scripted
//! chat-completions server.
#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;

use serde_json::{json, Value};

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn fixture_runner() -> PathBuf {
    manifest_dir().join("tests/fixtures/runner.py")
}

pub fn pinned_subset() -> PathBuf {
    manifest_dir().join("data/pinned_subset.jsonl")
}

/// What the scripted server answers: HTTP status and message content.
pub type Reply = (u16, String);

type Handler = dyn Fn(&str, usize) -> Reply + Send + Sync;

/// A minimal HTTP/1.1 server speaking just enough of `/chat/completions`.
/// The handler receives the prompt and the 0-based request number.
pub struct MockServer {
    pub url: String,
    requests: Arc<AtomicUsize>,
    stop: Arc<AtomicBool>,
    port: u16,
}

impl MockServer {
    pub fn start(handler: impl Fn(&str, usize) -> Reply + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let port = listener.local_addr().unwrap().port();
        let requests = Arc::new(AtomicUsize::new(0));
        let stop = Arc::new(AtomicBool::new(false));
        let handler: Arc<Handler> = Arc::new(handler);
        {
            let requests = requests.clone();
            let stop = stop.clone();
            std::thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    let handler = handler.clone();
                    let requests = requests.clone();
                    std::thread::spawn(move || serve(stream, &*handler, &requests));
                }
            });
        }
        MockServer {
            url: format!("http://127.0.0.1:{port}/v1"),
            requests,
            stop,
            port,
        }
    }

    pub fn requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    /// Endpoint JSON pointing at this server.
    pub fn endpoint_json(&self, model: &str) -> String {
        json!({"base_url": self.url, "model_name": model, "request_timeout_ms": 10000}).to_string()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(("127.0.0.1", self.port));
    }
}

fn serve(stream: TcpStream, handler: &Handler, requests: &AtomicUsize) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut writer = stream;
    loop {
        let mut request_line = String::new();
        if reader.read_line(&mut request_line).unwrap_or(0) == 0 {
            return;
        }
        let mut length = 0usize;
        loop {
            let mut line = String::new();
            if reader.read_line(&mut line).unwrap_or(0) == 0 {
                return;
            }
            let line = line.trim_end();
            if line.is_empty() {
                break;
            }
            if let Some((k, v)) = line.split_once(':') {
                if k.eq_ignore_ascii_case("content-length") {
                    length = v.trim().parse().unwrap_or(0);
                }
            }
        }
        let mut body = vec![0; length];
        if reader.read_exact(&mut body).is_err() {
            return;
        }
        let n = requests.fetch_add(1, Ordering::SeqCst);
        let prompt = serde_json::from_slice::<Value>(&body)
            .ok()
            .and_then(|v| v.pointer("/messages/0/content").and_then(Value::as_str).map(str::to_string))
            .unwrap_or_default();
        let (status, content) = handler(&prompt, n);
        let payload = if status == 200 {
            json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]}).to_string()
        } else {
            json!({"error": {"message": content}}).to_string()
        };
        let response = format!(
            "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{payload}",
            payload.len()
        );
        if writer.write_all(response.as_bytes()).and_then(|_| writer.flush()).is_err() {
            return;
        }
    }
}
