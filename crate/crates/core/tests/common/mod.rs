#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::thread;

/// One request as seen by [`MockServer`].
#[derive(Debug, Clone)]
pub struct Captured {
    pub request_line: String,
    pub headers: Vec<(String, String)>,
    pub body: String,
}

impl Captured {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::from_str(&self.body).expect("request body is JSON")
    }
}

type Responder = dyn Fn(usize, &Captured) -> (u16, String) + Send + Sync;

/// Minimal HTTP/1.1 server: one request per connection, answers produced by
/// a closure of (request index, request).
pub struct MockServer {
    pub base_url: String,
    pub captured: Arc<Mutex<Vec<Captured>>>,
}

fn read_request(stream: &mut TcpStream) -> Option<Captured> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line).ok()?;
    let mut headers = Vec::new();
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).ok()?;
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if k.eq_ignore_ascii_case("content-length") {
                content_length = v.parse().unwrap_or(0);
            }
            headers.push((k, v));
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body).ok()?;
    Some(Captured {
        request_line: request_line.trim_end().to_string(),
        headers,
        body: String::from_utf8(body).ok()?,
    })
}

impl MockServer {
    pub fn start<F>(responder: F) -> MockServer
    where
        F: Fn(usize, &Captured) -> (u16, String) + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let base_url = format!("http://{}", listener.local_addr().unwrap());
        let captured = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&captured);
        let responder: Arc<Responder> = Arc::new(responder);
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let log = Arc::clone(&log);
                let responder = Arc::clone(&responder);
                thread::spawn(move || {
                    let Some(req) = read_request(&mut stream) else { return };
                    let index = {
                        let mut guard = log.lock().unwrap();
                        guard.push(req.clone());
                        guard.len() - 1
                    };
                    let (status, body) = responder(index, &req);
                    let response = format!(
                        "HTTP/1.1 {status} Mock\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                        body.len()
                    );
                    let _ = stream.write_all(response.as_bytes());
                    let _ = stream.flush();
                });
            }
        });
        MockServer { base_url, captured }
    }

    pub fn requests(&self) -> Vec<Captured> {
        self.captured.lock().unwrap().clone()
    }
}

pub fn completion(content: &str) -> String {
    serde_json::json!({
        "id": "chatcmpl-mock",
        "object": "chat.completion",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}]
    })
    .to_string()
}

/// Answers with the gold label embedded in the prompt's target cause by
/// looking it up in `answers` (cause substring -> reply).
pub fn reply_by_cause(answers: Vec<(String, String)>) -> impl Fn(usize, &Captured) -> (u16, String) {
    move |_, req| {
        let prompt = req.json()["messages"][0]["content"].as_str().unwrap().to_string();
        let target = prompt.rsplit("Cause: ").next().unwrap_or("");
        let reply = answers
            .iter()
            .find(|(cause, _)| target == cause)
            .map(|(_, r)| r.as_str())
            .unwrap_or("Other");
        (200, completion(reply))
    }
}

pub fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// Writes the first `n` lines of the 90-record fixture to `dir`.
pub fn fixture_subset(dir: &Path, n: usize) -> PathBuf {
    let text = std::fs::read_to_string(fixture_path("incidents_90.jsonl")).unwrap();
    let subset: String = text.lines().take(n).map(|l| format!("{l}\n")).collect();
    let path = dir.join(format!("incidents_{n}.jsonl"));
    std::fs::write(&path, subset).unwrap();
    path
}

/// Relative path -> bytes for every file under `root`.
pub fn snapshot_tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}
