//! A tiny in-process chat-completions endpoint for tests.
//!
//! Serves a scripted sequence of responses over plain HTTP/1.1, one
//! connection at a time, and records the request bodies it saw. The
//! last scripted response repeats once the script is exhausted.

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

/// One scripted reply.
#[derive(Debug, Clone)]
pub enum StubResponse {
    /// A well-formed completion whose assistant content is the string.
    Chat(String),
    /// A bare HTTP status with an empty JSON body.
    Status(u16),
    /// Status 200 with an arbitrary (possibly malformed) body.
    RawBody(String),
}

pub struct StubServer {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    requests: Arc<Mutex<Vec<String>>>,
    handle: Option<JoinHandle<()>>,
}

impl StubServer {
    pub fn start(script: Vec<StubResponse>) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let shutdown = Arc::new(AtomicBool::new(false));
        let requests = Arc::new(Mutex::new(Vec::new()));

        let thread_shutdown = Arc::clone(&shutdown);
        let thread_requests = Arc::clone(&requests);
        let handle = std::thread::spawn(move || {
            let mut script = script.into_iter();
            let mut last: Option<StubResponse> = None;
            for stream in listener.incoming() {
                if thread_shutdown.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                let response = match script.next() {
                    Some(r) => {
                        last = Some(r.clone());
                        r
                    }
                    None => last.clone().unwrap_or(StubResponse::Status(500)),
                };
                let _ = serve_one(stream, &response, &thread_requests);
            }
        });

        Ok(Self {
            addr,
            shutdown,
            requests,
            handle: Some(handle),
        })
    }

    /// Endpoint URL to point a client at.
    pub fn url(&self) -> String {
        format!("http://{}/v1/chat/completions", self.addr)
    }

    /// Request bodies received so far.
    pub fn requests(&self) -> Vec<String> {
        self.requests.lock().unwrap().clone()
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        // Wake the accept loop.
        let _ = TcpStream::connect(self.addr);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn serve_one(
    mut stream: TcpStream,
    response: &StubResponse,
    requests: &Arc<Mutex<Vec<String>>>,
) -> std::io::Result<()> {
    let mut buf = Vec::new();
    let mut chunk = [0u8; 4096];
    // Read headers.
    let header_end = loop {
        let n = stream.read(&mut chunk)?;
        if n == 0 {
            return Ok(());
        }
        buf.extend_from_slice(&chunk[..n]);
        if let Some(pos) = find_header_end(&buf) {
            break pos;
        }
        if buf.len() > 1 << 20 {
            return Ok(());
        }
    };
    let headers = String::from_utf8_lossy(&buf[..header_end]).to_string();
    let content_length = headers
        .lines()
        .find_map(|l| {
            let (name, value) = l.split_once(':')?;
            name.eq_ignore_ascii_case("content-length")
                .then(|| value.trim().parse::<usize>().ok())?
        })
        .unwrap_or(0);
    let mut body = buf[header_end + 4..].to_vec();
    while body.len() < content_length {
        let n = stream.read(&mut chunk)?;
        if n == 0 {
            break;
        }
        body.extend_from_slice(&chunk[..n]);
    }
    requests
        .lock()
        .unwrap()
        .push(String::from_utf8_lossy(&body).to_string());

    let (status_line, payload) = match response {
        StubResponse::Chat(content) => {
            let body = serde_json::json!({
                "id": "stub-1",
                "object": "chat.completion",
                "choices": [{
                    "index": 0,
                    "message": {"role": "assistant", "content": content},
                    "finish_reason": "stop"
                }],
                "usage": {"prompt_tokens": 1, "completion_tokens": 1, "total_tokens": 2}
            });
            ("HTTP/1.1 200 OK", body.to_string())
        }
        StubResponse::Status(code) => {
            let line: &'static str = match code {
                400 => "HTTP/1.1 400 Bad Request",
                404 => "HTTP/1.1 404 Not Found",
                429 => "HTTP/1.1 429 Too Many Requests",
                500 => "HTTP/1.1 500 Internal Server Error",
                503 => "HTTP/1.1 503 Service Unavailable",
                _ => "HTTP/1.1 500 Internal Server Error",
            };
            (line, "{}".to_string())
        }
        StubResponse::RawBody(body) => ("HTTP/1.1 200 OK", body.clone()),
    };
    let reply = format!(
        "{status_line}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    );
    stream.write_all(reply.as_bytes())?;
    stream.flush()?;
    Ok(())
}

fn find_header_end(buf: &[u8]) -> Option<usize> {
    buf.windows(4).position(|w| w == b"\r\n\r\n")
}
