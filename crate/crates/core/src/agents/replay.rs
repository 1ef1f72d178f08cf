//! A local chat-completions stub that replays canned replies.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use serde_json::{json, Value};

#[derive(Debug, Default)]
struct State {
    replies: Vec<String>,
    next: usize,
    failures_left: usize,
    requests: Vec<Value>,
}

/// Serves `POST .../chat/completions` on 127.0.0.1, answering with the
/// configured replies in order (cycled). The first `failures` requests get
/// HTTP 429 instead.
pub struct ReplayServer {
    addr: SocketAddr,
    state: Arc<Mutex<State>>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl ReplayServer {
    pub fn start(replies: Vec<String>) -> std::io::Result<Self> {
        Self::start_with_failures(replies, 0)
    }

    pub fn start_with_failures(replies: Vec<String>, failures: usize) -> std::io::Result<Self> {
        assert!(!replies.is_empty(), "replay server needs at least one reply");
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let state = Arc::new(Mutex::new(State {
            replies,
            failures_left: failures,
            ..State::default()
        }));
        let stop = Arc::new(AtomicBool::new(false));
        let handle = {
            let state = Arc::clone(&state);
            let stop = Arc::clone(&stop);
            thread::spawn(move || {
                for conn in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(conn) = conn else { continue };
                    let state = Arc::clone(&state);
                    thread::spawn(move || {
                        let _ = serve(conn, &state);
                    });
                }
            })
        };
        Ok(ReplayServer {
            addr,
            state,
            stop,
            handle: Some(handle),
        })
    }

    /// Base URL to put in a remote agent config (`.../v1`).
    pub fn base_url(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    /// Bodies of every request received so far, including rejected ones.
    pub fn requests(&self) -> Vec<Value> {
        self.state.lock().unwrap().requests.clone()
    }
}

impl Drop for ReplayServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve(conn: TcpStream, state: &Mutex<State>) -> std::io::Result<()> {
    let mut reader = BufReader::new(conn.try_clone()?);
    let mut request_line = String::new();
    if reader.read_line(&mut request_line)? == 0 {
        return Ok(());
    }
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                content_length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;
    let parsed: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);

    let (status, payload) = {
        let mut st = state.lock().unwrap();
        st.requests.push(parsed);
        if !request_line.starts_with("POST ") || !request_line.contains("/chat/completions") {
            (404, json!({"error": "not found"}))
        } else if st.failures_left > 0 {
            st.failures_left -= 1;
            (429, json!({"error": "rate limited"}))
        } else {
            let reply = st.replies[st.next % st.replies.len()].clone();
            st.next += 1;
            (
                200,
                json!({
                    "object": "chat.completion",
                    "choices": [{
                        "index": 0,
                        "message": {"role": "assistant", "content": reply},
                        "finish_reason": "stop"
                    }]
                }),
            )
        }
    };
    let text = payload.to_string();
    let reason = match status {
        200 => "OK",
        429 => "Too Many Requests",
        _ => "Not Found",
    };
    let mut out = conn;
    write!(
        out,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
        text.len()
    )?;
    out.flush()
}
