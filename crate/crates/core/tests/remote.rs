use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use icrl_bench::agents::{AgentError, ChatMessage, RemoteClient, RemoteConfig, ReplayServer};

fn config(base_url: String) -> RemoteConfig {
    RemoteConfig {
        model: "stub-model".into(),
        base_url: Some(base_url),
        backoff_initial_ms: 1,
        backoff_max_ms: 4,
        timeout_secs: 10,
        ..RemoteConfig::default()
    }
}

/// Answers every request with `status` and `body`; counts requests.
fn fixed_server(status: u16, body: &'static str) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = Arc::clone(&hits);
    thread::spawn(move || {
        for conn in listener.incoming() {
            let Ok(mut conn) = conn else { continue };
            let mut reader = BufReader::new(conn.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap_or(0);
                }
            }
            let mut buf = vec![0; len];
            let _ = reader.read_exact(&mut buf);
            counter.fetch_add(1, Ordering::SeqCst);
            let _ = write!(
                conn,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    (url, hits)
}

fn hello() -> Vec<ChatMessage> {
    vec![ChatMessage::system("Play."), ChatMessage::user("Your move.")]
}

#[test]
fn retries_rate_limits_then_succeeds() {
    let server = ReplayServer::start_with_failures(vec!["\\boxed{up}".into()], 2).unwrap();
    let client = RemoteClient::new(config(server.base_url())).unwrap();
    assert_eq!(client.complete(&hello()).unwrap(), "\\boxed{up}");
    let requests = server.requests();
    assert_eq!(requests.len(), 3);
    let body = &requests[2];
    assert_eq!(body["model"], "stub-model");
    assert_eq!(body["messages"][1]["role"], "user");
    assert_eq!(body["messages"][1]["content"], "Your move.");
    assert_eq!(body["temperature"], 0.6);
    assert_eq!(body["top_p"], 0.95);
}

#[test]
fn gives_up_after_max_retries() {
    let server = ReplayServer::start_with_failures(vec!["x".into()], 10).unwrap();
    let client = RemoteClient::new(RemoteConfig {
        max_retries: 2,
        ..config(server.base_url())
    })
    .unwrap();
    let err = client.complete(&hello()).unwrap_err();
    assert!(matches!(err, AgentError::Transport(ref m) if m.contains("3 attempts")), "{err}");
    assert_eq!(server.requests().len(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let (url, hits) = fixed_server(400, r#"{"error":"bad request"}"#);
    let err = RemoteClient::new(config(url)).unwrap().complete(&hello()).unwrap_err();
    assert!(matches!(err, AgentError::Transport(ref m) if m.contains("400")), "{err}");
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[test]
fn server_errors_are_retried() {
    let (url, hits) = fixed_server(503, "{}");
    let client = RemoteClient::new(RemoteConfig {
        max_retries: 3,
        ..config(url)
    })
    .unwrap();
    assert!(matches!(client.complete(&hello()), Err(AgentError::Transport(_))));
    assert_eq!(hits.load(Ordering::SeqCst), 4);
}

#[test]
fn malformed_completion_is_a_protocol_error() {
    let (url, _) = fixed_server(200, r#"{"choices":[]}"#);
    let err = RemoteClient::new(config(url)).unwrap().complete(&hello()).unwrap_err();
    assert!(matches!(err, AgentError::Protocol(_)), "{err}");
}

#[test]
fn missing_base_url_is_a_config_error() {
    let cfg = RemoteConfig {
        model: "m".into(),
        base_url_env: "ICRL_TEST_SURELY_UNSET_VARIABLE".into(),
        ..RemoteConfig::default()
    };
    assert!(matches!(RemoteClient::new(cfg), Err(AgentError::Config(_))));
}
