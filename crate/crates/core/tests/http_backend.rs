use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use srl_core::gateway::{ApiStyle, CompletionBackend, CompletionRequest, Gateway, GatewayError, HttpBackend, RetryPolicy};

struct Captured {
    head: String,
    body: serde_json::Value,
}

/// Serves one canned `(status, body)` per connection, in order, and reports each request.
fn serve(responses: Vec<(u16, String)>) -> (String, mpsc::Receiver<Captured>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut head = String::new();
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
                head.push_str(&line);
            }
            let mut buf = vec![0; length];
            reader.read_exact(&mut buf).unwrap();
            tx.send(Captured { head, body: serde_json::from_slice(&buf).unwrap() }).unwrap();
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (format!("http://{addr}/v1/chat/completions"), rx)
}

fn chat_reply(text: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string()
}

#[test]
fn chat_request_shape_and_reply() {
    let (url, rx) = serve(vec![(200, chat_reply("{\"sold\": {\"A0\": \"John\"}}"))]);
    let backend = HttpBackend::new(url, Some("sk-test".into()), ApiStyle::Chat, Duration::from_secs(10));
    let mut request = CompletionRequest::new("label this", "gpt-3.5-turbo");
    request.stop = Some(vec!["\n\n".into()]);
    let text = backend.complete(&request).unwrap();
    assert_eq!(text, "{\"sold\": {\"A0\": \"John\"}}");

    let seen = rx.recv().unwrap();
    assert!(seen.head.starts_with("POST /v1/chat/completions"));
    assert!(seen.head.to_ascii_lowercase().contains("authorization: bearer sk-test"));
    assert_eq!(seen.body["model"], "gpt-3.5-turbo");
    assert_eq!(seen.body["messages"][0]["content"], "label this");
    assert_eq!(seen.body["temperature"], 0.0);
    assert_eq!(seen.body["max_tokens"], 512);
    assert_eq!(seen.body["stop"][0], "\n\n");
}

#[test]
fn completion_style_reads_text_field() {
    let reply = serde_json::json!({"choices": [{"text": " A"}]}).to_string();
    let (url, rx) = serve(vec![(200, reply)]);
    let backend = HttpBackend::new(url, None, ApiStyle::Completion, Duration::from_secs(10));
    assert_eq!(backend.complete(&CompletionRequest::new("q", "davinci")).unwrap(), " A");
    let seen = rx.recv().unwrap();
    assert_eq!(seen.body["prompt"], "q");
    assert!(!seen.head.to_ascii_lowercase().contains("authorization"));
}

#[test]
fn rate_limit_is_retried_by_the_gateway() {
    let (url, _rx) = serve(vec![(429, "{}".into()), (429, "{}".into()), (200, chat_reply("ok"))]);
    let backend = HttpBackend::new(url, None, ApiStyle::Chat, Duration::from_secs(10));
    let gw = Gateway::new(backend).with_retry(RetryPolicy { max_attempts: 5, backoff_ms: vec![1] });
    assert_eq!(gw.complete(&CompletionRequest::new("p", "m")).unwrap(), "ok");
    let stats = gw.stats().snapshot();
    assert_eq!((stats.backend_calls, stats.retries), (3, 2));
}

#[test]
fn server_errors_surface_as_transport() {
    let (url, _rx) = serve(vec![(500, "{\"error\": \"boom\"}".into()), (200, "{\"choices\": []}".into())]);
    let backend = HttpBackend::new(url, None, ApiStyle::Chat, Duration::from_secs(10));
    let err = backend.complete(&CompletionRequest::new("p", "m")).unwrap_err();
    assert!(matches!(&err, GatewayError::Transport(m) if m.contains("500")), "{err:?}");
    let err = backend.complete(&CompletionRequest::new("p", "m")).unwrap_err();
    assert!(matches!(&err, GatewayError::Transport(m) if m.contains("no completion text")), "{err:?}");
}

#[test]
fn unreachable_endpoint_is_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let backend = HttpBackend::new(format!("http://127.0.0.1:{port}/"), None, ApiStyle::Chat, Duration::from_secs(2));
    assert!(matches!(backend.complete(&CompletionRequest::new("p", "m")), Err(GatewayError::Transport(_))));
}
