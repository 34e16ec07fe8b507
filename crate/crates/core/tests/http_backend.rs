use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use dezh_core::mt_client::{Backend, BackendConfig, HttpBackend};
use dezh_core::Error;
use serde_json::{json, Value};

#[derive(Debug, Clone)]
struct Seen {
    authorization: Option<String>,
    body: Value,
}

type Handler = Box<dyn Fn(usize, &Value) -> (u16, String) + Send>;

/// Minimal HTTP/1.1 server: one request per connection.
struct Server {
    url: String,
    seen: Arc<Mutex<Vec<Seen>>>,
}

impl Server {
    fn start(handler: Handler) -> Server {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/translate", listener.local_addr().unwrap());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&seen);
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { break };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let (mut length, mut authorization) = (0, None);
                loop {
                    line.clear();
                    reader.read_line(&mut line).unwrap();
                    let l = line.trim_end();
                    if l.is_empty() {
                        break;
                    }
                    let (name, value) = l.split_once(':').unwrap();
                    match name.to_ascii_lowercase().as_str() {
                        "content-length" => length = value.trim().parse().unwrap(),
                        "authorization" => authorization = Some(value.trim().to_string()),
                        _ => {}
                    }
                }
                let mut body = vec![0; length];
                reader.read_exact(&mut body).unwrap();
                let body: Value = serde_json::from_slice(&body).unwrap();
                let n = {
                    let mut log = log.lock().unwrap();
                    log.push(Seen {
                        authorization,
                        body: body.clone(),
                    });
                    log.len() - 1
                };
                let (status, reply) = handler(n, &body);
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                    reply.len()
                )
                .unwrap();
            }
        });
        Server { url, seen }
    }

    fn seen(&self) -> Vec<Seen> {
        self.seen.lock().unwrap().clone()
    }
}

/// Uppercases each text.
fn echo(body: &Value) -> String {
    let out: Vec<String> = body["texts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t.as_str().unwrap().to_uppercase())
        .collect();
    json!({ "translations": out }).to_string()
}

fn config(url: &str) -> BackendConfig {
    let mut c = BackendConfig::new(url);
    c.backoff_base = Duration::from_millis(1);
    c.timeout = Duration::from_secs(5);
    c
}

fn texts(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("t{i}")).collect()
}

#[test]
fn batches_and_order() {
    let server = Server::start(Box::new(|_, b| (200, echo(b))));
    let mut c = config(&server.url);
    c.bearer_token = Some("sekrit".into());
    let backend = HttpBackend::new(c).unwrap();
    let input = texts(33);
    let out = backend.translate_batch(&input).unwrap();
    assert_eq!(out.len(), 33);
    for (i, r) in out.iter().enumerate() {
        assert_eq!(r.source, input[i]);
        assert_eq!(r.translation, input[i].to_uppercase());
        assert_eq!(r.backend_id, backend.backend_id());
    }
    let seen = server.seen();
    let mut sizes: Vec<usize> = seen.iter().map(|s| s.body["texts"].as_array().unwrap().len()).collect();
    sizes.sort();
    assert_eq!(sizes, [1, 16, 16]);
    for s in &seen {
        assert_eq!(s.authorization.as_deref(), Some("Bearer sekrit"));
        assert_eq!(s.body["src"], "zh");
        assert_eq!(s.body["tgt"], "en");
        assert_eq!(s.body.as_object().unwrap().len(), 3);
    }
}

#[test]
fn non_200_is_retried_then_succeeds() {
    let server = Server::start(Box::new(|n, b| if n < 2 { (503, "{}".into()) } else { (200, echo(b)) }));
    let backend = HttpBackend::new(config(&server.url)).unwrap();
    let out = backend.translate(&texts(3)).unwrap();
    assert_eq!(out, ["T0", "T1", "T2"]);
    assert_eq!(server.seen().len(), 3);
}

#[test]
fn retries_are_bounded() {
    let server = Server::start(Box::new(|_, _| (500, "oops".into())));
    let mut c = config(&server.url);
    c.max_retries = 3;
    let backend = HttpBackend::new(c).unwrap();
    let err = backend.translate(&texts(2)).unwrap_err();
    match err {
        Error::BatchFailed {
            batch,
            attempts,
            reason,
        } => {
            assert_eq!((batch, attempts), (0, 4));
            assert!(reason.contains("500"), "{reason}");
        }
        other => panic!("{other}"),
    }
    assert_eq!(server.seen().len(), 4);
}

#[test]
fn malformed_response_is_a_protocol_error() {
    let server = Server::start(Box::new(|_, _| (200, "{\"translation\": []}".into())));
    let backend = HttpBackend::new(config(&server.url)).unwrap();
    assert!(matches!(backend.translate(&texts(2)), Err(Error::Protocol { .. })));
    assert_eq!(server.seen().len(), 1);
}

#[test]
fn wrong_count_is_a_protocol_error() {
    let server = Server::start(Box::new(|_, _| (200, json!({ "translations": ["x"] }).to_string())));
    let backend = HttpBackend::new(config(&server.url)).unwrap();
    assert!(matches!(backend.translate(&texts(2)), Err(Error::Protocol { .. })));
}

#[test]
fn unreachable_endpoint_fails_after_retries() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut c = config(&format!("http://127.0.0.1:{port}/translate"));
    c.max_retries = 1;
    let backend = HttpBackend::new(c).unwrap();
    assert!(matches!(
        backend.translate(&texts(1)),
        Err(Error::BatchFailed { attempts: 2, .. })
    ));
}
