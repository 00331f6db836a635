// Run the HTTP API on the fixture world and play one game over it with a
// bare-bones HTTP client.
//
// `cargo run --example serve_fixture -- --stay` keeps the server running.

use std::error::Error;
use std::io::{Read, Write};
use std::net::TcpStream;
use std::sync::Arc;

use mindle::config::ServerConfig;
use mindle::service::{serve_on, AppState};
use mindle::Engine;
use serde_json::{json, Value};

fn request(port: u16, method: &str, path: &str, body: Option<Value>) -> Result<(u16, Value), Box<dyn Error>> {
    let body = body.map(|b| b.to_string()).unwrap_or_default();
    let mut stream = TcpStream::connect(("127.0.0.1", port))?;
    write!(
        stream,
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )?;
    let mut raw = String::new();
    stream.read_to_string(&mut raw)?;
    let (head, payload) = raw.split_once("\r\n\r\n").ok_or("malformed response")?;
    let status = head.split_whitespace().nth(1).ok_or("no status")?.parse()?;
    Ok((status, serde_json::from_str(payload)?))
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let config = ServerConfig { nav_k: 2, ..ServerConfig::default() };
    let state = Arc::new(AppState::ephemeral(Engine::fixture(), config));
    let rt = tokio::runtime::Runtime::new()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))?;
    let port = listener.local_addr()?.port();
    let server = rt.spawn(serve_on(listener, state));
    println!("serving on http://127.0.0.1:{port}");

    let (_, ch) = request(port, "POST", "/api/challenges", Some(json!({"difficulty": "easy", "seed": 3})))?;
    println!("challenge {ch}");
    let (_, s) = request(port, "POST", "/api/sessions", Some(json!({"challenge_id": ch["challenge_id"], "mode": "both"})))?;
    println!("session   {s}");
    let sid = s["session_id"].as_str().ok_or("no session id")?.to_string();

    let (status, reply) = request(port, "POST", &format!("/api/sessions/{sid}/guesses"), Some(json!({"word": "unicorn"})))?;
    println!("unicorn   {status} {reply}");
    let (_, opts) = request(port, "GET", &format!("/api/sessions/{sid}/options"), None)?;
    println!("options   {opts}");
    let (_, view) = request(port, "GET", &format!("/api/sessions/{sid}"), None)?;
    assert!(view.get("target").is_none(), "target must stay hidden while open");

    for word in ["cat", "dog", "tiger", "car", "piano"] {
        let (status, reply) = request(port, "POST", &format!("/api/sessions/{sid}/guesses"), Some(json!({"word": word})))?;
        println!("{word:<9} {status} {reply}");
        if reply["hit"] == json!(true) {
            break;
        }
    }
    let (status, reply) = request(port, "POST", &format!("/api/sessions/{sid}/quit"), None)?;
    println!("quit      {status} {reply}");
    let (_, view) = request(port, "GET", &format!("/api/sessions/{sid}"), None)?;
    println!("target    {}", view["target"]);
    let (status, report) = request(port, "GET", &format!("/api/analysis/sessions/{sid}"), None)?;
    println!("analysis  {status} eureka steps {}", report["eureka_steps"]);

    if std::env::args().any(|a| a == "--stay") {
        rt.block_on(server)??;
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
