#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request};
use axum::Router;
use http_body_util::BodyExt;
use mindle::service::{router, AppState};
use serde_json::Value;
use tower::ServiceExt;

/// In-process client for the HTTP API.
pub struct Api {
    pub state: Arc<AppState>,
    router: Router,
}

impl Api {
    pub fn new(state: Arc<AppState>) -> Api {
        Api { router: router(state.clone()), state }
    }

    pub async fn call(&self, method: Method, path: &str, body: Option<Value>) -> (u16, Value) {
        let req = Request::builder()
            .method(method)
            .uri(path)
            .header("content-type", "application/json")
            .body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty))
            .unwrap();
        let resp = self.router.clone().oneshot(req).await.unwrap();
        let status = resp.status().as_u16();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
        (status, value)
    }

    pub async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        self.call(Method::POST, path, Some(body)).await
    }

    pub async fn get(&self, path: &str) -> (u16, Value) {
        self.call(Method::GET, path, None).await
    }

    /// Creates a challenge and opens a session on it; returns the session id.
    pub async fn session(&self, challenge: Value, mode: &str) -> String {
        let (status, ch) = self.post("/api/challenges", challenge).await;
        assert_eq!(status, 200, "{ch}");
        let (status, s) = self
            .post("/api/sessions", serde_json::json!({"challenge_id": ch["challenge_id"], "mode": mode}))
            .await;
        assert_eq!(status, 200, "{s}");
        s["session_id"].as_str().unwrap().to_string()
    }

    pub fn target_of(&self, challenge_reply: &Value) -> String {
        let ch = self.state.challenge(challenge_reply["challenge_id"].as_str().unwrap()).unwrap();
        self.state.engine().lexicon.word(ch.target).to_string()
    }

    pub fn session_target(&self, sid: &str) -> String {
        let ch = self.state.session_challenge(sid).unwrap();
        self.state.engine().lexicon.word(ch.target).to_string()
    }
}

pub mod world {
    use mindle::graph::ConceptGraph;
    use mindle::lexicon::Lexicon;
    use mindle::{ConceptId, Engine};
    use rand::Rng;

    /// `n` words with nonzero vectors of small integers in `-grid..=grid`,
    /// so equal cosines (ties) are common.
    pub fn grid_lexicon(rng: &mut impl Rng, n: usize, dim: usize, grid: i32) -> Lexicon {
        let rows = (0..n).map(|i| {
            let mut v: Vec<f64> = (0..dim).map(|_| f64::from(rng.random_range(-grid..=grid))).collect();
            if v.iter().all(|x| *x == 0.0) {
                v[i % dim] = 1.0;
            }
            (format!("w{i}"), v)
        });
        Lexicon::from_entries(rows, n).unwrap()
    }

    /// `n` words with real-valued vectors.
    pub fn real_lexicon(rng: &mut impl Rng, n: usize, dim: usize) -> Lexicon {
        let rows = (0..n).map(|i| {
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            (format!("w{i}"), v)
        });
        Lexicon::from_entries(rows, n).unwrap()
    }

    /// Random directed graph with up to `max_out` edges per node and integer
    /// weights in `1..=max_w`; roughly one node in ten is left isolated.
    pub fn int_graph(rng: &mut impl Rng, n: usize, max_out: usize, max_w: u32) -> ConceptGraph {
        ConceptGraph::from_weights(n, int_triples(rng, n, max_out, max_w)).unwrap()
    }

    pub fn int_triples(rng: &mut impl Rng, n: usize, max_out: usize, max_w: u32) -> Vec<(ConceptId, ConceptId, f64)> {
        let mut triples = Vec::new();
        for i in 0..n {
            if rng.random_bool(0.1) {
                continue;
            }
            for _ in 0..rng.random_range(0..=max_out) {
                let k = rng.random_range(0..n);
                triples.push((ConceptId(i), ConceptId(k), f64::from(rng.random_range(1..=max_w))));
            }
        }
        triples
    }

    pub fn engine(rng: &mut impl Rng, n: usize, dim: usize) -> Engine {
        let lexicon = grid_lexicon(rng, n, dim, 3);
        let graph = int_graph(rng, n, 4, 5);
        Engine::new(lexicon, graph)
    }
}
