//! Every runnable example doubles as a smoke test.

mod score_words {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/score_words.rs"));
}

mod build_graph {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/build_graph.rs"));
}

mod propose_options {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/propose_options.rs"));
}

mod generate_challenge {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/generate_challenge.rs"));
}

mod play_session {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/play_session.rs"));
}

mod eureka_analysis {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/eureka_analysis.rs"));
}

mod simulate_policies {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/simulate_policies.rs"));
}

mod log_replay {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/log_replay.rs"));
}

mod serve_fixture {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/serve_fixture.rs"));
}

#[test]
fn score_words_runs() {
    score_words::run_example().expect("score_words example should run");
}

#[test]
fn build_graph_runs() {
    build_graph::run_example().expect("build_graph example should run");
}

#[test]
fn propose_options_runs() {
    propose_options::run_example().expect("propose_options example should run");
}

#[test]
fn generate_challenge_runs() {
    generate_challenge::run_example().expect("generate_challenge example should run");
}

#[test]
fn play_session_runs() {
    play_session::run_example().expect("play_session example should run");
}

#[test]
fn eureka_analysis_runs() {
    eureka_analysis::run_example().expect("eureka_analysis example should run");
}

#[test]
fn simulate_policies_runs() {
    simulate_policies::run_example().expect("simulate_policies example should run");
}

#[test]
fn log_replay_runs() {
    log_replay::run_example().expect("log_replay example should run");
}

#[test]
fn serve_fixture_runs() {
    serve_fixture::run_example().expect("serve_fixture example should run");
}
