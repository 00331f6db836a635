// Seeded challenge generation with difficulty bounds checked on the
// navigation graph.

use std::error::Error;

use mindle::challenges::{generate_challenge, ChallengeConfig};
use mindle::{Difficulty, Engine};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let engine = Engine::fixture();
    let lex = &engine.lexicon;
    let nav = engine.navigation(2);
    println!("navigation graph: {} nodes, {} edges", nav.node_count(), nav.edge_count());

    let config = ChallengeConfig::default();
    for (name, d) in [("easy", Difficulty::EASY), ("one-step", Difficulty::new(1, 1, 1)?)] {
        for seed in 0..3 {
            let ch = generate_challenge(&nav, lex, d, None, seed, &config)?;
            let sp = nav.shortest_path(ch.start, ch.target).ok_or("unreachable")?;
            let paths = nav.count_paths(ch.start, ch.target, d.max_len);
            let route: Vec<&str> = sp.path.iter().map(|c| lex.word(*c)).collect();
            println!(
                "{name:<8} seed {seed}: {} -> {}  shortest {} via {route:?}, {paths} paths within {}",
                lex.word(ch.start),
                lex.word(ch.target),
                sp.length,
                d.max_len
            );
            assert!(sp.length >= d.min_len && sp.length <= d.max_len && paths >= d.min_paths);
            // Same seed, same challenge.
            assert_eq!(generate_challenge(&nav, lex, d, None, seed, &config)?, ch);
        }
    }

    // Too demanding for a five-word world: the error names the binding constraint.
    match generate_challenge(&nav, lex, Difficulty::HARD, None, 0, &ChallengeConfig { max_attempts: 200, ..config }) {
        Err(e) => println!("hard: {e}"),
        Ok(ch) => println!("hard: {:?}", ch.record(lex)),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
