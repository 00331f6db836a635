// Persist finished sessions to the append-only log, load them back and
// replay their scores.

use std::error::Error;
use std::sync::Arc;

use mindle::analysis::{simulate_policy, PolicySpec};
use mindle::sessions::replay_scores;
use mindle::store::{LogStore, TrajectoryFilter};
use mindle::{Challenge, Difficulty, Engine, ProposalConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let engine = Arc::new(Engine::fixture());
    let lex = &engine.lexicon;
    let dir = std::env::temp_dir().join(format!("mindle-log-example-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let mut store = LogStore::open(&dir)?;

    let mut played = Vec::new();
    for (i, (start, target)) in [("car", "cat"), ("piano", "tiger"), ("dog", "piano")].into_iter().enumerate() {
        let ch = Challenge {
            id: format!("c{i}"),
            target: lex.lookup(target).ok_or("target")?,
            start: lex.lookup(start).ok_or("start")?,
            topic: None,
            difficulty: Difficulty::EASY,
            seed: i as u64,
        };
        let t = simulate_policy(&PolicySpec::GreedySimilar, ch, engine.clone(), &ProposalConfig::with_k(2), 5, i as u64)?;
        store.persist(&t, lex, "example")?;
        played.push(t);
    }
    for file in store.log_files()? {
        println!("{}:", file.display());
        print!("{}", std::fs::read_to_string(&file)?);
    }

    let loaded = store.load(&TrajectoryFilter::All, lex)?;
    assert_eq!(loaded, played);
    for t in &loaded {
        let replayed = replay_scores(t, &engine)?;
        assert!(replayed.iter().zip(&t.records).all(|(s, r)| *s == r.score));
        println!("{} {:?}: {} records replay exactly", t.session_id, t.outcome, t.records.len());
    }
    let only = store.load(&TrajectoryFilter::Challenge("c1".into()), lex)?;
    assert_eq!(only.len(), 1);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
