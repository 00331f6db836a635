// A game session driven from code: typed guesses, an out-of-vocabulary
// word, an option pick and the hit.

use std::error::Error;
use std::sync::Arc;

use mindle::challenges::ChallengeRecord;
use mindle::sessions::Clock;
use mindle::{ActionType, Engine, GameSession, Mode, ProposalConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let engine = Arc::new(Engine::fixture());
    let record = ChallengeRecord {
        id: "demo".into(),
        start: "piano".into(),
        target: "tiger".into(),
        topic: None,
        difficulty: mindle::Difficulty::EASY,
        seed: 0,
    };
    let challenge = record.resolve(&engine.lexicon)?;
    let clock = Clock::Manual { next: 0, step: 1_000 };
    let mut session = GameSession::start_with("demo-session".into(), challenge, engine.clone(), Mode::Both, clock)?;
    println!("start {} scores {}", session.current().word, session.current().score);

    let g = session.submit_guess("car")?;
    println!("car    -> {} (step {})", g.score, g.step);
    if let Err(e) = session.submit_guess("zebra") {
        println!("zebra  -> {e}");
    }

    let options = session.options(&ProposalConfig::with_k(2))?;
    let related: Vec<&str> = options.list(ActionType::Related).iter().map(|c| engine.lexicon.word(*c)).collect();
    println!("related options from car: {related:?}");
    let pick = related.first().ok_or("no related option")?.to_string();
    let g = session.select_option(&pick)?;
    println!("{pick:<6} -> {} (option)", g.score);

    let g = session.submit_guess("tiger")?;
    println!("tiger  -> {} hit={}", g.score, g.hit);
    assert!(g.hit && !session.is_open());

    let trajectory = session.into_trajectory();
    println!("{}", serde_json::to_string_pretty(&trajectory.records)?);
    println!("oov attempts: {:?}", trajectory.oov.iter().map(|o| &o.word).collect::<Vec<_>>());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
