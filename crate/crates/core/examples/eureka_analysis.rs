// Eureka metrics and counterfactual updating rates.

use std::error::Error;
use std::sync::Arc;

use mindle::analysis::{
    analyze_trajectory, best_counterfactual_rate, eureka_profile, literal_rate, AnalysisConfig, RewardSeries,
};
use mindle::sessions::Clock;
use mindle::{Challenge, Difficulty, Engine, GameSession, Mode};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    // A score series with a sudden jump after step 1.
    let series = RewardSeries::new(vec![10.0, 12.0, 40.0, 45.0, 50.0])?;
    let report = eureka_profile(&series, 20.0);
    println!("delta r {:?}", report.delta_r);
    println!("delta a {:?}", report.delta_a);
    println!("eureka at steps {:?}", report.eureka_steps);
    assert_eq!(report.delta_a[1], 33.0);

    println!("literal rate (min 20, actual 50) = {}", literal_rate(20.0, 50.0));
    println!("best-counterfactual rate (max 80, actual 50) = {}", best_counterfactual_rate(80.0, 50.0));

    // The same analysis on a played trajectory, with updating rates over the full vocabulary.
    let engine = Arc::new(Engine::fixture());
    let lex = &engine.lexicon;
    let challenge = Challenge {
        id: "eureka".into(),
        target: lex.lookup("dog").ok_or("dog")?,
        start: lex.lookup("piano").ok_or("piano")?,
        topic: None,
        difficulty: Difficulty::EASY,
        seed: 0,
    };
    let mut s = GameSession::start_with("e1".into(), challenge, engine.clone(), Mode::Typing, Clock::Manual { next: 0, step: 1 })?;
    for w in ["car", "tiger", "dog"] {
        s.submit_guess(w)?;
    }
    let report = analyze_trajectory(s.trajectory(), &engine, &AnalysisConfig::default())?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
