// Scripted search policies: greedy local search stalls on an island of
// fruit, a local-global switch jumps across to the tools.

use std::error::Error;
use std::sync::Arc;

use mindle::analysis::{label_actions, simulate_policy, JumpSource, PolicySpec};
use mindle::{fixture, ActionType, Challenge, Difficulty, Outcome, ProposalConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let engine = Arc::new(fixture::islands());
    let lex = &engine.lexicon;
    let challenge = Challenge {
        id: "islands".into(),
        target: lex.lookup("chisel").ok_or("chisel")?,
        start: lex.lookup("apple").ok_or("apple")?,
        topic: None,
        difficulty: Difficulty::HARD,
        seed: 0,
    };
    let proposals = ProposalConfig::with_k(2);
    let policies = [
        PolicySpec::GreedySimilar,
        PolicySpec::LocalGlobalSwitch { patience: 1, jump: JumpSource::BestUnrelated },
    ];
    let mut outcomes = Vec::new();
    for policy in &policies {
        let t = simulate_policy(policy, challenge.clone(), engine.clone(), &proposals, 20, 7)?;
        let labels = label_actions(&t, &engine, proposals.theta_sim, proposals.theta_rel);
        println!("{policy:?}: {:?}", t.outcome);
        for (r, label) in t.records.iter().skip(1).zip(&labels.labels) {
            println!("  {:<7} {:>6}  {}", r.word, r.score, label.as_str());
        }
        outcomes.push((t.outcome, labels.labels.contains(&ActionType::Unrelated)));
    }
    assert_eq!(outcomes[0], (Outcome::Quit, false));
    assert_eq!(outcomes[1], (Outcome::Solved, true));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
