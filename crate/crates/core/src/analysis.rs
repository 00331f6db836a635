//! Metrics over recorded trajectories and scripted baseline players.
//!
//! Scores act as rewards: `r_t` is the score of record `t`, and the action
//! taken at step `t` is the guess that produced record `t + 1`. Transitions
//! are deterministic (the next state is the guessed concept), so the reward
//! of any alternative action `a` at step `t` is simply `score(a, target)`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::challenges::Challenge;
use crate::lexicon::ConceptId;
use crate::proposals::{classify_transition, propose, ActionType, ProposalConfig, ProposalError};
use crate::sessions::{Clock, GameSession, Mode, SessionError, Trajectory};
use crate::Engine;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("reward series must be non-empty with values in [0, 100]")]
    InvalidSeries,
    #[error("step {0} is not a transition of this trajectory")]
    StepOutOfRange(usize),
    #[error("updating rate undefined at step {0}: the taken action has zero reward")]
    UndefinedRate(usize),
    #[error("the evaluated action space is empty")]
    EmptySpace,
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Proposal(#[from] ProposalError),
}

/// Scores `r_0..r_n` of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RewardSeries(Vec<f64>);

impl RewardSeries {
    pub fn new(values: Vec<f64>) -> Result<RewardSeries, AnalysisError> {
        if values.is_empty() || values.iter().any(|v| !(0.0..=100.0).contains(v)) {
            return Err(AnalysisError::InvalidSeries);
        }
        Ok(RewardSeries(values))
    }

    pub fn from_trajectory(t: &Trajectory) -> RewardSeries {
        RewardSeries(t.scores())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Rewards earned by transitions: `r_1..r_n`.
    pub fn transition_rewards(&self) -> &[f64] {
        &self.0[1..]
    }
}

/// Which alternatives an updating rate is measured against.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "concepts")]
pub enum ActionSpace {
    /// Every concept in the vocabulary.
    #[default]
    Full,
    /// A masked subset of concepts.
    Masked(BTreeSet<ConceptId>),
    /// One representative per action type: the top proposal of each list.
    ThreeTypes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdatingVariant {
    /// `min{0, 1 - min_a R(a) / R(actual)}`.
    #[default]
    Literal,
    /// `max{0, 1 - R(actual) / max_a R(a)}`.
    BestCounterfactual,
}

impl UpdatingVariant {
    /// Rate from the taken action's reward and the rewards of the space.
    /// `None` when `actual` is not positive or the space is empty.
    pub fn rate(self, actual: f64, space: impl IntoIterator<Item = f64>) -> Option<f64> {
        if actual <= 0.0 {
            return None;
        }
        let mut rewards = space.into_iter().peekable();
        rewards.peek()?;
        Some(match self {
            UpdatingVariant::Literal => literal_rate(rewards.fold(f64::INFINITY, f64::min), actual),
            UpdatingVariant::BestCounterfactual => {
                best_counterfactual_rate(rewards.fold(f64::NEG_INFINITY, f64::max), actual)
            }
        })
    }
}

pub fn literal_rate(min_reward: f64, actual: f64) -> f64 {
    (1.0 - min_reward / actual).min(0.0)
}

pub fn best_counterfactual_rate(max_reward: f64, actual: f64) -> f64 {
    if max_reward <= 0.0 {
        return 0.0;
    }
    (1.0 - actual / max_reward).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    /// Discount factor in (0, 1].
    pub gamma: f64,
    /// Minimum Δa, in score points, for a step to be flagged as a eureka moment.
    pub theta_eureka: f64,
    pub space: ActionSpace,
    pub variant: UpdatingVariant,
    pub proposals: ProposalConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            gamma: 1.0,
            theta_eureka: 20.0,
            space: ActionSpace::Full,
            variant: UpdatingVariant::Literal,
            proposals: ProposalConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRate {
    pub step: usize,
    pub literal: Option<f64>,
    pub best_counterfactual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EurekaReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    pub delta_r: Vec<f64>,
    pub delta_a: Vec<f64>,
    pub eureka_steps: Vec<usize>,
    pub rates: Vec<StepRate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actions: Option<ActionLabels>,
}

/// `Δr(t) = r_{t+1} - r_t`.
pub fn reward_deltas(r: &[f64]) -> Vec<f64> {
    r.windows(2).map(|w| w[1] - w[0]).collect()
}

/// `Δa(t)` for every step `t` of `r`.
///
/// The critical points around `t` are the nearest earlier step `i` and the
/// nearest later step `j` whose reward jump is at least `Δr(t)`; without one
/// `i` is 0 and `j` is the last index of `r`. `Δa(t)` is the mean reward over
/// `(t, j]` minus the mean over `(i, t]`. When `i == t` (only at `t = 0`)
/// the second window is empty and `r_t` stands in for its mean.
pub fn delta_a(r: &[f64]) -> Vec<f64> {
    let dr = reward_deltas(r);
    let last = r.len().saturating_sub(1);
    (0..dr.len())
        .map(|t| {
            let i = (0..t).rev().find(|&i| dr[i] >= dr[t]).unwrap_or(0);
            let j = (t + 1..dr.len()).find(|&j| dr[j] >= dr[t]).unwrap_or(last);
            let before = if t > i { mean(&r[i + 1..=t]) } else { r[t] };
            mean(&r[t + 1..=j]) - before
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Reward deltas, `Δa` and the steps where `Δa >= theta_eureka`. Rates are
/// left empty; [`analyze_trajectory`] fills them.
pub fn eureka_profile(series: &RewardSeries, theta_eureka: f64) -> EurekaReport {
    let r = series.values();
    let delta_a = delta_a(r);
    let eureka_steps = delta_a.iter().enumerate().filter(|(_, &a)| a >= theta_eureka).map(|(t, _)| t).collect();
    EurekaReport { session_id: None, delta_r: reward_deltas(r), delta_a, eureka_steps, rates: Vec::new(), actions: None }
}

/// Rewards of the alternatives in `space` at step `t`.
fn space_rewards(
    traj: &Trajectory,
    t: usize,
    space: &ActionSpace,
    engine: &Engine,
    proposals: &ProposalConfig,
) -> Result<Vec<f64>, AnalysisError> {
    let lex = &engine.lexicon;
    let target = traj.challenge.target;
    let score = |c: ConceptId| lex.score(c, target).map(|s| s.value()).unwrap_or(0.0);
    let rewards = match space {
        ActionSpace::Full => lex.ids().map(score).collect(),
        ActionSpace::Masked(mask) => mask.iter().copied().filter(|c| lex.contains(*c)).map(score).collect(),
        ActionSpace::ThreeTypes => {
            let set = propose(lex, &engine.graph, traj.records[t].concept, proposals)?;
            ActionType::ALL.into_iter().filter_map(|k| set.list(k).first().copied()).map(score).collect()
        }
    };
    Ok(rewards)
}

/// Counterfactual updating rate of the action taken at step `t`.
pub fn updating_rate(
    traj: &Trajectory,
    t: usize,
    space: &ActionSpace,
    engine: &Engine,
    proposals: &ProposalConfig,
    variant: UpdatingVariant,
) -> Result<f64, AnalysisError> {
    if t + 1 >= traj.records.len() {
        return Err(AnalysisError::StepOutOfRange(t));
    }
    let actual = traj.records[t + 1].score.value();
    if actual <= 0.0 {
        return Err(AnalysisError::UndefinedRate(t));
    }
    let rewards = space_rewards(traj, t, space, engine, proposals)?;
    variant.rate(actual, rewards).ok_or(AnalysisError::EmptySpace)
}

/// Full report for one trajectory: eureka profile plus both updating-rate
/// variants at every step (`null` where undefined).
pub fn analyze_trajectory(
    traj: &Trajectory,
    engine: &Engine,
    config: &AnalysisConfig,
) -> Result<EurekaReport, AnalysisError> {
    let series = RewardSeries::new(traj.scores())?;
    let mut report = eureka_profile(&series, config.theta_eureka);
    report.session_id = Some(traj.session_id.clone());
    for t in 0..traj.transitions() {
        let actual = traj.records[t + 1].score.value();
        let rewards = space_rewards(traj, t, &config.space, engine, &config.proposals)?;
        report.rates.push(StepRate {
            step: t,
            literal: UpdatingVariant::Literal.rate(actual, rewards.iter().copied()),
            best_counterfactual: UpdatingVariant::BestCounterfactual.rate(actual, rewards.iter().copied()),
        });
    }
    report.actions = Some(label_actions(traj, engine, config.proposals.theta_sim, config.proposals.theta_rel));
    Ok(report)
}

/// `sum_t gamma^t r_{t+1}` over the realised transitions.
pub fn discounted_return(series: &RewardSeries, gamma: f64) -> f64 {
    discounted_sum(series.transition_rewards(), gamma)
}

/// `sum_t gamma^t rewards[t]`.
pub fn discounted_sum(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    /// Similar or related moves.
    Local,
    /// Unrelated moves.
    Jump,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub mode: SearchMode,
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionLabels {
    pub labels: Vec<ActionType>,
    pub runs: Vec<Run>,
}

/// Labels every transition and groups them into local-search and jump runs.
pub fn label_actions(traj: &Trajectory, engine: &Engine, theta_sim: f64, theta_rel: f64) -> ActionLabels {
    let labels: Vec<ActionType> = traj
        .records
        .windows(2)
        .map(|w| classify_transition(&engine.lexicon, &engine.graph, w[0].concept, w[1].concept, theta_sim, theta_rel))
        .collect();
    let mut runs: Vec<Run> = Vec::new();
    for (t, label) in labels.iter().enumerate() {
        let mode = if *label == ActionType::Unrelated { SearchMode::Jump } else { SearchMode::Local };
        match runs.last_mut() {
            Some(run) if run.mode == mode => run.len += 1,
            _ => runs.push(Run { mode, start: t, len: 1 }),
        }
    }
    ActionLabels { labels, runs }
}

/// Concepts guessed at least `min_count` times across `trajectories`.
pub fn derive_mask(trajectories: &[Trajectory], min_count: usize) -> BTreeSet<ConceptId> {
    let mut counts: BTreeMap<ConceptId, usize> = BTreeMap::new();
    for c in trajectories.iter().flat_map(Trajectory::concepts) {
        *counts.entry(c).or_default() += 1;
    }
    counts.into_iter().filter(|&(_, n)| n >= min_count.max(1)).map(|(c, _)| c).collect()
}

/// Where a local-global player jumps when it stops improving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpSource {
    /// A random unvisited option from the unrelated list.
    Unrelated,
    /// The best-scoring unvisited option from the unrelated list.
    BestUnrelated,
}

/// Scripted players used for simulation and sanity checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PolicySpec {
    /// Always takes the best-scoring unvisited similar option.
    GreedySimilar,
    /// Searches similar and related options, jumping to an unrelated option
    /// after `patience` consecutive steps without a new best score.
    LocalGlobalSwitch { patience: usize, jump: JumpSource },
    /// Follows the option most aligned with a fixed direction concept.
    GradientWalk { direction: ConceptId },
}

/// Plays `challenge` with a scripted policy in option mode.
///
/// Stops on a hit, after `max_steps` guesses, or when the policy has no
/// unvisited option left; the last two close the trajectory as quit.
/// Timestamps come from a manual clock so equal seeds give equal output.
pub fn simulate_policy(
    policy: &PolicySpec,
    challenge: Challenge,
    engine: Arc<Engine>,
    proposals: &ProposalConfig,
    max_steps: usize,
    seed: u64,
) -> Result<Trajectory, AnalysisError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clock = Clock::Manual { next: 0, step: 1_000 };
    let mut session = GameSession::start_with(format!("sim-{seed:016x}"), challenge, engine.clone(), Mode::Options, clock)?;
    let target = session.challenge().target;
    let lex = &engine.lexicon;
    let score = |c: ConceptId| lex.score(c, target).map(|s| s.value()).unwrap_or(0.0);
    let mut visited: BTreeSet<ConceptId> = BTreeSet::from([session.current().concept]);
    let mut best = session.current().score.value();
    let mut stall = 0usize;

    for _ in 0..max_steps {
        let options = session.options(proposals)?;
        let fresh = |kind: ActionType| -> Vec<ConceptId> {
            options.list(kind).iter().copied().filter(|c| !visited.contains(c)).collect()
        };
        let best_of = |cands: Vec<ConceptId>| {
            cands.into_iter().max_by(|a, b| score(*a).total_cmp(&score(*b)).then(b.cmp(a)))
        };
        let choice = match policy {
            PolicySpec::GreedySimilar => best_of(fresh(ActionType::Similar)),
            PolicySpec::LocalGlobalSwitch { patience, jump } => {
                let mut local = fresh(ActionType::Similar);
                local.extend(fresh(ActionType::Related));
                let jumps = fresh(ActionType::Unrelated);
                if (stall >= *patience || local.is_empty()) && !jumps.is_empty() {
                    stall = 0;
                    match jump {
                        JumpSource::Unrelated => Some(jumps[rng.random_range(0..jumps.len())]),
                        JumpSource::BestUnrelated => best_of(jumps),
                    }
                } else {
                    best_of(local)
                }
            }
            PolicySpec::GradientWalk { direction } => {
                let all: Vec<ConceptId> = ActionType::ALL.into_iter().flat_map(fresh).collect();
                let align = |c: ConceptId| if lex.contains(*direction) { lex.cosine_unchecked(c, *direction) } else { 0.0 };
                all.into_iter().max_by(|a, b| align(*a).total_cmp(&align(*b)).then(b.cmp(a)))
            }
        };
        let Some(next) = choice else { break };
        visited.insert(next);
        let word = lex.word(next).to_string();
        let outcome = session.select_option(&word)?;
        if outcome.hit {
            break;
        }
        if outcome.score.value() > best {
            best = outcome.score.value();
            stall = 0;
        } else {
            stall += 1;
        }
    }
    if session.is_open() {
        session.quit()?;
    }
    Ok(session.into_trajectory())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::challenges::Difficulty;
    use crate::sessions::Outcome;

    fn series(v: &[f64]) -> RewardSeries {
        RewardSeries::new(v.to_vec()).unwrap()
    }

    #[test]
    fn deltas() {
        assert_eq!(reward_deltas(&[10.0, 12.0, 40.0, 45.0, 50.0]), [2.0, 28.0, 5.0, 5.0]);
        assert_eq!(reward_deltas(&[7.0, 7.0, 7.0]), [0.0, 0.0]);
        assert_eq!(reward_deltas(&[0.0, 100.0]), [100.0]);
        assert!(reward_deltas(&[5.0]).is_empty());
    }

    #[test]
    fn worked_delta_a() {
        let report = eureka_profile(&series(&[10.0, 12.0, 40.0, 45.0, 50.0]), 20.0);
        assert_eq!(report.delta_a[1], 33.0);
        assert!(report.eureka_steps.contains(&1));
    }

    #[test]
    fn flat_series_has_no_eureka() {
        let report = eureka_profile(&series(&[30.0; 6]), 20.0);
        assert!(report.delta_a.iter().all(|&a| a == 0.0));
        assert!(report.eureka_steps.is_empty());
    }

    #[test]
    fn rate_hand_cases() {
        assert_eq!(literal_rate(20.0, 50.0), 0.0);
        assert_eq!(literal_rate(50.0, 50.0), 0.0);
        assert_eq!(best_counterfactual_rate(80.0, 50.0), 0.375);
        assert_eq!(UpdatingVariant::Literal.rate(0.0, [1.0]), None);
        assert_eq!(UpdatingVariant::Literal.rate(10.0, []), None);
        assert_eq!(UpdatingVariant::BestCounterfactual.rate(50.0, [20.0, 80.0]), Some(0.375));
    }

    #[test]
    fn discounted_returns() {
        assert_eq!(discounted_return(&series(&[0.0, 10.0, 20.0]), 1.0), 30.0);
        assert_eq!(discounted_return(&series(&[0.0, 10.0, 20.0]), 0.5), 20.0);
        assert_eq!(discounted_return(&series(&[42.0]), 0.9), 0.0);
    }

    fn walk(engine: &Arc<Engine>, words: &[&str], target: &str) -> Trajectory {
        let lex = &engine.lexicon;
        let ch = Challenge {
            id: "walk".into(),
            target: lex.lookup(target).unwrap(),
            start: lex.lookup(words[0]).unwrap(),
            topic: None,
            difficulty: Difficulty::EASY,
            seed: 0,
        };
        let mut s =
            GameSession::start_with("w".into(), ch, engine.clone(), Mode::Typing, Clock::Manual { next: 0, step: 1 })
                .unwrap();
        for w in &words[1..] {
            s.submit_guess(w).unwrap();
        }
        if s.is_open() {
            s.quit().unwrap();
        }
        s.into_trajectory()
    }

    #[test]
    fn fixture_walk_labels() {
        let engine = Arc::new(Engine::fixture());
        let t = walk(&engine, &["cat", "tiger", "dog", "piano"], "car");
        // cos(tiger, dog) = 0.936, so the similar threshold must sit above it
        let labels = label_actions(&t, &engine, 0.95, 0.8);
        assert_eq!(labels.labels, [ActionType::Similar, ActionType::Related, ActionType::Unrelated]);
        assert_eq!(
            labels.runs,
            [Run { mode: SearchMode::Local, start: 0, len: 2 }, Run { mode: SearchMode::Jump, start: 2, len: 1 }]
        );
        let single = walk(&engine, &["cat"], "car");
        assert!(label_actions(&single, &engine, 0.95, 0.8).labels.is_empty());
        let synonyms = walk(&engine, &["cat", "tiger", "cat", "tiger"], "car");
        let l = label_actions(&synonyms, &engine, 0.9, 0.8);
        assert!(l.labels.iter().all(|&x| x == ActionType::Similar));
        assert_eq!(l.runs.len(), 1);
    }

    #[test]
    fn masks() {
        let engine = Arc::new(Engine::fixture());
        let a = walk(&engine, &["car", "dog", "cat"], "cat");
        let lex = &engine.lexicon;
        let ids = |ws: &[&str]| ws.iter().map(|w| lex.lookup(w).unwrap()).collect::<BTreeSet<_>>();
        assert_eq!(derive_mask(std::slice::from_ref(&a), 1), ids(&["car", "dog", "cat"]));
        assert!(derive_mask(std::slice::from_ref(&a), 2).is_empty());
        let b = walk(&engine, &["piano", "dog", "tiger"], "cat");
        assert_eq!(derive_mask(&[a, b], 2), ids(&["dog"]));
    }

    #[test]
    fn updating_rate_over_spaces() {
        let engine = Arc::new(Engine::fixture());
        let t = walk(&engine, &["car", "dog", "cat"], "cat");
        let cfg = ProposalConfig::with_k(1);
        // step 0: car -> dog (80); full space spans 0..100
        let lit = updating_rate(&t, 0, &ActionSpace::Full, &engine, &cfg, UpdatingVariant::Literal).unwrap();
        assert_eq!(lit, 0.0);
        let best =
            updating_rate(&t, 0, &ActionSpace::Full, &engine, &cfg, UpdatingVariant::BestCounterfactual).unwrap();
        assert!((best - 0.2).abs() < 1e-12);
        let mask = ActionSpace::Masked(BTreeSet::from([engine.lexicon.lookup("tiger").unwrap()]));
        let lit = updating_rate(&t, 0, &mask, &engine, &cfg, UpdatingVariant::Literal).unwrap();
        assert!((lit - (1.0 - 96.0 / 80.0)).abs() < 1e-12);
        let three = updating_rate(&t, 1, &ActionSpace::ThreeTypes, &engine, &cfg, UpdatingVariant::Literal).unwrap();
        assert!(three <= 0.0);
        assert_eq!(
            updating_rate(&t, 2, &ActionSpace::Full, &engine, &cfg, UpdatingVariant::Literal),
            Err(AnalysisError::StepOutOfRange(2))
        );
        let zero = walk(&engine, &["dog", "piano"], "cat");
        assert_eq!(
            updating_rate(&zero, 0, &ActionSpace::Full, &engine, &cfg, UpdatingVariant::Literal),
            Err(AnalysisError::UndefinedRate(0))
        );
    }

    #[test]
    fn greedy_solves_fixture() {
        let engine = Arc::new(Engine::fixture());
        let lex = &engine.lexicon;
        let ch = Challenge {
            id: "g".into(),
            target: lex.lookup("cat").unwrap(),
            start: lex.lookup("dog").unwrap(),
            topic: None,
            difficulty: Difficulty::EASY,
            seed: 0,
        };
        let cfg = ProposalConfig::with_k(2);
        let t = simulate_policy(&PolicySpec::GreedySimilar, ch.clone(), engine.clone(), &cfg, 10, 1).unwrap();
        assert_eq!(t.outcome, Outcome::Solved);
        assert!(t.transitions() <= 2);
        let again = simulate_policy(&PolicySpec::GreedySimilar, ch.clone(), engine.clone(), &cfg, 10, 1).unwrap();
        assert_eq!(t, again);
    }

    #[test]
    fn step_cap_closes_as_quit() {
        let engine = Arc::new(Engine::fixture());
        let lex = &engine.lexicon;
        let ch = Challenge {
            id: "cap".into(),
            target: lex.lookup("piano").unwrap(),
            start: lex.lookup("cat").unwrap(),
            topic: None,
            difficulty: Difficulty::EASY,
            seed: 0,
        };
        let t = simulate_policy(&PolicySpec::GreedySimilar, ch, engine, &ProposalConfig::with_k(1), 1, 3).unwrap();
        assert_eq!(t.outcome, Outcome::Quit);
        assert_eq!(t.transitions(), 1);
    }
}
