//! Challenge generation with difficulty measured on the navigation graph.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::NavigationGraph;
use crate::lexicon::{desc_then_id, ConceptId, Lexicon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Difficulty {
    pub min_len: usize,
    pub max_len: usize,
    pub min_paths: u64,
}

impl Difficulty {
    pub const EASY: Difficulty = Difficulty { min_len: 1, max_len: 2, min_paths: 1 };
    pub const MEDIUM: Difficulty = Difficulty { min_len: 2, max_len: 4, min_paths: 2 };
    pub const HARD: Difficulty = Difficulty { min_len: 4, max_len: 6, min_paths: 2 };

    pub fn new(min_len: usize, max_len: usize, min_paths: u64) -> Result<Difficulty, ChallengeError> {
        let d = Difficulty { min_len, max_len, min_paths };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), ChallengeError> {
        if self.min_len < 1 || self.min_len > self.max_len || self.min_paths < 1 {
            return Err(ChallengeError::InvalidDifficulty(*self));
        }
        Ok(())
    }
}

/// Difficulty as named in requests and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DifficultyPreset {
    Easy,
    Medium,
    Hard,
    Custom(Difficulty),
}

impl DifficultyPreset {
    pub fn resolve(self) -> Difficulty {
        match self {
            DifficultyPreset::Easy => Difficulty::EASY,
            DifficultyPreset::Medium => Difficulty::MEDIUM,
            DifficultyPreset::Hard => Difficulty::HARD,
            DifficultyPreset::Custom(d) => d,
        }
    }
}

impl std::str::FromStr for DifficultyPreset {
    type Err = String;

    /// `easy`, `medium`, `hard`, or `min_len,max_len,min_paths`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "easy" => Ok(DifficultyPreset::Easy),
            "medium" => Ok(DifficultyPreset::Medium),
            "hard" => Ok(DifficultyPreset::Hard),
            custom => {
                let parts: Vec<&str> = custom.split(',').map(str::trim).collect();
                let [a, b, c] = parts[..] else {
                    return Err(format!("unknown difficulty {s:?}"));
                };
                let parse = |x: &str| x.parse::<u64>().map_err(|_| format!("unknown difficulty {s:?}"));
                let d = Difficulty { min_len: parse(a)? as usize, max_len: parse(b)? as usize, min_paths: parse(c)? };
                d.validate().map_err(|e| e.to_string())?;
                Ok(DifficultyPreset::Custom(d))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChallengeConfig {
    pub max_attempts: usize,
    /// Minimum cosine to the topic vector for a concept to belong to the topic.
    pub theta_topic: f64,
    /// Maximum number of topic members considered.
    pub topic_limit: usize,
}

impl Default for ChallengeConfig {
    fn default() -> Self {
        ChallengeConfig { max_attempts: 10_000, theta_topic: 0.35, topic_limit: 500 }
    }
}

/// The difficulty constraint that ruled out the most sampled pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    MinLen,
    MaxLen,
    MinPaths,
    Topic,
    Unreachable,
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Constraint::MinLen => "shortest path shorter than min_len",
            Constraint::MaxLen => "shortest path longer than max_len",
            Constraint::MinPaths => "fewer than min_paths paths within max_len",
            Constraint::Topic => "no usable pair for the topic",
            Constraint::Unreachable => "target unreachable from start",
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ChallengeError {
    #[error("invalid difficulty {0:?}")]
    InvalidDifficulty(Difficulty),
    #[error("navigation graph has no edges")]
    EmptyGraph,
    #[error("no word of topic {0:?} is in the vocabulary")]
    UnknownTopic(String),
    #[error("no challenge found in {attempts} attempts: {constraint}")]
    Infeasible { constraint: Constraint, attempts: usize },
    #[error("word {0:?} is not in the vocabulary")]
    UnknownWord(String),
    #[error("invalid challenge: {0}")]
    Invalid(String),
}

/// A secret target, the start word shown to the player and an optional topic hint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Challenge {
    pub id: String,
    pub target: ConceptId,
    pub start: ConceptId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
    pub difficulty: Difficulty,
    pub seed: u64,
}

/// Operator and log view of a challenge: words instead of ids, target included.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChallengeRecord {
    pub id: String,
    pub start: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
    pub difficulty: Difficulty,
    pub seed: u64,
}

/// Player-facing view: no target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerChallenge {
    pub challenge_id: String,
    pub start_word: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic_hint: Option<String>,
}

impl Challenge {
    pub fn record(&self, lexicon: &Lexicon) -> ChallengeRecord {
        ChallengeRecord {
            id: self.id.clone(),
            start: lexicon.word(self.start).to_string(),
            target: lexicon.word(self.target).to_string(),
            topic: self.topic.clone(),
            difficulty: self.difficulty,
            seed: self.seed,
        }
    }

    pub fn player_view(&self, lexicon: &Lexicon) -> PlayerChallenge {
        PlayerChallenge {
            challenge_id: self.id.clone(),
            start_word: lexicon.word(self.start).to_string(),
            topic_hint: self.topic.clone(),
        }
    }

    pub fn validate(&self, lexicon: &Lexicon) -> Result<(), ChallengeError> {
        for c in [self.start, self.target] {
            if !lexicon.contains(c) {
                return Err(ChallengeError::Invalid(format!("concept {c} is not in the vocabulary")));
            }
        }
        if self.start == self.target {
            return Err(ChallengeError::Invalid("start equals target".into()));
        }
        Ok(())
    }
}

impl ChallengeRecord {
    pub fn resolve(&self, lexicon: &Lexicon) -> Result<Challenge, ChallengeError> {
        let find = |w: &str| lexicon.lookup(w).ok_or_else(|| ChallengeError::UnknownWord(w.to_string()));
        let challenge = Challenge {
            id: self.id.clone(),
            target: find(&self.target)?,
            start: find(&self.start)?,
            topic: self.topic.clone(),
            difficulty: self.difficulty,
            seed: self.seed,
        };
        challenge.validate(lexicon)?;
        Ok(challenge)
    }
}

/// Concepts whose cosine to the topic reaches `theta`, best first, at most `limit`.
///
/// A multiword topic is represented by the mean of its in-vocabulary words'
/// unit vectors. The topic words themselves are not members.
pub fn topic_members(
    lexicon: &Lexicon,
    topic: &str,
    theta: f64,
    limit: usize,
) -> Result<Vec<ConceptId>, ChallengeError> {
    let words: Vec<ConceptId> = topic.split_whitespace().filter_map(|w| lexicon.lookup(w)).collect();
    if words.is_empty() {
        return Err(ChallengeError::UnknownTopic(topic.to_string()));
    }
    let mut centre = vec![0.0; lexicon.dim()];
    for &w in &words {
        let norm = lexicon.norm(w);
        for (acc, v) in centre.iter_mut().zip(lexicon.vector(w)) {
            *acc += v / norm;
        }
    }
    let mut members: Vec<(ConceptId, f64)> = lexicon
        .ids()
        .filter(|c| !words.contains(c))
        .map(|c| (c, lexicon.cosine_to(&centre, c)))
        .filter(|(_, cos)| *cos >= theta)
        .collect();
    members.sort_by(desc_then_id);
    members.truncate(limit);
    Ok(members.into_iter().map(|(c, _)| c).collect())
}

/// Samples (target, start) pairs with a seeded generator until one meets
/// `difficulty`.
///
/// With a topic the target is drawn from the topic members and the start from
/// outside them.
pub fn generate_challenge(
    nav: &NavigationGraph,
    lexicon: &Lexicon,
    difficulty: Difficulty,
    topic: Option<&str>,
    seed: u64,
    config: &ChallengeConfig,
) -> Result<Challenge, ChallengeError> {
    difficulty.validate()?;
    if nav.is_empty() {
        return Err(ChallengeError::EmptyGraph);
    }
    let n = nav.node_count().min(lexicon.len());
    let (targets, starts): (Vec<ConceptId>, Vec<ConceptId>) = match topic {
        Some(t) => {
            let members = topic_members(lexicon, t, config.theta_topic, config.topic_limit)?;
            let topic_words: Vec<ConceptId> = t.split_whitespace().filter_map(|w| lexicon.lookup(w)).collect();
            let targets: Vec<ConceptId> = members.iter().copied().filter(|c| c.0 < n).collect();
            let starts = (0..n)
                .map(ConceptId)
                .filter(|c| !members.contains(c) && !topic_words.contains(c))
                .collect();
            (targets, starts)
        }
        None => ((0..n).map(ConceptId).collect(), (0..n).map(ConceptId).collect()),
    };
    if targets.is_empty() || starts.is_empty() || (targets.len() == 1 && starts == targets) {
        return Err(ChallengeError::Infeasible { constraint: Constraint::Topic, attempts: 0 });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut misses = [0usize; 3];
    let mut unreachable = 0usize;
    for _ in 0..config.max_attempts {
        let target = targets[rng.random_range(0..targets.len())];
        let start = starts[rng.random_range(0..starts.len())];
        if start == target {
            continue;
        }
        match check(nav, start, target, &difficulty) {
            Ok(()) => {
                let id = format!("{:016x}", rng.random::<u64>());
                return Ok(Challenge { id, target, start, topic: topic.map(str::to_string), difficulty, seed });
            }
            Err(Constraint::Unreachable) => unreachable += 1,
            Err(c) => misses[c as usize] += 1,
        }
    }
    if misses.iter().all(|&m| m == 0) && unreachable > 0 {
        return Err(ChallengeError::Infeasible { constraint: Constraint::Unreachable, attempts: config.max_attempts });
    }
    let worst = (0..3).max_by_key(|&i| (misses[i], std::cmp::Reverse(i))).unwrap_or(0);
    let constraint = [Constraint::MinLen, Constraint::MaxLen, Constraint::MinPaths][worst];
    Err(ChallengeError::Infeasible { constraint, attempts: config.max_attempts })
}

/// Checks one pair against the difficulty bounds.
pub fn check(nav: &NavigationGraph, start: ConceptId, target: ConceptId, d: &Difficulty) -> Result<(), Constraint> {
    let len = nav.distances_from(start)[target.0].ok_or(Constraint::Unreachable)?;
    if len < d.min_len {
        return Err(Constraint::MinLen);
    }
    if len > d.max_len {
        return Err(Constraint::MaxLen);
    }
    if nav.count_paths(start, target, d.max_len) < d.min_paths {
        return Err(Constraint::MinPaths);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;

    fn chain() -> (NavigationGraph, Lexicon) {
        let lex = Lexicon::load_str("a 1 0\nb 0 1\nc 1 1\n", 10).unwrap();
        let nav = NavigationGraph::from_edges(3, [(ConceptId(0), ConceptId(1)), (ConceptId(1), ConceptId(2))]);
        (nav, lex)
    }

    #[test]
    fn topic_members_fixture() {
        let lex = fixture::lexicon();
        let m = topic_members(&lex, "cat", 0.9, 500).unwrap();
        assert_eq!(m, [lex.lookup("tiger").unwrap()]);
        assert!(topic_members(&lex, "cat", 1.01, 500).unwrap().is_empty());
        assert_eq!(topic_members(&lex, "zzz", 0.1, 500), Err(ChallengeError::UnknownTopic("zzz".into())));
    }

    #[test]
    fn multiword_topic_uses_known_words() {
        let lex = fixture::lexicon();
        // mean of cat and car points along (1, 1): dog (0.990) and tiger (0.877) qualify
        let m = topic_members(&lex, "cat zzz car", 0.85, 500).unwrap();
        let words: Vec<&str> = m.iter().map(|c| lex.word(*c)).collect();
        assert_eq!(words, ["dog", "tiger"]);
    }

    #[test]
    fn chain_has_one_qualifying_pair() {
        let (nav, lex) = chain();
        let ch = generate_challenge(&nav, &lex, Difficulty::new(2, 2, 1).unwrap(), None, 3, &Default::default())
            .unwrap();
        assert_eq!((ch.start, ch.target), (ConceptId(0), ConceptId(2)));
    }

    #[test]
    fn unreachable_difficulty_is_infeasible() {
        let (nav, lex) = chain();
        let err = generate_challenge(&nav, &lex, Difficulty::new(5, 6, 1).unwrap(), None, 1, &Default::default())
            .unwrap_err();
        assert!(matches!(err, ChallengeError::Infeasible { constraint: Constraint::MinLen, .. }), "{err:?}");
    }

    #[test]
    fn same_seed_same_challenge() {
        let lex = fixture::lexicon();
        let nav = NavigationGraph::prune(&fixture::graph(&lex), &lex, 1);
        let gen = |seed| generate_challenge(&nav, &lex, Difficulty::EASY, None, seed, &Default::default()).unwrap();
        assert_eq!(gen(7), gen(7));
        assert_eq!(gen(7).seed, 7);
    }

    #[test]
    fn invalid_difficulties_rejected() {
        assert!(Difficulty::new(0, 2, 1).is_err());
        assert!(Difficulty::new(3, 2, 1).is_err());
        assert!(Difficulty::new(1, 2, 0).is_err());
        assert_eq!("2,4,3".parse::<DifficultyPreset>().unwrap().resolve(), Difficulty::new(2, 4, 3).unwrap());
        assert!("extreme".parse::<DifficultyPreset>().is_err());
    }

    #[test]
    fn topic_challenge_targets_members_and_starts_outside() {
        let lex = fixture::lexicon();
        let nav = NavigationGraph::prune(&fixture::graph(&lex), &lex, 2);
        let cfg = ChallengeConfig { theta_topic: 0.9, ..Default::default() };
        let ch = generate_challenge(&nav, &lex, Difficulty::new(1, 4, 1).unwrap(), Some("cat"), 11, &cfg).unwrap();
        assert_eq!(lex.word(ch.target), "tiger");
        assert_ne!(lex.word(ch.start), "cat");
    }

    #[test]
    fn record_round_trip_and_player_view_hides_target() {
        let lex = fixture::lexicon();
        let ch = Challenge {
            id: "x".into(),
            target: ConceptId(0),
            start: ConceptId(3),
            topic: None,
            difficulty: Difficulty::EASY,
            seed: 1,
        };
        assert_eq!(ch.record(&lex).resolve(&lex).unwrap(), ch);
        let json = serde_json::to_string(&ch.player_view(&lex)).unwrap();
        assert!(!json.contains("cat"), "{json}");
        let preset: DifficultyPreset = serde_json::from_str(r#"{"custom":{"min_len":1,"max_len":3,"min_paths":2}}"#).unwrap();
        assert_eq!(preset.resolve(), Difficulty { min_len: 1, max_len: 3, min_paths: 2 });
        assert_eq!(serde_json::from_str::<DifficultyPreset>(r#""hard""#).unwrap().resolve(), Difficulty::HARD);
    }
}
