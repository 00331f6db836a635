//! Game sessions recorded as trajectories.
//!
//! The start word is record 0. Each accepted guess appends a record whose
//! score is recomputed from the lexicon; the session closes on a hit or on
//! quit. Out-of-vocabulary attempts are kept on a side list and never become
//! steps.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::challenges::Challenge;
use crate::lexicon::{ConceptId, Score};
use crate::proposals::{propose, ActionType, ProposalConfig, ProposalError, ProposalSet};
use crate::Engine;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Typing,
    Options,
    Both,
}

impl Mode {
    pub fn allows_typing(self) -> bool {
        matches!(self, Mode::Typing | Mode::Both)
    }

    pub fn allows_options(self) -> bool {
        matches!(self, Mode::Options | Mode::Both)
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "typing" => Ok(Mode::Typing),
            "options" => Ok(Mode::Options),
            "both" => Ok(Mode::Both),
            _ => Err(format!("unknown mode {s:?}")),
        }
    }
}

/// Where a record's word came from. Serialized as `start`, `typed` or
/// `option:<type>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Source {
    Start,
    Typed,
    Option(ActionType),
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Start => f.write_str("start"),
            Source::Typed => f.write_str("typed"),
            Source::Option(t) => write!(f, "option:{}", t.as_str()),
        }
    }
}

impl From<Source> for String {
    fn from(s: Source) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for Source {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        match s.as_str() {
            "start" => Ok(Source::Start),
            "typed" => Ok(Source::Typed),
            "option:similar" => Ok(Source::Option(ActionType::Similar)),
            "option:related" => Ok(Source::Option(ActionType::Related)),
            "option:unrelated" => Ok(Source::Option(ActionType::Unrelated)),
            _ => Err(format!("unknown source {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuessRecord {
    pub step: usize,
    pub word: String,
    pub concept: ConceptId,
    pub score: Score,
    /// Milliseconds since the Unix epoch.
    pub timestamp: i64,
    pub source: Source,
}

/// An out-of-vocabulary attempt made after record `after_step`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OovAttempt {
    pub after_step: usize,
    pub word: String,
    pub timestamp: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Solved,
    Quit,
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub session_id: String,
    pub challenge: Challenge,
    pub mode: Mode,
    pub records: Vec<GuessRecord>,
    #[serde(default)]
    pub oov: Vec<OovAttempt>,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_hint: Option<BTreeSet<ConceptId>>,
}

impl Trajectory {
    pub fn is_closed(&self) -> bool {
        self.outcome != Outcome::Open
    }

    pub fn scores(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.score.value()).collect()
    }

    pub fn concepts(&self) -> impl Iterator<Item = ConceptId> + '_ {
        self.records.iter().map(|r| r.concept)
    }

    /// Number of transitions (records after the start word).
    pub fn transitions(&self) -> usize {
        self.records.len().saturating_sub(1)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SessionError {
    #[error("invalid challenge: {0}")]
    InvalidChallenge(String),
    #[error("{0:?} is not in the word list")]
    OutOfVocabulary(String),
    #[error("session is closed")]
    Closed,
    #[error("session mode {0:?} does not allow this action")]
    ModeViolation(Mode),
    #[error("{0:?} is not among the current options")]
    StaleOption(String),
    #[error(transparent)]
    Proposal(#[from] ProposalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuessOutcome {
    pub score: Score,
    pub hit: bool,
    pub step: usize,
}

/// Timestamp source for records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Clock {
    System,
    /// Deterministic clock starting at `next` and advancing by `step` per reading.
    Manual { next: i64, step: i64 },
}

impl Clock {
    fn now(&mut self) -> i64 {
        match self {
            Clock::System => chrono::Utc::now().timestamp_millis(),
            Clock::Manual { next, step } => {
                let t = *next;
                *next += *step;
                t
            }
        }
    }
}

/// A live game: the growing trajectory plus the hidden target.
#[derive(Debug, Clone)]
pub struct GameSession {
    trajectory: Trajectory,
    engine: Arc<Engine>,
    clock: Clock,
    last_ts: i64,
    options: Option<(usize, ProposalSet)>,
}

impl GameSession {
    /// Opens a session with a fresh random id and the system clock.
    pub fn start(challenge: Challenge, engine: Arc<Engine>, mode: Mode) -> Result<GameSession, SessionError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        GameSession::start_with(id, challenge, engine, mode, Clock::System)
    }

    pub fn start_with(
        session_id: String,
        challenge: Challenge,
        engine: Arc<Engine>,
        mode: Mode,
        clock: Clock,
    ) -> Result<GameSession, SessionError> {
        challenge
            .validate(&engine.lexicon)
            .map_err(|e| SessionError::InvalidChallenge(e.to_string()))?;
        let mut session = GameSession {
            trajectory: Trajectory {
                session_id,
                challenge,
                mode,
                records: Vec::new(),
                oov: Vec::new(),
                outcome: Outcome::Open,
                mask_hint: None,
            },
            engine,
            clock,
            last_ts: i64::MIN,
            options: None,
        };
        let start = session.trajectory.challenge.start;
        session.push(start, Source::Start);
        Ok(session)
    }

    pub fn id(&self) -> &str {
        &self.trajectory.session_id
    }

    pub fn engine(&self) -> &Arc<Engine> {
        &self.engine
    }

    pub fn challenge(&self) -> &Challenge {
        &self.trajectory.challenge
    }

    pub fn mode(&self) -> Mode {
        self.trajectory.mode
    }

    pub fn outcome(&self) -> Outcome {
        self.trajectory.outcome
    }

    pub fn is_open(&self) -> bool {
        self.trajectory.outcome == Outcome::Open
    }

    pub fn records(&self) -> &[GuessRecord] {
        &self.trajectory.records
    }

    pub fn current(&self) -> &GuessRecord {
        self.trajectory.records.last().expect("sessions always hold the start record")
    }

    /// Read-only view of the trajectory so far.
    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn set_mask_hint(&mut self, mask: BTreeSet<ConceptId>) {
        self.trajectory.mask_hint = Some(mask);
    }

    fn tick(&mut self) -> i64 {
        let t = self.clock.now().max(self.last_ts);
        self.last_ts = t;
        t
    }

    fn push(&mut self, concept: ConceptId, source: Source) -> GuessOutcome {
        let lex = &self.engine.lexicon;
        let target = self.trajectory.challenge.target;
        let score = lex.score(concept, target).expect("ids resolved against this lexicon");
        let step = self.trajectory.records.len();
        let word = lex.word(concept).to_string();
        let timestamp = self.tick();
        self.trajectory.records.push(GuessRecord { step, word, concept, score, timestamp, source });
        let hit = concept == target;
        if hit {
            self.trajectory.outcome = Outcome::Solved;
        }
        GuessOutcome { score, hit, step }
    }

    fn ensure_open(&self) -> Result<(), SessionError> {
        if self.is_open() {
            Ok(())
        } else {
            Err(SessionError::Closed)
        }
    }

    fn accept(&mut self, word: &str, source: Source) -> Result<GuessOutcome, SessionError> {
        match self.engine.lexicon.lookup(word) {
            Some(c) => Ok(self.push(c, source)),
            None => {
                let timestamp = self.tick();
                let after_step = self.current().step;
                self.trajectory.oov.push(OovAttempt { after_step, word: word.trim().to_string(), timestamp });
                Err(SessionError::OutOfVocabulary(word.trim().to_string()))
            }
        }
    }

    /// Scores a typed guess.
    pub fn submit_guess(&mut self, word: &str) -> Result<GuessOutcome, SessionError> {
        self.ensure_open()?;
        if !self.mode().allows_typing() {
            return Err(SessionError::ModeViolation(self.mode()));
        }
        self.accept(word, Source::Typed)
    }

    /// Option lists anchored at the latest guess. Repeated calls between
    /// guesses return the same set.
    pub fn options(&mut self, config: &ProposalConfig) -> Result<ProposalSet, SessionError> {
        self.ensure_open()?;
        if !self.mode().allows_options() {
            return Err(SessionError::ModeViolation(self.mode()));
        }
        let step = self.current().step;
        if let Some((at, set)) = &self.options {
            if *at == step && set.k == config.k {
                return Ok(set.clone());
            }
        }
        let set = propose(&self.engine.lexicon, &self.engine.graph, self.current().concept, config)?;
        self.options = Some((step, set.clone()));
        Ok(set)
    }

    /// Guesses a word from the option list most recently returned by
    /// [`GameSession::options`]; the record carries the option's type.
    pub fn select_option(&mut self, word: &str) -> Result<GuessOutcome, SessionError> {
        self.ensure_open()?;
        if !self.mode().allows_options() {
            return Err(SessionError::ModeViolation(self.mode()));
        }
        let step = self.current().step;
        let kind = self
            .engine
            .lexicon
            .lookup(word)
            .and_then(|c| match &self.options {
                Some((at, set)) if *at == step => set.type_of(c),
                _ => None,
            })
            .ok_or_else(|| SessionError::StaleOption(word.to_string()))?;
        self.accept(word, Source::Option(kind))
    }

    /// Ends the session without a hit and returns the full trajectory.
    pub fn quit(&mut self) -> Result<Trajectory, SessionError> {
        self.ensure_open()?;
        self.tick();
        self.trajectory.outcome = Outcome::Quit;
        Ok(self.trajectory.clone())
    }

    pub fn into_trajectory(self) -> Trajectory {
        self.trajectory
    }
}

/// Re-scores a trajectory's words against its challenge target.
pub fn replay_scores(trajectory: &Trajectory, engine: &Engine) -> Result<Vec<Score>, SessionError> {
    let lex = &engine.lexicon;
    trajectory
        .records
        .iter()
        .map(|r| {
            let c = lex.lookup(&r.word).ok_or_else(|| SessionError::OutOfVocabulary(r.word.clone()))?;
            lex.score(c, trajectory.challenge.target).map_err(|e| SessionError::InvalidChallenge(e.to_string()))
        })
        .collect()
}

/// Checks the structural invariants every trajectory must satisfy.
pub fn check_invariants(trajectory: &Trajectory, engine: &Engine) -> Result<(), String> {
    let lex = &engine.lexicon;
    let target = trajectory.challenge.target;
    let records = &trajectory.records;
    let first = records.first().ok_or("trajectory has no records")?;
    if first.concept != trajectory.challenge.start || first.source != Source::Start {
        return Err("record 0 is not the start word".into());
    }
    for (i, r) in records.iter().enumerate() {
        if r.step != i {
            return Err(format!("record {i} has step {}", r.step));
        }
        if i > 0 && r.timestamp < records[i - 1].timestamp {
            return Err(format!("timestamp decreases at step {i}"));
        }
        let expect = lex.score(r.concept, target).map_err(|e| e.to_string())?;
        if r.score != expect {
            return Err(format!("step {i}: logged score {} but lexicon gives {}", r.score, expect));
        }
        if lex.word(r.concept) != r.word {
            return Err(format!("step {i}: word {:?} does not match concept", r.word));
        }
        let hit = r.concept == target;
        if hit != r.score.is_hit() {
            return Err(format!("step {i}: hit and score 100 disagree"));
        }
        if hit && i + 1 != records.len() {
            return Err(format!("step {i}: guesses continue after the hit"));
        }
    }
    let solved = records.last().is_some_and(|r| r.concept == target);
    if solved != (trajectory.outcome == Outcome::Solved) {
        return Err("outcome does not match the last record".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::challenges::Difficulty;

    fn engine() -> Arc<Engine> {
        Arc::new(Engine::fixture())
    }

    fn challenge(engine: &Engine, start: &str, target: &str) -> Challenge {
        let lex = &engine.lexicon;
        Challenge {
            id: "fixture".into(),
            target: lex.lookup(target).unwrap(),
            start: lex.lookup(start).unwrap(),
            topic: None,
            difficulty: Difficulty::EASY,
            seed: 0,
        }
    }

    fn session(start: &str, target: &str, mode: Mode) -> GameSession {
        let e = engine();
        let ch = challenge(&e, start, target);
        GameSession::start_with("s1".into(), ch, e, mode, Clock::Manual { next: 1_000, step: 10 }).unwrap()
    }

    #[test]
    fn start_record_scores() {
        let s = session("car", "cat", Mode::Typing);
        assert_eq!(s.records().len(), 1);
        assert_eq!(s.records()[0].score.value(), 0.0);
        let s = session("tiger", "cat", Mode::Typing);
        assert!((s.records()[0].score.value() - 96.0).abs() < 1e-9);
        assert_eq!(s.records()[0].source, Source::Start);
    }

    #[test]
    fn guesses_and_hit() {
        let mut s = session("car", "cat", Mode::Typing);
        let out = s.submit_guess("dog").unwrap();
        assert!((out.score.value() - 80.0).abs() < 1e-9);
        assert!(!out.hit);
        assert_eq!(out.step, 1);
        let out = s.submit_guess("CAT").unwrap();
        assert_eq!(out.score, Score::MAX);
        assert!(out.hit);
        assert_eq!(s.outcome(), Outcome::Solved);
        assert_eq!(s.submit_guess("dog"), Err(SessionError::Closed));
        assert_eq!(s.quit().unwrap_err(), SessionError::Closed);
        check_invariants(s.trajectory(), s.engine()).unwrap();
    }

    #[test]
    fn oov_goes_to_side_channel() {
        let mut s = session("car", "cat", Mode::Typing);
        assert!(matches!(s.submit_guess("xylograph"), Err(SessionError::OutOfVocabulary(_))));
        assert_eq!(s.records().len(), 1);
        assert_eq!(s.trajectory().oov.len(), 1);
        assert_eq!(s.trajectory().oov[0].after_step, 0);
        assert_eq!(s.submit_guess("dog").unwrap().step, 1);
    }

    #[test]
    fn repeated_guesses_are_rescored_identically() {
        let mut s = session("car", "cat", Mode::Typing);
        let a = s.submit_guess("dog").unwrap();
        let b = s.submit_guess("dog").unwrap();
        assert_eq!(a.score, b.score);
        assert_eq!(b.step, 2);
    }

    #[test]
    fn options_follow_latest_guess() {
        let mut s = session("car", "tiger", Mode::Options);
        assert!(matches!(s.submit_guess("dog"), Err(SessionError::ModeViolation(Mode::Options))));
        let first = s.options(&ProposalConfig::with_k(1)).unwrap();
        assert_eq!(first, s.options(&ProposalConfig::with_k(1)).unwrap());
        assert_eq!(first.anchor, s.engine().lexicon.lookup("car").unwrap());
        let word = s.engine().lexicon.word(first.similar[0]).to_string();
        s.select_option(&word).unwrap();
        assert_eq!(s.current().source, Source::Option(ActionType::Similar));

        let lex = s.engine().lexicon.clone();
        assert!(matches!(s.select_option(&word), Err(SessionError::StaleOption(_))));
        let p = s.options(&ProposalConfig::with_k(1)).unwrap();
        assert_eq!(p.anchor, lex.lookup(&word).unwrap());
    }

    #[test]
    fn options_after_cat_k1() {
        let mut s = session("car", "piano", Mode::Both);
        s.submit_guess("cat").unwrap();
        let p = s.options(&ProposalConfig::with_k(1)).unwrap();
        let lex = &s.engine().lexicon;
        assert_eq!(lex.word(p.similar[0]), "tiger");
        assert_eq!(lex.word(p.related[0]), "dog");
        assert!(["piano", "car"].contains(&lex.word(p.unrelated[0])));
    }

    #[test]
    fn typing_mode_has_no_options() {
        let mut s = session("car", "cat", Mode::Typing);
        assert!(matches!(s.options(&ProposalConfig::default()), Err(SessionError::ModeViolation(_))));
        s.submit_guess("cat").unwrap();
        let mut s2 = session("car", "cat", Mode::Both);
        s2.submit_guess("cat").unwrap();
        assert_eq!(s2.options(&ProposalConfig::default()).unwrap_err(), SessionError::Closed);
    }

    #[test]
    fn quit_returns_full_trajectory() {
        let mut s = session("car", "cat", Mode::Typing);
        let t = s.quit().unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.outcome, Outcome::Quit);
        assert_eq!(&t, s.trajectory());
        assert_eq!(s.quit().unwrap_err(), SessionError::Closed);
    }

    #[test]
    fn invalid_challenge_rejected() {
        let e = engine();
        let mut ch = challenge(&e, "car", "cat");
        ch.target = ConceptId(42);
        assert!(matches!(GameSession::start(ch, e, Mode::Typing), Err(SessionError::InvalidChallenge(_))));
    }

    #[test]
    fn replay_reproduces_scores() {
        let mut s = session("car", "cat", Mode::Typing);
        for w in ["piano", "dog", "tiger", "cat"] {
            s.submit_guess(w).unwrap();
        }
        let t = s.into_trajectory();
        let replayed = replay_scores(&t, &Engine::fixture()).unwrap();
        assert_eq!(replayed, t.records.iter().map(|r| r.score).collect::<Vec<_>>());
    }

    #[test]
    fn source_strings() {
        let s: Source = serde_json::from_str("\"option:related\"").unwrap();
        assert_eq!(s, Source::Option(ActionType::Related));
        assert_eq!(serde_json::to_string(&Source::Typed).unwrap(), "\"typed\"");
        assert!(serde_json::from_str::<Source>("\"option:other\"").is_err());
    }
}
