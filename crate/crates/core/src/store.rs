//! Append-only trajectory log.
//!
//! One newline-delimited JSON file per UTC day (`mindle-YYYYMMDD.log`). A
//! persisted session is a contiguous block: a `session` header followed by
//! one event line per record (`guess`, or `solve` for the hit), `oov` lines
//! for rejected words, and a final `quit` line when the player gave up.
//!
//! ```text
//! {"v":1,"event":"session","sid":"…","challenge":{…},"mode":"typing","config_hash":"…"}
//! {"v":1,"sid":"…","cid":"…","t":0,"word":"car","score":0.0,"ts":1700000000000,"src":"start","event":"guess"}
//! {"v":1,"sid":"…","cid":"…","t":1,"word":"cat","score":100.0,"ts":1700000004000,"src":"typed","event":"solve"}
//! ```

use std::collections::{BTreeSet, HashSet};
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::challenges::ChallengeRecord;
use crate::lexicon::{Lexicon, Score};
use crate::sessions::{GuessRecord, Mode, OovAttempt, Outcome, Source, Trajectory};

pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("storage unavailable: {0}")]
    Io(#[from] std::io::Error),
    #[error("{file}:{line}: corrupt log line (session {sid}): {reason}")]
    Corrupt { file: String, line: usize, sid: String, reason: String },
    #[error("session {0} is still open")]
    OpenSession(String),
    #[error("session {0} is already persisted")]
    Duplicate(String),
    #[error("cannot encode session {0}: {1}")]
    Encode(String, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Event {
    Guess,
    Oov,
    Quit,
    Solve,
}

/// One session event, field order fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLine {
    pub v: u32,
    pub sid: String,
    pub cid: String,
    pub t: usize,
    pub word: String,
    pub score: Option<f64>,
    pub ts: i64,
    pub src: Source,
    pub event: Event,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionHeader {
    pub v: u32,
    pub event: String,
    pub sid: String,
    pub challenge: ChallengeRecord,
    pub mode: Mode,
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_hint: Option<Vec<String>>,
}

/// Which trajectories to load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrajectoryFilter {
    All,
    Sessions(BTreeSet<String>),
    Challenge(String),
}

impl TrajectoryFilter {
    fn keeps(&self, sid: &str, cid: &str) -> bool {
        match self {
            TrajectoryFilter::All => true,
            TrajectoryFilter::Sessions(ids) => ids.contains(sid),
            TrajectoryFilter::Challenge(c) => c == cid,
        }
    }
}

/// Serializes a closed trajectory as its header plus event lines.
pub fn encode_trajectory(traj: &Trajectory, lexicon: &Lexicon, config_hash: &str) -> Result<String, StoreError> {
    let sid = &traj.session_id;
    if !traj.is_closed() {
        return Err(StoreError::OpenSession(sid.clone()));
    }
    if traj.records.is_empty() {
        return Err(StoreError::Encode(sid.clone(), "no records".into()));
    }
    let enc = |e: serde_json::Error| StoreError::Encode(sid.clone(), e.to_string());
    let cid = traj.challenge.id.clone();
    let header = SessionHeader {
        v: LOG_VERSION,
        event: "session".into(),
        sid: sid.clone(),
        challenge: traj.challenge.record(lexicon),
        mode: traj.mode,
        config_hash: config_hash.to_string(),
        mask_hint: traj
            .mask_hint
            .as_ref()
            .map(|m| m.iter().map(|c| lexicon.word(*c).to_string()).collect()),
    };
    let mut out = serde_json::to_string(&header).map_err(enc)?;
    out.push('\n');
    let mut push = |line: EventLine| -> Result<(), StoreError> {
        out.push_str(&serde_json::to_string(&line).map_err(enc)?);
        out.push('\n');
        Ok(())
    };
    let last = traj.records.len() - 1;
    for (i, r) in traj.records.iter().enumerate() {
        let event = if i == last && traj.outcome == Outcome::Solved { Event::Solve } else { Event::Guess };
        push(EventLine {
            v: LOG_VERSION,
            sid: sid.clone(),
            cid: cid.clone(),
            t: r.step,
            word: r.word.clone(),
            score: Some(r.score.value()),
            ts: r.timestamp,
            src: r.source,
            event,
        })?;
        for o in traj.oov.iter().filter(|o| o.after_step == r.step) {
            push(EventLine {
                v: LOG_VERSION,
                sid: sid.clone(),
                cid: cid.clone(),
                t: o.after_step,
                word: o.word.clone(),
                score: None,
                ts: o.timestamp,
                src: Source::Typed,
                event: Event::Oov,
            })?;
        }
    }
    if traj.outcome == Outcome::Quit {
        let r = &traj.records[last];
        let ts = traj.oov.iter().map(|o| o.timestamp).fold(r.timestamp, i64::max);
        push(EventLine {
            v: LOG_VERSION,
            sid: sid.clone(),
            cid,
            t: r.step,
            word: r.word.clone(),
            score: Some(r.score.value()),
            ts,
            src: r.source,
            event: Event::Quit,
        })?;
    }
    Ok(out)
}

/// Session block being reassembled while reading.
struct Pending {
    header: SessionHeader,
    header_line: usize,
    records: Vec<GuessRecord>,
    oov: Vec<OovAttempt>,
    outcome: Outcome,
}

/// Parses log lines back into trajectories, resolving words against `lexicon`.
///
/// `origin` names the source in error messages.
pub fn parse_log<R: BufRead>(
    reader: R,
    lexicon: &Lexicon,
    filter: &TrajectoryFilter,
    origin: &str,
) -> Result<Vec<Trajectory>, StoreError> {
    let mut out = Vec::new();
    let mut pending: Option<Pending> = None;
    let corrupt = |line: usize, sid: Option<&str>, reason: String| StoreError::Corrupt {
        file: origin.to_string(),
        line,
        sid: sid.unwrap_or("unknown").to_string(),
        reason,
    };

    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let current_sid = pending.as_ref().map(|p| p.header.sid.clone());
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| corrupt(lineno, current_sid.as_deref(), e.to_string()))?;
        let line_sid = value.get("sid").and_then(|s| s.as_str()).map(str::to_string);
        let sid_hint = line_sid.as_deref().or(current_sid.as_deref());
        if value.get("v").and_then(|v| v.as_u64()) != Some(LOG_VERSION as u64) {
            return Err(corrupt(lineno, sid_hint, "unsupported or missing version".into()));
        }
        if value.get("event").and_then(|e| e.as_str()) == Some("session") {
            if let Some(p) = pending.take() {
                finish(p, lexicon, filter, origin, &mut out)?;
            }
            let header: SessionHeader =
                serde_json::from_value(value).map_err(|e| corrupt(lineno, sid_hint, e.to_string()))?;
            pending = Some(Pending { header, header_line: lineno, records: Vec::new(), oov: Vec::new(), outcome: Outcome::Open });
            continue;
        }
        let ev: EventLine = serde_json::from_value(value).map_err(|e| corrupt(lineno, sid_hint, e.to_string()))?;
        let Some(p) = pending.as_mut() else {
            return Err(corrupt(lineno, Some(&ev.sid), "event before any session header".into()));
        };
        if ev.sid != p.header.sid {
            return Err(corrupt(lineno, Some(&ev.sid), format!("event inside the block of session {}", p.header.sid)));
        }
        if p.outcome != Outcome::Open {
            return Err(corrupt(lineno, Some(&ev.sid), "event after the session closed".into()));
        }
        match ev.event {
            Event::Guess | Event::Solve => {
                if ev.t != p.records.len() {
                    return Err(corrupt(lineno, Some(&ev.sid), format!("expected step {}, found {}", p.records.len(), ev.t)));
                }
                let concept = lexicon
                    .lookup(&ev.word)
                    .ok_or_else(|| corrupt(lineno, Some(&ev.sid), format!("unknown word {:?}", ev.word)))?;
                let score = ev.score.ok_or_else(|| corrupt(lineno, Some(&ev.sid), "missing score".into()))?;
                p.records.push(GuessRecord {
                    step: ev.t,
                    word: ev.word,
                    concept,
                    score: Score::from_value(score)
                        .ok_or_else(|| corrupt(lineno, Some(&ev.sid), format!("score {score} out of range")))?,
                    timestamp: ev.ts,
                    source: ev.src,
                });
                if ev.event == Event::Solve {
                    p.outcome = Outcome::Solved;
                }
            }
            Event::Oov => p.oov.push(OovAttempt { after_step: ev.t, word: ev.word, timestamp: ev.ts }),
            Event::Quit => p.outcome = Outcome::Quit,
        }
    }
    if let Some(p) = pending.take() {
        finish(p, lexicon, filter, origin, &mut out)?;
    }
    Ok(out)
}

fn finish(
    p: Pending,
    lexicon: &Lexicon,
    filter: &TrajectoryFilter,
    origin: &str,
    out: &mut Vec<Trajectory>,
) -> Result<(), StoreError> {
    let corrupt = |reason: String| StoreError::Corrupt {
        file: origin.to_string(),
        line: p.header_line,
        sid: p.header.sid.clone(),
        reason,
    };
    if p.outcome == Outcome::Open {
        return Err(corrupt("session block ends without solve or quit".into()));
    }
    if p.records.is_empty() {
        return Err(corrupt("session block has no records".into()));
    }
    if !filter.keeps(&p.header.sid, &p.header.challenge.id) {
        return Ok(());
    }
    let challenge = p.header.challenge.resolve(lexicon).map_err(|e| corrupt(e.to_string()))?;
    let mask_hint = match p.header.mask_hint {
        Some(words) => Some(
            words
                .iter()
                .map(|w| lexicon.lookup(w).ok_or_else(|| corrupt(format!("unknown mask word {w:?}"))))
                .collect::<Result<BTreeSet<_>, _>>()?,
        ),
        None => None,
    };
    out.push(Trajectory {
        session_id: p.header.sid,
        challenge,
        mode: p.header.mode,
        records: p.records,
        oov: p.oov,
        outcome: p.outcome,
        mask_hint,
    });
    Ok(())
}

/// Reads one log file.
pub fn read_log_file(path: &Path, lexicon: &Lexicon, filter: &TrajectoryFilter) -> Result<Vec<Trajectory>, StoreError> {
    let file = fs::File::open(path)?;
    parse_log(BufReader::new(file), lexicon, filter, &path.display().to_string())
}

/// Directory of daily log files.
#[derive(Debug)]
pub struct LogStore {
    dir: PathBuf,
    persisted: HashSet<String>,
}

impl LogStore {
    /// Opens (creating if needed) a log directory and indexes the session ids
    /// already stored there.
    pub fn open(dir: impl Into<PathBuf>) -> Result<LogStore, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut store = LogStore { dir, persisted: HashSet::new() };
        for file in store.log_files()? {
            let reader = BufReader::new(fs::File::open(&file)?);
            for line in reader.lines() {
                let line = line?;
                if let Ok(v) = serde_json::from_str::<serde_json::Value>(&line) {
                    if v.get("event").and_then(|e| e.as_str()) == Some("session") {
                        if let Some(sid) = v.get("sid").and_then(|s| s.as_str()) {
                            store.persisted.insert(sid.to_string());
                        }
                    }
                }
            }
        }
        Ok(store)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn contains(&self, sid: &str) -> bool {
        self.persisted.contains(sid)
    }

    /// Log files in name (and therefore date) order.
    pub fn log_files(&self) -> Result<Vec<PathBuf>, StoreError> {
        let mut files: Vec<PathBuf> = fs::read_dir(&self.dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("mindle-") && n.ends_with(".log"))
            })
            .collect();
        files.sort();
        Ok(files)
    }

    pub fn file_for_today(&self) -> PathBuf {
        self.dir.join(format!("mindle-{}.log", chrono::Utc::now().format("%Y%m%d")))
    }

    /// Appends a closed trajectory as one write and syncs it to disk before
    /// returning its session id.
    pub fn persist(&mut self, traj: &Trajectory, lexicon: &Lexicon, config_hash: &str) -> Result<String, StoreError> {
        let path = self.file_for_today();
        self.persist_to(&path, traj, lexicon, config_hash)
    }

    pub fn persist_to(
        &mut self,
        path: &Path,
        traj: &Trajectory,
        lexicon: &Lexicon,
        config_hash: &str,
    ) -> Result<String, StoreError> {
        if self.persisted.contains(&traj.session_id) {
            return Err(StoreError::Duplicate(traj.session_id.clone()));
        }
        let block = encode_trajectory(traj, lexicon, config_hash)?;
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        file.write_all(block.as_bytes())?;
        file.flush()?;
        file.sync_data()?;
        self.persisted.insert(traj.session_id.clone());
        Ok(traj.session_id.clone())
    }

    pub fn load(&self, filter: &TrajectoryFilter, lexicon: &Lexicon) -> Result<Vec<Trajectory>, StoreError> {
        let mut out = Vec::new();
        for file in self.log_files()? {
            out.extend(read_log_file(&file, lexicon, filter)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::challenges::{Challenge, Difficulty};
    use crate::sessions::{Clock, GameSession};
    use crate::Engine;

    fn played(sid: &str, words: &[&str], quit: bool) -> (Trajectory, Arc<Engine>) {
        let engine = Arc::new(Engine::fixture());
        let lex = &engine.lexicon;
        let ch = Challenge {
            id: "c1".into(),
            target: lex.lookup("cat").unwrap(),
            start: lex.lookup("car").unwrap(),
            topic: None,
            difficulty: Difficulty::EASY,
            seed: 5,
        };
        let mut s = GameSession::start_with(sid.into(), ch, engine.clone(), Mode::Typing, Clock::Manual { next: 10, step: 5 })
            .unwrap();
        for w in words {
            let _ = s.submit_guess(w);
        }
        if quit {
            s.quit().unwrap();
        }
        (s.into_trajectory(), engine)
    }

    #[test]
    fn solved_block_has_header_plus_one_line_per_record() {
        let (t, e) = played("s1", &["dog", "cat"], false);
        let text = encode_trajectory(&t, &e.lexicon, "h").unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[3].ends_with(r#""event":"solve"}"#), "{}", lines[3]);
        assert!(lines[1].starts_with(r#"{"v":1,"sid":"s1","cid":"c1","t":0,"word":"car","score":0.0,"ts":10,"src":"start","event":"guess"}"#), "{}", lines[1]);
    }

    #[test]
    fn open_session_rejected() {
        let (t, e) = played("s1", &["dog"], false);
        assert!(matches!(encode_trajectory(&t, &e.lexicon, "h"), Err(StoreError::OpenSession(_))));
    }

    #[test]
    fn round_trip_with_oov_and_quit() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = LogStore::open(dir.path()).unwrap();
        let (a, e) = played("a", &["dog", "zzzz", "tiger"], true);
        let (b, _) = played("b", &["piano", "cat"], false);
        store.persist(&a, &e.lexicon, "h").unwrap();
        store.persist(&b, &e.lexicon, "h").unwrap();
        assert!(matches!(store.persist(&a, &e.lexicon, "h"), Err(StoreError::Duplicate(_))));
        let loaded = store.load(&TrajectoryFilter::All, &e.lexicon).unwrap();
        assert_eq!(loaded, [a.clone(), b]);
        let only = store.load(&TrajectoryFilter::Sessions(BTreeSet::from(["a".to_string()])), &e.lexicon).unwrap();
        assert_eq!(only, [a]);
        let none = store.load(&TrajectoryFilter::Sessions(BTreeSet::from(["zz".to_string()])), &e.lexicon).unwrap();
        assert!(none.is_empty());

        let reopened = LogStore::open(dir.path()).unwrap();
        assert!(reopened.contains("a") && reopened.contains("b"));
    }

    #[test]
    fn truncated_final_line_is_corrupt() {
        let (t, e) = played("s9", &["dog", "cat"], false);
        let text = encode_trajectory(&t, &e.lexicon, "h").unwrap();
        let cut = &text[..text.len() - 12];
        match parse_log(cut.as_bytes(), &e.lexicon, &TrajectoryFilter::All, "x.log") {
            Err(StoreError::Corrupt { line, sid, .. }) => {
                assert_eq!(line, 4);
                assert_eq!(sid, "s9");
            }
            other => panic!("expected corrupt-log error, got {other:?}"),
        }
    }
}
