//! Vocabulary of concepts with dense embedding vectors.
//!
//! A [`Lexicon`] is loaded from the common whitespace-separated vector text
//! format (`word c1 c2 ... cd`, optionally preceded by a `<count> <dim>`
//! header). It answers cosine similarity, the 0-100 game score and top-K
//! nearest-neighbour queries. Vectors are kept exactly as read; norms are
//! cached and divided out at query time.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default vocabulary bound: the forty thousand most frequent concepts.
pub const DEFAULT_VOCAB_LIMIT: usize = 40_000;

/// Dense index of a concept in a [`Lexicon`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptId(pub usize);

impl ConceptId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Game score on the 0-100 scale.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Score(f64);

impl Score {
    pub const MAX: Score = Score(100.0);

    /// Maps a cosine to the 0-100 scale, clamping negatives to zero.
    pub fn from_cosine(cos: f64) -> Score {
        Score(100.0 * cos.clamp(0.0, 1.0))
    }

    /// Accepts a raw score if it lies in [0, 100].
    pub fn from_value(v: f64) -> Option<Score> {
        (0.0..=100.0).contains(&v).then_some(Score(v))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_hit(self) -> bool {
        self.0 == 100.0
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("vector source contains no usable entries")]
    Empty,
    #[error("vocabulary limit must be at least 1")]
    ZeroLimit,
    #[error("undefined similarity: {0} has a zero-norm vector")]
    ZeroNorm(ConceptId),
    #[error("unknown concept id {0}")]
    UnknownId(ConceptId),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Immutable vocabulary with one embedding row per concept.
#[derive(Debug, Clone)]
pub struct Lexicon {
    words: Vec<String>,
    index: HashMap<String, ConceptId>,
    vectors: Vec<f64>,
    norms: Vec<f64>,
    dim: usize,
    limit: usize,
}

impl Lexicon {
    /// Reads vectors from a text stream, keeping the first `limit` unique,
    /// non-zero entries in input order.
    ///
    /// Lines with a non-numeric component or a dimension that disagrees with
    /// the first entry are parse errors. Repeated words and all-zero vectors
    /// are skipped.
    pub fn load<R: BufRead>(source: R, limit: usize) -> Result<Lexicon, LexiconError> {
        if limit == 0 {
            return Err(LexiconError::ZeroLimit);
        }
        let mut builder = LexiconBuilder::new(limit);
        for (n, line) in source.lines().enumerate() {
            let line = line?;
            let lineno = n + 1;
            if n == 0 && is_header(&line) {
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if builder.is_full() {
                break;
            }
            let mut tokens = line.split(' ').filter(|t| !t.is_empty());
            let word = tokens.next().unwrap_or_default();
            let mut row = Vec::with_capacity(builder.dim.unwrap_or(0));
            for tok in tokens {
                let v: f64 = tok.trim_end().parse().map_err(|_| LexiconError::Parse {
                    line: lineno,
                    reason: format!("non-numeric component {tok:?}"),
                })?;
                if !v.is_finite() {
                    return Err(LexiconError::Parse {
                        line: lineno,
                        reason: format!("non-finite component {tok:?}"),
                    });
                }
                row.push(v);
            }
            builder.push(word, row, lineno)?;
        }
        builder.finish()
    }

    pub fn load_str(source: &str, limit: usize) -> Result<Lexicon, LexiconError> {
        Lexicon::load(source.as_bytes(), limit)
    }

    /// Builds a lexicon from in-memory rows, applying the same rules as [`Lexicon::load`].
    pub fn from_entries<I, S>(entries: I, limit: usize) -> Result<Lexicon, LexiconError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: AsRef<str>,
    {
        if limit == 0 {
            return Err(LexiconError::ZeroLimit);
        }
        let mut builder = LexiconBuilder::new(limit);
        for (n, (word, row)) in entries.into_iter().enumerate() {
            if builder.is_full() {
                break;
            }
            builder.push(word.as_ref(), row, n + 1)?;
        }
        builder.finish()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = ConceptId> + '_ {
        (0..self.words.len()).map(ConceptId)
    }

    pub fn contains(&self, id: ConceptId) -> bool {
        id.0 < self.words.len()
    }

    /// Case-folded lookup. `None` means the word is out of vocabulary.
    pub fn lookup(&self, word: &str) -> Option<ConceptId> {
        let trimmed = word.trim();
        match self.index.get(trimmed) {
            Some(id) => Some(*id),
            None => self.index.get(&trimmed.to_lowercase()).copied(),
        }
    }

    /// Panics if `id` is out of range.
    pub fn word(&self, id: ConceptId) -> &str {
        &self.words[id.0]
    }

    pub fn vector(&self, id: ConceptId) -> &[f64] {
        &self.vectors[id.0 * self.dim..(id.0 + 1) * self.dim]
    }

    pub fn norm(&self, id: ConceptId) -> f64 {
        self.norms[id.0]
    }

    fn check(&self, id: ConceptId) -> Result<(), LexiconError> {
        if !self.contains(id) {
            return Err(LexiconError::UnknownId(id));
        }
        if self.norms[id.0] == 0.0 {
            return Err(LexiconError::ZeroNorm(id));
        }
        Ok(())
    }

    /// Cosine similarity between two concepts.
    pub fn similarity(&self, a: ConceptId, b: ConceptId) -> Result<f64, LexiconError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.cosine_unchecked(a, b))
    }

    pub(crate) fn cosine_unchecked(&self, a: ConceptId, b: ConceptId) -> f64 {
        let dot = dot(self.vector(a), self.vector(b));
        // `+ 0.0` folds -0.0 into 0.0 so orthogonal ties still break by id.
        (dot / (self.norms[a.0] * self.norms[b.0])).clamp(-1.0, 1.0) + 0.0
    }

    /// Cosine between an arbitrary query vector and a concept.
    pub fn cosine_to(&self, query: &[f64], id: ConceptId) -> f64 {
        let qn = dot(query, query).sqrt();
        if qn == 0.0 {
            return 0.0;
        }
        (dot(query, self.vector(id)) / (qn * self.norms[id.0])).clamp(-1.0, 1.0)
    }

    /// Game score of `guess` against `target`.
    ///
    /// Identical concepts score exactly 100. Any other pair stays strictly
    /// below 100, so a hit can only be produced by the target itself.
    pub fn score(&self, guess: ConceptId, target: ConceptId) -> Result<Score, LexiconError> {
        if guess == target {
            self.check(guess)?;
            return Ok(Score::MAX);
        }
        let cos = self.similarity(guess, target)?;
        let s = Score::from_cosine(cos);
        if s.0 >= 100.0 {
            Ok(Score(100.0_f64.next_down()))
        } else {
            Ok(s)
        }
    }

    /// The `k` concepts most similar to `c`, excluding `c` and `exclude`.
    ///
    /// Sorted by descending cosine, ties by ascending id.
    pub fn top_similar(
        &self,
        c: ConceptId,
        k: usize,
        exclude: &BTreeSet<ConceptId>,
    ) -> Vec<(ConceptId, f64)> {
        let mut scored: Vec<(ConceptId, f64)> = self
            .ids()
            .filter(|&id| id != c && !exclude.contains(&id))
            .map(|id| (id, self.cosine_unchecked(c, id)))
            .collect();
        top_k_by(&mut scored, k, |a, b| desc_then_id(a, b));
        scored
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn is_header(line: &str) -> bool {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    tokens.len() == 2 && tokens.iter().all(|t| t.parse::<u64>().is_ok())
}

/// Descending by value, ascending by id on ties.
pub(crate) fn desc_then_id(a: &(ConceptId, f64), b: &(ConceptId, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Ascending by value, ascending by id on ties.
pub(crate) fn asc_then_id(a: &(ConceptId, f64), b: &(ConceptId, f64)) -> Ordering {
    a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))
}

/// Truncates `items` to its first `k` elements under `cmp`, sorted.
pub(crate) fn top_k_by<T, F>(items: &mut Vec<T>, k: usize, mut cmp: F)
where
    F: FnMut(&T, &T) -> Ordering,
{
    if k == 0 {
        items.clear();
        return;
    }
    if items.len() > k {
        items.select_nth_unstable_by(k - 1, &mut cmp);
        items.truncate(k);
    }
    items.sort_by(cmp);
}

struct LexiconBuilder {
    limit: usize,
    dim: Option<usize>,
    words: Vec<String>,
    index: HashMap<String, ConceptId>,
    vectors: Vec<f64>,
    norms: Vec<f64>,
}

impl LexiconBuilder {
    fn new(limit: usize) -> Self {
        LexiconBuilder {
            limit,
            dim: None,
            words: Vec::new(),
            index: HashMap::new(),
            vectors: Vec::new(),
            norms: Vec::new(),
        }
    }

    fn is_full(&self) -> bool {
        self.words.len() >= self.limit
    }

    fn push(&mut self, word: &str, row: Vec<f64>, lineno: usize) -> Result<(), LexiconError> {
        let word = word.trim().to_lowercase();
        if word.is_empty() {
            return Err(LexiconError::Parse { line: lineno, reason: "missing word".into() });
        }
        match self.dim {
            None if row.len() < 2 => {
                return Err(LexiconError::Parse {
                    line: lineno,
                    reason: format!("vector has {} components, need at least 2", row.len()),
                })
            }
            None => self.dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(LexiconError::Parse {
                    line: lineno,
                    reason: format!("expected {d} components, found {}", row.len()),
                })
            }
            Some(_) => {}
        }
        if row.iter().all(|&v| v == 0.0) || self.index.contains_key(&word) {
            return Ok(());
        }
        let id = ConceptId(self.words.len());
        self.norms.push(dot(&row, &row).sqrt());
        self.vectors.extend_from_slice(&row);
        self.index.insert(word.clone(), id);
        self.words.push(word);
        Ok(())
    }

    fn finish(self) -> Result<Lexicon, LexiconError> {
        if self.words.is_empty() {
            return Err(LexiconError::Empty);
        }
        Ok(Lexicon {
            words: self.words,
            index: self.index,
            vectors: self.vectors,
            norms: self.norms,
            dim: self.dim.unwrap_or(0),
            limit: self.limit,
        })
    }
}
