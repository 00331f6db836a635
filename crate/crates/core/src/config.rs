//! Server and CLI configuration.
//!
//! Values are layered: command-line flags override `MINDLE_*` environment
//! variables, which override a TOML file, which overrides the defaults.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::challenges::{ChallengeConfig, Difficulty, DifficultyPreset};
use crate::graph::{ConceptGraph, GraphError};
use crate::lexicon::{LexiconError, DEFAULT_VOCAB_LIMIT};
use crate::proposals::ProposalConfig;
use crate::Engine;

pub const ENV_EMBEDDINGS: &str = "MINDLE_EMBEDDINGS";
pub const ENV_GRAPH: &str = "MINDLE_GRAPH";
pub const ENV_VOCAB_LIMIT: &str = "MINDLE_VOCAB_LIMIT";
pub const ENV_DATA_DIR: &str = "MINDLE_DATA_DIR";
pub const ENV_PORT: &str = "MINDLE_PORT";

pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file {path}: {reason}")]
    File { path: String, reason: String },
    #[error("{name}: {reason}")]
    Invalid { name: String, reason: String },
    #[error("{name}: {path} does not exist")]
    Missing { name: String, path: String },
    #[error("{path}: {source}")]
    Lexicon { path: String, source: LexiconError },
    #[error("{path}: {source}")]
    Graph { path: String, source: GraphError },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn invalid(name: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { name: name.to_string(), reason: reason.into() }
}

/// Named difficulty presets; requests may also send explicit bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Presets {
    pub easy: Difficulty,
    pub medium: Difficulty,
    pub hard: Difficulty,
}

impl Default for Presets {
    fn default() -> Self {
        Presets { easy: Difficulty::EASY, medium: Difficulty::MEDIUM, hard: Difficulty::HARD }
    }
}

impl Presets {
    pub fn resolve(&self, preset: DifficultyPreset) -> Difficulty {
        match preset {
            DifficultyPreset::Easy => self.easy,
            DifficultyPreset::Medium => self.medium,
            DifficultyPreset::Hard => self.hard,
            DifficultyPreset::Custom(d) => d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    /// Word-vector file. `None` runs on the built-in five-word fixture.
    pub embeddings: Option<PathBuf>,
    /// Concept graph file. `None` means an empty graph (or the fixture graph
    /// when no embeddings are configured).
    pub graph: Option<PathBuf>,
    pub vocab_limit: usize,
    pub port: u16,
    pub data_dir: PathBuf,
    /// K used when pruning the navigation graph for challenge difficulty.
    pub nav_k: usize,
    pub theta_eureka: f64,
    pub proposals: ProposalConfig,
    pub challenges: ChallengeConfig,
    pub presets: Presets,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            embeddings: None,
            graph: None,
            vocab_limit: DEFAULT_VOCAB_LIMIT,
            port: DEFAULT_PORT,
            data_dir: PathBuf::from("mindle-data"),
            nav_k: 10,
            theta_eureka: 20.0,
            proposals: ProposalConfig::default(),
            challenges: ChallengeConfig::default(),
            presets: Presets::default(),
        }
    }
}

/// Values given on the command line. Port is wide so that out-of-range
/// input is reported by validation rather than by the flag parser.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub embeddings: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub vocab_limit: Option<usize>,
    pub data_dir: Option<PathBuf>,
    pub port: Option<i64>,
}

impl ServerConfig {
    pub fn from_toml(text: &str) -> Result<ServerConfig, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Builds the effective configuration. `env` looks up environment
    /// variables so callers and tests can substitute their own source.
    pub fn resolve(
        file: Option<&Path>,
        env: impl Fn(&str) -> Option<String>,
        cli: &Overrides,
    ) -> Result<ServerConfig, ConfigError> {
        let mut config = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ConfigError::File { path: path.display().to_string(), reason: e.to_string() })?;
                ServerConfig::from_toml(&text)
                    .map_err(|reason| ConfigError::File { path: path.display().to_string(), reason })?
            }
            None => ServerConfig::default(),
        };
        let mut port: i64 = config.port.into();

        if let Some(v) = env(ENV_EMBEDDINGS) {
            config.embeddings = Some(v.into());
        }
        if let Some(v) = env(ENV_GRAPH) {
            config.graph = Some(v.into());
        }
        if let Some(v) = env(ENV_VOCAB_LIMIT) {
            config.vocab_limit = v.trim().parse().map_err(|_| invalid(ENV_VOCAB_LIMIT, format!("not a count: {v:?}")))?;
        }
        if let Some(v) = env(ENV_DATA_DIR) {
            config.data_dir = v.into();
        }
        if let Some(v) = env(ENV_PORT) {
            port = v.trim().parse().map_err(|_| invalid(ENV_PORT, format!("not a port: {v:?}")))?;
        }

        if let Some(v) = &cli.embeddings {
            config.embeddings = Some(v.clone());
        }
        if let Some(v) = &cli.graph {
            config.graph = Some(v.clone());
        }
        if let Some(v) = cli.vocab_limit {
            config.vocab_limit = v;
        }
        if let Some(v) = &cli.data_dir {
            config.data_dir = v.clone();
        }
        if let Some(v) = cli.port {
            port = v;
        }
        config.port = u16::try_from(port)
            .ok()
            .filter(|p| *p >= 1)
            .ok_or_else(|| invalid("port", format!("{port} is outside 1..=65535")))?;
        config.validate()?;
        Ok(config)
    }

    /// Checks ranges and that configured files exist.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.port == 0 {
            return Err(invalid("port", "0 is outside 1..=65535"));
        }
        if self.vocab_limit == 0 {
            return Err(invalid("vocab_limit", "must be at least 1"));
        }
        if self.nav_k == 0 {
            return Err(invalid("nav_k", "must be at least 1"));
        }
        if self.proposals.k == 0 {
            return Err(invalid("proposals.k", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.proposals.theta_rel) {
            return Err(invalid("proposals.theta_rel", "must be a quantile in [0, 1]"));
        }
        if !(-1.0..=1.0).contains(&self.proposals.theta_sim) {
            return Err(invalid("proposals.theta_sim", "must be a cosine in [-1, 1]"));
        }
        if !(-1.0..=1.0).contains(&self.challenges.theta_topic) {
            return Err(invalid("challenges.theta_topic", "must be a cosine in [-1, 1]"));
        }
        if !self.theta_eureka.is_finite() || self.theta_eureka < 0.0 {
            return Err(invalid("theta_eureka", "must be a non-negative number"));
        }
        for (name, d) in [("presets.easy", self.presets.easy), ("presets.medium", self.presets.medium), ("presets.hard", self.presets.hard)] {
            d.validate().map_err(|e| invalid(name, e.to_string()))?;
        }
        for (name, path) in [("embeddings", &self.embeddings), ("graph", &self.graph)] {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(ConfigError::Missing { name: name.to_string(), path: p.display().to_string() });
                }
            }
        }
        if self.graph.is_some() && self.embeddings.is_none() {
            return Err(invalid("graph", "a graph file needs an embeddings file"));
        }
        Ok(())
    }

    /// Stable 64-bit FNV-1a digest of the effective configuration, stored in
    /// every session header.
    pub fn config_hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        format!("{:016x}", fnv1a(text.as_bytes()))
    }

    /// Loads the vectors and concept graph this configuration points at.
    pub fn load_engine(&self) -> Result<Engine, ConfigError> {
        let Some(emb) = &self.embeddings else {
            return Ok(Engine::fixture());
        };
        let open = |p: &Path| {
            File::open(p)
                .map(BufReader::new)
                .map_err(|source| ConfigError::Io { path: p.display().to_string(), source })
        };
        let lexicon = crate::lexicon::Lexicon::load(open(emb)?, self.vocab_limit)
            .map_err(|source| ConfigError::Lexicon { path: emb.display().to_string(), source })?;
        let graph = match &self.graph {
            Some(g) => ConceptGraph::read(open(g)?, &lexicon)
                .map_err(|source| ConfigError::Graph { path: g.display().to_string(), source })?,
            None => ConceptGraph::new(lexicon.len()),
        };
        Ok(Engine::new(lexicon, graph))
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;

    fn env_of(pairs: &[(&str, &str)]) -> impl Fn(&str) -> Option<String> {
        let map: HashMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        move |k| map.get(k).cloned()
    }

    #[test]
    fn defaults() {
        let c = ServerConfig::resolve(None, env_of(&[]), &Overrides::default()).unwrap();
        assert_eq!(c, ServerConfig::default());
        assert_eq!(c.vocab_limit, 40_000);
    }

    #[test]
    fn precedence_cli_env_file_default() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("m.toml");
        std::fs::write(&file, "port = 7000\nvocab_limit = 10\ndata_dir = \"from-file\"\n[proposals]\nk = 4\n").unwrap();

        let c = ServerConfig::resolve(Some(&file), env_of(&[]), &Overrides::default()).unwrap();
        assert_eq!((c.port, c.vocab_limit, c.proposals.k), (7000, 10, 4));

        let env = env_of(&[(ENV_PORT, "7100"), (ENV_DATA_DIR, "from-env")]);
        let c = ServerConfig::resolve(Some(&file), &env, &Overrides::default()).unwrap();
        assert_eq!((c.port, c.vocab_limit), (7100, 10));
        assert_eq!(c.data_dir, PathBuf::from("from-env"));

        let cli = Overrides { port: Some(7200), ..Default::default() };
        let c = ServerConfig::resolve(Some(&file), &env, &cli).unwrap();
        assert_eq!(c.port, 7200);
        assert_eq!(c.data_dir, PathBuf::from("from-env"));
    }

    #[test]
    fn rejects_bad_values() {
        let bad_port = Overrides { port: Some(70_000), ..Default::default() };
        assert!(ServerConfig::resolve(None, env_of(&[]), &bad_port).is_err());
        let zero = Overrides { port: Some(0), ..Default::default() };
        assert!(ServerConfig::resolve(None, env_of(&[]), &zero).is_err());
        assert!(ServerConfig::resolve(None, env_of(&[(ENV_VOCAB_LIMIT, "many")]), &Overrides::default()).is_err());
        let missing = Overrides { embeddings: Some("/no/such/file.vec".into()), ..Default::default() };
        assert!(ServerConfig::resolve(None, env_of(&[]), &missing).is_err());
        assert!(ServerConfig::from_toml("colour = 3").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ServerConfig::default();
        let mut b = a.clone();
        assert_eq!(a.config_hash(), b.config_hash());
        b.proposals.k = 3;
        assert_ne!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn loads_files() {
        let dir = tempfile::tempdir().unwrap();
        let vec = dir.path().join("v.txt");
        let graph = dir.path().join("g.tsv");
        std::fs::write(&vec, crate::fixture::VECTORS).unwrap();
        std::fs::write(&graph, crate::fixture::GRAPH).unwrap();
        let cli = Overrides { embeddings: Some(vec), graph: Some(graph), ..Default::default() };
        let c = ServerConfig::resolve(None, env_of(&[]), &cli).unwrap();
        let e = c.load_engine().unwrap();
        let f = Engine::fixture();
        assert_eq!(e.lexicon.words(), f.lexicon.words());
        assert_eq!(e.graph.edge_count(), f.graph.edge_count());
    }
}
