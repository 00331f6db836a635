//! The `mindle` operator command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::analysis::{analyze_trajectory, eureka_profile, AnalysisConfig, RewardSeries};
use crate::challenges::{generate_challenge, Challenge, ChallengeRecord, DifficultyPreset};
use crate::config::{ConfigError, Overrides, ServerConfig};
use crate::graph::ConceptGraph;
use crate::proposals::ActionType;
use crate::service::{serve, AppState};
use crate::sessions::{GameSession, Mode, SessionError};
use crate::store::{read_log_file, LogStore, TrajectoryFilter};
use crate::Engine;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mindle", version, about = "Semantic word-search game: build, play, serve and analyze")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Word-vector file (one `word v1 v2 ...` per line); default is the built-in fixture
    #[arg(long, global = true)]
    pub embeddings: Option<PathBuf>,
    /// Concept graph file written by build-graph
    #[arg(long, global = true)]
    pub graph: Option<PathBuf>,
    #[arg(long, global = true)]
    pub vocab_limit: Option<usize>,
    /// Directory for session logs
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,
    /// TOML configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count windowed co-occurrences in a corpus and write a graph file
    BuildGraph {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 5)]
        window: usize,
        /// Drop edges lighter than this
        #[arg(long, default_value_t = 1.0)]
        min_count: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a challenge and print its record
    Challenge {
        /// easy, medium, hard or MIN_LEN,MAX_LEN,MIN_PATHS
        #[arg(long, default_value = "easy")]
        difficulty: DifficultyPreset,
        #[arg(long)]
        topic: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Play in the terminal
    Play {
        /// Challenge record as printed by `challenge`
        #[arg(long, conflicts_with = "seed")]
        challenge_file: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "easy")]
        difficulty: DifficultyPreset,
        #[arg(long)]
        topic: Option<String>,
        #[arg(long, default_value = "both")]
        mode: Mode,
        /// Do not append the finished session to the log
        #[arg(long)]
        no_log: bool,
    },
    /// Run the HTTP API
    Serve {
        #[arg(long)]
        port: Option<i64>,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
    /// Print eureka reports for logged sessions, or for a raw score series
    Analyze {
        /// Log file or log directory
        #[arg(long, required_unless_present = "scores")]
        log: Option<PathBuf>,
        /// Only these session ids (repeatable)
        #[arg(long)]
        session: Vec<String>,
        /// Comma-separated score series, e.g. 10,12,40,45,50
        #[arg(long, conflicts_with = "log", value_delimiter = ',')]
        scores: Vec<f64>,
        #[arg(long)]
        theta_eureka: Option<f64>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Invalid { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

fn data(e: impl std::fmt::Display) -> Failure {
    Failure::Data(e.to_string())
}

/// Runs one invocation. `argv` includes the program name.
pub fn run<I, T>(argv: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli, input, out) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Data(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_DATA
        }
    }
}

fn dispatch(cli: Cli, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<(), Failure> {
    let port = match &cli.command {
        Command::Serve { port, .. } => *port,
        _ => None,
    };
    let g = cli.global;
    let overrides = Overrides {
        embeddings: g.embeddings,
        graph: g.graph,
        vocab_limit: g.vocab_limit,
        data_dir: g.data_dir,
        port,
    };
    let config = ServerConfig::resolve(g.config.as_deref(), |k| std::env::var(k).ok(), &overrides)?;

    match cli.command {
        Command::BuildGraph { corpus, window, min_count, out: path } => {
            build_graph(&config, &corpus, window, min_count, &path, out)
        }
        Command::Challenge { difficulty, topic, seed } => {
            let engine = config.load_engine()?;
            let ch = make_challenge(&engine, &config, difficulty, topic.as_deref(), seed)?;
            writeln!(out, "{}", serde_json::to_string(&ch.record(&engine.lexicon)).map_err(data)?).map_err(data)
        }
        Command::Play { challenge_file, seed, difficulty, topic, mode, no_log } => {
            let engine = config.load_engine()?;
            let ch = match challenge_file {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| data(format!("{}: {e}", path.display())))?;
                    let record: ChallengeRecord =
                        serde_json::from_str(&text).map_err(|e| data(format!("{}: {e}", path.display())))?;
                    record.resolve(&engine.lexicon).map_err(data)?
                }
                None => make_challenge(&engine, &config, difficulty, topic.as_deref(), seed.unwrap_or(0))?,
            };
            let store = if no_log { None } else { Some(LogStore::open(&config.data_dir).map_err(data)?) };
            play(Arc::new(engine), ch, mode, &config, store, input, out)
        }
        Command::Serve { host, .. } => {
            let engine = config.load_engine()?;
            let addr = SocketAddr::new(host, config.port);
            let state = Arc::new(AppState::new(engine, config).map_err(data)?);
            let rt = tokio::runtime::Runtime::new().map_err(data)?;
            writeln!(out, "listening on http://{addr}").map_err(data)?;
            out.flush().map_err(data)?;
            rt.block_on(serve(state, addr)).map_err(data)
        }
        Command::Analyze { log, session, scores, theta_eureka } => {
            let theta = theta_eureka.unwrap_or(config.theta_eureka);
            if !scores.is_empty() {
                let series = RewardSeries::new(scores).map_err(|e| Failure::Usage(e.to_string()))?;
                let report = eureka_profile(&series, theta);
                return writeln!(out, "{}", serde_json::to_string(&report).map_err(data)?).map_err(data);
            }
            let log = log.expect("clap requires --log without --scores");
            let engine = config.load_engine()?;
            let filter = if session.is_empty() {
                TrajectoryFilter::All
            } else {
                TrajectoryFilter::Sessions(session.into_iter().collect::<BTreeSet<_>>())
            };
            let trajectories = if log.is_dir() {
                LogStore::open(&log).map_err(data)?.load(&filter, &engine.lexicon)
            } else {
                read_log_file(&log, &engine.lexicon, &filter)
            }
            .map_err(data)?;
            let analysis = AnalysisConfig { theta_eureka: theta, proposals: config.proposals.clone(), ..AnalysisConfig::default() };
            for t in &trajectories {
                let report = analyze_trajectory(t, &engine, &analysis).map_err(data)?;
                writeln!(out, "{}", serde_json::to_string(&report).map_err(data)?).map_err(data)?;
            }
            Ok(())
        }
    }
}

fn build_graph(
    config: &ServerConfig,
    corpus: &Path,
    window: usize,
    min_count: f64,
    path: &Path,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    if window == 0 {
        return Err(Failure::Usage("--window must be at least 1".into()));
    }
    let lexicon = config.load_engine()?.lexicon;
    let file = File::open(corpus).map_err(|e| data(format!("{}: {e}", corpus.display())))?;
    let mut graph = ConceptGraph::build(BufReader::new(file), window, &lexicon).map_err(data)?;
    graph.retain_min(min_count);
    let mut w = std::io::BufWriter::new(File::create(path).map_err(|e| data(format!("{}: {e}", path.display())))?);
    graph.write(&lexicon, &mut w).map_err(data)?;
    w.flush().map_err(data)?;
    writeln!(out, "wrote {} ({} nodes, {} edges)", path.display(), graph.node_count(), graph.edge_count()).map_err(data)
}

fn make_challenge(
    engine: &Engine,
    config: &ServerConfig,
    difficulty: DifficultyPreset,
    topic: Option<&str>,
    seed: u64,
) -> Result<Challenge, Failure> {
    let nav = engine.navigation(config.nav_k);
    generate_challenge(&nav, &engine.lexicon, config.presets.resolve(difficulty), topic, seed, &config.challenges)
        .map_err(data)
}

fn play(
    engine: Arc<Engine>,
    ch: Challenge,
    mode: Mode,
    config: &ServerConfig,
    store: Option<LogStore>,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let mut session = GameSession::start(ch, engine.clone(), mode).map_err(data)?;
    let io = |e: std::io::Error| data(e);
    let start = session.current().clone();
    writeln!(out, "start word: {}  (score {})", start.word, start.score).map_err(io)?;
    if let Some(topic) = &session.challenge().topic {
        writeln!(out, "topic: {topic}").map_err(io)?;
    }
    writeln!(out, "type a word, `options`, `pick WORD`, or `quit`").map_err(io)?;

    let mut line = String::new();
    while session.is_open() {
        write!(out, "> ").map_err(io)?;
        out.flush().map_err(io)?;
        line.clear();
        if input.read_line(&mut line).map_err(io)? == 0 {
            break;
        }
        let cmd = line.trim();
        if cmd.is_empty() {
            continue;
        }
        let result = match cmd {
            "quit" => break,
            "options" => {
                match session.options(&config.proposals) {
                    Ok(set) => {
                        for kind in ActionType::ALL {
                            let words: Vec<&str> = set.list(kind).iter().map(|c| engine.lexicon.word(*c)).collect();
                            writeln!(out, "  {:<9} {}", kind.as_str(), words.join(", ")).map_err(io)?;
                        }
                    }
                    Err(e) => writeln!(out, "  {e}").map_err(io)?,
                }
                continue;
            }
            _ => match cmd.strip_prefix("pick ") {
                Some(word) => session.select_option(word.trim()),
                None if !mode.allows_typing() => session.select_option(cmd),
                None => session.submit_guess(cmd),
            },
        };
        match result {
            Ok(g) => {
                writeln!(out, "{:>4}  {:<24} {}", g.step, session.current().word, g.score).map_err(io)?;
                if g.hit {
                    writeln!(out, "*** solved in {} steps ***", g.step).map_err(io)?;
                }
            }
            Err(SessionError::OutOfVocabulary(w)) => writeln!(out, "  {w:?} is not in the word list").map_err(io)?,
            Err(e) => writeln!(out, "  {e}").map_err(io)?,
        }
    }
    if session.is_open() {
        session.quit().map_err(data)?;
        let target = engine.lexicon.word(session.challenge().target);
        writeln!(out, "gave up; the target was {target}").map_err(io)?;
    }
    if let Some(mut store) = store {
        store.persist(session.trajectory(), &engine.lexicon, &config.config_hash()).map_err(data)?;
        writeln!(out, "session {} logged to {}", session.id(), store.dir().display()).map_err(io)?;
    }
    Ok(())
}
