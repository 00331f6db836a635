//! Mindle: a semantic word-searching game for studying insight.
//!
//! Players start from a word and guess their way towards a hidden target,
//! scored by embedding cosine on a 0-100 scale. The crate covers the whole
//! pipeline: the scoring [`lexicon`], the co-occurrence concept [`graph`],
//! option [`proposals`], difficulty-controlled [`challenges`], trajectory
//! recording [`sessions`], the [`store`] for session logs, the eureka and
//! counterfactual [`analysis`], the HTTP [`service`] and the operator [`cli`].

pub mod analysis;
pub mod challenges;
pub mod cli;
pub mod config;
pub mod fixture;
pub mod graph;
pub mod lexicon;
pub mod proposals;
pub mod service;
pub mod sessions;
pub mod store;

use graph::{ConceptGraph, NavigationGraph};
use lexicon::Lexicon;

pub use challenges::{Challenge, Difficulty};
pub use graph::Direction;
pub use lexicon::{ConceptId, Score};
pub use proposals::{ActionType, ProposalConfig, ProposalSet};
pub use sessions::{GameSession, Mode, Outcome, Trajectory};

/// The immutable knowledge a game runs on: vocabulary vectors and concept weights.
#[derive(Debug, Clone)]
pub struct Engine {
    pub lexicon: Lexicon,
    pub graph: ConceptGraph,
}

impl Engine {
    pub fn new(lexicon: Lexicon, graph: ConceptGraph) -> Engine {
        Engine { lexicon, graph }
    }

    /// The five-word world from [`fixture`].
    pub fn fixture() -> Engine {
        let lexicon = fixture::lexicon();
        let graph = fixture::graph(&lexicon);
        Engine { lexicon, graph }
    }

    pub fn navigation(&self, k: usize) -> NavigationGraph {
        NavigationGraph::prune(&self.graph, &self.lexicon, k)
    }
}
