//! Five-word, two-dimensional world used by the examples, docs and tests.
//!
//! Unit vectors: cat (1, 0), dog (0.8, 0.6), tiger (0.96, 0.28),
//! car (0, 1), piano (-0.6, 0.8). The companion graph gives `cat` the
//! out-weights {dog: 3, tiger: 1}.

use crate::graph::ConceptGraph;
use crate::lexicon::{Lexicon, DEFAULT_VOCAB_LIMIT};

pub const VECTORS: &str = "\
cat 1.0 0.0
dog 0.8 0.6
tiger 0.96 0.28
car 0.0 1.0
piano -0.6 0.8
";

/// Directed weights in the on-disk graph format.
pub const GRAPH: &str = "\
#mindle-graph v1
cat\tdog\t3
cat\ttiger\t1
dog\tcar\t2
tiger\tdog\t2
tiger\tpiano\t1
car\tcat\t1
piano\tcat\t1
";

pub fn lexicon() -> Lexicon {
    Lexicon::load_str(VECTORS, DEFAULT_VOCAB_LIMIT).expect("fixture vectors are well-formed")
}

pub fn graph(lexicon: &Lexicon) -> ConceptGraph {
    ConceptGraph::read(GRAPH.as_bytes(), lexicon).expect("fixture graph is well-formed")
}

/// Two semantic islands, fruit and tools, with graph edges only inside each
/// island. Searches that start among the fruit and look for a tool stall
/// under local moves and need a jump to make progress.
pub const ISLAND_VECTORS: &str = "\
apple 1.0 0.05 0.0
pear 1.0 0.1 0.05
plum 1.0 0.0 0.1
grape 0.95 0.1 0.1
melon 1.0 0.15 0.0
hammer 0.0 1.0 0.05
wrench 0.05 1.0 0.0
saw 0.1 1.0 0.1
drill 0.0 0.95 0.15
chisel 0.1 1.0 0.0
";

pub const ISLAND_GRAPH: &str = "\
#mindle-graph v1
apple\tpear\t4
apple\tplum\t2
pear\tgrape\t3
plum\tmelon\t2
grape\tapple\t1
melon\tpear\t1
hammer\twrench\t3
wrench\tsaw\t2
saw\tdrill\t2
drill\tchisel\t3
chisel\thammer\t1
";

/// Engine over [`ISLAND_VECTORS`] and [`ISLAND_GRAPH`].
pub fn islands() -> crate::Engine {
    let lexicon = Lexicon::load_str(ISLAND_VECTORS, DEFAULT_VOCAB_LIMIT).expect("island vectors are well-formed");
    let graph = ConceptGraph::read(ISLAND_GRAPH.as_bytes(), &lexicon).expect("island graph is well-formed");
    crate::Engine::new(lexicon, graph)
}
