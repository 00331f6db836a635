//! Concept network and the pruned navigation graph.
//!
//! [`ConceptGraph`] holds directed co-occurrence weights `w(i, k)` between
//! concepts. Pairs without a stored weight have weight zero: the network is
//! conceptually fully connected. [`NavigationGraph`] keeps, per node, only the
//! top-K similar and top-K related neighbours and is what challenge difficulty
//! is measured on.

use std::collections::{BTreeMap, VecDeque};
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{asc_then_id, desc_then_id, top_k_by, ConceptId, Lexicon};

pub const GRAPH_HEADER: &str = "#mindle-graph v1";

/// Largest `max_len` for which [`NavigationGraph::count_paths`] enumerates
/// simple paths exactly.
pub const EXACT_PATH_LIMIT: usize = 6;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("line {line}: unknown word {word:?}")]
    UnknownWord { line: usize, word: String },
    #[error("transition from a concept to itself is undefined")]
    SelfTransition,
    #[error("concept {0} is outside the graph")]
    OutOfRange(ConceptId),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Result of normalising a row of weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transition {
    Defined(f64),
    /// The source has no outgoing weight; the probability is taken as zero.
    Isolated,
}

impl Transition {
    pub fn value(self) -> f64 {
        match self {
            Transition::Defined(p) => p,
            Transition::Isolated => 0.0,
        }
    }

    pub fn is_isolated(self) -> bool {
        matches!(self, Transition::Isolated)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Most,
    Least,
}

/// Sparse directed weight matrix over a lexicon's concepts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConceptGraph {
    rows: Vec<BTreeMap<ConceptId, f64>>,
    row_sums: Vec<f64>,
}

impl ConceptGraph {
    pub fn new(n: usize) -> Self {
        ConceptGraph { rows: vec![BTreeMap::new(); n], row_sums: vec![0.0; n] }
    }

    /// Builds a graph from explicit `(from, to, weight)` triples. Weights of
    /// repeated pairs add up; self-pairs and non-positive weights are ignored.
    pub fn from_weights<I>(n: usize, weights: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (ConceptId, ConceptId, f64)>,
    {
        let mut g = ConceptGraph::new(n);
        for (i, k, w) in weights {
            for c in [i, k] {
                if c.0 >= n {
                    return Err(GraphError::OutOfRange(c));
                }
            }
            g.add(i, k, w);
        }
        Ok(g)
    }

    fn add(&mut self, i: ConceptId, k: ConceptId, w: f64) {
        if i == k || !(w > 0.0) {
            return;
        }
        *self.rows[i.0].entry(k).or_insert(0.0) += w;
        self.row_sums[i.0] += w;
    }

    /// Counts windowed co-occurrences line by line.
    ///
    /// For every pair of in-vocabulary tokens on the same line whose positions
    /// differ by at most `window`, the earlier token's row gains 1 towards the
    /// later token. Out-of-vocabulary tokens are skipped but still occupy a
    /// position.
    pub fn build<R: BufRead>(corpus: R, window: usize, lexicon: &Lexicon) -> Result<Self, GraphError> {
        let mut g = ConceptGraph::new(lexicon.len());
        let window = window.max(1);
        for line in corpus.lines() {
            let line = line?;
            let ids: Vec<Option<ConceptId>> = tokenize(&line).map(|t| lexicon.lookup(&t)).collect();
            for (pos, a) in ids.iter().enumerate() {
                let Some(a) = *a else { continue };
                for b in ids.iter().skip(pos + 1).take(window).flatten() {
                    g.add(a, *b, 1.0);
                }
            }
        }
        Ok(g)
    }

    /// Drops edges lighter than `min_weight`.
    pub fn retain_min(&mut self, min_weight: f64) {
        for (row, sum) in self.rows.iter_mut().zip(self.row_sums.iter_mut()) {
            row.retain(|_, w| *w >= min_weight);
            *sum = row.values().sum();
        }
    }

    pub fn node_count(&self) -> usize {
        self.rows.len()
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(BTreeMap::len).sum()
    }

    pub fn weight(&self, i: ConceptId, k: ConceptId) -> f64 {
        self.rows.get(i.0).and_then(|r| r.get(&k)).copied().unwrap_or(0.0)
    }

    pub fn row_sum(&self, i: ConceptId) -> f64 {
        self.row_sums[i.0]
    }

    /// Stored (positive) out-edges of `i`, ascending by target.
    pub fn out_edges(&self, i: ConceptId) -> impl Iterator<Item = (ConceptId, f64)> + '_ {
        self.rows[i.0].iter().map(|(k, w)| (*k, *w))
    }

    pub fn is_isolated(&self, i: ConceptId) -> bool {
        self.row_sums[i.0] <= 0.0
    }

    /// `w(i, k) / sum_{j != i} w(i, j)`: the row of `i` read as a distribution over `k`.
    pub fn transition_prob(&self, i: ConceptId, k: ConceptId) -> Result<Transition, GraphError> {
        if i == k {
            return Err(GraphError::SelfTransition);
        }
        for c in [i, k] {
            if c.0 >= self.rows.len() {
                return Err(GraphError::OutOfRange(c));
            }
        }
        let sum = self.row_sums[i.0];
        if sum <= 0.0 {
            return Ok(Transition::Isolated);
        }
        Ok(Transition::Defined(self.weight(i, k) / sum))
    }

    /// Ranks every other concept by `w(c, k)`, zero-weight pairs included.
    /// Ties break by ascending id in both directions.
    pub fn rank_related(&self, c: ConceptId, k: usize, direction: Direction) -> Vec<(ConceptId, f64)> {
        let mut all: Vec<(ConceptId, f64)> = (0..self.rows.len())
            .map(ConceptId)
            .filter(|&j| j != c)
            .map(|j| (j, self.weight(c, j)))
            .collect();
        match direction {
            Direction::Most => top_k_by(&mut all, k, desc_then_id),
            Direction::Least => top_k_by(&mut all, k, asc_then_id),
        }
        all
    }

    /// Like `rank_related(.., Most)` but restricted to stored positive weights.
    pub fn top_related(&self, c: ConceptId, k: usize) -> Vec<(ConceptId, f64)> {
        let mut edges: Vec<(ConceptId, f64)> = self.out_edges(c).collect();
        top_k_by(&mut edges, k, desc_then_id);
        edges
    }

    /// Reads the tab-separated graph format, resolving words against `lexicon`.
    pub fn read<R: BufRead>(source: R, lexicon: &Lexicon) -> Result<Self, GraphError> {
        let mut g = ConceptGraph::new(lexicon.len());
        let mut lines = source.lines();
        match lines.next().transpose()? {
            Some(first) if first.trim_end() == GRAPH_HEADER => {}
            _ => {
                return Err(GraphError::Format {
                    line: 1,
                    reason: format!("missing {GRAPH_HEADER:?} header"),
                })
            }
        }
        for (n, line) in lines.enumerate() {
            let line = line?;
            let lineno = n + 2;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim_end_matches(['\r', '\n']).split('\t').collect();
            let [from, to, weight] = fields[..] else {
                return Err(GraphError::Format {
                    line: lineno,
                    reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
                });
            };
            let resolve = |w: &str| {
                lexicon
                    .lookup(w)
                    .ok_or_else(|| GraphError::UnknownWord { line: lineno, word: w.to_string() })
            };
            let (i, k) = (resolve(from)?, resolve(to)?);
            let w: f64 = weight.trim().parse().map_err(|_| GraphError::Format {
                line: lineno,
                reason: format!("bad weight {weight:?}"),
            })?;
            if !w.is_finite() || w < 0.0 {
                return Err(GraphError::Format { line: lineno, reason: format!("bad weight {weight:?}") });
            }
            if i == k {
                return Err(GraphError::Format { line: lineno, reason: "self-edge".into() });
            }
            g.add(i, k, w);
        }
        Ok(g)
    }

    /// Writes the graph in the tab-separated format, rows in id order.
    pub fn write<W: Write>(&self, lexicon: &Lexicon, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{GRAPH_HEADER}")?;
        for (i, row) in self.rows.iter().enumerate() {
            for (k, w) in row {
                writeln!(out, "{}\t{}\t{}", lexicon.word(ConceptId(i)), lexicon.word(*k), w)?;
            }
        }
        out.flush()
    }
}

/// Lowercased words of a line with surrounding punctuation stripped.
pub fn tokenize(line: &str) -> impl Iterator<Item = String> + '_ {
    line.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NavTag {
    Similar,
    Related,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavEdge {
    pub to: ConceptId,
    pub tag: NavTag,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShortestPath {
    pub length: usize,
    pub path: Vec<ConceptId>,
}

/// Directed graph of similar/related hops used to measure challenge difficulty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NavigationGraph {
    adjacency: Vec<Vec<NavEdge>>,
}

impl NavigationGraph {
    /// Keeps, for every concept, edges to its `k` most similar concepts and
    /// its `k` heaviest positive-weight neighbours. Unrelated pairs never
    /// become edges.
    pub fn prune(graph: &ConceptGraph, lexicon: &Lexicon, k: usize) -> NavigationGraph {
        let none = Default::default();
        let adjacency = (0..lexicon.len())
            .into_par_iter()
            .map(|i| {
                let c = ConceptId(i);
                let mut edges: BTreeMap<ConceptId, NavTag> = BTreeMap::new();
                for (j, _) in lexicon.top_similar(c, k, &none) {
                    edges.insert(j, NavTag::Similar);
                }
                if i < graph.node_count() {
                    for (j, _) in graph.top_related(c, k) {
                        edges
                            .entry(j)
                            .and_modify(|t| *t = NavTag::Both)
                            .or_insert(NavTag::Related);
                    }
                }
                edges.into_iter().map(|(to, tag)| NavEdge { to, tag }).collect()
            })
            .collect();
        NavigationGraph { adjacency }
    }

    /// Graph with explicit untagged edges; duplicates and self-loops are dropped.
    pub fn from_edges<I>(n: usize, edges: I) -> NavigationGraph
    where
        I: IntoIterator<Item = (ConceptId, ConceptId)>,
    {
        let mut rows: Vec<BTreeMap<ConceptId, NavTag>> = vec![BTreeMap::new(); n];
        for (a, b) in edges {
            assert!(a.0 < n && b.0 < n, "edge endpoint out of range");
            if a != b {
                rows[a.0].insert(b, NavTag::Similar);
            }
        }
        NavigationGraph {
            adjacency: rows
                .into_iter()
                .map(|r| r.into_iter().map(|(to, tag)| NavEdge { to, tag }).collect())
                .collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.edge_count() == 0
    }

    /// Out-edges of `c`, ascending by target.
    pub fn edges(&self, c: ConceptId) -> &[NavEdge] {
        &self.adjacency[c.0]
    }

    pub fn neighbors(&self, c: ConceptId) -> impl Iterator<Item = ConceptId> + '_ {
        self.adjacency[c.0].iter().map(|e| e.to)
    }

    /// Hop distances from `a` to every node (`None` when unreachable).
    pub fn distances_from(&self, a: ConceptId) -> Vec<Option<usize>> {
        bfs(self.adjacency.len(), a, |v| self.neighbors(v)).0
    }

    /// Minimum-hop path from `a` to `b`. Among equally short paths the one
    /// visiting lower ids first is returned.
    pub fn shortest_path(&self, a: ConceptId, b: ConceptId) -> Option<ShortestPath> {
        let (dist, parent) = bfs(self.adjacency.len(), a, |v| self.neighbors(v));
        let length = dist[b.0]?;
        let mut path = vec![b];
        let mut cur = b;
        while cur != a {
            cur = parent[cur.0].expect("reached nodes have parents");
            path.push(cur);
        }
        path.reverse();
        Some(ShortestPath { length, path })
    }

    /// Number of simple directed paths from `a` to `b` with at most `max_len`
    /// edges; `a == b` counts as one (empty) path.
    ///
    /// Exact for `max_len <= EXACT_PATH_LIMIT`. Beyond that the number of
    /// walks of at most `max_len` edges ending at `b` is returned, which is an
    /// upper bound on the simple-path count.
    pub fn count_paths(&self, a: ConceptId, b: ConceptId, max_len: usize) -> u64 {
        if a == b {
            return 1;
        }
        if max_len > EXACT_PATH_LIMIT {
            return self.count_walks(a, b, max_len);
        }
        let to_target = self.distances_to(b);
        if to_target[a.0].is_none_or(|d| d > max_len) {
            return 0;
        }
        let mut on_path = vec![false; self.adjacency.len()];
        on_path[a.0] = true;
        self.enumerate(a, b, max_len, &to_target, &mut on_path)
    }

    fn enumerate(
        &self,
        v: ConceptId,
        b: ConceptId,
        budget: usize,
        to_target: &[Option<usize>],
        on_path: &mut [bool],
    ) -> u64 {
        let mut total = 0u64;
        for w in self.neighbors(v) {
            if w == b {
                total = total.saturating_add(1);
                continue;
            }
            if on_path[w.0] || to_target[w.0].is_none_or(|d| d + 1 > budget) {
                continue;
            }
            on_path[w.0] = true;
            total = total.saturating_add(self.enumerate(w, b, budget - 1, to_target, on_path));
            on_path[w.0] = false;
        }
        total
    }

    fn count_walks(&self, a: ConceptId, b: ConceptId, max_len: usize) -> u64 {
        let n = self.adjacency.len();
        let mut cur = vec![0u64; n];
        cur[a.0] = 1;
        let mut total = 0u64;
        for _ in 0..max_len {
            let mut next = vec![0u64; n];
            for (v, &c) in cur.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for w in self.neighbors(ConceptId(v)) {
                    next[w.0] = next[w.0].saturating_add(c);
                }
            }
            total = total.saturating_add(next[b.0]);
            cur = next;
        }
        total
    }

    /// Hop distances from every node to `b`.
    pub fn distances_to(&self, b: ConceptId) -> Vec<Option<usize>> {
        let n = self.adjacency.len();
        let mut reverse: Vec<Vec<ConceptId>> = vec![Vec::new(); n];
        for (v, edges) in self.adjacency.iter().enumerate() {
            for e in edges {
                reverse[e.to.0].push(ConceptId(v));
            }
        }
        bfs(n, b, |v| reverse[v.0].iter().copied()).0
    }
}

fn bfs<F, I>(n: usize, start: ConceptId, mut next: F) -> (Vec<Option<usize>>, Vec<Option<ConceptId>>)
where
    F: FnMut(ConceptId) -> I,
    I: Iterator<Item = ConceptId>,
{
    let mut dist = vec![None; n];
    let mut parent = vec![None; n];
    let mut queue = VecDeque::from([start]);
    dist[start.0] = Some(0);
    while let Some(v) = queue.pop_front() {
        let d = dist[v.0].unwrap_or(0);
        for w in next(v) {
            if dist[w.0].is_none() {
                dist[w.0] = Some(d + 1);
                parent[w.0] = Some(v);
                queue.push_back(w);
            }
        }
    }
    (dist, parent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;

    fn c(i: usize) -> ConceptId {
        ConceptId(i)
    }

    #[test]
    fn adjacent_pairs_with_window_one() {
        let lex = fixture::lexicon();
        let g = ConceptGraph::build("cat dog cat".as_bytes(), 1, &lex).unwrap();
        let (cat, dog) = (lex.lookup("cat").unwrap(), lex.lookup("dog").unwrap());
        assert_eq!(g.weight(cat, dog), 1.0);
        assert_eq!(g.weight(dog, cat), 1.0);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn single_token_has_no_edges() {
        let lex = fixture::lexicon();
        let g = ConceptGraph::build("cat".as_bytes(), 5, &lex).unwrap();
        assert_eq!(g.edge_count(), 0);
        let g = ConceptGraph::build("".as_bytes(), 5, &lex).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn window_two_reaches_second_neighbour() {
        let lex = fixture::lexicon();
        let g = ConceptGraph::build("cat dog tiger".as_bytes(), 2, &lex).unwrap();
        let id = |w| lex.lookup(w).unwrap();
        assert_eq!(g.weight(id("cat"), id("dog")), 1.0);
        assert_eq!(g.weight(id("cat"), id("tiger")), 1.0);
        assert_eq!(g.weight(id("dog"), id("tiger")), 1.0);
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn oov_tokens_occupy_positions_and_lines_are_independent() {
        let lex = fixture::lexicon();
        let g = ConceptGraph::build("Cat, zebra dog!\ntiger".as_bytes(), 1, &lex).unwrap();
        assert_eq!(g.edge_count(), 0);
        let g = ConceptGraph::build("Cat, zebra dog!\ntiger".as_bytes(), 2, &lex).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn transition_probabilities() {
        let g = ConceptGraph::from_weights(4, [(c(0), c(1), 3.0), (c(0), c(2), 1.0), (c(1), c(0), 5.0)]).unwrap();
        assert_eq!(g.transition_prob(c(0), c(1)).unwrap(), Transition::Defined(0.75));
        assert_eq!(g.transition_prob(c(0), c(2)).unwrap(), Transition::Defined(0.25));
        assert_eq!(g.transition_prob(c(1), c(0)).unwrap(), Transition::Defined(1.0));
        let iso = g.transition_prob(c(3), c(0)).unwrap();
        assert!(iso.is_isolated());
        assert_eq!(iso.value(), 0.0);
        assert!(matches!(g.transition_prob(c(0), c(0)), Err(GraphError::SelfTransition)));
    }

    #[test]
    fn rank_related_most_and_least() {
        let lex = fixture::lexicon();
        let g = fixture::graph(&lex);
        let cat = lex.lookup("cat").unwrap();
        let most: Vec<&str> = g.rank_related(cat, 2, Direction::Most).iter().map(|(k, _)| lex.word(*k)).collect();
        assert_eq!(most, ["dog", "tiger"]);
        let least: Vec<&str> = g.rank_related(cat, 2, Direction::Least).iter().map(|(k, _)| lex.word(*k)).collect();
        assert_eq!(least, ["car", "piano"]);

        let single = ConceptGraph::from_weights(3, [(c(0), c(2), 1.0)]).unwrap();
        assert_eq!(single.rank_related(c(0), 1, Direction::Most), vec![(c(2), 1.0)]);
    }

    #[test]
    fn prune_fixture_k1() {
        let lex = fixture::lexicon();
        let g = fixture::graph(&lex);
        let nav = NavigationGraph::prune(&g, &lex, 1);
        let cat = lex.lookup("cat").unwrap();
        let edges: Vec<(&str, NavTag)> = nav.edges(cat).iter().map(|e| (lex.word(e.to), e.tag)).collect();
        assert_eq!(edges, [("dog", NavTag::Related), ("tiger", NavTag::Similar)]);
        for v in lex.ids() {
            assert!(nav.edges(v).len() <= 2);
        }
    }

    #[test]
    fn prune_without_pruning_effect_and_empty_graph() {
        let lex = fixture::lexicon();
        let g = fixture::graph(&lex);
        let nav = NavigationGraph::prune(&g, &lex, 4);
        for v in lex.ids() {
            assert_eq!(nav.edges(v).len(), 4, "every other node is similar-ranked");
            for (k, _) in g.out_edges(v) {
                let tag = nav.edges(v).iter().find(|e| e.to == k).unwrap().tag;
                assert_eq!(tag, NavTag::Both);
            }
        }
        let empty = ConceptGraph::new(lex.len());
        let nav = NavigationGraph::prune(&empty, &lex, 2);
        assert!(lex.ids().all(|v| nav.edges(v).iter().all(|e| e.tag == NavTag::Similar)));
    }

    #[test]
    fn shortest_path_cases() {
        let nav = NavigationGraph::from_edges(4, [(c(0), c(1)), (c(1), c(2))]);
        let sp = nav.shortest_path(c(0), c(2)).unwrap();
        assert_eq!(sp.length, 2);
        assert_eq!(sp.path, [c(0), c(1), c(2)]);
        assert_eq!(nav.shortest_path(c(0), c(0)).unwrap().length, 0);
        assert_eq!(nav.shortest_path(c(0), c(3)), None);
        assert_eq!(nav.shortest_path(c(2), c(0)), None);
    }

    #[test]
    fn count_paths_cases() {
        let diamond = NavigationGraph::from_edges(4, [(c(0), c(1)), (c(0), c(2)), (c(1), c(3)), (c(2), c(3))]);
        assert_eq!(diamond.count_paths(c(0), c(3), 2), 2);
        assert_eq!(diamond.count_paths(c(0), c(3), 1), 0);
        let chain = NavigationGraph::from_edges(3, [(c(0), c(1)), (c(1), c(2))]);
        assert_eq!(chain.count_paths(c(0), c(2), 1), 0);
        assert_eq!(chain.count_paths(c(0), c(2), 2), 1);
        assert_eq!(chain.count_paths(c(1), c(1), 3), 1);
    }

    #[test]
    fn walk_bound_dominates_exact_count() {
        // cycle 0->1->2->0 plus chord 0->2: walks revisit nodes, simple paths do not.
        let g = NavigationGraph::from_edges(3, [(c(0), c(1)), (c(1), c(2)), (c(2), c(0)), (c(0), c(2))]);
        let exact = g.count_paths(c(0), c(2), 6);
        assert_eq!(exact, 2);
        assert!(g.count_paths(c(0), c(2), 7) >= exact);
    }

    #[test]
    fn graph_file_round_trip() {
        let lex = fixture::lexicon();
        let g = fixture::graph(&lex);
        let mut buf = Vec::new();
        g.write(&lex, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), fixture::GRAPH);
        assert_eq!(ConceptGraph::read(buf.as_slice(), &lex).unwrap(), g);
    }

    #[test]
    fn graph_file_rejects_unknown_words_and_bad_lines() {
        let lex = fixture::lexicon();
        let src = format!("{GRAPH_HEADER}\ncat\tzebra\t1\n");
        assert!(matches!(
            ConceptGraph::read(src.as_bytes(), &lex),
            Err(GraphError::UnknownWord { line: 2, .. })
        ));
        let src = format!("{GRAPH_HEADER}\ncat dog 1\n");
        assert!(matches!(ConceptGraph::read(src.as_bytes(), &lex), Err(GraphError::Format { line: 2, .. })));
        assert!(matches!(ConceptGraph::read("cat\tdog\t1\n".as_bytes(), &lex), Err(GraphError::Format { line: 1, .. })));
        let src = format!("{GRAPH_HEADER}\ncat\tdog\t2.5\n");
        let g = ConceptGraph::read(src.as_bytes(), &lex).unwrap();
        assert_eq!(g.weight(c(0), c(1)), 2.5);
    }
}
