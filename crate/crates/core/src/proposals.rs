//! Candidate actions for a current guess.
//!
//! Three lists are offered at every step: concepts similar to the anchor
//! (embedding cosine), concepts related to it (heaviest co-occurrence
//! weights, diversified by clustering) and unrelated concepts (lightest
//! weights). The same machinery labels observed transitions after the fact.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ConceptGraph, Direction};
use crate::lexicon::{desc_then_id, ConceptId, Lexicon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionType {
    Similar,
    Related,
    Unrelated,
}

impl ActionType {
    pub const ALL: [ActionType; 3] = [ActionType::Similar, ActionType::Related, ActionType::Unrelated];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionType::Similar => "similar",
            ActionType::Related => "related",
            ActionType::Unrelated => "unrelated",
        }
    }
}

/// Cluster distance used when diversifying related candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    #[default]
    Average,
    Single,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProposalConfig {
    /// Proposals per type.
    pub k: usize,
    /// Candidates fetched per type before filtering, as a multiple of `k`.
    pub overscan: usize,
    /// Minimum cosine for a transition to count as `similar`.
    pub theta_sim: f64,
    /// Quantile of the source's positive out-weights a transition must reach to count as `related`.
    pub theta_rel: f64,
    pub linkage: Linkage,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        ProposalConfig { k: 10, overscan: 3, theta_sim: 0.55, theta_rel: 0.8, linkage: Linkage::Average }
    }
}

impl ProposalConfig {
    pub fn with_k(k: usize) -> Self {
        ProposalConfig { k, ..Default::default() }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ProposalError {
    #[error("proposals per type must be at least 1")]
    ZeroK,
    #[error("anchor {0} is not in the lexicon")]
    UnknownAnchor(ConceptId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProposalSet {
    pub anchor: ConceptId,
    pub similar: Vec<ConceptId>,
    pub related: Vec<ConceptId>,
    pub unrelated: Vec<ConceptId>,
    pub k: usize,
    /// Set when the anchor has no outgoing weight and `unrelated` was filled
    /// from the lowest-cosine concepts instead.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub isolated_fallback: bool,
}

impl ProposalSet {
    pub fn list(&self, kind: ActionType) -> &[ConceptId] {
        match kind {
            ActionType::Similar => &self.similar,
            ActionType::Related => &self.related,
            ActionType::Unrelated => &self.unrelated,
        }
    }

    /// Type of `c` within this set, if it was offered.
    pub fn type_of(&self, c: ConceptId) -> Option<ActionType> {
        ActionType::ALL.into_iter().find(|&t| self.list(t).contains(&c))
    }

    /// All options tagged with their type, similar first.
    pub fn tagged(&self) -> impl Iterator<Item = (ActionType, ConceptId)> + '_ {
        ActionType::ALL.into_iter().flat_map(move |t| self.list(t).iter().map(move |&c| (t, c)))
    }

    pub fn len(&self) -> usize {
        self.similar.len() + self.related.len() + self.unrelated.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Bottom-up clustering of `candidates` on cosine distance until `clusters`
/// groups remain. Returns groups of indices into `candidates`, each sorted,
/// ordered by their first member.
pub fn agglomerate(
    lexicon: &Lexicon,
    candidates: &[ConceptId],
    clusters: usize,
    linkage: Linkage,
) -> Vec<Vec<usize>> {
    let n = candidates.len();
    let target = clusters.clamp(1, n.max(1));
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = 1.0 - lexicon.cosine_unchecked(candidates[i], candidates[j]);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut active: Vec<usize> = (0..n).collect();
    while active.len() > target {
        let mut best: Option<(f64, usize, usize)> = None;
        for (ai, &a) in active.iter().enumerate() {
            for &b in &active[ai + 1..] {
                let d = dist[a][b];
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, a, b));
                }
            }
        }
        let Some((_, a, b)) = best else { break };
        let (na, nb) = (members[a].len() as f64, members[b].len() as f64);
        for &m in &active {
            if m == a || m == b {
                continue;
            }
            let merged = match linkage {
                Linkage::Average => (na * dist[a][m] + nb * dist[b][m]) / (na + nb),
                Linkage::Single => dist[a][m].min(dist[b][m]),
                Linkage::Complete => dist[a][m].max(dist[b][m]),
            };
            dist[a][m] = merged;
            dist[m][a] = merged;
        }
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
        members[a].sort_unstable();
        active.retain(|&x| x != b);
    }
    active.into_iter().map(|a| std::mem::take(&mut members[a])).collect()
}

/// Keeps one representative per cluster so that near-duplicates produced by
/// the same relation are not offered together.
///
/// The candidates are clustered into `min(k, len)` groups; the heaviest
/// member of each group is kept. Output is by descending weight.
pub fn diversify(
    candidates: &[(ConceptId, f64)],
    lexicon: &Lexicon,
    k: usize,
    linkage: Linkage,
) -> Vec<ConceptId> {
    if candidates.is_empty() || k == 0 {
        return Vec::new();
    }
    let ids: Vec<ConceptId> = candidates.iter().map(|(c, _)| *c).collect();
    let groups = agglomerate(lexicon, &ids, k.min(candidates.len()), linkage);
    let mut picked: Vec<(ConceptId, f64)> = groups
        .iter()
        .map(|g| {
            let best = g
                .iter()
                .copied()
                .min_by(|&x, &y| desc_then_id(&candidates[x], &candidates[y]))
                .expect("clusters are non-empty");
            candidates[best]
        })
        .collect();
    picked.sort_by(desc_then_id);
    picked.into_iter().map(|(c, _)| c).collect()
}

/// Builds the similar / related / unrelated option lists around `anchor`.
///
/// Similar candidates that are also among the anchor's `k` heaviest related
/// concepts are filtered out. Lists are made disjoint with priority
/// similar, related, unrelated; later lists backfill from their rankings.
pub fn propose(
    lexicon: &Lexicon,
    graph: &ConceptGraph,
    anchor: ConceptId,
    config: &ProposalConfig,
) -> Result<ProposalSet, ProposalError> {
    let k = config.k;
    if k == 0 {
        return Err(ProposalError::ZeroK);
    }
    if !lexicon.contains(anchor) {
        return Err(ProposalError::UnknownAnchor(anchor));
    }
    let overscan = k.saturating_mul(config.overscan.max(1));
    let in_graph = anchor.0 < graph.node_count();
    let related_ranked = if in_graph { graph.top_related(anchor, overscan) } else { Vec::new() };
    let highly_related: BTreeSet<ConceptId> = related_ranked.iter().take(k).map(|(c, _)| *c).collect();

    let mut taken = BTreeSet::from([anchor]);
    let none = BTreeSet::new();
    let mut similar = Vec::with_capacity(k);
    let mut ranking = lexicon.top_similar(anchor, overscan, &none);
    if ranking.len() < lexicon.len() - 1 && count_free(&ranking, &highly_related) < k {
        ranking = lexicon.top_similar(anchor, lexicon.len(), &none);
    }
    for (c, _) in ranking {
        if similar.len() == k {
            break;
        }
        if !highly_related.contains(&c) {
            similar.push(c);
            taken.insert(c);
        }
    }

    let related_pool: Vec<(ConceptId, f64)> =
        related_ranked.iter().copied().filter(|(c, _)| !taken.contains(c)).collect();
    let related = diversify(&related_pool, lexicon, k, config.linkage);
    taken.extend(related.iter().copied());

    let isolated = !in_graph || graph.is_isolated(anchor);
    let unrelated: Vec<ConceptId> = if isolated {
        let mut by_cos: Vec<(ConceptId, f64)> = lexicon
            .ids()
            .filter(|c| !taken.contains(c))
            .map(|c| (c, lexicon.cosine_unchecked(anchor, c)))
            .collect();
        by_cos.sort_by(crate::lexicon::asc_then_id);
        by_cos.into_iter().take(k).map(|(c, _)| c).collect()
    } else {
        graph
            .rank_related(anchor, k + taken.len(), Direction::Least)
            .into_iter()
            .map(|(c, _)| c)
            .filter(|c| !taken.contains(c))
            .take(k)
            .collect()
    };

    Ok(ProposalSet { anchor, similar, related, unrelated, k, isolated_fallback: isolated })
}

fn count_free(ranking: &[(ConceptId, f64)], blocked: &BTreeSet<ConceptId>) -> usize {
    ranking.iter().filter(|(c, _)| !blocked.contains(c)).count()
}

/// Linear-interpolation quantile of an ascending slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::INFINITY;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Labels the move `from -> to`.
///
/// `similar` when the cosine reaches `theta_sim`; otherwise `related` when
/// `w(from, to)` is positive and at least the `theta_rel` quantile of
/// `from`'s positive out-weights; otherwise `unrelated`. A repeated concept
/// has cosine 1 and is therefore `similar` for any `theta_sim <= 1`.
pub fn classify_transition(
    lexicon: &Lexicon,
    graph: &ConceptGraph,
    from: ConceptId,
    to: ConceptId,
    theta_sim: f64,
    theta_rel: f64,
) -> ActionType {
    let cos = if from == to { 1.0 } else { lexicon.cosine_unchecked(from, to) };
    if cos >= theta_sim {
        return ActionType::Similar;
    }
    if from.0 < graph.node_count() {
        let w = graph.weight(from, to);
        if w > 0.0 {
            let mut weights: Vec<f64> = graph.out_edges(from).map(|(_, w)| w).collect();
            weights.sort_by(f64::total_cmp);
            if w >= quantile(&weights, theta_rel) {
                return ActionType::Related;
            }
        }
    }
    ActionType::Unrelated
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;

    fn words<'a>(lex: &'a Lexicon, ids: &[ConceptId]) -> Vec<&'a str> {
        ids.iter().map(|c| lex.word(*c)).collect()
    }

    #[test]
    fn diversify_drops_co_clustered_member() {
        let lex = fixture::lexicon();
        let id = |w| lex.lookup(w).unwrap();
        let cands = [(id("dog"), 3.0), (id("tiger"), 2.0), (id("car"), 1.0)];
        let out = diversify(&cands, &lex, 2, Linkage::Average);
        assert_eq!(words(&lex, &out), ["dog", "car"]);
    }

    #[test]
    fn diversify_keeps_all_when_k_covers_candidates() {
        let lex = fixture::lexicon();
        let cands: Vec<(ConceptId, f64)> = lex.ids().map(|c| (c, c.0 as f64)).collect();
        let out = diversify(&cands, &lex, 10, Linkage::Average);
        assert_eq!(out.len(), 5);
        assert_eq!(words(&lex, &out), ["piano", "car", "tiger", "dog", "cat"]);
    }

    #[test]
    fn boss_and_supervisor_collapse() {
        let lex = Lexicon::load_str(
            "boss 0.9 0.1 0.0\nsupervisor 0.88 0.12 0.01\nmachine 0.0 1.0 0.1\nsalary 0.1 0.0 1.0\n",
            10,
        )
        .unwrap();
        let id = |w| lex.lookup(w).unwrap();
        let cands = [(id("supervisor"), 5.0), (id("machine"), 4.0), (id("boss"), 3.5), (id("salary"), 3.0)];
        let out = diversify(&cands, &lex, 3, Linkage::Average);
        assert_eq!(words(&lex, &out), ["supervisor", "machine", "salary"]);
    }

    #[test]
    fn propose_fixture_k1() {
        let lex = fixture::lexicon();
        let g = fixture::graph(&lex);
        let cat = lex.lookup("cat").unwrap();
        let p = propose(&lex, &g, cat, &ProposalConfig::with_k(1)).unwrap();
        assert_eq!(words(&lex, &p.similar), ["tiger"]);
        assert_eq!(words(&lex, &p.related), ["dog"]);
        assert_eq!(words(&lex, &p.unrelated), ["car"]);
        assert!(!p.isolated_fallback);
    }

    #[test]
    fn propose_rejects_zero_k() {
        let lex = fixture::lexicon();
        let g = fixture::graph(&lex);
        let cfg = ProposalConfig::with_k(0);
        assert_eq!(propose(&lex, &g, ConceptId(0), &cfg), Err(ProposalError::ZeroK));
    }

    #[test]
    fn isolated_anchor_falls_back_to_lowest_cosine() {
        let lex = fixture::lexicon();
        let g = ConceptGraph::new(lex.len());
        let cat = lex.lookup("cat").unwrap();
        let p = propose(&lex, &g, cat, &ProposalConfig::with_k(1)).unwrap();
        assert!(p.related.is_empty());
        assert!(p.isolated_fallback);
        assert_eq!(words(&lex, &p.unrelated), ["piano"]);
    }

    #[test]
    fn classify_fixture_transitions() {
        let lex = fixture::lexicon();
        let g = fixture::graph(&lex);
        let id = |w| lex.lookup(w).unwrap();
        assert_eq!(classify_transition(&lex, &g, id("cat"), id("tiger"), 0.9, 0.8), ActionType::Similar);
        assert_eq!(classify_transition(&lex, &g, id("cat"), id("dog"), 0.9, 0.8), ActionType::Related);
        assert_eq!(classify_transition(&lex, &g, id("cat"), id("piano"), 0.9, 0.8), ActionType::Unrelated);
        // tiger is a light edge from cat: below the 0.8 quantile of {1, 3}
        assert_eq!(classify_transition(&lex, &g, id("cat"), id("tiger"), 0.99, 0.8), ActionType::Unrelated);
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[1.0, 3.0], 0.8), 2.6);
        assert_eq!(quantile(&[4.0], 0.8), 4.0);
        assert_eq!(quantile(&[1.0, 2.0, 3.0], 0.5), 2.0);
    }
}
