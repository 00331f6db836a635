// Build a concept graph from a text corpus and inspect transition
// probabilities.

use std::error::Error;

use mindle::graph::{ConceptGraph, Transition};
use mindle::{fixture, Direction};

const CORPUS: &str = "\
The cat chased the dog. A dog rode in the car.
The tiger is a big cat; the tiger played the piano!
Nobody drives a piano, but a car has a radio.
";

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let lexicon = fixture::lexicon();
    // Pairs within 4 tokens of each other add weight earlier -> later.
    let graph = ConceptGraph::build(CORPUS.as_bytes(), 4, &lexicon)?;
    println!("{} nodes, {} edges", graph.node_count(), graph.edge_count());

    for c in lexicon.ids() {
        let mut line = format!("{:<6}", lexicon.word(c));
        for (k, w) in graph.out_edges(c) {
            let p = graph.transition_prob(c, k)?.value();
            line.push_str(&format!(" {}:{w}({p:.2})", lexicon.word(k)));
        }
        println!("{line}");
    }

    let cat = lexicon.lookup("cat").ok_or("cat")?;
    let most: Vec<&str> = graph.rank_related(cat, 2, Direction::Most).iter().map(|(c, _)| lexicon.word(*c)).collect();
    let least: Vec<&str> = graph.rank_related(cat, 2, Direction::Least).iter().map(|(c, _)| lexicon.word(*c)).collect();
    println!("cat most related {most:?}, least related {least:?}");

    // Rows of every non-isolated node are probability distributions.
    for c in lexicon.ids() {
        let total: f64 = lexicon
            .ids()
            .filter(|k| *k != c)
            .filter_map(|k| match graph.transition_prob(c, k) {
                Ok(Transition::Defined(p)) => Some(p),
                _ => None,
            })
            .sum();
        if !graph.is_isolated(c) && (total - 1.0).abs() > 1e-9 {
            return Err(format!("row {} sums to {total}", lexicon.word(c)).into());
        }
    }

    let mut file = Vec::new();
    graph.write(&lexicon, &mut file)?;
    let reread = ConceptGraph::read(file.as_slice(), &lexicon)?;
    assert_eq!(reread.edge_count(), graph.edge_count());
    print!("{}", String::from_utf8(file)?);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
