// Option lists for option mode: diverse similar, related and unrelated
// concepts around an anchor.

use std::error::Error;

use mindle::lexicon::Lexicon;
use mindle::proposals::{agglomerate, propose, Linkage};
use mindle::{fixture, ActionType, ProposalConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let lexicon = fixture::lexicon();
    let graph = fixture::graph(&lexicon);
    let config = ProposalConfig::with_k(1);

    for word in ["cat", "dog", "piano"] {
        let anchor = lexicon.lookup(word).ok_or("anchor")?;
        let set = propose(&lexicon, &graph, anchor, &config)?;
        println!("{word}:");
        for kind in ActionType::ALL {
            let words: Vec<&str> = set.list(kind).iter().map(|c| lexicon.word(*c)).collect();
            println!("  {:<9} {:?}", kind.as_str(), words);
        }
    }

    // Near-duplicates collapse into one cluster before representatives are picked.
    let lex = Lexicon::load_str("boss 1.0 0.0\nsupervisor 0.99 0.1\nmanager 0.95 0.3\nbanana 0.0 1.0\n", 10)?;
    let ids: Vec<_> = lex.ids().collect();
    let clusters = agglomerate(&lex, &ids, 2, Linkage::Average);
    for cluster in &clusters {
        let words: Vec<&str> = cluster.iter().map(|i| lex.word(ids[*i])).collect();
        println!("cluster {words:?}");
    }
    assert_eq!(clusters.len(), 2);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
