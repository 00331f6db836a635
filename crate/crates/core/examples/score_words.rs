// Load word vectors and score guesses against a hidden target.
//
// ```text
// cargo run --example score_words
// ```

use std::collections::BTreeSet;
use std::error::Error;

use mindle::fixture;
use mindle::lexicon::Lexicon;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let lexicon = Lexicon::load_str(fixture::VECTORS, 40_000)?;
    let target = lexicon.lookup("cat").ok_or("cat missing")?;

    println!("target: cat");
    for word in ["cat", "tiger", "dog", "car", "piano"] {
        let guess = lexicon.lookup(word).ok_or("word missing")?;
        let score = lexicon.score(guess, target)?;
        println!("  {word:<6} {score}");
    }
    // Opposite directions clamp to zero rather than going negative.
    let piano = lexicon.lookup("piano").ok_or("piano missing")?;
    if lexicon.score(piano, target)?.value() != 0.0 {
        return Err("negative cosine should score 0".into());
    }

    println!("nearest to dog:");
    let dog = lexicon.lookup("dog").ok_or("dog missing")?;
    for (c, cos) in lexicon.top_similar(dog, 3, &BTreeSet::new()) {
        println!("  {:<6} cos {cos:.4}", lexicon.word(c));
    }

    // Lookups fold case; unknown words are simply absent.
    assert_eq!(lexicon.lookup("CAT"), Some(target));
    assert_eq!(lexicon.lookup("zebra"), None);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
