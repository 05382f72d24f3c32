//! Generates a synthetic corpus and prints its manifest.
//!
//! cargo run --example generate_corpus -- [seed] [out.json]

use grantdesk::corpus::{generate, CorpusSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed = match args.next() {
        Some(s) => s.parse()?,
        None => CorpusSpec::default().seed,
    };
    let corpus = generate(&CorpusSpec { seed, ..CorpusSpec::default() })?;
    println!("{}", serde_json::to_string_pretty(&corpus.manifest)?);
    if let Some(out) = args.next() {
        corpus.write(&out)?;
        println!("wrote {out}");
    }
    Ok(())
}
