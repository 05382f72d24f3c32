//! Creates a file-backed store, applies the migration chain, loads the bundled
//! corpus, checks referential integrity and writes a JSON dump.
//!
//! cargo run --example store_migrate -- [store.db]

use grantdesk::corpus::{dump, load, Corpus};
use grantdesk::store::{schema_head, Store};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let path = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| dir.path().join("grantdesk.db"));
    let store = Store::open(&path)?;
    println!("{} at schema version {}", path.display(), store.schema_version()?);
    for m in store.migrate()? {
        println!("  applied {:>2} {}", m.version, m.name);
    }
    println!("now at {} (head {})", store.schema_version()?, schema_head());
    println!("second migrate applies {} migrations", store.migrate()?.len());

    if store.read(|tx| tx.proposals())?.is_empty() {
        let report = load(&Corpus::bundled(), &store)?;
        println!("loaded corpus, {} synthesized audit entries", report.synthesized_audit);
    }
    for (table, n) in store.read(|tx| tx.table_counts())? {
        println!("  {table:<18} {n}");
    }
    println!("dangling references: {}", store.read(|tx| tx.foreign_key_violations())?);

    let out = dir.path().join("dump.json");
    let corpus = dump(&store)?;
    corpus.write(&out)?;
    println!("dump content hash {}", corpus.manifest.content_hash);
    Ok(())
}
