//! Runs both bundled calls through a simulated review cycle and prints the
//! transparency reports as CSV.
//!
//! cargo run --example analytics -- [seed]

use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};
use grantdesk::analytics::Dimension;
use grantdesk::auth::TokenIssuer;
use grantdesk::clock::Clock;
use grantdesk::corpus::{load, simulate, Corpus};
use grantdesk::model::CallId;
use grantdesk::platform::Platform;
use grantdesk::store::Store;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(7);
    let corpus = Corpus::bundled();
    let store = Arc::new(Store::in_memory_migrated()?);
    load(&corpus, &store)?;
    let clock = Clock::frozen(Utc.with_ymd_and_hms(2026, 1, 1, 0, 0, 0).unwrap());
    let platform = Platform::new(store, TokenIssuer::new("example-secret", Duration::hours(24)), clock)?;
    let calls: Vec<CallId> = corpus.body.calls.iter().map(|c| c.id.clone()).collect();
    let report = simulate(&platform, &calls, seed)?;
    println!("simulated: {}\n", serde_json::to_string(&report)?);

    for d in [Dimension::Institution, Dimension::ResearchArea, Dimension::AgencyType, Dimension::Call] {
        println!("# acceptance by {d}");
        print!("{}", platform.acceptance_by(d)?.to_csv());
        println!();
    }
    let effect = platform.reviewer_expertise_effect()?;
    println!("# expertise score vs review rating: r = {:?} over {} reviews\n", effect.correlation, effect.pairs.len());
    for c in &calls {
        println!("# rebuttal effect, {c}");
        print!("{}", platform.rebuttal_effect(c)?.to_csv());
    }
    Ok(())
}
