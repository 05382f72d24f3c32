//! Shows the same published proposal as different viewers see it: budget
//! fields and reviewer identities are suppressed unless the viewer may see them.
//!
//! cargo run --example redaction

use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};
use grantdesk::access::Principal;
use grantdesk::auth::TokenIssuer;
use grantdesk::clock::Clock;
use grantdesk::corpus::{load, simulate, Corpus};
use grantdesk::model::{CallId, ProposalId};
use grantdesk::platform::Platform;
use grantdesk::store::Store;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = Corpus::bundled();
    let store = Arc::new(Store::in_memory_migrated()?);
    load(&corpus, &store)?;
    let clock = Clock::frozen(Utc.with_ymd_and_hms(2026, 1, 1, 0, 0, 0).unwrap());
    let platform = Platform::new(store, TokenIssuer::new("example-secret", Duration::hours(24)), clock)?;
    let calls: Vec<CallId> = corpus.body.calls.iter().map(|c| c.id.clone()).collect();
    simulate(&platform, &calls, 1)?;

    let id = ProposalId::from("prop-01-001");
    let pi = corpus.body.proposals.iter().find(|p| p.id == id).unwrap().pi_id.clone();
    let viewers = [
        ("anonymous", Principal::anonymous()),
        ("owner", platform.principal(&pi)?),
        ("agency rep", platform.representative_of(&CallId::from("call-01"))?),
    ];
    for (label, viewer) in viewers {
        let view = platform.proposal_view(&viewer, &id)?;
        println!("as {label}:");
        println!("  requested_total = {}", view.record["proposal"]["requested_total"]);
        println!("  suppressed: {:?}", view.suppressed);
        for r in view.record["reviews"].as_array().into_iter().flatten() {
            println!("  {:<12} reviewer_id {}", r["reviewer_label"].as_str().unwrap_or("?"), r["reviewer_id"]);
        }
    }
    Ok(())
}
