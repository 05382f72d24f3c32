//! Walks one funding call from submission to published results, driving the
//! platform directly with a frozen clock.
//!
//! cargo run --example lifecycle

use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::Duration;
use grantdesk::access::Principal;
use grantdesk::auth::TokenIssuer;
use grantdesk::clock::Clock;
use grantdesk::corpus::{load, Corpus};
use grantdesk::model::CallId;
use grantdesk::platform::{Platform, ReviewInput};
use grantdesk::store::Store;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = Corpus::bundled();
    let store = Arc::new(Store::in_memory_migrated()?);
    load(&corpus, &store)?;
    let call_id = CallId::from("call-01");
    let call = corpus.body.calls.iter().find(|c| c.id == call_id).unwrap().clone();
    let s = call.schedule;
    let clock = Clock::frozen(s.submission_deadline);
    let platform = Platform::new(store, TokenIssuer::new("example-secret", Duration::hours(24)), clock.clone())?;
    let rep = platform.representative_of(&call_id)?;

    let run = platform.assign_call(&rep, &call_id)?;
    println!("assigned {} reviews over {} proposals", run.assignments.len(), run.events.len());

    clock.set(s.submission_deadline + Duration::days(3));
    for (i, a) in run.assignments.iter().enumerate() {
        let reviewer = platform.principal(&a.reviewer_id)?;
        let scores: BTreeMap<String, i32> = call
            .criteria_template
            .iter()
            .enumerate()
            .map(|(j, c)| (c.name.clone(), c.scale_min + (((i * 37 + j * 11) / 3) as i32 % (c.scale_max - c.scale_min + 1))))
            .collect();
        let input = ReviewInput { criterion_scores: scores, criterion_comments: BTreeMap::new(), overall_comment: "Clear aims.".into() };
        if let Some(e) = platform.submit_review(&reviewer, &a.proposal_id, input)?.published {
            println!("{} reviews published at {}", e.proposal_id, e.timestamp);
        }
    }

    clock.set(s.review_deadline);
    println!("review deadline: {} transitions", platform.sweep_deadlines(Some(&call_id), None)?.len());

    let first = &run.assignments[0].proposal_id;
    let pi = corpus.body.proposals.iter().find(|p| &p.id == first).unwrap().pi_id.clone();
    clock.advance(Duration::days(1));
    platform.submit_rebuttal(&platform.principal(&pi)?, first, "The evaluation plan is in section 4.", None)?;

    clock.set(s.rebuttal_deadline);
    println!("rebuttal deadline: {} transitions", platform.sweep_deadlines(Some(&call_id), None)?.len());

    clock.set(s.deliberation_ends());
    for d in platform.decide_call(&rep, &call_id)? {
        println!("{:<12} {:?}", d.proposal_id, d.outcome);
    }
    clock.set(s.publication_date);
    platform.publish_call(&rep, &call_id)?;

    let results = platform.results(&Principal::anonymous(), &call_id)?;
    println!("\npublic results: {} funded, {} not funded", results.funded.len(), results.not_funded.len());
    for line in results.funded.iter().take(3) {
        println!("  {} overall {} | {}", line.proposal_id, line.overall.as_deref().unwrap_or("-"), line.explanation);
    }
    println!("\naudit log of {first}:");
    for e in platform.audit_log(&rep, first)? {
        println!("  {}  {:<18} by {:<10} -> {}", e.timestamp, e.kind.as_str(), e.actor_id, e.resulting_state.as_str());
    }
    Ok(())
}
