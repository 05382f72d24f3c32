//! Computes weighted review scores, per-proposal aggregates and the greedy
//! funding recommendation for a call.
//!
//! cargo run --example scoring

use std::collections::BTreeMap;

use chrono::{Duration, TimeZone, Utc};
use grantdesk::corpus::Corpus;
use grantdesk::model::{Proposal, Review};
use grantdesk::scoring::{aggregate, overall_score, recommend, Recommend};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = Corpus::bundled();
    let call = corpus.body.calls[0].clone();
    let proposals: Vec<Proposal> = corpus.body.proposals.iter().filter(|p| p.call_id == call.id).cloned().collect();
    println!("{} ({} criteria, budget {})", call.title, call.criteria_template.len(), call.total_budget.0);
    for c in &call.criteria_template {
        println!("  {:<14} weight {}  scale {}..{}", c.name, c.weight.ratio(), c.scale_min, c.scale_max);
    }

    let mut aggregates = Vec::new();
    for (i, p) in proposals.iter().enumerate() {
        let reviews: Vec<Review> = (0..3)
            .map(|k| Review {
                id: format!("rev-{i}-{k}").into(),
                proposal_id: p.id.clone(),
                reviewer_id: format!("usr-r{k}").into(),
                criterion_scores: call
                    .criteria_template
                    .iter()
                    .enumerate()
                    .map(|(j, c)| (c.name.clone(), c.scale_min + ((i * i + 3 * j + 2 * k * i + k) as i32 % (c.scale_max - c.scale_min + 1))))
                    .collect(),
                criterion_comments: BTreeMap::new(),
                overall_comment: "ok".into(),
                version: 1,
                submitted_at: Utc.with_ymd_and_hms(2026, 6, 20, 0, 0, 0).unwrap() + Duration::minutes(k as i64),
            })
            .collect();
        if i == 0 {
            for r in &reviews {
                println!("  {} by {}: overall {}", p.id, r.reviewer_id, overall_score(r, &call.criteria_template).to_fixed4());
            }
        }
        aggregates.push(aggregate(&p.id, &reviews, &call.criteria_template)?);
    }

    let rec = recommend(&call, &aggregates, &proposals);
    println!("\n{:<12} {:>8} {:>9} {:>9} {:>8} {:>10}", "proposal", "overall", "variance", "ask", "", "remaining");
    for l in &rec.lines {
        let verdict = if l.recommend == Recommend::Fund { "FUND" } else { "-" };
        println!(
            "{:<12} {:>8} {:>9} {:>9} {:>8} {:>10}",
            l.proposal_id,
            l.overall.to_fixed4(),
            l.variance.to_fixed4(),
            l.requested_total.0,
            verdict,
            l.remaining_after.0
        );
    }
    println!("funded {} of {}", rec.funded_total().0, call.total_budget.0);
    Ok(())
}
