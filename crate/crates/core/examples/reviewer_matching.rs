//! Scores reviewers against proposals, flags conflicts of interest and runs
//! the greedy assignment under per-proposal and per-reviewer limits.
//!
//! cargo run --example reviewer_matching

use std::collections::BTreeSet;

use grantdesk::matching::{
    assign_reviewers, detect_conflict, suggest_reviewers, AssignmentConstraint, Candidate, ExpertiseProfile, MatchTarget,
    MatchWeights,
};
use grantdesk::model::InstitutionId;

fn reviewer(id: &str, inst: &str, areas: &[&str], keywords: &[&str], perf: f64) -> Candidate {
    Candidate {
        profile: ExpertiseProfile::new(id.into(), areas.iter().copied(), keywords.iter().copied(), Some(perf)),
        institution_id: inst.into(),
        declared_conflicts: BTreeSet::new(),
    }
}

fn proposal(id: &str, pi: &str, inst: &str, areas: &[&str], keywords: &[&str]) -> MatchTarget {
    MatchTarget {
        proposal_id: id.into(),
        pi_id: pi.into(),
        co_investigator_ids: BTreeSet::new(),
        team_institutions: [InstitutionId::from(inst)].into(),
        research_areas: areas.iter().map(|s| s.to_string()).collect(),
        keywords: keywords.iter().map(|s| s.to_string()).collect(),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let proposals = vec![
        proposal("prop-a", "usr-pi1", "inst-north", &["genomics", "ecology"], &["sequencing", "soil"]),
        proposal("prop-b", "usr-pi2", "inst-south", &["robotics"], &["grasping", "sensing"]),
    ];
    let mut reviewers = vec![
        reviewer("usr-r1", "inst-north", &["genomics"], &["sequencing"], 0.9),
        reviewer("usr-r2", "inst-east", &["genomics", "ecology"], &["soil"], 0.6),
        reviewer("usr-r3", "inst-east", &["robotics"], &["sensing"], 0.5),
        reviewer("usr-r4", "inst-west", &["robotics", "ecology"], &["grasping"], 0.7),
        reviewer("usr-r5", "inst-west", &["ecology"], &[], 0.5),
    ];
    reviewers[3].declared_conflicts.insert("prop-a".into());
    let weights = MatchWeights::default();

    for p in &proposals {
        println!("{}:", p.proposal_id);
        for c in &reviewers {
            if let Some(reason) = detect_conflict(c, p) {
                println!("  {:<7} conflict {reason:?}", c.profile.reviewer_id);
            }
        }
        for s in suggest_reviewers(p, &reviewers, 3, &weights) {
            let k = &s.components;
            println!(
                "  {:<7} {:.3}  (areas {:.2}, keywords {:.2}, performance {:.2})",
                s.reviewer_id, s.score, k.area_sim, k.keyword_sim, k.performance
            );
        }
    }

    let constraint = AssignmentConstraint { reviewers_per_proposal: 2, max_load: 1 };
    println!("\nassignment with R=2, L=1:");
    for a in assign_reviewers(&proposals, &reviewers, constraint, &weights)? {
        println!("  {} <- {} ({:.3})", a.proposal_id, a.reviewer_id, a.score);
    }

    let tight = AssignmentConstraint { reviewers_per_proposal: 3, max_load: 1 };
    match assign_reviewers(&proposals, &reviewers, tight, &weights) {
        Ok(_) => println!("R=3 fits"),
        Err(e) => println!("\nR=3, L=1: {} ({e})", e.code()),
    }
    Ok(())
}
