//! Reviewer–proposal matching.
//!
//! A match score blends three signals: Jaccard overlap of research areas,
//! Jaccard overlap of keywords, and the reviewer's past performance. Conflicts
//! of interest are hard exclusions, never penalties.
//!
//! Assignment is greedy over all eligible pairs in descending score order.
//! When the greedy pass strands a proposal below `R` reviewers although a full
//! assignment exists, it is completed by augmenting paths that keep every
//! earlier pick's proposal and reviewer degrees intact.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{InstitutionId, ProposalId, UserId};

pub const DEFAULT_PAST_PERFORMANCE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchWeights {
    pub area: f64,
    pub keyword: f64,
    pub performance: f64,
}

impl Default for MatchWeights {
    fn default() -> Self {
        Self { area: 0.4, keyword: 0.4, performance: 0.2 }
    }
}

impl MatchWeights {
    pub fn is_valid(&self) -> bool {
        let parts = [self.area, self.keyword, self.performance];
        parts.iter().all(|w| w.is_finite() && *w >= 0.0) && (parts.iter().sum::<f64>() - 1.0).abs() <= 1e-9
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertiseProfile {
    pub reviewer_id: UserId,
    pub research_areas: BTreeSet<String>,
    pub keywords: BTreeSet<String>,
    /// Rolling mean of quality ratings rescaled to [0, 1].
    pub past_performance: f64,
}

impl ExpertiseProfile {
    /// Normalizes tags and clamps performance into [0, 1]; missing history is neutral.
    pub fn new<A, K>(reviewer_id: UserId, areas: A, keywords: K, past_performance: Option<f64>) -> Self
    where
        A: IntoIterator,
        A::Item: AsRef<str>,
        K: IntoIterator,
        K::Item: AsRef<str>,
    {
        let perf = past_performance.filter(|p| p.is_finite()).unwrap_or(DEFAULT_PAST_PERFORMANCE);
        Self {
            reviewer_id,
            research_areas: crate::model::normalize_tags(areas),
            keywords: crate::model::normalize_tags(keywords),
            past_performance: perf.clamp(0.0, 1.0),
        }
    }
}

/// Rolling mean over the most recent ratings (1–5), rescaled to [0, 1].
pub fn past_performance(ratings_newest_last: &[u8], window: usize) -> Option<f64> {
    let recent = &ratings_newest_last[ratings_newest_last.len().saturating_sub(window)..];
    if recent.is_empty() {
        return None;
    }
    let mean = recent.iter().map(|&r| f64::from(r.clamp(1, 5))).sum::<f64>() / recent.len() as f64;
    Some((mean - 1.0) / 4.0)
}

/// A proposal as the matcher sees it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchTarget {
    pub proposal_id: ProposalId,
    pub pi_id: UserId,
    pub co_investigator_ids: BTreeSet<UserId>,
    /// Institutions of every team member.
    pub team_institutions: BTreeSet<InstitutionId>,
    pub research_areas: BTreeSet<String>,
    pub keywords: BTreeSet<String>,
}

/// A potential reviewer with what conflict checks need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub profile: ExpertiseProfile,
    pub institution_id: InstitutionId,
    #[serde(default)]
    pub declared_conflicts: BTreeSet<ProposalId>,
}

impl Candidate {
    pub fn id(&self) -> &UserId {
        &self.profile.reviewer_id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchComponents {
    pub area_sim: f64,
    pub keyword_sim: f64,
    pub performance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchScore {
    pub reviewer_id: UserId,
    pub proposal_id: ProposalId,
    pub score: f64,
    pub components: MatchComponents,
}

/// |A ∩ B| / |A ∪ B|, zero when both are empty.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

pub fn similarity(profile: &ExpertiseProfile, target: &MatchTarget, weights: &MatchWeights) -> MatchScore {
    let components = MatchComponents {
        area_sim: jaccard(&profile.research_areas, &target.research_areas),
        keyword_sim: jaccard(&profile.keywords, &target.keywords),
        performance: profile.past_performance.clamp(0.0, 1.0),
    };
    let score = weights.area * components.area_sim
        + weights.keyword * components.keyword_sim
        + weights.performance * components.performance;
    MatchScore {
        reviewer_id: profile.reviewer_id.clone(),
        proposal_id: target.proposal_id.clone(),
        score: score.clamp(0.0, 1.0),
        components,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConflictReason {
    #[serde(rename = "SELF")]
    SelfAuthored,
    CoInvestigator,
    SameInstitution,
    Declared,
}

pub fn detect_conflict(candidate: &Candidate, target: &MatchTarget) -> Option<ConflictReason> {
    let id = candidate.id();
    if *id == target.pi_id {
        Some(ConflictReason::SelfAuthored)
    } else if target.co_investigator_ids.contains(id) {
        Some(ConflictReason::CoInvestigator)
    } else if target.team_institutions.contains(&candidate.institution_id) {
        Some(ConflictReason::SameInstitution)
    } else if candidate.declared_conflicts.contains(&target.proposal_id) {
        Some(ConflictReason::Declared)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentConstraint {
    /// R: reviewers per proposal.
    pub reviewers_per_proposal: u32,
    /// L: proposals per reviewer within one call.
    pub max_load: u32,
}

/// One (proposal, reviewer) pick, in the order the matcher made it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub proposal_id: ProposalId,
    pub reviewer_id: UserId,
    pub score: f64,
    pub components: MatchComponents,
    pub seq: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deficit {
    pub proposal_id: ProposalId,
    pub assigned: u32,
    pub required: u32,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatchError {
    #[error("not enough conflict-free reviewer capacity for {} proposal(s)", deficits.len())]
    Infeasible { deficits: Vec<Deficit> },
    #[error("invalid constraint: {0}")]
    InvalidConstraint(&'static str),
}

impl MatchError {
    pub fn code(&self) -> &'static str {
        match self {
            MatchError::Infeasible { .. } => "INFEASIBLE",
            MatchError::InvalidConstraint(_) => "INVALID_CONSTRAINT",
        }
    }
}

/// Greedy order: higher score, then reviewer id, then proposal id.
fn greedy_order(a: &MatchScore, b: &MatchScore) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.reviewer_id.cmp(&b.reviewer_id))
        .then_with(|| a.proposal_id.cmp(&b.proposal_id))
}

/// Up to `k` conflict-free reviewers for one proposal, best first.
pub fn suggest_reviewers(target: &MatchTarget, candidates: &[Candidate], k: usize, weights: &MatchWeights) -> Vec<MatchScore> {
    let mut scores: Vec<MatchScore> = candidates
        .iter()
        .filter(|c| detect_conflict(c, target).is_none())
        .map(|c| similarity(&c.profile, target, weights))
        .collect();
    scores.sort_by(greedy_order);
    scores.truncate(k);
    scores
}

/// Exactly `R` conflict-free reviewers per proposal, at most `L` proposals per reviewer.
///
/// Input order does not matter: targets and candidates are put in canonical
/// id order before anything else happens.
pub fn assign_reviewers(
    targets: &[MatchTarget],
    candidates: &[Candidate],
    constraint: AssignmentConstraint,
    weights: &MatchWeights,
) -> Result<Vec<Assignment>, MatchError> {
    if constraint.reviewers_per_proposal < 2 {
        return Err(MatchError::InvalidConstraint("at least two reviewers per proposal"));
    }
    if constraint.max_load < 1 {
        return Err(MatchError::InvalidConstraint("reviewer load cap must be at least one"));
    }
    let need = constraint.reviewers_per_proposal as usize;
    let cap = constraint.max_load as usize;

    let mut targets: Vec<&MatchTarget> = targets.iter().collect();
    targets.sort_by(|a, b| a.proposal_id.cmp(&b.proposal_id));
    targets.dedup_by(|a, b| a.proposal_id == b.proposal_id);
    let mut candidates: Vec<&Candidate> = candidates.iter().collect();
    candidates.sort_by(|a, b| a.id().cmp(b.id()));
    candidates.dedup_by(|a, b| a.id() == b.id());

    // Eligible edges, keyed by (proposal index, reviewer index).
    let mut edges: Vec<(usize, usize, MatchScore)> = Vec::new();
    for (pi, t) in targets.iter().enumerate() {
        for (ri, c) in candidates.iter().enumerate() {
            if detect_conflict(c, t).is_none() {
                edges.push((pi, ri, similarity(&c.profile, t, weights)));
            }
        }
    }
    edges.sort_by(|a, b| greedy_order(&a.2, &b.2));

    let mut chosen: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    let mut degree = vec![0usize; targets.len()];
    let mut load = vec![0usize; candidates.len()];
    let mut seq = 0u32;
    for (pi, ri, _) in &edges {
        if degree[*pi] < need && load[*ri] < cap {
            chosen.insert((*pi, *ri), seq);
            degree[*pi] += 1;
            load[*ri] += 1;
            seq += 1;
        }
    }

    // Repair: augmenting paths p0 -> r1 => p1 -> r2 => ... -> rk with spare load,
    // where "=>" gives up an existing pick. Neighbors are explored in greedy order.
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); targets.len()];
    for (pi, ri, _) in &edges {
        adjacency[*pi].push(*ri);
    }
    while let Some((start, path)) = (0..targets.len())
        .filter(|&p| degree[p] < need)
        .find_map(|p| augment(p, &adjacency, &chosen, &load, cap).map(|path| (p, path)))
    {
        apply_path(&path, &mut chosen, &mut seq);
        degree[start] += 1;
        load[*path.last().expect("path ends at a reviewer")] += 1;
    }

    let deficits: Vec<Deficit> = targets
        .iter()
        .zip(&degree)
        .filter(|(_, &d)| d < need)
        .map(|(t, &d)| Deficit {
            proposal_id: t.proposal_id.clone(),
            assigned: d as u32,
            required: need as u32,
        })
        .collect();
    if !deficits.is_empty() {
        return Err(MatchError::Infeasible { deficits });
    }

    let score_of: BTreeMap<(usize, usize), &MatchScore> = edges.iter().map(|(p, r, s)| ((*p, *r), s)).collect();
    let mut picks: Vec<(u32, usize, usize)> = chosen.iter().map(|(&(p, r), &s)| (s, p, r)).collect();
    picks.sort();
    Ok(picks
        .into_iter()
        .enumerate()
        .map(|(i, (_, p, r))| {
            let s = score_of[&(p, r)];
            Assignment {
                proposal_id: s.proposal_id.clone(),
                reviewer_id: s.reviewer_id.clone(),
                score: s.score,
                components: s.components,
                seq: i as u32,
            }
        })
        .collect())
}

/// Alternating path as node indices `[p0, r1, p1, r2, ..., rk]`, or `None`.
fn augment(
    start: usize,
    adjacency: &[Vec<usize>],
    chosen: &BTreeMap<(usize, usize), u32>,
    load: &[usize],
    cap: usize,
) -> Option<Vec<usize>> {
    // Reviewers currently assigned to each proposal, and vice versa.
    let mut holders: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(p, r) in chosen.keys() {
        holders.entry(r).or_default().push(p);
    }
    let mut came_from_reviewer: BTreeMap<usize, usize> = BTreeMap::new(); // reviewer -> proposal
    let mut came_from_proposal: BTreeMap<usize, usize> = BTreeMap::new(); // proposal -> reviewer
    let mut seen_p = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(p) = queue.pop_front() {
        for &r in &adjacency[p] {
            if chosen.contains_key(&(p, r)) || came_from_reviewer.contains_key(&r) {
                continue;
            }
            came_from_reviewer.insert(r, p);
            if load[r] < cap {
                let mut path = vec![r];
                let mut cur_r = r;
                loop {
                    let from_p = came_from_reviewer[&cur_r];
                    path.push(from_p);
                    if from_p == start {
                        break;
                    }
                    cur_r = came_from_proposal[&from_p];
                    path.push(cur_r);
                }
                path.reverse();
                return Some(path);
            }
            for &next_p in holders.get(&r).into_iter().flatten() {
                if seen_p.insert(next_p) {
                    came_from_proposal.insert(next_p, r);
                    queue.push_back(next_p);
                }
            }
        }
    }
    None
}

/// Flips picks along `[p0, r1, p1, r2, ..., rk]`: adds (p0,r1), (p1,r2), ...
/// and drops (p1,r1), (p2,r2), ...
fn apply_path(path: &[usize], chosen: &mut BTreeMap<(usize, usize), u32>, seq: &mut u32) {
    let mut i = 0;
    while i + 1 < path.len() {
        let (p, r) = (path[i], path[i + 1]);
        chosen.insert((p, r), *seq);
        *seq += 1;
        if i + 2 < path.len() {
            let next_p = path[i + 2];
            chosen.remove(&(next_p, r));
        }
        i += 2;
    }
}

/// Total match score of a set of picks.
pub fn total_score(assignments: &[Assignment]) -> f64 {
    assignments.iter().map(|a| a.score).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn profile(id: &str, areas: &[&str], keywords: &[&str], perf: f64) -> ExpertiseProfile {
        ExpertiseProfile::new(id.into(), areas, keywords, Some(perf))
    }

    fn target(id: &str, areas: &[&str], keywords: &[&str]) -> MatchTarget {
        MatchTarget {
            proposal_id: id.into(),
            pi_id: format!("pi-{id}").into(),
            co_investigator_ids: BTreeSet::new(),
            team_institutions: BTreeSet::from([InstitutionId::from("inst-home")]),
            research_areas: crate::model::normalize_tags(areas),
            keywords: crate::model::normalize_tags(keywords),
        }
    }

    fn candidate(p: ExpertiseProfile) -> Candidate {
        let inst = format!("inst-{}", p.reviewer_id);
        Candidate { profile: p, institution_id: inst.into(), declared_conflicts: BTreeSet::new() }
    }

    #[test]
    fn similarity_extremes() {
        let w = MatchWeights::default();
        let t = target("p", &["ml", "nlp"], &["a", "b"]);
        assert_eq!(similarity(&profile("r", &["ml", "nlp"], &["a", "b"], 1.0), &t, &w).score, 1.0);
        assert_eq!(similarity(&profile("r", &["bio"], &["z"], 0.0), &t, &w).score, 0.0);
    }

    #[test]
    fn similarity_worked_example() {
        // 0.4 * 1/2 + 0.4 * 1/3 + 0.2 * 0.5, evaluated by hand
        let expected = 0.2 + 0.4 / 3.0 + 0.1;
        let s = similarity(
            &profile("r", &["ml"], &["b", "c"], 0.5),
            &target("p", &["ml", "nlp"], &["a", "b"]),
            &MatchWeights::default(),
        );
        assert!((s.score - expected).abs() < 1e-12);
        assert!((s.score - 0.433_333_333_333).abs() < 1e-9);
        assert_eq!(s.components.area_sim, 0.5);
    }

    #[test]
    fn empty_sets_have_zero_overlap() {
        assert_eq!(jaccard(&BTreeSet::new(), &BTreeSet::new()), 0.0);
    }

    #[test]
    fn conflicts() {
        let mut t = target("p", &[], &[]);
        t.co_investigator_ids.insert("coi".into());
        t.team_institutions.insert("inst-shared".into());
        let pi = candidate(profile("pi-p", &[], &[], 0.5));
        assert_eq!(detect_conflict(&pi, &t), Some(ConflictReason::SelfAuthored));
        let coi = candidate(profile("coi", &[], &[], 0.5));
        assert_eq!(detect_conflict(&coi, &t), Some(ConflictReason::CoInvestigator));
        let mut colleague = candidate(profile("c", &[], &[], 0.5));
        colleague.institution_id = "inst-shared".into();
        assert_eq!(detect_conflict(&colleague, &t), Some(ConflictReason::SameInstitution));
        let mut declared = candidate(profile("d", &[], &[], 0.5));
        declared.declared_conflicts.insert("p".into());
        assert_eq!(detect_conflict(&declared, &t), Some(ConflictReason::Declared));
        assert_eq!(detect_conflict(&candidate(profile("x", &[], &[], 0.5)), &t), None);
        assert_eq!(serde_json::to_string(&ConflictReason::SelfAuthored).unwrap(), "\"SELF\"");
    }

    #[test]
    fn suggestions() {
        let t = target("p", &["ml"], &["a"]);
        let cands: Vec<Candidate> = (0..5)
            .map(|i| candidate(profile(&format!("r{i}"), &["ml"], &["a"], i as f64 / 5.0)))
            .collect();
        let top = suggest_reviewers(&t, &cands, 3, &MatchWeights::default());
        let ids: Vec<&str> = top.iter().map(|s| s.reviewer_id.as_str()).collect();
        assert_eq!(ids, ["r4", "r3", "r2"]);

        let mut conflicted = cands.clone();
        conflicted[4].institution_id = "inst-home".into();
        let top = suggest_reviewers(&t, &conflicted, 3, &MatchWeights::default());
        assert!(top.iter().all(|s| s.reviewer_id.as_str() != "r4"));

        assert_eq!(suggest_reviewers(&t, &cands[..4], 10, &MatchWeights::default()).len(), 4);
    }

    #[test]
    fn infeasible_names_the_short_proposal() {
        let mut t = target("p1", &[], &[]);
        t.team_institutions.insert("inst-r1".into());
        let cands: Vec<Candidate> = ["r1", "r2"].iter().map(|id| candidate(profile(id, &[], &[], 0.5))).collect();
        let err = assign_reviewers(&[t], &cands, AssignmentConstraint { reviewers_per_proposal: 2, max_load: 5 }, &MatchWeights::default())
            .unwrap_err();
        assert_eq!(
            err,
            MatchError::Infeasible {
                deficits: vec![Deficit { proposal_id: "p1".into(), assigned: 1, required: 2 }]
            }
        );
    }

    #[test]
    fn equal_scores_fall_back_to_id_order() {
        let targets = vec![target("p2", &[], &[]), target("p1", &[], &[])];
        let cands: Vec<Candidate> = ["r3", "r1", "r4", "r2"].iter().map(|id| candidate(profile(id, &[], &[], 0.5))).collect();
        let c = AssignmentConstraint { reviewers_per_proposal: 2, max_load: 1 };
        let run = assign_reviewers(&targets, &cands, c, &MatchWeights::default()).unwrap();
        let pairs: Vec<(&str, &str)> = run.iter().map(|a| (a.proposal_id.as_str(), a.reviewer_id.as_str())).collect();
        assert_eq!(pairs, [("p1", "r1"), ("p1", "r2"), ("p2", "r3"), ("p2", "r4")]);
        let again = assign_reviewers(&targets, &cands, c, &MatchWeights::default()).unwrap();
        assert_eq!(run, again);
    }

    #[test]
    fn repair_completes_a_stranded_greedy_pass() {
        // Greedy gives r1 (load 1) to p1; p2 can only use r1 and r2, p1 could use r3.
        let targets = vec![target("p1", &["x"], &[]), target("p2", &[], &[])];
        let mut cands = vec![
            candidate(profile("r1", &["x"], &[], 1.0)),
            candidate(profile("r2", &[], &[], 0.0)),
            candidate(profile("r3", &[], &[], 0.0)),
        ];
        cands[2].declared_conflicts.insert("p2".into());
        let c = AssignmentConstraint { reviewers_per_proposal: 2, max_load: 1 };
        let err = assign_reviewers(&targets, &cands, c, &MatchWeights::default());
        // Three reviewers with load 1 cannot cover four slots.
        assert!(matches!(err, Err(MatchError::Infeasible { .. })));

        let c = AssignmentConstraint { reviewers_per_proposal: 2, max_load: 2 };
        cands.push(candidate(profile("r4", &[], &[], 0.0)));
        cands[3].declared_conflicts.insert("p1".into());
        let run = assign_reviewers(&targets, &cands, c, &MatchWeights::default()).unwrap();
        assert_eq!(run.len(), 4);
    }

    proptest! {
        #[test]
        fn scores_are_bounded_and_symmetric(
            a in prop::collection::btree_set("[a-d]", 0..4),
            b in prop::collection::btree_set("[a-d]", 0..4),
            perf in 0.0f64..=1.0,
        ) {
            prop_assert_eq!(jaccard(&a, &b), jaccard(&b, &a));
            let p = ExpertiseProfile { reviewer_id: "r".into(), research_areas: a.clone(), keywords: b.clone(), past_performance: perf };
            let mut t = target("p", &[], &[]);
            t.research_areas = b;
            t.keywords = a;
            let s = similarity(&p, &t, &MatchWeights::default());
            prop_assert!((0.0..=1.0).contains(&s.score));
        }

        #[test]
        fn assignments_are_valid_and_order_free(
            reviewers in prop::collection::vec(
                (prop::collection::btree_set("[a-e]", 0..3), prop::collection::btree_set("[k-o]", 0..3), 0u8..=4, 0u8..3),
                2..9,
            ),
            proposals in prop::collection::vec((prop::collection::btree_set("[a-e]", 0..3), 0u8..4), 1..5),
            r in 2u32..4,
            l in 1u32..4,
            seed: u64,
        ) {
            let cands: Vec<Candidate> = reviewers
                .iter()
                .enumerate()
                .map(|(i, (areas, kws, perf, inst))| Candidate {
                    profile: ExpertiseProfile {
                        reviewer_id: format!("r{i}").into(),
                        research_areas: areas.clone(),
                        keywords: kws.clone(),
                        past_performance: f64::from(*perf) / 4.0,
                    },
                    institution_id: format!("inst-{inst}").into(),
                    declared_conflicts: BTreeSet::new(),
                })
                .collect();
            let targets: Vec<MatchTarget> = proposals
                .iter()
                .enumerate()
                .map(|(j, (areas, inst))| {
                    let mut t = target(&format!("p{j}"), &[], &["k"]);
                    t.research_areas = areas.clone();
                    t.team_institutions.insert(format!("inst-{inst}").into());
                    t
                })
                .collect();
            let c = AssignmentConstraint { reviewers_per_proposal: r, max_load: l };
            let w = MatchWeights::default();
            let run = assign_reviewers(&targets, &cands, c, &w);
            if let Ok(picks) = &run {
                let mut degree: BTreeMap<&ProposalId, u32> = BTreeMap::new();
                let mut load: BTreeMap<&UserId, u32> = BTreeMap::new();
                for a in picks {
                    *degree.entry(&a.proposal_id).or_default() += 1;
                    *load.entry(&a.reviewer_id).or_default() += 1;
                    let t = targets.iter().find(|t| t.proposal_id == a.proposal_id).unwrap();
                    let cand = cands.iter().find(|c| c.profile.reviewer_id == a.reviewer_id).unwrap();
                    prop_assert_eq!(detect_conflict(cand, t), None);
                }
                prop_assert!(degree.len() == targets.len() && degree.values().all(|&d| d == r));
                prop_assert!(load.values().all(|&n| n <= l));
            }
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
            let mut shuffled_t = targets.clone();
            let mut shuffled_c = cands.clone();
            rand::seq::SliceRandom::shuffle(shuffled_t.as_mut_slice(), &mut rng);
            rand::seq::SliceRandom::shuffle(shuffled_c.as_mut_slice(), &mut rng);
            prop_assert_eq!(assign_reviewers(&shuffled_t, &shuffled_c, c, &w), run);
        }
    }

    #[test]
    fn rolling_performance() {
        assert_eq!(past_performance(&[], 10), None);
        assert_eq!(past_performance(&[5, 5], 10), Some(1.0));
        assert_eq!(past_performance(&[1, 1, 1, 5, 3], 2), Some(0.75));
    }
}
