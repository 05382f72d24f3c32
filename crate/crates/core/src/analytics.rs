//! Meta-research statistics over published calls.
//!
//! Everything here works on a [`PublishedSnapshot`], which only ever holds
//! data from calls whose results are public. Reports are pure functions of
//! the snapshot.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CallId, Decision, FundingCall, InstitutionId, Outcome, Proposal, ProposalId, Review, UserId};
use crate::scoring::{aggregate, rebuttal_adjusted_scores, Exact};
use crate::store::{AssignmentRecord, StoreError, Tx};
use crate::workflow::ProposalState;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("no published call has data for this report")]
    NoPublishedData,
    #[error("need at least {need} rated reviews, have {have}")]
    InsufficientData { have: usize, need: usize },
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl AnalyticsError {
    pub fn code(&self) -> &'static str {
        match self {
            AnalyticsError::NoPublishedData => "NO_PUBLISHED_DATA",
            AnalyticsError::InsufficientData { .. } => "INSUFFICIENT_DATA",
            AnalyticsError::Store(e) => e.code(),
        }
    }
}

/// Everything the reports read, restricted to published calls.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PublishedSnapshot {
    pub calls: Vec<FundingCall>,
    /// Decided proposals of those calls.
    pub proposals: Vec<Proposal>,
    pub decisions: BTreeMap<ProposalId, Decision>,
    /// Every stored version.
    pub reviews: Vec<Review>,
    pub assignments: Vec<AssignmentRecord>,
    pub institution_of: BTreeMap<UserId, InstitutionId>,
}

impl PublishedSnapshot {
    pub fn load(tx: &Tx<'_>) -> Result<Self, StoreError> {
        let calls = tx.published_calls()?;
        let mut snap = PublishedSnapshot { calls, ..Default::default() };
        for call in &snap.calls {
            for stored in tx.proposals_in_call(&call.id)? {
                let p = stored.proposal;
                if p.state != ProposalState::Published {
                    continue;
                }
                if let Some(d) = tx.decision(&p.id)? {
                    snap.decisions.insert(p.id.clone(), d);
                }
                snap.reviews.extend(tx.review_versions(&p.id)?);
                snap.assignments.extend(tx.assignments_for(&p.id)?);
                snap.proposals.push(p);
            }
        }
        for u in tx.users()? {
            snap.institution_of.insert(u.id, u.institution_id);
        }
        Ok(snap)
    }

    fn call(&self, id: &CallId) -> Option<&FundingCall> {
        self.calls.iter().find(|c| &c.id == id)
    }

    /// Highest version of each review of `proposal`.
    fn current_reviews(&self, proposal: &ProposalId) -> Vec<Review> {
        let mut latest: BTreeMap<&crate::model::ReviewId, &Review> = BTreeMap::new();
        for r in self.reviews.iter().filter(|r| &r.proposal_id == proposal) {
            if latest.get(&r.id).is_none_or(|prev| prev.version < r.version) {
                latest.insert(&r.id, r);
            }
        }
        latest.into_values().cloned().collect()
    }

    fn funded(&self, proposal: &ProposalId) -> bool {
        self.decisions.get(proposal).is_some_and(|d| d.outcome == Outcome::Funded)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Institution,
    ResearchArea,
    AgencyType,
    Call,
}

impl Dimension {
    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Institution => "institution",
            Dimension::ResearchArea => "research_area",
            Dimension::AgencyType => "agency_type",
            Dimension::Call => "call",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Dimension::Institution, Dimension::ResearchArea, Dimension::AgencyType, Dimension::Call]
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| format!("unknown dimension {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatGroup {
    pub key: String,
    pub n_submitted: u64,
    pub n_funded: u64,
    pub acceptance_rate: f64,
    /// Mean aggregate score of the group's proposals; `None` when none was reviewed.
    pub mean_overall: Option<f64>,
    pub mean_review_length_chars: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub dimension: Dimension,
    pub groups: Vec<StatGroup>,
}

impl StatReport {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["dimension", "key", "n_submitted", "n_funded", "acceptance_rate", "mean_overall", "mean_review_length_chars"])
            .expect("writing to memory");
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for g in &self.groups {
            w.write_record([
                self.dimension.as_str(),
                &g.key,
                &g.n_submitted.to_string(),
                &g.n_funded.to_string(),
                &g.acceptance_rate.to_string(),
                &opt(g.mean_overall),
                &opt(g.mean_review_length_chars),
            ])
            .expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv output is UTF-8")
    }
}

fn ratio(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn mean_exact(values: &[BigRational]) -> Option<BigRational> {
    if values.is_empty() {
        return None;
    }
    let n = BigRational::from_integer(BigInt::from(values.len()));
    Some(values.iter().fold(BigRational::zero(), |a, v| a + v) / n)
}

/// Acceptance rate per group. A proposal with several research areas counts in each.
pub fn acceptance_by(snap: &PublishedSnapshot, dimension: Dimension) -> Result<StatReport, AnalyticsError> {
    if snap.calls.is_empty() {
        return Err(AnalyticsError::NoPublishedData);
    }
    let mut groups: BTreeMap<String, Vec<&Proposal>> = BTreeMap::new();
    for p in &snap.proposals {
        let keys: Vec<String> = match dimension {
            Dimension::Institution => {
                vec![snap.institution_of.get(&p.pi_id).map_or_else(|| "unknown".to_owned(), |i| i.to_string())]
            }
            Dimension::ResearchArea if p.research_areas.is_empty() => vec!["unspecified".to_owned()],
            Dimension::ResearchArea => p.research_areas.iter().cloned().collect(),
            Dimension::AgencyType => {
                vec![snap.call(&p.call_id).map_or("UNKNOWN", |c| c.agency_type.as_str()).to_owned()]
            }
            Dimension::Call => vec![p.call_id.to_string()],
        };
        for k in keys {
            groups.entry(k).or_default().push(p);
        }
    }
    let groups = groups
        .into_iter()
        .map(|(key, members)| {
            let n_submitted = members.len() as u64;
            let n_funded = members.iter().filter(|p| snap.funded(&p.id)).count() as u64;
            let mut overalls = Vec::new();
            let mut lengths = Vec::new();
            for p in &members {
                let reviews = snap.current_reviews(&p.id);
                if let Some(call) = snap.call(&p.call_id) {
                    if let Ok(agg) = aggregate(&p.id, &reviews, &call.criteria_template) {
                        overalls.push(agg.overall.0);
                    }
                }
                lengths.extend(reviews.iter().map(|r| BigRational::from_integer(BigInt::from(r.overall_comment.chars().count()))));
            }
            StatGroup {
                key,
                n_submitted,
                n_funded,
                acceptance_rate: Exact(ratio(n_funded, n_submitted)).to_f64(),
                mean_overall: mean_exact(&overalls).map(|m| Exact(m).to_f64()),
                mean_review_length_chars: mean_exact(&lengths).map(|m| Exact(m).to_f64()),
            }
        })
        .collect();
    Ok(StatReport { dimension, groups })
}

/// Pearson correlation, or `None` when either variable is constant.
pub fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    let n = pairs.len() as f64;
    if pairs.is_empty() {
        return None;
    }
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CorrelationStatus {
    Defined,
    Undefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertiseEffect {
    /// (match score, quality rating) per rated assignment.
    pub pairs: Vec<(f64, u8)>,
    pub status: CorrelationStatus,
    pub correlation: Option<f64>,
}

impl ExpertiseEffect {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["match_score", "quality_rating"]).expect("writing to memory");
        for (s, r) in &self.pairs {
            w.write_record([s.to_string(), r.to_string()]).expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv output is UTF-8")
    }
}

pub const MIN_RATED_REVIEWS: usize = 3;

/// Correlation between how well a reviewer matched and how the agency rated the review.
pub fn reviewer_expertise_effect(snap: &PublishedSnapshot) -> Result<ExpertiseEffect, AnalyticsError> {
    let mut rated: Vec<&AssignmentRecord> = snap.assignments.iter().filter(|a| a.quality_rating.is_some()).collect();
    rated.sort_by(|a, b| (&a.proposal_id, &a.reviewer_id).cmp(&(&b.proposal_id, &b.reviewer_id)));
    if rated.len() < MIN_RATED_REVIEWS {
        return Err(AnalyticsError::InsufficientData { have: rated.len(), need: MIN_RATED_REVIEWS });
    }
    let pairs: Vec<(f64, u8)> = rated.iter().map(|a| (a.score, a.quality_rating.unwrap_or_default())).collect();
    let numeric: Vec<(f64, f64)> = pairs.iter().map(|&(s, r)| (s, f64::from(r))).collect();
    let correlation = pearson(&numeric);
    let status = if correlation.is_some() { CorrelationStatus::Defined } else { CorrelationStatus::Undefined };
    Ok(ExpertiseEffect { pairs, status, correlation })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RebuttalEffect {
    pub call_id: CallId,
    pub deltas: BTreeMap<ProposalId, Exact>,
    pub mean: Exact,
    pub median: Exact,
    pub min: Exact,
    pub max: Exact,
}

impl RebuttalEffect {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["call_id", "proposal_id", "delta"]).expect("writing to memory");
        for (p, d) in &self.deltas {
            w.write_record([self.call_id.as_str(), p.as_str(), &d.to_fixed4()]).expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv output is UTF-8")
    }
}

/// How much post-rebuttal revisions moved each proposal's aggregate score.
pub fn rebuttal_effect(snap: &PublishedSnapshot, call_id: &CallId) -> Result<RebuttalEffect, AnalyticsError> {
    let call = snap.call(call_id).ok_or(AnalyticsError::NoPublishedData)?;
    let ids: BTreeSet<&ProposalId> = snap.proposals.iter().filter(|p| &p.call_id == call_id).map(|p| &p.id).collect();
    let in_call: Vec<Review> = snap.reviews.iter().filter(|r| ids.contains(&r.proposal_id)).cloned().collect();
    let originals: Vec<Review> = in_call.iter().filter(|r| r.version == 1).cloned().collect();
    let mut deltas = rebuttal_adjusted_scores(&originals, &in_call, &call.criteria_template);
    for id in ids {
        deltas.entry(id.clone()).or_insert_with(Exact::zero);
    }
    let mut sorted: Vec<BigRational> = deltas.values().map(|d| d.0.clone()).collect();
    sorted.sort();
    let (mean, median, min, max) = match sorted.len() {
        0 => (BigRational::zero(), BigRational::zero(), BigRational::zero(), BigRational::zero()),
        n => {
            let median = if n % 2 == 1 {
                sorted[n / 2].clone()
            } else {
                (&sorted[n / 2 - 1] + &sorted[n / 2]) / BigRational::from_integer(BigInt::from(2))
            };
            (mean_exact(&sorted).unwrap_or_default(), median, sorted[0].clone(), sorted[n - 1].clone())
        }
    };
    Ok(RebuttalEffect { call_id: call_id.clone(), deltas, mean: Exact(mean), median: Exact(median), min: Exact(min), max: Exact(max) })
}
