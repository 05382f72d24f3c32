//! Structured review validation, score aggregation and budget-constrained
//! funding recommendations.
//!
//! All arithmetic is exact. Scores are integers and criterion weights are
//! exact rationals, so weighted means, averages and variances are exact
//! rationals too; [`Exact::to_fixed4`] renders them to four decimals with
//! round-half-even for export.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Utc};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::model::{
    ratio_to_f64, CallId, Criterion, FundingCall, IssueCode, Money, Proposal, ProposalId, Review, ReviewId,
    ValidationReport, MAX_SECTION_CHARS,
};

/// An exact rational quantity; serialized as a JSON number.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Exact(pub BigRational);

impl Exact {
    pub fn zero() -> Self {
        Exact(BigRational::zero())
    }

    pub fn from_integer(n: i64) -> Self {
        Exact(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.0)
    }

    /// Four decimals, ties to even.
    pub fn to_fixed4(&self) -> String {
        let scaled = &self.0 * BigRational::from_integer(BigInt::from(10_000));
        let (numer, denom) = (scaled.numer().clone(), scaled.denom().clone());
        let (mut q, r) = numer.div_mod_floor(&denom);
        let twice: BigInt = &r * 2;
        match twice.cmp(&denom) {
            Ordering::Greater => q += 1,
            Ordering::Equal if q.is_odd() => q += 1,
            _ => {}
        }
        let negative = q.is_negative();
        let digits = q.abs().to_string();
        let padded = format!("{digits:0>5}");
        let (int_part, frac_part) = padded.split_at(padded.len() - 4);
        format!("{}{int_part}.{frac_part}", if negative { "-" } else { "" })
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_fixed4())
    }
}

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for Exact {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let x = f64::deserialize(d)?;
        crate::model::Weight::from_f64(x)
            .map(|w| Exact(w.ratio().clone()))
            .ok_or_else(|| serde::de::Error::custom("expected a finite number"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoringError {
    #[error("no reviews to aggregate")]
    NoReviews,
}

impl ScoringError {
    pub fn code(&self) -> &'static str {
        "NO_REVIEWS"
    }
}

/// Flags missing or unknown criteria, out-of-scale scores and an empty overall comment.
pub fn validate_review(review: &Review, call: &FundingCall) -> ValidationReport {
    let mut issues = Vec::new();
    for c in &call.criteria_template {
        match review.criterion_scores.get(&c.name) {
            None => issues.push(crate::model::FieldIssue::new(
                format!("criterion_scores.{}", c.name),
                IssueCode::MissingCriterion,
                format!("{:?} is not scored", c.name),
            )),
            Some(&s) if s < c.scale_min || s > c.scale_max => issues.push(crate::model::FieldIssue::new(
                format!("criterion_scores.{}", c.name),
                IssueCode::OutOfScale,
                format!("{s} is outside {}..={}", c.scale_min, c.scale_max),
            )),
            _ => {}
        }
    }
    let known: BTreeSet<&str> = call.criteria_template.iter().map(|c| c.name.as_str()).collect();
    for name in review.criterion_scores.keys().chain(review.criterion_comments.keys()) {
        if !known.contains(name.as_str()) {
            issues.push(crate::model::FieldIssue::new(
                format!("criterion_scores.{name}"),
                IssueCode::UnknownCriterion,
                format!("{name:?} is not a criterion of this call"),
            ));
        }
    }
    if review.overall_comment.trim().is_empty() {
        issues.push(crate::model::FieldIssue::new("overall_comment", IssueCode::EmptyComment, "overall comment is required"));
    }
    let too_long = std::iter::once(&review.overall_comment)
        .chain(review.criterion_comments.values())
        .any(|t| t.chars().count() > MAX_SECTION_CHARS);
    if too_long {
        issues.push(crate::model::FieldIssue::new("overall_comment", IssueCode::SectionTooLong, "comment too long"));
    }
    ValidationReport(issues)
}

/// Σ weight·score over the template. Unscored criteria contribute nothing.
pub fn overall_score(review: &Review, template: &[Criterion]) -> Exact {
    let total = template.iter().fold(BigRational::zero(), |acc, c| {
        match review.criterion_scores.get(&c.name) {
            Some(&s) => acc + c.weight.ratio() * BigRational::from_integer(BigInt::from(s)),
            None => acc,
        }
    });
    Exact(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateScore {
    pub proposal_id: ProposalId,
    pub overall: Exact,
    pub per_criterion_mean: BTreeMap<String, Exact>,
    /// Population variance of the per-review overall scores.
    pub variance: Exact,
    pub n_reviews: usize,
}

fn mean(values: &[BigRational]) -> BigRational {
    let n = BigRational::from_integer(BigInt::from(values.len()));
    values.iter().fold(BigRational::zero(), |acc, v| acc + v) / n
}

/// Mean of per-review overall scores, with the population variance alongside.
pub fn aggregate(proposal_id: &ProposalId, reviews: &[Review], template: &[Criterion]) -> Result<AggregateScore, ScoringError> {
    if reviews.is_empty() {
        return Err(ScoringError::NoReviews);
    }
    let overalls: Vec<BigRational> = reviews.iter().map(|r| overall_score(r, template).0).collect();
    let overall = mean(&overalls);
    let deviations: Vec<BigRational> = overalls.iter().map(|o| (o - &overall) * (o - &overall)).collect();
    let variance = mean(&deviations);
    let per_criterion_mean = template
        .iter()
        .map(|c| {
            let scores: Vec<BigRational> = reviews
                .iter()
                .filter_map(|r| r.criterion_scores.get(&c.name))
                .map(|&s| BigRational::from_integer(BigInt::from(s)))
                .collect();
            let m = if scores.is_empty() { BigRational::zero() } else { mean(&scores) };
            (c.name.clone(), Exact(m))
        })
        .collect();
    Ok(AggregateScore {
        proposal_id: proposal_id.clone(),
        overall: Exact(overall),
        per_criterion_mean,
        variance: Exact(variance),
        n_reviews: reviews.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Recommend {
    Fund,
    NoFund,
}

impl Recommend {
    pub fn as_str(self) -> &'static str {
        match self {
            Recommend::Fund => "FUND",
            Recommend::NoFund => "NO_FUND",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationLine {
    pub proposal_id: ProposalId,
    pub overall: Exact,
    pub variance: Exact,
    pub requested_total: Money,
    pub submitted_at: Option<DateTime<Utc>>,
    pub recommend: Recommend,
    /// Budget left after this line was decided.
    pub remaining_after: Money,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FundingRecommendation {
    pub call_id: CallId,
    pub lines: Vec<RecommendationLine>,
    pub remaining_budget: Money,
}

impl FundingRecommendation {
    pub fn funded_total(&self) -> Money {
        self.lines.iter().filter(|l| l.recommend == Recommend::Fund).map(|l| l.requested_total).sum()
    }

    pub fn outcome_of(&self, id: &ProposalId) -> Option<Recommend> {
        self.lines.iter().find(|l| &l.proposal_id == id).map(|l| l.recommend)
    }

    /// `proposal_id,overall,variance,ask,outcome,remaining_budget`
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["proposal_id", "overall", "variance", "ask", "outcome", "remaining_budget"])
            .expect("writing to memory");
        for l in &self.lines {
            w.write_record([
                l.proposal_id.as_str(),
                &l.overall.to_fixed4(),
                &l.variance.to_fixed4(),
                &l.requested_total.to_string(),
                l.recommend.as_str(),
                &l.remaining_after.to_string(),
            ])
            .expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv output is UTF-8")
    }
}

/// Ranking order: overall descending, earlier submission first, then id.
pub fn rank_order(a: (&Exact, Option<DateTime<Utc>>, &ProposalId), b: (&Exact, Option<DateTime<Utc>>, &ProposalId)) -> Ordering {
    b.0.cmp(a.0)
        .then_with(|| match (a.1, b.1) {
            (Some(x), Some(y)) => x.cmp(&y),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        })
        .then_with(|| a.2.cmp(b.2))
}

/// Walks the ranking and funds every proposal whose ask still fits the
/// remaining budget. Proposals without an aggregate are left out.
pub fn recommend(call: &FundingCall, aggregates: &[AggregateScore], proposals: &[Proposal]) -> FundingRecommendation {
    let by_id: BTreeMap<&ProposalId, &AggregateScore> = aggregates.iter().map(|a| (&a.proposal_id, a)).collect();
    let mut ranked: Vec<(&Proposal, &AggregateScore)> =
        proposals.iter().filter_map(|p| by_id.get(&p.id).map(|a| (p, *a))).collect();
    ranked.sort_by(|(pa, aa), (pb, ab)| rank_order((&aa.overall, pa.submitted_at, &pa.id), (&ab.overall, pb.submitted_at, &pb.id)));

    let mut remaining = call.total_budget;
    let lines = ranked
        .into_iter()
        .map(|(p, agg)| {
            let fits = p.requested_total.0 >= 0 && p.requested_total <= remaining;
            let recommend = if fits {
                remaining = remaining - p.requested_total;
                Recommend::Fund
            } else {
                Recommend::NoFund
            };
            RecommendationLine {
                proposal_id: p.id.clone(),
                overall: agg.overall.clone(),
                variance: agg.variance.clone(),
                requested_total: p.requested_total,
                submitted_at: p.submitted_at,
                recommend,
                remaining_after: remaining,
            }
        })
        .collect();
    FundingRecommendation { call_id: call.id.clone(), lines, remaining_budget: remaining }
}

/// Change in aggregate score per proposal once post-rebuttal revisions replace
/// the originals. Proposals without a revision get zero.
///
/// `originals` are the version-1 reviews; `revisions` may hold any later
/// versions, of which the highest per review id counts.
pub fn rebuttal_adjusted_scores(originals: &[Review], revisions: &[Review], template: &[Criterion]) -> BTreeMap<ProposalId, Exact> {
    let mut latest: BTreeMap<&ReviewId, &Review> = BTreeMap::new();
    for r in revisions.iter().filter(|r| r.version > 1) {
        match latest.get(&r.id) {
            Some(prev) if prev.version >= r.version => {}
            _ => {
                latest.insert(&r.id, r);
            }
        }
    }
    let mut by_proposal: BTreeMap<&ProposalId, Vec<&Review>> = BTreeMap::new();
    for r in originals {
        by_proposal.entry(&r.proposal_id).or_default().push(r);
    }
    by_proposal
        .into_iter()
        .map(|(pid, before)| {
            let after: Vec<Review> = before.iter().map(|r| (*latest.get(&r.id).unwrap_or(r)).clone()).collect();
            let before: Vec<Review> = before.into_iter().cloned().collect();
            let delta = match (aggregate(pid, &before, template), aggregate(pid, &after, template)) {
                (Ok(b), Ok(a)) => Exact(a.overall.0 - b.overall.0),
                _ => Exact::zero(),
            };
            (pid.clone(), delta)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{call, proposal, ts};
    use crate::model::{UserId, Weight};
    use proptest::prelude::*;

    fn template(weights: &[(i64, i64)]) -> Vec<Criterion> {
        weights
            .iter()
            .enumerate()
            .map(|(i, &(n, d))| Criterion {
                name: format!("c{i}"),
                description: String::new(),
                weight: Weight::from_ratio(n, d),
                scale_min: 0,
                scale_max: 10,
            })
            .collect()
    }

    fn review(id: &str, proposal: &str, scores: &[i32]) -> Review {
        Review {
            id: id.into(),
            proposal_id: proposal.into(),
            reviewer_id: UserId::from(format!("usr-{id}")),
            criterion_scores: scores.iter().enumerate().map(|(i, &s)| (format!("c{i}"), s)).collect(),
            criterion_comments: BTreeMap::new(),
            overall_comment: "ok".into(),
            version: 1,
            submitted_at: ts(2026, 3, 10),
        }
    }

    #[test]
    fn overall_score_examples() {
        assert_eq!(overall_score(&review("a", "p", &[6, 8]), &template(&[(1, 2), (1, 2)])), Exact::from_integer(7));
        assert_eq!(overall_score(&review("a", "p", &[10, 0]), &template(&[(7, 10), (3, 10)])), Exact::from_integer(7));
        assert_eq!(overall_score(&review("a", "p", &[4]), &template(&[(1, 1)])), Exact::from_integer(4));
    }

    #[test]
    fn review_validation() {
        let c = call();
        let mut r = review("a", "prop-1", &[]);
        r.criterion_scores = BTreeMap::from([("merit".into(), 7), ("feasibility".into(), 5)]);
        assert!(validate_review(&r, &c).is_valid());
        r.criterion_scores.insert("merit".into(), 11);
        assert!(validate_review(&r, &c).contains(IssueCode::OutOfScale));
        r.criterion_scores.remove("merit");
        assert!(validate_review(&r, &c).contains(IssueCode::MissingCriterion));
        r.overall_comment = " ".into();
        assert!(validate_review(&r, &c).contains(IssueCode::EmptyComment));
        r.criterion_scores.insert("novelty".into(), 3);
        assert!(validate_review(&r, &c).contains(IssueCode::UnknownCriterion));
    }

    #[test]
    fn aggregate_examples() {
        let t = template(&[(1, 1)]);
        let p = ProposalId::from("p");
        let same = [review("a", "p", &[7]), review("b", "p", &[7]), review("c", "p", &[7])];
        let agg = aggregate(&p, &same, &t).unwrap();
        assert_eq!(agg.overall, Exact::from_integer(7));
        assert_eq!(agg.variance, Exact::zero());
        assert_eq!(agg.n_reviews, 3);

        // mean (6 + 8) / 2 = 7; variance ((6-7)^2 + (8-7)^2) / 2 = 1
        let spread = [review("a", "p", &[6]), review("b", "p", &[8])];
        let agg = aggregate(&p, &spread, &t).unwrap();
        assert_eq!(agg.overall, Exact::from_integer(7));
        assert_eq!(agg.variance, Exact::from_integer(1));

        assert_eq!(aggregate(&p, &[], &t), Err(ScoringError::NoReviews));
    }

    fn ranked(id: &str, score: i64, ask: i64, submitted: DateTime<Utc>) -> (Proposal, AggregateScore) {
        let mut p = proposal();
        p.id = id.into();
        p.requested_total = Money(ask);
        p.submitted_at = Some(submitted);
        let agg = AggregateScore {
            proposal_id: id.into(),
            overall: Exact::from_integer(score),
            per_criterion_mean: BTreeMap::new(),
            variance: Exact::zero(),
            n_reviews: 2,
        };
        (p, agg)
    }

    #[test]
    fn greedy_budget_walk() {
        let mut c = call();
        c.total_budget = Money(100_000);
        let (ps, aggs): (Vec<_>, Vec<_>) = [
            ranked("A", 9, 60_000, ts(2026, 2, 1)),
            ranked("B", 8, 50_000, ts(2026, 2, 1)),
            ranked("C", 7, 30_000, ts(2026, 2, 1)),
        ]
        .into_iter()
        .unzip();
        let rec = recommend(&c, &aggs, &ps);
        let outcomes: Vec<(&str, Recommend)> = rec.lines.iter().map(|l| (l.proposal_id.as_str(), l.recommend)).collect();
        assert_eq!(outcomes, [("A", Recommend::Fund), ("B", Recommend::NoFund), ("C", Recommend::Fund)]);
        assert_eq!(rec.remaining_budget, Money(10_000));
        assert_eq!(rec.funded_total(), Money(90_000));
    }

    #[test]
    fn zero_budget_funds_nothing() {
        let mut c = call();
        c.total_budget = Money(0);
        let (p, a) = ranked("A", 9, 1, ts(2026, 2, 1));
        let rec = recommend(&c, &[a], &[p]);
        assert!(rec.lines.iter().all(|l| l.recommend == Recommend::NoFund));
    }

    #[test]
    fn ties_prefer_earlier_submission() {
        let c = call();
        let (p1, a1) = ranked("A", 8, 1, ts(2026, 2, 2));
        let (p2, a2) = ranked("B", 8, 1, ts(2026, 2, 1));
        let rec = recommend(&c, &[a1, a2], &[p1, p2]);
        assert_eq!(rec.lines[0].proposal_id.as_str(), "B");
    }

    #[test]
    fn csv_export() {
        let c = call();
        let (p, a) = ranked("A", 9, 60_000, ts(2026, 2, 1));
        let csv = recommend(&c, &[a], &[p]).to_csv();
        assert_eq!(csv, "proposal_id,overall,variance,ask,outcome,remaining_budget\nA,9.0000,0.0000,60000,FUND,40000\n");
    }

    #[test]
    fn fixed_point_rounding_is_half_even() {
        let cases = [((1, 3), "0.3333"), ((2, 3), "0.6667"), ((1, 20000), "0.0000"), ((3, 20000), "0.0002"), ((-1, 8), "-0.1250"), ((13, 2), "6.5000")];
        for ((n, d), expect) in cases {
            assert_eq!(Exact(BigRational::new(n.into(), d.into())).to_fixed4(), expect, "{n}/{d}");
        }
    }

    #[test]
    fn rebuttal_delta_examples() {
        let t = template(&[(1, 2), (1, 2)]);
        let originals = vec![review("a", "p", &[6, 7]), review("b", "p", &[6, 7]), review("c", "q", &[5, 5])];
        let none = rebuttal_adjusted_scores(&originals, &[], &t);
        assert!(none.values().all(|d| d.0.is_zero()));

        // Three reviews, two equal-weight criteria. Before: overalls 6.5, 6.5, 5.5 → mean 37/6.
        // One reviewer revises criterion c0 from 5 to 8: overalls 6.5, 6.5, 7.0 → mean 20/3.
        // Delta = 20/3 − 37/6 = 1/2.
        let originals = vec![review("a", "p", &[6, 7]), review("b", "p", &[7, 6]), review("c", "p", &[5, 6])];
        let mut revised = review("c", "p", &[8, 6]);
        revised.version = 2;
        let deltas = rebuttal_adjusted_scores(&originals, &[revised], &t);
        assert_eq!(deltas[&ProposalId::from("p")], Exact(BigRational::new(1.into(), 2.into())));
    }

    fn arb_reviews() -> impl Strategy<Value = (Vec<(i64, i64)>, Vec<Vec<i32>>)> {
        (1usize..4).prop_flat_map(|k| {
            let weights = prop::collection::vec(1i64..10, k).prop_map(|raw| {
                let total: i64 = raw.iter().sum();
                raw.into_iter().map(|w| (w, total)).collect::<Vec<_>>()
            });
            (weights, prop::collection::vec(prop::collection::vec(0i32..=10, k), 1..6))
        })
    }

    proptest! {
        #[test]
        fn raising_a_score_never_lowers_overall((weights, reviews) in arb_reviews(), which in 0usize..3) {
            let t = template(&weights);
            let base = review("a", "p", &reviews[0]);
            let i = which % reviews[0].len();
            let mut raised = reviews[0].clone();
            raised[i] = (raised[i] + 1).min(10);
            prop_assert!(overall_score(&review("a", "p", &raised), &t) >= overall_score(&base, &t));
        }

        #[test]
        fn aggregate_ignores_review_order((weights, reviews) in arb_reviews()) {
            let t = template(&weights);
            let rs: Vec<Review> = reviews.iter().enumerate().map(|(i, s)| review(&format!("r{i}"), "p", s)).collect();
            let mut reversed = rs.clone();
            reversed.reverse();
            let p = ProposalId::from("p");
            let a = aggregate(&p, &rs, &t).unwrap();
            let b = aggregate(&p, &reversed, &t).unwrap();
            prop_assert_eq!(&a, &b);
            // linearity: mean of overalls equals the weighted sum of criterion means
            let via_criteria = t.iter().fold(BigRational::zero(), |acc, c| acc + c.weight.ratio() * a.per_criterion_mean[&c.name].ratio());
            prop_assert_eq!(via_criteria, a.overall.0);
        }

        #[test]
        fn recommend_stays_within_budget(asks in prop::collection::vec((0i64..50, 1i64..60_000), 0..12), budget in 0i64..200_000) {
            let mut c = call();
            c.total_budget = Money(budget);
            let (ps, aggs): (Vec<_>, Vec<_>) = asks
                .iter()
                .enumerate()
                .map(|(i, &(score, ask))| ranked(&format!("P{i:02}"), score, ask, ts(2026, 2, 1)))
                .unzip();
            let rec = recommend(&c, &aggs, &ps);
            prop_assert!(rec.funded_total() <= c.total_budget);
            prop_assert_eq!(rec.remaining_budget, c.total_budget - rec.funded_total());
        }

        #[test]
        fn common_affine_rescaling_keeps_the_ranking(
            (weights, reviews) in arb_reviews(),
            scale in 1i32..5,
            shift in -5i32..5,
        ) {
            let t = template(&weights);
            let mut scaled_t = t.clone();
            for c in &mut scaled_t {
                c.scale_min = c.scale_min * scale + shift;
                c.scale_max = c.scale_max * scale + shift;
            }
            let order = |tmpl: &[Criterion], f: &dyn Fn(i32) -> i32| {
                let mut ids: Vec<(Exact, String)> = reviews
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        let s: Vec<i32> = s.iter().map(|&x| f(x)).collect();
                        (overall_score(&review("r", "p", &s), tmpl), format!("r{i}"))
                    })
                    .collect();
                ids.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
                ids.into_iter().map(|(_, id)| id).collect::<Vec<_>>()
            };
            prop_assert_eq!(order(&t, &|x| x), order(&scaled_t, &|x| x * scale + shift));
        }
    }
}
