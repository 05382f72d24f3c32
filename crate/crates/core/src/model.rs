//! Persistent entities and their value-level validation.
//!
//! Everything here is plain data. Mutation goes through [`crate::store`];
//! the checks in this module are pure and safe to call from any thread.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Sub};
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::matching::MatchWeights;
use crate::workflow::{CallSchedule, ProposalState};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            /// Fresh random identifier.
            pub fn generate() -> Self {
                Self(format!("{}-{}", $prefix, uuid::Uuid::new_v4().simple()))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

string_id!(UserId, "usr");
string_id!(InstitutionId, "inst");
string_id!(CallId, "call");
string_id!(ProposalId, "prop");
string_id!(
    /// Stable across revisions; `(ReviewId, version)` identifies one stored row.
    ReviewId,
    "rev"
);
string_id!(RebuttalId, "reb");
string_id!(CommentId, "cmt");

/// Cap on every free-text proposal section, in characters.
pub const MAX_SECTION_CHARS: usize = 100_000;

/// Controlled research-area vocabulary. Keywords are free text; areas are not.
pub const RESEARCH_AREAS: [&str; 24] = [
    "artificial-intelligence",
    "machine-learning",
    "natural-language-processing",
    "computer-vision",
    "robotics",
    "data-science",
    "cybersecurity",
    "quantum-computing",
    "bioinformatics",
    "genomics",
    "neuroscience",
    "epidemiology",
    "climate-science",
    "ecology",
    "materials-science",
    "condensed-matter",
    "astrophysics",
    "particle-physics",
    "chemistry",
    "mathematics",
    "economics",
    "social-science",
    "public-policy",
    "education",
];

pub fn is_known_area(tag: &str) -> bool {
    RESEARCH_AREAS.contains(&tag)
}

/// Money in integer minor units. A call fixes the currency for everything under it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Money(pub i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub fn minor_units(self) -> i64 {
        self.0
    }

    pub fn checked_add(self, other: Money) -> Option<Money> {
        self.0.checked_add(other.0).map(Money)
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, Add::add)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Role {
    Pi,
    Reviewer,
    AgencyRep,
    Community,
    Admin,
}

impl Role {
    pub const ALL: [Role; 5] = [Role::Pi, Role::Reviewer, Role::AgencyRep, Role::Community, Role::Admin];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Pi => "PI",
            Role::Reviewer => "REVIEWER",
            Role::AgencyRep => "AGENCY_REP",
            Role::Community => "COMMUNITY",
            Role::Admin => "ADMIN",
        }
    }
}

impl FromStr for Role {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown role {s:?}"))
    }
}

/// A role held globally (`scope == None`) or for a single funding call.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RoleAssignment {
    pub user_id: UserId,
    pub role: Role,
    pub scope: Option<CallId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Institution {
    pub id: InstitutionId,
    pub name: String,
    /// ISO-3166 alpha-2.
    pub country: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserAccount {
    pub id: UserId,
    pub name: String,
    pub email: String,
    /// PHC-format salted digest. `None` means the account cannot log in.
    pub password_digest: Option<String>,
    pub institution_id: InstitutionId,
    pub research_areas: BTreeSet<String>,
    pub keywords: BTreeSet<String>,
    pub orcid: Option<String>,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AgencyType {
    Government,
    Private,
    International,
}

impl AgencyType {
    pub fn as_str(self) -> &'static str {
        match self {
            AgencyType::Government => "GOVERNMENT",
            AgencyType::Private => "PRIVATE",
            AgencyType::International => "INTERNATIONAL",
        }
    }
}

impl FromStr for AgencyType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "GOVERNMENT" => Ok(AgencyType::Government),
            "PRIVATE" => Ok(AgencyType::Private),
            "INTERNATIONAL" => Ok(AgencyType::International),
            _ => Err(format!("unknown agency type {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReviewVisibility {
    Signed,
    Anonymized,
}

/// Non-negative exact weight. Written and read as a JSON number; the decimal
/// literal is taken at face value, so `0.4` is exactly two fifths.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Weight(BigRational);

impl Weight {
    pub fn from_ratio(numer: i64, denom: i64) -> Self {
        Weight(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    /// Parses a plain decimal literal such as `"0.35"` exactly.
    pub fn parse_decimal(s: &str) -> Option<Self> {
        parse_decimal(s).map(Weight)
    }

    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        // `{}` prints the shortest string that round-trips, never in exponent form.
        Self::parse_decimal(&format!("{x}"))
    }

    pub fn ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.0)
    }
}

impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let x = f64::deserialize(d)?;
        Weight::from_f64(x).ok_or_else(|| serde::de::Error::custom("weight must be a finite number"))
    }
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (neg, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let mantissa: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    let r = BigRational::new(mantissa, denom);
    Some(if neg { -r } else { r })
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) => n / d,
        _ => f64::NAN,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub description: String,
    pub weight: Weight,
    pub scale_min: i32,
    pub scale_max: i32,
}

/// Dates every milestone of a proposal must fall within.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FundingCall {
    pub id: CallId,
    pub agency_name: String,
    pub agency_type: AgencyType,
    pub title: String,
    pub description: String,
    pub total_budget: Money,
    pub research_areas: BTreeSet<String>,
    pub schedule: CallSchedule,
    pub project_window: ProjectWindow,
    pub criteria_template: Vec<Criterion>,
    /// R: independent reviews each proposal receives.
    pub reviewers_per_proposal: u32,
    /// L: assignment cap per reviewer within this call.
    #[serde(default = "default_max_load")]
    pub max_assignments_per_reviewer: u32,
    pub budget_public: bool,
    pub review_visibility: ReviewVisibility,
    #[serde(default)]
    pub match_weights: MatchWeights,
}

fn default_max_load() -> u32 {
    5
}

impl FundingCall {
    pub fn discussion_enabled(&self) -> bool {
        self.schedule.discussion_deadline.is_some()
    }

    pub fn criterion(&self, name: &str) -> Option<&Criterion> {
        self.criteria_template.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BudgetCategory {
    Personnel,
    Equipment,
    Travel,
    Consumables,
    Overhead,
}

impl BudgetCategory {
    pub const ALL: [BudgetCategory; 5] = [
        BudgetCategory::Personnel,
        BudgetCategory::Equipment,
        BudgetCategory::Travel,
        BudgetCategory::Consumables,
        BudgetCategory::Overhead,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetItem {
    pub category: BudgetCategory,
    pub description: String,
    pub amount: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Milestone {
    pub name: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub id: ProposalId,
    pub call_id: CallId,
    pub pi_id: UserId,
    #[serde(default)]
    pub co_investigator_ids: Vec<UserId>,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub research_goals: String,
    pub methods: String,
    /// Areas and keywords the proposal declares for reviewer matching.
    /// When both are empty the PI's profile stands in.
    #[serde(default)]
    pub research_areas: BTreeSet<String>,
    #[serde(default)]
    pub keywords: BTreeSet<String>,
    pub timeline: Vec<Milestone>,
    pub budget_items: Vec<BudgetItem>,
    pub requested_total: Money,
    pub state: ProposalState,
    pub submitted_at: Option<DateTime<Utc>>,
}

impl Proposal {
    pub fn budget_sum(&self) -> Money {
        self.budget_items.iter().map(|b| b.amount).sum()
    }

    /// PI and co-investigators.
    pub fn team(&self) -> impl Iterator<Item = &UserId> {
        std::iter::once(&self.pi_id).chain(self.co_investigator_ids.iter())
    }

    pub fn is_team_member(&self, user: &UserId) -> bool {
        self.team().any(|m| m == user)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub id: ReviewId,
    pub proposal_id: ProposalId,
    pub reviewer_id: UserId,
    pub criterion_scores: BTreeMap<String, i32>,
    #[serde(default)]
    pub criterion_comments: BTreeMap<String, String>,
    pub overall_comment: String,
    pub version: u32,
    pub submitted_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rebuttal {
    pub id: RebuttalId,
    pub proposal_id: ProposalId,
    pub author_id: UserId,
    pub body: String,
    pub parent_review_id: Option<ReviewId>,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunityComment {
    pub id: CommentId,
    pub proposal_id: ProposalId,
    pub author_id: UserId,
    pub body: String,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Funded,
    NotFunded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub proposal_id: ProposalId,
    pub outcome: Outcome,
    pub awarded_amount: Money,
    pub explanation: String,
    pub decided_by: UserId,
    pub decided_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    CallMismatch,
    EmptyTitle,
    EmptyAbstract,
    MissingSection,
    SectionTooLong,
    UnknownResearchArea,
    EmptyBudget,
    NegativeAmount,
    BudgetSumMismatch,
    OverBudget,
    TimelineInverted,
    TimelineOutsideWindow,
    InvalidSchedule,
    InvalidWeights,
    InvalidScale,
    InvalidReviewerCount,
    DuplicateCriterion,
    MissingCriterion,
    UnknownCriterion,
    OutOfScale,
    EmptyComment,
    InvalidAward,
    EmptyName,
    InvalidEmail,
    WeakPassword,
}

/// One field-level violation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldIssue {
    pub field: String,
    pub code: IssueCode,
    pub message: String,
}

impl FieldIssue {
    pub fn new(field: impl Into<String>, code: IssueCode, message: impl Into<String>) -> Self {
        Self { field: field.into(), code, message: message.into() }
    }
}

/// Every violation found, in a stable order. Empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValidationReport(pub Vec<FieldIssue>);

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, code: IssueCode) -> bool {
        self.0.iter().any(|i| i.code == code)
    }

    pub fn issues(&self) -> &[FieldIssue] {
        &self.0
    }

    fn push(&mut self, field: impl Into<String>, code: IssueCode, message: impl Into<String>) {
        self.0.push(FieldIssue::new(field, code, message));
    }
}

fn check_text(report: &mut ValidationReport, field: &str, text: &str, empty_code: IssueCode) {
    if text.trim().is_empty() {
        report.push(field, empty_code, format!("{field} must not be empty"));
    } else if text.chars().count() > MAX_SECTION_CHARS {
        report.push(field, IssueCode::SectionTooLong, format!("{field} exceeds {MAX_SECTION_CHARS} characters"));
    }
}

/// Checks a proposal for completeness and consistency against its call.
pub fn validate_proposal(p: &Proposal, call: &FundingCall) -> ValidationReport {
    let mut report = ValidationReport::default();

    if p.call_id != call.id {
        report.push("call_id", IssueCode::CallMismatch, "proposal does not belong to this call");
    }
    check_text(&mut report, "title", &p.title, IssueCode::EmptyTitle);
    check_text(&mut report, "abstract", &p.abstract_text, IssueCode::EmptyAbstract);
    check_text(&mut report, "research_goals", &p.research_goals, IssueCode::MissingSection);
    check_text(&mut report, "methods", &p.methods, IssueCode::MissingSection);

    for area in p.research_areas.iter().filter(|a| !is_known_area(a)) {
        report.push("research_areas", IssueCode::UnknownResearchArea, format!("{area:?} is not in the vocabulary"));
    }

    if p.timeline.is_empty() {
        report.push("timeline", IssueCode::MissingSection, "timeline must list at least one milestone");
    }
    for (i, m) in p.timeline.iter().enumerate() {
        let field = format!("timeline[{i}]");
        if m.start > m.end {
            report.push(&field, IssueCode::TimelineInverted, format!("{:?} starts {} after it ends {}", m.name, m.start, m.end));
        }
        if m.start < call.project_window.start || m.end > call.project_window.end {
            report.push(
                &field,
                IssueCode::TimelineOutsideWindow,
                format!("{:?} falls outside {}..={}", m.name, call.project_window.start, call.project_window.end),
            );
        }
    }

    if p.budget_items.is_empty() {
        report.push("budget_items", IssueCode::EmptyBudget, "at least one budget item is required");
    }
    for (i, b) in p.budget_items.iter().enumerate() {
        if b.amount.0 < 0 {
            report.push(format!("budget_items[{i}].amount"), IssueCode::NegativeAmount, "amount must be non-negative");
        }
    }
    let sum = p.budget_items.iter().try_fold(Money::ZERO, |acc, b| acc.checked_add(b.amount));
    match sum {
        Some(sum) if sum == p.requested_total => {}
        Some(sum) => report.push(
            "requested_total",
            IssueCode::BudgetSumMismatch,
            format!("budget items sum to {sum} but requested_total is {}", p.requested_total),
        ),
        None => report.push("budget_items", IssueCode::BudgetSumMismatch, "budget items overflow"),
    }
    if p.requested_total > call.total_budget {
        report.push(
            "requested_total",
            IssueCode::OverBudget,
            format!("request {} exceeds call budget {}", p.requested_total, call.total_budget),
        );
    }
    report
}

/// Structural checks on a call definition.
pub fn validate_call(call: &FundingCall) -> ValidationReport {
    let mut report = ValidationReport::default();
    if call.total_budget.0 < 0 {
        report.push("total_budget", IssueCode::NegativeAmount, "total_budget must be non-negative");
    }
    if call.reviewers_per_proposal < 2 {
        report.push("reviewers_per_proposal", IssueCode::InvalidReviewerCount, "at least two reviewers per proposal");
    }
    if call.max_assignments_per_reviewer < 1 {
        report.push("max_assignments_per_reviewer", IssueCode::InvalidReviewerCount, "load cap must be at least one");
    }
    if !call.schedule.is_strictly_increasing() {
        report.push("schedule", IssueCode::InvalidSchedule, "deadlines must be strictly increasing");
    }
    if call.project_window.start > call.project_window.end {
        report.push("project_window", IssueCode::InvalidSchedule, "project window is inverted");
    }
    if call.criteria_template.is_empty() {
        report.push("criteria_template", IssueCode::InvalidWeights, "at least one criterion is required");
    }
    let mut seen = BTreeSet::new();
    let mut total = BigRational::zero();
    for (i, c) in call.criteria_template.iter().enumerate() {
        if !seen.insert(c.name.as_str()) {
            report.push(format!("criteria_template[{i}].name"), IssueCode::DuplicateCriterion, format!("{:?} repeated", c.name));
        }
        if c.scale_min >= c.scale_max {
            report.push(format!("criteria_template[{i}]"), IssueCode::InvalidScale, "scale_min must be below scale_max");
        }
        if c.weight.ratio().is_negative() {
            report.push(format!("criteria_template[{i}].weight"), IssueCode::InvalidWeights, "weight must be non-negative");
        }
        total += c.weight.ratio();
    }
    let tolerance = BigRational::new(BigInt::one(), BigInt::from(1_000_000_000));
    if !call.criteria_template.is_empty() && (total - BigRational::one()).abs() > tolerance {
        report.push("criteria_template", IssueCode::InvalidWeights, "criterion weights must sum to 1");
    }
    if !call.match_weights.is_valid() {
        report.push("match_weights", IssueCode::InvalidWeights, "match weights must be non-negative and sum to 1");
    }
    report
}

/// Award must not exceed the ask, and is zero for unfunded proposals.
pub fn validate_decision(d: &Decision, p: &Proposal) -> ValidationReport {
    let mut report = ValidationReport::default();
    let ok = match d.outcome {
        Outcome::Funded => d.awarded_amount.0 >= 0 && d.awarded_amount <= p.requested_total,
        Outcome::NotFunded => d.awarded_amount == Money::ZERO,
    };
    if !ok {
        report.push("awarded_amount", IssueCode::InvalidAward, "award must be 0 when not funded and at most the request otherwise");
    }
    report
}

/// ISO 7064 MOD 11-2 check character over a run of decimal digits.
pub fn orcid_check_char(base_digits: &str) -> Option<char> {
    let mut total: u32 = 0;
    for c in base_digits.chars() {
        total = (total + c.to_digit(10)?) * 2;
    }
    let result = (12 - total % 11) % 11;
    Some(if result == 10 { 'X' } else { char::from_digit(result, 10)? })
}

/// 16 characters once hyphens are removed, the last being the check character of the first 15.
pub fn validate_orcid(s: &str) -> bool {
    let compact: String = s.chars().filter(|&c| c != '-').collect();
    if compact.chars().count() != 16 {
        return false;
    }
    let (base, check) = compact.split_at(15);
    if !base.chars().all(|c| c.is_ascii_digit()) {
        return false;
    }
    let check = check.chars().next().map(|c| c.to_ascii_uppercase());
    orcid_check_char(base) == check
}

/// Lowercases and trims; `None` if the address is not plausibly valid.
pub fn normalize_email(raw: &str) -> Option<String> {
    let email = raw.trim().to_lowercase();
    let (local, domain) = email.split_once('@')?;
    let valid = !local.is_empty()
        && !domain.contains('@')
        && domain.contains('.')
        && !domain.starts_with('.')
        && !domain.ends_with('.')
        && !email.chars().any(|c| c.is_whitespace() || c.is_control());
    valid.then_some(email)
}

pub fn normalize_tags<I, S>(tags: I) -> BTreeSet<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    tags.into_iter()
        .map(|t| t.as_ref().trim().to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Strips control characters other than newline and tab.
pub fn sanitize_text(s: &str) -> String {
    s.chars().filter(|&c| !c.is_control() || c == '\n' || c == '\t').collect()
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use chrono::TimeZone;

    pub fn ts(y: i32, m: u32, d: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(y, m, d, 0, 0, 0).unwrap()
    }

    pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    pub fn call() -> FundingCall {
        FundingCall {
            id: CallId::from("call-1"),
            agency_name: "Open Science Fund".into(),
            agency_type: AgencyType::Government,
            title: "Frontier research".into(),
            description: "Open call".into(),
            total_budget: Money(100_000),
            research_areas: normalize_tags(["machine-learning"]),
            schedule: CallSchedule {
                submission_deadline: ts(2026, 3, 1),
                review_deadline: ts(2026, 3, 15),
                rebuttal_deadline: ts(2026, 3, 22),
                discussion_deadline: Some(ts(2026, 3, 29)),
                decision_deadline: ts(2026, 4, 5),
                publication_date: ts(2026, 4, 10),
            },
            project_window: ProjectWindow { start: date(2026, 1, 1), end: date(2028, 12, 31) },
            criteria_template: vec![
                Criterion {
                    name: "merit".into(),
                    description: "Intellectual merit".into(),
                    weight: Weight::from_ratio(1, 2),
                    scale_min: 1,
                    scale_max: 10,
                },
                Criterion {
                    name: "feasibility".into(),
                    description: "Can it be done".into(),
                    weight: Weight::from_ratio(1, 2),
                    scale_min: 1,
                    scale_max: 10,
                },
            ],
            reviewers_per_proposal: 2,
            max_assignments_per_reviewer: 5,
            budget_public: false,
            review_visibility: ReviewVisibility::Anonymized,
            match_weights: MatchWeights::default(),
        }
    }

    pub fn proposal() -> Proposal {
        Proposal {
            id: ProposalId::from("prop-1"),
            call_id: CallId::from("call-1"),
            pi_id: UserId::from("usr-pi"),
            co_investigator_ids: vec![UserId::from("usr-coi")],
            title: "Learning to review".into(),
            abstract_text: "We study review.".into(),
            research_goals: "Understand review quality.".into(),
            methods: "Surveys and models.".into(),
            research_areas: normalize_tags(["machine-learning"]),
            keywords: normalize_tags(["peer review"]),
            timeline: vec![Milestone { name: "Phase 1".into(), start: date(2026, 5, 1), end: date(2026, 12, 1) }],
            budget_items: vec![
                BudgetItem { category: BudgetCategory::Personnel, description: "RA".into(), amount: Money(60_000) },
                BudgetItem { category: BudgetCategory::Travel, description: "Conferences".into(), amount: Money(30_000) },
            ],
            requested_total: Money(90_000),
            state: ProposalState::Draft,
            submitted_at: None,
        }
    }
}
