//! The service layer: every user-facing operation as one store transaction.
//!
//! Handlers in [`crate::api`] and the command-line tool are thin wrappers
//! over [`Platform`]. Each method takes the acting [`Principal`], checks it
//! against the permission matrix, runs the workflow gates and writes through
//! the store. Everything it returns for display is already redacted for that
//! principal.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::access::{
    can, can_fire, combine_views, list_view, may_revise_review, may_see_budget, plain_view, pseudonym, pseudonym_rank,
    redact_decision, redact_proposal, redact_review, Action, AssignmentStamp, Grant, Principal, ProposalAccess,
    RedactedView,
};
use crate::analytics::{self, AnalyticsError, Dimension, ExpertiseEffect, PublishedSnapshot, RebuttalEffect, StatReport};
use crate::auth::{AuthToken, PasswordPolicy, TokenError, TokenIssuer};
use crate::clock::Clock;
use crate::matching::{
    self, assign_reviewers, past_performance, AssignmentConstraint, Candidate, ExpertiseProfile, MatchError, MatchScore,
    MatchTarget,
};
use crate::model::{
    is_known_area, normalize_email, normalize_tags, sanitize_text, validate_call, validate_decision, validate_orcid,
    validate_proposal, BudgetItem, CallId, CommentId, CommunityComment, Decision, FieldIssue, FundingCall, Institution,
    IssueCode, Milestone, Money, Outcome, Proposal, ProposalId, Rebuttal, RebuttalId, Review, ReviewId, ReviewVisibility,
    Role, RoleAssignment, UserAccount, UserId, ValidationReport, MAX_SECTION_CHARS,
};
use crate::scoring::{aggregate, rank_order, recommend, validate_review, Exact, AggregateScore, FundingRecommendation, Recommend, ScoringError};
use crate::store::{AssignmentRecord, CallFilter, CallPage, CoiDeclaration, Store, StoreError, StoredProposal, Tx};
use crate::workflow::{
    allowed_for, apply_event, plan_sweep, AuditEntry, EventContext, EventKind, ProposalState, TransitionEvent,
    WorkflowError, SYSTEM_ACTOR,
};

/// Ratings that feed a reviewer's past performance.
pub const PERFORMANCE_WINDOW: usize = 10;
pub const MIN_PASSWORD_CHARS: usize = 8;

#[derive(Debug, Error)]
pub enum PlatformError {
    #[error("validation failed")]
    Validation(ValidationReport),
    #[error(transparent)]
    Workflow(#[from] WorkflowError),
    #[error(transparent)]
    Matching(#[from] MatchError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Token(#[from] TokenError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error("authentication required")]
    Unauthenticated,
    #[error("email or password is wrong")]
    InvalidCredentials,
    #[error("not permitted")]
    Forbidden,
    #[error("email is already registered")]
    DuplicateEmail,
    #[error("ORCID check digit does not verify")]
    InvalidOrcid,
    #[error("institution {0} does not exist")]
    UnknownInstitution(String),
    #[error("{0} has already been submitted")]
    AlreadySubmitted(String),
    #[error("proposal can only be edited while in DRAFT, it is {0}")]
    NotEditable(ProposalState),
    #[error("{} proposal(s) still await a decision", .0.len())]
    DecisionsPending(Vec<ProposalId>),
    #[error("results for call {0} are not published")]
    NotPublished(CallId),
    #[error("{0}")]
    BadRequest(String),
}

impl PlatformError {
    pub fn code(&self) -> &'static str {
        match self {
            PlatformError::Validation(_) => "VALIDATION_FAILED",
            PlatformError::Workflow(e) => e.code(),
            PlatformError::Matching(e) => e.code(),
            PlatformError::Scoring(e) => e.code(),
            PlatformError::Token(e) => e.code(),
            PlatformError::Store(e) => e.code(),
            PlatformError::Analytics(e) => e.code(),
            PlatformError::Unauthenticated => "UNAUTHENTICATED",
            PlatformError::InvalidCredentials => "INVALID_CREDENTIALS",
            PlatformError::Forbidden => "UNAUTHORIZED_ACTOR",
            PlatformError::DuplicateEmail => "DUPLICATE_EMAIL",
            PlatformError::InvalidOrcid => "INVALID_ORCID",
            PlatformError::UnknownInstitution(_) => "UNKNOWN_INSTITUTION",
            PlatformError::AlreadySubmitted(_) => "DUPLICATE",
            PlatformError::NotEditable(_) => "NOT_EDITABLE",
            PlatformError::DecisionsPending(_) => "DECISIONS_PENDING",
            PlatformError::NotPublished(_) => "NOT_PUBLISHED",
            PlatformError::BadRequest(_) => "BAD_REQUEST",
        }
    }

    pub fn field_issues(&self) -> &[FieldIssue] {
        match self {
            PlatformError::Validation(r) => r.issues(),
            _ => &[],
        }
    }

    fn invalid(field: &str, code: IssueCode, message: impl Into<String>) -> Self {
        PlatformError::Validation(ValidationReport(vec![FieldIssue::new(field, code, message)]))
    }
}

pub type PlatformResult<T> = Result<T, PlatformError>;

fn check(report: ValidationReport) -> PlatformResult<()> {
    if report.is_valid() {
        Ok(())
    } else {
        Err(PlatformError::Validation(report))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registration {
    pub name: String,
    pub email: String,
    pub password: String,
    pub institution_id: crate::model::InstitutionId,
    #[serde(default)]
    pub research_areas: Vec<String>,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default)]
    pub orcid: Option<String>,
}

/// Editable part of a proposal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProposalDraft {
    pub call_id: CallId,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    #[serde(default)]
    pub research_goals: String,
    #[serde(default)]
    pub methods: String,
    #[serde(default)]
    pub co_investigator_ids: Vec<UserId>,
    #[serde(default)]
    pub research_areas: Vec<String>,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default)]
    pub timeline: Vec<Milestone>,
    #[serde(default)]
    pub budget_items: Vec<BudgetItem>,
    /// Defaults to the sum of the budget items.
    #[serde(default)]
    pub requested_total: Option<Money>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewInput {
    pub criterion_scores: BTreeMap<String, i32>,
    #[serde(default)]
    pub criterion_comments: BTreeMap<String, String>,
    pub overall_comment: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionInput {
    pub outcome: Outcome,
    /// Defaults to the full request when funded and zero otherwise.
    #[serde(default)]
    pub awarded_amount: Option<Money>,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRun {
    pub call_id: CallId,
    pub assignments: Vec<AssignmentRecord>,
    pub events: Vec<AuditEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewReceipt {
    pub review: Review,
    /// Set when this review completed the set and made all reviews public.
    pub published: Option<AuditEntry>,
}

/// Public outcome of one proposal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultLine {
    pub proposal_id: ProposalId,
    pub title: String,
    pub pi_name: String,
    pub outcome: Outcome,
    pub explanation: String,
    pub overall: Option<String>,
    pub variance: Option<String>,
    pub per_criterion_mean: BTreeMap<String, String>,
    pub n_reviews: usize,
    pub requested_total: Value,
    pub awarded_amount: Value,
    pub reviews: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallResults {
    pub call_id: CallId,
    pub title: String,
    pub agency_name: String,
    pub published_at: DateTime<Utc>,
    pub funded: Vec<ResultLine>,
    pub not_funded: Vec<ResultLine>,
    pub withdrawn: usize,
    /// Paths of every redaction marker, relative to this object.
    pub suppressed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeadlineItem {
    pub call_id: CallId,
    pub call_title: String,
    pub kind: String,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DashboardStats {
    pub proposals: usize,
    pub reviews_pending: usize,
    pub deadlines: usize,
    /// Funded share of decided proposals across published calls.
    pub acceptance_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dashboard {
    pub user_id: UserId,
    pub roles: Vec<Grant>,
    pub proposals: Vec<Value>,
    pub pending_reviews: Vec<Value>,
    pub upcoming_deadlines: Vec<DeadlineItem>,
    pub stats: DashboardStats,
}

/// Everything stored about one call, for audits and backups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallExport {
    pub call: FundingCall,
    pub published_at: Option<DateTime<Utc>>,
    pub proposals: Vec<Proposal>,
    pub assignments: Vec<AssignmentRecord>,
    pub reviews: Vec<Review>,
    pub rebuttals: Vec<Rebuttal>,
    pub comments: Vec<CommunityComment>,
    pub decisions: Vec<Decision>,
    pub audit_log: Vec<AuditEntry>,
    pub recommendation_csv: Option<String>,
}

/// One proposal and its surroundings, loaded inside a transaction.
struct Loaded {
    stored: StoredProposal,
    call: FundingCall,
    assignments: Vec<AssignmentRecord>,
    target: ProposalAccess,
}

impl Loaded {
    fn proposal(&self) -> &Proposal {
        &self.stored.proposal
    }

    fn state(&self) -> ProposalState {
        self.stored.proposal.state
    }

    fn stamps(&self) -> Vec<AssignmentStamp> {
        self.assignments
            .iter()
            .map(|a| AssignmentStamp { reviewer_id: a.reviewer_id.clone(), assigned_at: a.assigned_at, seq: a.seq })
            .collect()
    }
}

fn load(tx: &Tx<'_>, id: &ProposalId) -> PlatformResult<Loaded> {
    let stored = tx.require_proposal(id)?;
    let call = tx.require_call(&stored.proposal.call_id)?;
    let assignments = tx.assignments_for(id)?;
    let target = ProposalAccess::new(&stored.proposal, &call, assignments.iter().map(|a| &a.reviewer_id));
    Ok(Loaded { stored, call, assignments, target })
}

fn require(allowed: bool) -> PlatformResult<()> {
    if allowed {
        Ok(())
    } else {
        Err(PlatformError::Forbidden)
    }
}

fn actor_id(actor: &Principal) -> UserId {
    actor.user_id.clone().unwrap_or_else(|| UserId::from(SYSTEM_ACTOR))
}

fn clean(text: &str) -> String {
    sanitize_text(text).trim().to_owned()
}

fn check_length(report: &mut Vec<FieldIssue>, field: &str, text: &str) {
    if text.chars().count() > MAX_SECTION_CHARS {
        report.push(FieldIssue::new(field, IssueCode::SectionTooLong, format!("{field} exceeds {MAX_SECTION_CHARS} characters")));
    }
}

fn non_empty(field: &str, text: &str) -> PlatformResult<()> {
    let mut issues = Vec::new();
    if text.is_empty() {
        issues.push(FieldIssue::new(field, IssueCode::EmptyComment, format!("{field} must not be empty")));
    }
    check_length(&mut issues, field, text);
    check(ValidationReport(issues))
}

/// Fires one workflow event: gates, state write with version check, audit entry.
fn fire(tx: &Tx<'_>, actor: &Principal, loaded: &Loaded, kind: EventKind, now: DateTime<Utc>) -> PlatformResult<AuditEntry> {
    let p = loaded.proposal();
    let ctx = EventContext {
        call: &loaded.call,
        actor_authorized: can_fire(actor, kind, &loaded.target, p.state),
        assignments: loaded.assignments.len(),
        current_reviews: tx.current_reviews(&p.id)?.len(),
    };
    let entry = apply_event(p, &TransitionEvent::new(kind, actor_id(actor), now), &ctx)?;
    let mut next = p.clone();
    next.state = entry.resulting_state;
    if kind == EventKind::Submit {
        next.submitted_at = Some(now);
    }
    tx.update_proposal(&next, loaded.stored.version)?;
    tx.append_audit(&entry)?;
    Ok(entry)
}

/// Profile used for matching: the stored one, or the account's tags, with
/// performance taken from agency ratings when there are any.
fn candidate(tx: &Tx<'_>, user: &UserAccount) -> PlatformResult<Candidate> {
    let stored = tx.profile(&user.id)?;
    let ratings = tx.ratings_of(&user.id)?;
    let prior = stored.as_ref().map(|p| p.past_performance);
    let performance = past_performance(&ratings, PERFORMANCE_WINDOW).or(prior);
    let profile = match stored {
        Some(p) => ExpertiseProfile::new(user.id.clone(), p.research_areas, p.keywords, performance),
        None => ExpertiseProfile::new(user.id.clone(), &user.research_areas, &user.keywords, performance),
    };
    Ok(Candidate { profile, institution_id: user.institution_id.clone(), declared_conflicts: tx.conflicts_of(&user.id)? })
}

fn match_target(tx: &Tx<'_>, p: &Proposal) -> PlatformResult<MatchTarget> {
    let pi = tx.require_user(&p.pi_id)?;
    let mut team_institutions = BTreeSet::from([pi.institution_id.clone()]);
    for co in &p.co_investigator_ids {
        team_institutions.insert(tx.require_user(co)?.institution_id);
    }
    let (areas, keywords) = if p.research_areas.is_empty() && p.keywords.is_empty() {
        (pi.research_areas.clone(), pi.keywords.clone())
    } else {
        (p.research_areas.clone(), p.keywords.clone())
    };
    Ok(MatchTarget {
        proposal_id: p.id.clone(),
        pi_id: p.pi_id.clone(),
        co_investigator_ids: p.co_investigator_ids.iter().cloned().collect(),
        team_institutions,
        research_areas: normalize_tags(&areas),
        keywords: normalize_tags(&keywords),
    })
}

fn may_see_identities(viewer: &Principal, target: &ProposalAccess) -> bool {
    target.review_visibility == ReviewVisibility::Signed || viewer.is_admin() || viewer.has_role(Role::AgencyRep, &target.call_id)
}

#[derive(Clone)]
pub struct Platform {
    store: Arc<Store>,
    tokens: TokenIssuer,
    clock: Clock,
    passwords: PasswordPolicy,
}

impl std::fmt::Debug for Platform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Platform").field("clock", &self.clock).finish_non_exhaustive()
    }
}

impl Platform {
    /// Refuses a store whose schema is not at the head of the migration chain.
    pub fn new(store: Arc<Store>, tokens: TokenIssuer, clock: Clock) -> PlatformResult<Self> {
        store.require_current()?;
        Ok(Self { store, tokens, clock, passwords: PasswordPolicy::default() })
    }

    pub fn with_password_policy(mut self, policy: PasswordPolicy) -> Self {
        self.passwords = policy;
        self
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }

    pub fn clock(&self) -> &Clock {
        &self.clock
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    // accounts

    /// Creates an account holding the COMMUNITY role. The password is kept only as a salted digest.
    pub fn register_user(&self, reg: Registration) -> PlatformResult<UserAccount> {
        let mut issues = Vec::new();
        let name = clean(&reg.name);
        if name.is_empty() {
            issues.push(FieldIssue::new("name", IssueCode::EmptyName, "name is required"));
        }
        let email = normalize_email(&reg.email);
        if email.is_none() {
            issues.push(FieldIssue::new("email", IssueCode::InvalidEmail, "not a valid email address"));
        }
        if reg.password.chars().count() < MIN_PASSWORD_CHARS {
            issues.push(FieldIssue::new(
                "password",
                IssueCode::WeakPassword,
                format!("at least {MIN_PASSWORD_CHARS} characters"),
            ));
        }
        let areas = normalize_tags(&reg.research_areas);
        for a in areas.iter().filter(|a| !is_known_area(a)) {
            issues.push(FieldIssue::new("research_areas", IssueCode::UnknownResearchArea, format!("{a:?} is not in the vocabulary")));
        }
        check(ValidationReport(issues))?;
        let orcid = match reg.orcid.as_deref().map(str::trim).filter(|o| !o.is_empty()) {
            Some(o) if validate_orcid(o) => Some(o.to_uppercase()),
            Some(_) => return Err(PlatformError::InvalidOrcid),
            None => None,
        };
        let email = email.unwrap_or_default();
        let digest = self.passwords.hash(&reg.password);
        let user = UserAccount {
            id: UserId::generate(),
            name,
            email,
            password_digest: Some(digest),
            institution_id: reg.institution_id,
            research_areas: areas,
            keywords: normalize_tags(&reg.keywords),
            orcid,
            created_at: self.now(),
        };
        self.store.transaction(|tx| {
            if tx.institution(&user.institution_id)?.is_none() {
                return Err(PlatformError::UnknownInstitution(user.institution_id.to_string()));
            }
            if tx.user_by_email(&user.email)?.is_some() {
                return Err(PlatformError::DuplicateEmail);
            }
            tx.insert_user(&user).map_err(|e| match e {
                StoreError::Duplicate(_) => PlatformError::DuplicateEmail,
                e => e.into(),
            })?;
            tx.grant(&RoleAssignment { user_id: user.id.clone(), role: Role::Community, scope: None })?;
            Ok(user.clone())
        })
    }

    pub fn login(&self, email: &str, password: &str) -> PlatformResult<AuthToken> {
        let email = normalize_email(email).ok_or(PlatformError::InvalidCredentials)?;
        let (user, roles) = self.store.read(|tx| {
            let user = tx.user_by_email(&email)?.ok_or(PlatformError::InvalidCredentials)?;
            let roles = tx.roles_of(&user.id)?;
            Ok::<_, PlatformError>((user, roles))
        })?;
        let digest = user.password_digest.as_deref().ok_or(PlatformError::InvalidCredentials)?;
        if !PasswordPolicy::verify(password, digest) {
            return Err(PlatformError::InvalidCredentials);
        }
        Ok(self.tokens.issue(&user.id, roles.iter().map(Grant::from).collect(), self.now()))
    }

    /// Principal for a bearer token. Roles come from the store, so grants and
    /// revocations take effect before the token expires.
    pub fn authenticate(&self, token: &str) -> PlatformResult<Principal> {
        let claims = self.tokens.verify(token, self.now())?;
        self.principal(&claims.sub)
    }

    pub fn principal(&self, user: &UserId) -> PlatformResult<Principal> {
        self.store.read(|tx| {
            if tx.user(user)?.is_none() {
                return Err(PlatformError::Unauthenticated);
            }
            let grants: Vec<Grant> = tx.roles_of(user)?.iter().map(Grant::from).collect();
            Ok(Principal::user(user.clone(), grants))
        })
    }

    pub fn create_institution(&self, actor: &Principal, inst: Institution) -> PlatformResult<Institution> {
        require(actor.is_admin() || actor.is_system())?;
        let inst = Institution { name: clean(&inst.name), ..inst };
        self.store.transaction(|tx| {
            tx.insert_institution(&inst)?;
            Ok(inst.clone())
        })
    }

    pub fn institutions(&self) -> PlatformResult<Vec<Institution>> {
        Ok(self.store.read(|tx| tx.institutions())?)
    }

    pub fn grant_role(&self, actor: &Principal, ra: RoleAssignment) -> PlatformResult<()> {
        require(actor.is_admin() || actor.is_system())?;
        self.store.transaction(|tx| {
            tx.require_user(&ra.user_id)?;
            if let Some(c) = &ra.scope {
                tx.require_call(c)?;
            }
            tx.grant(&ra)?;
            Ok(())
        })
    }

    pub fn user_profile(&self, actor: &Principal, user: &UserId) -> PlatformResult<Value> {
        require(actor.is(user) || actor.is_admin())?;
        self.store.read(|tx| {
            let mut u = tx.require_user(user)?;
            u.password_digest = None;
            let roles: Vec<Grant> = tx.roles_of(user)?.iter().map(Grant::from).collect();
            Ok(json!({ "user": u, "roles": roles }))
        })
    }

    /// Replaces the areas and keywords used for matching. Reviewers edit their
    /// own; the performance prior is kept, since ratings come from the agency.
    pub fn set_profile(
        &self,
        actor: &Principal,
        reviewer: &UserId,
        research_areas: &[String],
        keywords: &[String],
    ) -> PlatformResult<ExpertiseProfile> {
        require(actor.is(reviewer) || actor.is_admin())?;
        let areas = normalize_tags(research_areas);
        let unknown: Vec<FieldIssue> = areas
            .iter()
            .filter(|a| !is_known_area(a))
            .map(|a| FieldIssue::new("research_areas", IssueCode::UnknownResearchArea, format!("{a:?} is not in the vocabulary")))
            .collect();
        check(ValidationReport(unknown))?;
        self.store.transaction(|tx| {
            tx.require_user(reviewer)?;
            let prior = tx.profile(reviewer)?.map(|p| p.past_performance);
            let profile = ExpertiseProfile::new(reviewer.clone(), &areas, keywords, prior);
            tx.upsert_profile(&profile)?;
            Ok(profile)
        })
    }

    pub fn declare_conflict(&self, actor: &Principal, proposal: &ProposalId, reason: &str) -> PlatformResult<()> {
        let reviewer = actor.user_id.clone().ok_or(PlatformError::Unauthenticated)?;
        self.store.transaction(|tx| {
            tx.require_proposal(proposal)?;
            tx.declare_conflict(&CoiDeclaration { reviewer_id: reviewer.clone(), proposal_id: proposal.clone(), reason: clean(reason) })?;
            Ok(())
        })
    }

    // calls

    /// Agency staff (global AGENCY_REP) and admins open calls. The creator, or
    /// `representative` when given, becomes the call's agency representative.
    pub fn create_call(&self, actor: &Principal, call: FundingCall, representative: Option<UserId>) -> PlatformResult<FundingCall> {
        let staff = actor.grants.iter().any(|g| g.role == Role::AgencyRep && g.scope.is_none());
        require(staff || actor.is_admin() || actor.is_system())?;
        let call = FundingCall {
            title: clean(&call.title),
            description: clean(&call.description),
            agency_name: clean(&call.agency_name),
            research_areas: normalize_tags(&call.research_areas),
            ..call
        };
        let mut report = validate_call(&call);
        for a in call.research_areas.iter().filter(|a| !is_known_area(a)) {
            report.0.push(FieldIssue::new("research_areas", IssueCode::UnknownResearchArea, format!("{a:?} is not in the vocabulary")));
        }
        check(report)?;
        let rep = representative.or_else(|| actor.user_id.clone());
        self.store.transaction(|tx| {
            tx.insert_call(&call)?;
            if let Some(rep) = &rep {
                tx.require_user(rep)?;
                tx.grant(&RoleAssignment { user_id: rep.clone(), role: Role::AgencyRep, scope: Some(call.id.clone()) })?;
            }
            Ok(call.clone())
        })
    }

    pub fn call(&self, id: &CallId) -> PlatformResult<FundingCall> {
        Ok(self.store.read(|tx| tx.require_call(id))?)
    }

    pub fn query_calls(&self, filter: &CallFilter) -> PlatformResult<CallPage> {
        Ok(self.store.read(|tx| tx.query_calls(filter))?)
    }

    fn is_call_staff(actor: &Principal, call: &CallId) -> bool {
        actor.is_admin() || actor.has_role(Role::AgencyRep, call)
    }

    /// First agency representative of the call, for operator tooling.
    pub fn representative_of(&self, call: &CallId) -> PlatformResult<Principal> {
        let reps = self.store.read(|tx| {
            tx.require_call(call)?;
            tx.holders_of(Role::AgencyRep, call)
        })?;
        let rep = reps.first().ok_or_else(|| PlatformError::BadRequest(format!("call {call} has no agency representative")))?;
        self.principal(rep)
    }

    // proposals

    fn build_proposal(&self, tx: &Tx<'_>, id: ProposalId, pi: UserId, draft: ProposalDraft) -> PlatformResult<Proposal> {
        let call = tx.require_call(&draft.call_id)?;
        let mut co = Vec::new();
        for c in draft.co_investigator_ids {
            tx.require_user(&c)?;
            if c != pi && !co.contains(&c) {
                co.push(c);
            }
        }
        let budget_items: Vec<BudgetItem> =
            draft.budget_items.into_iter().map(|b| BudgetItem { description: clean(&b.description), ..b }).collect();
        let requested_total = draft.requested_total.unwrap_or_else(|| budget_items.iter().map(|b| b.amount).sum());
        let p = Proposal {
            id,
            call_id: call.id.clone(),
            pi_id: pi,
            co_investigator_ids: co,
            title: clean(&draft.title),
            abstract_text: clean(&draft.abstract_text),
            research_goals: clean(&draft.research_goals),
            methods: clean(&draft.methods),
            research_areas: normalize_tags(&draft.research_areas),
            keywords: normalize_tags(&draft.keywords),
            timeline: draft.timeline.into_iter().map(|m| Milestone { name: clean(&m.name), ..m }).collect(),
            budget_items,
            requested_total,
            state: ProposalState::Draft,
            submitted_at: None,
        };
        // Drafts may be incomplete, but never oversized or mis-tagged.
        let report = validate_proposal(&p, &call);
        let hard: Vec<FieldIssue> = report
            .issues()
            .iter()
            .filter(|i| matches!(i.code, IssueCode::SectionTooLong | IssueCode::UnknownResearchArea | IssueCode::NegativeAmount))
            .cloned()
            .collect();
        check(ValidationReport(hard))?;
        Ok(p)
    }

    /// Starts a DRAFT owned by `actor`. Team members receive the PI role for the call.
    pub fn create_proposal(&self, actor: &Principal, draft: ProposalDraft) -> PlatformResult<StoredProposal> {
        let pi = actor.user_id.clone().ok_or(PlatformError::Unauthenticated)?;
        let now = self.now();
        self.store.transaction(|tx| {
            let call = tx.require_call(&draft.call_id)?;
            if now > call.schedule.submission_deadline {
                return Err(WorkflowError::DeadlinePassed { deadline: call.schedule.submission_deadline }.into());
            }
            let p = self.build_proposal(tx, ProposalId::generate(), pi.clone(), draft.clone())?;
            let stored = tx.insert_proposal(&p)?;
            for member in p.team() {
                tx.grant(&RoleAssignment { user_id: member.clone(), role: Role::Pi, scope: Some(p.call_id.clone()) })?;
            }
            Ok(stored)
        })
    }

    /// Replaces a DRAFT's content. `expected_version` turns a lost update into CONFLICT.
    pub fn update_proposal(
        &self,
        actor: &Principal,
        id: &ProposalId,
        draft: ProposalDraft,
        expected_version: Option<i64>,
    ) -> PlatformResult<StoredProposal> {
        self.store.transaction(|tx| {
            let loaded = load(tx, id)?;
            require(loaded.target.team.iter().any(|m| actor.is(m)) || actor.is_admin())?;
            if loaded.state() != ProposalState::Draft {
                return Err(PlatformError::NotEditable(loaded.state()));
            }
            if draft.call_id != loaded.call.id {
                return Err(PlatformError::invalid("call_id", IssueCode::CallMismatch, "a proposal cannot move between calls"));
            }
            let version = expected_version.unwrap_or(loaded.stored.version);
            let p = self.build_proposal(tx, id.clone(), loaded.proposal().pi_id.clone(), draft.clone())?;
            let version = tx.update_proposal(&p, version)?;
            for member in p.team() {
                tx.grant(&RoleAssignment { user_id: member.clone(), role: Role::Pi, scope: Some(p.call_id.clone()) })?;
            }
            Ok(StoredProposal { proposal: p, version })
        })
    }

    pub fn submit_proposal(&self, actor: &Principal, id: &ProposalId) -> PlatformResult<AuditEntry> {
        let now = self.now();
        self.store.transaction(|tx| {
            let loaded = load(tx, id)?;
            if loaded.state() == ProposalState::Draft {
                require(can(actor, Action::SubmitProposal, &loaded.target, loaded.state()))?;
                check(validate_proposal(loaded.proposal(), &loaded.call))?;
            }
            fire(tx, actor, &loaded, EventKind::Submit, now)
        })
    }

    pub fn withdraw(&self, actor: &Principal, id: &ProposalId) -> PlatformResult<AuditEntry> {
        let now = self.now();
        self.store.transaction(|tx| fire(tx, actor, &load(tx, id)?, EventKind::Withdraw, now))
    }

    /// Fires `kind` directly. `expected_version`, when given, must match the stored version.
    pub fn fire_event(&self, actor: &Principal, id: &ProposalId, kind: EventKind, expected_version: Option<i64>) -> PlatformResult<AuditEntry> {
        let now = self.now();
        self.store.transaction(|tx| {
            let loaded = load(tx, id)?;
            if let Some(v) = expected_version {
                if v != loaded.stored.version {
                    return Err(StoreError::Conflict(format!("proposal {id} is at version {}", loaded.stored.version)).into());
                }
            }
            fire(tx, actor, &loaded, kind, now)
        })
    }

    // reviewer assignment

    /// Assigns R reviewers to every SUBMITTED proposal of the call in one batch,
    /// once submissions have closed. Nothing to assign is not an error.
    pub fn assign_call(&self, actor: &Principal, call_id: &CallId) -> PlatformResult<AssignmentRun> {
        let now = self.now();
        self.store.transaction(|tx| {
            let call = tx.require_call(call_id)?;
            require(Self::is_call_staff(actor, call_id))?;
            let submitted: Vec<StoredProposal> =
                tx.proposals_in_call(call_id)?.into_iter().filter(|p| p.proposal.state == ProposalState::Submitted).collect();
            if submitted.is_empty() {
                return Ok(AssignmentRun { call_id: call_id.clone(), assignments: Vec::new(), events: Vec::new() });
            }
            if now < call.schedule.submission_deadline {
                return Err(WorkflowError::DeadlineNotReached { opens: call.schedule.submission_deadline }.into());
            }
            let targets = submitted.iter().map(|p| match_target(tx, &p.proposal)).collect::<PlatformResult<Vec<_>>>()?;
            let mut candidates = Vec::new();
            for id in tx.holders_of(Role::Reviewer, call_id)? {
                candidates.push(candidate(tx, &tx.require_user(&id)?)?);
            }
            let constraint = AssignmentConstraint {
                reviewers_per_proposal: call.reviewers_per_proposal,
                max_load: call.max_assignments_per_reviewer,
            };
            let picks = assign_reviewers(&targets, &candidates, constraint, &call.match_weights)?;
            let mut records = Vec::new();
            for a in picks {
                let record = AssignmentRecord {
                    proposal_id: a.proposal_id,
                    reviewer_id: a.reviewer_id,
                    call_id: call_id.clone(),
                    score: a.score,
                    components: a.components,
                    seq: a.seq,
                    assigned_at: now,
                    quality_rating: None,
                };
                tx.insert_assignment(&record)?;
                records.push(record);
            }
            let mut events = Vec::new();
            for p in &submitted {
                events.push(fire(tx, actor, &load(tx, &p.proposal.id)?, EventKind::AssignComplete, now)?);
            }
            Ok(AssignmentRun { call_id: call_id.clone(), assignments: records, events })
        })
    }

    /// Best conflict-free reviewers for one proposal. Staff only.
    pub fn suggest_reviewers(&self, actor: &Principal, id: &ProposalId, k: usize) -> PlatformResult<Vec<MatchScore>> {
        self.store.read(|tx| {
            let loaded = load(tx, id)?;
            require(Self::is_call_staff(actor, &loaded.call.id))?;
            let target = match_target(tx, loaded.proposal())?;
            let mut candidates = Vec::new();
            for uid in tx.holders_of(Role::Reviewer, &loaded.call.id)? {
                candidates.push(candidate(tx, &tx.require_user(&uid)?)?);
            }
            Ok(matching::suggest_reviewers(&target, &candidates, k.max(1), &loaded.call.match_weights))
        })
    }

    // reviews, rebuttals, comments

    fn build_review(call: &FundingCall, input: ReviewInput, base: Review) -> PlatformResult<Review> {
        let review = Review {
            criterion_scores: input.criterion_scores,
            criterion_comments: input.criterion_comments.into_iter().map(|(k, v)| (k, clean(&v))).collect(),
            overall_comment: clean(&input.overall_comment),
            ..base
        };
        check(validate_review(&review, call))?;
        Ok(review)
    }

    /// The R-th review publishes all of them at once (ALL_REVIEWS_IN).
    pub fn submit_review(&self, actor: &Principal, id: &ProposalId, input: ReviewInput) -> PlatformResult<ReviewReceipt> {
        let now = self.now();
        self.store.transaction(|tx| {
            let loaded = load(tx, id)?;
            require(can(actor, Action::SubmitReview, &loaded.target, loaded.state()))?;
            let reviewer = actor_id(actor);
            if tx.review_versions(id)?.iter().any(|r| r.reviewer_id == reviewer) {
                return Err(PlatformError::AlreadySubmitted(format!("review of {id}")));
            }
            let base = Review {
                id: ReviewId::generate(),
                proposal_id: id.clone(),
                reviewer_id: reviewer,
                criterion_scores: BTreeMap::new(),
                criterion_comments: BTreeMap::new(),
                overall_comment: String::new(),
                version: 1,
                submitted_at: now,
            };
            let review = Self::build_review(&loaded.call, input.clone(), base)?;
            tx.insert_review(&review)?;
            let published = if tx.current_reviews(id)?.len() >= loaded.call.reviewers_per_proposal as usize {
                Some(fire(tx, &Principal::system(), &load(tx, id)?, EventKind::AllReviewsIn, now)?)
            } else {
                None
            };
            Ok(ReviewReceipt { review, published })
        })
    }

    /// Adds a new version of the author's review once the PI could respond.
    pub fn revise_review(&self, actor: &Principal, review_id: &ReviewId, input: ReviewInput) -> PlatformResult<Review> {
        let now = self.now();
        self.store.transaction(|tx| {
            let current = tx.review(review_id)?.ok_or_else(|| StoreError::NotFound { entity: "review", id: review_id.to_string() })?;
            let loaded = load(tx, &current.proposal_id)?;
            require(may_revise_review(actor, &current.reviewer_id, loaded.state()))?;
            let base = Review { version: current.version + 1, submitted_at: now, ..current };
            let review = Self::build_review(&loaded.call, input.clone(), base)?;
            tx.insert_review(&review)?;
            Ok(review)
        })
    }

    /// Any team member may respond while the rebuttal window is open.
    pub fn submit_rebuttal(&self, actor: &Principal, id: &ProposalId, body: &str, parent: Option<ReviewId>) -> PlatformResult<Rebuttal> {
        let now = self.now();
        self.store.transaction(|tx| {
            let loaded = load(tx, id)?;
            require(can(actor, Action::SubmitRebuttal, &loaded.target, loaded.state()))?;
            if now > loaded.call.schedule.rebuttal_deadline {
                return Err(WorkflowError::DeadlinePassed { deadline: loaded.call.schedule.rebuttal_deadline }.into());
            }
            let body = clean(body);
            non_empty("body", &body)?;
            if let Some(r) = &parent {
                match tx.review(r)? {
                    Some(review) if &review.proposal_id == id => {}
                    _ => return Err(StoreError::NotFound { entity: "review", id: r.to_string() }.into()),
                }
            }
            let rebuttal = Rebuttal {
                id: RebuttalId::generate(),
                proposal_id: id.clone(),
                author_id: actor_id(actor),
                body,
                parent_review_id: parent.clone(),
                created_at: now,
            };
            tx.insert_rebuttal(&rebuttal)?;
            Ok(rebuttal)
        })
    }

    pub fn post_comment(&self, actor: &Principal, id: &ProposalId, body: &str) -> PlatformResult<CommunityComment> {
        let now = self.now();
        self.store.transaction(|tx| {
            let loaded = load(tx, id)?;
            require(can(actor, Action::PostComment, &loaded.target, loaded.state()))?;
            let closes = loaded.call.schedule.deliberation_ends();
            if now > closes {
                return Err(WorkflowError::DeadlinePassed { deadline: closes }.into());
            }
            let body = clean(body);
            non_empty("body", &body)?;
            let comment = CommunityComment { id: CommentId::generate(), proposal_id: id.clone(), author_id: actor_id(actor), body, created_at: now };
            tx.insert_comment(&comment)?;
            Ok(comment)
        })
    }

    /// Agency rating (1–5) of one submitted review; feeds past performance.
    pub fn rate_review(&self, actor: &Principal, review_id: &ReviewId, rating: u8) -> PlatformResult<()> {
        if !(1..=5).contains(&rating) {
            return Err(PlatformError::invalid("rating", IssueCode::OutOfScale, "rating must be between 1 and 5"));
        }
        self.store.transaction(|tx| {
            let review = tx.review(review_id)?.ok_or_else(|| StoreError::NotFound { entity: "review", id: review_id.to_string() })?;
            let loaded = load(tx, &review.proposal_id)?;
            require(Self::is_call_staff(actor, &loaded.call.id))?;
            tx.set_quality_rating(&review.proposal_id, &review.reviewer_id, rating)?;
            Ok(())
        })
    }

    // decisions and publication

    fn aggregates(tx: &Tx<'_>, call: &FundingCall, proposals: &[Proposal]) -> PlatformResult<Vec<AggregateScore>> {
        let mut out = Vec::new();
        for p in proposals {
            let reviews = tx.current_reviews(&p.id)?;
            if !reviews.is_empty() {
                out.push(aggregate(&p.id, &reviews, &call.criteria_template)?);
            }
        }
        Ok(out)
    }

    fn funded_so_far(tx: &Tx<'_>, call: &CallId) -> PlatformResult<Money> {
        let mut total = Money::ZERO;
        for p in tx.proposals_in_call(call)? {
            if let Some(d) = tx.decision(&p.proposal.id)? {
                if d.outcome == Outcome::Funded {
                    total = total + d.awarded_amount;
                }
            }
        }
        Ok(total)
    }

    fn decide_in(tx: &Tx<'_>, actor: &Principal, id: &ProposalId, input: DecisionInput, now: DateTime<Utc>) -> PlatformResult<Decision> {
        let loaded = load(tx, id)?;
        require(can(actor, Action::Decide, &loaded.target, loaded.state()))?;
        let p = loaded.proposal();
        let decision = Decision {
            proposal_id: id.clone(),
            outcome: input.outcome,
            awarded_amount: input.awarded_amount.unwrap_or(match input.outcome {
                Outcome::Funded => p.requested_total,
                Outcome::NotFunded => Money::ZERO,
            }),
            explanation: clean(&input.explanation),
            decided_by: actor_id(actor),
            decided_at: now,
        };
        let mut report = validate_decision(&decision, p);
        if decision.explanation.is_empty() {
            report.0.push(FieldIssue::new("explanation", IssueCode::EmptyComment, "decisions must be explained"));
        }
        let committed = Self::funded_so_far(tx, &loaded.call.id)?;
        if decision.outcome == Outcome::Funded && committed + decision.awarded_amount > loaded.call.total_budget {
            report.0.push(FieldIssue::new("awarded_amount", IssueCode::OverBudget, "award exceeds the call's remaining budget"));
        }
        check(report)?;
        fire(tx, actor, &loaded, EventKind::Decide, now)?;
        tx.insert_decision(&decision)?;
        Ok(decision)
    }

    pub fn decide(&self, actor: &Principal, id: &ProposalId, input: DecisionInput) -> PlatformResult<Decision> {
        let now = self.now();
        self.store.transaction(|tx| Self::decide_in(tx, actor, id, input.clone(), now))
    }

    /// Ranked, budget-constrained advice for the call's reviewed proposals.
    pub fn recommendation(&self, actor: &Principal, call_id: &CallId) -> PlatformResult<FundingRecommendation> {
        self.store.read(|tx| {
            let call = tx.require_call(call_id)?;
            require(Self::is_call_staff(actor, call_id) || actor.is_system())?;
            let proposals: Vec<Proposal> = tx
                .proposals_in_call(call_id)?
                .into_iter()
                .map(|s| s.proposal)
                .filter(|p| p.state.reviews_public())
                .collect();
            let aggs = Self::aggregates(tx, &call, &proposals)?;
            Ok(recommend(&call, &aggs, &proposals))
        })
    }

    /// Decides every proposal that is ready, following the recommendation over
    /// the budget not yet committed.
    pub fn decide_call(&self, actor: &Principal, call_id: &CallId) -> PlatformResult<Vec<Decision>> {
        let now = self.now();
        self.store.transaction(|tx| {
            let call = tx.require_call(call_id)?;
            require(Self::is_call_staff(actor, call_id))?;
            let ready: Vec<Proposal> = tx
                .proposals_in_call(call_id)?
                .into_iter()
                .map(|s| s.proposal)
                .filter(|p| allowed_for(p.state, call.discussion_enabled()).contains(&EventKind::Decide))
                .collect();
            let aggs = Self::aggregates(tx, &call, &ready)?;
            let remaining = FundingCall { total_budget: call.total_budget - Self::funded_so_far(tx, call_id)?, ..call.clone() };
            let rec = recommend(&remaining, &aggs, &ready);
            let n = rec.lines.len();
            let mut decisions = Vec::new();
            for (rank, line) in rec.lines.iter().enumerate() {
                let (outcome, why) = match line.recommend {
                    Recommend::Fund => (Outcome::Funded, "funded in rank order within the available budget"),
                    Recommend::NoFund => (Outcome::NotFunded, "the request did not fit the budget remaining at this rank"),
                };
                let explanation =
                    format!("Ranked {} of {n} with an overall score of {}; {why}.", rank + 1, line.overall.to_fixed4());
                let input = DecisionInput { outcome, awarded_amount: None, explanation };
                decisions.push(Self::decide_in(tx, actor, &line.proposal_id, input, now)?);
            }
            Ok(decisions)
        })
    }

    /// Publishes every decided proposal of the call. Refused while any live
    /// proposal is undecided.
    pub fn publish_call(&self, actor: &Principal, call_id: &CallId) -> PlatformResult<Vec<AuditEntry>> {
        let now = self.now();
        self.store.transaction(|tx| {
            tx.require_call(call_id)?;
            require(actor.has_role(Role::AgencyRep, call_id))?;
            let live: Vec<StoredProposal> =
                tx.proposals_in_call(call_id)?.into_iter().filter(|p| p.proposal.state.is_live_application()).collect();
            let pending: Vec<ProposalId> =
                live.iter().filter(|p| p.proposal.state != ProposalState::Decided).map(|p| p.proposal.id.clone()).collect();
            if !pending.is_empty() {
                return Err(PlatformError::DecisionsPending(pending));
            }
            let mut events = Vec::new();
            for p in &live {
                events.push(fire(tx, actor, &load(tx, &p.proposal.id)?, EventKind::Publish, now)?);
            }
            tx.mark_published(call_id, now)?;
            Ok(events)
        })
    }

    /// Fires every deadline-driven event due at `now` (the clock when `None`).
    /// A second sweep at the same instant fires nothing.
    pub fn sweep_deadlines(&self, call: Option<&CallId>, now: Option<DateTime<Utc>>) -> PlatformResult<Vec<AuditEntry>> {
        let now = now.unwrap_or_else(|| self.now());
        let system = Principal::system();
        self.store.transaction(|tx| {
            let calls = match call {
                Some(id) => vec![tx.require_call(id)?],
                None => tx.calls()?,
            };
            let mut fired = Vec::new();
            for c in calls {
                // A late sweep catches up on every deadline already passed.
                loop {
                    let proposals: Vec<Proposal> = tx.proposals_in_call(&c.id)?.into_iter().map(|s| s.proposal).collect();
                    let due = plan_sweep(&c, &proposals, now);
                    if due.is_empty() {
                        break;
                    }
                    for (id, event) in due {
                        fired.push(fire(tx, &system, &load(tx, &id)?, event.kind, event.timestamp)?);
                    }
                }
            }
            Ok(fired)
        })
    }

    // views

    fn review_views(tx: &Tx<'_>, loaded: &Loaded, viewer: &Principal, reviews: Vec<Review>) -> PlatformResult<RedactedView> {
        let stamps = loaded.stamps();
        let mut views = Vec::new();
        for r in reviews {
            let name = tx.user(&r.reviewer_id)?.map(|u| u.name);
            let mut view = redact_review(&r, &loaded.call, &loaded.target, &stamps, viewer, name.as_deref());
            let overall = crate::scoring::overall_score(&r, &loaded.call.criteria_template);
            view.set("overall_score", json!(overall.to_fixed4()));
            views.push(view);
        }
        Ok(list_view(views))
    }

    /// Comment authors who review the proposal appear under their pseudonym
    /// to viewers who may not see reviewer identities.
    fn comment_views(tx: &Tx<'_>, loaded: &Loaded, viewer: &Principal) -> PlatformResult<RedactedView> {
        let stamps = loaded.stamps();
        let mut views = Vec::new();
        for c in tx.comments_for(&loaded.proposal().id)? {
            let mut view = plain_view(&c);
            let reviewer_rank = pseudonym_rank(&stamps, &c.author_id);
            match reviewer_rank {
                Some(rank) if !may_see_identities(viewer, &loaded.target) && !viewer.is(&c.author_id) => {
                    view.suppress("author_id");
                    view.set("author_label", json!(pseudonym(rank)));
                }
                _ => {
                    let name = tx.user(&c.author_id)?.map(|u| u.name).unwrap_or_default();
                    view.set("author_label", json!(name));
                }
            }
            views.push(view);
        }
        Ok(list_view(views))
    }

    fn team_view(tx: &Tx<'_>, p: &Proposal) -> PlatformResult<RedactedView> {
        let mut members = Vec::new();
        for (id, role) in std::iter::once((&p.pi_id, "PI")).chain(p.co_investigator_ids.iter().map(|c| (c, "CO_I"))) {
            let u = tx.require_user(id)?;
            let inst = tx.institution(&u.institution_id)?.map(|i| i.name).unwrap_or_default();
            members.push(json!({ "user_id": u.id, "name": u.name, "role": role, "institution": inst, "orcid": u.orcid }));
        }
        Ok(plain_view(&members))
    }

    /// The tabbed proposal page: sections, team, budget, reviews, rebuttals,
    /// discussion thread and decision, each only as far as `viewer` may see.
    pub fn proposal_view(&self, viewer: &Principal, id: &ProposalId) -> PlatformResult<RedactedView> {
        self.store.read(|tx| {
            let loaded = load(tx, id)?;
            let state = loaded.state();
            require(can(viewer, Action::ReadProposal, &loaded.target, state))?;
            let p = loaded.proposal();

            let reviews = if can(viewer, Action::ReadReviews, &loaded.target, state) {
                tx.current_reviews(id)?
            } else {
                // Reviewers see their own review before the set is published.
                tx.current_reviews(id)?.into_iter().filter(|r| viewer.is(&r.reviewer_id)).collect()
            };
            let reviews = Self::review_views(tx, &loaded, viewer, reviews)?;
            let rebuttals = if state.reviews_public() || loaded.target.team.iter().any(|m| viewer.is(m)) {
                tx.rebuttals_for(id)?
            } else {
                Vec::new()
            };
            let privileged = Self::is_call_staff(viewer, &loaded.call.id) || loaded.target.team.iter().any(|m| viewer.is(m));
            let decision = match tx.decision(id)? {
                Some(d) if privileged || state == ProposalState::Published => redact_decision(&d, &loaded.target, viewer),
                _ => plain_view(&Value::Null),
            };
            let actions: Vec<Action> = Action::ALL.into_iter().filter(|&a| can(viewer, a, &loaded.target, state)).collect();
            let meta = json!({
                "state": state,
                "version": loaded.stored.version,
                "call_id": loaded.call.id,
                "call_title": loaded.call.title,
                "review_visibility": loaded.call.review_visibility,
                "budget_visible": may_see_budget(viewer, &loaded.target),
                "allowed_actions": actions,
                "reviews_expected": loaded.call.reviewers_per_proposal,
            });
            let mut view = combine_views(vec![
                ("proposal", redact_proposal(p, &loaded.target, viewer)),
                ("team", Self::team_view(tx, p)?),
                ("reviews", reviews),
                ("rebuttals", plain_view(&rebuttals)),
                ("comments", Self::comment_views(tx, &loaded, viewer)?),
                ("decision", decision),
                ("meta", plain_view(&meta)),
            ]);
            if Self::is_call_staff(viewer, &loaded.call.id) {
                view.set("assignments", serde_json::to_value(&loaded.assignments).unwrap_or_default());
            }
            Ok(view)
        })
    }

    pub fn audit_log(&self, viewer: &Principal, id: &ProposalId) -> PlatformResult<Vec<AuditEntry>> {
        self.store.read(|tx| {
            let loaded = load(tx, id)?;
            let team = loaded.target.team.iter().any(|m| viewer.is(m));
            require(team || Self::is_call_staff(viewer, &loaded.call.id) || viewer.is_system())?;
            Ok(tx.audit_for(id)?)
        })
    }

    /// Public results page of a published call: every decided proposal with
    /// its outcome, scores, explanation and reviews.
    pub fn results(&self, viewer: &Principal, call_id: &CallId) -> PlatformResult<CallResults> {
        self.store.read(|tx| {
            let call = tx.require_call(call_id)?;
            let published_at = tx.published_at(call_id)?.ok_or_else(|| PlatformError::NotPublished(call_id.clone()))?;
            let mut funded = Vec::new();
            let mut not_funded = Vec::new();
            let mut withdrawn = 0;
            for stored in tx.proposals_in_call(call_id)? {
                let p = &stored.proposal;
                match p.state {
                    ProposalState::Withdrawn => {
                        withdrawn += 1;
                        continue;
                    }
                    ProposalState::Published => {}
                    _ => continue,
                }
                let loaded = load(tx, &p.id)?;
                let Some(decision) = tx.decision(&p.id)? else { continue };
                let reviews = tx.current_reviews(&p.id)?;
                let agg = aggregate(&p.id, &reviews, &call.criteria_template).ok();
                let proposal_view = redact_proposal(p, &loaded.target, viewer);
                let decision_view = redact_decision(&decision, &loaded.target, viewer);
                let line = ResultLine {
                    proposal_id: p.id.clone(),
                    title: p.title.clone(),
                    pi_name: tx.require_user(&p.pi_id)?.name,
                    outcome: decision.outcome,
                    explanation: decision.explanation.clone(),
                    overall: agg.as_ref().map(|a| a.overall.to_fixed4()),
                    variance: agg.as_ref().map(|a| a.variance.to_fixed4()),
                    per_criterion_mean: agg
                        .as_ref()
                        .map(|a| a.per_criterion_mean.iter().map(|(k, v)| (k.clone(), v.to_fixed4())).collect())
                        .unwrap_or_default(),
                    n_reviews: reviews.len(),
                    requested_total: proposal_view.record["requested_total"].clone(),
                    awarded_amount: decision_view.record["awarded_amount"].clone(),
                    reviews: Self::review_views(tx, &loaded, viewer, reviews)?.record,
                };
                let rank = (agg.map(|a| a.overall), p.submitted_at);
                match decision.outcome {
                    Outcome::Funded => funded.push((rank, line)),
                    Outcome::NotFunded => not_funded.push((rank, line)),
                }
            }
            // Same order as the recommendation; unscored proposals go last.
            let in_rank_order = |mut lines: Vec<((Option<Exact>, Option<DateTime<Utc>>), ResultLine)>| {
                lines.sort_by(|((sa, ta), a), ((sb, tb), b)| match (sa, sb) {
                    (Some(x), Some(y)) => rank_order((x, *ta, &a.proposal_id), (y, *tb, &b.proposal_id)),
                    (Some(_), None) => std::cmp::Ordering::Less,
                    (None, Some(_)) => std::cmp::Ordering::Greater,
                    (None, None) => a.proposal_id.cmp(&b.proposal_id),
                });
                lines.into_iter().map(|(_, l)| l).collect::<Vec<_>>()
            };
            let funded = in_rank_order(funded);
            let not_funded = in_rank_order(not_funded);
            let mut results = CallResults {
                call_id: call_id.clone(),
                title: call.title.clone(),
                agency_name: call.agency_name.clone(),
                published_at,
                funded,
                not_funded,
                withdrawn,
                suppressed: Vec::new(),
            };
            let value = serde_json::to_value(&results).unwrap_or_default();
            results.suppressed = crate::access::marker_paths(&value);
            Ok(results)
        })
    }

    /// Current proposals, pending reviews, upcoming deadlines and the four stat tiles.
    pub fn dashboard(&self, viewer: &Principal) -> PlatformResult<Dashboard> {
        let user = viewer.user_id.clone().ok_or(PlatformError::Unauthenticated)?;
        let now = self.now();
        self.store.read(|tx| {
            let mut proposals = Vec::new();
            for s in tx.proposals_of(&user)? {
                let p = s.proposal;
                proposals.push(json!({ "id": p.id, "title": p.title, "call_id": p.call_id, "state": p.state, "version": s.version }));
            }
            let mut pending_reviews = Vec::new();
            for a in tx.assignments_of(&user)? {
                let p = tx.require_proposal(&a.proposal_id)?.proposal;
                let done = tx.review_versions(&p.id)?.iter().any(|r| r.reviewer_id == user);
                if p.state == ProposalState::ReviewersAssigned && !done {
                    let call = tx.require_call(&p.call_id)?;
                    pending_reviews.push(json!({
                        "proposal_id": p.id,
                        "title": p.title,
                        "call_id": p.call_id,
                        "review_deadline": call.schedule.review_deadline,
                    }));
                }
            }
            let mut upcoming_deadlines = Vec::new();
            for c in tx.calls()? {
                let s = &c.schedule;
                let points = [
                    ("submission", Some(s.submission_deadline)),
                    ("review", Some(s.review_deadline)),
                    ("rebuttal", Some(s.rebuttal_deadline)),
                    ("discussion", s.discussion_deadline),
                    ("decision", Some(s.decision_deadline)),
                    ("publication", Some(s.publication_date)),
                ];
                for (kind, at) in points {
                    if let Some(at) = at.filter(|t| *t > now) {
                        upcoming_deadlines.push(DeadlineItem { call_id: c.id.clone(), call_title: c.title.clone(), kind: kind.to_owned(), at });
                    }
                }
            }
            upcoming_deadlines.sort_by(|a, b| (a.at, &a.call_id).cmp(&(b.at, &b.call_id)));
            upcoming_deadlines.truncate(10);
            let snap = PublishedSnapshot::load(tx)?;
            let decided = snap.decisions.len();
            let acceptance_rate = (decided > 0)
                .then(|| snap.decisions.values().filter(|d| d.outcome == Outcome::Funded).count() as f64 / decided as f64);
            let roles = tx.roles_of(&user)?.iter().map(Grant::from).collect();
            Ok(Dashboard {
                user_id: user.clone(),
                roles,
                stats: DashboardStats {
                    proposals: proposals.len(),
                    reviews_pending: pending_reviews.len(),
                    deadlines: upcoming_deadlines.len(),
                    acceptance_rate,
                },
                proposals,
                pending_reviews,
                upcoming_deadlines,
            })
        })
    }

    /// Full record of one call. Staff only.
    pub fn export_call(&self, actor: &Principal, call_id: &CallId) -> PlatformResult<CallExport> {
        let recommendation = self.recommendation(actor, call_id)?;
        self.store.read(|tx| {
            let call = tx.require_call(call_id)?;
            let proposals: Vec<Proposal> = tx.proposals_in_call(call_id)?.into_iter().map(|s| s.proposal).collect();
            let mut export = CallExport {
                call,
                published_at: tx.published_at(call_id)?,
                proposals: Vec::new(),
                assignments: tx.assignments_in_call(call_id)?,
                reviews: Vec::new(),
                rebuttals: Vec::new(),
                comments: Vec::new(),
                decisions: Vec::new(),
                audit_log: Vec::new(),
                recommendation_csv: Some(recommendation.to_csv()),
            };
            for p in &proposals {
                export.reviews.extend(tx.review_versions(&p.id)?);
                export.rebuttals.extend(tx.rebuttals_for(&p.id)?);
                export.comments.extend(tx.comments_for(&p.id)?);
                export.decisions.extend(tx.decision(&p.id)?);
                export.audit_log.extend(tx.audit_for(&p.id)?);
            }
            export.proposals = proposals;
            Ok(export)
        })
    }

    // analytics

    pub fn snapshot(&self) -> PlatformResult<PublishedSnapshot> {
        Ok(self.store.read(|tx| PublishedSnapshot::load(tx))?)
    }

    pub fn acceptance_by(&self, dimension: Dimension) -> PlatformResult<StatReport> {
        Ok(analytics::acceptance_by(&self.snapshot()?, dimension)?)
    }

    pub fn reviewer_expertise_effect(&self) -> PlatformResult<ExpertiseEffect> {
        Ok(analytics::reviewer_expertise_effect(&self.snapshot()?)?)
    }

    pub fn rebuttal_effect(&self, call: &CallId) -> PlatformResult<RebuttalEffect> {
        Ok(analytics::rebuttal_effect(&self.snapshot()?, call)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{call, proposal, ts};
    use crate::model::InstitutionId;
    use chrono::Duration;

    struct World {
        platform: Platform,
        admin: Principal,
        users: BTreeMap<&'static str, UserId>,
    }

    impl World {
        fn as_user(&self, name: &str) -> Principal {
            self.platform.principal(&self.users[name]).unwrap()
        }

        fn at(&self, t: DateTime<Utc>) {
            self.platform.clock().set(t);
        }
    }

    fn world() -> World {
        let store = Arc::new(Store::in_memory_migrated().unwrap());
        let platform = Platform::new(store, TokenIssuer::new(b"k".to_vec(), Duration::hours(1)), Clock::frozen(ts(2026, 2, 1)))
            .unwrap()
            .with_password_policy(PasswordPolicy::fast());
        let admin = Principal::system();
        for (id, name) in [("inst-a", "Alpha"), ("inst-b", "Beta"), ("inst-c", "Gamma")] {
            platform
                .create_institution(&admin, Institution { id: InstitutionId::from(id), name: name.into(), country: "NL".into() })
                .unwrap();
        }
        let mut users = BTreeMap::new();
        for (name, inst) in
            [("pi", "inst-a"), ("coi", "inst-a"), ("rep", "inst-c"), ("r1", "inst-b"), ("r2", "inst-c"), ("r3", "inst-a"), ("fan", "inst-b")]
        {
            let u = platform
                .register_user(Registration {
                    name: format!("User {name}"),
                    email: format!("{name}@example.org"),
                    password: "correct horse".into(),
                    institution_id: InstitutionId::from(inst),
                    research_areas: vec!["machine-learning".into()],
                    keywords: vec!["peer review".into()],
                    orcid: None,
                })
                .unwrap();
            users.insert(name, u.id);
        }
        platform.grant_role(&admin, RoleAssignment { user_id: users["rep"].clone(), role: Role::AgencyRep, scope: None }).unwrap();
        for r in ["r1", "r2", "r3"] {
            platform.grant_role(&admin, RoleAssignment { user_id: users[r].clone(), role: Role::Reviewer, scope: None }).unwrap();
        }
        World { platform, admin, users }
    }

    fn draft(w: &World) -> ProposalDraft {
        let p = proposal();
        ProposalDraft {
            call_id: p.call_id,
            title: p.title,
            abstract_text: p.abstract_text,
            research_goals: p.research_goals,
            methods: p.methods,
            co_investigator_ids: vec![w.users["coi"].clone()],
            research_areas: p.research_areas.into_iter().collect(),
            keywords: p.keywords.into_iter().collect(),
            timeline: p.timeline,
            budget_items: p.budget_items,
            requested_total: None,
        }
    }

    fn review(merit: i32, feasibility: i32) -> ReviewInput {
        ReviewInput {
            criterion_scores: BTreeMap::from([("merit".to_owned(), merit), ("feasibility".to_owned(), feasibility)]),
            criterion_comments: BTreeMap::new(),
            overall_comment: "Solid plan.".into(),
        }
    }

    /// A call with one submitted proposal; returns its id.
    fn submitted(w: &World) -> ProposalId {
        w.platform.create_call(&w.as_user("rep"), call(), None).unwrap();
        let id = w.platform.create_proposal(&w.as_user("pi"), draft(w)).unwrap().proposal.id;
        w.platform.submit_proposal(&w.as_user("pi"), &id).unwrap();
        id
    }

    fn state(w: &World, id: &ProposalId) -> ProposalState {
        w.platform.store().read(|tx| tx.require_proposal(id)).unwrap().proposal.state
    }

    #[test]
    fn registration_rejects_bad_input() {
        let w = world();
        let err = w
            .platform
            .register_user(Registration {
                name: " ".into(),
                email: "nope".into(),
                password: "short".into(),
                institution_id: InstitutionId::from("inst-a"),
                research_areas: vec!["alchemy".into()],
                keywords: vec![],
                orcid: None,
            })
            .unwrap_err();
        let codes: BTreeSet<IssueCode> = err.field_issues().iter().map(|i| i.code).collect();
        assert_eq!(
            codes,
            BTreeSet::from([IssueCode::EmptyName, IssueCode::InvalidEmail, IssueCode::WeakPassword, IssueCode::UnknownResearchArea])
        );
        let dup = Registration {
            name: "Again".into(),
            email: "PI@Example.org".into(),
            password: "long enough".into(),
            institution_id: InstitutionId::from("inst-a"),
            research_areas: vec![],
            keywords: vec![],
            orcid: None,
        };
        assert_eq!(w.platform.register_user(dup.clone()).unwrap_err().code(), "DUPLICATE_EMAIL");
        let bad_orcid = Registration { email: "x@example.org".into(), orcid: Some("0000-0002-1825-0098".into()), ..dup };
        assert_eq!(w.platform.register_user(bad_orcid).unwrap_err().code(), "INVALID_ORCID");
    }

    #[test]
    fn login_issues_token_that_authenticates() {
        let w = world();
        let token = w.platform.login("pi@example.org", "correct horse").unwrap();
        let who = w.platform.authenticate(&token.token).unwrap();
        assert!(who.is(&w.users["pi"]));
        assert_eq!(w.platform.login("pi@example.org", "wrong horse").unwrap_err().code(), "INVALID_CREDENTIALS");
        w.platform.clock().advance(Duration::hours(2));
        assert_eq!(w.platform.authenticate(&token.token).unwrap_err().code(), "EXPIRED");
    }

    #[test]
    fn only_team_may_submit_and_only_drafts_edit() {
        let w = world();
        w.platform.create_call(&w.as_user("rep"), call(), None).unwrap();
        let id = w.platform.create_proposal(&w.as_user("pi"), draft(&w)).unwrap().proposal.id;
        assert_eq!(w.platform.submit_proposal(&w.as_user("fan"), &id).unwrap_err().code(), "UNAUTHORIZED_ACTOR");
        w.platform.submit_proposal(&w.as_user("coi"), &id).unwrap();
        let err = w.platform.update_proposal(&w.as_user("pi"), &id, draft(&w), None).unwrap_err();
        assert_eq!(err.code(), "NOT_EDITABLE");
        assert_eq!(w.platform.submit_proposal(&w.as_user("pi"), &id).unwrap_err().code(), "ILLEGAL_TRANSITION");
    }

    #[test]
    fn stale_version_conflicts() {
        let w = world();
        w.platform.create_call(&w.as_user("rep"), call(), None).unwrap();
        let s = w.platform.create_proposal(&w.as_user("pi"), draft(&w)).unwrap();
        let pi = w.as_user("pi");
        w.platform.update_proposal(&pi, &s.proposal.id, draft(&w), Some(s.version)).unwrap();
        let err = w.platform.update_proposal(&pi, &s.proposal.id, draft(&w), Some(s.version)).unwrap_err();
        assert_eq!(err.code(), "CONFLICT");
    }

    #[test]
    fn late_submission_is_rejected() {
        let w = world();
        w.platform.create_call(&w.as_user("rep"), call(), None).unwrap();
        let id = w.platform.create_proposal(&w.as_user("pi"), draft(&w)).unwrap().proposal.id;
        w.at(ts(2026, 3, 1) + Duration::seconds(1));
        assert_eq!(w.platform.submit_proposal(&w.as_user("pi"), &id).unwrap_err().code(), "DEADLINE_PASSED");
        assert_eq!(state(&w, &id), ProposalState::Draft);
    }

    #[test]
    fn assignment_waits_for_submission_deadline_and_avoids_conflicts() {
        let w = world();
        let id = submitted(&w);
        let rep = w.as_user("rep");
        assert_eq!(w.platform.assign_call(&rep, &CallId::from("call-1")).unwrap_err().code(), "DEADLINE_NOT_REACHED");
        w.at(ts(2026, 3, 1));
        assert_eq!(w.platform.assign_call(&w.as_user("pi"), &CallId::from("call-1")).unwrap_err().code(), "UNAUTHORIZED_ACTOR");
        let run = w.platform.assign_call(&rep, &CallId::from("call-1")).unwrap();
        let reviewers: BTreeSet<&UserId> = run.assignments.iter().map(|a| &a.reviewer_id).collect();
        // r3 shares the PI's institution.
        assert_eq!(reviewers, BTreeSet::from([&w.users["r1"], &w.users["r2"]]));
        assert_eq!(state(&w, &id), ProposalState::ReviewersAssigned);
        assert!(w.platform.assign_call(&rep, &CallId::from("call-1")).unwrap().assignments.is_empty());
    }

    #[test]
    fn full_cycle_to_public_results() {
        let w = world();
        let id = submitted(&w);
        let call_id = CallId::from("call-1");
        let rep = w.as_user("rep");
        w.at(ts(2026, 3, 1));
        w.platform.assign_call(&rep, &call_id).unwrap();

        let first = w.platform.submit_review(&w.as_user("r1"), &id, review(8, 6)).unwrap();
        assert!(first.published.is_none());
        assert_eq!(w.platform.submit_review(&w.as_user("r1"), &id, review(8, 6)).unwrap_err().code(), "DUPLICATE");
        assert_eq!(w.platform.submit_review(&w.as_user("r3"), &id, review(1, 1)).unwrap_err().code(), "UNAUTHORIZED_ACTOR");

        // Before publication the PI sees no review and r2 sees none of r1's.
        let pi_view = w.platform.proposal_view(&w.as_user("pi"), &id).unwrap();
        assert_eq!(pi_view.record["reviews"], json!([]));
        let r2_view = w.platform.proposal_view(&w.as_user("r2"), &id).unwrap();
        assert_eq!(r2_view.record["reviews"], json!([]));

        let second = w.platform.submit_review(&w.as_user("r2"), &id, review(6, 6)).unwrap();
        assert_eq!(second.published.unwrap().resulting_state, ProposalState::ReviewsPublished);

        let fan_view = w.platform.proposal_view(&w.as_user("fan"), &id).unwrap();
        let text = fan_view.record.to_string();
        assert!(text.contains("Reviewer #1") && text.contains("Reviewer #2"));
        assert!(!text.contains(w.users["r1"].as_str()) && !text.contains("User r1"));
        assert_eq!(fan_view.record["proposal"]["requested_total"], json!("[redacted]"));

        let fired = w.platform.sweep_deadlines(None, Some(ts(2026, 3, 15))).unwrap();
        assert_eq!(fired.len(), 1);
        assert!(w.platform.sweep_deadlines(None, Some(ts(2026, 3, 15))).unwrap().is_empty());
        w.at(ts(2026, 3, 16));
        w.platform.submit_rebuttal(&w.as_user("coi"), &id, "We address feasibility.", None).unwrap();
        assert_eq!(
            w.platform.submit_rebuttal(&w.as_user("fan"), &id, "Not mine", None).unwrap_err().code(),
            "UNAUTHORIZED_ACTOR"
        );
        let reviews = w.platform.store().read(|tx| tx.current_reviews(&id)).unwrap();
        let r1_review = reviews.into_iter().find(|r| r.reviewer_id == w.users["r1"]).unwrap();
        let revised = w.platform.revise_review(&w.as_user("r1"), &r1_review.id, review(8, 8)).unwrap();
        assert_eq!(revised.version, 2);

        w.platform.sweep_deadlines(Some(&call_id), Some(ts(2026, 3, 22))).unwrap();
        assert_eq!(state(&w, &id), ProposalState::CommunityDiscussion);
        w.at(ts(2026, 3, 23));
        w.platform.post_comment(&w.as_user("fan"), &id, "Looks promising").unwrap();
        w.platform.clock().advance(Duration::minutes(1));
        w.platform.post_comment(&w.as_user("r2"), &id, "Agreed after rebuttal").unwrap();
        let fan_view = w.platform.proposal_view(&w.as_user("fan"), &id).unwrap();
        assert!(!fan_view.record["comments"].to_string().contains(w.users["r2"].as_str()));
        let order = w.platform.store().read(|tx| tx.assignments_for(&id)).unwrap();
        let rank = order.iter().position(|a| a.reviewer_id == w.users["r2"]).unwrap() + 1;
        assert_eq!(fan_view.record["comments"][1]["author_label"], json!(format!("Reviewer #{rank}")));
        assert_eq!(
            w.platform.decide(&rep, &id, DecisionInput { outcome: Outcome::Funded, awarded_amount: None, explanation: "x".into() })
                .unwrap_err()
                .code(),
            "DEADLINE_NOT_REACHED"
        );

        w.platform.sweep_deadlines(None, Some(ts(2026, 3, 29))).unwrap();
        assert_eq!(state(&w, &id), ProposalState::CommunityDiscussion);
        w.at(ts(2026, 4, 1));
        assert_eq!(w.platform.publish_call(&rep, &call_id).unwrap_err().code(), "DECISIONS_PENDING");
        let decisions = w.platform.decide_call(&rep, &call_id).unwrap();
        assert_eq!(decisions.len(), 1);
        assert_eq!(decisions[0].outcome, Outcome::Funded);
        assert_eq!(decisions[0].awarded_amount, Money(90_000));
        assert!(!decisions[0].explanation.contains("90"));

        assert_eq!(w.platform.results(&Principal::anonymous(), &call_id).unwrap_err().code(), "NOT_PUBLISHED");
        assert_eq!(w.platform.publish_call(&rep, &call_id).unwrap_err().code(), "DEADLINE_NOT_REACHED");
        w.at(ts(2026, 4, 10));
        w.platform.publish_call(&rep, &call_id).unwrap();
        assert_eq!(state(&w, &id), ProposalState::Published);

        let results = w.platform.results(&Principal::anonymous(), &call_id).unwrap();
        assert_eq!(results.funded.len(), 1);
        // (8+8)/2 and (6+6)/2 after the revision.
        assert_eq!(results.funded[0].overall.as_deref(), Some("7.0000"));
        assert_eq!(results.funded[0].awarded_amount, json!("[redacted]"));
        assert!(results.suppressed.iter().any(|p| p.ends_with("awarded_amount")));
        let staff = w.platform.results(&rep, &call_id).unwrap();
        assert_eq!(staff.funded[0].awarded_amount, json!(90_000));

        let audit = w.platform.audit_log(&w.as_user("pi"), &id).unwrap();
        let states: Vec<ProposalState> = audit.iter().map(|e| e.resulting_state).collect();
        assert_eq!(states.first(), Some(&ProposalState::Submitted));
        assert_eq!(states.last(), Some(&ProposalState::Published));
        assert_eq!(w.platform.audit_log(&w.as_user("fan"), &id).unwrap_err().code(), "UNAUTHORIZED_ACTOR");

        let dash = w.platform.dashboard(&w.as_user("pi")).unwrap();
        assert_eq!(dash.stats.proposals, 1);
        assert_eq!(dash.stats.acceptance_rate, Some(1.0));
        let export = w.platform.export_call(&rep, &call_id).unwrap();
        assert_eq!(export.reviews.len(), 3);
        assert_eq!(w.platform.export_call(&w.as_user("fan"), &call_id).unwrap_err().code(), "UNAUTHORIZED_ACTOR");
    }

    #[test]
    fn decisions_respect_cumulative_budget() {
        let w = world();
        let first = submitted(&w);
        let pi = w.as_user("pi");
        let second = w.platform.create_proposal(&pi, draft(&w)).unwrap().proposal.id;
        w.platform.submit_proposal(&pi, &second).unwrap();
        let rep = w.as_user("rep");
        w.at(ts(2026, 3, 1));
        w.platform.assign_call(&rep, &CallId::from("call-1")).unwrap();
        for id in [&first, &second] {
            w.platform.submit_review(&w.as_user("r1"), id, review(7, 7)).unwrap();
            w.platform.submit_review(&w.as_user("r2"), id, review(7, 7)).unwrap();
        }
        w.platform.sweep_deadlines(None, Some(ts(2026, 3, 29))).unwrap();
        w.at(ts(2026, 4, 1));
        let fund = |()| DecisionInput { outcome: Outcome::Funded, awarded_amount: None, explanation: "Strong".into() };
        w.platform.decide(&rep, &first, fund(())).unwrap();
        let err = w.platform.decide(&rep, &second, fund(())).unwrap_err();
        assert!(err.field_issues().iter().any(|i| i.code == IssueCode::OverBudget), "{err:?}");
        assert_eq!(state(&w, &second), ProposalState::CommunityDiscussion);
        let no = DecisionInput { outcome: Outcome::NotFunded, awarded_amount: None, explanation: "Budget exhausted".into() };
        assert_eq!(w.platform.decide(&rep, &second, no).unwrap().awarded_amount, Money::ZERO);
    }

    #[test]
    fn withdrawn_proposals_are_skipped_by_publication() {
        let w = world();
        let id = submitted(&w);
        w.platform.withdraw(&w.as_user("pi"), &id).unwrap();
        w.at(ts(2026, 4, 10));
        assert!(w.platform.publish_call(&w.as_user("rep"), &CallId::from("call-1")).unwrap().is_empty());
        assert_eq!(w.platform.results(&Principal::anonymous(), &CallId::from("call-1")).unwrap().withdrawn, 1);
        let _ = &w.admin;
    }
}
