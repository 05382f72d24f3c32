//! Deny-by-default permissions, budget redaction and reviewer anonymization.

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::model::{CallId, Decision, FundingCall, Proposal, Review, ReviewVisibility, Role, RoleAssignment, UserId};
use crate::workflow::{EventKind, ProposalState};

/// Placeholder written in place of every suppressed value.
pub const REDACTED: &str = "[redacted]";

/// Proposal fields that carry budget information.
pub const BUDGET_FIELDS: [&str; 2] = ["budget_items", "requested_total"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Action {
    ReadProposal,
    ReadBudget,
    SubmitProposal,
    SubmitReview,
    SubmitRebuttal,
    PostComment,
    Decide,
    AssignReviewers,
    ReadReviews,
    Publish,
}

impl Action {
    pub const ALL: [Action; 10] = [
        Action::ReadProposal,
        Action::ReadBudget,
        Action::SubmitProposal,
        Action::SubmitReview,
        Action::SubmitRebuttal,
        Action::PostComment,
        Action::Decide,
        Action::AssignReviewers,
        Action::ReadReviews,
        Action::Publish,
    ];
}

/// A role without its holder, as carried by a principal or a token.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Grant {
    pub role: Role,
    pub scope: Option<CallId>,
}

impl Grant {
    pub fn global(role: Role) -> Self {
        Self { role, scope: None }
    }

    pub fn for_call(role: Role, call: CallId) -> Self {
        Self { role, scope: Some(call) }
    }

    fn covers(&self, role: Role, call: &CallId) -> bool {
        self.role == role && self.scope.as_ref().is_none_or(|s| s == call)
    }
}

impl From<&RoleAssignment> for Grant {
    fn from(r: &RoleAssignment) -> Self {
        Grant { role: r.role, scope: r.scope.clone() }
    }
}

/// Whoever is making a request.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Principal {
    pub user_id: Option<UserId>,
    pub grants: BTreeSet<Grant>,
    system: bool,
}

impl Principal {
    pub fn anonymous() -> Self {
        Self::default()
    }

    /// The deadline scheduler.
    pub fn system() -> Self {
        Self { system: true, ..Self::default() }
    }

    pub fn user(user_id: UserId, grants: impl IntoIterator<Item = Grant>) -> Self {
        Self { user_id: Some(user_id), grants: grants.into_iter().collect(), system: false }
    }

    pub fn with_grant(mut self, grant: Grant) -> Self {
        self.grants.insert(grant);
        self
    }

    pub fn is_system(&self) -> bool {
        self.system
    }

    pub fn is_authenticated(&self) -> bool {
        self.user_id.is_some()
    }

    pub fn is(&self, user: &UserId) -> bool {
        self.user_id.as_ref() == Some(user)
    }

    pub fn has_role(&self, role: Role, call: &CallId) -> bool {
        self.grants.iter().any(|g| g.covers(role, call))
    }

    pub fn is_admin(&self) -> bool {
        self.grants.iter().any(|g| g.role == Role::Admin)
    }
}

/// What the permission matrix needs to know about a proposal and its call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProposalAccess {
    pub call_id: CallId,
    pub team: BTreeSet<UserId>,
    pub assigned_reviewers: BTreeSet<UserId>,
    pub budget_public: bool,
    pub discussion_enabled: bool,
    pub review_visibility: ReviewVisibility,
}

impl ProposalAccess {
    pub fn new<'a>(proposal: &Proposal, call: &FundingCall, assigned: impl IntoIterator<Item = &'a UserId>) -> Self {
        Self {
            call_id: call.id.clone(),
            team: proposal.team().cloned().collect(),
            assigned_reviewers: assigned.into_iter().cloned().collect(),
            budget_public: call.budget_public,
            discussion_enabled: call.discussion_enabled(),
            review_visibility: call.review_visibility,
        }
    }
}

struct Relation {
    owner: bool,
    rep: bool,
    admin: bool,
    assigned: bool,
    authenticated: bool,
}

fn relation(actor: &Principal, target: &ProposalAccess) -> Relation {
    let owner = actor.user_id.as_ref().is_some_and(|u| target.team.contains(u));
    let assigned = actor.user_id.as_ref().is_some_and(|u| target.assigned_reviewers.contains(u))
        && actor.has_role(Role::Reviewer, &target.call_id);
    Relation {
        owner,
        rep: actor.has_role(Role::AgencyRep, &target.call_id),
        admin: actor.is_admin(),
        assigned,
        authenticated: actor.is_authenticated(),
    }
}

/// The permission matrix. Anything not granted here is denied.
pub fn can(actor: &Principal, action: Action, target: &ProposalAccess, state: ProposalState) -> bool {
    use ProposalState as S;
    let r = relation(actor, target);
    match action {
        Action::ReadProposal => {
            r.owner
                || r.admin
                || (r.rep && state != S::Draft)
                || (r.assigned && state >= S::ReviewersAssigned)
                || state.reviews_public()
        }
        Action::ReadBudget => {
            can(actor, Action::ReadProposal, target, state) && (r.owner || r.rep || r.admin || target.budget_public)
        }
        Action::SubmitProposal => r.owner && state == S::Draft,
        Action::SubmitReview => r.assigned && !r.owner && state == S::ReviewersAssigned,
        Action::SubmitRebuttal => r.owner && state == S::RebuttalOpen,
        Action::PostComment => r.authenticated && state == S::CommunityDiscussion,
        Action::Decide => {
            r.rep
                && (state == S::CommunityDiscussion || (state == S::RebuttalOpen && !target.discussion_enabled))
        }
        Action::AssignReviewers => (r.rep || r.admin) && state == S::Submitted,
        Action::ReadReviews => {
            r.admin || (r.rep && state >= S::ReviewersAssigned) || state.reviews_public()
        }
        Action::Publish => r.rep && state == S::Decided,
    }
}

/// Whether `actor` may fire `kind` on the proposal. Legality and deadlines are
/// the workflow's business, not this check's.
pub fn can_fire(actor: &Principal, kind: EventKind, target: &ProposalAccess, state: ProposalState) -> bool {
    let r = relation(actor, target);
    match kind {
        EventKind::Submit => can(actor, Action::SubmitProposal, target, state),
        EventKind::AssignComplete => can(actor, Action::AssignReviewers, target, state),
        EventKind::AllReviewsIn => actor.is_system() || r.assigned || r.rep || r.admin,
        EventKind::RebuttalClosed | EventKind::DiscussionClosed => actor.is_system() || r.rep || r.admin,
        EventKind::Decide => can(actor, Action::Decide, target, state),
        EventKind::Publish => can(actor, Action::Publish, target, state),
        EventKind::Withdraw => r.owner || r.admin,
    }
}

/// Reviews are revised (new version) only by their author, and only once the
/// PI has had the chance to respond.
pub fn may_revise_review(actor: &Principal, author: &UserId, state: ProposalState) -> bool {
    actor.is(author) && matches!(state, ProposalState::RebuttalOpen | ProposalState::CommunityDiscussion)
}

/// Owner, the call's agency representative, admins, or anyone when the call publishes budgets.
pub fn may_see_budget(viewer: &Principal, target: &ProposalAccess) -> bool {
    let r = relation(viewer, target);
    target.budget_public || r.owner || r.rep || r.admin
}

fn may_see_reviewer(viewer: &Principal, target: &ProposalAccess, reviewer: &UserId) -> bool {
    target.review_visibility == ReviewVisibility::Signed
        || viewer.is_admin()
        || viewer.has_role(Role::AgencyRep, &target.call_id)
        || viewer.is(reviewer)
}

/// A record as one viewer is allowed to see it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedactedView {
    pub record: Value,
    pub suppressed: Vec<String>,
}

impl RedactedView {
    fn new(record: Value) -> Self {
        Self { record, suppressed: Vec::new() }
    }

    pub fn suppress(&mut self, field: &str) {
        if let Some(obj) = self.record.as_object_mut() {
            if obj.contains_key(field) {
                obj.insert(field.to_owned(), Value::String(REDACTED.to_owned()));
                self.suppressed.push(field.to_owned());
            }
        }
    }

    pub fn set(&mut self, field: &str, value: Value) {
        if let Some(obj) = self.record.as_object_mut() {
            obj.insert(field.to_owned(), value);
        }
    }

    pub fn is_suppressed(&self, field: &str) -> bool {
        self.suppressed.iter().any(|f| f == field)
    }
}

/// Paths (dot separated, `[i]` for array items) of every redaction marker in `value`.
pub fn marker_paths(value: &Value) -> Vec<String> {
    fn walk(v: &Value, path: String, out: &mut Vec<String>) {
        match v {
            Value::String(s) if s == REDACTED => out.push(path),
            Value::Array(items) => {
                for (i, item) in items.iter().enumerate() {
                    walk(item, format!("{path}[{i}]"), out);
                }
            }
            Value::Object(map) => {
                for (k, item) in map {
                    let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                    walk(item, p, out);
                }
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    walk(value, String::new(), &mut out);
    out
}

fn to_value<T: Serialize>(record: &T) -> Value {
    serde_json::to_value(record).expect("domain records always serialize")
}

/// Proposal as `viewer` may see it: budget fields suppressed unless permitted.
pub fn redact_proposal(proposal: &Proposal, target: &ProposalAccess, viewer: &Principal) -> RedactedView {
    let mut view = RedactedView::new(to_value(proposal));
    if !may_see_budget(viewer, target) {
        for field in BUDGET_FIELDS {
            view.suppress(field);
        }
    }
    view
}

/// Decision as `viewer` may see it: the award is a budget figure.
pub fn redact_decision(decision: &Decision, target: &ProposalAccess, viewer: &Principal) -> RedactedView {
    let mut view = RedactedView::new(to_value(decision));
    if !may_see_budget(viewer, target) {
        view.suppress("awarded_amount");
    }
    view
}

/// When a reviewer was put on a proposal; `seq` orders assignments made in the same instant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentStamp {
    pub reviewer_id: UserId,
    pub assigned_at: DateTime<Utc>,
    pub seq: u32,
}

/// 1-based rank of `reviewer` among a proposal's assignments, by (time, seq, reviewer id).
pub fn pseudonym_rank(assignments: &[AssignmentStamp], reviewer: &UserId) -> Option<usize> {
    let mut ordered: Vec<&AssignmentStamp> = assignments.iter().collect();
    ordered.sort_by(|a, b| (a.assigned_at, a.seq, &a.reviewer_id).cmp(&(b.assigned_at, b.seq, &b.reviewer_id)));
    ordered.iter().position(|a| &a.reviewer_id == reviewer).map(|i| i + 1)
}

pub fn pseudonym(rank: usize) -> String {
    format!("Reviewer #{rank}")
}

/// Replaces the reviewer's identity with a per-proposal pseudonym when the
/// call anonymizes reviews. Signed calls pass the review through.
pub fn anonymize_review(review: &Review, call: &FundingCall, assignments: &[AssignmentStamp]) -> RedactedView {
    let mut view = RedactedView::new(to_value(review));
    match call.review_visibility {
        ReviewVisibility::Signed => view.set("reviewer_label", Value::String(review.reviewer_id.to_string())),
        ReviewVisibility::Anonymized => {
            let label = pseudonym_rank(assignments, &review.reviewer_id)
                .map(pseudonym)
                .unwrap_or_else(|| "Reviewer".to_owned());
            view.suppress("reviewer_id");
            view.set("reviewer_label", Value::String(label));
        }
    }
    view
}

/// Review as `viewer` may see it. Privileged viewers (the call's agency
/// representative, admins, the reviewer) always see the identity, and
/// `reviewer_name` is attached only when the identity is visible.
pub fn redact_review(
    review: &Review,
    call: &FundingCall,
    target: &ProposalAccess,
    assignments: &[AssignmentStamp],
    viewer: &Principal,
    reviewer_name: Option<&str>,
) -> RedactedView {
    if may_see_reviewer(viewer, target, &review.reviewer_id) {
        let mut view = RedactedView::new(to_value(review));
        let label = reviewer_name.map(str::to_owned).unwrap_or_else(|| review.reviewer_id.to_string());
        view.set("reviewer_label", Value::String(label));
        if let Some(name) = reviewer_name {
            view.set("reviewer_name", json!(name));
        }
        view
    } else {
        anonymize_review(review, call, assignments)
    }
}

/// Merges several views into one JSON object, prefixing suppressed paths with their key.
pub fn combine_views(parts: Vec<(&str, RedactedView)>) -> RedactedView {
    let mut record = Map::new();
    let mut suppressed = Vec::new();
    for (key, view) in parts {
        suppressed.extend(view.suppressed.iter().map(|f| join_path(key, f)));
        record.insert(key.to_owned(), view.record);
    }
    RedactedView { record: Value::Object(record), suppressed }
}

/// Collects views into a JSON array, indexing suppressed paths by position.
pub fn list_view(items: impl IntoIterator<Item = RedactedView>) -> RedactedView {
    let mut records = Vec::new();
    let mut suppressed = Vec::new();
    for (i, view) in items.into_iter().enumerate() {
        suppressed.extend(view.suppressed.iter().map(|f| join_path(&format!("[{i}]"), f)));
        records.push(view.record);
    }
    RedactedView { record: Value::Array(records), suppressed }
}

/// A view with nothing suppressed.
pub fn plain_view<T: Serialize>(record: &T) -> RedactedView {
    RedactedView::new(to_value(record))
}

fn join_path(prefix: &str, field: &str) -> String {
    if field.starts_with('[') {
        format!("{prefix}{field}")
    } else {
        format!("{prefix}.{field}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{call, proposal, ts};
    use crate::model::ReviewId;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn target() -> ProposalAccess {
        ProposalAccess::new(&proposal(), &call(), [&UserId::from("usr-r1")])
    }

    fn community() -> Principal {
        Principal::user("usr-c".into(), [Grant::global(Role::Community)])
    }

    fn rep() -> Principal {
        Principal::user("usr-rep".into(), [Grant::for_call(Role::AgencyRep, "call-1".into())])
    }

    fn owner() -> Principal {
        Principal::user("usr-pi".into(), [Grant::for_call(Role::Pi, "call-1".into())])
    }

    fn reviewer() -> Principal {
        Principal::user("usr-r1".into(), [Grant::global(Role::Reviewer)])
    }

    fn review(reviewer: &str) -> Review {
        Review {
            id: ReviewId::from(format!("rev-{}", reviewer.len() * 7 + reviewer.bytes().map(usize::from).sum::<usize>())),
            proposal_id: "prop-1".into(),
            reviewer_id: reviewer.into(),
            criterion_scores: BTreeMap::from([("merit".into(), 7), ("feasibility".into(), 6)]),
            criterion_comments: BTreeMap::new(),
            overall_comment: "Solid.".into(),
            version: 1,
            submitted_at: ts(2026, 3, 10),
        }
    }

    #[test]
    fn community_never_reads_private_budgets() {
        for s in ProposalState::ALL {
            assert!(!can(&community(), Action::ReadBudget, &target(), s));
        }
    }

    #[test]
    fn owner_reads_own_draft() {
        assert!(can(&owner(), Action::ReadProposal, &target(), ProposalState::Draft));
        assert!(!can(&community(), Action::ReadProposal, &target(), ProposalState::Draft));
        assert!(!can(&rep(), Action::ReadProposal, &target(), ProposalState::Draft));
    }

    #[test]
    fn assigned_reviewer_reviews_only_while_assigned() {
        for s in ProposalState::ALL {
            assert_eq!(can(&reviewer(), Action::SubmitReview, &target(), s), s == ProposalState::ReviewersAssigned);
        }
        let stranger = Principal::user("usr-r9".into(), [Grant::global(Role::Reviewer)]);
        assert!(!can(&stranger, Action::SubmitReview, &target(), ProposalState::ReviewersAssigned));
    }

    #[test]
    fn authors_never_review_their_own_proposal() {
        let mut t = target();
        t.assigned_reviewers.insert("usr-pi".into());
        let pi_reviewer = owner().with_grant(Grant::global(Role::Reviewer));
        assert!(!can(&pi_reviewer, Action::SubmitReview, &t, ProposalState::ReviewersAssigned));
    }

    #[test]
    fn reps_of_other_calls_are_strangers() {
        let other = Principal::user("usr-rep2".into(), [Grant::for_call(Role::AgencyRep, "call-2".into())]);
        assert!(!can(&other, Action::ReadProposal, &target(), ProposalState::Submitted));
        assert!(!can(&other, Action::ReadBudget, &target(), ProposalState::Published));
        assert!(can(&rep(), Action::ReadBudget, &target(), ProposalState::Submitted));
    }

    #[test]
    fn decide_needs_finished_deliberation_state() {
        let t = target();
        assert!(can(&rep(), Action::Decide, &t, ProposalState::CommunityDiscussion));
        assert!(!can(&rep(), Action::Decide, &t, ProposalState::RebuttalOpen));
        let mut no_discussion = t.clone();
        no_discussion.discussion_enabled = false;
        assert!(can(&rep(), Action::Decide, &no_discussion, ProposalState::RebuttalOpen));
        let admin = Principal::user("usr-a".into(), [Grant::global(Role::Admin)]);
        assert!(!can(&admin, Action::Decide, &t, ProposalState::CommunityDiscussion));
    }

    #[test]
    fn budget_redaction_for_community() {
        let view = redact_proposal(&proposal(), &target(), &community());
        assert_eq!(view.suppressed, vec!["budget_items", "requested_total"]);
        assert_eq!(view.record["budget_items"], REDACTED);
        assert_eq!(view.record["requested_total"], REDACTED);
        let mut sorted = marker_paths(&view.record);
        sorted.sort();
        assert_eq!(sorted, view.suppressed);
    }

    #[test]
    fn privileged_viewers_see_everything() {
        for viewer in [rep(), owner()] {
            let view = redact_proposal(&proposal(), &target(), &viewer);
            assert!(view.suppressed.is_empty());
            assert_eq!(view.record, serde_json::to_value(proposal()).unwrap());
        }
    }

    #[test]
    fn public_budgets_are_not_redacted() {
        let mut t = target();
        t.budget_public = true;
        assert!(redact_proposal(&proposal(), &t, &Principal::anonymous()).suppressed.is_empty());
    }

    #[test]
    fn pseudonyms_follow_assignment_order() {
        let stamps = vec![
            AssignmentStamp { reviewer_id: "usr-c".into(), assigned_at: ts(2026, 3, 3), seq: 0 },
            AssignmentStamp { reviewer_id: "usr-a".into(), assigned_at: ts(2026, 3, 1), seq: 0 },
            AssignmentStamp { reviewer_id: "usr-b".into(), assigned_at: ts(2026, 3, 2), seq: 0 },
        ];
        let c = call();
        for (id, label) in [("usr-a", "Reviewer #1"), ("usr-b", "Reviewer #2"), ("usr-c", "Reviewer #3")] {
            let first = anonymize_review(&review(id), &c, &stamps);
            let second = anonymize_review(&review(id), &c, &stamps);
            assert_eq!(first.record["reviewer_label"], label);
            assert_eq!(first, second);
            assert!(!first.record.to_string().contains(id));
        }
    }

    #[test]
    fn same_instant_assignments_rank_by_sequence() {
        let at = ts(2026, 3, 1);
        let stamps = vec![
            AssignmentStamp { reviewer_id: "usr-a".into(), assigned_at: at, seq: 1 },
            AssignmentStamp { reviewer_id: "usr-b".into(), assigned_at: at, seq: 0 },
        ];
        assert_eq!(pseudonym_rank(&stamps, &"usr-b".into()), Some(1));
        assert_eq!(pseudonym_rank(&stamps, &"usr-a".into()), Some(2));
    }

    #[test]
    fn signed_reviews_keep_identity() {
        let mut c = call();
        c.review_visibility = ReviewVisibility::Signed;
        let view = anonymize_review(&review("usr-a"), &c, &[]);
        assert!(view.suppressed.is_empty());
        assert_eq!(view.record["reviewer_id"], "usr-a");
    }

    #[test]
    fn redact_review_hides_name_from_the_pi() {
        let stamps = vec![AssignmentStamp { reviewer_id: "usr-r1".into(), assigned_at: ts(2026, 3, 1), seq: 0 }];
        let c = call();
        let t = target();
        let hidden = redact_review(&review("usr-r1"), &c, &t, &stamps, &owner(), Some("Ada Quill"));
        let text = hidden.record.to_string();
        assert!(!text.contains("usr-r1") && !text.contains("Ada Quill"));
        let shown = redact_review(&review("usr-r1"), &c, &t, &stamps, &rep(), Some("Ada Quill"));
        assert_eq!(shown.record["reviewer_name"], "Ada Quill");
        let own = redact_review(&review("usr-r1"), &c, &t, &stamps, &reviewer(), None);
        assert_eq!(own.record["reviewer_id"], "usr-r1");
    }

    fn arb_grant() -> impl Strategy<Value = Grant> {
        let role = prop::sample::select(Role::ALL.to_vec());
        let scope = prop::option::of(prop::sample::select(vec![CallId::from("call-1"), CallId::from("call-2")]));
        (role, scope).prop_map(|(role, scope)| Grant { role, scope })
    }

    proptest! {
        #[test]
        fn adding_a_role_never_removes_a_permission(
            grants in prop::collection::vec(arb_grant(), 0..4),
            extra in arb_grant(),
            who in prop::sample::select(vec!["usr-pi", "usr-r1", "usr-x"]),
            budget_public: bool,
        ) {
            let mut t = target();
            t.budget_public = budget_public;
            let base = Principal::user(who.into(), grants);
            let more = base.clone().with_grant(extra);
            for a in Action::ALL {
                for s in ProposalState::ALL {
                    if can(&base, a, &t, s) {
                        prop_assert!(can(&more, a, &t, s), "{a:?} lost in {s}");
                    }
                }
            }
            for k in EventKind::ALL {
                for s in ProposalState::ALL {
                    if can_fire(&base, k, &t, s) {
                        prop_assert!(can_fire(&more, k, &t, s));
                    }
                }
            }
        }

        #[test]
        fn anonymized_reviews_never_carry_identity(
            id in "usr-[a-z0-9]{6,10}",
            name in "[A-Z][a-z]{3,8} [A-Z][a-z]{3,8}",
            viewer in 0usize..4,
            minutes in 0i64..10_000,
        ) {
            let stamps = vec![
                AssignmentStamp { reviewer_id: id.as_str().into(), assigned_at: ts(2026, 3, 1) + chrono::Duration::minutes(minutes), seq: 0 },
                AssignmentStamp { reviewer_id: "usr-r1".into(), assigned_at: ts(2026, 3, 2), seq: 1 },
            ];
            let mut t = target();
            t.assigned_reviewers.insert(id.as_str().into());
            let viewer = [owner(), community(), Principal::anonymous(), reviewer()][viewer].clone();
            let r = review(&id);
            prop_assume!(!r.overall_comment.contains(&name));
            let view = redact_review(&r, &call(), &t, &stamps, &viewer, Some(&name));
            let text = view.record.to_string();
            prop_assert!(!text.contains(&id) && !text.contains(&name), "{text}");
            prop_assert_eq!(view.suppressed, vec!["reviewer_id".to_owned()]);
        }
    }
}
