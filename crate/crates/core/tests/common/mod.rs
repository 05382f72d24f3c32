#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use grantdesk::api::{router, ApiOptions};
use grantdesk::auth::{PasswordPolicy, TokenIssuer};
use grantdesk::clock::Clock;
use grantdesk::corpus::{load, Corpus};
use grantdesk::matching::MatchWeights;
use grantdesk::model::{
    AgencyType, BudgetCategory, BudgetItem, CallId, Criterion, FundingCall, Milestone, Money, ProjectWindow, Proposal,
    ProposalId, ReviewVisibility, UserId, Weight,
};
use grantdesk::platform::Platform;
use grantdesk::store::Store;
use grantdesk::workflow::{CallSchedule, ProposalState};

pub fn ts(y: i32, m: u32, d: u32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(y, m, d, 0, 0, 0).unwrap()
}

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

pub fn schedule(discussion: bool) -> CallSchedule {
    CallSchedule {
        submission_deadline: ts(2026, 3, 1),
        review_deadline: ts(2026, 3, 15),
        rebuttal_deadline: ts(2026, 3, 22),
        discussion_deadline: discussion.then(|| ts(2026, 3, 29)),
        decision_deadline: ts(2026, 4, 5),
        publication_date: ts(2026, 4, 10),
    }
}

pub fn criterion(name: &str, numer: i64, denom: i64, min: i32, max: i32) -> Criterion {
    Criterion {
        name: name.into(),
        description: format!("{name} of the work"),
        weight: Weight::from_ratio(numer, denom),
        scale_min: min,
        scale_max: max,
    }
}

pub fn call() -> FundingCall {
    FundingCall {
        id: CallId::from("call-t"),
        agency_name: "Harbor Science Trust".into(),
        agency_type: AgencyType::Private,
        title: "Open questions".into(),
        description: "Test call".into(),
        total_budget: Money(20_000_000),
        research_areas: ["machine-learning".to_owned()].into(),
        schedule: schedule(true),
        project_window: ProjectWindow { start: date(2026, 1, 1), end: date(2028, 12, 31) },
        criteria_template: vec![criterion("merit", 1, 2, 1, 10), criterion("feasibility", 1, 2, 1, 10)],
        reviewers_per_proposal: 2,
        max_assignments_per_reviewer: 5,
        budget_public: false,
        review_visibility: ReviewVisibility::Anonymized,
        match_weights: MatchWeights::default(),
    }
}

/// Budget figures are chosen so they cannot collide with ids, dates or scores.
pub const ITEM_A: i64 = 4_123_457;
pub const ITEM_B: i64 = 3_222_229;
pub const ASK: i64 = ITEM_A + ITEM_B;

pub fn proposal() -> Proposal {
    Proposal {
        id: ProposalId::from("prop-t"),
        call_id: CallId::from("call-t"),
        pi_id: UserId::from("usr-pi"),
        co_investigator_ids: vec![],
        title: "Measuring review quality".into(),
        abstract_text: "We measure review quality.".into(),
        research_goals: "Know what a good review is.".into(),
        methods: "Surveys.".into(),
        research_areas: ["machine-learning".to_owned()].into(),
        keywords: ["peer-review".to_owned()].into(),
        timeline: vec![Milestone { name: "Phase 1".into(), start: date(2026, 5, 1), end: date(2026, 12, 1) }],
        budget_items: vec![
            BudgetItem { category: BudgetCategory::Personnel, description: "Staff".into(), amount: Money(ITEM_A) },
            BudgetItem { category: BudgetCategory::Equipment, description: "Compute".into(), amount: Money(ITEM_B) },
        ],
        requested_total: Money(ASK),
        state: ProposalState::Draft,
        submitted_at: None,
    }
}

/// Whether `digits` occurs in `text` as a whole integer, not as part of a
/// longer digit run or either side of a decimal fraction.
pub fn has_number(text: &str, digits: &str) -> bool {
    let bytes = text.as_bytes();
    let mut from = 0;
    while let Some(i) = text[from..].find(digits) {
        let start = from + i;
        let end = start + digits.len();
        let digit_at = |i: usize| bytes.get(i).is_some_and(u8::is_ascii_digit);
        let before = start > 0 && (digit_at(start - 1) || (bytes[start - 1] == b'.' && start > 1 && digit_at(start - 2)));
        let after = digit_at(end) || (bytes.get(end) == Some(&b'.') && digit_at(end + 1));
        if !before && !after {
            return true;
        }
        from = start + 1;
    }
    false
}

pub fn platform_on(store: Arc<Store>, now: DateTime<Utc>) -> Platform {
    Platform::new(store, TokenIssuer::new(b"integration-secret".to_vec(), Duration::hours(12)), Clock::frozen(now))
        .unwrap()
        .with_password_policy(PasswordPolicy::fast())
}

/// In-memory store with the bundled corpus, clock frozen at `now`.
pub fn seeded(now: DateTime<Utc>) -> (Platform, Corpus) {
    let store = Arc::new(Store::in_memory_migrated().unwrap());
    let corpus = Corpus::bundled();
    load(&corpus, &store).unwrap();
    (platform_on(store, now), corpus)
}

pub fn app(platform: &Platform) -> Router {
    router(platform.clone(), ApiOptions::default())
}

pub struct Reply {
    pub status: StatusCode,
    pub text: String,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.text).unwrap_or_else(|e| panic!("not JSON ({e}): {}", self.text))
    }
}

pub async fn send(app: &Router, method: Method, path: &str, token: Option<&str>, body: Option<&Value>) -> Reply {
    let mut req = Request::builder().method(method).uri(path);
    if let Some(t) = token {
        req = req.header(header::AUTHORIZATION, format!("Bearer {t}"));
    }
    let req = match body {
        Some(b) => req.header(header::CONTENT_TYPE, "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    Reply { status, text: String::from_utf8_lossy(&bytes).into_owned() }
}

pub async fn login(app: &Router, email: &str, password: &str) -> String {
    let r = send(app, Method::POST, "/auth/login", None, Some(&serde_json::json!({ "email": email, "password": password }))).await;
    assert_eq!(r.status, StatusCode::OK, "login {email}: {}", r.text);
    r.json()["token"].as_str().expect("token field").to_owned()
}
