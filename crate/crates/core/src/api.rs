//! HTTP JSON API over [`Platform`].
//!
//! Every handler authenticates the caller (bearer token, or anonymous),
//! runs the platform operation on the blocking pool and serializes the
//! already-redacted result. Errors become [`ApiError`] bodies.

use std::collections::BTreeMap;
use std::time::Duration as StdDuration;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, FromRequest, FromRequestParts, Path, Request, State};
use axum::http::header::{AUTHORIZATION, CONTENT_TYPE};
use axum::http::request::Parts;
use axum::http::{HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::access::{Principal, RedactedView};
use crate::analytics::Dimension;
use crate::config::DEFAULT_MAX_BODY_BYTES;
use crate::model::{
    CallId, FieldIssue, FundingCall, Institution, ProposalId, ReviewId, RoleAssignment, UserId,
};
use crate::platform::{DecisionInput, Platform, PlatformError, ProposalDraft, Registration, ReviewInput};
use crate::store::CallFilter;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub field_errors: Vec<FieldIssue>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status: status.as_u16(), code: code.to_owned(), message: message.into(), field_errors: Vec::new() }
    }
}

/// The one HTTP status each machine code is served with.
pub fn status_for(code: &str) -> StatusCode {
    match code {
        "VALIDATION_FAILED" | "INVALID_ORCID" | "UNKNOWN_INSTITUTION" | "INVALID_CONSTRAINT" | "INSUFFICIENT_DATA"
        | "INVALID_QUERY" | "INVALID_JSON" => StatusCode::UNPROCESSABLE_ENTITY,
        "BAD_REQUEST" | "MALFORMED_JSON" => StatusCode::BAD_REQUEST,
        "UNAUTHENTICATED" | "INVALID_CREDENTIALS" | "EXPIRED" | "BAD_SIGNATURE" | "MALFORMED" => StatusCode::UNAUTHORIZED,
        "UNAUTHORIZED_ACTOR" => StatusCode::FORBIDDEN,
        "NOT_FOUND" | "NOT_PUBLISHED" | "NO_PUBLISHED_DATA" | "ROUTE_NOT_FOUND" => StatusCode::NOT_FOUND,
        "ILLEGAL_TRANSITION" | "DEADLINE_PASSED" | "DEADLINE_NOT_REACHED" | "REVIEWS_INCOMPLETE"
        | "ASSIGNMENTS_INCOMPLETE" | "INFEASIBLE" | "NO_REVIEWS" | "CONFLICT" | "DUPLICATE" | "DUPLICATE_EMAIL"
        | "NOT_EDITABLE" | "DECISIONS_PENDING" | "INTEGRITY_VIOLATION" => StatusCode::CONFLICT,
        "PAYLOAD_TOO_LARGE" => StatusCode::PAYLOAD_TOO_LARGE,
        "UNSUPPORTED_MEDIA_TYPE" => StatusCode::UNSUPPORTED_MEDIA_TYPE,
        "METHOD_NOT_ALLOWED" => StatusCode::METHOD_NOT_ALLOWED,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<PlatformError> for ApiError {
    fn from(e: PlatformError) -> Self {
        let code = e.code();
        let status = status_for(code);
        let message = if status == StatusCode::INTERNAL_SERVER_ERROR {
            tracing::error!(error = %e, "internal error");
            "internal error".to_owned()
        } else {
            e.to_string()
        };
        ApiError { status: status.as_u16(), code: code.to_owned(), message, field_errors: e.field_issues().to_vec() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// JSON body whose rejections are reported as [`ApiError`]s.
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(rejection) => Err(json_rejection(rejection)),
        }
    }
}

fn json_rejection(r: JsonRejection) -> ApiError {
    let code = match r.status() {
        StatusCode::PAYLOAD_TOO_LARGE => "PAYLOAD_TOO_LARGE",
        StatusCode::UNSUPPORTED_MEDIA_TYPE => "UNSUPPORTED_MEDIA_TYPE",
        StatusCode::UNPROCESSABLE_ENTITY => "INVALID_JSON",
        _ => "MALFORMED_JSON",
    };
    ApiError::new(status_for(code), code, r.body_text())
}

pub struct Query<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequestParts<S> for Query<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, Self::Rejection> {
        axum::extract::Query::<T>::from_request_parts(parts, state)
            .await
            .map(|q| Query(q.0))
            .map_err(|r: QueryRejection| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "INVALID_QUERY", r.body_text()))
    }
}

#[derive(Clone)]
pub struct AppState {
    pub platform: Platform,
}

/// Runs a platform operation off the async workers.
async fn run<T, F>(app: &AppState, work: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Platform) -> Result<T, PlatformError> + Send + 'static,
{
    let platform = app.platform.clone();
    match tokio::task::spawn_blocking(move || work(&platform)).await {
        Ok(result) => result.map_err(ApiError::from),
        Err(e) => {
            tracing::error!(error = %e, "worker panicked");
            Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", "internal error"))
        }
    }
}

/// The caller: anonymous without an Authorization header, 401 with a bad one.
pub struct Viewer(pub Principal);

impl Viewer {
    fn signed_in(self) -> ApiResult<Principal> {
        if self.0.is_authenticated() {
            Ok(self.0)
        } else {
            Err(PlatformError::Unauthenticated.into())
        }
    }
}

impl FromRequestParts<AppState> for Viewer {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, app: &AppState) -> Result<Self, Self::Rejection> {
        let Some(header) = parts.headers.get(AUTHORIZATION) else {
            return Ok(Viewer(Principal::anonymous()));
        };
        let token = header
            .to_str()
            .ok()
            .and_then(|h| h.strip_prefix("Bearer ").or_else(|| h.strip_prefix("bearer ")))
            .map(|t| t.trim().to_owned())
            .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "MALFORMED", "expected `Authorization: Bearer <token>`"))?;
        let principal = run(app, move |p| p.authenticate(&token)).await?;
        Ok(Viewer(principal))
    }
}

/// A redacted record with its marker paths under `redacted`.
fn view_json(view: RedactedView) -> Json<Value> {
    let mut record = view.record;
    if let Some(obj) = record.as_object_mut() {
        obj.insert("redacted".into(), json!(view.suppressed));
    }
    Json(record)
}

fn csv_response(body: String) -> Response {
    ([(CONTENT_TYPE, "text/csv; charset=utf-8")], body).into_response()
}

#[derive(Debug, Default, Deserialize)]
struct Format {
    format: Option<String>,
}

impl Format {
    fn csv(&self) -> bool {
        self.format.as_deref().is_some_and(|f| f.eq_ignore_ascii_case("csv"))
    }
}

// auth and accounts

#[derive(Deserialize)]
struct Login {
    email: String,
    password: String,
}

async fn register(State(app): State<AppState>, Body(reg): Body<Registration>) -> ApiResult<(StatusCode, Json<Value>)> {
    let mut user = run(&app, move |p| p.register_user(reg)).await?;
    user.password_digest = None;
    Ok((StatusCode::CREATED, Json(json!(user))))
}

async fn login(State(app): State<AppState>, Body(l): Body<Login>) -> ApiResult<Json<Value>> {
    let token = run(&app, move |p| p.login(&l.email, &l.password)).await?;
    Ok(Json(json!(token)))
}

async fn me(State(app): State<AppState>, viewer: Viewer) -> ApiResult<Json<Value>> {
    let who = viewer.signed_in()?;
    let id = who.user_id.clone().unwrap_or_else(|| UserId::from(""));
    Ok(Json(run(&app, move |p| p.user_profile(&who, &id)).await?))
}

#[derive(Deserialize)]
struct ProfileBody {
    #[serde(default)]
    research_areas: Vec<String>,
    #[serde(default)]
    keywords: Vec<String>,
}

async fn set_profile(State(app): State<AppState>, viewer: Viewer, Body(b): Body<ProfileBody>) -> ApiResult<Json<Value>> {
    let who = viewer.signed_in()?;
    let id = who.user_id.clone().unwrap_or_else(|| UserId::from(""));
    let profile = run(&app, move |p| p.set_profile(&who, &id, &b.research_areas, &b.keywords)).await?;
    Ok(Json(json!(profile)))
}

async fn dashboard(State(app): State<AppState>, viewer: Viewer) -> ApiResult<Json<Value>> {
    let who = viewer.signed_in()?;
    Ok(Json(json!(run(&app, move |p| p.dashboard(&who)).await?)))
}

async fn institutions(State(app): State<AppState>) -> ApiResult<Json<Value>> {
    Ok(Json(json!(run(&app, |p| p.institutions()).await?)))
}

async fn create_institution(State(app): State<AppState>, viewer: Viewer, Body(i): Body<Institution>) -> ApiResult<(StatusCode, Json<Value>)> {
    let who = viewer.signed_in()?;
    let inst = run(&app, move |p| p.create_institution(&who, i)).await?;
    Ok((StatusCode::CREATED, Json(json!(inst))))
}

async fn grant_role(State(app): State<AppState>, viewer: Viewer, Body(ra): Body<RoleAssignment>) -> ApiResult<StatusCode> {
    let who = viewer.signed_in()?;
    run(&app, move |p| p.grant_role(&who, ra)).await?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
struct SweepBody {
    call_id: Option<CallId>,
    now: Option<DateTime<Utc>>,
}

/// Deadline sweep on demand. Admins only; the scheduler normally does this.
async fn sweep(State(app): State<AppState>, viewer: Viewer, Body(b): Body<SweepBody>) -> ApiResult<Json<Value>> {
    let who = viewer.signed_in()?;
    if !who.is_admin() {
        return Err(PlatformError::Forbidden.into());
    }
    let fired = run(&app, move |p| p.sweep_deadlines(b.call_id.as_ref(), b.now)).await?;
    Ok(Json(json!({ "fired": fired })))
}

// calls

async fn list_calls(State(app): State<AppState>, Query(filter): Query<CallFilter>) -> ApiResult<Json<Value>> {
    Ok(Json(json!(run(&app, move |p| p.query_calls(&filter)).await?)))
}

#[derive(Deserialize)]
struct NewCall {
    #[serde(flatten)]
    call: FundingCall,
    representative: Option<UserId>,
}

async fn create_call(State(app): State<AppState>, viewer: Viewer, Body(b): Body<NewCall>) -> ApiResult<(StatusCode, Json<Value>)> {
    let who = viewer.signed_in()?;
    let call = run(&app, move |p| p.create_call(&who, b.call, b.representative)).await?;
    Ok((StatusCode::CREATED, Json(json!(call))))
}

async fn get_call(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let id = CallId::from(id);
    let (call, published_at) = run(&app, move |p| {
        let call = p.call(&id)?;
        let published = p.store().read(|tx| tx.published_at(&id))?;
        Ok((call, published))
    })
    .await?;
    let mut v = json!(call);
    v["published_at"] = json!(published_at);
    Ok(Json(v))
}

async fn assign(State(app): State<AppState>, viewer: Viewer, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let who = viewer.signed_in()?;
    Ok(Json(json!(run(&app, move |p| p.assign_call(&who, &CallId::from(id))).await?)))
}

async fn recommendation(
    State(app): State<AppState>,
    viewer: Viewer,
    Path(id): Path<String>,
    Query(f): Query<Format>,
) -> ApiResult<Response> {
    let who = viewer.signed_in()?;
    let rec = run(&app, move |p| p.recommendation(&who, &CallId::from(id))).await?;
    Ok(if f.csv() { csv_response(rec.to_csv()) } else { Json(json!(rec)).into_response() })
}

async fn decide_call(State(app): State<AppState>, viewer: Viewer, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let who = viewer.signed_in()?;
    Ok(Json(json!({ "decisions": run(&app, move |p| p.decide_call(&who, &CallId::from(id))).await? })))
}

async fn publish(State(app): State<AppState>, viewer: Viewer, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let who = viewer.signed_in()?;
    Ok(Json(json!({ "events": run(&app, move |p| p.publish_call(&who, &CallId::from(id))).await? })))
}

async fn export(State(app): State<AppState>, viewer: Viewer, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let who = viewer.signed_in()?;
    Ok(Json(json!(run(&app, move |p| p.export_call(&who, &CallId::from(id))).await?)))
}

async fn results(State(app): State<AppState>, viewer: Viewer, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let who = viewer.0;
    Ok(Json(json!(run(&app, move |p| p.results(&who, &CallId::from(id))).await?)))
}

// proposals

async fn create_proposal(State(app): State<AppState>, viewer: Viewer, Body(d): Body<ProposalDraft>) -> ApiResult<(StatusCode, Json<Value>)> {
    let who = viewer.signed_in()?;
    let stored = run(&app, move |p| p.create_proposal(&who, d)).await?;
    Ok((StatusCode::CREATED, Json(json!(stored))))
}

#[derive(Deserialize)]
struct Versioned<T> {
    #[serde(flatten)]
    inner: T,
    version: Option<i64>,
}

async fn update_proposal(
    State(app): State<AppState>,
    viewer: Viewer,
    Path(id): Path<String>,
    Body(b): Body<Versioned<ProposalDraft>>,
) -> ApiResult<Json<Value>> {
    let who = viewer.signed_in()?;
    let stored = run(&app, move |p| p.update_proposal(&who, &ProposalId::from(id), b.inner, b.version)).await?;
    Ok(Json(json!(stored)))
}

async fn get_proposal(State(app): State<AppState>, viewer: Viewer, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let who = viewer.0;
    Ok(view_json(run(&app, move |p| p.proposal_view(&who, &ProposalId::from(id))).await?))
}

async fn submit(State(app): State<AppState>, viewer: Viewer, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let who = viewer.signed_in()?;
    Ok(Json(json!(run(&app, move |p| p.submit_proposal(&who, &ProposalId::from(id))).await?)))
}

async fn withdraw(State(app): State<AppState>, viewer: Viewer, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let who = viewer.signed_in()?;
    Ok(Json(json!(run(&app, move |p| p.withdraw(&who, &ProposalId::from(id))).await?)))
}

async fn audit(State(app): State<AppState>, viewer: Viewer, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let who = viewer.signed_in()?;
    Ok(Json(json!(run(&app, move |p| p.audit_log(&who, &ProposalId::from(id))).await?)))
}

#[derive(Deserialize)]
struct K {
    k: Option<usize>,
}

async fn suggestions(State(app): State<AppState>, viewer: Viewer, Path(id): Path<String>, Query(k): Query<K>) -> ApiResult<Json<Value>> {
    let who = viewer.signed_in()?;
    let k = k.k.unwrap_or(5).min(50);
    Ok(Json(json!(run(&app, move |p| p.suggest_reviewers(&who, &ProposalId::from(id), k)).await?)))
}

#[derive(Deserialize)]
struct ConflictBody {
    reason: String,
}

async fn declare_conflict(
    State(app): State<AppState>,
    viewer: Viewer,
    Path(id): Path<String>,
    Body(b): Body<ConflictBody>,
) -> ApiResult<StatusCode> {
    let who = viewer.signed_in()?;
    run(&app, move |p| p.declare_conflict(&who, &ProposalId::from(id), &b.reason)).await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn submit_review(
    State(app): State<AppState>,
    viewer: Viewer,
    Path(id): Path<String>,
    Body(r): Body<ReviewInput>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let who = viewer.signed_in()?;
    let receipt = run(&app, move |p| p.submit_review(&who, &ProposalId::from(id), r)).await?;
    Ok((StatusCode::CREATED, Json(json!(receipt))))
}

async fn revise_review(State(app): State<AppState>, viewer: Viewer, Path(id): Path<String>, Body(r): Body<ReviewInput>) -> ApiResult<Json<Value>> {
    let who = viewer.signed_in()?;
    Ok(Json(json!(run(&app, move |p| p.revise_review(&who, &ReviewId::from(id), r)).await?)))
}

#[derive(Deserialize)]
struct RatingBody {
    rating: u8,
}

async fn rate_review(State(app): State<AppState>, viewer: Viewer, Path(id): Path<String>, Body(b): Body<RatingBody>) -> ApiResult<StatusCode> {
    let who = viewer.signed_in()?;
    run(&app, move |p| p.rate_review(&who, &ReviewId::from(id), b.rating)).await?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
struct RebuttalBody {
    body: String,
    parent_review_id: Option<ReviewId>,
}

async fn rebut(
    State(app): State<AppState>,
    viewer: Viewer,
    Path(id): Path<String>,
    Body(b): Body<RebuttalBody>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let who = viewer.signed_in()?;
    let r = run(&app, move |p| p.submit_rebuttal(&who, &ProposalId::from(id), &b.body, b.parent_review_id)).await?;
    Ok((StatusCode::CREATED, Json(json!(r))))
}

#[derive(Deserialize)]
struct CommentBody {
    body: String,
}

async fn comment(
    State(app): State<AppState>,
    viewer: Viewer,
    Path(id): Path<String>,
    Body(b): Body<CommentBody>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let who = viewer.signed_in()?;
    let c = run(&app, move |p| p.post_comment(&who, &ProposalId::from(id), &b.body)).await?;
    Ok((StatusCode::CREATED, Json(json!(c))))
}

async fn decide(
    State(app): State<AppState>,
    viewer: Viewer,
    Path(id): Path<String>,
    Body(d): Body<DecisionInput>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let who = viewer.signed_in()?;
    let decision = run(&app, move |p| p.decide(&who, &ProposalId::from(id), d)).await?;
    Ok((StatusCode::CREATED, Json(json!(decision))))
}

// analytics

#[derive(Deserialize)]
struct AcceptanceQuery {
    dimension: Option<String>,
    format: Option<String>,
}

async fn acceptance(State(app): State<AppState>, Query(q): Query<AcceptanceQuery>) -> ApiResult<Response> {
    let dimension: Dimension = q
        .dimension
        .as_deref()
        .unwrap_or("institution")
        .parse()
        .map_err(|e: String| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "INVALID_QUERY", e))?;
    let report = run(&app, move |p| p.acceptance_by(dimension)).await?;
    let csv = Format { format: q.format }.csv();
    Ok(if csv { csv_response(report.to_csv()) } else { Json(json!(report)).into_response() })
}

async fn expertise(State(app): State<AppState>, Query(f): Query<Format>) -> ApiResult<Response> {
    let effect = run(&app, |p| p.reviewer_expertise_effect()).await?;
    Ok(if f.csv() { csv_response(effect.to_csv()) } else { Json(json!(effect)).into_response() })
}

#[derive(Deserialize)]
struct RebuttalQuery {
    call: String,
    format: Option<String>,
}

async fn rebuttal_effect(State(app): State<AppState>, Query(q): Query<RebuttalQuery>) -> ApiResult<Response> {
    let call = CallId::from(q.call);
    let effect = run(&app, move |p| p.rebuttal_effect(&call)).await?;
    let csv = Format { format: q.format }.csv();
    Ok(if csv { csv_response(effect.to_csv()) } else { Json(json!(effect)).into_response() })
}

async fn health(State(app): State<AppState>) -> ApiResult<Json<Value>> {
    let (schema, now) = run(&app, |p| Ok((p.store().schema_version()?, p.now()))).await?;
    Ok(Json(json!({ "status": "ok", "schema_version": schema, "now": now })))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "ROUTE_NOT_FOUND", "no such route")
}

#[derive(Debug, Clone)]
pub struct ApiOptions {
    pub max_body_bytes: usize,
    /// `None` allows any origin.
    pub cors_origin: Option<String>,
}

impl Default for ApiOptions {
    fn default() -> Self {
        ApiOptions { max_body_bytes: DEFAULT_MAX_BODY_BYTES, cors_origin: None }
    }
}

/// Every route, for the manifest in the docs and the route tests.
pub const ROUTES: &[(&str, &str)] = &[
    ("GET", "/health"),
    ("POST", "/auth/register"),
    ("POST", "/auth/login"),
    ("GET", "/me"),
    ("PUT", "/me/profile"),
    ("GET", "/dashboard"),
    ("GET", "/institutions"),
    ("POST", "/admin/institutions"),
    ("POST", "/admin/roles"),
    ("POST", "/admin/sweep"),
    ("GET", "/calls"),
    ("POST", "/calls"),
    ("GET", "/calls/{id}"),
    ("POST", "/calls/{id}/assign"),
    ("GET", "/calls/{id}/recommendation"),
    ("POST", "/calls/{id}/decide"),
    ("POST", "/calls/{id}/publish"),
    ("GET", "/calls/{id}/export"),
    ("GET", "/results/{call_id}"),
    ("POST", "/proposals"),
    ("GET", "/proposals/{id}"),
    ("PUT", "/proposals/{id}"),
    ("POST", "/proposals/{id}/submit"),
    ("POST", "/proposals/{id}/withdraw"),
    ("GET", "/proposals/{id}/audit"),
    ("GET", "/proposals/{id}/suggestions"),
    ("POST", "/proposals/{id}/conflicts"),
    ("POST", "/proposals/{id}/reviews"),
    ("PUT", "/reviews/{id}"),
    ("POST", "/reviews/{id}/rating"),
    ("POST", "/proposals/{id}/rebuttals"),
    ("POST", "/proposals/{id}/comments"),
    ("POST", "/proposals/{id}/decision"),
    ("GET", "/analytics/acceptance"),
    ("GET", "/analytics/expertise"),
    ("GET", "/analytics/rebuttal"),
];

pub fn router(platform: Platform, options: ApiOptions) -> Router {
    let cors = CorsLayer::new()
        .allow_methods([Method::GET, Method::POST, Method::PUT])
        .allow_headers([AUTHORIZATION, CONTENT_TYPE])
        .max_age(StdDuration::from_secs(3600))
        .allow_origin(match options.cors_origin.as_deref().and_then(|o| HeaderValue::from_str(o).ok()) {
            Some(origin) => AllowOrigin::exact(origin),
            None => AllowOrigin::any(),
        });
    Router::new()
        .route("/health", get(health))
        .route("/auth/register", post(register))
        .route("/auth/login", post(login))
        .route("/me", get(me))
        .route("/me/profile", put(set_profile))
        .route("/dashboard", get(dashboard))
        .route("/institutions", get(institutions))
        .route("/admin/institutions", post(create_institution))
        .route("/admin/roles", post(grant_role))
        .route("/admin/sweep", post(sweep))
        .route("/calls", get(list_calls).post(create_call))
        .route("/calls/{id}", get(get_call))
        .route("/calls/{id}/assign", post(assign))
        .route("/calls/{id}/recommendation", get(recommendation))
        .route("/calls/{id}/decide", post(decide_call))
        .route("/calls/{id}/publish", post(publish))
        .route("/calls/{id}/export", get(export))
        .route("/results/{call_id}", get(results))
        .route("/proposals", post(create_proposal))
        .route("/proposals/{id}", get(get_proposal).put(update_proposal))
        .route("/proposals/{id}/submit", post(submit))
        .route("/proposals/{id}/withdraw", post(withdraw))
        .route("/proposals/{id}/audit", get(audit))
        .route("/proposals/{id}/suggestions", get(suggestions))
        .route("/proposals/{id}/conflicts", post(declare_conflict))
        .route("/proposals/{id}/reviews", post(submit_review))
        .route("/reviews/{id}", put(revise_review))
        .route("/reviews/{id}/rating", post(rate_review))
        .route("/proposals/{id}/rebuttals", post(rebut))
        .route("/proposals/{id}/comments", post(comment))
        .route("/proposals/{id}/decision", post(decide))
        .route("/analytics/acceptance", get(acceptance))
        .route("/analytics/expertise", get(expertise))
        .route("/analytics/rebuttal", get(rebuttal_effect))
        .fallback(not_found)
        .method_not_allowed_fallback(|| async {
            ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "METHOD_NOT_ALLOWED", "method not allowed on this route")
        })
        .layer(DefaultBodyLimit::max(options.max_body_bytes))
        .layer(cors)
        .with_state(AppState { platform })
}

/// Serves until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Status and code for each platform error code, as served.
pub fn error_table() -> BTreeMap<&'static str, u16> {
    [
        "VALIDATION_FAILED", "ILLEGAL_TRANSITION", "DEADLINE_PASSED", "DEADLINE_NOT_REACHED", "UNAUTHORIZED_ACTOR",
        "REVIEWS_INCOMPLETE", "ASSIGNMENTS_INCOMPLETE", "INFEASIBLE", "INVALID_CONSTRAINT", "NO_REVIEWS", "EXPIRED",
        "BAD_SIGNATURE", "MALFORMED", "SCHEMA_CONFLICT", "CONFLICT", "NOT_FOUND", "DUPLICATE", "INTEGRITY_VIOLATION",
        "STORE_ERROR", "NO_PUBLISHED_DATA", "INSUFFICIENT_DATA", "UNAUTHENTICATED", "INVALID_CREDENTIALS",
        "DUPLICATE_EMAIL", "INVALID_ORCID", "UNKNOWN_INSTITUTION", "NOT_EDITABLE", "DECISIONS_PENDING",
        "NOT_PUBLISHED", "BAD_REQUEST", "PAYLOAD_TOO_LARGE", "INVALID_JSON", "MALFORMED_JSON", "INVALID_QUERY",
        "ROUTE_NOT_FOUND",
    ]
    .into_iter()
    .map(|c| (c, status_for(c).as_u16()))
    .collect()
}
