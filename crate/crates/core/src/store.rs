//! Relational storage on SQLite.
//!
//! Each entity is kept as a JSON document next to the key columns that
//! foreign keys, filters and ordering need. Reviews, rebuttals, comments,
//! decisions and the audit log are append-only, enforced by triggers.
//!
//! All writes go through [`Store::transaction`], which holds the single
//! writer connection for the whole unit of work. File-backed stores also keep
//! a few read-only connections so reads do not queue behind writes.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Mutex, MutexGuard};

use chrono::{DateTime, Utc};
use rusqlite::{ffi, params, Connection, OpenFlags, OptionalExtension, Row, TransactionBehavior};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matching::{ExpertiseProfile, MatchComponents};
use crate::model::{
    AgencyType, CallId, CommunityComment, Decision, FundingCall, Institution, InstitutionId, Proposal, ProposalId,
    Rebuttal, Review, ReviewId, Role, RoleAssignment, UserAccount, UserId,
};
use crate::workflow::{AuditEntry, EventKind, ProposalState};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("schema conflict: {0}")]
    SchemaConflict(String),
    #[error("concurrent modification of {0}")]
    Conflict(String),
    #[error("{entity} {id} not found")]
    NotFound { entity: &'static str, id: String },
    #[error("duplicate: {0}")]
    Duplicate(String),
    #[error("integrity violation: {0}")]
    Integrity(String),
    #[error("corrupt document: {0}")]
    Document(#[from] serde_json::Error),
    #[error(transparent)]
    Sqlite(rusqlite::Error),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::SchemaConflict(_) => "SCHEMA_CONFLICT",
            StoreError::Conflict(_) => "CONFLICT",
            StoreError::NotFound { .. } => "NOT_FOUND",
            StoreError::Duplicate(_) => "DUPLICATE",
            StoreError::Integrity(_) => "INTEGRITY_VIOLATION",
            StoreError::Document(_) | StoreError::Sqlite(_) => "STORE_ERROR",
        }
    }

    fn not_found(entity: &'static str, id: impl ToString) -> Self {
        StoreError::NotFound { entity, id: id.to_string() }
    }
}

impl From<rusqlite::Error> for StoreError {
    fn from(e: rusqlite::Error) -> Self {
        if let rusqlite::Error::SqliteFailure(err, msg) = &e {
            let msg = msg.clone().unwrap_or_default();
            match err.extended_code {
                ffi::SQLITE_CONSTRAINT_UNIQUE | ffi::SQLITE_CONSTRAINT_PRIMARYKEY => return StoreError::Duplicate(msg),
                ffi::SQLITE_CONSTRAINT_FOREIGNKEY | ffi::SQLITE_CONSTRAINT_TRIGGER | ffi::SQLITE_CONSTRAINT_NOTNULL => {
                    return StoreError::Integrity(msg)
                }
                ffi::SQLITE_BUSY | ffi::SQLITE_LOCKED => return StoreError::Conflict(msg),
                _ => {}
            }
        }
        StoreError::Sqlite(e)
    }
}

pub type StoreResult<T> = Result<T, StoreError>;

/// One step of the schema chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Migration {
    pub version: u32,
    pub name: &'static str,
    #[serde(skip)]
    sql: &'static str,
}

pub const MIGRATIONS: &[Migration] = &[
    Migration { version: 1, name: "core tables", sql: include_str!("../migrations/001_core.sql") },
    Migration { version: 2, name: "append-only history", sql: include_str!("../migrations/002_append_only.sql") },
    Migration { version: 3, name: "query indexes", sql: include_str!("../migrations/003_indexes.sql") },
];

pub fn schema_head() -> u32 {
    MIGRATIONS.last().map_or(0, |m| m.version)
}

/// Timestamps are stored in one fixed-width UTC format so text order is time order.
pub fn ts_to_sql(t: DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%S%.6fZ").to_string()
}

fn ts_from_sql(s: &str) -> rusqlite::Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| rusqlite::Error::FromSqlConversionFailure(0, rusqlite::types::Type::Text, Box::new(e)))
}

fn to_doc<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("domain records always serialize")
}

fn from_doc<T: DeserializeOwned>(doc: &str) -> StoreResult<T> {
    Ok(serde_json::from_str(doc)?)
}

const READERS: usize = 4;

#[derive(Debug)]
pub struct Store {
    writer: Mutex<Connection>,
    readers: Vec<Mutex<Connection>>,
    next_reader: AtomicUsize,
    path: Option<PathBuf>,
}

fn configure(conn: &Connection) -> StoreResult<()> {
    conn.busy_timeout(std::time::Duration::from_secs(5))?;
    conn.pragma_update(None, "foreign_keys", "ON")?;
    Ok(())
}

impl Store {
    /// Opens (creating if needed) a file-backed store. Does not migrate.
    pub fn open(path: impl AsRef<Path>) -> StoreResult<Self> {
        let path = path.as_ref().to_path_buf();
        let writer = Connection::open(&path)?;
        configure(&writer)?;
        writer.pragma_update(None, "journal_mode", "WAL")?;
        writer.pragma_update(None, "synchronous", "FULL")?;
        let readers = (0..READERS)
            .map(|_| {
                let c = Connection::open_with_flags(&path, OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX)?;
                configure(&c)?;
                Ok(Mutex::new(c))
            })
            .collect::<StoreResult<Vec<_>>>()?;
        Ok(Self { writer: Mutex::new(writer), readers, next_reader: AtomicUsize::new(0), path: Some(path) })
    }

    pub fn open_in_memory() -> StoreResult<Self> {
        let writer = Connection::open_in_memory()?;
        configure(&writer)?;
        Ok(Self { writer: Mutex::new(writer), readers: Vec::new(), next_reader: AtomicUsize::new(0), path: None })
    }

    /// Opens and brings the schema to the chain head.
    pub fn open_migrated(path: impl AsRef<Path>) -> StoreResult<Self> {
        let store = Self::open(path)?;
        store.migrate()?;
        Ok(store)
    }

    pub fn in_memory_migrated() -> StoreResult<Self> {
        let store = Self::open_in_memory()?;
        store.migrate()?;
        Ok(store)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    fn writer(&self) -> MutexGuard<'_, Connection> {
        // A panic inside a unit of work rolls the transaction back on unwind,
        // so the connection is still consistent.
        self.writer.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Applies every migration the store has not seen yet, in order.
    /// Returns what was applied; an up-to-date store yields an empty list.
    pub fn migrate(&self) -> StoreResult<Vec<Migration>> {
        let mut conn = self.writer();
        let tx = conn.transaction_with_behavior(TransactionBehavior::Exclusive)?;
        tx.execute_batch(
            "CREATE TABLE IF NOT EXISTS schema_migrations (
                version INTEGER PRIMARY KEY,
                name TEXT NOT NULL,
                applied_at TEXT NOT NULL
            );",
        )?;
        let applied: Vec<(u32, String)> = {
            let mut stmt = tx.prepare("SELECT version, name FROM schema_migrations ORDER BY version")?;
            let rows = stmt.query_map([], |r| Ok((r.get(0)?, r.get(1)?)))?;
            rows.collect::<Result<_, _>>()?
        };
        for (i, (version, name)) in applied.iter().enumerate() {
            match MIGRATIONS.get(i) {
                Some(m) if m.version == *version && m.name == name => {}
                Some(_) => return Err(StoreError::SchemaConflict(format!("migration {version} {name:?} does not match this build"))),
                None => {
                    return Err(StoreError::SchemaConflict(format!(
                        "store is at version {version}, newer than this build's head {}",
                        schema_head()
                    )))
                }
            }
        }
        let pending: Vec<Migration> = MIGRATIONS[applied.len()..].to_vec();
        let now = ts_to_sql(Utc::now());
        for m in &pending {
            tx.execute_batch(m.sql)?;
            tx.execute("INSERT INTO schema_migrations (version, name, applied_at) VALUES (?1, ?2, ?3)", params![m.version, m.name, now])?;
        }
        tx.commit()?;
        Ok(pending)
    }

    pub fn schema_version(&self) -> StoreResult<u32> {
        let conn = self.writer();
        let exists: bool = conn.query_row(
            "SELECT EXISTS (SELECT 1 FROM sqlite_master WHERE type = 'table' AND name = 'schema_migrations')",
            [],
            |r| r.get(0),
        )?;
        if !exists {
            return Ok(0);
        }
        Ok(conn.query_row("SELECT COALESCE(MAX(version), 0) FROM schema_migrations", [], |r| r.get(0))?)
    }

    /// Fails unless the schema is exactly at the chain head.
    pub fn require_current(&self) -> StoreResult<()> {
        let v = self.schema_version()?;
        if v == schema_head() {
            Ok(())
        } else {
            Err(StoreError::SchemaConflict(format!("store is at version {v}, expected {}", schema_head())))
        }
    }

    /// Runs `work` atomically: committed if it returns `Ok`, rolled back otherwise.
    /// Writers are serialized, so a unit of work sees no interleaved writes.
    pub fn transaction<T, E>(&self, work: impl FnOnce(&Tx<'_>) -> Result<T, E>) -> Result<T, E>
    where
        E: From<StoreError>,
    {
        let mut conn = self.writer();
        let before = conn.total_changes();
        let tx = conn.transaction_with_behavior(TransactionBehavior::Immediate).map_err(StoreError::from)?;
        let handle = Tx { conn: &tx };
        let out = work(&handle)?;
        if tx.total_changes() != before {
            tx.execute("UPDATE store_meta SET value = value + 1 WHERE key = 'data_version'", []).map_err(StoreError::from)?;
        }
        tx.commit().map_err(StoreError::from)?;
        Ok(out)
    }

    /// Runs `work` against a consistent snapshot; never writes.
    pub fn read<T, E>(&self, work: impl FnOnce(&Tx<'_>) -> Result<T, E>) -> Result<T, E>
    where
        E: From<StoreError>,
    {
        let run = |conn: &mut Connection| -> Result<T, E> {
            let tx = conn.transaction_with_behavior(TransactionBehavior::Deferred).map_err(StoreError::from)?;
            let out = work(&Tx { conn: &tx });
            tx.rollback().map_err(StoreError::from)?;
            out
        };
        if self.readers.is_empty() {
            return run(&mut self.writer());
        }
        let start = self.next_reader.fetch_add(1, Ordering::Relaxed);
        for i in 0..self.readers.len() {
            if let Ok(mut guard) = self.readers[(start + i) % self.readers.len()].try_lock() {
                return run(&mut guard);
            }
        }
        let mut guard = self.readers[start % self.readers.len()].lock().unwrap_or_else(|e| e.into_inner());
        run(&mut guard)
    }

    /// Bumped once per committed transaction that changed any row.
    pub fn data_version(&self) -> StoreResult<i64> {
        self.read(|tx| tx.data_version())
    }
}

/// Typed access to the tables inside one transaction.
pub struct Tx<'c> {
    conn: &'c rusqlite::Transaction<'c>,
}

/// Proposal together with its optimistic-concurrency version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredProposal {
    pub proposal: Proposal,
    pub version: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRecord {
    pub proposal_id: ProposalId,
    pub reviewer_id: UserId,
    pub call_id: CallId,
    pub score: f64,
    pub components: MatchComponents,
    pub seq: u32,
    pub assigned_at: DateTime<Utc>,
    /// Agency rating of the submitted review, 1–5.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_rating: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CoiDeclaration {
    pub reviewer_id: UserId,
    pub proposal_id: ProposalId,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallFilter {
    pub area: Option<String>,
    pub min_amount: Option<i64>,
    pub max_amount: Option<i64>,
    pub deadline_from: Option<DateTime<Utc>>,
    pub deadline_to: Option<DateTime<Utc>>,
    pub agency_type: Option<AgencyType>,
    pub limit: Option<u32>,
    pub offset: Option<u32>,
}

pub const DEFAULT_PAGE: u32 = 20;
pub const MAX_PAGE: u32 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallSummary {
    #[serde(flatten)]
    pub call: FundingCall,
    /// Proposals neither in draft nor withdrawn.
    pub application_count: u64,
    pub published: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallPage {
    pub total: u64,
    pub limit: u32,
    pub offset: u32,
    pub items: Vec<CallSummary>,
}

fn assignment_from_row(r: &Row<'_>) -> rusqlite::Result<(AssignmentRecord, String)> {
    let components: String = r.get("components")?;
    let at: String = r.get("assigned_at")?;
    let rating: Option<u8> = r.get("quality_rating")?;
    Ok((
        AssignmentRecord {
            proposal_id: ProposalId::new(r.get::<_, String>("proposal_id")?),
            reviewer_id: UserId::new(r.get::<_, String>("reviewer_id")?),
            call_id: CallId::new(r.get::<_, String>("call_id")?),
            score: r.get("score")?,
            components: MatchComponents { area_sim: 0.0, keyword_sim: 0.0, performance: 0.0 },
            seq: r.get("seq")?,
            assigned_at: ts_from_sql(&at)?,
            quality_rating: rating,
        },
        components,
    ))
}

const ASSIGNMENT_COLUMNS: &str = "proposal_id, reviewer_id, call_id, score, components, seq, assigned_at, quality_rating";

impl Tx<'_> {
    fn docs<T: DeserializeOwned>(&self, sql: &str, args: impl rusqlite::Params) -> StoreResult<Vec<T>> {
        let mut stmt = self.conn.prepare_cached(sql)?;
        let rows = stmt.query_map(args, |r| r.get::<_, String>(0))?;
        let mut out = Vec::new();
        for doc in rows {
            out.push(from_doc(&doc?)?);
        }
        Ok(out)
    }

    fn doc<T: DeserializeOwned>(&self, sql: &str, args: impl rusqlite::Params) -> StoreResult<Option<T>> {
        let doc: Option<String> = self.conn.query_row(sql, args, |r| r.get(0)).optional()?;
        doc.map(|d| from_doc(&d)).transpose()
    }

    pub fn data_version(&self) -> StoreResult<i64> {
        Ok(self.conn.query_row("SELECT value FROM store_meta WHERE key = 'data_version'", [], |r| r.get(0))?)
    }

    // institutions

    pub fn insert_institution(&self, i: &Institution) -> StoreResult<()> {
        self.conn.execute(
            "INSERT INTO institutions (id, name, country) VALUES (?1, ?2, ?3)",
            params![i.id.as_str(), i.name, i.country],
        )?;
        Ok(())
    }

    pub fn institution(&self, id: &InstitutionId) -> StoreResult<Option<Institution>> {
        Ok(self
            .conn
            .query_row("SELECT id, name, country FROM institutions WHERE id = ?1", [id.as_str()], |r| {
                Ok(Institution { id: InstitutionId::new(r.get::<_, String>(0)?), name: r.get(1)?, country: r.get(2)? })
            })
            .optional()?)
    }

    pub fn institutions(&self) -> StoreResult<Vec<Institution>> {
        let mut stmt = self.conn.prepare_cached("SELECT id, name, country FROM institutions ORDER BY id")?;
        let rows = stmt.query_map([], |r| {
            Ok(Institution { id: InstitutionId::new(r.get::<_, String>(0)?), name: r.get(1)?, country: r.get(2)? })
        })?;
        Ok(rows.collect::<Result<_, _>>()?)
    }

    // users and roles

    pub fn insert_user(&self, u: &UserAccount) -> StoreResult<()> {
        self.conn.execute(
            "INSERT INTO users (id, email, institution_id, doc) VALUES (?1, ?2, ?3, ?4)",
            params![u.id.as_str(), u.email, u.institution_id.as_str(), to_doc(u)],
        )?;
        Ok(())
    }

    pub fn user(&self, id: &UserId) -> StoreResult<Option<UserAccount>> {
        self.doc("SELECT doc FROM users WHERE id = ?1", [id.as_str()])
    }

    pub fn require_user(&self, id: &UserId) -> StoreResult<UserAccount> {
        self.user(id)?.ok_or_else(|| StoreError::not_found("user", id))
    }

    pub fn user_by_email(&self, email: &str) -> StoreResult<Option<UserAccount>> {
        self.doc("SELECT doc FROM users WHERE email = ?1", [email])
    }

    pub fn users(&self) -> StoreResult<Vec<UserAccount>> {
        self.docs("SELECT doc FROM users ORDER BY id", [])
    }

    /// Idempotent: granting a role the user already holds changes nothing.
    pub fn grant(&self, ra: &RoleAssignment) -> StoreResult<()> {
        self.conn.execute(
            "INSERT OR IGNORE INTO role_assignments (user_id, role, scope_call_id) VALUES (?1, ?2, ?3)",
            params![ra.user_id.as_str(), ra.role.as_str(), ra.scope.as_ref().map(CallId::as_str)],
        )?;
        Ok(())
    }

    fn role_rows(&self, sql: &str, args: impl rusqlite::Params) -> StoreResult<Vec<RoleAssignment>> {
        let mut stmt = self.conn.prepare_cached(sql)?;
        let rows = stmt.query_map(args, |r| {
            Ok((r.get::<_, String>(0)?, r.get::<_, String>(1)?, r.get::<_, Option<String>>(2)?))
        })?;
        let mut out = Vec::new();
        for row in rows {
            let (user, role, scope) = row?;
            let role: Role = role.parse().map_err(StoreError::Integrity)?;
            out.push(RoleAssignment { user_id: UserId::new(user), role, scope: scope.map(CallId::new) });
        }
        Ok(out)
    }

    pub fn roles_of(&self, user: &UserId) -> StoreResult<Vec<RoleAssignment>> {
        self.role_rows(
            "SELECT user_id, role, scope_call_id FROM role_assignments WHERE user_id = ?1 ORDER BY role, scope_call_id",
            [user.as_str()],
        )
    }

    pub fn all_roles(&self) -> StoreResult<Vec<RoleAssignment>> {
        self.role_rows("SELECT user_id, role, scope_call_id FROM role_assignments ORDER BY user_id, role, scope_call_id", [])
    }

    /// Users holding `role` globally or for `call`.
    pub fn holders_of(&self, role: Role, call: &CallId) -> StoreResult<Vec<UserId>> {
        let mut stmt = self.conn.prepare_cached(
            "SELECT DISTINCT user_id FROM role_assignments
             WHERE role = ?1 AND (scope_call_id IS NULL OR scope_call_id = ?2) ORDER BY user_id",
        )?;
        let rows = stmt.query_map(params![role.as_str(), call.as_str()], |r| r.get::<_, String>(0))?;
        Ok(rows.map(|r| r.map(UserId::new)).collect::<Result<_, _>>()?)
    }

    // calls

    pub fn insert_call(&self, c: &FundingCall) -> StoreResult<()> {
        self.conn.execute(
            "INSERT INTO calls (id, agency_type, total_budget, submission_deadline, doc) VALUES (?1, ?2, ?3, ?4, ?5)",
            params![
                c.id.as_str(),
                c.agency_type.as_str(),
                c.total_budget.0,
                ts_to_sql(c.schedule.submission_deadline),
                to_doc(c)
            ],
        )?;
        Ok(())
    }

    pub fn call(&self, id: &CallId) -> StoreResult<Option<FundingCall>> {
        self.doc("SELECT doc FROM calls WHERE id = ?1", [id.as_str()])
    }

    pub fn require_call(&self, id: &CallId) -> StoreResult<FundingCall> {
        self.call(id)?.ok_or_else(|| StoreError::not_found("call", id))
    }

    pub fn calls(&self) -> StoreResult<Vec<FundingCall>> {
        self.docs("SELECT doc FROM calls ORDER BY id", [])
    }

    pub fn mark_published(&self, id: &CallId, at: DateTime<Utc>) -> StoreResult<()> {
        let n = self.conn.execute(
            "UPDATE calls SET published_at = ?2 WHERE id = ?1 AND published_at IS NULL",
            params![id.as_str(), ts_to_sql(at)],
        )?;
        if n == 0 {
            return Err(StoreError::Conflict(format!("call {id} is already published or missing")));
        }
        Ok(())
    }

    pub fn published_at(&self, id: &CallId) -> StoreResult<Option<DateTime<Utc>>> {
        let s: Option<Option<String>> =
            self.conn.query_row("SELECT published_at FROM calls WHERE id = ?1", [id.as_str()], |r| r.get(0)).optional()?;
        match s {
            None => Err(StoreError::not_found("call", id)),
            Some(s) => Ok(s.map(|s| ts_from_sql(&s)).transpose()?),
        }
    }

    pub fn published_calls(&self) -> StoreResult<Vec<FundingCall>> {
        self.docs("SELECT doc FROM calls WHERE published_at IS NOT NULL ORDER BY id", [])
    }

    /// Filtered, paged call listing with live application counts.
    pub fn query_calls(&self, f: &CallFilter) -> StoreResult<CallPage> {
        let limit = f.limit.unwrap_or(DEFAULT_PAGE).clamp(1, MAX_PAGE);
        let offset = f.offset.unwrap_or(0);
        let filter = "FROM calls c
             WHERE (?1 IS NULL OR EXISTS (SELECT 1 FROM json_each(c.doc, '$.research_areas') a WHERE a.value = ?1))
               AND (?2 IS NULL OR c.total_budget >= ?2)
               AND (?3 IS NULL OR c.total_budget <= ?3)
               AND (?4 IS NULL OR c.submission_deadline >= ?4)
               AND (?5 IS NULL OR c.submission_deadline <= ?5)
               AND (?6 IS NULL OR c.agency_type = ?6)";
        let area = f.area.as_deref().map(|a| a.trim().to_lowercase());
        let args = params![
            area,
            f.min_amount,
            f.max_amount,
            f.deadline_from.map(ts_to_sql),
            f.deadline_to.map(ts_to_sql),
            f.agency_type.map(AgencyType::as_str),
        ];
        let total: u64 = self.conn.query_row(&format!("SELECT COUNT(*) {filter}"), args, |r| r.get(0))?;
        let sql = format!(
            "SELECT c.doc, c.published_at IS NOT NULL,
                    (SELECT COUNT(*) FROM proposals p
                     WHERE p.call_id = c.id AND p.state NOT IN ('DRAFT', 'WITHDRAWN'))
             {filter} ORDER BY c.submission_deadline, c.id LIMIT {limit} OFFSET {offset}"
        );
        let mut stmt = self.conn.prepare(&sql)?;
        let rows = stmt.query_map(args, |r| Ok((r.get::<_, String>(0)?, r.get::<_, bool>(1)?, r.get::<_, u64>(2)?)))?;
        let mut items = Vec::new();
        for row in rows {
            let (doc, published, application_count) = row?;
            items.push(CallSummary { call: from_doc(&doc)?, application_count, published });
        }
        Ok(CallPage { total, limit, offset, items })
    }

    // proposals

    fn write_members(&self, p: &Proposal) -> StoreResult<()> {
        self.conn.execute("DELETE FROM proposal_members WHERE proposal_id = ?1", [p.id.as_str()])?;
        let mut stmt = self.conn.prepare_cached(
            "INSERT OR IGNORE INTO proposal_members (proposal_id, user_id, member_role) VALUES (?1, ?2, ?3)",
        )?;
        stmt.execute(params![p.id.as_str(), p.pi_id.as_str(), "PI"])?;
        for co in &p.co_investigator_ids {
            stmt.execute(params![p.id.as_str(), co.as_str(), "CO_I"])?;
        }
        Ok(())
    }

    pub fn insert_proposal(&self, p: &Proposal) -> StoreResult<StoredProposal> {
        self.conn.execute(
            "INSERT INTO proposals (id, call_id, pi_id, state, version, submitted_at, doc) VALUES (?1, ?2, ?3, ?4, 1, ?5, ?6)",
            params![
                p.id.as_str(),
                p.call_id.as_str(),
                p.pi_id.as_str(),
                p.state.as_str(),
                p.submitted_at.map(ts_to_sql),
                to_doc(p)
            ],
        )?;
        self.write_members(p)?;
        Ok(StoredProposal { proposal: p.clone(), version: 1 })
    }

    fn proposal_from(&self, state: String, version: i64, doc: String) -> StoreResult<StoredProposal> {
        let mut proposal: Proposal = from_doc(&doc)?;
        proposal.state = state.parse().map_err(StoreError::Integrity)?;
        Ok(StoredProposal { proposal, version })
    }

    pub fn proposal(&self, id: &ProposalId) -> StoreResult<Option<StoredProposal>> {
        let row: Option<(String, i64, String)> = self
            .conn
            .query_row("SELECT state, version, doc FROM proposals WHERE id = ?1", [id.as_str()], |r| {
                Ok((r.get(0)?, r.get(1)?, r.get(2)?))
            })
            .optional()?;
        row.map(|(s, v, d)| self.proposal_from(s, v, d)).transpose()
    }

    pub fn require_proposal(&self, id: &ProposalId) -> StoreResult<StoredProposal> {
        self.proposal(id)?.ok_or_else(|| StoreError::not_found("proposal", id))
    }

    fn proposal_list(&self, sql: &str, args: impl rusqlite::Params) -> StoreResult<Vec<StoredProposal>> {
        let mut stmt = self.conn.prepare_cached(sql)?;
        let rows = stmt.query_map(args, |r| Ok((r.get(0)?, r.get(1)?, r.get(2)?)))?;
        let mut out = Vec::new();
        for row in rows {
            let (s, v, d) = row?;
            out.push(self.proposal_from(s, v, d)?);
        }
        Ok(out)
    }

    pub fn proposals_in_call(&self, call: &CallId) -> StoreResult<Vec<StoredProposal>> {
        self.proposal_list("SELECT state, version, doc FROM proposals WHERE call_id = ?1 ORDER BY id", [call.as_str()])
    }

    pub fn proposals(&self) -> StoreResult<Vec<StoredProposal>> {
        self.proposal_list("SELECT state, version, doc FROM proposals ORDER BY id", [])
    }

    /// Proposals where `user` is PI or co-investigator.
    pub fn proposals_of(&self, user: &UserId) -> StoreResult<Vec<StoredProposal>> {
        self.proposal_list(
            "SELECT p.state, p.version, p.doc FROM proposals p
             JOIN proposal_members m ON m.proposal_id = p.id WHERE m.user_id = ?1 ORDER BY p.id",
            [user.as_str()],
        )
    }

    /// Writes `p` if the stored version is still `expected`; returns the new version.
    pub fn update_proposal(&self, p: &Proposal, expected: i64) -> StoreResult<i64> {
        let n = self.conn.execute(
            "UPDATE proposals SET state = ?2, submitted_at = ?3, doc = ?4, version = version + 1
             WHERE id = ?1 AND version = ?5",
            params![p.id.as_str(), p.state.as_str(), p.submitted_at.map(ts_to_sql), to_doc(p), expected],
        )?;
        if n == 0 {
            return match self.proposal(&p.id)? {
                Some(_) => Err(StoreError::Conflict(format!("proposal {} changed since version {expected}", p.id))),
                None => Err(StoreError::not_found("proposal", &p.id)),
            };
        }
        self.write_members(p)?;
        Ok(expected + 1)
    }

    // assignments

    pub fn insert_assignment(&self, a: &AssignmentRecord) -> StoreResult<()> {
        self.conn.execute(
            &format!("INSERT INTO assignments ({ASSIGNMENT_COLUMNS}) VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)"),
            params![
                a.proposal_id.as_str(),
                a.reviewer_id.as_str(),
                a.call_id.as_str(),
                a.score,
                to_doc(&a.components),
                a.seq,
                ts_to_sql(a.assigned_at),
                a.quality_rating
            ],
        )?;
        Ok(())
    }

    fn assignment_list(&self, sql: &str, args: impl rusqlite::Params) -> StoreResult<Vec<AssignmentRecord>> {
        let mut stmt = self.conn.prepare_cached(sql)?;
        let rows = stmt.query_map(args, assignment_from_row)?;
        let mut out = Vec::new();
        for row in rows {
            let (mut a, components) = row?;
            a.components = from_doc(&components)?;
            out.push(a);
        }
        Ok(out)
    }

    pub fn assignments_for(&self, proposal: &ProposalId) -> StoreResult<Vec<AssignmentRecord>> {
        self.assignment_list(
            &format!("SELECT {ASSIGNMENT_COLUMNS} FROM assignments WHERE proposal_id = ?1 ORDER BY assigned_at, seq, reviewer_id"),
            [proposal.as_str()],
        )
    }

    pub fn assignments_in_call(&self, call: &CallId) -> StoreResult<Vec<AssignmentRecord>> {
        self.assignment_list(
            &format!("SELECT {ASSIGNMENT_COLUMNS} FROM assignments WHERE call_id = ?1 ORDER BY proposal_id, seq, reviewer_id"),
            [call.as_str()],
        )
    }

    pub fn assignments_of(&self, reviewer: &UserId) -> StoreResult<Vec<AssignmentRecord>> {
        self.assignment_list(
            &format!("SELECT {ASSIGNMENT_COLUMNS} FROM assignments WHERE reviewer_id = ?1 ORDER BY assigned_at, proposal_id"),
            [reviewer.as_str()],
        )
    }

    pub fn all_assignments(&self) -> StoreResult<Vec<AssignmentRecord>> {
        self.assignment_list(&format!("SELECT {ASSIGNMENT_COLUMNS} FROM assignments ORDER BY proposal_id, seq, reviewer_id"), [])
    }

    pub fn set_quality_rating(&self, proposal: &ProposalId, reviewer: &UserId, rating: u8) -> StoreResult<()> {
        let n = self.conn.execute(
            "UPDATE assignments SET quality_rating = ?3 WHERE proposal_id = ?1 AND reviewer_id = ?2",
            params![proposal.as_str(), reviewer.as_str(), rating],
        )?;
        if n == 0 {
            return Err(StoreError::not_found("assignment", format!("{proposal}/{reviewer}")));
        }
        Ok(())
    }

    /// Ratings of a reviewer's past reviews, oldest first.
    pub fn ratings_of(&self, reviewer: &UserId) -> StoreResult<Vec<u8>> {
        let mut stmt = self.conn.prepare_cached(
            "SELECT quality_rating FROM assignments WHERE reviewer_id = ?1 AND quality_rating IS NOT NULL
             ORDER BY assigned_at, proposal_id",
        )?;
        let rows = stmt.query_map([reviewer.as_str()], |r| r.get::<_, u8>(0))?;
        Ok(rows.collect::<Result<_, _>>()?)
    }

    // reviews

    pub fn insert_review(&self, r: &Review) -> StoreResult<()> {
        self.conn.execute(
            "INSERT INTO reviews (id, version, proposal_id, reviewer_id, submitted_at, doc) VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
            params![r.id.as_str(), r.version, r.proposal_id.as_str(), r.reviewer_id.as_str(), ts_to_sql(r.submitted_at), to_doc(r)],
        )?;
        Ok(())
    }

    /// Every stored version, oldest first.
    pub fn review_versions(&self, proposal: &ProposalId) -> StoreResult<Vec<Review>> {
        self.docs("SELECT doc FROM reviews WHERE proposal_id = ?1 ORDER BY id, version", [proposal.as_str()])
    }

    /// Highest version of each review on the proposal.
    pub fn current_reviews(&self, proposal: &ProposalId) -> StoreResult<Vec<Review>> {
        self.docs(
            "SELECT doc FROM reviews r WHERE proposal_id = ?1
               AND version = (SELECT MAX(version) FROM reviews WHERE id = r.id)
             ORDER BY submitted_at, id",
            [proposal.as_str()],
        )
    }

    pub fn review(&self, id: &ReviewId) -> StoreResult<Option<Review>> {
        self.doc("SELECT doc FROM reviews WHERE id = ?1 ORDER BY version DESC LIMIT 1", [id.as_str()])
    }

    pub fn all_reviews(&self) -> StoreResult<Vec<Review>> {
        self.docs("SELECT doc FROM reviews ORDER BY id, version", [])
    }

    // rebuttals, comments, decisions

    pub fn insert_rebuttal(&self, r: &Rebuttal) -> StoreResult<()> {
        self.conn.execute(
            "INSERT INTO rebuttals (id, proposal_id, author_id, review_id, created_at, doc) VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
            params![
                r.id.as_str(),
                r.proposal_id.as_str(),
                r.author_id.as_str(),
                r.parent_review_id.as_ref().map(ReviewId::as_str),
                ts_to_sql(r.created_at),
                to_doc(r)
            ],
        )?;
        Ok(())
    }

    pub fn rebuttals_for(&self, proposal: &ProposalId) -> StoreResult<Vec<Rebuttal>> {
        self.docs("SELECT doc FROM rebuttals WHERE proposal_id = ?1 ORDER BY created_at, id", [proposal.as_str()])
    }

    pub fn all_rebuttals(&self) -> StoreResult<Vec<Rebuttal>> {
        self.docs("SELECT doc FROM rebuttals ORDER BY id", [])
    }

    pub fn insert_comment(&self, c: &CommunityComment) -> StoreResult<()> {
        self.conn.execute(
            "INSERT INTO comments (id, proposal_id, author_id, created_at, doc) VALUES (?1, ?2, ?3, ?4, ?5)",
            params![c.id.as_str(), c.proposal_id.as_str(), c.author_id.as_str(), ts_to_sql(c.created_at), to_doc(c)],
        )?;
        Ok(())
    }

    pub fn comments_for(&self, proposal: &ProposalId) -> StoreResult<Vec<CommunityComment>> {
        self.docs("SELECT doc FROM comments WHERE proposal_id = ?1 ORDER BY created_at, id", [proposal.as_str()])
    }

    pub fn all_comments(&self) -> StoreResult<Vec<CommunityComment>> {
        self.docs("SELECT doc FROM comments ORDER BY id", [])
    }

    pub fn insert_decision(&self, d: &Decision) -> StoreResult<()> {
        self.conn.execute(
            "INSERT INTO decisions (proposal_id, decided_by, decided_at, doc) VALUES (?1, ?2, ?3, ?4)",
            params![d.proposal_id.as_str(), d.decided_by.as_str(), ts_to_sql(d.decided_at), to_doc(d)],
        )?;
        Ok(())
    }

    pub fn decision(&self, proposal: &ProposalId) -> StoreResult<Option<Decision>> {
        self.doc("SELECT doc FROM decisions WHERE proposal_id = ?1", [proposal.as_str()])
    }

    pub fn all_decisions(&self) -> StoreResult<Vec<Decision>> {
        self.docs("SELECT doc FROM decisions ORDER BY proposal_id", [])
    }

    // audit log

    pub fn append_audit(&self, e: &AuditEntry) -> StoreResult<()> {
        self.conn.execute(
            "INSERT INTO audit_log (proposal_id, kind, actor_id, timestamp, resulting_state) VALUES (?1, ?2, ?3, ?4, ?5)",
            params![e.proposal_id.as_str(), e.kind.as_str(), e.actor_id.as_str(), ts_to_sql(e.timestamp), e.resulting_state.as_str()],
        )?;
        Ok(())
    }

    fn audit_rows(&self, sql: &str, args: impl rusqlite::Params) -> StoreResult<Vec<AuditEntry>> {
        let mut stmt = self.conn.prepare_cached(sql)?;
        let rows = stmt.query_map(args, |r| {
            Ok((
                r.get::<_, String>(0)?,
                r.get::<_, String>(1)?,
                r.get::<_, String>(2)?,
                r.get::<_, String>(3)?,
                r.get::<_, String>(4)?,
            ))
        })?;
        let mut out = Vec::new();
        for row in rows {
            let (proposal, kind, actor, at, state) = row?;
            out.push(AuditEntry {
                proposal_id: ProposalId::new(proposal),
                kind: kind.parse::<EventKind>().map_err(StoreError::Integrity)?,
                actor_id: UserId::new(actor),
                timestamp: ts_from_sql(&at)?,
                resulting_state: state.parse::<ProposalState>().map_err(StoreError::Integrity)?,
            });
        }
        Ok(out)
    }

    pub fn audit_for(&self, proposal: &ProposalId) -> StoreResult<Vec<AuditEntry>> {
        self.audit_rows(
            "SELECT proposal_id, kind, actor_id, timestamp, resulting_state FROM audit_log WHERE proposal_id = ?1 ORDER BY seq",
            [proposal.as_str()],
        )
    }

    pub fn audit_all(&self) -> StoreResult<Vec<AuditEntry>> {
        self.audit_rows("SELECT proposal_id, kind, actor_id, timestamp, resulting_state FROM audit_log ORDER BY seq", [])
    }

    // conflicts of interest and reviewer profiles

    pub fn declare_conflict(&self, c: &CoiDeclaration) -> StoreResult<()> {
        self.conn.execute(
            "INSERT OR IGNORE INTO coi_declarations (reviewer_id, proposal_id, reason) VALUES (?1, ?2, ?3)",
            params![c.reviewer_id.as_str(), c.proposal_id.as_str(), c.reason],
        )?;
        Ok(())
    }

    pub fn conflicts_of(&self, reviewer: &UserId) -> StoreResult<BTreeSet<ProposalId>> {
        let mut stmt = self.conn.prepare_cached("SELECT proposal_id FROM coi_declarations WHERE reviewer_id = ?1")?;
        let rows = stmt.query_map([reviewer.as_str()], |r| r.get::<_, String>(0))?;
        Ok(rows.map(|r| r.map(ProposalId::new)).collect::<Result<_, _>>()?)
    }

    pub fn all_conflicts(&self) -> StoreResult<Vec<CoiDeclaration>> {
        let mut stmt =
            self.conn.prepare_cached("SELECT reviewer_id, proposal_id, reason FROM coi_declarations ORDER BY reviewer_id, proposal_id")?;
        let rows = stmt.query_map([], |r| {
            Ok(CoiDeclaration {
                reviewer_id: UserId::new(r.get::<_, String>(0)?),
                proposal_id: ProposalId::new(r.get::<_, String>(1)?),
                reason: r.get(2)?,
            })
        })?;
        Ok(rows.collect::<Result<_, _>>()?)
    }

    pub fn upsert_profile(&self, p: &ExpertiseProfile) -> StoreResult<()> {
        self.conn.execute(
            "INSERT INTO reviewer_profiles (reviewer_id, doc) VALUES (?1, ?2)
             ON CONFLICT (reviewer_id) DO UPDATE SET doc = excluded.doc",
            params![p.reviewer_id.as_str(), to_doc(p)],
        )?;
        Ok(())
    }

    pub fn profile(&self, reviewer: &UserId) -> StoreResult<Option<ExpertiseProfile>> {
        self.doc("SELECT doc FROM reviewer_profiles WHERE reviewer_id = ?1", [reviewer.as_str()])
    }

    pub fn profiles(&self) -> StoreResult<Vec<ExpertiseProfile>> {
        self.docs("SELECT doc FROM reviewer_profiles ORDER BY reviewer_id", [])
    }

    // integrity

    /// Rows whose foreign keys do not resolve. Zero on a healthy store.
    pub fn foreign_key_violations(&self) -> StoreResult<usize> {
        let mut stmt = self.conn.prepare("PRAGMA foreign_key_check")?;
        let n = stmt.query_map([], |_| Ok(()))?.count();
        Ok(n)
    }

    pub fn table_counts(&self) -> StoreResult<BTreeMap<&'static str, u64>> {
        const TABLES: [&str; 14] = [
            "institutions",
            "users",
            "role_assignments",
            "calls",
            "proposals",
            "proposal_members",
            "assignments",
            "reviews",
            "rebuttals",
            "comments",
            "decisions",
            "audit_log",
            "coi_declarations",
            "reviewer_profiles",
        ];
        TABLES
            .into_iter()
            .map(|t| Ok((t, self.conn.query_row(&format!("SELECT COUNT(*) FROM {t}"), [], |r| r.get(0))?)))
            .collect()
    }

    /// Runs raw SQL. For maintenance tooling and tests.
    pub fn execute_raw(&self, sql: &str) -> StoreResult<usize> {
        Ok(self.conn.execute(sql, [])?)
    }
}
