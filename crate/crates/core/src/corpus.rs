//! Deterministic synthetic dataset: generation, loading, dumping, and a
//! scripted run of the review cycle over it.
//!
//! A corpus is one JSON document. Generated corpora carry the base entities
//! (institutions, users, calls, submitted proposals, reviewer profiles). A
//! dump of a live store uses the same format and adds the optional sections
//! (assignments, reviews, rebuttals, comments, decisions, audit log), so it
//! doubles as a backup that [`load`] restores.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::access::{Grant, Principal};
use crate::auth::PasswordPolicy;
use crate::matching::{ExpertiseProfile, MatchWeights};
use crate::model::{
    AgencyType, BudgetCategory, BudgetItem, CallId, CommunityComment, Criterion, Decision, FundingCall, Institution,
    InstitutionId, Milestone, Money, ProjectWindow, Proposal, ProposalId, Rebuttal, Review, ReviewVisibility, Role,
    RoleAssignment, UserAccount, UserId, Weight, RESEARCH_AREAS,
};
use crate::platform::{Platform, PlatformError, PlatformResult, ReviewInput};
use crate::store::{schema_head, AssignmentRecord, CoiDeclaration, Store, StoreError};
use crate::workflow::{replay, AuditEntry, CallSchedule, EventKind, ProposalState};

pub const FORMAT: &str = "grantdesk-corpus";
pub const FORMAT_VERSION: u32 = 1;
/// Password of every generated account.
pub const SYNTHETIC_PASSWORD: &str = "synthetic-password";
/// The corpus shipped with the crate: `CorpusSpec::default()`, generated.
pub const BUNDLED: &str = include_str!("../data/corpus.json");

const ZIPF_EXPONENT: f64 = 1.07;
/// Days from a call's submission deadline to each later stage.
const STAGE_DAYS: [i64; 5] = [14, 21, 28, 35, 42];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("infeasible corpus spec: {0}")]
    InfeasibleSpec(String),
    #[error("corpus targets schema {found} but the store is at {expected}")]
    SchemaMismatch { expected: u32, found: u32 },
    #[error("not a {FORMAT} v{FORMAT_VERSION} document: {0}")]
    UnknownFormat(String),
    #[error("content hash does not match the manifest")]
    HashMismatch,
    #[error("manifest counts {declared:?} do not match the content {actual:?}")]
    CountMismatch { declared: Box<CorpusCounts>, actual: Box<CorpusCounts> },
    #[error("{0}")]
    Integrity(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("invalid corpus JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CorpusError {
    pub fn code(&self) -> &'static str {
        match self {
            CorpusError::InfeasibleSpec(_) => "INFEASIBLE_SPEC",
            CorpusError::SchemaMismatch { .. } | CorpusError::UnknownFormat(_) => "SCHEMA_MISMATCH",
            CorpusError::HashMismatch => "HASH_MISMATCH",
            CorpusError::CountMismatch { .. } => "COUNT_MISMATCH",
            CorpusError::Integrity(_) => "INTEGRITY_VIOLATION",
            CorpusError::Store(e) => e.code(),
            CorpusError::Json(_) => "INVALID_JSON",
            CorpusError::Io(_) => "IO_ERROR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub seed: u64,
    pub institutions: usize,
    /// Everyone: one admin, one representative per call, the reviewer pool and researchers.
    pub users: usize,
    pub calls: usize,
    pub proposals_per_call: usize,
    pub reviewers_pool: usize,
    /// Research areas drawn from, at most the controlled vocabulary size.
    pub area_vocabulary: usize,
    pub keyword_vocabulary: usize,
    /// Every call's schedule lies inside this window.
    pub window: DateWindow,
    pub reviewers_per_proposal: u32,
    pub max_load: u32,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            seed: 20_260_101,
            institutions: 5,
            users: 40,
            calls: 2,
            proposals_per_call: 10,
            reviewers_pool: 12,
            area_vocabulary: 12,
            keyword_vocabulary: 48,
            window: DateWindow {
                start: NaiveDate::from_ymd_opt(2026, 1, 1).expect("valid date"),
                end: NaiveDate::from_ymd_opt(2026, 12, 31).expect("valid date"),
            },
            reviewers_per_proposal: 3,
            max_load: 5,
        }
    }
}

impl CorpusSpec {
    fn researchers(&self) -> usize {
        self.users.saturating_sub(1 + self.calls + self.reviewers_pool)
    }

    pub fn check(&self) -> Result<(), CorpusError> {
        let fail = |m: String| Err(CorpusError::InfeasibleSpec(m));
        let counts = [
            ("institutions", self.institutions),
            ("users", self.users),
            ("calls", self.calls),
            ("proposals_per_call", self.proposals_per_call),
            ("reviewers_pool", self.reviewers_pool),
            ("area_vocabulary", self.area_vocabulary),
            ("keyword_vocabulary", self.keyword_vocabulary),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, n)| *n == 0) {
            return fail(format!("{name} must be at least 1"));
        }
        if self.researchers() == 0 {
            return fail(format!(
                "{} users leave no researchers after 1 admin, {} representatives and {} reviewers",
                self.users, self.calls, self.reviewers_pool
            ));
        }
        if self.area_vocabulary > RESEARCH_AREAS.len() {
            return fail(format!("area_vocabulary is capped at {}", RESEARCH_AREAS.len()));
        }
        if self.keyword_vocabulary > KEYWORDS.len() {
            return fail(format!("keyword_vocabulary is capped at {}", KEYWORDS.len()));
        }
        if self.reviewers_per_proposal < 2 || self.max_load < 1 {
            return fail("need at least 2 reviewers per proposal and a load cap of at least 1".into());
        }
        // Reviewers sharing the PI's institution are excluded, so the pool is
        // spread over the other institutions.
        let eligible = if self.institutions == 1 { 0 } else { self.reviewers_pool - self.reviewers_pool.div_ceil(self.institutions) };
        if (self.reviewers_per_proposal as usize) > eligible {
            return fail(format!("only {eligible} reviewers are conflict-free for a proposal, {} needed", self.reviewers_per_proposal));
        }
        let demand = self.proposals_per_call * self.reviewers_per_proposal as usize;
        let capacity = eligible * self.max_load as usize;
        if demand > capacity {
            return fail(format!("{demand} review slots per call exceed the conflict-free capacity {capacity}"));
        }
        let span = (self.window.end - self.window.start).num_days();
        if span < STAGE_DAYS[4] + 30 {
            return fail(format!("a {span}-day window cannot hold a call schedule"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusCounts {
    pub institutions: usize,
    pub users: usize,
    pub calls: usize,
    pub proposals: usize,
    pub profiles: usize,
    pub role_assignments: usize,
    pub assignments: usize,
    pub reviews: usize,
    pub rebuttals: usize,
    pub comments: usize,
    pub decisions: usize,
    pub audit_log: usize,
    pub conflicts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub format_version: u32,
    pub schema_version: u32,
    /// Present when the corpus was generated rather than dumped.
    pub spec: Option<CorpusSpec>,
    pub counts: CorpusCounts,
    /// Hex SHA-256 of the serialized body (everything but the manifest).
    pub content_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusUser {
    #[serde(flatten)]
    pub account: UserAccount,
    pub roles: Vec<Grant>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublishedMark {
    pub call_id: CallId,
    pub published_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusBody {
    pub institutions: Vec<Institution>,
    pub users: Vec<CorpusUser>,
    pub calls: Vec<FundingCall>,
    pub proposals: Vec<Proposal>,
    pub profiles: Vec<ExpertiseProfile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conflicts: Vec<CoiDeclaration>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assignments: Vec<AssignmentRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reviews: Vec<Review>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rebuttals: Vec<Rebuttal>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub comments: Vec<CommunityComment>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub decisions: Vec<Decision>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub audit_log: Vec<AuditEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub published: Vec<PublishedMark>,
}

impl CorpusBody {
    pub fn counts(&self) -> CorpusCounts {
        CorpusCounts {
            institutions: self.institutions.len(),
            users: self.users.len(),
            calls: self.calls.len(),
            proposals: self.proposals.len(),
            profiles: self.profiles.len(),
            role_assignments: self.users.iter().map(|u| u.roles.len()).sum(),
            assignments: self.assignments.len(),
            reviews: self.reviews.len(),
            rebuttals: self.rebuttals.len(),
            comments: self.comments.len(),
            decisions: self.decisions.len(),
            audit_log: self.audit_log.len(),
            conflicts: self.conflicts.len(),
        }
    }

    fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("corpus body serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub manifest: Manifest,
    #[serde(flatten)]
    pub body: CorpusBody,
}

impl Corpus {
    /// Wraps a body in a fresh manifest.
    pub fn seal(body: CorpusBody, spec: Option<CorpusSpec>) -> Self {
        let manifest = Manifest {
            format: FORMAT.into(),
            format_version: FORMAT_VERSION,
            schema_version: schema_head(),
            spec,
            counts: body.counts(),
            content_hash: body.hash(),
        };
        Corpus { manifest, body }
    }

    /// Recomputes counts and hash after an edit.
    pub fn reseal(self) -> Self {
        Corpus::seal(self.body, self.manifest.spec)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("corpus serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, CorpusError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        Corpus::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        Ok(std::fs::write(path, self.to_json())?)
    }

    pub fn bundled() -> Self {
        Corpus::from_json(BUNDLED).expect("bundled corpus parses")
    }

    /// Format, schema version, counts and hash all agree with the content.
    pub fn verify(&self) -> Result<(), CorpusError> {
        let m = &self.manifest;
        if m.format != FORMAT || m.format_version != FORMAT_VERSION {
            return Err(CorpusError::UnknownFormat(format!("{} v{}", m.format, m.format_version)));
        }
        if m.schema_version != schema_head() {
            return Err(CorpusError::SchemaMismatch { expected: schema_head(), found: m.schema_version });
        }
        let actual = self.body.counts();
        if actual != m.counts {
            return Err(CorpusError::CountMismatch { declared: Box::new(m.counts.clone()), actual: Box::new(actual) });
        }
        if self.body.hash() != m.content_hash {
            return Err(CorpusError::HashMismatch);
        }
        Ok(())
    }
}

// generation

const KEYWORDS: [&str; 80] = [
    "graph", "inference", "sampling", "optimization", "sensor", "protein", "climate", "network", "privacy", "imaging",
    "language", "policy", "simulation", "turbulence", "catalysis", "genome", "learning", "vision", "robust",
    "scalable", "causal", "bayesian", "spectral", "quantum", "topology", "entropy", "diffusion", "control",
    "estimation", "microbiome", "lattice", "polymer", "ocean", "soil", "urban", "energy", "battery", "photonics",
    "plasma", "galaxy", "neutrino", "synapse", "cortex", "vaccine", "cohort", "survey", "labor", "market",
    "curriculum", "literacy", "verification", "compiler", "cryptography", "fairness", "explainability", "benchmark",
    "dataset", "annotation", "retrieval", "translation", "speech", "planning", "manipulation", "swarm", "wetland",
    "forest", "drought", "aerosol", "glacier", "isotope", "enzyme", "ligand", "membrane", "crystal", "alloy",
    "superconductor", "semiconductor", "manifold", "combinatorics", "probability",
];

const SYLLABLES: [&str; 24] = [
    "ka", "lo", "mi", "ren", "ta", "vo", "sel", "dra", "nu", "pe", "qui", "bar", "zen", "ho", "li", "mar", "tov",
    "ess", "ari", "bel", "dun", "fi", "gor", "wyn",
];

const PLACES: [&str; 12] = [
    "Northvale", "Eastmere", "Westbrook", "Southholm", "Highfield", "Lowmarsh", "Greystone", "Brightwater",
    "Ashcombe", "Redcliff", "Oakhurst", "Silverlea",
];

const INSTITUTION_KINDS: [&str; 4] = ["Institute of Technology", "University", "Research Centre", "College"];
const AGENCY_KINDS: [&str; 4] = ["Science Foundation", "Research Council", "Innovation Agency", "Trust"];

struct Zipf {
    index: WeightedIndex<f64>,
}

impl Zipf {
    fn new(n: usize) -> Self {
        let weights: Vec<f64> = (1..=n).map(|k| 1.0 / (k as f64).powf(ZIPF_EXPONENT)).collect();
        Zipf { index: WeightedIndex::new(weights).expect("non-empty positive weights") }
    }

    /// `k` distinct ranks, most popular first in draw order.
    fn distinct(&self, rng: &mut ChaCha8Rng, k: usize, n: usize) -> Vec<usize> {
        let k = k.min(n);
        let mut picked = Vec::with_capacity(k);
        while picked.len() < k {
            let r = self.index.sample(rng);
            if !picked.contains(&r) {
                picked.push(r);
            }
        }
        picked
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

fn word(rng: &mut ChaCha8Rng, syllables: usize) -> String {
    (0..syllables).map(|_| SYLLABLES[rng.random_range(0..SYLLABLES.len())]).collect()
}

fn midnight(d: NaiveDate) -> DateTime<Utc> {
    Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0).expect("midnight exists"))
}

fn round_to(x: i64, step: i64) -> i64 {
    (x / step).max(1) * step
}

struct Generator<'a> {
    spec: &'a CorpusSpec,
    rng: ChaCha8Rng,
    areas: Vec<&'static str>,
    keywords: Vec<&'static str>,
    area_zipf: Zipf,
    keyword_zipf: Zipf,
}

impl<'a> Generator<'a> {
    fn new(spec: &'a CorpusSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        // The popularity order of the vocabulary depends on the seed.
        let mut areas = RESEARCH_AREAS.to_vec();
        areas.shuffle(&mut rng);
        areas.truncate(spec.area_vocabulary);
        let mut keywords = KEYWORDS.to_vec();
        keywords.shuffle(&mut rng);
        keywords.truncate(spec.keyword_vocabulary);
        Generator {
            area_zipf: Zipf::new(areas.len()),
            keyword_zipf: Zipf::new(keywords.len()),
            spec,
            rng,
            areas,
            keywords,
        }
    }

    fn pick_areas(&mut self, lo: usize, hi: usize) -> BTreeSet<String> {
        let k = self.rng.random_range(lo..=hi);
        let n = self.areas.len();
        self.area_zipf.distinct(&mut self.rng, k, n).into_iter().map(|i| self.areas[i].to_owned()).collect()
    }

    fn pick_keywords(&mut self, lo: usize, hi: usize) -> BTreeSet<String> {
        let k = self.rng.random_range(lo..=hi);
        let n = self.keywords.len();
        self.keyword_zipf.distinct(&mut self.rng, k, n).into_iter().map(|i| self.keywords[i].to_owned()).collect()
    }

    fn institutions(&mut self) -> Vec<Institution> {
        let countries = ["NL", "DE", "FR", "SE", "PT", "CA", "JP", "AU"];
        (0..self.spec.institutions)
            .map(|i| {
                let place = if i < PLACES.len() { PLACES[i].to_owned() } else { capitalize(&word(&mut self.rng, 3)) };
                let kind = INSTITUTION_KINDS[self.rng.random_range(0..INSTITUTION_KINDS.len())];
                Institution {
                    id: InstitutionId::new(format!("inst-{:03}", i + 1)),
                    name: format!("{place} {kind}"),
                    country: countries[self.rng.random_range(0..countries.len())].to_owned(),
                }
            })
            .collect()
    }

    fn user(&mut self, i: usize, institution: &Institution, created_at: DateTime<Utc>) -> UserAccount {
        let first = capitalize(&word(&mut self.rng, 2));
        let last = capitalize(&word(&mut self.rng, 3));
        let salt: [u8; 16] = self.rng.random();
        let domain = institution.name.split_whitespace().next().unwrap_or("inst").to_lowercase();
        UserAccount {
            id: UserId::new(format!("usr-{:04}", i + 1)),
            email: format!("{}.{}.{}@{domain}.example", first.to_lowercase(), last.to_lowercase(), i + 1),
            name: format!("{first} {last}"),
            password_digest: Some(PasswordPolicy::fast().hash_with_salt_bytes(SYNTHETIC_PASSWORD, &salt)),
            institution_id: institution.id.clone(),
            research_areas: BTreeSet::new(),
            keywords: BTreeSet::new(),
            orcid: None,
            created_at,
        }
    }

    fn criteria(&mut self) -> Vec<Criterion> {
        let scale_max = if self.rng.random_bool(0.5) { 10 } else { 5 };
        let crit = |name: &str, description: &str, w: (i64, i64)| Criterion {
            name: name.into(),
            description: description.into(),
            weight: Weight::from_ratio(w.0, w.1),
            scale_min: 1,
            scale_max,
        };
        if self.rng.random_bool(0.5) {
            vec![crit("merit", "Scientific merit and originality", (1, 2)), crit("feasibility", "Plan, team and resources", (1, 2))]
        } else {
            vec![
                crit("merit", "Scientific merit and originality", (2, 5)),
                crit("feasibility", "Plan, team and resources", (3, 10)),
                crit("impact", "Expected benefit beyond the field", (3, 10)),
            ]
        }
    }

    fn call(&mut self, i: usize) -> FundingCall {
        let spec = self.spec;
        let span = (spec.window.end - spec.window.start).num_days();
        let latest_open = span - STAGE_DAYS[4] - 1;
        let submission_day = self.rng.random_range(30.min(latest_open)..=latest_open);
        let submission = midnight(spec.window.start) + Duration::days(submission_day);
        let discussion = self.rng.random_bool(0.75);
        let schedule = CallSchedule {
            submission_deadline: submission,
            review_deadline: submission + Duration::days(STAGE_DAYS[0]),
            rebuttal_deadline: submission + Duration::days(STAGE_DAYS[1]),
            discussion_deadline: discussion.then(|| submission + Duration::days(STAGE_DAYS[2])),
            decision_deadline: submission + Duration::days(STAGE_DAYS[3]),
            publication_date: submission + Duration::days(STAGE_DAYS[4]),
        };
        let project_start = schedule.publication_date.date_naive() + Duration::days(30);
        let project_years = self.rng.random_range(2..=3);
        let agency_type = [AgencyType::Government, AgencyType::Private, AgencyType::International][self.rng.random_range(0..3)];
        let place = capitalize(&word(&mut self.rng, 3));
        let kind = AGENCY_KINDS[self.rng.random_range(0..AGENCY_KINDS.len())];
        let research_areas = self.pick_areas(2, 4);
        let theme = research_areas.iter().next().cloned().unwrap_or_default().replace('-', " ");
        FundingCall {
            id: CallId::new(format!("call-{:02}", i + 1)),
            agency_name: format!("{place} {kind}"),
            agency_type,
            title: format!("{} frontiers {}", capitalize(&theme), schedule.submission_deadline.format("%Y")),
            description: format!("Open competition for projects in {}.", research_areas.iter().cloned().collect::<Vec<_>>().join(", ")),
            total_budget: Money(round_to(self.rng.random_range(300_000..=1_500_000), 10_000)),
            research_areas,
            schedule,
            project_window: ProjectWindow {
                start: project_start,
                end: project_start + Duration::days(365 * project_years),
            },
            criteria_template: self.criteria(),
            reviewers_per_proposal: spec.reviewers_per_proposal,
            max_assignments_per_reviewer: spec.max_load,
            budget_public: self.rng.random_bool(0.25),
            review_visibility: if i % 3 == 2 { ReviewVisibility::Signed } else { ReviewVisibility::Anonymized },
            match_weights: MatchWeights::default(),
        }
    }

    fn budget(&mut self, ask: i64) -> Vec<BudgetItem> {
        let mut categories = BudgetCategory::ALL.to_vec();
        categories.shuffle(&mut self.rng);
        let n = self.rng.random_range(2..=4);
        let units = ask / 1_000;
        let mut cuts: Vec<i64> = (0..n - 1).map(|_| self.rng.random_range(1..units)).collect();
        cuts.sort_unstable();
        cuts.dedup();
        let mut bounds = vec![0];
        bounds.extend(cuts);
        bounds.push(units);
        bounds
            .windows(2)
            .zip(categories)
            .map(|(w, category)| BudgetItem {
                category,
                description: format!("{} costs", capitalize(&format!("{category:?}").to_lowercase())),
                amount: Money((w[1] - w[0]) * 1_000),
            })
            .collect()
    }

    fn proposal(&mut self, call: &FundingCall, j: usize, pi: &UserAccount, co: Vec<UserId>) -> Proposal {
        let call_areas: Vec<&String> = call.research_areas.iter().collect();
        let mut areas = BTreeSet::new();
        for _ in 0..self.rng.random_range(1..=2) {
            areas.insert(call_areas[self.rng.random_range(0..call_areas.len())].clone());
        }
        let keywords = self.pick_keywords(2, 4);
        let kw: Vec<&String> = keywords.iter().collect();
        let ask_fraction = self.rng.random_range(0.08..0.30);
        let ask = round_to((call.total_budget.0 as f64 * ask_fraction) as i64, 1_000).max(10_000);
        let budget_items = self.budget(ask);
        let area = areas.iter().next().cloned().unwrap_or_default().replace('-', " ");
        let title = format!("{} {} for {}", capitalize(kw[0]), kw[kw.len() - 1], area);
        let w = &call.project_window;
        let total_days = (w.end - w.start).num_days();
        let phases = self.rng.random_range(2..=3);
        let timeline = (0..phases)
            .map(|k| Milestone {
                name: format!("Phase {}", k + 1),
                start: w.start + Duration::days(total_days * k / phases),
                end: w.start + Duration::days(total_days * (k + 1) / phases - 1),
            })
            .collect();
        let lead_days = self.rng.random_range(1..=13);
        let lead_secs = self.rng.random_range(0..86_400);
        Proposal {
            id: ProposalId::new(format!("prop-{}-{:03}", &call.id.as_str()[5..], j + 1)),
            call_id: call.id.clone(),
            pi_id: pi.id.clone(),
            co_investigator_ids: co,
            abstract_text: format!(
                "We study {} in {area}, combining {} with {} to answer open questions.",
                kw[0],
                kw.get(1).map(|s| s.as_str()).unwrap_or("theory"),
                kw[kw.len() - 1]
            ),
            research_goals: format!("Establish how {} shapes {}.", kw[0], area),
            methods: format!("Mixed methods: {}.", kw.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")),
            title,
            research_areas: areas,
            keywords,
            timeline,
            requested_total: Money(budget_items.iter().map(|b| b.amount.0).sum()),
            budget_items,
            state: ProposalState::Submitted,
            submitted_at: Some(
                call.schedule.submission_deadline - Duration::days(lead_days) - Duration::seconds(lead_secs),
            ),
        }
    }

    fn generate(mut self) -> CorpusBody {
        let spec = self.spec;
        let created_at = midnight(spec.window.start);
        let institutions = self.institutions();
        let mut users: Vec<CorpusUser> = Vec::new();
        let mut profiles = Vec::new();
        let calls: Vec<FundingCall> = (0..spec.calls).map(|i| self.call(i)).collect();

        // Layout: admin, one representative per call, reviewers, researchers.
        let n_inst = institutions.len();
        for i in 0..spec.users {
            let reviewer_slot = i.checked_sub(1 + spec.calls).filter(|k| *k < spec.reviewers_pool);
            let inst = match reviewer_slot {
                Some(k) => &institutions[k % n_inst],
                None => &institutions[self.rng.random_range(0..n_inst)],
            };
            let mut account = self.user(i, inst, created_at);
            let mut roles = vec![Grant::global(Role::Community)];
            if i == 0 {
                roles.push(Grant::global(Role::Admin));
            } else if i <= spec.calls {
                roles.push(Grant::global(Role::AgencyRep));
                roles.push(Grant::for_call(Role::AgencyRep, calls[i - 1].id.clone()));
            } else if reviewer_slot.is_some() {
                roles.push(Grant::global(Role::Reviewer));
            }
            account.research_areas = self.pick_areas(1, 3);
            account.keywords = self.pick_keywords(3, 6);
            if reviewer_slot.is_some() {
                let prior = (self.rng.random_range(0.3..0.9) * 100.0_f64).round() / 100.0;
                profiles.push(ExpertiseProfile::new(account.id.clone(), &account.research_areas, &account.keywords, Some(prior)));
            }
            users.push(CorpusUser { account, roles });
        }

        let first_researcher = 1 + spec.calls + spec.reviewers_pool;
        let researchers: Vec<usize> = (first_researcher..spec.users).collect();
        let mut proposals = Vec::new();
        for call in &calls {
            for j in 0..spec.proposals_per_call {
                let pi = researchers[self.rng.random_range(0..researchers.len())];
                // Co-investigators come from the PI's institution.
                let colleagues: Vec<usize> = researchers
                    .iter()
                    .copied()
                    .filter(|&r| r != pi && users[r].account.institution_id == users[pi].account.institution_id)
                    .collect();
                let n_co = self.rng.random_range(0..=2).min(colleagues.len());
                let mut co = Vec::new();
                for k in rand::seq::index::sample(&mut self.rng, colleagues.len(), n_co).into_vec() {
                    co.push(colleagues[k]);
                }
                co.sort_unstable();
                let co_ids: Vec<UserId> = co.iter().map(|&k| users[k].account.id.clone()).collect();
                let p = self.proposal(call, j, &users[pi].account, co_ids);
                for member in std::iter::once(pi).chain(co) {
                    let g = Grant::for_call(Role::Pi, call.id.clone());
                    if !users[member].roles.contains(&g) {
                        users[member].roles.push(g);
                    }
                }
                proposals.push(p);
            }
        }
        for u in &mut users {
            u.roles.sort();
        }
        CorpusBody { institutions, users, calls, proposals, profiles, ..CorpusBody::default() }
    }
}

/// Pure function of the spec: the same spec yields the same bytes.
pub fn generate(spec: &CorpusSpec) -> Result<Corpus, CorpusError> {
    spec.check()?;
    Ok(Corpus::seal(Generator::new(spec).generate(), Some(spec.clone())))
}

// load and dump

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub counts: CorpusCounts,
    /// SUBMIT entries created for submitted proposals that came without an audit trail.
    pub synthesized_audit: usize,
}

/// Checks the manifest, then ingests everything in one transaction.
/// Any failure leaves the store untouched.
pub fn load(corpus: &Corpus, store: &Store) -> Result<IngestReport, CorpusError> {
    corpus.verify()?;
    store.require_current()?;
    let body = &corpus.body;
    let calls: BTreeMap<&CallId, &FundingCall> = body.calls.iter().map(|c| (&c.id, c)).collect();
    let mut trails: BTreeMap<&ProposalId, Vec<&AuditEntry>> = BTreeMap::new();
    for e in &body.audit_log {
        trails.entry(&e.proposal_id).or_default().push(e);
    }
    let mut synthesized = Vec::new();
    for p in &body.proposals {
        let call = calls
            .get(&p.call_id)
            .ok_or_else(|| CorpusError::Integrity(format!("proposal {} names unknown call {}", p.id, p.call_id)))?;
        match trails.get(&p.id) {
            Some(entries) => {
                let state = replay(entries.iter().copied(), call)
                    .map_err(|e| CorpusError::Integrity(format!("audit trail of {} does not replay: {e}", p.id)))?;
                if state != p.state {
                    return Err(CorpusError::Integrity(format!("{} is {} but its audit trail ends in {state}", p.id, p.state)));
                }
            }
            None if p.state == ProposalState::Draft => {}
            None if p.state == ProposalState::Submitted => {
                let at = p.submitted_at.ok_or_else(|| CorpusError::Integrity(format!("{} is SUBMITTED without submitted_at", p.id)))?;
                synthesized.push(AuditEntry {
                    proposal_id: p.id.clone(),
                    kind: EventKind::Submit,
                    actor_id: p.pi_id.clone(),
                    timestamp: at,
                    resulting_state: ProposalState::Submitted,
                });
            }
            None => return Err(CorpusError::Integrity(format!("{} is {} but has no audit trail", p.id, p.state))),
        }
    }

    store.transaction(|tx| -> Result<(), CorpusError> {
        for i in &body.institutions {
            tx.insert_institution(i)?;
        }
        for u in &body.users {
            tx.insert_user(&u.account)?;
        }
        for c in &body.calls {
            tx.insert_call(c)?;
        }
        for u in &body.users {
            for g in &u.roles {
                tx.grant(&RoleAssignment { user_id: u.account.id.clone(), role: g.role, scope: g.scope.clone() })?;
            }
        }
        for p in &body.proposals {
            tx.insert_proposal(p)?;
        }
        for p in &body.profiles {
            tx.require_user(&p.reviewer_id)?;
            tx.upsert_profile(p)?;
        }
        for c in &body.conflicts {
            tx.declare_conflict(c)?;
        }
        for a in &body.assignments {
            tx.insert_assignment(a)?;
            if let Some(r) = a.quality_rating {
                tx.set_quality_rating(&a.proposal_id, &a.reviewer_id, r)?;
            }
        }
        for r in &body.reviews {
            tx.insert_review(r)?;
        }
        for r in &body.rebuttals {
            tx.insert_rebuttal(r)?;
        }
        for c in &body.comments {
            tx.insert_comment(c)?;
        }
        for d in &body.decisions {
            tx.insert_decision(d)?;
        }
        for e in body.audit_log.iter().chain(&synthesized) {
            tx.append_audit(e)?;
        }
        for m in &body.published {
            tx.mark_published(&m.call_id, m.published_at)?;
        }
        let dangling = tx.foreign_key_violations()?;
        if dangling > 0 {
            return Err(CorpusError::Integrity(format!("{dangling} dangling references")));
        }
        Ok(())
    })?;
    Ok(IngestReport { counts: body.counts(), synthesized_audit: synthesized.len() })
}

pub fn load_file(path: impl AsRef<Path>, store: &Store) -> Result<IngestReport, CorpusError> {
    load(&Corpus::read(path)?, store)
}

/// The whole store as a corpus; loading it into an empty store restores it.
pub fn dump(store: &Store) -> Result<Corpus, CorpusError> {
    let body = store.read(|tx| -> Result<CorpusBody, StoreError> {
        let mut roles: BTreeMap<UserId, Vec<Grant>> = BTreeMap::new();
        for ra in tx.all_roles()? {
            roles.entry(ra.user_id.clone()).or_default().push(Grant::from(&ra));
        }
        let mut users: Vec<CorpusUser> = tx
            .users()?
            .into_iter()
            .map(|account| {
                let mut roles = roles.remove(&account.id).unwrap_or_default();
                roles.sort();
                CorpusUser { account, roles }
            })
            .collect();
        users.sort_by(|a, b| a.account.id.cmp(&b.account.id));
        let mut calls = tx.calls()?;
        calls.sort_by(|a, b| a.id.cmp(&b.id));
        let mut published = Vec::new();
        for c in &calls {
            if let Some(at) = tx.published_at(&c.id)? {
                published.push(PublishedMark { call_id: c.id.clone(), published_at: at });
            }
        }
        let mut proposals: Vec<Proposal> = tx.proposals()?.into_iter().map(|s| s.proposal).collect();
        proposals.sort_by(|a, b| a.id.cmp(&b.id));
        let mut institutions = tx.institutions()?;
        institutions.sort_by(|a, b| a.id.cmp(&b.id));
        let mut profiles = tx.profiles()?;
        profiles.sort_by(|a, b| a.reviewer_id.cmp(&b.reviewer_id));
        let mut conflicts = tx.all_conflicts()?;
        conflicts.sort_by(|a, b| (&a.reviewer_id, &a.proposal_id).cmp(&(&b.reviewer_id, &b.proposal_id)));
        let mut assignments = tx.all_assignments()?;
        assignments.sort_by(|a, b| (&a.proposal_id, a.seq, &a.reviewer_id).cmp(&(&b.proposal_id, b.seq, &b.reviewer_id)));
        let mut reviews = tx.all_reviews()?;
        reviews.sort_by(|a, b| (&a.proposal_id, a.submitted_at, &a.id, a.version).cmp(&(&b.proposal_id, b.submitted_at, &b.id, b.version)));
        let mut rebuttals = tx.all_rebuttals()?;
        rebuttals.sort_by(|a, b| (&a.proposal_id, a.created_at, &a.id).cmp(&(&b.proposal_id, b.created_at, &b.id)));
        let mut comments = tx.all_comments()?;
        comments.sort_by(|a, b| (&a.proposal_id, a.created_at, &a.id).cmp(&(&b.proposal_id, b.created_at, &b.id)));
        let mut decisions = tx.all_decisions()?;
        decisions.sort_by(|a, b| a.proposal_id.cmp(&b.proposal_id));
        Ok(CorpusBody {
            institutions,
            users,
            calls,
            proposals,
            profiles,
            conflicts,
            assignments,
            reviews,
            rebuttals,
            comments,
            decisions,
            // Append order is the authoritative order.
            audit_log: tx.audit_all()?,
            published,
        })
    })?;
    Ok(Corpus::seal(body, None))
}

// scripted review cycle

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub calls: usize,
    pub assignments: usize,
    pub reviews: usize,
    pub revisions: usize,
    pub rebuttals: usize,
    pub comments: usize,
    pub funded: usize,
    pub not_funded: usize,
}

fn score_for(rng: &mut ChaCha8Rng, quality: f64, c: &Criterion) -> i32 {
    let span = (c.scale_max - c.scale_min) as f64;
    let x = (0.7 * quality + 0.3 * rng.random::<f64>()) * span;
    (c.scale_min + x.round() as i32).clamp(c.scale_min, c.scale_max)
}

const REVIEW_OPENERS: [&str; 4] = [
    "The proposal is clearly written.",
    "The aims are ambitious.",
    "The methodology is described in some detail.",
    "The team has relevant experience.",
];
const REVIEW_CONCERNS: [&str; 4] = [
    "The evaluation plan needs more detail.",
    "Risks are acknowledged but not mitigated.",
    "The budget justification is thin.",
    "Related work could be covered better.",
];

/// Runs every stage for the given calls on a frozen clock: assignment,
/// reviews, rebuttals and revisions, community comments, agency ratings,
/// decisions by recommendation, and publication. Scores follow a latent
/// quality per proposal, so outcomes are non-trivial but reproducible.
pub fn simulate(platform: &Platform, calls: &[CallId], seed: u64) -> PlatformResult<SimulationReport> {
    let clock = platform.clock();
    if !clock.is_frozen() {
        return Err(PlatformError::BadRequest("simulation needs a frozen clock".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SimulationReport::default();
    let mut calls: Vec<FundingCall> = calls.iter().map(|c| platform.call(c)).collect::<PlatformResult<_>>()?;
    calls.sort_by(|a, b| (a.schedule.submission_deadline, &a.id).cmp(&(b.schedule.submission_deadline, &b.id)));
    let community: Vec<UserId> = platform.store().read(|tx| tx.users())?.into_iter().map(|u| u.id).collect();

    for call in calls {
        let s = call.schedule.clone();
        let rep = platform.representative_of(&call.id)?;
        clock.set(s.submission_deadline);
        let run = platform.assign_call(&rep, &call.id)?;
        report.assignments += run.assignments.len();
        report.calls += 1;

        let proposals: Vec<Proposal> =
            platform.store().read(|tx| tx.proposals_in_call(&call.id))?.into_iter().map(|p| p.proposal).collect();
        let quality: BTreeMap<ProposalId, f64> = proposals.iter().map(|p| (p.id.clone(), rng.random::<f64>())).collect();

        for (k, a) in run.assignments.iter().enumerate() {
            clock.set(s.submission_deadline + Duration::hours(1 + k as i64));
            let q = quality[&a.proposal_id];
            let scores = call.criteria_template.iter().map(|c| (c.name.clone(), score_for(&mut rng, q, c))).collect();
            let mut comment = REVIEW_OPENERS[rng.random_range(0..REVIEW_OPENERS.len())].to_owned();
            for _ in 0..rng.random_range(0..=3) {
                comment.push(' ');
                comment.push_str(REVIEW_CONCERNS[rng.random_range(0..REVIEW_CONCERNS.len())]);
            }
            let reviewer = platform.principal(&a.reviewer_id)?;
            let input = ReviewInput { criterion_scores: scores, criterion_comments: BTreeMap::new(), overall_comment: comment };
            platform.submit_review(&reviewer, &a.proposal_id, input)?;
            report.reviews += 1;
            // Agency ratings track how well the reviewer matched, plus noise.
            let rating = 1 + (4.0 * (0.6 * a.score + 0.4 * rng.random::<f64>())).round() as u8;
            let review_id = platform
                .store()
                .read(|tx| tx.current_reviews(&a.proposal_id))?
                .into_iter()
                .find(|r| r.reviewer_id == a.reviewer_id)
                .map(|r| r.id)
                .expect("review just stored");
            platform.rate_review(&rep, &review_id, rating.clamp(1, 5))?;
        }

        platform.sweep_deadlines(Some(&call.id), Some(s.review_deadline))?;
        clock.set(s.review_deadline + Duration::hours(12));
        for p in &proposals {
            if !rng.random_bool(0.6) {
                continue;
            }
            let pi = platform.principal(&p.pi_id)?;
            platform.submit_rebuttal(&pi, &p.id, "We thank the reviewers and clarify the evaluation plan and risks.", None)?;
            report.rebuttals += 1;
            let reviews = platform.store().read(|tx| tx.current_reviews(&p.id))?;
            for r in reviews {
                if !rng.random_bool(0.4) {
                    continue;
                }
                let step = if rng.random_bool(0.7) { 1 } else { -1 };
                let target = rng.random_range(0..call.criteria_template.len());
                let c = &call.criteria_template[target];
                let mut scores = r.criterion_scores.clone();
                if let Some(v) = scores.get_mut(&c.name) {
                    *v = (*v + step).clamp(c.scale_min, c.scale_max);
                }
                let input = ReviewInput {
                    criterion_scores: scores,
                    criterion_comments: r.criterion_comments.clone(),
                    overall_comment: format!("{} Updated after the rebuttal.", r.overall_comment),
                };
                platform.revise_review(&platform.principal(&r.reviewer_id)?, &r.id, input)?;
                report.revisions += 1;
            }
        }

        platform.sweep_deadlines(Some(&call.id), Some(s.rebuttal_deadline))?;
        if call.discussion_enabled() {
            clock.set(s.rebuttal_deadline + Duration::hours(6));
            for p in &proposals {
                for _ in 0..rng.random_range(0..=2) {
                    let author = &community[rng.random_range(0..community.len())];
                    let who = platform.principal(author)?;
                    platform.post_comment(&who, &p.id, "Interesting direction; the data plan deserves attention.")?;
                    report.comments += 1;
                }
            }
        }

        clock.set(s.deliberation_ends());
        for d in platform.decide_call(&rep, &call.id)? {
            match d.outcome {
                crate::model::Outcome::Funded => report.funded += 1,
                crate::model::Outcome::NotFunded => report.not_funded += 1,
            }
        }
        clock.set(s.publication_date);
        platform.publish_call(&rep, &call.id)?;
    }
    Ok(report)
}

/// Convenience for demos: the first principal holding `role`, if any.
pub fn first_with_role(platform: &Platform, role: Role) -> PlatformResult<Option<Principal>> {
    let holder = platform
        .store()
        .read(|tx| tx.all_roles())?
        .into_iter()
        .filter(|r| r.role == role)
        .map(|r| r.user_id)
        .min();
    holder.map(|id| platform.principal(&id)).transpose()
}
