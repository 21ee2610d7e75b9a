use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use seminar_vns::formats::{self, AssignmentRow, LoadOptions, MatrixOptions};
use seminar_vns::model::{Imbalance, Outcome};
use seminar_vns::neighborhoods::{applicable_kinds, exclusions, Exclusion};
use seminar_vns::search::{AlternativeCount, Vns};
use seminar_vns::wishes::{self, TeamWish};
use seminar_vns::{Archive, Assignment, Instance, NeighborhoodKind, SearchConfig};

use crate::error::ApiError;
use crate::store::{Job, JobState};
use crate::Service;

pub const API_VERSION: u32 = 1;

type Shared = State<Arc<Service>>;
type ApiResult<T> = Result<T, ApiError>;

/// JSON extractor reporting malformed bodies in the common error shape.
pub struct Body<T>(T);

impl<S, T> FromRequest<S> for Body<T>
where
    Json<T>: FromRequest<S, Rejection = JsonRejection>,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: axum::extract::Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(e) => Err(ApiError::new(e.status(), "invalid_request", e.body_text())),
        }
    }
}

pub fn routes() -> Router<Arc<Service>> {
    Router::new()
        .route("/version", get(version))
        .route("/instances", post(create_instance))
        .route("/instances/{id}", get(get_instance))
        .route("/jobs", post(create_job).get(list_jobs))
        .route("/jobs/{id}", get(get_job).delete(cancel_job))
        .route("/jobs/{id}/archive", get(archive_page))
        .route("/jobs/{id}/frontier", get(frontier))
        .route("/jobs/{id}/filter", post(filter))
        .route("/jobs/{id}/commit", post(commit))
}

async fn version() -> Json<Value> {
    Json(json!({ "api_version": API_VERSION, "format_version": formats::FORMAT_VERSION }))
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum InstanceFormat {
    #[default]
    Toml,
    Matrix,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NewInstance {
    #[serde(default)]
    format: InstanceFormat,
    content: String,
    /// Rescale rows that do not sum to `w_max` instead of rejecting them.
    #[serde(default)]
    normalize: bool,
    /// Matrix only: required row sum, inferred from the first row if absent.
    w_max: Option<u32>,
    /// Matrix only: one-based topic numbers per staff member.
    groups: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Serialize)]
struct InstanceSummary {
    id: String,
    n: usize,
    m: usize,
    w_max: u32,
    min_students: Vec<u32>,
    max_students: Vec<u32>,
    /// One-based topic numbers per staff member.
    groups: Vec<Vec<usize>>,
    students: Vec<String>,
    topics: Vec<String>,
    staff: Vec<String>,
    applicable: Vec<NeighborhoodKind>,
    excluded: Vec<Exclusion>,
}

fn summary(id: &str, inst: &Instance) -> InstanceSummary {
    InstanceSummary {
        id: id.to_string(),
        n: inst.n(),
        m: inst.m(),
        w_max: inst.w_max(),
        min_students: inst.min_students().to_vec(),
        max_students: inst.max_students().to_vec(),
        groups: inst.groups().iter().map(|g| g.iter().map(|j| j + 1).collect()).collect(),
        students: (0..inst.n()).map(|i| inst.student_label(i).into_owned()).collect(),
        topics: (0..inst.m()).map(|j| inst.topic_label(j).into_owned()).collect(),
        staff: (0..inst.num_groups()).map(|k| inst.staff_label(k).into_owned()).collect(),
        applicable: applicable_kinds(inst),
        excluded: exclusions(inst),
    }
}

async fn create_instance(State(svc): Shared, Body(req): Body<NewInstance>) -> ApiResult<(StatusCode, Json<InstanceSummary>)> {
    let parsed = match req.format {
        InstanceFormat::Toml => {
            if req.w_max.is_some() || req.groups.is_some() {
                return Err(ApiError::invalid("invalid_request", "`w_max` and `groups` apply to matrix uploads only"));
            }
            formats::parse_instance(&req.content, LoadOptions { normalize: req.normalize })
        }
        InstanceFormat::Matrix => {
            let groups = req
                .groups
                .map(|gs| {
                    gs.into_iter()
                        .map(|g| g.into_iter().map(|j| j.checked_sub(1)).collect::<Option<Vec<_>>>())
                        .collect::<Option<Vec<_>>>()
                        .ok_or_else(|| ApiError::invalid("invalid_instance", "topic numbers in `groups` start at 1"))
                })
                .transpose()?;
            formats::import_matrix(&req.content, &MatrixOptions { w_max: req.w_max, normalize: req.normalize, groups })
        }
    };
    let inst = parsed.map_err(|e| ApiError::invalid("invalid_instance", e.to_string()))?;
    let (id, inst) = svc.store().add_instance(inst).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok((StatusCode::CREATED, Json(summary(&id, &inst))))
}

async fn get_instance(State(svc): Shared, Path(id): Path<String>) -> ApiResult<Json<InstanceSummary>> {
    let inst = svc.store().instance(&id).ok_or_else(|| ApiError::not_found("instance", &id))?;
    Ok(Json(summary(&id, &inst)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NewJob {
    instance: String,
    #[serde(default)]
    config: SearchConfig,
}

#[derive(Debug, Serialize)]
struct JobView {
    id: String,
    instance: String,
    config: SearchConfig,
    #[serde(flatten)]
    state: JobState,
    evaluations: u64,
    max_evaluations: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<ResultSummary>,
}

#[derive(Debug, Serialize)]
struct ResultSummary {
    best_utility: i64,
    alternatives: usize,
    points: usize,
    cap_hit: bool,
    wall_time_ms: Option<f64>,
}

fn view(job: &Job) -> JobView {
    let state = job.state();
    let result = job.result().filter(|_| state == JobState::Done).map(|(archive, report)| ResultSummary {
        best_utility: report.best_utility,
        alternatives: archive.len(),
        points: report.alternatives.len(),
        cap_hit: report.cap_hit,
        wall_time_ms: report.wall_time_ms,
    });
    JobView {
        id: job.id.clone(),
        instance: job.instance_id.clone(),
        config: job.config.clone(),
        state,
        evaluations: job.evaluations(),
        max_evaluations: job.config.max_evaluations,
        result,
    }
}

async fn create_job(State(svc): Shared, Body(req): Body<NewJob>) -> ApiResult<(StatusCode, Json<JobView>)> {
    let inst = svc.store().instance(&req.instance).ok_or_else(|| ApiError::not_found("instance", &req.instance))?;
    // rejects bad budgets and inapplicable neighborhood choices up front
    Vns::new(&inst, &req.config).map_err(|e| ApiError::invalid("invalid_config", e.to_string()))?;
    let job = svc
        .store()
        .add_job(&req.instance, inst, req.config)
        .map_err(|e| ApiError::internal(e.to_string()))?;
    svc.clone().schedule(job.clone());
    Ok((StatusCode::CREATED, Json(view(&job))))
}

async fn list_jobs(State(svc): Shared) -> Json<Vec<JobView>> {
    Json(svc.store().jobs().iter().map(|j| view(j)).collect())
}

fn find_job(svc: &Service, id: &str) -> ApiResult<Arc<Job>> {
    svc.store().job(id).ok_or_else(|| ApiError::not_found("job", id))
}

async fn get_job(State(svc): Shared, Path(id): Path<String>) -> ApiResult<Json<JobView>> {
    let job = find_job(&svc, &id)?;
    Ok(Json(view(&job)))
}

async fn cancel_job(State(svc): Shared, Path(id): Path<String>) -> ApiResult<Json<JobView>> {
    let job = find_job(&svc, &id)?;
    if job.state().is_finished() {
        return Err(ApiError::conflict("job_finished", format!("job `{id}` already finished")));
    }
    job.request_cancel();
    // a queued job never reaches the search loop, so fail it here
    if job.state() == JobState::Queued {
        svc.fail(&job, "cancelled".into());
    }
    Ok(Json(view(&job)))
}

fn finished_archive(svc: &Service, id: &str) -> ApiResult<(Arc<Job>, Arc<Archive>)> {
    let job = find_job(svc, id)?;
    let state = job.state();
    if state != JobState::Done {
        let what = match state {
            JobState::Failed { reason } => format!("job `{id}` failed: {reason}"),
            _ => format!("job `{id}` has not finished yet"),
        };
        return Err(ApiError::conflict("job_not_done", what));
    }
    let archive = job.result().map(|(a, _)| a.clone()).ok_or_else(|| ApiError::internal("result missing"))?;
    Ok((job, archive))
}

#[derive(Debug, Serialize)]
struct Alternative {
    /// One-based position in the archive.
    index: usize,
    #[serde(flatten)]
    outcome: Outcome,
    topic_of: Vec<usize>,
    rows: Vec<AssignmentRow>,
}

fn alternative(inst: &Instance, index: usize, outcome: Outcome, asg: &Assignment) -> Alternative {
    let rows = (0..inst.n())
        .map(|i| {
            let j = asg.topic(i);
            AssignmentRow {
                student: i + 1,
                name: inst.student_label(i).into_owned(),
                topic: j + 1,
                topic_name: inst.topic_label(j).into_owned(),
                lecturer: inst.staff_label(inst.group_of(j)).into_owned(),
            }
        })
        .collect();
    Alternative { index: index + 1, outcome, topic_of: asg.one_based(), rows }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PageQuery {
    #[serde(default)]
    offset: usize,
    limit: Option<usize>,
    /// Restrict to one outcome point; give both.
    utility: Option<i64>,
    imbalance: Option<String>,
}

const DEFAULT_PAGE: usize = 50;
const MAX_PAGE: usize = 1000;

#[derive(Debug, Serialize)]
struct Page {
    /// Alternatives matching the query before paging.
    total: usize,
    offset: usize,
    limit: usize,
    items: Vec<Alternative>,
}

fn parse_imbalance(text: &str) -> ApiResult<Imbalance> {
    let bad = || ApiError::invalid("invalid_request", format!("imbalance `{text}` is not a fraction like 1/3"));
    let (n, d) = text.split_once('/').unwrap_or((text, "1"));
    let (n, d): (i64, i64) = (n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?);
    if d == 0 {
        return Err(bad());
    }
    Ok(Imbalance::new(n, d))
}

async fn archive_page(State(svc): Shared, Path(id): Path<String>, Query(q): Query<PageQuery>) -> ApiResult<Json<Page>> {
    let (job, archive) = finished_archive(&svc, &id)?;
    let point = match (q.utility, q.imbalance.as_deref()) {
        (None, None) => None,
        (Some(u), Some(b)) => Some(Outcome::new(u, parse_imbalance(b)?)),
        _ => return Err(ApiError::invalid("invalid_request", "give both `utility` and `imbalance` to select a point")),
    };
    let limit = q.limit.unwrap_or(DEFAULT_PAGE).min(MAX_PAGE);
    let selected: Vec<(usize, (Outcome, &Assignment))> = archive
        .alternatives()
        .enumerate()
        .filter(|(_, (o, _))| point.is_none_or(|p| *o == p))
        .collect();
    let items = selected
        .iter()
        .skip(q.offset)
        .take(limit)
        .map(|&(k, (o, a))| alternative(&job.instance, k, o, a))
        .collect();
    Ok(Json(Page { total: selected.len(), offset: q.offset, limit, items }))
}

#[derive(Debug, Serialize)]
struct FrontierPoint {
    #[serde(flatten)]
    count: AlternativeCount,
    imbalance_decimal: f64,
}

async fn frontier(State(svc): Shared, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let (_, archive) = finished_archive(&svc, &id)?;
    let points: Vec<FrontierPoint> = archive
        .count_alternatives()
        .into_iter()
        .map(|c| FrontierPoint { imbalance_decimal: c.outcome.imbalance_f64(), count: c })
        .collect();
    Ok(Json(json!({ "mode": archive.mode(), "points": points })))
}

/// A student given by one-based number or by name.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum StudentRef {
    Number(usize),
    Name(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilterRequest {
    wishes: Vec<Vec<StudentRef>>,
}

fn resolve(inst: &Instance, who: &StudentRef) -> ApiResult<usize> {
    match who {
        StudentRef::Number(i) if (1..=inst.n()).contains(i) => Ok(i - 1),
        StudentRef::Number(i) => {
            Err(ApiError::invalid("invalid_wish", format!("student {i} does not exist (n = {})", inst.n())))
        }
        StudentRef::Name(name) => (0..inst.n())
            .find(|&i| inst.student_label(i) == name.as_str())
            .ok_or_else(|| ApiError::invalid("invalid_wish", format!("no student named `{name}`"))),
    }
}

async fn filter(State(svc): Shared, Path(id): Path<String>, Body(req): Body<FilterRequest>) -> ApiResult<Json<Value>> {
    let (job, archive) = finished_archive(&svc, &id)?;
    let inst = &job.instance;
    let team_wishes = req
        .wishes
        .iter()
        .map(|w| {
            let students = w.iter().map(|s| resolve(inst, s)).collect::<ApiResult<Vec<_>>>()?;
            TeamWish::new(inst, students).map_err(|e| ApiError::invalid("invalid_wish", e.to_string()))
        })
        .collect::<ApiResult<Vec<_>>>()?;
    let result = wishes::filter(&archive, &team_wishes);
    let items: Vec<Alternative> = result
        .matches
        .iter()
        .map(|m| {
            let (o, a) = archive.get(m.index).expect("index from the same archive");
            alternative(inst, m.index, o, a)
        })
        .collect();
    Ok(Json(json!({ "total": items.len(), "items": items, "satisfiable": result.satisfiable })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CommitRequest {
    /// One-based alternative number as listed by the archive endpoint.
    index: usize,
    #[serde(default)]
    anonymize: bool,
}

async fn commit(State(svc): Shared, Path(id): Path<String>, Body(req): Body<CommitRequest>) -> ApiResult<Json<Value>> {
    let (job, archive) = finished_archive(&svc, &id)?;
    let k = req.index.checked_sub(1).filter(|&k| k < archive.len()).ok_or_else(|| {
        ApiError::invalid("index_out_of_range", format!("alternative {} not in 1..={}", req.index, archive.len()))
    })?;
    let (_, asg) = archive.get(k).expect("checked index");
    let text = formats::solution_to_string(&job.instance, asg, req.anonymize).map_err(|e| ApiError::internal(e.to_string()))?;
    svc.store().save_commit(&job, k, &text).map_err(|e| ApiError::internal(e.to_string()))?;
    let body: Value = serde_json::from_str(&text).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(body))
}
