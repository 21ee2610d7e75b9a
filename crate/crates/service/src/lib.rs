//! Local HTTP API for the seminar assignment solver.
//!
//! Upload an instance, start search jobs, page through the stored optimal
//! alternatives, filter them by team wishes and export the chosen
//! assignment. All bodies are JSON; errors look like
//! `{"error": {"code": "not_found", "message": "..."}}`.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/version` | API and file format versions |
//! | POST | `/instances` | upload a TOML instance or a weight matrix |
//! | GET | `/instances/{id}` | summary and applicable moves |
//! | POST | `/jobs` | start a search on an instance |
//! | GET | `/jobs` | all jobs |
//! | GET | `/jobs/{id}` | state and progress |
//! | DELETE | `/jobs/{id}` | cancel a queued or running job |
//! | GET | `/jobs/{id}/archive?offset&limit&utility&imbalance` | page of alternatives |
//! | GET | `/jobs/{id}/frontier` | outcome points with alternative counts |
//! | POST | `/jobs/{id}/filter` | alternatives meeting all team wishes |
//! | POST | `/jobs/{id}/commit` | export one alternative |
//!
//! Student, topic and alternative numbers in requests and responses start
//! at 1, matching the file formats.

mod api;
mod error;
mod store;

use std::io;
use std::net::SocketAddr;
use std::ops::ControlFlow;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::Router;
use seminar_vns::search::{run_vns_with_progress, SearchError};
use tokio::sync::Semaphore;

pub use api::API_VERSION;
pub use error::ApiError;
pub use store::{Job, JobState, Store};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    /// Jobs searching at the same time.
    pub parallel_jobs: usize,
    /// Built web frontend served for every path the API does not claim.
    pub static_dir: Option<PathBuf>,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig { data_dir: data_dir.into(), parallel_jobs: 1, static_dir: None }
    }
}

/// Shared state behind every handler.
pub struct Service {
    store: Store,
    workers: Arc<Semaphore>,
}

impl Service {
    /// Opens the data directory and requeues jobs left waiting by a
    /// previous process. Must be called inside a Tokio runtime.
    pub fn open(config: &ServiceConfig) -> io::Result<Arc<Service>> {
        let recovered = Store::open(&config.data_dir)?;
        let service = Arc::new(Service {
            store: recovered.store,
            workers: Arc::new(Semaphore::new(config.parallel_jobs.max(1))),
        });
        for job in recovered.requeue {
            service.clone().schedule(job);
        }
        Ok(service)
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    /// Queues `job` behind the worker limit.
    pub(crate) fn schedule(self: Arc<Self>, job: Arc<Job>) {
        tokio::spawn(async move {
            let Ok(_permit) = self.workers.clone().acquire_owned().await else { return };
            if job.cancel_requested() || job.state().is_finished() {
                return;
            }
            if job.transition(JobState::Running) {
                let _ = self.store.persist_job(&job);
            }
            let service = self.clone();
            let worker = job.clone();
            let outcome = tokio::task::spawn_blocking(move || service.run(&worker)).await;
            if let Err(e) = outcome {
                self.fail(&job, format!("worker crashed: {e}"));
            }
        });
    }

    fn run(&self, job: &Job) {
        let result = run_vns_with_progress(&job.instance, &job.config, |done| {
            job.set_progress(done);
            if job.cancel_requested() {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        match result {
            Ok((archive, mut report)) => {
                report.timestamp_unix = SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs());
                if let Err(e) = self.store.save_result(job, &archive, &report) {
                    self.fail(job, format!("could not store the result: {e}"));
                    return;
                }
                job.set_result(archive, report);
                if job.transition(JobState::Done) {
                    let _ = self.store.persist_job(job);
                }
            }
            Err(SearchError::Cancelled { .. }) => self.fail(job, "cancelled".into()),
            Err(e) => self.fail(job, e.to_string()),
        }
    }

    pub(crate) fn fail(&self, job: &Job, reason: String) {
        if job.transition(JobState::Failed { reason }) {
            let _ = self.store.persist_job(job);
        }
    }
}

/// The API routes, plus the static frontend when configured.
pub fn router(service: Arc<Service>, static_dir: Option<PathBuf>) -> Router {
    let api = api::routes().with_state(service);
    match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

/// Serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> io::Result<()> {
    let service = Service::open(&config)?;
    let app = router(service, config.static_dir.clone());
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
