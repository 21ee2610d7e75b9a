//! Instances and jobs, mirrored to flat files under the data directory:
//!
//! ```text
//! instances/<id>.toml
//! jobs/<id>.json              id, instance, config, state
//! results/<id>.archive.json
//! results/<id>.report.json
//! results/<id>.commit-<k>.json
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock, RwLock};

use serde::{Deserialize, Serialize};
use seminar_vns::formats::{self, LoadOptions};
use seminar_vns::{Archive, Instance, RunReport, SearchConfig};

/// Lifecycle of a job. Transitions only go forward:
/// queued, running, then done or failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed { reason: String },
}

impl JobState {
    pub fn is_finished(&self) -> bool {
        matches!(self, JobState::Done | JobState::Failed { .. })
    }
}

pub struct Job {
    pub id: String,
    pub instance_id: String,
    pub instance: Arc<Instance>,
    pub config: SearchConfig,
    state: Mutex<JobState>,
    progress: AtomicU64,
    cancel: AtomicBool,
    result: OnceLock<(Arc<Archive>, RunReport)>,
}

impl Job {
    pub fn state(&self) -> JobState {
        self.state.lock().unwrap().clone()
    }

    pub fn evaluations(&self) -> u64 {
        self.progress.load(Ordering::Acquire)
    }

    pub(crate) fn set_progress(&self, evaluations: u64) {
        self.progress.fetch_max(evaluations, Ordering::AcqRel);
    }

    pub fn cancel_requested(&self) -> bool {
        self.cancel.load(Ordering::Acquire)
    }

    pub(crate) fn request_cancel(&self) {
        self.cancel.store(true, Ordering::Release);
    }

    pub fn result(&self) -> Option<&(Arc<Archive>, RunReport)> {
        self.result.get()
    }

    /// Moves to `next` unless the job already finished. Returns whether the
    /// state changed.
    pub(crate) fn transition(&self, next: JobState) -> bool {
        let mut state = self.state.lock().unwrap();
        if state.is_finished() || *state == next {
            return false;
        }
        *state = next;
        true
    }

    pub(crate) fn set_result(&self, archive: Archive, report: RunReport) {
        let _ = self.result.set((Arc::new(archive), report));
    }
}

#[derive(Serialize, Deserialize)]
struct JobFile {
    format_version: u32,
    id: String,
    instance: String,
    config: SearchConfig,
    #[serde(flatten)]
    state: JobState,
    evaluations: u64,
}

pub struct Store {
    dir: PathBuf,
    next_id: AtomicU64,
    instances: RwLock<BTreeMap<String, Arc<Instance>>>,
    jobs: RwLock<BTreeMap<String, Arc<Job>>>,
}

/// What [`Store::open`] found on disk.
pub struct Recovered {
    pub store: Store,
    /// Jobs that were queued when the service stopped.
    pub requeue: Vec<Arc<Job>>,
}

fn id_number(id: &str) -> u64 {
    id[1..].parse().unwrap_or(0)
}

fn stems(dir: &Path, suffix: &str) -> io::Result<Vec<String>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if let Some(stem) = name.strip_suffix(suffix) {
            if !stem.contains('.') {
                out.push(stem.to_string());
            }
        }
    }
    out.sort_by_key(|s| id_number(s));
    Ok(out)
}

fn invalid_data(path: &Path, e: impl std::fmt::Display) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", path.display()))
}

impl Store {
    /// Opens or creates the data directory and reloads its contents.
    /// Finished jobs keep their results, queued jobs are returned for
    /// requeueing and jobs that were running are marked failed.
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Recovered> {
        let dir = dir.into();
        for sub in ["instances", "jobs", "results"] {
            fs::create_dir_all(dir.join(sub))?;
        }
        let store = Store {
            dir,
            next_id: AtomicU64::new(1),
            instances: RwLock::new(BTreeMap::new()),
            jobs: RwLock::new(BTreeMap::new()),
        };
        let mut max_id = 0;
        for id in stems(&store.dir.join("instances"), ".toml")? {
            let path = store.instance_path(&id);
            let inst = formats::load_instance(&path, LoadOptions::default()).map_err(|e| invalid_data(&path, e))?;
            max_id = max_id.max(id_number(&id));
            store.instances.write().unwrap().insert(id, Arc::new(inst));
        }
        let mut requeue = Vec::new();
        for id in stems(&store.dir.join("jobs"), ".json")? {
            let path = store.job_path(&id);
            let text = fs::read_to_string(&path)?;
            let file: JobFile = serde_json::from_str(&text).map_err(|e| invalid_data(&path, e))?;
            max_id = max_id.max(id_number(&id));
            let Some(instance) = store.instance(&file.instance) else {
                return Err(invalid_data(&path, format!("unknown instance `{}`", file.instance)));
            };
            let mut state = file.state;
            let job = Job {
                id: file.id,
                instance_id: file.instance,
                instance,
                config: file.config,
                state: Mutex::new(JobState::Queued),
                progress: AtomicU64::new(0),
                cancel: AtomicBool::new(false),
                result: OnceLock::new(),
            };
            match state {
                JobState::Done => match store.load_result(&job) {
                    Ok((archive, report)) => {
                        job.set_progress(report.evaluations);
                        job.set_result(archive, report);
                    }
                    Err(e) => state = JobState::Failed { reason: format!("result files unreadable: {e}") },
                },
                JobState::Running => {
                    job.set_progress(file.evaluations);
                    state = JobState::Failed { reason: "interrupted by a service restart".into() };
                }
                JobState::Failed { .. } => job.set_progress(file.evaluations),
                JobState::Queued => {}
            }
            *job.state.lock().unwrap() = state;
            let job = Arc::new(job);
            store.persist_job(&job)?;
            if job.state() == JobState::Queued {
                requeue.push(job.clone());
            }
            store.jobs.write().unwrap().insert(id, job);
        }
        store.next_id.store(max_id + 1, Ordering::SeqCst);
        Ok(Recovered { store, requeue })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn fresh_id(&self, prefix: char) -> String {
        format!("{prefix}{}", self.next_id.fetch_add(1, Ordering::SeqCst))
    }

    fn instance_path(&self, id: &str) -> PathBuf {
        self.dir.join("instances").join(format!("{id}.toml"))
    }

    fn job_path(&self, id: &str) -> PathBuf {
        self.dir.join("jobs").join(format!("{id}.json"))
    }

    pub fn result_path(&self, id: &str, what: &str) -> PathBuf {
        self.dir.join("results").join(format!("{id}.{what}.json"))
    }

    pub fn add_instance(&self, inst: Instance) -> io::Result<(String, Arc<Instance>)> {
        let id = self.fresh_id('i');
        write_atomic(&self.instance_path(&id), &formats::instance_to_string(&inst))?;
        let inst = Arc::new(inst);
        self.instances.write().unwrap().insert(id.clone(), inst.clone());
        Ok((id, inst))
    }

    pub fn instance(&self, id: &str) -> Option<Arc<Instance>> {
        self.instances.read().unwrap().get(id).cloned()
    }

    pub fn add_job(&self, instance_id: &str, instance: Arc<Instance>, config: SearchConfig) -> io::Result<Arc<Job>> {
        let job = Arc::new(Job {
            id: self.fresh_id('j'),
            instance_id: instance_id.to_string(),
            instance,
            config,
            state: Mutex::new(JobState::Queued),
            progress: AtomicU64::new(0),
            cancel: AtomicBool::new(false),
            result: OnceLock::new(),
        });
        self.persist_job(&job)?;
        self.jobs.write().unwrap().insert(job.id.clone(), job.clone());
        Ok(job)
    }

    pub fn job(&self, id: &str) -> Option<Arc<Job>> {
        self.jobs.read().unwrap().get(id).cloned()
    }

    pub fn jobs(&self) -> Vec<Arc<Job>> {
        let mut jobs: Vec<Arc<Job>> = self.jobs.read().unwrap().values().cloned().collect();
        jobs.sort_by_key(|j| id_number(&j.id));
        jobs
    }

    pub fn persist_job(&self, job: &Job) -> io::Result<()> {
        let file = JobFile {
            format_version: formats::FORMAT_VERSION,
            id: job.id.clone(),
            instance: job.instance_id.clone(),
            config: job.config.clone(),
            state: job.state(),
            evaluations: job.evaluations(),
        };
        let mut text = serde_json::to_string_pretty(&file).map_err(io::Error::other)?;
        text.push('\n');
        write_atomic(&self.job_path(&job.id), &text)
    }

    pub fn save_result(&self, job: &Job, archive: &Archive, report: &RunReport) -> io::Result<()> {
        write_atomic(&self.result_path(&job.id, "archive"), &formats::archive_to_string(archive, &job.instance))?;
        write_atomic(&self.result_path(&job.id, "report"), &formats::report_to_string(report))
    }

    fn load_result(&self, job: &Job) -> Result<(Archive, RunReport), formats::FormatError> {
        let archive = formats::load_archive(self.result_path(&job.id, "archive"), &job.instance)?;
        let report = formats::load_report(self.result_path(&job.id, "report"))?;
        Ok((archive, report))
    }

    pub fn save_commit(&self, job: &Job, index: usize, text: &str) -> io::Result<PathBuf> {
        let path = self.result_path(&job.id, &format!("commit-{}", index + 1));
        write_atomic(&path, text)?;
        Ok(path)
    }
}

/// Writes through a temporary file so readers never see half a file.
fn write_atomic(path: &Path, text: &str) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)
}
