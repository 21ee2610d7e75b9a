use std::path::Path;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use seminar_vns::formats::{self, LoadOptions};
use seminar_vns_service::{router, Service, ServiceConfig};
use tower::ServiceExt;

const T1: &str = "\
format_version = 1
n = 4
m = 2
w_max = 10
groups = [[1], [2]]
weights = [
  [10, 0],
  [10, 0],
  [0, 10],
  [0, 10],
]
";

fn app(dir: &Path, parallel_jobs: usize) -> Router {
    let config = ServiceConfig { parallel_jobs, ..ServiceConfig::new(dir) };
    router(Service::open(&config).unwrap(), None)
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = match body {
        Some(b) => req.body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn upload(app: &Router, content: &str) -> String {
    let (status, body) = call(app, Method::POST, "/instances", Some(json!({ "content": content }))).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["id"].as_str().unwrap().to_string()
}

async fn start(app: &Router, instance: &str, config: Value) -> String {
    let (status, body) = call(app, Method::POST, "/jobs", Some(json!({ "instance": instance, "config": config }))).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["id"].as_str().unwrap().to_string()
}

async fn wait(app: &Router, job: &str) -> Value {
    let deadline = Instant::now() + Duration::from_secs(60);
    loop {
        let (_, body) = call(app, Method::GET, &format!("/jobs/{job}"), None).await;
        if body["state"] == "done" || body["state"] == "failed" {
            return body;
        }
        assert!(Instant::now() < deadline, "job {job} did not finish");
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn t1_wishes_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), 1);
    let inst = upload(&app, T1).await;
    let job = start(&app, &inst, json!({ "max_evaluations": 5000, "seed": 3 })).await;
    let done = wait(&app, &job).await;
    assert_eq!(done["state"], "done");
    assert_eq!(done["evaluations"], 5000);
    assert_eq!(done["result"]["best_utility"], 40);

    let (_, page) = call(&app, Method::GET, &format!("/jobs/{job}/archive"), None).await;
    assert_eq!(page["total"], 1);
    assert_eq!(page["items"][0]["topic_of"], json!([1, 1, 2, 2]));
    assert_eq!(page["items"][0]["rows"][2]["lecturer"], "B2");

    let together = json!({ "wishes": [["s1", "s2"]] });
    let (status, r) = call(&app, Method::POST, &format!("/jobs/{job}/filter"), Some(together)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(r["total"], 1);
    assert_eq!(r["items"][0]["topic_of"], json!([1, 1, 2, 2]));
    assert_eq!(r["satisfiable"], json!([true]));

    let apart = json!({ "wishes": [[1, 3]] });
    let (_, r) = call(&app, Method::POST, &format!("/jobs/{job}/filter"), Some(apart)).await;
    assert_eq!(r["total"], 0);
    assert_eq!(r["satisfiable"], json!([false]));

    // filtering leaves the archive untouched
    let (_, again) = call(&app, Method::GET, &format!("/jobs/{job}/archive"), None).await;
    assert_eq!(again, page);

    let (status, r) = call(&app, Method::POST, &format!("/jobs/{job}/filter"), Some(json!({ "wishes": [[1]] }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r["error"]["code"], "invalid_wish");
    let (status, _) = call(&app, Method::POST, &format!("/jobs/{job}/filter"), Some(json!({ "wishes": [[1, 9]] }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test(flavor = "multi_thread")]
async fn commit_round_trips_through_the_file_format() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), 1);
    let with_names = format!("{T1}\n[labels]\nstudents = [\"Ada\", \"Ben\", \"Cleo\", \"Dan\"]\n");
    let inst_id = upload(&app, &with_names).await;
    let job = start(&app, &inst_id, json!({ "max_evaluations": 3000 })).await;
    wait(&app, &job).await;

    let (status, file) =
        call(&app, Method::POST, &format!("/jobs/{job}/commit"), Some(json!({ "index": 1, "anonymize": true }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(file["rows"][0]["name"], "#1");
    assert_eq!(file["anonymized"], true);
    let (_, named) = call(&app, Method::POST, &format!("/jobs/{job}/commit"), Some(json!({ "index": 1 }))).await;
    assert_eq!(named["rows"][0]["name"], "Ada");

    let inst = formats::parse_instance(&with_names, LoadOptions::default()).unwrap();
    let saved = dir.path().join("results").join(format!("{job}.commit-1.json"));
    let asg = formats::load_solution(&saved, &inst).unwrap();
    assert_eq!(asg.one_based(), vec![1, 1, 2, 2]);
    let from_body = formats::parse_solution(&file.to_string(), &inst).unwrap();
    assert_eq!(from_body, asg);

    let (status, err) = call(&app, Method::POST, &format!("/jobs/{job}/commit"), Some(json!({ "index": 2 }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["error"]["code"], "index_out_of_range");
}

#[tokio::test(flavor = "multi_thread")]
async fn error_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), 1);
    let (status, body) = call(&app, Method::GET, "/jobs/j99", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"]["code"], "not_found");
    assert!(body["error"]["message"].as_str().unwrap().contains("j99"));

    let bad_row = T1.replace("  [0, 10],\n]", "  [0, 9],\n]");
    let (status, body) = call(&app, Method::POST, "/instances", Some(json!({ "content": bad_row }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["code"], "invalid_instance");
    assert!(body["error"]["message"].as_str().unwrap().contains("student 4"), "{body}");

    let (status, body) = call(&app, Method::POST, "/instances", Some(json!({ "contents": T1 }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["code"], "invalid_request");

    let inst = upload(&app, T1).await;
    let shift_only = json!({ "instance": inst, "config": { "neighborhoods": ["shift"] } });
    let (status, body) = call(&app, Method::POST, "/jobs", Some(shift_only)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["code"], "invalid_config");
    assert!(body["error"]["message"].as_str().unwrap().contains("a_j = b_j"), "{body}");

    let (status, body) = call(&app, Method::POST, "/jobs", Some(json!({ "instance": "i77" }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND, "{body}");

    let (_, summary) = call(&app, Method::GET, &format!("/instances/{inst}"), None).await;
    assert_eq!(summary["applicable"], json!(["swap2"]));
    assert_eq!(summary["excluded"].as_array().unwrap().len(), 3);
    assert_eq!(summary["groups"], json!([[1], [2]]));

    let (_, v) = call(&app, Method::GET, "/version", None).await;
    assert_eq!(v, json!({ "api_version": 1, "format_version": 1 }));
}

#[tokio::test(flavor = "multi_thread")]
async fn matrix_upload() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), 1);
    let body = json!({
        "format": "matrix",
        "content": "name, A, B, C\nAda, 5, 5, 0\nBen, 0, 5, 5\nCleo, 5, 0, 5\n",
        "groups": [[1, 2], [3]],
    });
    let (status, s) = call(&app, Method::POST, "/instances", Some(body)).await;
    assert_eq!(status, StatusCode::CREATED, "{s}");
    assert_eq!((s["n"].as_u64(), s["m"].as_u64(), s["w_max"].as_u64()), (Some(3), Some(3), Some(10)));
    assert_eq!(s["students"], json!(["Ada", "Ben", "Cleo"]));
    assert_eq!(s["topics"], json!(["A", "B", "C"]));
    assert_eq!(s["groups"], json!([[1, 2], [3]]));
}

#[tokio::test(flavor = "multi_thread")]
async fn frontier_points_match_archive_pages_and_file() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), 1);
    let inst = seminar_vns::instgen::random_instance(34, 15, 100, 4, 1).unwrap();
    let inst_id = upload(&app, &formats::instance_to_string(&inst)).await;
    let job = start(&app, &inst_id, json!({ "mode": "bi_objective", "max_evaluations": 100000, "seed": 11 })).await;
    assert_eq!(wait(&app, &job).await["state"], "done");

    let (_, frontier) = call(&app, Method::GET, &format!("/jobs/{job}/frontier"), None).await;
    assert_eq!(frontier["mode"], "bi_objective");
    let points = frontier["points"].as_array().unwrap();
    assert!(!points.is_empty());
    let archive = formats::load_archive(dir.path().join("results").join(format!("{job}.archive.json")), &inst).unwrap();
    let from_file = archive.count_alternatives();
    assert_eq!(points.len(), from_file.len());
    for (p, f) in points.iter().zip(&from_file) {
        assert_eq!(p["utility"], f.outcome.utility);
        assert_eq!(p["imbalance"], f.outcome.imbalance_text());
        assert_eq!(p["count"], f.count);
        let uri = format!("/jobs/{job}/archive?utility={}&imbalance={}&limit=1000", p["utility"], p["imbalance"].as_str().unwrap());
        let (status, page) = call(&app, Method::GET, &uri, None).await;
        assert_eq!(status, StatusCode::OK, "{page}");
        let items = page["items"].as_array().unwrap();
        assert_eq!(items.len(), f.count);
        let expected: Vec<Vec<usize>> =
            archive.alternatives().filter(|(o, _)| *o == f.outcome).map(|(_, a)| a.one_based()).collect();
        let got: Vec<Vec<usize>> = items.iter().map(|i| serde_json::from_value(i["topic_of"].clone()).unwrap()).collect();
        assert_eq!(got, expected);
        assert!(items.iter().all(|i| i["utility"] == p["utility"] && i["imbalance"] == p["imbalance"]));
    }
    let (status, _) = call(&app, Method::GET, &format!("/jobs/{job}/archive?utility=5"), None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test(flavor = "multi_thread")]
async fn progress_queueing_and_cancellation() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), 1);
    let inst = seminar_vns::instgen::random_instance(45, 15, 100, 4, 2).unwrap();
    let inst_id = upload(&app, &formats::instance_to_string(&inst)).await;
    let long = json!({ "max_evaluations": 500_000_000u64 });
    let first = start(&app, &inst_id, long.clone()).await;
    let second = start(&app, &inst_id, long).await;

    let mut last = 0;
    let mut running_polls = 0;
    let deadline = Instant::now() + Duration::from_secs(30);
    while running_polls < 5 {
        let (_, a) = call(&app, Method::GET, &format!("/jobs/{first}"), None).await;
        let (_, b) = call(&app, Method::GET, &format!("/jobs/{second}"), None).await;
        assert_eq!(b["state"], "queued", "one worker: the second job waits");
        let done = a["evaluations"].as_u64().unwrap();
        assert!(done >= last, "progress went back from {last} to {done}");
        assert!(done <= 500_000_000);
        if a["state"] == "running" && done > last {
            running_polls += 1;
        }
        last = done;
        assert!(Instant::now() < deadline, "no progress reported");
        tokio::time::sleep(Duration::from_millis(20)).await;
    }

    let (status, b) = call(&app, Method::DELETE, &format!("/jobs/{second}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(b["state"], "failed");
    assert_eq!(b["reason"], "cancelled");
    let (status, _) = call(&app, Method::DELETE, &format!("/jobs/{first}"), None).await;
    assert_eq!(status, StatusCode::OK);
    let a = wait(&app, &first).await;
    assert_eq!(a["state"], "failed");
    assert_eq!(a["reason"], "cancelled");
    assert_eq!(a["evaluations"].as_u64().unwrap() % 1000, 0);

    let (status, body) = call(&app, Method::GET, &format!("/jobs/{first}/archive"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"]["code"], "job_not_done");
    let (status, _) = call(&app, Method::DELETE, &format!("/jobs/{first}"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test(flavor = "multi_thread")]
async fn restart_recovers_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let (inst_id, done_job) = {
        let app = app(dir.path(), 1);
        let inst_id = upload(&app, T1).await;
        let job = start(&app, &inst_id, json!({ "max_evaluations": 2000 })).await;
        wait(&app, &job).await;
        (inst_id, job)
    };
    // simulate a process that stopped with one job queued and one running
    let jobs = dir.path().join("jobs");
    let template: Value = serde_json::from_str(&std::fs::read_to_string(jobs.join(format!("{done_job}.json"))).unwrap()).unwrap();
    for (id, state) in [("j7", "queued"), ("j8", "running")] {
        let mut file = template.clone();
        file["id"] = json!(id);
        file["state"] = json!(state);
        file["evaluations"] = json!(if state == "running" { 1000 } else { 0 });
        std::fs::write(jobs.join(format!("{id}.json")), file.to_string()).unwrap();
    }

    let app = app(dir.path(), 1);
    let (_, done) = call(&app, Method::GET, &format!("/jobs/{done_job}"), None).await;
    assert_eq!(done["state"], "done");
    let (_, page) = call(&app, Method::GET, &format!("/jobs/{done_job}/archive"), None).await;
    assert_eq!(page["items"][0]["topic_of"], json!([1, 1, 2, 2]));

    assert_eq!(wait(&app, "j7").await["state"], "done");
    let (_, interrupted) = call(&app, Method::GET, "/jobs/j8", None).await;
    assert_eq!(interrupted["state"], "failed");
    assert!(interrupted["reason"].as_str().unwrap().contains("interrupted"));

    // fresh ids continue after the recovered ones
    let next = start(&app, &inst_id, json!({ "max_evaluations": 1000 })).await;
    assert_eq!(next, "j9");
    let (_, list) = call(&app, Method::GET, "/jobs", None).await;
    let ids: Vec<&str> = list.as_array().unwrap().iter().map(|j| j["id"].as_str().unwrap()).collect();
    assert_eq!(ids, vec![done_job.as_str(), "j7", "j8", "j9"]);
}
