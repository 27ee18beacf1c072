//! HTTP client helpers and a scripted slider session against a running
//! service.
#![allow(dead_code)]

use std::time::{Duration, Instant};

use anyhow::{bail, ensure, Context};
use serde_json::{json, Value};

use teachable_core::corpus::{self, CorpusSpec, Renderer};
use teachable_core::pipeline::Event;
use teachable_core::scene::{Anchor, AssetKind, ObjectState, SceneObject, Snapshot, Transform};
use teachable_core::vision::Frame;
use teachable_core::{StateId, Vec3};

pub struct Api {
    base: String,
    http: reqwest::Client,
}

impl Api {
    pub fn new(addr: std::net::SocketAddr) -> Self {
        Self { base: format!("http://{addr}/v1"), http: reqwest::Client::new() }
    }

    async fn finish(resp: reqwest::Response) -> anyhow::Result<(u16, Value)> {
        let status = resp.status().as_u16();
        let bytes = resp.bytes().await?;
        let body = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).context("response is not JSON")? };
        Ok((status, body))
    }

    pub async fn get(&self, path: &str) -> anyhow::Result<(u16, Value)> {
        Self::finish(self.http.get(format!("{}{path}", self.base)).send().await?).await
    }

    pub async fn post(&self, path: &str, body: Value) -> anyhow::Result<(u16, Value)> {
        Self::finish(self.http.post(format!("{}{path}", self.base)).json(&body).send().await?).await
    }

    pub async fn post_empty(&self, path: &str) -> anyhow::Result<(u16, Value)> {
        Self::finish(self.http.post(format!("{}{path}", self.base)).send().await?).await
    }

    /// Uploads a raw RGB frame.
    pub async fn frame(&self, path: &str, frame: &Frame) -> anyhow::Result<(u16, Value)> {
        let resp = self
            .http
            .post(format!("{}{path}", self.base))
            .header("content-type", "application/octet-stream")
            .header("x-frame-width", frame.width())
            .header("x-frame-height", frame.height())
            .header("x-frame-timestamp", frame.timestamp_ms)
            .body(frame.pixels().to_vec())
            .send()
            .await?;
        Self::finish(resp).await
    }

    pub async fn expect(&self, what: &str, result: anyhow::Result<(u16, Value)>, status: u16) -> anyhow::Result<Value> {
        let (got, body) = result?;
        ensure!(got == status, "{what}: status {got}, expected {status}: {body}");
        Ok(body)
    }

    /// Opens the event stream; the returned task collects events until the
    /// server closes it.
    pub async fn open_events(&self) -> anyhow::Result<tokio::task::JoinHandle<anyhow::Result<Vec<Event>>>> {
        let mut resp = self.http.get(format!("{}/events", self.base)).send().await?;
        ensure!(resp.status().is_success(), "events: status {}", resp.status());
        Ok(tokio::spawn(async move {
            let mut buf = Vec::new();
            while let Some(chunk) = resp.chunk().await? {
                buf.extend_from_slice(&chunk);
            }
            let text = String::from_utf8(buf)?;
            text.lines().map(|l| serde_json::from_str(l).with_context(|| format!("bad event line {l}"))).collect()
        }))
    }

    /// Polls until no job is running.
    pub async fn wait_trained(&self, timeout: Duration) -> anyhow::Result<Value> {
        let start = Instant::now();
        loop {
            let (_, status) = self.get("/train/status").await?;
            if status["running"] == false {
                return Ok(status);
            }
            if start.elapsed() > timeout {
                bail!("training still running after {timeout:?}");
            }
            tokio::time::sleep(Duration::from_millis(50)).await;
        }
    }
}

pub const SLIDER_STATES: usize = 4;

/// Frames of a scripted demonstration: `per_block` frames of each slider
/// class in `order`, stamped at 15 fps, plus the expected state sequence.
pub fn slider_script(order: &[usize], per_block: usize, seed: u64) -> (Vec<Frame>, Vec<StateId>) {
    let pool = corpus::generate(&CorpusSpec::new(Renderer::SliderPosition, SLIDER_STATES, per_block * order.len(), seed)).unwrap();
    let mut frames = Vec::new();
    for (b, &c) in order.iter().enumerate() {
        let state = Renderer::SliderPosition.state_id(c);
        let of_class = pool.iter().filter(|s| s.state_id == state).skip(b * per_block).take(per_block);
        for s in of_class {
            let t = frames.len() as u64 * 1000 / 15;
            frames.push(s.frame.clone().with_timestamp(t));
        }
    }
    let mut truth: Vec<StateId> = order.iter().map(|&c| Renderer::SliderPosition.state_id(c)).collect();
    truth.dedup();
    (frames, truth)
}

pub struct SessionRun {
    pub events: Vec<Event>,
    pub truth: Vec<StateId>,
    pub train_status: Value,
}

/// Authors a slider project over HTTP, trains it, and streams a scripted
/// test run. The marker's keyed position for `posC` is `0.1 * C` along x.
pub async fn slider_session(api: &Api, samples_per_state: usize, order: &[usize], per_block: usize) -> anyhow::Result<SessionRun> {
    api.expect("create project", api.post("/project", json!({ "name": "slider" })).await, 201).await?;
    for c in 0..SLIDER_STATES {
        let body = json!({
            "stateId": format!("pos{c}"),
            "stateSet": "slider",
            "kind": "continuous",
            "paramStart": 0.0,
            "paramEnd": 1.0,
        });
        api.expect("add state", api.post("/states", body).await, 201).await?;
    }
    let samples = corpus::generate(&CorpusSpec::new(Renderer::SliderPosition, SLIDER_STATES, samples_per_state, 1))?;
    for s in &samples {
        api.expect("add sample", api.frame(&format!("/states/{}/samples", s.state_id), &s.frame).await, 201).await?;
    }
    let marker = SceneObject::new("marker", "marker", AssetKind::Model3d, Anchor::Camera { x: 0.5, y: 0.5, depth: 1.0 });
    api.expect("add object", api.post("/objects", serde_json::to_value(&marker)?).await, 200).await?;
    for c in 0..SLIDER_STATES {
        let at = ObjectState::visible_at(Transform::at(Vec3::new(0.1 * c as f64, 0.0, 0.0)));
        let scene = json!({ "snapshots": Snapshot::new().with("marker", at) });
        api.expect("save scene", api.post(&format!("/scenes/pos{c}"), scene).await, 201).await?;
    }

    api.expect("train", api.post_empty("/train").await, 202).await?;
    let train_status = api.wait_trained(Duration::from_secs(60)).await?;
    ensure!(train_status["hasModel"] == true, "training produced no model: {train_status}");

    api.expect("enter test mode", api.post("/mode", json!({ "mode": "test" })).await, 200).await?;
    let collector = api.open_events().await?;
    let (frames, truth) = slider_script(order, per_block, 77);
    for f in &frames {
        api.expect("push frame", api.frame("/frames", f).await, 200).await?;
    }
    api.expect("leave test mode", api.post("/mode", json!({ "mode": "author" })).await, 200).await?;
    let events = tokio::time::timeout(Duration::from_secs(10), collector).await.context("event stream did not close")???;
    Ok(SessionRun { events, truth, train_status })
}
