#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::mpsc;
use std::thread::JoinHandle;

use melodyforge::core::checkpoint::{ModelCheckpoint, TrainingSummary};
use melodyforge::core::model::{ModelDims, ModelParams};
use melodyforge::core::pianoroll::{Vocabulary, VOCAB_SIZE};
use melodyforge::core::rng_from_seed;
use melodyforge::service::{run, AppState};
use tokio::sync::oneshot;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus")
}

/// Freshly initialized (untrained) model at f32 precision.
pub fn random_model(hidden: usize, seed: u64) -> ModelCheckpoint {
    let mut params = ModelParams::init(ModelDims::new(VOCAB_SIZE, hidden), &mut rng_from_seed(seed));
    params.round_to_f32();
    ModelCheckpoint {
        params,
        vocabulary: Vocabulary::default(),
        training: TrainingSummary::default(),
    }
}

pub fn melodyforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_melodyforge"))
        .args(args)
        .env_remove("MELODYFORGE_MODEL")
        .output()
        .expect("run melodyforge")
}

/// The service on an ephemeral port, stopped on drop.
pub struct TestServer {
    pub addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl TestServer {
    pub fn start(state: AppState, static_dir: Option<PathBuf>) -> Self {
        let (addr_tx, addr_rx) = mpsc::channel();
        let (stop_tx, stop_rx) = oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Runtime::new().expect("runtime");
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.expect("bind");
                addr_tx.send(listener.local_addr().expect("addr")).expect("report addr");
                run(listener, state, static_dir, async {
                    let _ = stop_rx.await;
                })
                .await
                .expect("serve");
            });
        });
        let addr = addr_rx.recv().expect("server address");
        TestServer {
            addr,
            shutdown: Some(stop_tx),
            thread: Some(thread),
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr, path)
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// HTTP client that reports 4xx/5xx as responses instead of errors.
pub fn client() -> ureq::Agent {
    ureq::Agent::config_builder().http_status_as_error(false).build().into()
}

pub struct Reply {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).expect("JSON body")
    }
}

fn collect(mut resp: ureq::http::Response<ureq::Body>) -> Reply {
    let headers = resp
        .headers()
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_str().unwrap_or_default().to_string()))
        .collect();
    let status = resp.status().as_u16();
    let body = resp.body_mut().read_to_vec().expect("read body");
    Reply { status, headers, body }
}

pub fn post(agent: &ureq::Agent, url: &str, body: &str) -> Reply {
    collect(
        agent
            .post(url)
            .header("content-type", "application/json")
            .send(body)
            .expect("POST"),
    )
}

pub fn get(agent: &ureq::Agent, url: &str) -> Reply {
    collect(agent.get(url).call().expect("GET"))
}
