//! Local stand-in for a remote annealer service, speaking the same
//! `POST /v1/sample` protocol as [`super::remote_sample`].
//!
//! Requests are answered with exact Boltzmann draws at a server-side beta.
//! With `drift > 0` the effective beta is `beta / (1 + drift * nodes)`, a
//! synthetic size-dependent temperature for exercising beta recovery.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use serde::{Deserialize, Serialize};
use tiny_http::{Header, Response, Server};

use crate::error::{Error, Result};
use crate::ising::{Basis, Bounds, BoltzmannMachine};

use super::remote::{WireRequest, WireResponse};
use super::{exact_sample, SamplerConfig};

/// Deliberately broken replies, for client error-path tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockFault {
    /// Every sample is one value short.
    TruncatedSamples,
    /// Body is not JSON.
    Garbage,
    /// HTTP 500.
    ServerError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockConfig {
    pub beta: f64,
    pub drift: f64,
    /// Larger problems are refused with HTTP 413.
    pub max_nodes: usize,
    pub seed: u64,
    pub fault: Option<MockFault>,
}

impl Default for MockConfig {
    fn default() -> Self {
        MockConfig { beta: 1.0, drift: 0.0, max_nodes: 20, seed: 0, fault: None }
    }
}

impl MockConfig {
    /// Beta actually used for a problem with `nodes` nodes.
    pub fn effective_beta(&self, nodes: usize) -> f64 {
        self.beta / (1.0 + self.drift * nodes as f64)
    }
}

/// Background HTTP server; shut down on drop.
pub struct MockServer {
    server: Arc<Server>,
    handle: Option<JoinHandle<()>>,
    url: String,
}

impl MockServer {
    /// Binds `addr` (e.g. `127.0.0.1:0`) and serves on a background thread.
    pub fn start(addr: &str, config: MockConfig) -> Result<Self> {
        let server = Arc::new(Server::http(addr).map_err(|e| Error::Transport(format!("bind {addr}: {e}")))?);
        let url = match server.server_addr().to_ip() {
            Some(a) => format!("http://{a}"),
            None => return Err(Error::Transport("mock server has no IP address".into())),
        };
        let worker = Arc::clone(&server);
        let handle = std::thread::spawn(move || serve(&worker, &config));
        Ok(MockServer { server, handle: Some(handle), url })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    /// Blocks until the server thread exits (it never does on its own).
    pub fn join(mut self) {
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve(server: &Server, config: &MockConfig) {
    let counter = AtomicU64::new(0);
    for mut request in server.incoming_requests() {
        let json = Header::from_bytes("Content-Type", "application/json").expect("static header");
        if request.url() != "/v1/sample" || request.method().as_str() != "POST" {
            let _ = request.respond(Response::from_string("not found").with_status_code(404));
            continue;
        }
        let mut body = String::new();
        if request.as_reader().read_to_string(&mut body).is_err() {
            let _ = request.respond(Response::from_string("unreadable body").with_status_code(400));
            continue;
        }
        let call = counter.fetch_add(1, Ordering::Relaxed);
        let (status, text) = match handle(&body, config, call) {
            Ok(resp) => (200, serde_json::to_string(&resp).unwrap_or_default()),
            Err(Error::Capacity(m)) => (413, m),
            Err(e) => (400, e.to_string()),
        };
        let (status, text) = match (status, config.fault) {
            (200, Some(MockFault::Garbage)) => (200, "<html>not json".to_string()),
            (200, Some(MockFault::ServerError)) => (500, "internal".to_string()),
            _ => (status, text),
        };
        let _ = request.respond(Response::from_string(text).with_status_code(status).with_header(json));
    }
}

fn handle(body: &str, config: &MockConfig, call: u64) -> Result<WireResponse> {
    let req: WireRequest = serde_json::from_str(body)?;
    if req.basis != "pm1" {
        return Err(Error::invalid(format!("unsupported basis `{}`", req.basis)));
    }
    let n = req.biases.len();
    if n > config.max_nodes {
        return Err(Error::Capacity(format!("{n} nodes exceeds the limit of {}", config.max_nodes)));
    }
    let mut bm = BoltzmannMachine::new(n, 0, 0, Basis::PlusMinus)
        .with_bounds(Bounds::unenforced(f64::MAX, f64::MAX))?;
    for (i, &b) in req.biases.iter().enumerate() {
        bm.set_bias(i, b)?;
    }
    for &(k, l, v) in &req.couplings {
        bm.set_coupling(k, l, v)?;
    }
    let cfg = SamplerConfig::new(config.effective_beta(n), req.num_reads, config.seed.wrapping_add(call));
    let ss = exact_sample(&bm, &cfg)?;
    let mut samples: Vec<Vec<i8>> = ss.states().iter().map(|s| s.values().to_vec()).collect();
    if config.fault == Some(MockFault::TruncatedSamples) {
        for s in &mut samples {
            s.pop();
        }
    }
    let energies = ss.states().iter().map(|s| bm.energy(s)).collect::<Result<Vec<_>>>()?;
    Ok(WireResponse { samples, counts: ss.counts().expect("counted draws").to_vec(), energies: Some(energies) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn handler_rejects_oversized_and_wrong_basis() {
        let cfg = MockConfig { max_nodes: 2, ..Default::default() };
        let big = r#"{"basis":"pm1","biases":[0,0,0],"couplings":[],"num_reads":5}"#;
        assert!(matches!(handle(big, &cfg, 0), Err(Error::Capacity(_))));
        let bits = r#"{"basis":"01","biases":[0],"couplings":[],"num_reads":5}"#;
        assert!(handle(bits, &cfg, 0).is_err());
        let ok = r#"{"basis":"pm1","biases":[0.5],"couplings":[],"num_reads":5}"#;
        let resp = handle(ok, &cfg, 0).unwrap();
        assert_eq!(resp.counts.iter().sum::<u64>(), 5);
    }

    #[test]
    fn drift_lowers_beta_with_size() {
        let cfg = MockConfig { beta: 3.0, drift: 0.05, ..Default::default() };
        assert!(cfg.effective_beta(10) < cfg.effective_beta(4));
        assert_eq!(MockConfig { beta: 3.0, ..Default::default() }.effective_beta(10), 3.0);
    }
}
