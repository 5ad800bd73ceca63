use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{convert_basis, convert_state, Basis, BoltzmannMachine, SpinState};

use super::{SampleSet, Sampler, SamplerConfig};

/// Environment variable consulted when no endpoint is configured.
pub const ENDPOINT_ENV: &str = "QBM_ENDPOINT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct WireRequest {
    pub basis: String,
    pub biases: Vec<f64>,
    pub couplings: Vec<(usize, usize, f64)>,
    pub num_reads: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct WireResponse {
    pub samples: Vec<Vec<i8>>,
    pub counts: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energies: Option<Vec<f64>>,
}

fn request_for(bm: &BoltzmannMachine, num_reads: u64) -> WireRequest {
    let pm = match bm.basis() {
        Basis::PlusMinus => bm.clone(),
        Basis::ZeroOne => convert_basis(bm),
    };
    WireRequest {
        basis: "pm1".into(),
        biases: pm.biases().to_vec(),
        couplings: pm.couplings().collect(),
        num_reads,
    }
}

fn decode(bm: &BoltzmannMachine, resp: WireResponse, beta: f64, id: String) -> Result<SampleSet> {
    let n = bm.num_nodes();
    if resp.samples.len() != resp.counts.len() {
        return Err(Error::Protocol(format!(
            "{} samples but {} counts",
            resp.samples.len(),
            resp.counts.len()
        )));
    }
    if resp.samples.is_empty() {
        return Err(Error::Protocol("response carries no samples".into()));
    }
    if resp.counts.contains(&0) {
        return Err(Error::Protocol("zero count in response".into()));
    }
    let mut states = Vec::with_capacity(resp.samples.len());
    for (i, s) in resp.samples.into_iter().enumerate() {
        if s.len() != n {
            return Err(Error::Protocol(format!("sample {i} has {} values, expected {n}", s.len())));
        }
        let pm = SpinState::new(s, Basis::PlusMinus)
            .map_err(|_| Error::Protocol(format!("sample {i} contains values other than -1/+1")))?;
        states.push(match bm.basis() {
            Basis::PlusMinus => pm,
            Basis::ZeroOne => convert_state(&pm),
        });
    }
    SampleSet::from_counts(n, bm.basis(), states, resp.counts, beta, id)
}

/// Submits the machine (in the +/-1 convention) to `endpoint` and converts the
/// returned states back to the machine's basis. The returned set carries the
/// caller's `cfg.beta`; the service's actual temperature is unknown.
pub fn remote_sample(bm: &BoltzmannMachine, cfg: &SamplerConfig, endpoint: &str) -> Result<SampleSet> {
    cfg.validate()?;
    if bm.num_nodes() == 0 {
        return Err(Error::invalid("cannot submit a machine with no nodes"));
    }
    let url = format!("{}/v1/sample", endpoint.trim_end_matches('/'));
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs_f64(cfg.timeout_secs.max(0.001))))
        .build()
        .into();
    let mut response = agent.post(&url).send_json(request_for(bm, cfg.num_reads)).map_err(|e| match e {
        ureq::Error::StatusCode(413) => Error::Capacity(format!("{url} rejected the problem size")),
        ureq::Error::StatusCode(code) if code >= 500 => Error::Transport(format!("{url} returned {code}")),
        ureq::Error::StatusCode(code) => Error::Protocol(format!("{url} returned {code}")),
        other => Error::Transport(format!("{url}: {other}")),
    })?;
    let body: WireResponse = response
        .body_mut()
        .read_json()
        .map_err(|e| Error::Protocol(format!("malformed response: {e}")))?;
    decode(bm, body, cfg.beta, format!("remote:{endpoint}"))
}

#[derive(Debug, Clone)]
pub struct RemoteSampler {
    endpoint: String,
    id: String,
}

impl RemoteSampler {
    pub fn new(endpoint: impl Into<String>) -> Self {
        let endpoint = endpoint.into();
        RemoteSampler { id: format!("remote:{endpoint}"), endpoint }
    }

    /// Uses `endpoint` if given, otherwise the `QBM_ENDPOINT` variable.
    pub fn resolve(endpoint: Option<&str>) -> Result<Self> {
        match endpoint {
            Some(e) => Ok(Self::new(e)),
            None => std::env::var(ENDPOINT_ENV)
                .map(Self::new)
                .map_err(|_| Error::invalid(format!("no remote endpoint configured; set {ENDPOINT_ENV}"))),
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl Sampler for RemoteSampler {
    fn sample(&mut self, bm: &BoltzmannMachine, cfg: &SamplerConfig) -> Result<SampleSet> {
        remote_sample(bm, cfg, &self.endpoint)
    }

    fn id(&self) -> &str {
        &self.id
    }
}
