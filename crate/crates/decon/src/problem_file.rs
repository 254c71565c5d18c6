//! JSON save/load of sensing problems for exact replay.

use std::fs;
use std::path::Path;

use decon_core::linalg::Stacked;
use decon_core::problem::{AgentData, SensingProblem};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Agreement required between stored and recomputed constants on load.
pub const REPLAY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentRecord {
    /// Row-major `m_i × p`.
    pub m: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemRecord {
    pub n: usize,
    pub p: usize,
    pub seed: Option<u64>,
    pub noise_std: f64,
    pub lipschitz: f64,
    pub mu_fbar: f64,
    pub xstar: Vec<f64>,
    pub agents: Vec<AgentRecord>,
}

impl From<&SensingProblem> for ProblemRecord {
    fn from(p: &SensingProblem) -> Self {
        let agents = p
            .agent_data()
            .iter()
            .map(|a| AgentRecord {
                m: (0..a.m.rows()).map(|i| a.m.row(i).to_vec()).collect(),
                y: a.y.clone(),
            })
            .collect();
        Self {
            n: p.n(),
            p: p.p(),
            seed: p.seed(),
            noise_std: p.noise_std(),
            lipschitz: p.lipschitz(),
            mu_fbar: p.mu_fbar(),
            xstar: p.xstar().to_vec(),
            agents,
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REPLAY_TOL * (1.0 + a.abs().max(b.abs()))
}

impl ProblemRecord {
    /// Rebuilds the problem and checks the stored derived constants.
    pub fn into_problem(self) -> Result<SensingProblem> {
        if self.agents.len() != self.n {
            return Err(Error::Config(format!(
                "problem file declares n = {} but holds {} agents",
                self.n,
                self.agents.len()
            )));
        }
        let agents = self
            .agents
            .iter()
            .map(|a| {
                Ok(AgentData {
                    m: Stacked::from_rows(&a.m)?,
                    y: a.y.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let prob = SensingProblem::from_parts(agents, self.noise_std, self.seed, Some(self.lipschitz))?;
        if prob.p() != self.p {
            return Err(Error::Config(format!("problem file declares p = {} but M_i has {} columns", self.p, prob.p())));
        }
        if !close(prob.mu_fbar(), self.mu_fbar) {
            return Err(Error::Config(format!(
                "stored mu_fbar {} disagrees with recomputed {}",
                self.mu_fbar,
                prob.mu_fbar()
            )));
        }
        if self.xstar.len() != self.p || prob.xstar().iter().zip(&self.xstar).any(|(a, b)| !close(*a, *b)) {
            return Err(Error::Config("stored x* disagrees with the recomputed minimizer".into()));
        }
        Ok(prob)
    }
}

pub fn to_json(p: &SensingProblem) -> String {
    serde_json::to_string_pretty(&ProblemRecord::from(p)).expect("problem record serializes")
}

pub fn from_json(text: &str, path: &Path) -> Result<SensingProblem> {
    let rec: ProblemRecord = serde_json::from_str(text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    rec.into_problem()
}

pub fn save(p: &SensingProblem, path: &Path) -> Result<()> {
    fs::write(path, to_json(p) + "\n").map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<SensingProblem> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text, path)
}
