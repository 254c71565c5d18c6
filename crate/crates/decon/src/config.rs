//! Run options shared by the command line and JSON config files. Keys in a
//! config file are the long flag names; flags given on the command line
//! override file values.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use decon_core::runner::{resolve_scenario, Relaxation, RunConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats;

/// A stepsize written either as a number or as a bound name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    Value(f64),
    Text(String),
}

impl AlphaSpec {
    fn as_text(&self) -> String {
        match self {
            AlphaSpec::Value(v) => v.to_string(),
            AlphaSpec::Text(s) => s.clone(),
        }
    }
}

impl std::str::FromStr for AlphaSpec {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(AlphaSpec::Text(s.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunOptions {
    /// Preset name: fig1, fig2, fig3, relaxed-line.
    #[arg(long)]
    pub scenario: Option<String>,
    /// random, line or complete.
    #[arg(long)]
    pub topology: Option<String>,
    /// Edge list file (`i j` per line, 0-based); replaces --topology.
    #[arg(long)]
    pub graph_file: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    /// Measurements per agent.
    #[arg(long)]
    pub mi: Option<usize>,
    #[arg(long)]
    pub edge_prob: Option<f64>,
    #[arg(long)]
    pub noise_std: Option<f64>,
    #[arg(long)]
    pub lipschitz: Option<f64>,
    /// Problem seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub graph_seed: Option<u64>,
    /// dgd, extra, extra_xy, nids or nids_dx.
    #[arg(long)]
    pub algo: Option<String>,
    /// A number, a bound name, or `scale*name` (e.g. 0.99*nids).
    #[arg(long)]
    pub alpha: Option<AlphaSpec>,
    /// Relaxation `(1 + c) W − c I`.
    #[arg(long, conflicts_with = "relax_target")]
    pub relax_factor: Option<f64>,
    /// Relax until `λ_min(W)` reaches this value.
    #[arg(long)]
    pub relax_target: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Audit every iteration against the certificate.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub certify: Option<bool>,
    /// Output CSV file, or a directory for --scenario.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replay a problem saved with --save-problem.
    #[arg(long)]
    pub load_problem: Option<PathBuf>,
    #[arg(long)]
    pub save_problem: Option<PathBuf>,
    /// Directory for plain-text dumps of the mixing matrices.
    #[arg(long)]
    pub dump_mixing: Option<PathBuf>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl RunOptions {
    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }

    /// `self` with every field set in `top` replaced.
    pub fn overridden_by(mut self, top: &RunOptions) -> Self {
        overlay!(self, top; scenario, topology, graph_file, n, p, mi, edge_prob, noise_std,
            lipschitz, seed, graph_seed, algo, alpha, relax_factor, relax_target, theta,
            max_iters, tol, certify, out, load_problem, save_problem, dump_mixing);
        if top.relax_factor.is_some() {
            self.relax_target = None;
        } else if top.relax_target.is_some() {
            self.relax_factor = None;
        }
        self
    }

    fn relaxation(&self) -> Option<Relaxation> {
        match (self.relax_factor, self.relax_target) {
            (Some(c), _) => Some(if c == 0.0 { Relaxation::None } else { Relaxation::Factor(c) }),
            (None, Some(t)) => Some(Relaxation::TargetLambdaMin(t)),
            (None, None) => None,
        }
    }

    /// Fields shared by every curve of a scenario.
    fn apply_instance(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(t) = &self.topology {
            cfg.topology = t.parse()?;
        }
        if let Some(path) = &self.graph_file {
            let g = formats::read_graph(path)?;
            cfg.n = g.n();
            cfg.edges = Some(g.edges().to_vec());
        }
        if let Some(n) = self.n {
            if cfg.edges.is_some() && n != cfg.n {
                return Err(Error::Config(format!("--n {n} disagrees with the {} nodes in the graph file", cfg.n)));
            }
            cfg.n = n;
        }
        macro_rules! set {
            ($($f:ident => $g:ident),*) => { $( if let Some(v) = self.$f { cfg.$g = v; } )* };
        }
        set!(p => p, mi => m_i, edge_prob => edge_prob, noise_std => noise_std, lipschitz => lipschitz,
            seed => seed, graph_seed => graph_seed, max_iters => max_iters, tol => tol, certify => certify);
        if let Some(r) = self.relaxation() {
            cfg.relaxation = r;
        }
        if self.theta.is_some() {
            cfg.theta = self.theta;
        }
        Ok(())
    }

    /// One config per curve: the scenario's presets, or a single run built
    /// on the defaults.
    pub fn run_configs(&self) -> Result<Vec<RunConfig>> {
        let mut cfgs = match &self.scenario {
            Some(name) => {
                if self.algo.is_some() || self.alpha.is_some() {
                    return Err(Error::Config("--algo and --alpha cannot be combined with --scenario".into()));
                }
                resolve_scenario(name)?
            }
            None => {
                let mut cfg = RunConfig::default();
                if let Some(a) = &self.algo {
                    cfg.algo = a.parse()?;
                }
                if let Some(a) = &self.alpha {
                    cfg.alpha = a.as_text().parse()?;
                }
                vec![cfg]
            }
        };
        for cfg in &mut cfgs {
            self.apply_instance(cfg)?;
            cfg.check()?;
        }
        Ok(cfgs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use decon_core::algorithms::Variant;
    use decon_core::runner::{NamedStep, Stepsize, Topology};

    #[test]
    fn file_keys_mirror_flags() {
        let text = r#"{"topology": "line", "n": 8, "mi": 3, "edge-prob": 0.3, "alpha": 0.05,
                       "relax-factor": 0.2, "max-iters": 12, "certify": true, "graph-seed": 4}"#;
        let o = RunOptions::from_json(text, Path::new("c.json")).unwrap();
        let cfg = &o.run_configs().unwrap()[0];
        assert_eq!(cfg.topology, Topology::Line);
        assert_eq!((cfg.n, cfg.m_i, cfg.max_iters, cfg.graph_seed), (8, 3, 12, 4));
        assert_eq!(cfg.edge_prob, 0.3);
        assert_eq!(cfg.alpha, Stepsize::Value(0.05));
        assert_eq!(cfg.relaxation, Relaxation::Factor(0.2));
        assert!(cfg.certify);
    }

    #[test]
    fn flags_override_file() {
        let file = RunOptions::from_json(r#"{"n": 8, "algo": "extra", "alpha": "nids", "tol": 1e-6}"#, Path::new("c")).unwrap();
        let cli = RunOptions {
            n: Some(12),
            alpha: Some(AlphaSpec::Text("0.5*extra-new".into())),
            ..Default::default()
        };
        let cfg = &file.overridden_by(&cli).run_configs().unwrap()[0];
        assert_eq!(cfg.n, 12);
        assert_eq!(cfg.algo, Variant::Extra);
        assert_eq!(cfg.tol, 1e-6);
        assert_eq!(
            cfg.alpha,
            Stepsize::Named {
                bound: NamedStep::ExtraNew,
                scale: 0.5
            }
        );
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(RunOptions::from_json(r#"{"nodes": 3}"#, Path::new("c")).is_err());
        let o = RunOptions::from_json(r#"{"algo": "admm"}"#, Path::new("c")).unwrap();
        assert!(o.run_configs().is_err());
        let o = RunOptions::from_json(r#"{"tol": -1}"#, Path::new("c")).unwrap();
        assert!(o.run_configs().is_err());
    }

    #[test]
    fn scenario_overrides_apply_to_every_curve() {
        let o = RunOptions {
            scenario: Some("fig1".into()),
            max_iters: Some(30),
            ..Default::default()
        };
        let cfgs = o.run_configs().unwrap();
        assert_eq!(cfgs.len(), 6);
        assert!(cfgs.iter().all(|c| c.max_iters == 30));
        let bad = RunOptions {
            algo: Some("dgd".into()),
            ..o
        };
        assert!(matches!(bad.run_configs(), Err(Error::Config(_))));
        let unknown = RunOptions {
            scenario: Some("fig9".into()),
            ..Default::default()
        };
        assert!(unknown.run_configs().is_err());
    }

    #[test]
    fn zero_relaxation_is_none() {
        let o = RunOptions {
            relax_target: Some(-1.2),
            ..Default::default()
        };
        assert_eq!(o.run_configs().unwrap()[0].relaxation, Relaxation::TargetLambdaMin(-1.2));
        let o = RunOptions {
            relax_factor: Some(0.0),
            ..Default::default()
        };
        assert_eq!(o.run_configs().unwrap()[0].relaxation, Relaxation::None);
    }
}
