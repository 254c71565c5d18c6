//! Decentralized least-squares sensing instances
//! `f_i(x) = ½‖M_i x − y_i‖²` and their stacked gradient oracle.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, pinv_psd, Stacked, SymMatrix, DEFAULT_RANK_TOL};
use crate::mixing::MixingPair;

/// Normalization target for `‖M_iᵀM_i‖₂`.
pub const DEFAULT_LIPSCHITZ: f64 = 10.0;
pub const DEFAULT_NOISE_STD: f64 = 0.1;
/// `μ_f̄` at or below this fraction of `L` is treated as singular.
pub const STRONG_CONVEXITY_TOL: f64 = 1e-12;

/// Something with a stacked gradient `∇f(x)` whose rows are `∇f_i(x_i)`.
pub trait Objective {
    fn agents(&self) -> usize;
    fn dim(&self) -> usize;
    /// Common Lipschitz constant of the `∇f_i`.
    fn lipschitz(&self) -> f64;
    fn grad(&self, x: &Stacked) -> Result<Stacked>;
    /// `Σ_i f_i(x_i)`.
    fn value(&self, x: &Stacked) -> Result<f64>;
}

/// One agent's private data.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentData {
    /// `m_i × p`
    pub m: Stacked,
    pub y: Vec<f64>,
}

impl AgentData {
    /// `∇f_i(v) = M_iᵀ(M_i v − y_i)`.
    pub fn grad(&self, v: &[f64]) -> Vec<f64> {
        let r = self.residual(v);
        let p = self.m.cols();
        let mut g = alloc::vec![0.0; p];
        for (row, rk) in r.iter().enumerate() {
            for (gj, mj) in g.iter_mut().zip(self.m.row(row)) {
                *gj += mj * rk;
            }
        }
        g
    }

    pub fn value(&self, v: &[f64]) -> f64 {
        0.5 * self.residual(v).iter().map(|r| r * r).sum::<f64>()
    }

    fn residual(&self, v: &[f64]) -> Vec<f64> {
        (0..self.m.rows())
            .map(|k| self.m.row(k).iter().zip(v).map(|(a, b)| a * b).sum::<f64>() - self.y[k])
            .collect()
    }

    /// `M_iᵀM_i`.
    pub fn gram(&self) -> SymMatrix {
        let g = self.m.transpose_mul(&self.m).expect("same matrix");
        SymMatrix::new(self.m.cols(), g.into_vec()).expect("square")
    }

    /// `M_iᵀ y_i`.
    pub fn moment(&self) -> Vec<f64> {
        let p = self.m.cols();
        let mut out = alloc::vec![0.0; p];
        for (k, yk) in self.y.iter().enumerate() {
            for (o, mj) in out.iter_mut().zip(self.m.row(k)) {
                *o += mj * yk;
            }
        }
        out
    }
}

/// A decentralized sensing instance with its constants and exact optimizer.
#[derive(Debug, Clone)]
pub struct SensingProblem {
    agents: Vec<AgentData>,
    p: usize,
    noise_std: f64,
    seed: Option<u64>,
    lipschitz: f64,
    mu_fbar: f64,
    xstar: Vec<f64>,
    xstar_stacked: Stacked,
}

impl SensingProblem {
    /// Gaussian `M_i`, `x`, `e_i`, with each `M_i` rescaled so that
    /// `‖M_iᵀM_i‖₂ = 10`, and `y_i = M_i x + e_i`.
    pub fn generate(n: usize, p: usize, m_i: usize, noise_std: f64, seed: u64) -> Result<Self> {
        Self::generate_with(n, p, m_i, noise_std, DEFAULT_LIPSCHITZ, seed)
    }

    pub fn generate_with(
        n: usize,
        p: usize,
        m_i: usize,
        noise_std: f64,
        lipschitz: f64,
        seed: u64,
    ) -> Result<Self> {
        if n == 0 || p == 0 || m_i == 0 {
            return Err(Error::InvalidInput(alloc::format!(
                "n, p, m_i must be positive (got {n}, {p}, {m_i})"
            )));
        }
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::InvalidInput(alloc::format!("noise_std = {noise_std}")));
        }
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::InvalidInput(alloc::format!("L = {lipschitz}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = || -> f64 { rng.sample(StandardNormal) };
        let x_true: Vec<f64> = (0..p).map(|_| normal()).collect();
        let mut agents = Vec::with_capacity(n);
        for _ in 0..n {
            let raw = Stacked::from_fn(m_i, p, |_, _| normal());
            let noise: Vec<f64> = (0..m_i).map(|_| noise_std * normal()).collect();
            let gram = SymMatrix::new(p, raw.transpose_mul(&raw)?.into_vec())?;
            let top = gram.lambda_max()?;
            if !(top > 0.0) {
                return Err(Error::InvalidInput("sampled an all-zero sensing matrix".into()));
            }
            let m = raw.scale(libm::sqrt(lipschitz / top));
            let mut y = m.mul_vec(&x_true)?;
            for (yk, ek) in y.iter_mut().zip(&noise) {
                *yk += ek;
            }
            agents.push(AgentData { m, y });
        }
        let mut prob = Self::from_parts(agents, noise_std, Some(seed), Some(lipschitz))?;
        prob.seed = Some(seed);
        Ok(prob)
    }

    /// Builds an instance from explicit data. `L` defaults to the largest
    /// `‖M_iᵀM_i‖₂`; a supplied `L` must dominate every agent's.
    pub fn from_parts(
        agents: Vec<AgentData>,
        noise_std: f64,
        seed: Option<u64>,
        lipschitz: Option<f64>,
    ) -> Result<Self> {
        let n = agents.len();
        if n == 0 {
            return Err(Error::InvalidInput("no agents".into()));
        }
        let p = agents[0].m.cols();
        for (i, a) in agents.iter().enumerate() {
            if a.m.cols() != p || a.y.len() != a.m.rows() || a.m.rows() == 0 {
                return Err(Error::InvalidInput(alloc::format!(
                    "agent {} has M of shape {:?} and y of length {}",
                    i + 1,
                    a.m.shape(),
                    a.y.len()
                )));
            }
            if !a.m.is_finite() || a.y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("sensing data"));
            }
        }
        let mut hess = SymMatrix::zeros(p);
        let mut rhs = alloc::vec![0.0; p];
        let mut l_max = 0.0f64;
        for a in &agents {
            let g = a.gram();
            l_max = l_max.max(g.lambda_max()?);
            hess = hess.add(&g);
            for (r, v) in rhs.iter_mut().zip(a.moment()) {
                *r += v;
            }
        }
        let lipschitz = match lipschitz {
            Some(l) if l >= l_max * (1.0 - 1e-9) => l,
            Some(l) => {
                return Err(Error::InvalidInput(alloc::format!(
                    "L = {l} below an agent's curvature {l_max}"
                )))
            }
            None => l_max,
        };
        let mu_fbar = hess.lambda_min()? / n as f64;
        if !(mu_fbar > STRONG_CONVEXITY_TOL * lipschitz) {
            return Err(Error::NotStronglyConvex { lambda_min: mu_fbar });
        }
        let xstar = match cholesky_solve(&hess, &rhs, 1e-14)? {
            Some(x) => x,
            None => pinv_psd(&hess, DEFAULT_RANK_TOL)?.mul_vec(&rhs),
        };
        let xstar_stacked = Stacked::consensual(n, &xstar);
        Ok(Self {
            agents,
            p,
            noise_std,
            seed,
            lipschitz,
            mu_fbar,
            xstar,
            xstar_stacked,
        })
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn agent_data(&self) -> &[AgentData] {
        &self.agents
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// `λ_min((1/n) Σ M_iᵀM_i)`.
    pub fn mu_fbar(&self) -> f64 {
        self.mu_fbar
    }

    pub fn xstar(&self) -> &[f64] {
        &self.xstar
    }

    /// `1 (x*)ᵀ`.
    pub fn xstar_stacked(&self) -> &Stacked {
        &self.xstar_stacked
    }

    /// `‖(Σ M_iᵀM_i) x* − Σ M_iᵀy_i‖ / ‖Σ M_iᵀy_i‖`.
    pub fn normal_equation_residual(&self) -> f64 {
        let mut r = alloc::vec![0.0; self.p];
        let mut b = alloc::vec![0.0; self.p];
        for a in &self.agents {
            for (rj, gj) in r.iter_mut().zip(a.gram().mul_vec(&self.xstar)) {
                *rj += gj;
            }
            for (bj, mj) in b.iter_mut().zip(a.moment()) {
                *bj += mj;
            }
        }
        let num: f64 = r.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
        let den: f64 = b.iter().map(|v| v * v).sum();
        libm::sqrt(num) / libm::sqrt(den).max(f64::MIN_POSITIVE)
    }

    /// `μ_g(η)` for this instance over the given network.
    pub fn mu_g(&self, mp: &MixingPair, eta: f64) -> f64 {
        mu_g(
            self.mu_fbar,
            self.lipschitz,
            mp.spectral().lambda_min_plus_i_minus_w,
            eta,
        )
    }

    /// Samples the restricted strong convexity inequality at random points
    /// `x = X* + Δ` with `‖Δ‖_F = 1`.
    pub fn check_rsc(&self, mp: &MixingPair, eta: f64, samples: usize, seed: u64) -> Result<RscReport> {
        let mu = self.mu_g(mp, eta);
        let i_minus_w = mp.w().affine(-1.0, 1.0);
        let gstar = self.grad(&self.xstar_stacked)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut min_slack = f64::INFINITY;
        let mut violations = 0;
        for _ in 0..samples {
            let mut delta = Stacked::from_fn(self.n(), self.p, |_, _| rng.sample(StandardNormal));
            let norm = delta.frob_norm();
            delta = delta.scale(1.0 / norm);
            let slack = self.rsc_slack(&delta, &gstar, &i_minus_w, eta, mu)?;
            if slack < -RSC_TOL {
                violations += 1;
            }
            min_slack = min_slack.min(slack);
        }
        Ok(RscReport {
            mu_g: mu,
            samples,
            min_slack,
            violations,
        })
    }

    /// `⟨Δ, ∇f(X*+Δ) − ∇f(X*)⟩ + η‖Δ‖²_{I−W} − μ_g‖Δ‖²`.
    pub fn rsc_slack(
        &self,
        delta: &Stacked,
        gstar: &Stacked,
        i_minus_w: &SymMatrix,
        eta: f64,
        mu: f64,
    ) -> Result<f64> {
        let x = &self.xstar_stacked + delta;
        let dg = &self.grad(&x)? - gstar;
        let lhs = delta.frob_dot(&dg) + eta * crate::linalg::wnorm_sq(delta, i_minus_w)?;
        Ok(lhs - mu * delta.frob_norm_sq())
    }
}

/// Violation threshold for [`SensingProblem::check_rsc`].
pub const RSC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RscReport {
    pub mu_g: f64,
    pub samples: usize,
    pub min_slack: f64,
    pub violations: usize,
}

/// `μ_g = min{μ_f̄/2, μ_f̄² λ⁺_min(I−W) η / (μ_f̄² + 16L²)}`.
pub fn mu_g(mu_fbar: f64, lipschitz: f64, lambda_min_plus: f64, eta: f64) -> f64 {
    let second = mu_fbar * mu_fbar * lambda_min_plus / (mu_fbar * mu_fbar + 16.0 * lipschitz * lipschitz) * eta;
    (0.5 * mu_fbar).min(second)
}

impl Objective for SensingProblem {
    fn agents(&self) -> usize {
        self.n()
    }

    fn dim(&self) -> usize {
        self.p
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn grad(&self, x: &Stacked) -> Result<Stacked> {
        if x.shape() != (self.n(), self.p) {
            return Err(Error::DimensionMismatch {
                op: "SensingProblem::grad",
                expected: (self.n(), self.p),
                found: x.shape(),
            });
        }
        let mut out = Stacked::zeros(self.n(), self.p);
        for (i, a) in self.agents.iter().enumerate() {
            out.row_mut(i).copy_from_slice(&a.grad(x.row(i)));
        }
        Ok(out)
    }

    fn value(&self, x: &Stacked) -> Result<f64> {
        if x.shape() != (self.n(), self.p) {
            return Err(Error::DimensionMismatch {
                op: "SensingProblem::value",
                expected: (self.n(), self.p),
                found: x.shape(),
            });
        }
        Ok(self.agents.iter().enumerate().map(|(i, a)| a.value(x.row(i))).sum())
    }
}
