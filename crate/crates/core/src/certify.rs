//! Linear convergence certificates for EXTRA and NIDS and streaming audits
//! of the per-iteration equalities, inequalities and Lyapunov contraction.

use alloc::vec::Vec;

use crate::algorithms::{AlgoState, FixedPoint, Variant};
use crate::error::{Error, Result};
use crate::linalg::{lambda_max_product, wdot, wnorm_sq, Stacked, SymMatrix};
use crate::mixing::{build_derived, DerivedMatrices, MixingPair, NULL_TOL};
use crate::problem::{mu_g, SensingProblem};

/// Tolerance on equalities, relative to `1 + max(|a|, |b|)`.
pub const EQUALITY_TOL: f64 = 1e-9;
/// Inequality slack threshold, relative to `1 + V_k`.
pub const SLACK_TOL: f64 = 1e-8;
/// Allowed excess of the Lyapunov ratio over the certified rate.
pub const RATIO_TOL: f64 = 1e-8;
/// Ratios are audited only while `V_k > RATIO_FLOOR_REL · V_0`. Below that
/// the iterates sit within a few ulps of `x*` and the ratio is rounding noise.
pub const RATIO_FLOOR_REL: f64 = 1e-20;
/// Eigenvalue slack for the positive definiteness of `P`, `Q`, `Pn`.
pub const PD_SLACK: f64 = 1e-10;

/// The two problem constants every certificate needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConstants {
    pub lipschitz: f64,
    pub mu_fbar: f64,
}

impl From<&SensingProblem> for ProblemConstants {
    fn from(p: &SensingProblem) -> Self {
        Self {
            lipschitz: p.lipschitz(),
            mu_fbar: p.mu_fbar(),
        }
    }
}

/// `|a − b| / (1 + max(|a|, |b|))`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

/// `r₃ = r₁r₂/(r₁ + r₂ + r₁r₂)` with its limits at infinity.
pub fn r3_from(r1: f64, r2: f64) -> f64 {
    match (r1.is_infinite(), r2.is_infinite()) {
        (true, true) => 1.0,
        (true, false) => r2 / (1.0 + r2),
        (false, true) => r1 / (1.0 + r1),
        (false, false) => r1 * r2 / (r1 + r2 + r1 * r2),
    }
}

/// The three branches of the EXTRA rate, where `lambda_wm = λ_max(W̄M)`.
#[allow(clippy::too_many_arguments)]
pub fn extra_rho_branches(
    alpha: f64,
    lipschitz: f64,
    lambda_min_wbar: f64,
    mu_g: f64,
    eta: f64,
    xi: f64,
    r3: f64,
    lambda_wm: f64,
) -> [f64; 3] {
    let c = 2.0 * alpha - alpha * alpha * lipschitz / lambda_min_wbar;
    [
        1.0 - c * mu_g,
        2.0 * c * eta / xi,
        1.0 - (r3 - 4.0 * xi * lambda_wm) / (r3 + (1.0 - 2.0 * xi) * lambda_wm),
    ]
}

/// EXTRA rate for `W̃ = (I + W)/2`, written in terms of `λ_min(W)` and the
/// spectral gap `β`.
#[allow(clippy::too_many_arguments)]
pub fn extra_rho_special(
    alpha: f64,
    lipschitz: f64,
    theta: f64,
    lambda_min_w: f64,
    beta: f64,
    mu_g: f64,
    eta: f64,
    xi: f64,
    r3: f64,
) -> f64 {
    let s = 2.0 - theta + theta * lambda_min_w;
    let a = 1.0 - (2.0 * alpha - 2.0 * alpha * alpha * lipschitz / s) * mu_g;
    let b = (4.0 * alpha - 4.0 * alpha * alpha * lipschitz / s) * eta / xi;
    let k = 2.0 - theta * beta;
    let c = 1.0 - (beta * r3 - 4.0 * xi * k) / (beta * r3 + (1.0 - 2.0 * xi) * k);
    a.max(b).max(c)
}

fn max3(v: [f64; 3]) -> f64 {
    v[0].max(v[1]).max(v[2])
}

/// Optional overrides for the EXTRA certificate parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExtraParams {
    pub xi: Option<f64>,
    pub eta: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExtraCertificate {
    pub alpha: f64,
    pub theta: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub xi: f64,
    pub xi_upper: f64,
    pub eta: f64,
    pub eta_upper: f64,
    pub mu_g: f64,
    /// `λ_max(W̄M)`
    pub lambda_wm: f64,
    pub lambda_min_wbar: f64,
    pub rho_branches: [f64; 3],
    pub rho: f64,
    /// Closed-form rate, available when `G = 0`.
    pub rho_special: Option<f64>,
    /// `θ = 1` or `G = 0`.
    pub special_case: bool,
    /// `H + (ξ/2)(I − W)`
    pub p: SymMatrix,
    /// `M + (r₃ − 2ξλ_max(W̄M)) W̄⁻¹`
    pub q: SymMatrix,
    pub p_lambda_min: f64,
    pub q_lambda_min: f64,
}

/// EXTRA constants and Lyapunov metric for stepsize `alpha`.
pub fn extra_constants(
    mp: &MixingPair,
    d: &DerivedMatrices,
    pc: ProblemConstants,
    alpha: f64,
    params: ExtraParams,
) -> Result<ExtraCertificate> {
    let theta = d.theta;
    let l = pc.lipschitz;
    let lambda_min_wbar = d.wbar.lambda_min()?;
    let bound = 2.0 * lambda_min_wbar / l;
    if !(alpha > 0.0 && alpha < bound) {
        return Err(Error::Stepsize {
            algorithm: "EXTRA",
            alpha,
            bound,
        });
    }
    let r1 = if theta == 1.0 {
        f64::INFINITY
    } else {
        let lam = lambda_max_product(&d.wbar_inv, &d.i_minus_wt)?;
        if lam > 0.0 {
            (4.0 * theta - 3.0) / (4.0 * (1.0 - theta) * (1.0 - theta) * lam)
        } else {
            f64::INFINITY
        }
    };
    let r2 = if d.g_is_zero {
        f64::INFINITY
    } else {
        let lam = lambda_max_product(&d.wbar_inv, &d.g)?;
        if lam > 0.0 {
            1.0 / (2.0 * lam)
        } else {
            f64::INFINITY
        }
    };
    if !(r1 > 0.0) {
        return Err(Error::EmptyInterval {
            constant: "r1",
            upper: r1,
        });
    }
    let r3 = r3_from(r1, r2);
    let lambda_wm = lambda_max_product(&d.wbar, &d.m)?;
    let xi_upper = (r3 / (4.0 * lambda_wm)).min(1.0);
    if !(xi_upper > 0.0) {
        return Err(Error::EmptyInterval {
            constant: "xi",
            upper: xi_upper,
        });
    }
    let xi = params.xi.unwrap_or(0.5 * xi_upper);
    if !(xi > 0.0 && xi < xi_upper) {
        return Err(Error::ParameterOutOfRange {
            constant: "xi",
            value: xi,
            upper: xi_upper,
        });
    }
    let denom = 4.0 * alpha * lambda_min_wbar - 2.0 * alpha * alpha * l;
    let eta_upper = lambda_min_wbar * xi / denom;
    if !(eta_upper > 0.0 && eta_upper.is_finite()) {
        return Err(Error::EmptyInterval {
            constant: "eta",
            upper: eta_upper,
        });
    }
    let eta = params.eta.unwrap_or(0.5 * eta_upper);
    if !(eta > 0.0 && eta < eta_upper) {
        return Err(Error::ParameterOutOfRange {
            constant: "eta",
            value: eta,
            upper: eta_upper,
        });
    }
    let mu = mu_g(pc.mu_fbar, l, mp.spectral().lambda_min_plus_i_minus_w, eta);
    let rho_branches = extra_rho_branches(alpha, l, lambda_min_wbar, mu, eta, xi, r3, lambda_wm);
    let rho = max3(rho_branches);
    let rho_special = d.g_is_zero.then(|| {
        extra_rho_special(
            alpha,
            l,
            theta,
            mp.spectral().lambda_min_w,
            mp.spectral().spectral_gap,
            mu,
            eta,
            xi,
            r3,
        )
    });
    let p = d.h.add(&d.i_minus_w.scale(0.5 * xi));
    let q = d.m.add(&d.wbar_inv.scale(r3 - 2.0 * xi * lambda_wm));
    let p_lambda_min = p.lambda_min()?;
    let q_lambda_min = q.lambda_min()?;
    Ok(ExtraCertificate {
        alpha,
        theta,
        r1,
        r2,
        r3,
        xi,
        xi_upper,
        eta,
        eta_upper,
        mu_g: mu,
        lambda_wm,
        lambda_min_wbar,
        rho_branches,
        rho,
        rho_special,
        special_case: theta == 1.0 || d.g_is_zero,
        p,
        q,
        p_lambda_min,
        q_lambda_min,
    })
}

impl ExtraCertificate {
    /// `‖x − x*‖²_P + ‖y − y*‖²_Q`.
    pub fn lyapunov(&self, x: &Stacked, y: &Stacked, fp: &FixedPoint) -> Result<f64> {
        Ok(wnorm_sq(&(x - &fp.xstar), &self.p)? + wnorm_sq(&(y - &fp.ystar), &self.q)?)
    }

    pub fn metrics_positive_definite(&self) -> bool {
        self.p_lambda_min > -PD_SLACK && self.q_lambda_min > -PD_SLACK
    }
}

/// Grid search over `θ`, `ξ`, `η` for the smallest EXTRA rate. Grid points
/// are interior fractions `(i + 1)/(grid + 1)` of each admissible interval.
pub fn optimize_extra(
    mp: &MixingPair,
    pc: ProblemConstants,
    alpha: f64,
    grid: usize,
) -> Result<ExtraCertificate> {
    let grid = grid.max(1);
    let upper = mp.theta_upper();
    let mut best: Option<ExtraCertificate> = None;
    let mut last_err = None;
    for t in 0..grid {
        let theta = if grid == 1 {
            mp.theta()
        } else {
            0.75 + (upper - 0.75) * (t + 1) as f64 / grid as f64
        };
        let candidate = match mp.clone().with_theta(theta).and_then(|m| build_derived(&m).map(|d| (m, d))) {
            Ok(c) => c,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let (m, d) = candidate;
        let base = match extra_constants(&m, &d, pc, alpha, ExtraParams::default()) {
            Ok(c) => c,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        for i in 0..grid {
            let xi = base.xi_upper * (i + 1) as f64 / (grid + 1) as f64;
            let denom = 4.0 * alpha * base.lambda_min_wbar - 2.0 * alpha * alpha * pc.lipschitz;
            let eta_upper = base.lambda_min_wbar * xi / denom;
            for j in 0..grid {
                let eta = eta_upper * (j + 1) as f64 / (grid + 1) as f64;
                let mu = mu_g(pc.mu_fbar, pc.lipschitz, m.spectral().lambda_min_plus_i_minus_w, eta);
                let rho = max3(extra_rho_branches(
                    alpha,
                    pc.lipschitz,
                    base.lambda_min_wbar,
                    mu,
                    eta,
                    xi,
                    base.r3,
                    base.lambda_wm,
                ));
                if best.as_ref().is_none_or(|b| rho < b.rho) {
                    best = Some(extra_constants(&m, &d, pc, alpha, ExtraParams { xi: Some(xi), eta: Some(eta) })?);
                }
            }
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::NoCertificate("EXTRA")))
}

/// Optional overrides for the NIDS certificate parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NidsParams {
    pub r4: Option<f64>,
    pub eta: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct NidsCertificate {
    pub alpha: f64,
    pub theta: f64,
    pub r4: f64,
    pub r5: f64,
    pub eta: f64,
    pub eta_upper: f64,
    pub mu_g: f64,
    pub rho_branches: [f64; 3],
    pub rho3: f64,
    /// `M̃ + (θ − 1/2 + 2r₄) I`
    pub q: SymMatrix,
    /// `I + (I − W)/r₅`
    pub pn: SymMatrix,
    /// Smallest eigenvalue of `Q` on `Range(I − W)`.
    pub q_lambda_min_range: f64,
    /// `Q 1 = (2r₄ − 1/2) 1`.
    pub q_lambda_ones: f64,
    pub pn_lambda_min: f64,
    /// `M̃ − (1 − θ) I = 2(I − W)† − I`
    pub mt_shift: SymMatrix,
    /// `M̃ + (θ − 1/2 − 2r₄) I`
    pub q_prev: SymMatrix,
    /// `M̃ + (θ − 3/4 − r₄) I`
    pub q_step: SymMatrix,
    pub i_minus_w: SymMatrix,
    pub i_minus_w_pinv: SymMatrix,
    /// `4(I − W)† − 4I + (I − W)`
    pub dx_metric: SymMatrix,
    /// `(I + W)/2 = I − (I − W)/2`
    pub w_half: SymMatrix,
}

/// Smallest eigenvalue of `a` compressed to the span of the eigenvectors of
/// `basis_of` whose eigenvalues exceed `tol`.
pub fn lambda_min_on_range(a: &SymMatrix, basis_of: &SymMatrix, tol: f64) -> Result<f64> {
    let e = basis_of.eigen()?;
    let n = a.dim();
    let cols: Vec<usize> = (0..n).filter(|&j| e.values[j] > tol).collect();
    if cols.is_empty() {
        return Ok(f64::INFINITY);
    }
    let v = Stacked::from_fn(n, cols.len(), |i, c| e.vectors.get(i, cols[c]));
    let av = a.mul_stacked(&v)?;
    let c = v.transpose_mul(&av)?;
    SymMatrix::new(cols.len(), c.into_vec())?.lambda_min()
}

/// NIDS constants and Lyapunov metric for stepsize `alpha`.
pub fn nids_constants(
    mp: &MixingPair,
    d: &DerivedMatrices,
    pc: ProblemConstants,
    alpha: f64,
    params: NidsParams,
) -> Result<NidsCertificate> {
    let l = pc.lipschitz;
    let bound = 2.0 / l;
    if !(alpha > 0.0 && alpha < bound) {
        return Err(Error::Stepsize {
            algorithm: "NIDS",
            alpha,
            bound,
        });
    }
    let theta = d.theta;
    if !(theta > 0.75) {
        return Err(Error::VacuousCertificate { theta });
    }
    let lmax = mp.spectral().lambda_max_i_minus_w;
    let theta_cap = (2.0 / lmax).min(1.0);
    if theta > theta_cap {
        return Err(Error::ThetaOutOfRange {
            theta,
            upper: theta_cap,
        });
    }
    let r4_upper = theta - 0.75;
    let r4 = params.r4.unwrap_or(0.5 * r4_upper);
    if !(r4 > 0.0 && r4 < r4_upper) {
        return Err(Error::ParameterOutOfRange {
            constant: "r4",
            value: r4,
            upper: r4_upper,
        });
    }
    let denom = 2.0 - (0.75 + r4) * lmax;
    if !(denom > 0.0) {
        return Err(Error::EmptyInterval {
            constant: "r5",
            upper: denom,
        });
    }
    let r5 = 2.0f64.max((lmax - 2.0) * (lmax - 2.0) / denom);
    let c = alpha * (2.0 - alpha * l);
    let eta_upper = 1.0 / (c * r5);
    let eta = params.eta.unwrap_or(0.5 * eta_upper);
    if !(eta > 0.0 && eta < eta_upper) {
        return Err(Error::ParameterOutOfRange {
            constant: "eta",
            value: eta,
            upper: eta_upper,
        });
    }
    let lplus = mp.spectral().lambda_min_plus_i_minus_w;
    let mu = mu_g(pc.mu_fbar, l, lplus, eta);
    let rho_branches = [
        1.0 - c * mu,
        c * eta * r5,
        1.0 - 4.0 * r4 / (2.0 / lplus - 0.5 + 2.0 * r4),
    ];
    let rho3 = max3(rho_branches);
    let n = mp.n();
    let q = d.mtilde.affine(1.0, theta - 0.5 + 2.0 * r4);
    let pn = d.i_minus_w.affine(1.0 / r5, 0.0).add(&SymMatrix::identity(n));
    let q_lambda_min_range = lambda_min_on_range(&q, &d.i_minus_w, NULL_TOL)?;
    let pn_lambda_min = pn.lambda_min()?;
    let mt_shift = d.mtilde.affine(1.0, -(1.0 - theta));
    let q_prev = d.mtilde.affine(1.0, theta - 0.5 - 2.0 * r4);
    let q_step = d.mtilde.affine(1.0, theta - 0.75 - r4);
    let dx_metric = d.i_minus_w_pinv.scale(4.0).add(&d.i_minus_w).affine(1.0, -4.0);
    Ok(NidsCertificate {
        alpha,
        theta,
        r4,
        r5,
        eta,
        eta_upper,
        mu_g: mu,
        rho_branches,
        rho3,
        q,
        pn,
        q_lambda_min_range,
        q_lambda_ones: 2.0 * r4 - 0.5,
        pn_lambda_min,
        mt_shift,
        q_prev,
        q_step,
        i_minus_w: d.i_minus_w.clone(),
        i_minus_w_pinv: d.i_minus_w_pinv.clone(),
        dx_metric,
        w_half: mp.w().affine(0.5, 0.5),
    })
}

impl NidsCertificate {
    /// `‖x − x*‖²_{Pn} + α²‖d − d*‖²_Q`.
    pub fn lyapunov(&self, x: &Stacked, d: &Stacked, fp: &FixedPoint) -> Result<f64> {
        Ok(wnorm_sq(&(x - &fp.xstar), &self.pn)? + self.alpha * self.alpha * wnorm_sq(&(d - &fp.dstar), &self.q)?)
    }

    /// `Pn ≻ 0`, and `Q ≻ 0` on `Range(I − W)`, where the dual iterates live.
    pub fn metrics_positive_definite(&self) -> bool {
        self.pn_lambda_min > -PD_SLACK && self.q_lambda_min_range > -PD_SLACK
    }
}

/// Grid search over `θ`, `r₄`, `η` for the smallest NIDS rate.
pub fn optimize_nids(mp: &MixingPair, pc: ProblemConstants, alpha: f64, grid: usize) -> Result<NidsCertificate> {
    let grid = grid.max(1);
    let upper = mp.theta_upper().min(2.0 / mp.spectral().lambda_max_i_minus_w);
    let mut best: Option<NidsCertificate> = None;
    let mut last_err = None;
    for t in 0..grid {
        let theta = 0.75 + (upper - 0.75) * (t + 1) as f64 / grid as f64;
        let (m, d) = match mp.clone().with_theta(theta).and_then(|m| build_derived(&m).map(|d| (m, d))) {
            Ok(c) => c,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        for i in 0..grid {
            let r4 = (theta - 0.75) * (i + 1) as f64 / (grid + 1) as f64;
            let base = match nids_constants(&m, &d, pc, alpha, NidsParams { r4: Some(r4), eta: None }) {
                Ok(c) => c,
                Err(e) => {
                    last_err = Some(e);
                    continue;
                }
            };
            for j in 0..grid {
                let eta = base.eta_upper * (j + 1) as f64 / (grid + 1) as f64;
                let c = nids_constants(&m, &d, pc, alpha, NidsParams { r4: Some(r4), eta: Some(eta) })?;
                if best.as_ref().is_none_or(|b| c.rho3 < b.rho3) {
                    best = Some(c);
                }
            }
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::NoCertificate("NIDS")))
}

/// Checks evaluated on one transition `k → k + 1`. Slacks are divided by
/// `1 + V_k`; a check passes when its slack is at least `−SLACK_TOL`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditRow {
    /// Index of the new iterate.
    pub k: usize,
    pub lyapunov_prev: f64,
    pub lyapunov: f64,
    /// `V_{k+1}/V_k`, when `V_k > 0`.
    pub ratio: Option<f64>,
    /// `ρV_k − V_{k+1}`
    pub contraction_slack: f64,
    /// Slack of the one-step descent inequality.
    pub key_slack: f64,
    /// Largest relative error among the norm equalities.
    pub equality_error: f64,
    /// NIDS: dual/primal connection `(I − (I−W)/2)(d⁺ − d) = (I−W)/(2α)(x⁺ − x*)`.
    pub connection_slack: Option<f64>,
    /// NIDS: relative error along the identity chain bounding `‖x⁺ − x*‖²_{I−W}`.
    pub dx_identity_error: Option<f64>,
    /// NIDS: slack of the final `r₅` inequality in that chain.
    pub dx_bound_slack: Option<f64>,
}

impl AuditRow {
    pub fn worst_slack(&self) -> f64 {
        let mut s = self.key_slack.min(self.contraction_slack);
        for v in [self.connection_slack, self.dx_bound_slack].into_iter().flatten() {
            s = s.min(v);
        }
        s
    }

    pub fn worst_equality_error(&self) -> f64 {
        self.equality_error.max(self.dx_identity_error.unwrap_or(0.0))
    }

    /// Every check at its tolerance; the ratio only when `V_k > ratio_floor`.
    pub fn passes(&self, rho: f64, ratio_floor: f64) -> bool {
        let ratio_ok = self.lyapunov_prev <= ratio_floor || self.ratio.is_none_or(|r| r <= rho + RATIO_TOL);
        self.worst_slack() >= -SLACK_TOL && self.worst_equality_error() <= EQUALITY_TOL && ratio_ok
    }
}

/// Summary over a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub rho: f64,
    pub iterations: usize,
    pub worst_slack: f64,
    pub worst_equality_error: f64,
    /// Largest audited ratio (those above the floor).
    pub max_ratio: f64,
    pub ratio_floor: f64,
    /// Indices of rows that failed a check.
    pub failures: Vec<usize>,
}

impl AuditReport {
    /// Report auditing every ratio with `V_k > 0`.
    pub fn new(rho: f64) -> Self {
        Self::with_floor(rho, 0.0)
    }

    /// Report with floor `RATIO_FLOOR_REL · v0`.
    pub fn relative_to(rho: f64, v0: f64) -> Self {
        Self::with_floor(rho, RATIO_FLOOR_REL * v0)
    }

    pub fn with_floor(rho: f64, ratio_floor: f64) -> Self {
        Self {
            rho,
            ratio_floor,
            iterations: 0,
            worst_slack: f64::INFINITY,
            worst_equality_error: 0.0,
            max_ratio: 0.0,
            failures: Vec::new(),
        }
    }

    pub fn absorb(&mut self, row: &AuditRow) {
        self.iterations += 1;
        self.worst_slack = self.worst_slack.min(row.worst_slack());
        self.worst_equality_error = self.worst_equality_error.max(row.worst_equality_error());
        if let Some(r) = row.ratio.filter(|_| row.lyapunov_prev > self.ratio_floor) {
            self.max_ratio = self.max_ratio.max(r);
        }
        if !row.passes(self.rho, self.ratio_floor) {
            self.failures.push(row.k);
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn ratio(prev: f64, next: f64) -> Option<f64> {
    (prev > 0.0).then(|| next / prev)
}

/// Streaming auditor for EXTRA_XY trajectories.
pub struct ExtraAuditor<'a> {
    pub derived: &'a DerivedMatrices,
    /// Without a certificate only the identity and inequality checks run, and `V` is the
    /// unweighted potential `‖x − x*‖²_H + ‖y − y*‖²_M`.
    pub cert: Option<&'a ExtraCertificate>,
    pub fp: &'a FixedPoint,
    theta_term: SymMatrix,
}

impl<'a> ExtraAuditor<'a> {
    pub fn new(derived: &'a DerivedMatrices, cert: &'a ExtraCertificate, fp: &'a FixedPoint) -> Self {
        Self {
            derived,
            cert: Some(cert),
            fp,
            theta_term: derived.i_minus_wt.scale(derived.theta - 0.75),
        }
    }

    /// Identity and inequality checks only, for stepsizes outside the certified range.
    pub fn without_certificate(derived: &'a DerivedMatrices, fp: &'a FixedPoint) -> Self {
        Self {
            derived,
            cert: None,
            fp,
            theta_term: derived.i_minus_wt.scale(derived.theta - 0.75),
        }
    }

    pub fn lyapunov(&self, x: &Stacked, y: &Stacked) -> Result<f64> {
        match self.cert {
            Some(c) => c.lyapunov(x, y, self.fp),
            None => Ok(wnorm_sq(&(x - &self.fp.xstar), &self.derived.h)? + wnorm_sq(&(y - &self.fp.ystar), &self.derived.m)?),
        }
    }

    pub fn observe(&self, prev: &AlgoState, next: &AlgoState) -> Result<AuditRow> {
        assert_eq!(prev.variant, Variant::ExtraXy);
        let d = self.derived;
        let fp = self.fp;
        let a = prev.alpha;
        let (x, xn) = (&prev.x, &next.x);
        let y = prev.y.as_ref().expect("EXTRA_XY state carries y");
        let yn = next.y.as_ref().expect("EXTRA_XY state carries y");
        let ex = x - &fp.xstar;
        let exn = xn - &fp.xstar;
        let ey = y - &fp.ystar;
        let eyn = yn - &fp.ystar;
        let dx = x - xn;
        let dy = y - yn;

        let v_prev = self.lyapunov(x, y)?;
        let v_next = self.lyapunov(xn, yn)?;
        let scale = 1.0 + v_prev;

        let lhs2 = wnorm_sq(&exn, &d.wt_minus_w)?;
        let rhs2 = wnorm_sq(&dy, &d.m)?;
        let equality_error = relative_error(lhs2, rhs2);

        let gstar = &fp.ystar.scale(1.0 / a);
        let dg = &prev.grad - gstar;
        let lhs = wnorm_sq(&exn, &d.h)? + wnorm_sq(&eyn, &d.m)?;
        let rhs = wnorm_sq(&ex, &d.h)? + wnorm_sq(&ey, &d.m)?
            - wnorm_sq(&dx, &d.wbar)?
            - wnorm_sq(&dx, &self.theta_term)?
            - wnorm_sq(&exn, &d.g)?
            - 2.0 * a * exn.frob_dot(&dg);
        let key_slack = (rhs - lhs) / scale;

        Ok(AuditRow {
            k: next.k,
            lyapunov_prev: v_prev,
            lyapunov: v_next,
            ratio: self.cert.and(ratio(v_prev, v_next)),
            contraction_slack: self.cert.map_or(f64::INFINITY, |c| (c.rho * v_prev - v_next) / scale),
            key_slack,
            equality_error,
            connection_slack: None,
            dx_identity_error: None,
            dx_bound_slack: None,
        })
    }
}

/// Streaming auditor for NIDS_DX trajectories.
pub struct NidsAuditor<'a> {
    pub cert: &'a NidsCertificate,
    pub fp: &'a FixedPoint,
    two_i_minus: SymMatrix,
    sandwich: SymMatrix,
}

impl<'a> NidsAuditor<'a> {
    pub fn new(cert: &'a NidsCertificate, fp: &'a FixedPoint) -> Self {
        // 2I − (I − W) = I + W
        let two_i_minus = cert.i_minus_w.affine(-1.0, 2.0);
        let s = two_i_minus.mul_sym(&cert.i_minus_w_pinv);
        let s = SymMatrix::new(s.rows(), s.into_vec())
            .expect("square")
            .mul_sym(&two_i_minus);
        let sandwich = SymMatrix::new(s.rows(), s.into_vec()).expect("square");
        Self {
            cert,
            fp,
            two_i_minus,
            sandwich,
        }
    }

    pub fn observe(&self, prev: &AlgoState, next: &AlgoState) -> Result<AuditRow> {
        assert_eq!(prev.variant, Variant::NidsDx);
        let c = self.cert;
        let fp = self.fp;
        let a = prev.alpha;
        let (x, xn) = (&prev.x, &next.x);
        let dv = prev.d.as_ref().expect("NIDS_DX state carries d");
        let dn = next.d.as_ref().expect("NIDS_DX state carries d");
        let ex = x - &fp.xstar;
        let exn = xn - &fp.xstar;
        let ed = dv - &fp.dstar;
        let edn = dn - &fp.dstar;
        let step_d = dn - dv;

        let v_prev = c.lyapunov(x, dv, fp)?;
        let v_next = c.lyapunov(xn, dn, fp)?;
        let scale = 1.0 + v_prev;

        // equalities along the new iterate
        let e4a = relative_error(exn.frob_dot(&edn), a * wdot(&step_d, &edn, &c.mt_shift)?);
        let e4b = relative_error(exn.frob_dot(&step_d), a * wnorm_sq(&step_d, &c.mt_shift)?);

        let lhs26 = c.w_half.mul_stacked(&step_d)?;
        let rhs26 = c.i_minus_w.mul_stacked(&exn)?.scale(0.5 / a);
        let connection_slack = -(&lhs26 - &rhs26).frob_norm() / scale;

        let gstar = -&fp.dstar;
        let dg = &prev.grad - &gstar;
        let a2 = a * a;
        let lhs = exn.frob_norm_sq() + a2 * wnorm_sq(&edn, &c.q)?;
        let rhs = ex.frob_norm_sq() + a2 * wnorm_sq(&ed, &c.q_prev)? - a2 * wnorm_sq(&step_d, &c.q_step)?
            + a2 * dg.frob_norm_sq()
            - 2.0 * a * ex.frob_dot(&dg);
        let key_slack = (rhs - lhs) / scale;

        let t1 = wnorm_sq(&exn, &c.i_minus_w)?;
        let t2 = wnorm_sq(&c.i_minus_w.mul_stacked(&exn)?, &c.i_minus_w_pinv)?;
        let t3 = a2 * wnorm_sq(&self.two_i_minus.mul_stacked(&step_d)?, &c.i_minus_w_pinv)?;
        let t4 = a2 * wnorm_sq(&step_d, &self.sandwich)?;
        let t5 = a2 * wnorm_sq(&step_d, &c.dx_metric)?;
        let bound = a2 * c.r5 * wnorm_sq(&step_d, &c.q_step)?;
        let dx_identity_error = relative_error(t1, t2)
            .max(relative_error(t2, t3))
            .max(relative_error(t3, t4))
            .max(relative_error(t4, t5));

        Ok(AuditRow {
            k: next.k,
            lyapunov_prev: v_prev,
            lyapunov: v_next,
            ratio: ratio(v_prev, v_next),
            contraction_slack: (c.rho3 * v_prev - v_next) / scale,
            key_slack,
            equality_error: e4a.max(e4b),
            connection_slack: Some(connection_slack),
            dx_identity_error: Some(dx_identity_error),
            dx_bound_slack: Some((bound - t5) / scale),
        })
    }
}
