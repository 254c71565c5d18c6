//! DGD, EXTRA and NIDS steppers, in their original two-step forms and their
//! primal-dual reformulations, plus the stepsize bound calculators.

use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{Stacked, SymMatrix};
use crate::mixing::{DerivedMatrices, MixingPair};
use crate::problem::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Dgd,
    Extra,
    ExtraXy,
    Nids,
    NidsDx,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Dgd,
        Variant::Extra,
        Variant::ExtraXy,
        Variant::Nids,
        Variant::NidsDx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Dgd => "DGD",
            Variant::Extra => "EXTRA",
            Variant::ExtraXy => "EXTRA_XY",
            Variant::Nids => "NIDS",
            Variant::NidsDx => "NIDS_DX",
        }
    }

    /// The primal-dual form that generates the same `x` sequence.
    pub fn reformulated(self) -> Option<Variant> {
        match self {
            Variant::Extra | Variant::ExtraXy => Some(Variant::ExtraXy),
            Variant::Nids | Variant::NidsDx => Some(Variant::NidsDx),
            Variant::Dgd => None,
        }
    }

    pub fn is_extra(self) -> bool {
        matches!(self, Variant::Extra | Variant::ExtraXy)
    }

    pub fn is_nids(self) -> bool {
        matches!(self, Variant::Nids | Variant::NidsDx)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        match norm.as_str() {
            "dgd" => Ok(Variant::Dgd),
            "extra" => Ok(Variant::Extra),
            "extra_xy" => Ok(Variant::ExtraXy),
            "nids" => Ok(Variant::Nids),
            "nids_dx" => Ok(Variant::NidsDx),
            _ => Err(Error::InvalidInput(alloc::format!(
                "unknown algorithm '{s}' (expected dgd, extra, extra_xy, nids, nids_dx)"
            ))),
        }
    }
}

/// Mixing operators shared by all steppers.
#[derive(Debug, Clone)]
pub struct Operators {
    pub w: SymMatrix,
    pub wt: SymMatrix,
    /// `(I + W)/2`
    pub w_half: SymMatrix,
    /// `W̃ − W`
    pub wt_minus_w: SymMatrix,
    /// `I − W`
    pub i_minus_w: SymMatrix,
}

impl Operators {
    pub fn new(mp: &MixingPair) -> Self {
        Self::from_matrices(mp.w().clone(), mp.wt().clone())
    }

    pub fn from_matrices(w: SymMatrix, wt: SymMatrix) -> Self {
        let w_half = w.affine(0.5, 0.5);
        let wt_minus_w = wt.sub(&w);
        let i_minus_w = w.affine(-1.0, 1.0);
        Self {
            w,
            wt,
            w_half,
            wt_minus_w,
            i_minus_w,
        }
    }

    pub fn n(&self) -> usize {
        self.w.dim()
    }
}

/// Iterate of one algorithm. `grad` always holds `∇f(x)`, so each step costs
/// one gradient evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgoState {
    pub variant: Variant,
    pub k: usize,
    pub alpha: f64,
    pub x: Stacked,
    pub grad: Stacked,
    /// `x^{k−1}` and `∇f(x^{k−1})` for the two-step forms, once `k ≥ 1`.
    pub x_prev: Option<Stacked>,
    pub grad_prev: Option<Stacked>,
    /// EXTRA_XY dual variable.
    pub y: Option<Stacked>,
    /// NIDS_DX dual variable.
    pub d: Option<Stacked>,
    pub grad_evals: usize,
}

impl AlgoState {
    /// State at `k = 0`: `y⁰ = −(W̃ − W)x⁰` for EXTRA_XY and `d⁰ = 0` for NIDS_DX.
    pub fn init<O: Objective + ?Sized>(
        variant: Variant,
        x0: Stacked,
        alpha: f64,
        ops: &Operators,
        obj: &O,
    ) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidInput(alloc::format!("stepsize {alpha} is not finite and non-negative")));
        }
        if x0.rows() != ops.n() {
            return Err(Error::DimensionMismatch {
                op: "AlgoState::init",
                expected: (ops.n(), x0.cols()),
                found: x0.shape(),
            });
        }
        let grad = obj.grad(&x0)?;
        let y = (variant == Variant::ExtraXy).then(|| -&ops.wt_minus_w.apply(&x0));
        let d = (variant == Variant::NidsDx).then(|| Stacked::zeros(x0.rows(), x0.cols()));
        Ok(Self {
            variant,
            k: 0,
            alpha,
            x: x0,
            grad,
            x_prev: None,
            grad_prev: None,
            y,
            d,
            grad_evals: 1,
        })
    }

    fn advance<O: Objective + ?Sized>(&self, x_next: Stacked, obj: &O, keep_prev: bool) -> Result<Self> {
        let grad = obj.grad(&x_next)?;
        Ok(Self {
            variant: self.variant,
            k: self.k + 1,
            alpha: self.alpha,
            x_prev: keep_prev.then(|| self.x.clone()),
            grad_prev: keep_prev.then(|| self.grad.clone()),
            x: x_next,
            grad,
            y: None,
            d: None,
            grad_evals: self.grad_evals + 1,
        })
    }
}

fn expect_variant(state: &AlgoState, v: Variant) {
    assert_eq!(state.variant, v, "stepper called on a {} state", state.variant);
}

/// `x⁺ = W x − α ∇f(x)`.
pub fn dgd_step<O: Objective + ?Sized>(state: &AlgoState, ops: &Operators, obj: &O) -> Result<AlgoState> {
    expect_variant(state, Variant::Dgd);
    let mut x = ops.w.mul_stacked(&state.x)?;
    x.axpy(-state.alpha, &state.grad);
    state.advance(x, obj, false)
}

/// `x¹ = W x⁰ − α∇f(x⁰)`, then
/// `x^{k+2} = (I + W) x^{k+1} − W̃ x^k − α[∇f(x^{k+1}) − ∇f(x^k)]`.
pub fn extra_step<O: Objective + ?Sized>(state: &AlgoState, ops: &Operators, obj: &O) -> Result<AlgoState> {
    expect_variant(state, Variant::Extra);
    let a = state.alpha;
    let x = match (&state.x_prev, &state.grad_prev) {
        (Some(xp), Some(gp)) => {
            let mut x = &state.x + &ops.w.mul_stacked(&state.x)?;
            x -= &ops.wt.mul_stacked(xp)?;
            x.axpy(-a, &state.grad);
            x.axpy(a, gp);
            x
        }
        _ => {
            let mut x = ops.w.mul_stacked(&state.x)?;
            x.axpy(-a, &state.grad);
            x
        }
    };
    state.advance(x, obj, true)
}

/// `x⁺ = W̃ x + y − α∇f(x)`, then `y⁺ = y − (W̃ − W) x⁺`.
pub fn extra_xy_step<O: Objective + ?Sized>(state: &AlgoState, ops: &Operators, obj: &O) -> Result<AlgoState> {
    expect_variant(state, Variant::ExtraXy);
    let y = state.y.as_ref().expect("EXTRA_XY state carries y");
    let mut x = ops.wt.mul_stacked(&state.x)?;
    x += y;
    x.axpy(-state.alpha, &state.grad);
    let y_next = y - &ops.wt_minus_w.mul_stacked(&x)?;
    let mut next = state.advance(x, obj, false)?;
    next.y = Some(y_next);
    Ok(next)
}

/// `x¹ = (I + W)/2 [x⁰ − α∇f(x⁰)]`, then
/// `x^{k+2} = (I + W)/2 [2x^{k+1} − x^k − α(∇f(x^{k+1}) − ∇f(x^k))]`.
pub fn nids_step<O: Objective + ?Sized>(state: &AlgoState, ops: &Operators, obj: &O) -> Result<AlgoState> {
    expect_variant(state, Variant::Nids);
    let a = state.alpha;
    let inner = match (&state.x_prev, &state.grad_prev) {
        (Some(xp), Some(gp)) => {
            let mut v = state.x.scale(2.0);
            v -= xp;
            v.axpy(-a, &state.grad);
            v.axpy(a, gp);
            v
        }
        _ => {
            let mut v = state.x.clone();
            v.axpy(-a, &state.grad);
            v
        }
    };
    let x = ops.w_half.mul_stacked(&inner)?;
    state.advance(x, obj, true)
}

/// `d⁺ = d + (I − W)/(2α) [x − α∇f(x) − α d]`, then `x⁺ = x − α∇f(x) − α d⁺`.
pub fn nids_dx_step<O: Objective + ?Sized>(state: &AlgoState, ops: &Operators, obj: &O) -> Result<AlgoState> {
    expect_variant(state, Variant::NidsDx);
    let a = state.alpha;
    if a == 0.0 {
        return Err(Error::InvalidInput("NIDS_DX needs a positive stepsize".into()));
    }
    let d = state.d.as_ref().expect("NIDS_DX state carries d");
    let mut v = state.x.clone();
    v.axpy(-a, &state.grad);
    v.axpy(-a, d);
    let mut d_next = ops.i_minus_w.mul_stacked(&v)?.scale(0.5 / a);
    d_next += d;
    let mut x = state.x.clone();
    x.axpy(-a, &state.grad);
    x.axpy(-a, &d_next);
    let mut next = state.advance(x, obj, false)?;
    next.d = Some(d_next);
    Ok(next)
}

/// Dispatches on `state.variant`.
pub fn step<O: Objective + ?Sized>(state: &AlgoState, ops: &Operators, obj: &O) -> Result<AlgoState> {
    match state.variant {
        Variant::Dgd => dgd_step(state, ops, obj),
        Variant::Extra => extra_step(state, ops, obj),
        Variant::ExtraXy => extra_xy_step(state, ops, obj),
        Variant::Nids => nids_step(state, ops, obj),
        Variant::NidsDx => nids_dx_step(state, ops, obj),
    }
}

/// `max_j |Σ_i v_ij|`.
pub fn column_sum_residual(v: &Stacked) -> f64 {
    v.column_sums().iter().fold(0.0f64, |m, c| m.max(c.abs()))
}

/// Fixed point of the reformulated iterations for a given stepsize.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub xstar: Stacked,
    /// `y* = α∇f(x*)`
    pub ystar: Stacked,
    /// `d* = −∇f(x*)`
    pub dstar: Stacked,
}

impl FixedPoint {
    pub fn new<O: Objective + ?Sized>(obj: &O, xstar: &Stacked, alpha: f64) -> Result<Self> {
        let g = obj.grad(xstar)?;
        Ok(Self {
            xstar: xstar.clone(),
            ystar: g.scale(alpha),
            dstar: -&g,
        })
    }

    /// Largest residual among `(W̃ − W)x*`, `(I − W)x*`, `d* + ∇f(x*)` and
    /// the column sums of `∇f(x*)`.
    pub fn residual<O: Objective + ?Sized>(&self, ops: &Operators, obj: &O) -> Result<f64> {
        let g = obj.grad(&self.xstar)?;
        let r1 = ops.wt_minus_w.mul_stacked(&self.xstar)?.frob_norm();
        let r2 = ops.i_minus_w.mul_stacked(&self.xstar)?.frob_norm();
        let r3 = (&self.dstar + &g).frob_norm();
        let r4 = column_sum_residual(&g);
        Ok(r1.max(r2).max(r3).max(r4))
    }
}

/// Stepsize bounds for one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepsizeBounds {
    /// `2λ_min(W̄)/L`
    pub extra_new: f64,
    /// `(5 + 3λ_min(W))/(4L)`, the `θ → 3/4` limit when `W̃ = (I + W)/2`.
    pub extra_special: Option<f64>,
    /// `2/L`
    pub nids: f64,
    /// `(1 + λ_min(W)) μ_f̄ / L²`
    pub shi_linear: f64,
    /// `(1 + λ_min(W)) / L`
    pub shi_convex: f64,
    /// `2 μ_g λ_min(W̃) / L²` when `W̃ ≻ 0`.
    pub shi_rsc: Option<f64>,
}

pub fn stepsize_bounds(
    mp: &MixingPair,
    derived: &DerivedMatrices,
    lipschitz: f64,
    mu_fbar: f64,
    mu_g: f64,
) -> Result<StepsizeBounds> {
    let lmin_w = mp.spectral().lambda_min_w;
    let lmin_wt = mp.spectral().lambda_min_wt;
    let extra_new = 2.0 * derived.wbar.lambda_min()? / lipschitz;
    let extra_special = mp
        .is_standard_wt()
        .then(|| (5.0 + 3.0 * lmin_w) / (4.0 * lipschitz));
    Ok(StepsizeBounds {
        extra_new,
        extra_special,
        nids: 2.0 / lipschitz,
        shi_linear: (1.0 + lmin_w) * mu_fbar / (lipschitz * lipschitz),
        shi_convex: (1.0 + lmin_w) / lipschitz,
        shi_rsc: (lmin_wt > 0.0).then(|| 2.0 * mu_g * lmin_wt / (lipschitz * lipschitz)),
    })
}

/// Empirically tuned EXTRA stepsize `(5 + 3λ_min(W))/(4L + μ_f̄)`.
pub fn tuned_extra(lambda_min_w: f64, lipschitz: f64, mu_fbar: f64) -> f64 {
    (5.0 + 3.0 * lambda_min_w) / (4.0 * lipschitz + mu_fbar)
}

/// Empirically tuned NIDS stepsize `2/(L + μ_f̄)`.
pub fn tuned_nids(lipschitz: f64, mu_fbar: f64) -> f64 {
    2.0 / (lipschitz + mu_fbar)
}
