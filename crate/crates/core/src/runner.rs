//! Experiment configuration, scenario presets and the trajectory runner.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::algorithms::{step, stepsize_bounds, tuned_extra, tuned_nids, AlgoState, FixedPoint, Operators, StepsizeBounds, Variant};
use crate::certify::{
    extra_constants, nids_constants, AuditReport, AuditRow, ExtraAuditor, ExtraCertificate, ExtraParams,
    NidsAuditor, NidsCertificate, NidsParams, ProblemConstants,
};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::Stacked;
use crate::mixing::{build_derived, metropolis, relax, relax_factor_for_target, theta_interior, DerivedMatrices, MixingPair};
use crate::problem::{SensingProblem, DEFAULT_LIPSCHITZ, DEFAULT_NOISE_STD};

/// Relative residual beyond which a run is declared diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;
/// η used for the `shi_rsc` entry of the bound table.
pub const BOUND_TABLE_ETA: f64 = 1.0;
/// Smallest eigenvalue targeted by the relaxed NIDS preset.
pub const RELAXED_NIDS_TARGET: f64 = -1.65;
/// Smallest eigenvalue targeted by the relaxed EXTRA preset.
pub const RELAXED_EXTRA_TARGET: f64 = -0.99;

pub const SCENARIOS: [&str; 4] = ["fig1", "fig2", "fig3", "relaxed-line"];
pub const FIG_SEED: u64 = 7;
pub const FIG_GRAPH_SEED: u64 = 11;
pub const FIG_EDGE_PROB: f64 = 0.5;
pub const FIG_MAX_ITERS: usize = 40_000;
/// Cap for the slow `shi-linear` EXTRA curve.
pub const FIG_SLOW_MAX_ITERS: usize = 250_000;
pub const FIG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Random,
    Line,
    Complete,
}

impl Topology {
    pub fn name(self) -> &'static str {
        match self {
            Topology::Random => "random",
            Topology::Line => "line",
            Topology::Complete => "complete",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Topology {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" | "er" => Ok(Topology::Random),
            "line" | "path" => Ok(Topology::Line),
            "complete" => Ok(Topology::Complete),
            _ => Err(Error::InvalidInput(format!("unknown topology '{s}' (random, line, complete)"))),
        }
    }
}

/// Stepsizes that are resolved against an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedStep {
    ExtraNew,
    ExtraSpecial,
    Nids,
    ShiLinear,
    ShiConvex,
    TunedExtra,
    TunedNids,
    /// `1/L`
    DgdLarge,
    /// `1/(10L)`
    DgdSmall,
}

impl NamedStep {
    pub const ALL: [NamedStep; 9] = [
        NamedStep::ExtraNew,
        NamedStep::ExtraSpecial,
        NamedStep::Nids,
        NamedStep::ShiLinear,
        NamedStep::ShiConvex,
        NamedStep::TunedExtra,
        NamedStep::TunedNids,
        NamedStep::DgdLarge,
        NamedStep::DgdSmall,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NamedStep::ExtraNew => "extra-new",
            NamedStep::ExtraSpecial => "extra-special",
            NamedStep::Nids => "nids",
            NamedStep::ShiLinear => "shi-linear",
            NamedStep::ShiConvex => "shi-convex",
            NamedStep::TunedExtra => "tuned-extra",
            NamedStep::TunedNids => "tuned-nids",
            NamedStep::DgdLarge => "dgd-large",
            NamedStep::DgdSmall => "dgd-small",
        }
    }

    pub fn resolve(self, inst: &Instance) -> Result<f64> {
        let b = &inst.bounds;
        let l = inst.problem.lipschitz();
        Ok(match self {
            NamedStep::ExtraNew => b.extra_new,
            NamedStep::ExtraSpecial => b.extra_special.ok_or_else(|| Error::UnusableStepsize {
                name: self.name(),
                reason: "requires W~ = (I + W)/2".to_string(),
            })?,
            NamedStep::Nids => b.nids,
            NamedStep::ShiLinear => b.shi_linear,
            NamedStep::ShiConvex => b.shi_convex,
            NamedStep::TunedExtra => tuned_extra(inst.mixing.spectral().lambda_min_w, l, inst.problem.mu_fbar()),
            NamedStep::TunedNids => tuned_nids(l, inst.problem.mu_fbar()),
            NamedStep::DgdLarge => 1.0 / l,
            NamedStep::DgdSmall => 1.0 / (10.0 * l),
        })
    }
}

impl FromStr for NamedStep {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        NamedStep::ALL
            .into_iter()
            .find(|n| n.name() == key)
            .ok_or_else(|| {
                let valid: Vec<&str> = NamedStep::ALL.iter().map(|n| n.name()).collect();
                Error::InvalidInput(format!("unknown stepsize '{s}' (number or {})", valid.join(", ")))
            })
    }
}

/// A literal stepsize or a multiple of a named one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stepsize {
    Value(f64),
    Named { bound: NamedStep, scale: f64 },
}

impl Stepsize {
    pub fn named(bound: NamedStep) -> Self {
        Stepsize::Named { bound, scale: 1.0 }
    }

    pub fn resolve(&self, inst: &Instance) -> Result<f64> {
        match *self {
            Stepsize::Value(a) => Ok(a),
            Stepsize::Named { bound, scale } => Ok(scale * bound.resolve(inst)?),
        }
    }
}

impl fmt::Display for Stepsize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stepsize::Value(a) => write!(f, "{a}"),
            Stepsize::Named { bound, scale } if *scale == 1.0 => f.write_str(bound.name()),
            Stepsize::Named { bound, scale } => write!(f, "{scale}*{}", bound.name()),
        }
    }
}

/// Accepts `0.05`, `nids`, or `0.99*nids`.
impl FromStr for Stepsize {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(v) = s.parse::<f64>() {
            return Ok(Stepsize::Value(v));
        }
        match s.split_once('*') {
            Some((c, name)) => {
                let scale = c
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("bad stepsize multiplier in '{s}'")))?;
                Ok(Stepsize::Named {
                    bound: name.parse()?,
                    scale,
                })
            }
            None => Ok(Stepsize::named(s.parse()?)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Relaxation {
    #[default]
    None,
    /// `(1 + c) W − c I`
    Factor(f64),
    /// The factor that moves `λ_min(W)` to the given value.
    TargetLambdaMin(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub label: String,
    pub topology: Topology,
    /// Explicit edge list; overrides `topology` when set.
    pub edges: Option<Vec<(usize, usize)>>,
    pub n: usize,
    pub p: usize,
    pub m_i: usize,
    pub edge_prob: f64,
    pub noise_std: f64,
    pub lipschitz: f64,
    /// Problem seed.
    pub seed: u64,
    pub graph_seed: u64,
    pub algo: Variant,
    pub alpha: Stepsize,
    pub relaxation: Relaxation,
    pub theta: Option<f64>,
    pub max_iters: usize,
    pub tol: f64,
    pub certify: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            label: String::new(),
            topology: Topology::Random,
            edges: None,
            n: 10,
            p: 5,
            m_i: 1,
            edge_prob: FIG_EDGE_PROB,
            noise_std: DEFAULT_NOISE_STD,
            lipschitz: DEFAULT_LIPSCHITZ,
            seed: FIG_SEED,
            graph_seed: FIG_GRAPH_SEED,
            algo: Variant::Nids,
            alpha: Stepsize::named(NamedStep::Nids),
            relaxation: Relaxation::None,
            theta: None,
            max_iters: 5000,
            tol: 1e-10,
            certify: false,
        }
    }
}

impl RunConfig {
    pub fn check(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidInput("max_iters must be at least 1".to_string()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }

    /// Label, or `ALGO@alpha` when unset.
    pub fn display_label(&self) -> String {
        if self.label.is_empty() {
            format!("{}@{}", self.algo, self.alpha)
        } else {
            self.label.clone()
        }
    }

    pub fn graph(&self) -> Result<Graph> {
        if let Some(e) = &self.edges {
            return Graph::from_edges(self.n, e);
        }
        match self.topology {
            Topology::Random => Graph::random_connected(self.n, self.edge_prob, self.graph_seed),
            Topology::Line => Graph::line(self.n),
            Topology::Complete => Graph::complete(self.n),
        }
    }
}

/// Everything a run needs, built deterministically from a config.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: Graph,
    pub relax_factor: f64,
    pub mixing: MixingPair,
    pub derived: DerivedMatrices,
    pub problem: SensingProblem,
    pub bounds: StepsizeBounds,
}

impl Instance {
    pub fn build(cfg: &RunConfig) -> Result<Self> {
        let graph = cfg.graph()?;
        let problem = SensingProblem::generate_with(cfg.n, cfg.p, cfg.m_i, cfg.noise_std, cfg.lipschitz, cfg.seed)?;
        Self::from_parts(graph, cfg.relaxation, cfg.theta, problem)
    }

    pub fn from_parts(graph: Graph, relaxation: Relaxation, theta: Option<f64>, problem: SensingProblem) -> Result<Self> {
        if problem.n() != graph.n() {
            return Err(Error::InvalidInput(format!(
                "problem has {} agents but the graph has {} nodes",
                problem.n(),
                graph.n()
            )));
        }
        let w0 = metropolis(&graph);
        let relax_factor = match relaxation {
            Relaxation::None => 0.0,
            Relaxation::Factor(c) => c,
            Relaxation::TargetLambdaMin(t) => relax_factor_for_target(&w0, t)?,
        };
        let w = if relax_factor == 0.0 { w0 } else { relax(&w0, relax_factor)? };
        let mp = MixingPair::standard(w, &graph)?;
        let (mixing, derived) = match theta {
            Some(t) => {
                let mp = mp.with_theta(t)?;
                let d = build_derived(&mp)?;
                (mp, d)
            }
            None => match build_derived(&mp) {
                Ok(d) => (mp, d),
                Err(_) => {
                    let t = theta_interior(mp.spectral().lambda_min_wt)?;
                    let mp = mp.with_theta(t)?;
                    let d = build_derived(&mp)?;
                    (mp, d)
                }
            },
        };
        let mu = problem.mu_g(&mixing, BOUND_TABLE_ETA);
        let bounds = stepsize_bounds(&mixing, &derived, problem.lipschitz(), problem.mu_fbar(), mu)?;
        Ok(Self {
            graph,
            relax_factor,
            mixing,
            derived,
            problem,
            bounds,
        })
    }

    pub fn constants(&self) -> ProblemConstants {
        ProblemConstants::from(&self.problem)
    }

    pub fn operators(&self) -> Operators {
        Operators::new(&self.mixing)
    }

    pub fn extra_certificate(&self, alpha: f64) -> Result<ExtraCertificate> {
        extra_constants(&self.mixing, &self.derived, self.constants(), alpha, ExtraParams::default())
    }

    pub fn nids_certificate(&self, alpha: f64) -> Result<NidsCertificate> {
        nids_constants(&self.mixing, &self.derived, self.constants(), alpha, NidsParams::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIters,
    Diverged,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIters => "max_iters",
            Status::Diverged => "diverged",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    /// `‖x^k − x*‖_F / ‖x⁰ − x*‖_F`
    pub residual: f64,
    pub lyapunov: Option<f64>,
    pub ratio: Option<f64>,
    pub slack: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub label: String,
    pub algo: Variant,
    pub alpha: f64,
    pub rows: Vec<TraceRow>,
    pub status: Status,
    /// Certified rate, when `certify` was requested and a certificate exists.
    pub rho: Option<f64>,
    pub audit: Option<AuditReport>,
    /// Why no certificate was produced, when `certify` was requested.
    pub certificate_error: Option<Error>,
}

impl Trace {
    pub fn residuals(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.residual).collect()
    }

    /// First iteration with residual at or below `threshold`.
    pub fn iterations_to(&self, threshold: f64) -> Option<usize> {
        self.rows.iter().find(|r| r.residual <= threshold).map(|r| r.k)
    }

    pub fn final_residual(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.residual)
    }
}

enum Shadow<'a> {
    Extra(ExtraAuditor<'a>, f64),
    Nids(NidsAuditor<'a>, f64),
}

impl Shadow<'_> {
    fn observe(&self, prev: &AlgoState, next: &AlgoState) -> Result<AuditRow> {
        match self {
            Shadow::Extra(a, _) => a.observe(prev, next),
            Shadow::Nids(a, _) => a.observe(prev, next),
        }
    }

    fn rho(&self) -> f64 {
        match self {
            Shadow::Extra(_, r) | Shadow::Nids(_, r) => *r,
        }
    }

    fn lyapunov(&self, s: &AlgoState) -> Result<f64> {
        match self {
            Shadow::Extra(a, _) => a.lyapunov(&s.x, s.y.as_ref().expect("y")),
            Shadow::Nids(a, _) => a.cert.lyapunov(&s.x, s.d.as_ref().expect("d"), a.fp),
        }
    }
}

/// Builds the instance and runs one trajectory.
pub fn run(cfg: &RunConfig) -> Result<Trace> {
    cfg.check()?;
    let inst = Instance::build(cfg)?;
    run_on(&inst, cfg)
}

/// Runs `cfg.algo` from `x⁰ = 0` on a prebuilt instance.
pub fn run_on(inst: &Instance, cfg: &RunConfig) -> Result<Trace> {
    let x0 = Stacked::zeros(inst.problem.n(), inst.problem.p());
    run_from(inst, cfg, x0)
}

pub fn run_from(inst: &Instance, cfg: &RunConfig, x0: Stacked) -> Result<Trace> {
    cfg.check()?;
    let alpha = cfg.alpha.resolve(inst)?;
    let ops = inst.operators();
    let obj = &inst.problem;
    let xstar = inst.problem.xstar_stacked();
    let e0 = (&x0 - xstar).frob_norm();
    let fp = FixedPoint::new(obj, xstar, alpha)?;

    let mut certificate_error = None;
    let extra_cert;
    let nids_cert;
    let mut shadow = None;
    let mut rho = None;
    if cfg.certify {
        if cfg.algo.is_extra() {
            match inst.extra_certificate(alpha) {
                Ok(c) => {
                    extra_cert = c;
                    rho = Some(extra_cert.rho);
                    shadow = Some(Shadow::Extra(
                        ExtraAuditor::new(&inst.derived, &extra_cert, &fp),
                        extra_cert.rho,
                    ));
                }
                Err(e) => certificate_error = Some(e),
            }
        } else if cfg.algo.is_nids() {
            match inst.nids_certificate(alpha) {
                Ok(c) => {
                    nids_cert = c;
                    rho = Some(nids_cert.rho3);
                    shadow = Some(Shadow::Nids(NidsAuditor::new(&nids_cert, &fp), nids_cert.rho3));
                }
                Err(e) => certificate_error = Some(e),
            }
        } else {
            certificate_error = Some(Error::NoCertificate("DGD"));
        }
    }
    let shadow_variant = cfg.algo.reformulated().unwrap_or(cfg.algo);
    let mut shadow_state = match &shadow {
        Some(_) => Some(AlgoState::init(shadow_variant, x0.clone(), alpha, &ops, obj)?),
        None => None,
    };
    let mut report = match (&shadow, &shadow_state) {
        (Some(s), Some(st)) => Some(AuditReport::relative_to(s.rho(), s.lyapunov(st)?)),
        _ => None,
    };

    let mut state = AlgoState::init(cfg.algo, x0, alpha, &ops, obj)?;
    let mut rows = Vec::new();
    let mut pending: Option<AuditRow> = None;
    let status = loop {
        let err = (&state.x - xstar).frob_norm();
        let residual = if e0 > 0.0 { err / e0 } else { err };
        let (lyapunov, ratio, slack) = match (&pending, &shadow, &shadow_state) {
            (Some(r), _, _) => (Some(r.lyapunov), r.ratio, Some(r.worst_slack())),
            (None, Some(s), Some(st)) => (Some(s.lyapunov(st)?), None, None),
            _ => (None, None, None),
        };
        rows.push(TraceRow {
            k: state.k,
            residual,
            lyapunov,
            ratio,
            slack,
        });
        if residual <= cfg.tol {
            break Status::Converged;
        }
        if !residual.is_finite() || residual > DIVERGENCE_THRESHOLD {
            break Status::Diverged;
        }
        if state.k >= cfg.max_iters {
            break Status::MaxIters;
        }
        state = step(&state, &ops, obj)?;
        if let (Some(s), Some(prev)) = (&shadow, shadow_state.take()) {
            let next = step(&prev, &ops, obj)?;
            let row = s.observe(&prev, &next)?;
            if let Some(rep) = report.as_mut() {
                rep.absorb(&row);
            }
            pending = Some(row);
            shadow_state = Some(next);
        }
    };
    Ok(Trace {
        label: cfg.display_label(),
        algo: cfg.algo,
        alpha,
        rows,
        status,
        rho,
        audit: report,
        certificate_error,
    })
}

/// One config per curve of the named preset.
pub fn resolve_scenario(name: &str) -> Result<Vec<RunConfig>> {
    let base = RunConfig {
        max_iters: FIG_MAX_ITERS,
        tol: FIG_TOL,
        ..RunConfig::default()
    };
    let curve = |label: &str, algo: Variant, alpha: Stepsize, base: &RunConfig| RunConfig {
        label: label.to_string(),
        algo,
        alpha,
        ..base.clone()
    };
    let figure_curves = |base: &RunConfig| {
        alloc::vec![
            curve("DGD 1/L", Variant::Dgd, Stepsize::named(NamedStep::DgdLarge), base),
            curve("DGD 1/(10L)", Variant::Dgd, Stepsize::named(NamedStep::DgdSmall), base),
            RunConfig {
                max_iters: FIG_SLOW_MAX_ITERS,
                ..curve("EXTRA alpha1", Variant::Extra, Stepsize::named(NamedStep::ShiLinear), base)
            },
            curve("EXTRA alpha2", Variant::Extra, Stepsize::named(NamedStep::ShiConvex), base),
            curve("EXTRA alpha3", Variant::Extra, Stepsize::named(NamedStep::ExtraSpecial), base),
            curve("NIDS alpha4", Variant::Nids, Stepsize::named(NamedStep::Nids), base),
        ]
    };
    match name {
        "fig1" => Ok(figure_curves(&base)),
        "fig2" => Ok(figure_curves(&RunConfig { m_i: 10, ..base })),
        "fig3" => Ok(alloc::vec![
            curve("EXTRA alpha3", Variant::Extra, Stepsize::named(NamedStep::ExtraSpecial), &base),
            curve("EXTRA alpha5", Variant::Extra, Stepsize::named(NamedStep::TunedExtra), &base),
            curve("NIDS alpha4", Variant::Nids, Stepsize::named(NamedStep::Nids), &base),
            curve("NIDS alpha6", Variant::Nids, Stepsize::named(NamedStep::TunedNids), &base),
        ]),
        "relaxed-line" => {
            let line = RunConfig {
                topology: Topology::Line,
                ..base
            };
            let relaxed = |target: f64| RunConfig {
                relaxation: Relaxation::TargetLambdaMin(target),
                ..line.clone()
            };
            Ok(alloc::vec![
                curve("EXTRA alpha3", Variant::Extra, Stepsize::named(NamedStep::ExtraSpecial), &line),
                curve(
                    "EXTRA alpha3 relaxed",
                    Variant::Extra,
                    Stepsize::named(NamedStep::ExtraSpecial),
                    &relaxed(RELAXED_EXTRA_TARGET)
                ),
                curve("NIDS alpha4", Variant::Nids, Stepsize::named(NamedStep::Nids), &line),
                curve(
                    "NIDS alpha4 relaxed",
                    Variant::Nids,
                    Stepsize::named(NamedStep::Nids),
                    &relaxed(RELAXED_NIDS_TARGET)
                ),
            ])
        }
        _ => Err(Error::UnknownScenario {
            name: name.to_string(),
            valid: SCENARIOS.join(", "),
        }),
    }
}
