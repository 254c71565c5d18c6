mod common;

use decon_core::algorithms::{step, AlgoState, FixedPoint, Operators, Variant};
use decon_core::certify::{
    extra_constants, nids_constants, AuditReport, ExtraAuditor, ExtraParams, NidsAuditor, NidsParams,
    ProblemConstants, EQUALITY_TOL, SLACK_TOL,
};
use decon_core::graph::Graph;
use decon_core::linalg::Stacked;
use decon_core::mixing::{build_derived, metropolis, relax, MixingPair};
use decon_core::problem::SensingProblem;
use decon_core::runner::{resolve_scenario, run, Instance, RunConfig, Status, Stepsize};
use decon_core::stats::log_linear_fit;
use proptest::prelude::*;

fn fig1_instance() -> Instance {
    Instance::build(&resolve_scenario("fig1").unwrap()[0]).unwrap()
}

#[test]
fn extra_identities_hold_at_alpha3() {
    let inst = fig1_instance();
    // α₃ is the θ = 3/4 limit, where W̄ = (5I + 3W)/8
    let mp = inst.mixing.clone().with_theta(0.75).unwrap();
    let d = build_derived(&mp).unwrap();
    let alpha = inst.bounds.extra_special.unwrap();
    let obj = &inst.problem;
    let ops = Operators::new(&mp);
    let fp = FixedPoint::new(obj, obj.xstar_stacked(), alpha).unwrap();
    assert!(extra_constants(&mp, &d, ProblemConstants::from(obj), alpha, ExtraParams::default()).is_err());
    let aud = ExtraAuditor::without_certificate(&d, &fp);
    let mut s = AlgoState::init(Variant::ExtraXy, Stacked::zeros(10, 5), alpha, &ops, obj).unwrap();
    for _ in 0..500 {
        let n = step(&s, &ops, obj).unwrap();
        let row = aud.observe(&s, &n).unwrap();
        assert!(row.equality_error <= EQUALITY_TOL, "k={} {row:?}", row.k);
        assert!(row.key_slack >= -SLACK_TOL, "k={} {row:?}", row.k);
        assert!(row.ratio.is_none());
        s = n;
    }
}

#[test]
fn nids_audit_clean_at_019() {
    let inst = fig1_instance();
    let alpha = 0.19;
    let obj = &inst.problem;
    let ops = inst.operators();
    let fp = FixedPoint::new(obj, obj.xstar_stacked(), alpha).unwrap();
    let cert = inst.nids_certificate(alpha).unwrap();
    let aud = NidsAuditor::new(&cert, &fp);
    let mut s = AlgoState::init(Variant::NidsDx, Stacked::zeros(10, 5), alpha, &ops, obj).unwrap();
    let v0 = cert.lyapunov(&s.x, s.d.as_ref().unwrap(), &fp).unwrap();
    let mut rep = AuditReport::relative_to(cert.rho3, v0);
    let mut lyap = vec![v0];
    for _ in 0..500 {
        let n = step(&s, &ops, obj).unwrap();
        let row = aud.observe(&s, &n).unwrap();
        rep.absorb(&row);
        lyap.push(row.lyapunov);
        s = n;
    }
    assert!(rep.passed(), "{rep:?}");
    assert!(rep.worst_equality_error <= EQUALITY_TOL);
    // observed contraction at least as fast as certified
    let fit = log_linear_fit(&lyap, 250).unwrap();
    assert!(fit.slope <= cert.rho3.ln() + 1e-6, "slope {} vs ln rho {}", fit.slope, cert.rho3.ln());
}

#[test]
fn extra_empirical_rate_beats_certificate() {
    let inst = fig1_instance();
    let alpha = 0.5 * inst.bounds.extra_new;
    let cfg = RunConfig {
        algo: Variant::ExtraXy,
        alpha: Stepsize::Value(alpha),
        certify: true,
        max_iters: 600,
        tol: 1e-300,
        ..resolve_scenario("fig1").unwrap()[0].clone()
    };
    let t = decon_core::runner::run_on(&inst, &cfg).unwrap();
    let lyap: Vec<f64> = t.rows.iter().map(|r| r.lyapunov.unwrap()).collect();
    let fit = log_linear_fit(&lyap, 300).unwrap();
    assert!(fit.slope <= t.rho.unwrap().ln() + 1e-6);
    assert!(t.audit.unwrap().passed());
}

#[test]
fn nids_residual_eventually_nonincreasing_on_fig1() {
    let cfg = resolve_scenario("fig1").unwrap().into_iter().find(|c| c.algo == Variant::Nids).unwrap();
    let t = run(&cfg).unwrap();
    assert_eq!(t.status, Status::Converged);
    let r = t.residuals();
    // the residual is not the Lyapunov function; on this instance it has
    // two early bumps (k = 6 and k = 18) and is monotone afterwards
    let bumps: Vec<usize> = (6..r.len()).filter(|&k| r[k] > r[k - 1]).collect();
    assert_eq!(bumps, vec![6, 18]);
    let fit = log_linear_fit(&r, r.len() / 2).unwrap();
    assert!(fit.r_squared >= 0.99);
}

#[test]
fn fig1_ordering() {
    let traces: Vec<_> = resolve_scenario("fig1").unwrap().iter().map(|c| run(c).unwrap()).collect();
    let k = |label: &str| {
        traces
            .iter()
            .find(|t| t.label == label)
            .unwrap()
            .iterations_to(1e-10)
            .unwrap_or(usize::MAX)
    };
    assert!(k("NIDS alpha4") < k("EXTRA alpha3"));
    assert!(k("EXTRA alpha3") <= k("EXTRA alpha2"));
    assert!(k("EXTRA alpha2") < k("EXTRA alpha1"));
}

#[test]
fn relaxed_nids_certificate_is_vacuous_near_limit() {
    // λ_min(W) → −5/3 squeezes the admissible θ range onto 3/4
    let cfg = resolve_scenario("relaxed-line")
        .unwrap()
        .into_iter()
        .find(|c| c.label == "NIDS alpha4 relaxed")
        .unwrap();
    let inst = Instance::build(&cfg).unwrap();
    assert!(inst.mixing.theta() < 0.76);
    let r = inst.nids_certificate(0.1);
    if let Ok(c) = r {
        assert!(c.rho3 < 1.0 && c.r4 < 0.01);
    }
}

fn small_instance(n: usize, seed: u64, relaxed: bool, m_i: usize) -> (MixingPair, SensingProblem) {
    let g = Graph::random_connected(n, 0.6, seed).unwrap();
    let mut w = metropolis(&g);
    if relaxed {
        w = relax(&w, 1.0 / 3.0).unwrap();
    }
    let mp = MixingPair::standard(w, &g).unwrap();
    let mp = if build_derived(&mp).is_ok() {
        mp
    } else {
        let t = decon_core::mixing::theta_interior(mp.spectral().lambda_min_wt).unwrap();
        mp.with_theta(t).unwrap()
    };
    (mp, SensingProblem::generate(n, 3, m_i, 0.1, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reformulations_track_originals(n in 3usize..9, seed in 0u64..500, relaxed: bool, frac in 0.05f64..1.0) {
        let (mp, prob) = small_instance(n, seed, relaxed, 2);
        let ops = Operators::new(&mp);
        let x0 = Stacked::from_fn(n, 3, |i, j| ((i * 3 + j) as f64).cos());
        for (a, b, alpha) in [
            (Variant::Extra, Variant::ExtraXy, frac * (5.0 + 3.0 * mp.spectral().lambda_min_w) / 40.0),
            (Variant::Nids, Variant::NidsDx, frac * 0.2),
        ] {
            let mut sa = AlgoState::init(a, x0.clone(), alpha, &ops, &prob).unwrap();
            let mut sb = AlgoState::init(b, x0.clone(), alpha, &ops, &prob).unwrap();
            let scale = 1.0 + (&x0 - prob.xstar_stacked()).frob_norm();
            for _ in 0..60 {
                sa = step(&sa, &ops, &prob).unwrap();
                sb = step(&sb, &ops, &prob).unwrap();
                prop_assert!((&sa.x - &sb.x).frob_norm() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn certificates_valid_inside_bounds(n in 3usize..9, seed in 0u64..500, relaxed: bool, frac in 0.05f64..0.95) {
        let (mp, prob) = small_instance(n, seed, relaxed, 3);
        let d = build_derived(&mp).unwrap();
        let pc = ProblemConstants::from(&prob);
        let alpha = frac * 2.0 * d.wbar.lambda_min().unwrap() / pc.lipschitz;
        let c = extra_constants(&mp, &d, pc, alpha, ExtraParams::default()).unwrap();
        prop_assert!(c.rho < 1.0 && c.rho > 0.0);
        prop_assert!(c.r1 > 0.0 && c.r2 > 0.0 && c.r3 > 0.0);
        // r₃ = 1 only in the limit r₁ = r₂ = ∞
        prop_assert!(c.r3 < 1.0 || (c.r1.is_infinite() && c.r2.is_infinite()));
        prop_assert!(c.metrics_positive_definite());
        if mp.theta() > 0.75 {
            let c = nids_constants(&mp, &d, pc, frac * 0.2, NidsParams::default()).unwrap();
            prop_assert!(c.rho3 < 1.0);
            prop_assert!(c.metrics_positive_definite());
            prop_assert!(c.r5 >= 2.0);
        }
    }
}
