//! Subcommands of the `decon` binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use decon_core::graph::Graph;
use decon_core::linalg::SymMatrix;
use decon_core::mixing::{
    barw_identity_residual, build_derived, metropolis, mtilde_ones_residual, relax, relax_factor_for_target,
    theta_default, validate, DerivedMatrices, MixingPair,
};
use decon_core::runner::{run_on, Instance, RunConfig, Status, Topology, Trace};
use rayon::prelude::*;

use crate::config::RunOptions;
use crate::error::{Error, Result};
use crate::{formats, problem_file, trace_csv};

#[derive(Debug, Parser)]
#[command(name = "decon", version, about = "Decentralized consensus optimization: runs, certificates and audits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one configuration or every curve of a scenario and write CSV traces.
    Run(RunArgs),
    /// Check a mixing pair against the mixing conditions.
    ValidateMixing(ValidateArgs),
    /// Print the stepsize-bound table.
    Bounds(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSON file whose keys are the long flag names.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub opts: RunOptions,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub graph_file: Option<PathBuf>,
    #[arg(long, default_value = "random")]
    pub topology: Topology,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = decon_core::runner::FIG_EDGE_PROB)]
    pub edge_prob: f64,
    #[arg(long, default_value_t = decon_core::runner::FIG_GRAPH_SEED)]
    pub graph_seed: u64,
    /// Explicit W (one row per line); replaces the Metropolis weights.
    #[arg(long)]
    pub w_file: Option<PathBuf>,
    /// Explicit W~; defaults to (I + W)/2.
    #[arg(long)]
    pub wt_file: Option<PathBuf>,
    #[arg(long, conflicts_with = "relax_target")]
    pub relax_factor: Option<f64>,
    #[arg(long)]
    pub relax_target: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub dump_mixing: Option<PathBuf>,
}

/// Process result, mapped to the exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Bad input or a failed check.
    Invalid,
    Diverged,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::Invalid => 1,
            Outcome::Diverged => 2,
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let res = match cli.command {
        Command::Run(a) => cmd_run(&a, out, err),
        Command::ValidateMixing(a) => cmd_validate(&a, out),
        Command::Bounds(a) => cmd_bounds(&a, out),
    };
    match res {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            Outcome::Invalid
        }
    }
}

/// Lowercase alphanumerics joined by single dashes.
pub fn slug(label: &str) -> String {
    let mut s = String::new();
    for c in label.chars() {
        if c.is_ascii_alphanumeric() {
            s.push(c.to_ascii_lowercase());
        } else if !s.is_empty() && !s.ends_with('-') {
            s.push('-');
        }
    }
    while s.ends_with('-') {
        s.pop();
    }
    if s.is_empty() {
        s.push_str("run");
    }
    s
}

fn merged_options(a: &RunArgs) -> Result<RunOptions> {
    Ok(match &a.config {
        Some(path) => RunOptions::load(path)?.overridden_by(&a.opts),
        None => a.opts.clone(),
    })
}

fn instances(opts: &RunOptions) -> Result<Vec<(RunConfig, Instance)>> {
    let loaded = opts.load_problem.as_deref().map(problem_file::load).transpose()?;
    let mut cfgs = opts.run_configs()?;
    let mut out = Vec::with_capacity(cfgs.len());
    for mut cfg in cfgs.drain(..) {
        let inst = match &loaded {
            Some(p) => {
                if opts.n.is_none() && cfg.edges.is_none() {
                    cfg.n = p.n();
                }
                cfg.p = p.p();
                Instance::from_parts(cfg.graph()?, cfg.relaxation, cfg.theta, p.clone())?
            }
            None => Instance::build(&cfg)?,
        };
        out.push((cfg, inst));
    }
    Ok(out)
}

fn dump_mixing(dir: &Path, mp: &MixingPair, d: &DerivedMatrices) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files: [(&str, &SymMatrix); 8] = [
        ("W", mp.w()),
        ("Wt", mp.wt()),
        ("Wbar", &d.wbar),
        ("Wbar_inv", &d.wbar_inv),
        ("H", &d.h),
        ("M", &d.m),
        ("G", &d.g),
        ("Mtilde", &d.mtilde),
    ];
    for (name, m) in files {
        formats::write_sym(m, &dir.join(format!("{name}.txt")))?;
    }
    Ok(())
}

fn summary_line(t: &Trace) -> String {
    let mut s = format!(
        "{}: {} after {} iterations, residual {:.3e}",
        t.label,
        t.status,
        t.rows.last().map_or(0, |r| r.k),
        t.final_residual()
    );
    if let Some(rho) = t.rho {
        s.push_str(&format!(", rho {rho:.12}"));
    }
    if let Some(a) = &t.audit {
        if a.passed() {
            s.push_str(&format!(", audit pass over {} steps", a.iterations));
        } else {
            s.push_str(&format!(", audit FAILED at {} of {} steps", a.failures.len(), a.iterations));
        }
    }
    if let Some(e) = &t.certificate_error {
        s.push_str(&format!(", no certificate ({e})"));
    }
    s
}

fn outcome_of(traces: &[Trace]) -> Outcome {
    if traces.iter().any(|t| t.status == Status::Diverged) {
        Outcome::Diverged
    } else if traces.iter().any(|t| t.audit.as_ref().is_some_and(|a| !a.passed())) {
        Outcome::Invalid
    } else {
        Outcome::Success
    }
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<Outcome> {
    let opts = merged_options(a)?;
    let runs = instances(&opts)?;
    if let Some(path) = &opts.save_problem {
        problem_file::save(&runs[0].1.problem, path)?;
    }
    if opts.scenario.is_some() {
        let dir = opts
            .out
            .clone()
            .ok_or_else(|| Error::Config("--out DIR is required with --scenario".into()))?;
        fs::create_dir_all(&dir).map_err(io(&dir))?;
        let traces = runs
            .par_iter()
            .map(|(cfg, inst)| {
                let mut t = run_on(inst, cfg)?;
                t.label = cfg.display_label();
                trace_csv::write_trace_file(&t, &dir.join(format!("{}.csv", slug(&t.label))))?;
                if let Some(d) = &opts.dump_mixing {
                    dump_mixing(&d.join(slug(&t.label)), &inst.mixing, &inst.derived)?;
                }
                Ok(t)
            })
            .collect::<Result<Vec<_>>>()?;
        for t in &traces {
            writeln!(out, "{}", summary_line(t)).map_err(io(&dir))?;
        }
        return Ok(outcome_of(&traces));
    }
    let (cfg, inst) = &runs[0];
    if let Some(d) = &opts.dump_mixing {
        dump_mixing(d, &inst.mixing, &inst.derived)?;
    }
    let mut t = run_on(inst, cfg)?;
    t.label = cfg.display_label();
    match &opts.out {
        Some(path) => {
            trace_csv::write_trace_file(&t, path)?;
            writeln!(out, "{}", summary_line(&t)).map_err(io(path))?;
        }
        None => {
            trace_csv::write_trace(&t, &mut *out)?;
            writeln!(err, "{}", summary_line(&t)).map_err(io(Path::new("stderr")))?;
        }
    }
    Ok(outcome_of(std::slice::from_ref(&t)))
}

fn validation_graph(a: &ValidateArgs) -> Result<Graph> {
    match &a.graph_file {
        Some(p) => formats::read_graph(p),
        None => Ok(RunConfig {
            topology: a.topology,
            n: a.n,
            edge_prob: a.edge_prob,
            graph_seed: a.graph_seed,
            ..RunConfig::default()
        }
        .graph()?),
    }
}

fn read_square(path: &Path, out: &mut dyn Write, bad: &mut bool) -> Result<SymMatrix> {
    let m = formats::read_matrix(path)?;
    if m.rows() != m.cols() {
        return Err(Error::Config(format!("{}: matrix is {}x{}", path.display(), m.rows(), m.cols())));
    }
    let gap = formats::asymmetry(&m);
    if gap > 0.0 {
        *bad = true;
        let _ = writeln!(out, "violation: symmetry: {} has max |a_ij - a_ji| = {gap:e}", path.display());
    }
    Ok(SymMatrix::new(m.rows(), m.into_vec())?)
}

fn cmd_validate(a: &ValidateArgs, out: &mut dyn Write) -> Result<Outcome> {
    let g = validation_graph(a)?;
    let w_out = |e| Error::io("stdout", e);
    writeln!(out, "graph: {} nodes, {} edges, diameter {}", g.n(), g.edges().len(), g.diameter()).map_err(w_out)?;
    let mut bad = false;
    let w0 = match &a.w_file {
        Some(p) => read_square(p, out, &mut bad)?,
        None => metropolis(&g),
    };
    let factor = match (a.relax_factor, a.relax_target) {
        (Some(c), _) => c,
        (None, Some(t)) => relax_factor_for_target(&w0, t)?,
        (None, None) => 0.0,
    };
    let w = if factor == 0.0 {
        w0
    } else {
        match relax(&w0, factor) {
            Ok(w) => w,
            Err(e) => {
                writeln!(out, "violation: {e}").map_err(w_out)?;
                return Ok(Outcome::Invalid);
            }
        }
    };
    writeln!(out, "relax factor: {factor}").map_err(w_out)?;
    let wt = match &a.wt_file {
        Some(p) => read_square(p, out, &mut bad)?,
        None => w.affine(0.5, 0.5),
    };
    let mp = match validate(w, wt, &g) {
        Ok(mp) => mp,
        Err(vs) => {
            for v in vs {
                writeln!(out, "violation: {v}").map_err(w_out)?;
            }
            writeln!(out, "result: invalid").map_err(w_out)?;
            return Ok(Outcome::Invalid);
        }
    };
    let s = *mp.spectral();
    for (name, v) in [
        ("lambda_min(W)", s.lambda_min_w),
        ("lambda_2(W)", s.lambda2_w),
        ("spectral gap", s.spectral_gap),
        ("lambda_min(W~)", s.lambda_min_wt),
        ("lambda_min+(I-W)", s.lambda_min_plus_i_minus_w),
        ("lambda_max(I-W)", s.lambda_max_i_minus_w),
    ] {
        writeln!(out, "{name:<18} {}", formats::fmt_f64(v)).map_err(w_out)?;
    }
    let upper = theta_default(s.lambda_min_wt)?;
    writeln!(out, "theta window: (0.75, {}]", formats::fmt_f64(upper)).map_err(w_out)?;
    let mp = match a.theta {
        Some(t) => match mp.with_theta(t) {
            Ok(mp) => mp,
            Err(e) => {
                writeln!(out, "violation: {e}").map_err(w_out)?;
                return Ok(Outcome::Invalid);
            }
        },
        None => mp,
    };
    writeln!(out, "theta: {}", mp.theta()).map_err(w_out)?;
    if mp.theta() <= 0.75 {
        writeln!(out, "note: NIDS certificate is vacuous at theta = 3/4").map_err(w_out)?;
    }
    match build_derived(&mp) {
        Ok(d) => {
            writeln!(out, "Wbar identity residual: {:e}", barw_identity_residual(&mp, &d)).map_err(w_out)?;
            writeln!(out, "Mtilde ones residual: {:e}", mtilde_ones_residual(&d)).map_err(w_out)?;
            if let Some(dir) = &a.dump_mixing {
                dump_mixing(dir, &mp, &d)?;
            }
        }
        Err(e) => {
            writeln!(out, "violation: {e}").map_err(w_out)?;
            bad = true;
        }
    }
    writeln!(out, "result: {}", if bad { "invalid" } else { "valid" }).map_err(w_out)?;
    Ok(if bad { Outcome::Invalid } else { Outcome::Success })
}

/// Configs sharing a graph, mixing and problem collapse to one table.
fn same_instance(a: &RunConfig, b: &RunConfig) -> bool {
    let strip = |c: &RunConfig| RunConfig {
        label: String::new(),
        algo: RunConfig::default().algo,
        alpha: RunConfig::default().alpha,
        max_iters: 1,
        tol: 1.0,
        certify: false,
        ..c.clone()
    };
    strip(a) == strip(b)
}

fn bound_table(inst: &Instance) -> Vec<(&'static str, Option<f64>, &'static str)> {
    let b = &inst.bounds;
    vec![
        ("extra-new", Some(b.extra_new), "2 lambda_min(Wbar)/L"),
        ("extra-special", b.extra_special, "(5 + 3 lambda_min(W))/(4L)"),
        ("nids", Some(b.nids), "2/L"),
        ("shi-linear", Some(b.shi_linear), "(1 + lambda_min(W)) mu/L^2"),
        ("shi-convex", Some(b.shi_convex), "(1 + lambda_min(W))/L"),
        ("shi-rsc", b.shi_rsc, "2 mu_g lambda_min(W~)/L^2"),
    ]
}

fn cmd_bounds(a: &RunArgs, out: &mut dyn Write) -> Result<Outcome> {
    let opts = merged_options(a)?;
    let runs = instances(&opts)?;
    let mut groups: Vec<(Vec<String>, &RunConfig, &Instance)> = Vec::new();
    for (cfg, inst) in &runs {
        match groups.iter_mut().find(|g| same_instance(g.1, cfg)) {
            Some(g) => g.0.push(cfg.display_label()),
            None => groups.push((vec![cfg.display_label()], cfg, inst)),
        }
    }
    let w_out = |e| Error::io("stdout", e);
    for (i, (labels, _, inst)) in groups.iter().enumerate() {
        if i > 0 {
            writeln!(out).map_err(w_out)?;
        }
        let s = inst.mixing.spectral();
        writeln!(out, "instance: {}", labels.join(", ")).map_err(w_out)?;
        writeln!(
            out,
            "n = {}, p = {}, L = {}, mu = {}, lambda_min(W) = {}, theta = {}, relax factor = {}",
            inst.problem.n(),
            inst.problem.p(),
            inst.problem.lipschitz(),
            formats::fmt_f64(inst.problem.mu_fbar()),
            formats::fmt_f64(s.lambda_min_w),
            inst.mixing.theta(),
            inst.relax_factor
        )
        .map_err(w_out)?;
        writeln!(out, "{:<14} {:<24} formula", "bound", "value").map_err(w_out)?;
        for (name, v, formula) in bound_table(inst) {
            let v = v.map_or_else(|| "n/a".to_string(), formats::fmt_f64);
            writeln!(out, "{name:<14} {v:<24} {formula}").map_err(w_out)?;
        }
        if let Some(special) = inst.bounds.extra_special {
            let gap = inst
                .mixing
                .clone()
                .with_theta(0.75)
                .and_then(|mp| build_derived(&mp))
                .and_then(|d| d.wbar.lambda_min())
                .map(|l| (2.0 * l / inst.problem.lipschitz() - special).abs());
            if let Ok(gap) = gap {
                writeln!(out, "extra-special vs 2 lambda_min(Wbar)/L at theta = 3/4: gap {gap:e}").map_err(w_out)?;
            }
        }
        for (name, alpha, rho) in [
            ("extra-new", 0.5 * inst.bounds.extra_new, inst.extra_certificate(0.5 * inst.bounds.extra_new).map(|c| c.rho)),
            ("nids", 0.5 * inst.bounds.nids, inst.nids_certificate(0.5 * inst.bounds.nids).map(|c| c.rho3)),
        ] {
            let rho = rho.map_or_else(|e| format!("none ({e})"), formats::fmt_f64);
            writeln!(out, "certified rate at 0.5 x {name} (alpha = {}): {rho}", formats::fmt_f64(alpha))
                .map_err(w_out)?;
        }
    }
    Ok(Outcome::Success)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exec(args: &[&str]) -> (Outcome, String, String) {
        let cli = Cli::try_parse_from(std::iter::once("decon").chain(args.iter().copied())).unwrap();
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = execute(cli, &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("DGD 1/(10L)"), "dgd-1-10l");
        assert_eq!(slug("EXTRA alpha3 relaxed"), "extra-alpha3-relaxed");
        assert_eq!(slug("nids@0.99*nids"), "nids-0-99-nids");
        assert_eq!(slug("  "), "run");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Outcome::Success.code(), 0);
        assert_eq!(Outcome::Invalid.code(), 1);
        assert_eq!(Outcome::Diverged.code(), 2);
    }

    #[test]
    fn run_to_stdout() {
        let (code, out, err) = exec(&["run", "--n", "5", "--p", "2", "--max-iters", "10"]);
        assert_eq!(code, Outcome::Success, "{err}");
        assert!(out.starts_with("k,algo,alpha,residual\n"));
        assert_eq!(out.lines().count(), 12);
        assert!(err.contains("max_iters after 10 iterations"), "{err}");
    }

    #[test]
    fn divergence_maps_to_two() {
        let (code, _, err) = exec(&["run", "--algo", "dgd", "--alpha", "5", "--max-iters", "500"]);
        assert_eq!(code, Outcome::Diverged, "{err}");
        assert!(err.contains("diverged"));
    }

    #[test]
    fn bad_input_maps_to_one() {
        let (code, _, err) = exec(&["run", "--scenario", "nope"]);
        assert_eq!(code, Outcome::Invalid);
        assert!(err.contains("unknown scenario"), "{err}");
        let (code, _, _) = exec(&["run", "--relax-factor", "5"]);
        assert_eq!(code, Outcome::Invalid);
    }

    #[test]
    fn validate_reports() {
        let (code, out, _) = exec(&["validate-mixing", "--topology", "line", "--relax-factor", "0.333"]);
        assert_eq!(code, Outcome::Success, "{out}");
        assert!(out.contains("result: valid"));
        let (code, out, _) = exec(&["validate-mixing", "--topology", "line", "--relax-factor", "2"]);
        assert_eq!(code, Outcome::Invalid, "{out}");
        assert!(out.contains("violation: relaxation factor"), "{out}");
    }

    #[test]
    fn bounds_table_for_fig1() {
        let (code, out, _) = exec(&["bounds", "--scenario", "fig1"]);
        assert_eq!(code, Outcome::Success);
        assert_eq!(out.matches("instance:").count(), 1);
        assert!(out.contains("nids           2.0000000000000001e-1"), "{out}");
        assert!(out.contains("extra-special"));
    }
}
