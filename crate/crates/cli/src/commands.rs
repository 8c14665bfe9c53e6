use std::fmt::{self, Write as _};
use std::io::Write as _;
use std::path::Path;

use clap::Args;
use serde::Serialize;
use serde_json::json;

use rho_core::aggregation::{saddle_point, CandidateSet, SaddleConfig};
use rho_core::criterion::{rho_estimate, Penalty, RhoFit};
use rho_core::harness::mle::{MleReport, ThetaGrid};
use rho_core::harness::{mc_risk, mle_counterexample, to_csv, to_json, EstimatorConfig, Truth};
use rho_core::measure::{Density1D, DensityKind, ProductDensity, QuadratureSpec, RegressionFunction};
use rho_core::psi::{kernel_constants, PsiId, PsiKernel};
use rho_core::regression::{build_regression_family, fit_regression, RegressionModel};
use rho_core::selection::{risk_bound_report, select, uniform_deltas, ModelCollection};
use rho_core::zoo::{
    dimension_bound_entropy, dimension_bound_finite, dimension_bound_vc, eta_x0, grid_values, BoundSource, ModelDescriptor,
};

use crate::config::{AggregateConfig, BenchConfig, BoundSpec, FitConfig, GridSpec, RegressConfig, SelectConfig};
use crate::{Command, Global};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<rho_core::Error> for CliError {
    fn from(e: rho_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Args, Debug)]
pub struct BoundsArgs {
    /// Cardinality of a finite model
    #[arg(long)]
    pub cardinality: Option<usize>,
    /// VC index (needs --n)
    #[arg(long)]
    pub vc_index: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Entropy dimension
    #[arg(long)]
    pub entropy_dim: Option<f64>,
}

#[derive(Args, Debug)]
pub struct DemoMleArgs {
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub replications: usize,
    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    pub grid_min: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    pub grid_max: f64,
    #[arg(long, default_value_t = 0.1)]
    pub grid_step: f64,
}

fn read_config<T: serde::de::DeserializeOwned>(g: &Global) -> Result<T> {
    let path = g
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("this subcommand needs --config <path.json>".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn kernel(g: &Global) -> Result<PsiKernel> {
    let id: PsiId = g.psi.as_deref().unwrap_or("psi2").parse()?;
    Ok(kernel_constants(id))
}

fn check_kappa(g: &Global) -> Result<()> {
    if !(g.kappa_multiplier > 0.0 && g.kappa_multiplier.is_finite()) {
        return Err(CliError::Config("--kappa-multiplier must be > 0".into()));
    }
    Ok(())
}

fn emit(g: &Global, body: &str) -> Result<()> {
    match &g.out {
        Some(p) => write_file(p, body),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())?;
            if !body.ends_with('\n') {
                out.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn write_file(p: &Path, body: &str) -> Result<()> {
    std::fs::write(p, body).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
}

fn emit_json<T: Serialize>(g: &Global, v: &T) -> Result<()> {
    emit(g, &serde_json::to_string_pretty(v)?)
}

fn is_csv(g: &Global) -> bool {
    g.format == "csv"
}

fn trace_csv(fit: &RhoFit) -> String {
    let mut s = String::from("index,upsilon\n");
    for (i, u) in fit.trace.iter().enumerate() {
        writeln!(s, "{i},{u:.16e}").expect("writing to a String");
    }
    s
}

pub fn run(cmd: &Command, g: &Global) -> Result<()> {
    check_kappa(g)?;
    match cmd {
        Command::Fit => fit(g),
        Command::Select => select_cmd(g),
        Command::Aggregate => aggregate(g),
        Command::Regress => regress(g),
        Command::Bench => bench(g),
        Command::Bounds(a) => bounds(g, a),
        Command::DemoMle(a) => demo_mle(g, a),
    }
}

fn fit(g: &Global) -> Result<()> {
    let cfg: FitConfig = read_config(g)?;
    let k = kernel(g)?;
    let n = cfg.sample.n();
    let fam = cfg.family.family(n)?;
    let marginals = cfg.family.marginals()?;
    if !(cfg.slack_multiplier >= 0.0 && cfg.slack_multiplier.is_finite()) {
        return Err(CliError::Config("slack_multiplier must be finite and >= 0".into()));
    }
    let slack = cfg.slack_multiplier * g.kappa_multiplier * k.kappa / 25.0;
    let fit = rho_estimate(&cfg.sample, &fam, &Penalty::zero(fam.len()), &k, Some(slack))?;
    if is_csv(g) {
        return emit(g, &trace_csv(&fit));
    }
    emit_json(
        g,
        &json!({
            "estimate": marginals[fit.chosen_index],
            "fit": fit,
        }),
    )
}

fn select_cmd(g: &Global) -> Result<()> {
    let cfg: SelectConfig = read_config(g)?;
    let k = kernel(g)?;
    let n = cfg.sample.n();
    let mut models = cfg
        .models
        .iter()
        .map(|m| {
            let family = m.family.family(n)?;
            let (d, src) = match m.bound {
                BoundSpec::Finite => (dimension_bound_finite(family.len())?, BoundSource::Finite),
                BoundSpec::Vc { index } => (dimension_bound_vc(index, n, g.c1)?, BoundSource::Vc),
                BoundSpec::Entropy { dim } => (dimension_bound_entropy(dim)?, BoundSource::Entropy),
                BoundSpec::User { value } => (value, BoundSource::User),
            };
            Ok(ModelDescriptor::new(family, d, src)?)
        })
        .collect::<Result<Vec<_>>>()?;
    match &cfg.weights {
        Some(w) if w.len() != models.len() => return Err(CliError::Config("need one weight per model".into())),
        Some(w) => {
            models = models
                .into_iter()
                .zip(w)
                .map(|(m, d)| m.with_delta(*d))
                .collect::<rho_core::Result<Vec<_>>>()?
        }
        None => uniform_deltas(&mut models),
    }
    let coll = ModelCollection::new(models, k)?.with_kappa_multiplier(g.kappa_multiplier)?;
    let sel = select(&cfg.sample, &coll, cfg.slack_multiplier)?;
    if is_csv(g) {
        return emit(g, &trace_csv(&sel.fit));
    }
    let bounds = sel
        .selected_models
        .iter()
        .map(|m| Ok(json!({"model": m, "risk_bound": risk_bound_report(&coll, *m, cfg.xi)?})))
        .collect::<Result<Vec<_>>>()?;
    emit_json(
        g,
        &json!({
            "estimate": coll.union().entry(sel.fit.chosen_index).iid_marginal(),
            "selected_models": sel.selected_models,
            "risk_bounds": bounds,
            "fit": sel.fit,
        }),
    )
}

fn aggregate(g: &Global) -> Result<()> {
    let cfg: AggregateConfig = read_config(g)?;
    let k = kernel(g)?;
    let n = cfg.sample.n();
    let cands: Vec<ProductDensity> = cfg.candidates.iter().map(|d| ProductDensity::iid(d.clone(), n)).collect();
    let cs = CandidateSet::new(&cfg.sample, &cands)?;
    let mut sc = SaddleConfig::default();
    if let Some(e) = cfg.eps {
        sc.eps = e;
    }
    if let Some(m) = cfg.max_outer {
        sc.max_outer = m;
    }
    let r = saddle_point(&cs, &k, &sc)?;
    if is_csv(g) {
        let mut s = String::from("candidate,weight\n");
        for (j, w) in r.alpha_star.weights().iter().enumerate() {
            writeln!(s, "{j},{w:.16e}").expect("writing to a String");
        }
        return emit(g, &s);
    }
    let mixture = Density1D::new(DensityKind::Mixture {
        weights: r.alpha_star.weights().to_vec(),
        components: cfg.candidates.iter().map(|d| d.kind().clone()).collect(),
    })
    .ok();
    emit_json(
        g,
        &json!({
            "weights": r.alpha_star,
            "certificate": r.certificate,
            "iterations": r.iterations,
            "condition_number": r.condition_number,
            "mixture": mixture,
        }),
    )
}

fn regress(g: &Global) -> Result<()> {
    let cfg: RegressConfig = read_config(g)?;
    let k = kernel(g)?;
    let n = cfg.sample.n();
    let mut families = Vec::new();
    for fam in &cfg.function_families {
        let coeffs = match &fam.grid {
            GridSpec::Range { min, max, step } => {
                if fam.basis.len() != 1 {
                    return Err(CliError::Config("a range grid needs exactly one basis function".into()));
                }
                grid_values(*min, *max, *step)?.into_iter().map(|t| vec![t]).collect()
            }
            GridSpec::Explicit(v) => v.clone(),
        };
        let fs = coeffs
            .into_iter()
            .map(|c| {
                if c.len() != fam.basis.len() {
                    return Err(CliError::Config("coefficient vector length differs from basis size".into()));
                }
                Ok(RegressionFunction {
                    basis: fam.basis.clone(),
                    coefficients: c,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let vc = fam.vc_index.unwrap_or(fam.basis.len() as u32 + 2);
        families.push((fs, vc));
    }
    let pairs = cfg.error_models.len() * families.len();
    if pairs == 0 {
        return Err(CliError::Config("need at least one error model and one function family".into()));
    }
    let deltas = match &cfg.weights {
        Some(w) if w.len() != pairs => {
            return Err(CliError::Config(format!("need {pairs} weights, one per (error model, function family)")))
        }
        Some(w) => w.clone(),
        None => vec![(pairs as f64).ln(); pairs],
    };
    let mut models = Vec::with_capacity(pairs);
    for r in &cfg.error_models {
        for (fs, vc) in &families {
            let m = models.len();
            models.push(RegressionModel::new(r.clone(), fs.clone(), *vc)?.with_delta(deltas[m]));
        }
    }
    let coll = build_regression_family(&models, n, k, g.c1)?.with_kappa_multiplier(g.kappa_multiplier)?;
    let fit = fit_regression(&cfg.sample, &coll, cfg.slack_multiplier)?;
    if is_csv(g) {
        return emit(g, &trace_csv(&fit.fit));
    }
    let m = fit.selected_models[0];
    let r_id = m / families.len();
    let g_id = models[m].functions.iter().position(|f| *f == fit.f_hat);
    emit_json(
        g,
        &json!({
            "theta_hat": fit.f_hat.coefficients,
            "g_id": g_id,
            "function_family": m % families.len(),
            "r_id": r_id,
            "f_hat": fit.f_hat,
            "s_hat": fit.s_hat,
            "selected_models": fit.selected_models,
            "criterion": fit.fit,
        }),
    )
}

fn bench(g: &Global) -> Result<()> {
    let mut cfg: BenchConfig = read_config(g)?;
    if let Some(seed) = g.seed {
        cfg.scenario.seed = seed;
    }
    if let EstimatorConfig::Rho { psi, slack_multiplier, .. } = &mut cfg.estimator {
        if let Some(p) = &g.psi {
            *psi = p.parse()?;
        }
        *slack_multiplier *= g.kappa_multiplier;
    }
    let reference = match (cfg.loss_reference, &cfg.scenario.truth) {
        (Some(r), _) => r,
        (None, Truth::Iid { law }) => law.clone(),
        (None, Truth::Contaminated { center, .. }) => center.clone(),
        (None, _) => return Err(CliError::Config("loss_reference is required for this truth".into())),
    };
    let report = mc_risk(&cfg.scenario, &cfg.estimator, &reference, &QuadratureSpec::default(), cfg.bound_reference)?;
    if is_csv(g) {
        emit(g, &to_csv(&report))
    } else {
        emit(g, &to_json(&report)?)
    }
}

fn bounds(g: &Global, a: &BoundsArgs) -> Result<()> {
    let k = kernel(g)?;
    let mut out = serde_json::Map::new();
    if let Some(c) = a.cardinality {
        out.insert("finite".into(), json!({"cardinality": c, "dim_bound": dimension_bound_finite(c)?}));
    }
    match (a.vc_index, a.n) {
        (Some(v), Some(n)) => {
            out.insert("vc".into(), json!({"vc_index": v, "n": n, "c1": g.c1, "dim_bound": dimension_bound_vc(v, n, g.c1)?}));
        }
        (Some(_), None) => return Err(CliError::Config("--vc-index needs --n".into())),
        _ => {}
    }
    if let Some(v) = a.entropy_dim {
        out.insert("entropy".into(), json!({"dim": v, "dim_bound": dimension_bound_entropy(v)?}));
    }
    out.insert(
        "kernel".into(),
        json!({
            "constants": k,
            "kappa_used": k.kappa * g.kappa_multiplier,
            "slack_default": k.kappa * g.kappa_multiplier / 25.0,
            "eta_x0": eta_x0(&k),
        }),
    );
    if is_csv(g) {
        let mut s = String::from("name,value\n");
        for (name, key) in [("finite", "finite"), ("vc", "vc"), ("entropy", "entropy")] {
            if let Some(v) = out.get(key).and_then(|o| o["dim_bound"].as_f64()) {
                writeln!(s, "{name},{v:.16e}").expect("writing to a String");
            }
        }
        writeln!(s, "kappa,{:.16e}", k.kappa * g.kappa_multiplier).expect("writing to a String");
        return emit(g, &s);
    }
    emit_json(g, &out)
}

fn mle_csv(r: &MleReport) -> String {
    let mut s = String::from("replicate,event,max_obs,mean,mle,rho_theta,rho_theta_standard\n");
    for x in &r.replicates {
        writeln!(
            s,
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            x.replicate, x.event, x.max_obs, x.mean, x.mle, x.rho_theta, x.rho_theta_standard
        )
        .expect("writing to a String");
    }
    s
}

fn demo_mle(g: &Global, a: &DemoMleArgs) -> Result<()> {
    let k = kernel(g)?;
    let grid = ThetaGrid {
        min: a.grid_min,
        max: a.grid_max,
        step: a.grid_step,
    };
    let r = mle_counterexample(a.theta, a.n, a.replications, g.seed.unwrap_or(0), grid, &k)?;
    if is_csv(g) {
        emit(g, &mle_csv(&r))
    } else {
        emit_json(g, &r)
    }
}
