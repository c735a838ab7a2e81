//! Command-line front end: identity suites, theorem experiments, the Smith
//! suite, the minimal-submanifold comparison and the catalog listing.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::Vector;
use crate::smith::{self, ConstantTensor, DomainMetric, MapTriple};
use crate::structure::{
    contraction_identity_check, contraction_identity_check_corrupted, standard_kit, Case,
};
use crate::submanifold::catalog::{patch_by_id, patch_ids};
use crate::submanifold::{
    flow_first_variation, minimality_terms, Euclidean, LinearVectorField, Patch, QuadratureRule,
    TrigVectorField, VectorField,
};
use crate::variation::{
    family_for_case, fd_first_variation, first_variation_integral, random_generator, resolve_patch,
    theorem_a_experiment, theorem_b_experiment, theorem_rule, Claim, TheoremBReport,
    TheoremVerdict, Tolerances, TrigFormField, TrigScalarField, UmBackground,
};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Jsonl,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Exact G2 and Spin(7) contraction identities
    Identities,
    /// Theorem A and B experiments on catalog patches
    Theorem,
    /// Energy, volume and calibration functionals of maps
    Smith,
    /// Flow first variation against ∫(div X^T − ⟨X^⊥, H⟩)
    Minimal,
    /// List built-in patches, maps, generators and cases
    Catalog,
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "caliblab",
    version,
    about = "Calibrated submanifolds and ambient-metric variations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML file with the same keys as the long flags; flags win
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// um, associative, coassociative, cayley (identities also take g2, spin7, all)
    #[arg(long, global = true)]
    pub case: Option<String>,
    /// catalog patch id, or "auto" for the calibrated torus of the case
    #[arg(long, global = true)]
    pub patch: Option<String>,
    /// random, constant, test or all
    #[arg(long, global = true)]
    pub generator: Option<String>,
    #[arg(long, global = true)]
    pub quad_order: Option<usize>,
    #[arg(long, global = true)]
    pub tol_point: Option<f64>,
    #[arg(long, global = true)]
    pub tol_int: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Cayley: keep the Ω⁴_1 part of dγ̇
    #[arg(long, global = true)]
    pub keep_omega4_1: bool,
    /// U(m): complex dimension of the submanifold
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// U(m): complex dimension of the ambient space
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// U(m): flat Kähler background instead of the conformal one
    #[arg(long, global = true)]
    pub closed_omega: bool,
    /// generators per patch, random maps, or vector fields per patch
    #[arg(long, global = true)]
    pub count: Option<usize>,
    /// smith: catalog map id
    #[arg(long, global = true)]
    pub map: Option<String>,
    /// add wall-clock seconds to each record
    #[arg(long, global = true)]
    pub timings: bool,
    /// test hook: flip one structure constant before the identity suite
    #[arg(long, global = true, hide = true)]
    pub inject_corruption: bool,
}

/// Keys accepted in the TOML config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub case: Option<String>,
    pub patch: Option<String>,
    pub generator: Option<String>,
    pub quad_order: Option<usize>,
    pub tol_point: Option<f64>,
    pub tol_int: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub keep_omega4_1: Option<bool>,
    pub k: Option<usize>,
    pub m: Option<usize>,
    pub closed_omega: Option<bool>,
    pub count: Option<usize>,
    pub map: Option<String>,
    pub timings: Option<bool>,
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub case: Option<String>,
    pub patch: Option<String>,
    pub generator: String,
    pub quad_order: usize,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub keep_omega4_1: bool,
    pub k: Option<usize>,
    pub m: Option<usize>,
    pub closed_omega: bool,
    pub count: Option<usize>,
    pub map: Option<String>,
    pub timings: bool,
    pub inject_corruption: bool,
}

impl ExperimentConfig {
    pub fn resolve(cli: &Cli) -> Result<Self> {
        let file = match &cli.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                toml::from_str::<FileConfig>(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let cfg = Self {
            case: cli.case.clone().or(file.case),
            patch: cli.patch.clone().or(file.patch),
            generator: cli
                .generator
                .clone()
                .or(file.generator)
                .unwrap_or_else(|| "random".into()),
            quad_order: cli.quad_order.or(file.quad_order).unwrap_or(8),
            tolerances: Tolerances {
                point: cli.tol_point.or(file.tol_point).unwrap_or(1e-8),
                int: cli.tol_int.or(file.tol_int).unwrap_or(1e-6),
            },
            seed: cli.seed.or(file.seed).unwrap_or(7),
            out: cli.out.clone().or(file.out),
            format: cli.format.or(file.format).unwrap_or_default(),
            keep_omega4_1: cli.keep_omega4_1 || file.keep_omega4_1.unwrap_or(false),
            k: cli.k.or(file.k),
            m: cli.m.or(file.m),
            closed_omega: cli.closed_omega || file.closed_omega.unwrap_or(false),
            count: cli.count.or(file.count),
            map: cli.map.clone().or(file.map),
            timings: cli.timings || file.timings.unwrap_or(false),
            inject_corruption: cli.inject_corruption,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let t = self.tolerances;
        if !(t.point > 0.0 && t.int > 0.0 && t.point.is_finite() && t.int.is_finite()) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if !(1..=64).contains(&self.quad_order) {
            return Err(Error::Config(format!(
                "quadrature order {} outside 1..=64",
                self.quad_order
            )));
        }
        if !["random", "constant", "test", "all"].contains(&self.generator.as_str()) {
            return Err(Error::Config(format!(
                "unknown generator {:?}",
                self.generator
            )));
        }
        if let Some(p) = &self.patch {
            if p != "auto" && !patch_ids().contains(&p.as_str()) {
                return Err(Error::Config(format!("unknown patch id {p:?}")));
            }
        }
        if let Some(m) = &self.map {
            if !smith::map_ids().contains(&m.as_str()) {
                return Err(Error::Config(format!("unknown map id {m:?}")));
            }
        }
        if self.count == Some(0) {
            return Err(Error::Config("count must be positive".into()));
        }
        Ok(())
    }

    fn um_case(&self) -> Result<Case> {
        let k = self.k.unwrap_or(1);
        let m = self.m.unwrap_or(k + 1);
        let c = Case::AlmostComplex { m, k };
        c.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(c)
    }

    /// Cases selected for theorem runs; all four when no case is given.
    fn theorem_cases(&self) -> Result<Vec<Case>> {
        match self.case.as_deref() {
            None | Some("all") => Ok(vec![
                self.um_case()?,
                Case::Associative,
                Case::Coassociative,
                Case::Cayley,
            ]),
            Some(s) => match Case::from_str(s)? {
                Case::AlmostComplex { .. } => Ok(vec![self.um_case()?]),
                c => Ok(vec![c]),
            },
        }
    }

    fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("seed".into(), self.seed.to_string());
        m.insert("quad_order".into(), self.quad_order.to_string());
        m.insert("tol_point".into(), format!("{:e}", self.tolerances.point));
        m.insert("tol_int".into(), format!("{:e}", self.tolerances.int));
        m
    }
}

/// One experiment's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub schema_version: u32,
    pub id: String,
    pub command: String,
    pub inputs: BTreeMap<String, String>,
    pub scalars: BTreeMap<String, Option<f64>>,
    pub claims: Vec<Claim>,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_s: Option<f64>,
}

impl ReportRecord {
    fn new(id: String, command: &str, inputs: BTreeMap<String, String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            id,
            command: command.into(),
            inputs,
            scalars: BTreeMap::new(),
            claims: Vec::new(),
            passed: true,
            wall_clock_s: None,
        }
    }

    fn scalar(&mut self, name: &str, v: impl Into<Option<f64>>) -> &mut Self {
        let v = v.into().filter(|x| x.is_finite());
        self.scalars.insert(name.into(), v);
        self
    }

    fn finish(mut self, started: Instant, timings: bool) -> Self {
        self.passed = self.claims.iter().all(Claim::ok);
        if timings {
            self.wall_clock_s = Some(started.elapsed().as_secs_f64());
        }
        self
    }
}

fn verdict_record(
    id: String,
    inputs: BTreeMap<String, String>,
    v: &TheoremVerdict,
) -> ReportRecord {
    let mut r = ReportRecord::new(id, "theorem", inputs);
    r.scalar("analytic_first_variation", v.analytic_first_variation)
        .scalar("fd_first_variation", v.fd_first_variation)
        .scalar("defect_integral", v.defect_integral)
        .scalar("integrand_max_error", v.integrand_max_error)
        .scalar("stokes_integral", v.stokes_integral)
        .scalar("cayley_condition_integral", v.cayley_condition_integral)
        .scalar("lower_order_integral", v.lower_order_integral)
        .scalar("calibrated", if v.calibrated { 1.0 } else { 0.0 })
        .scalar("closed", if v.closed { 1.0 } else { 0.0 });
    r.claims = v.claims.clone();
    r
}

fn theorem_b_record(
    id: String,
    inputs: BTreeMap<String, String>,
    b: &TheoremBReport,
) -> ReportRecord {
    let mut r = ReportRecord::new(id, "theorem", inputs);
    r.scalar("defect_integral", b.defect_integral)
        .scalar("first_variation_sum", b.first_variation_sum)
        .scalar("ratio", b.ratio)
        .scalar("chain_max_error", b.chain_max_error)
        .scalar("star_restriction_max", b.star_restriction_max)
        .scalar("anomaly_max_error", b.anomaly_max_error)
        .scalar("projected_anomaly_max", b.projected_anomaly_max)
        .scalar("kept_first_variation_sum", b.kept_first_variation_sum);
    r.claims = b.claims.clone();
    r
}

/// U(m) background: conformal e^{2f} ω₀ with f along the patch axes, unless dω = 0 is requested.
fn um_background(cfg: &ExperimentConfig, case: Case, patch: &dyn Patch) -> UmBackground {
    if cfg.closed_omega || !matches!(case, Case::AlmostComplex { .. }) {
        return UmBackground::Flat;
    }
    let axes: Vec<usize> = (0..patch.k()).collect();
    UmBackground::Conformal(TrigScalarField::axis_waves(patch.n(), &axes, 0.05))
}

pub fn cmd_identities(cfg: &ExperimentConfig) -> Result<Vec<ReportRecord>> {
    let groups: Vec<(&str, Case)> = match cfg.case.as_deref() {
        None | Some("all") => vec![("g2", Case::Associative), ("spin7", Case::Cayley)],
        Some("g2" | "associative" | "assoc" | "coassociative" | "coassoc") => {
            vec![("g2", Case::Associative)]
        }
        Some("spin7" | "cayley") => vec![("spin7", Case::Cayley)],
        Some(other) => return Err(Error::Config(format!("identities has no case {other:?}"))),
    };
    let mut out = Vec::new();
    for (tag, case) in groups {
        let started = Instant::now();
        let kit = standard_kit(case)?;
        let report = if cfg.inject_corruption {
            contraction_identity_check_corrupted(&kit)?
        } else {
            contraction_identity_check(&kit)?
        };
        for (i, fam) in report.families.iter().enumerate() {
            let mut inputs = BTreeMap::new();
            inputs.insert("group".into(), tag.to_string());
            inputs.insert("statement".into(), fam.statement.clone());
            inputs.insert("corrupted".into(), cfg.inject_corruption.to_string());
            let mut r = ReportRecord::new(
                format!("identities/{tag}/{i}-{}", fam.name),
                "identities",
                inputs,
            );
            r.scalar("tuples_checked", fam.tuples_checked as f64)
                .scalar("max_violation", fam.max_violation as f64);
            r.claims.push(Claim::small(
                "zero-violation",
                fam.max_violation as f64,
                0.0,
                true,
            ));
            out.push(r.finish(started, cfg.timings));
        }
    }
    Ok(out)
}

pub fn cmd_theorem(cfg: &ExperimentConfig) -> Result<Vec<ReportRecord>> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for case in cfg.theorem_cases()? {
        let patch = resolve_patch(case, cfg.patch.as_deref().unwrap_or("auto"))
            .map_err(|e| Error::Config(e.to_string()))?;
        let background = um_background(cfg, case, patch.as_ref());
        let rule = theorem_rule(patch.as_ref(), cfg.quad_order)?;
        let mut inputs = cfg.echo();
        inputs.insert("case".into(), case.to_string());
        inputs.insert("patch".into(), patch.id());
        inputs.insert("keep_omega4_1".into(), cfg.keep_omega4_1.to_string());
        inputs.insert("closed_omega".into(), background.is_closed().to_string());
        let gens = cfg.generator.as_str();
        let count = cfg.count.unwrap_or(1);
        if matches!(gens, "random" | "constant" | "all") {
            for i in 0..count {
                let started = Instant::now();
                let (label, generator) = if gens == "constant" {
                    let g = random_generator(case, patch.as_ref(), 1, &mut rng)?;
                    let form = g.modes()[0].form.clone();
                    ("constant", TrigFormField::constant(form)?)
                } else {
                    (
                        "random",
                        random_generator(case, patch.as_ref(), 2, &mut rng)?,
                    )
                };
                let family = family_for_case(
                    case,
                    Arc::new(generator),
                    background.clone(),
                    cfg.keep_omega4_1,
                )?;
                let mut v = theorem_a_experiment(patch.as_ref(), &family, &rule, cfg.tolerances)?;
                if family.has_gbar() {
                    let fd = fd_first_variation(patch.as_ref(), &family, &rule, 1e-3, 2)?;
                    v.fd_first_variation = Some(fd.value);
                    let scale = v.analytic_first_variation.abs().max(1.0);
                    v.claims.push(Claim::small(
                        "fd-matches-analytic",
                        (fd.value - v.analytic_first_variation) / scale,
                        cfg.tolerances.int,
                        true,
                    ));
                }
                let mut inp = inputs.clone();
                inp.insert("generator".into(), format!("{label}-{i}"));
                let id = format!("theorem/{}/{}/{label}-{i:03}", case.tag(), patch.id());
                out.push(verdict_record(id, inp, &v).finish(started, cfg.timings));
            }
        }
        if matches!(gens, "test" | "all") || (cfg.keep_omega4_1 && case == Case::Cayley) {
            let started = Instant::now();
            let kit = standard_kit(case)?;
            // both sides of the defect relation share the nodes, so one cell suffices
            let b_rule = QuadratureRule::new(cfg.quad_order, 1)?;
            let b = theorem_b_experiment(&kit, patch.as_ref(), &b_rule, cfg.tolerances)?;
            let mut inp = inputs.clone();
            inp.insert("generator".into(), "test".into());
            let id = format!("theorem/{}/{}/test", case.tag(), patch.id());
            out.push(theorem_b_record(id, inp, &b).finish(started, cfg.timings));
        }
    }
    Ok(out)
}

fn smith_catalog_record(
    id: &str,
    cfg: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
) -> Result<ReportRecord> {
    let started = Instant::now();
    let triple = smith::map_by_id(id)?;
    let rule = QuadratureRule::new(cfg.quad_order, 1)?;
    let tol = cfg.tolerances;
    let chain = smith::smith_chain(&triple, &rule)?;
    let res = smith::smith_residual(&triple, &rule)?;
    let k = triple.k();
    let mut inputs = cfg.echo();
    inputs.insert("map".into(), id.into());
    inputs.insert("case".into(), triple.kit.case().to_string());
    let mut r = ReportRecord::new(format!("smith/map/{id}"), "smith", inputs);
    r.scalar("energy", chain.energy)
        .scalar("volume", chain.volume)
        .scalar("calibration_integral", chain.calibration)
        .scalar("conformality_residual", res.conformality)
        .scalar("calibration_residual", res.calibration);
    let slack = 1e-12 * chain.energy.abs().max(1.0);
    r.claims.push(Claim::small(
        "energy-ge-volume",
        (chain.volume - chain.energy).max(0.0),
        slack,
        true,
    ));
    r.claims.push(Claim::small(
        "volume-ge-calibration",
        (chain.calibration - chain.volume).max(0.0),
        slack,
        true,
    ));
    let conformal = res.conformality <= tol.point;
    if res.calibration <= tol.point {
        r.claims.push(Claim::small(
            "smith-implies-conformal",
            res.conformality,
            tol.point,
            true,
        ));
    }
    if k >= 2 {
        let h: Arc<dyn DomainMetric> = Arc::new(ConstantTensor(smith::random_symmetric(k, rng)));
        let dv = smith::energy_first_variation_domain(&triple, h.as_ref(), &rule)?;
        let fd = crate::submanifold::fd_derivative(
            |s| {
                smith::k_energy(
                    &triple.with_domain_metric(smith::shifted_domain_metric(&triple, h.clone(), s)),
                    &rule,
                )
            },
            0.0,
            1e-3,
            2,
        )?;
        r.scalar("domain_first_variation", dv)
            .scalar("domain_first_variation_fd", fd.value);
        r.claims.push(Claim::small(
            "domain-variation-fd",
            (dv - fd.value) / dv.abs().max(1.0),
            tol.int,
            true,
        ));
        r.claims.push(Claim::small(
            "domain-variation-zero",
            dv,
            tol.point,
            conformal,
        ));
    }
    let hbar = ConstantTensor(smith::random_symmetric(triple.kit.n(), rng));
    let tv = smith::energy_first_variation_target(&triple, &hbar, &rule)?;
    let image = first_variation_integral(
        triple.map.as_ref(),
        &Euclidean(triple.kit.n()),
        &hbar,
        &rule,
    )?;
    r.scalar("target_first_variation", tv)
        .scalar("image_first_variation", image);
    r.claims.push(Claim::small(
        "target-equals-image",
        tv - image,
        tol.int,
        conformal,
    ));
    Ok(r.finish(started, cfg.timings))
}

fn smith_random_record(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<ReportRecord> {
    let started = Instant::now();
    let count = cfg.count.unwrap_or(200);
    let kits = smith::smith_kits()?;
    let rule = QuadratureRule::new(4, 1)?;
    let mut worst_ev: f64 = 0.0;
    let mut worst_vc: f64 = 0.0;
    let mut worst_invariance: f64 = 0.0;
    for i in 0..count {
        let kit = kits[i % kits.len()].clone();
        let k = kit.calibrated_dim();
        let map = smith::random_polynomial_map(kit.n(), k, rng)?;
        let triple = MapTriple::flat(Arc::new(map), kit)?;
        let c = smith::smith_chain(&triple, &rule)?;
        let scale = c.energy.abs().max(1.0);
        worst_ev = worst_ev.max((c.volume - c.energy).max(c.energy_volume_violation) / scale);
        worst_vc =
            worst_vc.max((c.calibration - c.volume).max(c.volume_calibration_violation) / scale);
        // λ(x) = exp(Σ a_i x_i) > 0
        let coeffs: Vec<f64> = (0..k)
            .map(|a| 0.3 * (a as f64 + 1.0) * if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let lambda = move |x: &[f64]| coeffs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>().exp();
        let scaled = triple.with_domain_metric(Arc::new(smith::ConformalDomain {
            base: triple.domain_metric.clone(),
            lambda: Arc::new(lambda),
        }));
        let e2 = smith::k_energy(&scaled, &rule)?;
        worst_invariance = worst_invariance.max((e2 - c.energy).abs() / scale);
    }
    let mut inputs = cfg.echo();
    inputs.insert("count".into(), count.to_string());
    let mut r = ReportRecord::new("smith/random".into(), "smith", inputs);
    r.scalar("maps", count as f64)
        .scalar("max_energy_volume_violation", worst_ev)
        .scalar("max_volume_calibration_violation", worst_vc)
        .scalar("max_conformal_invariance_error", worst_invariance);
    r.claims
        .push(Claim::small("energy-ge-volume", worst_ev, 1e-12, true));
    r.claims
        .push(Claim::small("volume-ge-calibration", worst_vc, 1e-12, true));
    r.claims.push(Claim::small(
        "conformal-invariance",
        worst_invariance,
        1e-10,
        true,
    ));
    Ok(r.finish(started, cfg.timings))
}

pub fn cmd_smith(cfg: &ExperimentConfig) -> Result<Vec<ReportRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ids: Vec<&str> = match &cfg.map {
        Some(m) => vec![m.as_str()],
        None => smith::map_ids(),
    };
    let mut out = Vec::new();
    for id in ids {
        out.push(smith_catalog_record(id, cfg, &mut rng)?);
    }
    if cfg.map.is_none() {
        out.push(smith_random_record(cfg, &mut rng)?);
    }
    Ok(out)
}

/// Patches of the minimal suite: curved ones and the flat tori.
pub fn minimal_patch_ids() -> Vec<&'static str> {
    vec![
        "sphere",
        "torus",
        "graph-quadratic-r3",
        "t2-in-r4",
        "t3-in-r7",
    ]
}

fn minimal_record(
    patch: &dyn Patch,
    field: &dyn VectorField,
    label: &str,
    periodic: bool,
    cfg: &ExperimentConfig,
) -> Result<ReportRecord> {
    let started = Instant::now();
    let rule = theorem_rule(patch, cfg.quad_order)?;
    let fd = flow_first_variation(patch, field, &rule, 1e-3, 2)?;
    let terms = minimality_terms(patch, field, &rule)?;
    let mut inputs = cfg.echo();
    inputs.insert("patch".into(), patch.id());
    inputs.insert("field".into(), label.into());
    let mut r = ReportRecord::new(format!("minimal/{}/{label}", patch.id()), "minimal", inputs);
    r.scalar("flow_first_variation", fd.value)
        .scalar("tangential_divergence", terms.tangential_divergence)
        .scalar("mean_curvature_term", terms.mean_curvature_term);
    let scale = fd.value.abs().max(1.0);
    r.claims.push(Claim::small(
        "divergence-identity",
        (fd.value - terms.first_variation()) / scale,
        cfg.tolerances.int,
        true,
    ));
    // integer-wave fields respect the torus identification; X = p does not
    let flat_closed = patch.domain().is_closed() && terms.mean_curvature_term == 0.0;
    if flat_closed && periodic {
        r.claims.push(Claim::small(
            "flat-first-variation-zero",
            fd.value,
            cfg.tolerances.point,
            true,
        ));
    }
    Ok(r.finish(started, cfg.timings))
}

pub fn cmd_minimal(cfg: &ExperimentConfig) -> Result<Vec<ReportRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ids: Vec<&str> = match &cfg.patch {
        Some(p) if p != "auto" => vec![p.as_str()],
        _ => minimal_patch_ids(),
    };
    let count = cfg.count.unwrap_or(3);
    let mut out = Vec::new();
    for id in ids {
        let patch = patch_by_id(id)?;
        let n = patch.n();
        for i in 0..count {
            let field = TrigVectorField::random(n, 3, 0.5, &mut rng);
            out.push(minimal_record(
                patch.as_ref(),
                &field,
                &format!("trig-{i:03}"),
                true,
                cfg,
            )?);
        }
        let radial = LinearVectorField {
            a: nalgebra::DMatrix::identity(n, n),
            b: Vector::zeros(n),
        };
        out.push(minimal_record(
            patch.as_ref(),
            &radial,
            "radial",
            false,
            cfg,
        )?);
    }
    Ok(out)
}

pub fn cmd_catalog(_cfg: &ExperimentConfig) -> Result<Vec<ReportRecord>> {
    let mut out = Vec::new();
    for id in patch_ids() {
        let p = patch_by_id(id)?;
        let mut inputs = BTreeMap::new();
        inputs.insert("closed".into(), p.domain().is_closed().to_string());
        let mut r = ReportRecord::new(format!("catalog/patch/{id}"), "catalog", inputs);
        r.scalar("k", p.k() as f64).scalar("n", p.n() as f64);
        out.push(r);
    }
    for id in smith::map_ids() {
        let t = smith::map_by_id(id)?;
        let mut inputs = BTreeMap::new();
        inputs.insert("case".into(), t.kit.case().to_string());
        let mut r = ReportRecord::new(format!("catalog/map/{id}"), "catalog", inputs);
        r.scalar("k", t.k() as f64).scalar("n", t.kit.n() as f64);
        out.push(r);
    }
    for (name, what) in [
        (
            "random",
            "two trigonometric modes with constant coefficients",
        ),
        ("constant", "one constant-coefficient form"),
        (
            "test",
            "the Theorem B test variations with canonical selectors",
        ),
        ("all", "random and test"),
    ] {
        let mut inputs = BTreeMap::new();
        inputs.insert("description".into(), what.into());
        out.push(ReportRecord::new(
            format!("catalog/generator/{name}"),
            "catalog",
            inputs,
        ));
    }
    Ok(out)
}

/// Records in id order as JSON lines.
pub fn to_jsonl(records: &[ReportRecord]) -> Result<String> {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).map_err(|e| Error::Config(e.to_string()))?);
        s.push('\n');
    }
    Ok(s)
}

/// Long-format CSV: one row per scalar and per claim.
pub fn to_csv(records: &[ReportRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Config(e.to_string());
    w.write_record([
        "schema_version",
        "id",
        "command",
        "kind",
        "name",
        "value",
        "tolerance",
        "expected_pass",
        "passed",
    ])
    .map_err(err)?;
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    for r in records {
        let sv = r.schema_version.to_string();
        for (name, v) in &r.scalars {
            w.write_record([
                sv.as_str(),
                &r.id,
                &r.command,
                "scalar",
                name,
                &fmt(*v),
                "",
                "",
                "",
            ])
            .map_err(err)?;
        }
        for c in &r.claims {
            w.write_record([
                sv.as_str(),
                &r.id,
                &r.command,
                "claim",
                &c.name,
                &fmt(Some(c.value)),
                &fmt(Some(c.tolerance)),
                &c.expected_pass.to_string(),
                &c.passed.to_string(),
            ])
            .map_err(err)?;
        }
        w.write_record([
            sv.as_str(),
            &r.id,
            &r.command,
            "verdict",
            "passed",
            "",
            "",
            "",
            &r.passed.to_string(),
        ])
        .map_err(err)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Config(e.to_string()))?)
        .map_err(|e| Error::Config(e.to_string()))
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("CALIBLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::Config(format!(
            "CALIBLAB_THREADS must be a positive integer, got {v:?}"
        ))
    })?;
    // a pool built earlier in the same process stays in place
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Run one command and return its records sorted by id.
pub fn execute(command: Command, cfg: &ExperimentConfig) -> Result<Vec<ReportRecord>> {
    let mut records = match command {
        Command::Identities => cmd_identities(cfg)?,
        Command::Theorem => cmd_theorem(cfg)?,
        Command::Smith => cmd_smith(cfg)?,
        Command::Minimal => cmd_minimal(cfg)?,
        Command::Catalog => cmd_catalog(cfg)?,
    };
    records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(records)
}

/// Entry point shared by the binary and the tests. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_PASS
            };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    let result = configure_threads().and_then(|_| {
        let cfg = ExperimentConfig::resolve(&cli)?;
        let records = execute(cli.command, &cfg)?;
        Ok((cfg, records))
    });
    let (cfg, records) = match result {
        Ok(x) => x,
        Err(e @ Error::Config(_)) => {
            let _ = writeln!(stderr, "caliblab: {e}");
            return EXIT_CONFIG;
        }
        Err(e) => {
            let _ = writeln!(stderr, "caliblab: {e}");
            return EXIT_FAIL;
        }
    };
    let body = match cfg.format {
        Format::Jsonl => to_jsonl(&records),
        Format::Csv => to_csv(&records),
    };
    let body = match body {
        Ok(b) => b,
        Err(e) => {
            let _ = writeln!(stderr, "caliblab: {e}");
            return EXIT_FAIL;
        }
    };
    let written = match &cfg.out {
        Some(path) => {
            std::fs::write(path, &body).map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
        None => stdout.write_all(body.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "caliblab: {e}");
        return EXIT_CONFIG;
    }
    let failed: Vec<&str> = records
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.id.as_str())
        .collect();
    let _ = writeln!(stderr, "{} records, {} failed", records.len(), failed.len());
    for id in &failed {
        let _ = writeln!(stderr, "FAILED {id}");
    }
    if failed.is_empty() {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}
