//! One-shot leading-order evolution, the fixed-volume first-collision regime and
//! the remainder budgets it is compared against.

use serde::Serialize;

use crate::bosonization::{sharp_prefactor_ratio, PairPlan};
use crate::collision::CollisionPlan;
use crate::distribution::{Distribution, SparseField};
use crate::error::{Error, Result};
use crate::fit::loglog_slope;
use crate::lattice::{LatticeContext, Momentum};
use crate::model::{Conventions, Model};
use crate::states::{field_norm, generate_slater, norm, GeneratorOptions, Norm};

/// `λ = N^-(3/2+δ₁)`, `t = N^(1/6+δ₂) T`, `ε = N^-(1/6+δ₂)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalingRegime {
    #[serde(rename = "N")]
    pub n_particles: f64,
    pub delta1: f64,
    pub delta2: f64,
    #[serde(rename = "T")]
    pub big_t: f64,
}

impl ScalingRegime {
    pub fn new(n_particles: f64, delta1: f64, delta2: f64, big_t: f64) -> Result<Self> {
        if !(n_particles >= 1.0) {
            return Err(Error::Regime(format!("N must be at least 1, got {n_particles}")));
        }
        if !(delta1 > 0.0) {
            return Err(Error::Regime(format!("δ₁ must be positive, got {delta1}")));
        }
        if !(delta2 > 0.0 && delta2 <= delta1 / 2.0) {
            return Err(Error::Regime(format!("need 0 < δ₂ <= δ₁/2, got δ₁ = {delta1}, δ₂ = {delta2}")));
        }
        let s = ScalingRegime { n_particles, delta1, delta2, big_t };
        let lo = n_particles.powf(-s.delta() / 2.0);
        if !(big_t >= lo && big_t <= 1.0) {
            return Err(Error::Regime(format!("T = {big_t} outside [N^(-δ/2), 1] = [{lo}, 1]")));
        }
        Ok(s)
    }

    /// `δ = δ₁/2`.
    pub fn delta(&self) -> f64 {
        self.delta1 / 2.0
    }

    pub fn lambda(&self) -> f64 {
        self.n_particles.powf(-(1.5 + self.delta1))
    }

    pub fn t(&self) -> f64 {
        self.n_particles.powf(1.0 / 6.0 + self.delta2) * self.big_t
    }

    pub fn epsilon(&self) -> f64 {
        self.n_particles.powf(-(1.0 / 6.0 + self.delta2))
    }

    /// `(λ/ε)² T²`, which equals `λ² t²`.
    pub fn step_scale(&self) -> f64 {
        (self.lambda() / self.epsilon() * self.big_t).powi(2)
    }
}

/// `f_0` plus an increment, with entries outside `[0, 1]` listed rather than clamped.
#[derive(Clone, Debug, PartialEq)]
pub struct Evolved {
    pub values: SparseField,
    pub increment: SparseField,
    pub excursions: Vec<(Momentum, f64)>,
}

impl Evolved {
    fn new(f0: &Distribution, increment: SparseField) -> Self {
        let mut values: SparseField = f0.iter().map(|(p, v)| (*p, v)).collect();
        for (p, v) in increment.iter() {
            values.add(*p, v);
        }
        let excursions = values.iter().filter(|(_, v)| !(0.0..=1.0).contains(v)).map(|(p, v)| (*p, v)).collect();
        Evolved { values, increment, excursions }
    }

    pub fn total(&self) -> f64 {
        self.values.sum()
    }
}

fn combine(scale: f64, a: &SparseField, b: &SparseField) -> SparseField {
    let mut out = SparseField::new();
    for (p, v) in a.iter() {
        out.add(*p, scale * v);
    }
    for (p, v) in b.iter() {
        out.add(*p, scale * v);
    }
    out
}

/// `f_t = f_0 + λ² t (B_t[f_0] + Q_t[f_0])`.
pub fn leading_order_step(model: &Model, f0: &Distribution, lambda: f64, t: f64) -> Result<Evolved> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    let b = PairPlan::new(model, f0, lambda)?.mollified(t)?;
    let q = CollisionPlan::new(model, f0, lambda)?.mollified(t)?;
    Ok(Evolved::new(f0, combine(lambda * lambda * t, &b.total, &q)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CorollaryReport {
    pub step_scale: f64,
    pub b_linf_off_surface: f64,
    pub q_linf_off_surface: f64,
    pub q_linf: f64,
    pub rem2_budget: f64,
}

fn check_corollary(model: &Model, m: f64) -> Result<()> {
    if model.ctx.d() != 3 {
        return Err(Error::Regime(format!("the fixed-volume regime needs d = 3, got {}", model.ctx.d())));
    }
    if !(m > 5.0) {
        return Err(Error::Regime(format!("weight exponent must exceed 5, got m = {m}")));
    }
    Ok(())
}

/// `f_0 + (λ/ε)² T² (ℬ[f_0] + 𝒬[f_0])`.
pub fn corollary_step(
    regime: &ScalingRegime,
    model: &Model,
    f0: &Distribution,
    m: f64,
    c: f64,
) -> Result<(Evolved, CorollaryReport)> {
    check_corollary(model, m)?;
    let b = PairPlan::new(model, f0, 0.0)?.sharp();
    let (q, _) = CollisionPlan::new(model, f0, 0.0)?.sharp();
    let scale = regime.step_scale();
    let ctx = &model.ctx;
    let nm = model.conv.normalization;
    let report = CorollaryReport {
        step_scale: scale,
        b_linf_off_surface: field_norm(ctx, &b.total, Norm::LinfOffSurface, nm),
        q_linf_off_surface: field_norm(ctx, &q, Norm::LinfOffSurface, nm),
        q_linf: field_norm(ctx, &q, Norm::Linf, nm),
        rem2_budget: rem2_budget(regime.n_particles, regime.delta(), m, c),
    };
    Ok((Evolved::new(f0, combine(scale, &b.total, &q)), report))
}

/// The same step with the mollified operators at `t = T/ε` and the regime's `λ`.
pub fn corollary_step_mollified(regime: &ScalingRegime, model: &Model, f0: &Distribution, m: f64) -> Result<Evolved> {
    check_corollary(model, m)?;
    leading_order_step(model, f0, regime.lambda(), regime.t())
}

/// `⟨t⟩ = (1 + t²)^(1/2)`.
pub fn bracket(t: f64) -> f64 {
    (1.0 + t * t).sqrt()
}

/// `C t e^{C λ R ⟨t⟩} (λ R² (R^(1/2) + n²) ⟨t⟩ + R³ / p_F^m)`.
pub fn remainder_bound_thm1(ctx: &LatticeContext, lambda: f64, t: f64, n: f64, m: f64, c: f64) -> Result<f64> {
    if lambda < 0.0 || !(t > 0.0) || n < 0.0 || !(m > 0.0) || !(c > 0.0) {
        return Err(Error::Config(format!(
            "remainder bound needs λ >= 0, t > 0, n >= 0, m > 0, C > 0; got λ = {lambda}, t = {t}, n = {n}, m = {m}, C = {c}"
        )));
    }
    let r = ctx.surface_capacity();
    let bt = bracket(t);
    let growth = (c * lambda * r * bt).exp();
    Ok(c * t * growth * (lambda * r * r * (r.sqrt() + n * n) * bt + r.powi(3) / ctx.p_f().powf(m)))
}

/// `C N^(1/3) (N^-δ + N^(-(m-5)/3))`.
pub fn rem2_budget(n_particles: f64, delta: f64, m: f64, c: f64) -> f64 {
    c * n_particles.powf(1.0 / 3.0) * (n_particles.powf(-delta) + n_particles.powf(-(m - 5.0) / 3.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormSet {
    pub l1: f64,
    pub linf: f64,
    pub l1_m: f64,
    pub dual_m: f64,
    pub linf_off_surface: f64,
}

impl NormSet {
    pub fn of(model: &Model, f: &Distribution, m: f64) -> Self {
        let (ctx, nm) = (&model.ctx, model.conv.normalization);
        NormSet {
            l1: norm(ctx, f, Norm::L1, nm),
            linf: norm(ctx, f, Norm::Linf, nm),
            l1_m: norm(ctx, f, Norm::L1m(m), nm),
            dual_m: norm(ctx, f, Norm::DualM(m), nm),
            linf_off_surface: norm(ctx, f, Norm::LinfOffSurface, nm),
        }
    }
}

/// Conservation residuals, each relative to the matching absolute sum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Residuals {
    pub q_number: f64,
    pub q_momentum: [f64; 3],
    pub q_energy: f64,
    pub b_hole: f64,
    pub b_particle: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        [self.q_number, self.q_energy, self.b_hole, self.b_particle]
            .into_iter()
            .chain(self.q_momentum)
            .fold(0.0, f64::max)
    }
}

fn relative(s: (f64, f64)) -> f64 {
    if s.1 == 0.0 {
        0.0
    } else {
        s.0.abs() / s.1
    }
}

/// Number, signed momentum and signed free energy balances of `q`, and sector
/// balances of `b_hole` / `b_particle`.
pub fn residuals(ctx: &LatticeContext, q: &SparseField, b_hole: &SparseField, b_particle: &SparseField) -> Residuals {
    let sign = |p: &Momentum| if ctx.chi(p) { -1.0 } else { 1.0 };
    let mut mom = [0.0; 3];
    for (i, m) in mom.iter_mut().enumerate() {
        *m = relative(q.weighted_sums(|p| sign(p) * p.0[i] as f64));
    }
    Residuals {
        q_number: relative(q.weighted_sums(|_| 1.0)),
        q_momentum: mom,
        q_energy: relative(q.weighted_sums(|p| sign(p) * p.norm2() as f64 / 2.0)),
        b_hole: relative(b_hole.weighted_sums(|_| 1.0)),
        b_particle: relative(b_particle.weighted_sums(|_| 1.0)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LatticeSummary {
    pub d: usize,
    #[serde(rename = "p_F")]
    pub p_f: f64,
    pub r: i64,
    #[serde(rename = "N")]
    pub n_particles: u64,
    #[serde(rename = "R")]
    pub capacity: f64,
}

impl LatticeSummary {
    pub fn of(ctx: &LatticeContext) -> Self {
        LatticeSummary {
            d: ctx.d(),
            p_f: ctx.p_f(),
            r: ctx.r(),
            n_particles: ctx.particle_count(),
            capacity: ctx.surface_capacity(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegimeSummary {
    #[serde(flatten)]
    pub regime: ScalingRegime,
    pub lambda: f64,
    pub t: f64,
    pub epsilon: f64,
}

/// One dominance run: norms, operator sizes, balances and budgets.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub engine: String,
    pub lattice: LatticeSummary,
    pub conventions: Conventions,
    pub n: f64,
    pub m: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub norms: NormSet,
    pub b_sharp_linf: f64,
    pub b_sharp_linf_off_surface: f64,
    pub q_sharp_linf: f64,
    pub q_sharp_linf_off_surface: f64,
    /// Largest gain term of `ℬ` on `supp f`; zero for admissible Slater data.
    pub b_gain_on_support: f64,
    pub resonant_configurations: usize,
    pub residuals: Residuals,
    pub regime: RegimeSummary,
    pub rem1_bound: f64,
    pub rem2_budget: f64,
    /// `‖ℬ‖ / (‖𝒬‖ + Rem₂)`, all norms on `Z³ \ 𝒮`.
    pub dominance: f64,
    /// Sharp prefactor of `ℬ` relative to `4/(2π)³`.
    pub b_prefactor_ratio: f64,
}

pub const SCHEMA_VERSION: u32 = 1;

pub fn dominance_report(model: &Model, f0: &Distribution, regime: &ScalingRegime, m: f64, c: f64) -> Result<ExperimentReport> {
    let ctx = &model.ctx;
    let nm = model.conv.normalization;
    let b = PairPlan::new(model, f0, 0.0)?.sharp();
    let (q, stats) = CollisionPlan::new(model, f0, 0.0)?.sharp();
    let b_off = field_norm(ctx, &b.total, Norm::LinfOffSurface, nm);
    let q_off = field_norm(ctx, &q, Norm::LinfOffSurface, nm);
    let rem2 = rem2_budget(regime.n_particles, regime.delta(), m, c);
    let n = f0.total();
    let denom = q_off + rem2;
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        engine: crate::VERSION.to_string(),
        lattice: LatticeSummary::of(ctx),
        conventions: model.conv,
        n,
        m,
        c,
        norms: NormSet::of(model, f0, m),
        b_sharp_linf: field_norm(ctx, &b.total, Norm::Linf, nm),
        b_sharp_linf_off_surface: b_off,
        q_sharp_linf: field_norm(ctx, &q, Norm::Linf, nm),
        q_sharp_linf_off_surface: q_off,
        b_gain_on_support: f0.support().fold(0.0, |a, p| a.max(b.gain.get(p).abs())),
        resonant_configurations: stats.resonant,
        residuals: residuals(ctx, &q, &b.hole, &b.particle),
        regime: RegimeSummary { regime: *regime, lambda: regime.lambda(), t: regime.t(), epsilon: regime.epsilon() },
        rem1_bound: remainder_bound_thm1(ctx, regime.lambda(), regime.t(), n, m, c)?,
        rem2_budget: rem2,
        dominance: if denom > 0.0 { b_off / denom } else { 0.0 },
        b_prefactor_ratio: sharp_prefactor_ratio(model),
    })
}

/// Parameters shared by every point of a `p_F` sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSpec {
    pub p_fs: Vec<f64>,
    pub n: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub band: i64,
    pub delta1: f64,
    pub delta2: f64,
    #[serde(rename = "T")]
    pub big_t: f64,
    pub m: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub reports: Vec<ExperimentReport>,
    /// `log ‖ℬ‖_{ℓ∞(Z³\𝒮)}` against `log N`.
    pub b_slope: Option<f64>,
    /// Range of `‖𝒬‖_∞ / n` over the sweep.
    pub q_over_n: Vec<f64>,
}

/// Generates Slater data at each `p_F` with the same seed and reports on it.
pub fn sweep(spec: &SweepSpec, build: impl Fn(f64) -> Result<Model>) -> Result<SweepResult> {
    let mut reports = Vec::with_capacity(spec.p_fs.len());
    for &p_f in &spec.p_fs {
        let model = build(p_f)?;
        let opts = GeneratorOptions { band: spec.band, ..Default::default() };
        let data = generate_slater(&model.ctx, spec.n, spec.epsilon, spec.seed, opts)?;
        let f0 = data.distribution()?;
        let regime = ScalingRegime::new(model.ctx.particle_count() as f64, spec.delta1, spec.delta2, spec.big_t)?;
        reports.push(dominance_report(&model, &f0, &regime, spec.m, spec.c)?);
    }
    let ns: Vec<f64> = reports.iter().map(|r| r.lattice.n_particles as f64).collect();
    let bs: Vec<f64> = reports.iter().map(|r| r.b_sharp_linf_off_surface).collect();
    let q_over_n = reports.iter().map(|r| if r.n > 0.0 { r.q_sharp_linf / r.n } else { 0.0 }).collect();
    Ok(SweepResult { b_slope: loglog_slope(&ns, &bs), reports, q_over_n })
}
