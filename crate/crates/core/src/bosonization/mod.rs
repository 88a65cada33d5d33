//! The pair operator `B_t = B^H_t + B^P_t`, its coefficients `α^H_t`, `α^P_t` and
//! the sharp-energy operator `ℬ`.
//!
//! ```text
//! B^H_t[f](h) = 2π ∫ |V(k)|² ( α^H(h-k, k) f(h-k) f̃(h) - α^H(h, k) f(h) f̃(h+k) ) dk
//! B^P_t[f](p) = 2π ∫ |V(k)|² ( α^P(p+k, k) f(p+k) f̃(p) - α^P(p, k) f(p) f̃(p-k) ) dk
//! ```
//!
//! The `r`-integral inside `α` only sees the lune `L(k)`, a shell of width `|k|`
//! under the Fermi sphere, and the `k`-integral only sees `supp V̂`. In the sharp
//! limit the lune sum collapses to the counting function: `α^H(h, k) = κ N(h, k)`
//! and `α^P(p, k) = κ N(p - k, k)` (times the lattice measure).

pub mod counting;
pub mod oracle;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;

use crate::collision::LimitCheck;
use crate::distribution::{Distribution, SparseField};
use crate::error::{Error, Result};
use crate::lattice::Momentum;
use crate::model::{Energy, Model};
use crate::mollifier::{delta_t_unchecked, double_time_integral};

use self::counting::{counting_n_dot, for_each_lune_point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Kind {
    H,
    P,
}

/// `χ(h)χ(h+k)` for holes, `χ⊥(p)χ⊥(p-k)` for particles.
#[inline]
pub fn anchored(model: &Model, kind: Kind, q: &Momentum, k: &Momentum) -> bool {
    let ctx = &model.ctx;
    match kind {
        Kind::H => ctx.chi(q) && ctx.chi(&(*q + *k)),
        Kind::P => ctx.chi_perp(q) && ctx.chi_perp(&(*q - *k)),
    }
}

/// Energy released by the fermion: `E_h - E_{h+k}` or `E_p - E_{p-k}`.
#[inline]
pub(crate) fn anchor_gap(model: &Model, kind: Kind, lambda: f64, q: &Momentum, k: &Momentum) -> f64 {
    let partner = match kind {
        Kind::H => *q + *k,
        Kind::P => *q - *k,
    };
    model.energy(lambda, q) - model.energy(lambda, &partner)
}

/// The `r`-plane hit by the sharp resonance: `h·k` or `(p-k)·k`.
#[inline]
pub(crate) fn resonance_offset(kind: Kind, q: &Momentum, k: &Momentum) -> i64 {
    match kind {
        Kind::H => q.dot(k),
        Kind::P => (*q - *k).dot(k),
    }
}

#[inline]
pub(crate) fn sharp_alpha_value(model: &Model, count: u64) -> f64 {
    model.measure() * (model.kappa() * count as f64)
}

/// `2π` times the measure of the `k`-integral.
pub fn b_prefactor(model: &Model) -> f64 {
    2.0 * PI * model.measure()
}

/// Ratio of the sharp prefactor used here, `2π κ (2π)^-2d`, to the constant
/// `4/(2π)³` that multiplies `Σ_k |V(k)|² N` in the fixed-volume lower bound.
pub fn sharp_prefactor_ratio(model: &Model) -> f64 {
    let ours = b_prefactor(model) * model.kappa() * model.measure();
    ours / (4.0 / (2.0 * PI).powi(3))
}

/// Lune points for one transfer with their pair energies `E_r + E_{r+k}`.
#[derive(Clone, Debug)]
pub struct Lune {
    pub k: Momentum,
    pub points: Vec<Momentum>,
    pub pair_energy: Vec<f64>,
}

impl Lune {
    pub fn new(model: &Model, k: &Momentum, lambda: f64) -> Result<Self> {
        if *k == Momentum::ZERO {
            return Err(Error::ZeroTransfer);
        }
        let mut points = Vec::new();
        for_each_lune_point(&model.ctx, k, |r| points.push(r));
        let pair_energy = points.iter().map(|r| model.energy(lambda, r) + model.energy(lambda, &(*r + *k))).collect();
        Ok(Lune { k: *k, points, pair_energy })
    }

    /// `Σ_r δ_t(gap - E_r - E_{r+k})`, without the measure.
    #[inline]
    pub fn mollified_sum(&self, t: f64, gap: f64) -> f64 {
        self.pair_energy.iter().map(|s| delta_t_unchecked(t, gap - s)).sum()
    }
}

/// `α^H_t(q, k)` or `α^P_t(q, k)` at coupling `λ`.
pub fn alpha(model: &Model, kind: Kind, q: &Momentum, k: &Momentum, t: f64, lambda: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    if *k == Momentum::ZERO {
        return Err(Error::ZeroTransfer);
    }
    if !anchored(model, kind, q, k) {
        return Ok(0.0);
    }
    let gap = anchor_gap(model, kind, lambda, q, k);
    Ok(model.measure() * Lune::new(model, k, lambda)?.mollified_sum(t, gap))
}

/// Sharp coefficient `κ N(·, k)` times the measure.
pub fn alpha_sharp(model: &Model, kind: Kind, q: &Momentum, k: &Momentum) -> Result<f64> {
    if *k == Momentum::ZERO {
        return Err(Error::ZeroTransfer);
    }
    if !anchored(model, kind, q, k) {
        return Ok(0.0);
    }
    Ok(sharp_alpha_value(model, counting_n_dot(&model.ctx, resonance_offset(kind, q, k), k)))
}

/// `2 Re ∫₀ᵗ∫₀^{t₁} G_k(t₂) e^{i t₂ ΔE} dt₂ dt₁`, expanded mode by mode over an
/// independent enumeration of the lune. Equals `2π t α_t`.
pub fn alpha_propagator_oracle(
    model: &Model,
    kind: Kind,
    q: &Momentum,
    k: &Momentum,
    t: f64,
    lambda: f64,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    if *k == Momentum::ZERO {
        return Err(Error::ZeroTransfer);
    }
    if !anchored(model, kind, q, k) {
        return Ok(0.0);
    }
    let ctx = &model.ctx;
    let gap = anchor_gap(model, kind, lambda, q, k);
    let mut acc = 0.0;
    for r in ctx.cube(crate::lattice::isqrt(ctx.ball_r2())) {
        if ctx.chi(&r) && ctx.chi_perp(&(r + *k)) {
            let omega = gap - (model.energy(lambda, &r) + model.energy(lambda, &(r + *k)));
            acc += double_time_integral(omega, t);
        }
    }
    Ok(model.measure() * acc)
}

/// Output of one evaluation of `B_t` or `ℬ`, all on the same momenta.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PairField {
    pub total: SparseField,
    pub hole: SparseField,
    pub particle: SparseField,
    /// Gain part of both sectors, nonnegative.
    pub gain: SparseField,
    /// Loss part of both sectors, nonnegative.
    pub loss: SparseField,
}

/// Coefficients needed by `B[f]`: only `(q, k)` with `q ∈ supp f`, `k ∈ supp V̂`.
pub struct PairPlan<'m> {
    model: &'m Model,
    f: Distribution,
    targets: Vec<Momentum>,
    lambda: f64,
    // built on first mollified evaluation; the sharp operator never needs them
    lunes: OnceLock<BTreeMap<Momentum, Lune>>,
    // (kind, q, k) -> anchor gap, for anchored keys only
    keys: Vec<((Kind, Momentum, Momentum), f64)>,
}

impl<'m> PairPlan<'m> {
    pub fn new(model: &'m Model, f: &Distribution, lambda: f64) -> Result<Self> {
        f.check_dimension(&model.ctx)?;
        let mut targets: BTreeSet<Momentum> = BTreeSet::new();
        let mut keys = Vec::new();
        for q in f.support() {
            targets.insert(*q);
            for k in model.pot.support() {
                targets.insert(*q + *k);
                for kind in [Kind::H, Kind::P] {
                    if anchored(model, kind, q, k) {
                        keys.push(((kind, *q, *k), anchor_gap(model, kind, lambda, q, k)));
                    }
                }
            }
        }
        Ok(PairPlan {
            model,
            f: f.clone(),
            targets: targets.into_iter().collect(),
            lambda,
            lunes: OnceLock::new(),
            keys,
        })
    }

    fn lunes(&self) -> &BTreeMap<Momentum, Lune> {
        self.lunes.get_or_init(|| {
            let needed: BTreeSet<Momentum> = self.keys.iter().map(|((_, _, k), _)| *k).collect();
            let needed: Vec<Momentum> = needed.into_iter().collect();
            // keys never hold k = 0, so construction cannot fail
            let build = |k: &Momentum| (*k, Lune::new(self.model, k, self.lambda).expect("nonzero transfer"));
            if self.model.parallel {
                needed.par_iter().map(build).collect()
            } else {
                needed.iter().map(build).collect()
            }
        })
    }

    /// Momenta where `B[f]` can be nonzero: `supp f ∪ (supp f + supp V̂)`.
    pub fn targets(&self) -> &[Momentum] {
        &self.targets
    }

    pub fn lune_sizes(&self) -> impl Iterator<Item = (&Momentum, usize)> + '_ {
        self.lunes().iter().map(|(k, l)| (k, l.points.len()))
    }

    fn coefficients(&self, value: impl Fn(Kind, &Momentum, &Momentum, f64) -> f64 + Sync) -> HashMap<(Kind, Momentum, Momentum), f64> {
        let one = |((kind, q, k), gap): &((Kind, Momentum, Momentum), f64)| ((*kind, *q, *k), value(*kind, q, k, *gap));
        if self.model.parallel {
            self.keys.par_iter().map(one).collect()
        } else {
            self.keys.iter().map(one).collect()
        }
    }

    /// `B_t[f]` at the plan's coupling.
    pub fn mollified(&self, t: f64) -> Result<PairField> {
        if !(t > 0.0) {
            return Err(Error::NonPositiveTime(t));
        }
        let m = self.model.measure();
        let lunes = self.lunes();
        let alphas = self.coefficients(|_, _, k, gap| m * lunes[k].mollified_sum(t, gap));
        Ok(self.assemble(&alphas))
    }

    /// `ℬ[f]`.
    pub fn sharp(&self) -> PairField {
        let ctx = &self.model.ctx;
        let alphas = self.coefficients(|kind, q, k, _| {
            sharp_alpha_value(self.model, counting_n_dot(ctx, resonance_offset(kind, q, k), k))
        });
        self.assemble(&alphas)
    }

    pub fn evaluate(&self, energy: Energy) -> Result<PairField> {
        match energy {
            Energy::Mollified { t, .. } => self.mollified(t),
            Energy::Sharp => Ok(self.sharp()),
        }
    }

    fn assemble(&self, alphas: &HashMap<(Kind, Momentum, Momentum), f64>) -> PairField {
        let pref = b_prefactor(self.model);
        let a = |kind: Kind, q: Momentum, k: Momentum| alphas.get(&(kind, q, k)).copied().unwrap_or(0.0);
        let f = &self.f;
        let one = |q: &Momentum| {
            let q = *q;
            let fq = f.get(&q);
            let (mut acc_h, mut acc_p, mut gain, mut loss) = (0.0, 0.0, 0.0, 0.0);
            for (k, v) in self.model.pot.iter() {
                let k = *k;
                let v2 = v * v;
                let gh = a(Kind::H, q - k, k) * f.get(&(q - k)) * (1.0 - fq);
                let lh = a(Kind::H, q, k) * fq * (1.0 - f.get(&(q + k)));
                let gp = a(Kind::P, q + k, k) * f.get(&(q + k)) * (1.0 - fq);
                let lp = a(Kind::P, q, k) * fq * (1.0 - f.get(&(q - k)));
                acc_h += v2 * (gh - lh);
                acc_p += v2 * (gp - lp);
                gain += v2 * (gh + gp);
                loss += v2 * (lh + lp);
            }
            (q, pref * acc_h, pref * acc_p, pref * gain, pref * loss)
        };
        let rows: Vec<_> = if self.model.parallel {
            self.targets.par_iter().map(one).collect()
        } else {
            self.targets.iter().map(one).collect()
        };
        let mut out = PairField::default();
        for (q, h, p, g, l) in rows {
            out.total.insert(q, h + p);
            out.hole.insert(q, h);
            out.particle.insert(q, p);
            out.gain.insert(q, g);
            out.loss.insert(q, l);
        }
        out
    }
}

pub fn b_mollified(model: &Model, f: &Distribution, lambda: f64, t: f64) -> Result<PairField> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    PairPlan::new(model, f, lambda)?.mollified(t)
}

pub fn b_sharp(model: &Model, f: &Distribution) -> Result<PairField> {
    Ok(PairPlan::new(model, f, 0.0)?.sharp())
}

/// `sup |B_t[f] - t ℬ[f]|` next to `t (1/t² + (λt)²) N^((d-1)/d) ‖f̃‖_∞ ‖f‖_∞`.
pub fn b_limit_check(model: &Model, f: &Distribution, lambda: f64, t: f64) -> Result<LimitCheck> {
    model.check_small_coupling(lambda)?;
    let plan = PairPlan::new(model, f, lambda)?;
    let bt = plan.mollified(t)?;
    let bs = plan.sharp();
    let d = model.ctx.d() as f64;
    let n_pow = (model.ctx.particle_count() as f64).powf((d - 1.0) / d);
    let sup = f.iter().fold(0.0_f64, |m, (_, v)| m.max(v));
    Ok(LimitCheck {
        t,
        lambda,
        deviation: bt.total.sup_distance(&bs.total, t),
        structure: t * (1.0 / (t * t) + (lambda * t).powi(2)) * n_pow * sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{LatticeContext, Normalization};
    use crate::model::Conventions;
    use crate::potential::Potential;

    fn model(p_f: f64, r: i64) -> Model {
        let ctx = LatticeContext::new(3, p_f, r).unwrap();
        let pot = Potential::indicator(3, r, 1.0).unwrap();
        Model::new(ctx, pot).unwrap().with_conventions(Conventions {
            normalization: Normalization::Raw,
            ..Default::default()
        })
    }

    #[test]
    fn alpha_vanishes_without_anchor() {
        let m = model(5.0, 1);
        let k = Momentum::new(0, 0, 1);
        assert_eq!(alpha(&m, Kind::H, &Momentum::new(0, 0, 5), &k, 10.0, 0.0).unwrap(), 0.0);
        assert_eq!(alpha(&m, Kind::P, &Momentum::new(0, 0, 6), &k, 10.0, 0.0).unwrap(), 0.0);
        assert!(alpha(&m, Kind::H, &Momentum::ZERO, &Momentum::ZERO, 1.0, 0.0).is_err());
    }

    #[test]
    fn alpha_matches_box_sum() {
        let m = model(5.0, 1);
        let k = Momentum::new(0, 0, 1);
        let h = Momentum::new(0, 0, -3);
        let fast = alpha(&m, Kind::H, &h, &k, 50.0, 0.0).unwrap();
        let mut slow = 0.0;
        for r in m.ctx.cube(7) {
            if m.ctx.chi(&r) && m.ctx.chi_perp(&(r + k)) {
                let gap = m.energy(0.0, &h) - m.energy(0.0, &(h + k));
                slow += delta_t_unchecked(50.0, gap - (m.energy(0.0, &r) + m.energy(0.0, &(r + k))));
            }
        }
        assert_eq!(fast, slow);
        assert!(fast > 0.0);
    }

    #[test]
    fn alpha_is_free_of_potential_at_zero_coupling() {
        let a = model(5.0, 1);
        let ctx = LatticeContext::new(3, 5.0, 1).unwrap();
        let b = Model::new(ctx, Potential::indicator(3, 1, 7.5).unwrap()).unwrap().with_conventions(a.conv);
        let h = Momentum::new(1, 0, 2);
        let k = Momentum::new(0, 1, 0);
        assert_eq!(alpha(&a, Kind::H, &h, &k, 3.0, 0.0).unwrap(), alpha(&b, Kind::H, &h, &k, 3.0, 0.0).unwrap());
    }

    #[test]
    fn propagator_identity() {
        let m = model(6.0, 2);
        let cases = [
            (Kind::H, Momentum::new(0, 0, 4), Momentum::new(0, 0, 1)),
            (Kind::H, Momentum::new(2, 1, -3), Momentum::new(1, 1, 0)),
            (Kind::P, Momentum::new(0, 7, 1), Momentum::new(0, 1, 0)),
        ];
        for (kind, q, k) in cases {
            for t in [0.3, 4.0, 40.0] {
                let a = alpha(&m, kind, &q, &k, t, 1e-3).unwrap();
                let o = alpha_propagator_oracle(&m, kind, &q, &k, t, 1e-3).unwrap();
                assert!(a > 0.0);
                assert!((o - 2.0 * PI * t * a).abs() <= 1e-10 * o.abs(), "{kind:?} {q} {k} {t}");
            }
        }
    }

    #[test]
    fn sharp_alpha_uses_counting() {
        let m = model(6.0, 1);
        let k = Momentum::new(0, 0, 1);
        let h = Momentum::new(0, 0, 3);
        let n = counting::counting_n(&m.ctx, &h, &k).unwrap();
        assert_eq!(alpha_sharp(&m, Kind::H, &h, &k).unwrap(), m.kappa() * n as f64);
        let p = Momentum::new(0, 5, 5);
        let n = counting::counting_n(&m.ctx, &(p - k), &k).unwrap();
        assert!(n > 0);
        assert_eq!(alpha_sharp(&m, Kind::P, &p, &k).unwrap(), m.kappa() * n as f64);
    }

    #[test]
    fn sectors_conserve() {
        let m = model(6.0, 1);
        let f = Distribution::from_entries([
            (Momentum::new(0, 0, 5), 0.5),
            (Momentum::new(3, 3, 2), 0.8),
            (Momentum::new(0, 7, 0), 0.3),
            (Momentum::new(-6, 1, 1), 1.0),
        ])
        .unwrap();
        for b in [b_mollified(&m, &f, 0.0, 9.0).unwrap(), b_sharp(&m, &f).unwrap()] {
            let scale = b.total.abs_sum();
            assert!(scale > 0.0);
            assert!(b.hole.sum().abs() <= 1e-12 * scale);
            assert!(b.particle.sum().abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn empty_distribution() {
        let m = model(6.0, 1);
        assert!(b_mollified(&m, &Distribution::empty(), 0.0, 1.0).unwrap().total.is_empty());
        assert!(b_sharp(&m, &Distribution::empty()).unwrap().total.is_empty());
    }

    #[test]
    fn serial_and_parallel_agree() {
        let m = model(6.0, 1);
        let f = Distribution::from_entries([(Momentum::new(0, 0, 5), 0.5), (Momentum::new(0, 7, 0), 0.3)]).unwrap();
        let a = b_mollified(&m, &f, 1e-3, 9.0).unwrap();
        let b = b_mollified(&m.clone().with_parallel(true), &f, 1e-3, 9.0).unwrap();
        assert_eq!(a, b);
    }
}
