//! The quantum Boltzmann collision operator `Q_t` and its sharp-energy limit `𝒬`.
//!
//! A configuration is a quadruple `(q0, q1, q2, q3)` of lattice momenta. Each
//! channel fixes which slots lie in the Fermi ball and which momentum law holds:
//!
//! | channel | ball / outside      | momentum law        | kernel                          |
//! |---------|---------------------|---------------------|---------------------------------|
//! | HH      | all in              | q0 + q1 = q2 + q3   | `|V(q0-q3) - V(q0-q2)|²`        |
//! | PP      | all out             | q0 + q1 = q2 + q3   | `|V(q0-q3) - V(q0-q2)|²`        |
//! | HP      | q0, q2 in; q1, q3 out | q0 + q3 = q1 + q2 | `2 |V(q0-q2)|²`                 |
//! | PH      | q0, q2 out; q1, q3 in | q0 + q3 = q1 + q2 | `2 |V(q0-q2)|²`                 |
//!
//! `Q[f](p)` collects every configuration that has `p` in one of its slots, with
//! sign `+` for slots 0 and 1 and `-` for slots 2 and 3.
//!
//! Normalization: four lattice integrals, the slot delta and the momentum delta
//! leave a net factor `π (2π)^(-2d)` in ledger mode and `π` in raw mode; it is
//! applied once per output point, after the sum.
//!
//! The evaluator never scans boxes. Gain terms need `q2, q3 ∈ supp f` and loss
//! terms need `q0, q1 ∈ supp f`; the kernel pins the remaining slot to within
//! `supp V̂` of one of them and the momentum law fixes the last one. That gives
//! `O(|supp f|² |supp V̂|)` configurations per channel.

pub mod oracle;

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::{Distribution, Occupation, SparseField};
use crate::error::{Error, Result};
use crate::lattice::{doubled_free_energy, LatticeContext, Momentum};
use crate::model::{Energy, Model};
use crate::mollifier::delta_t_unchecked;
use crate::potential::Potential;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Channel {
    HH,
    PP,
    HP,
    PH,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::HH, Channel::PP, Channel::HP, Channel::PH];

    /// `q0 + q1 = q2 + q3` for HH/PP, otherwise `q0 + q3 = q1 + q2`.
    #[inline]
    pub fn pairs_first_two(self) -> bool {
        matches!(self, Channel::HH | Channel::PP)
    }
}

pub type Quad = [Momentum; 4];

#[inline]
pub fn momentum_conserved(channel: Channel, q: &Quad) -> bool {
    if channel.pairs_first_two() {
        q[0] + q[1] == q[2] + q[3]
    } else {
        q[0] + q[3] == q[1] + q[2]
    }
}

/// Channel kernel including its occupancy pattern and the momentum Kronecker
/// delta (as 0 or 1; the normalization of the delta lives in [`prefactor`]).
#[inline]
pub fn sigma(ctx: &LatticeContext, pot: &Potential, channel: Channel, q: &Quad) -> f64 {
    if !momentum_conserved(channel, q) {
        return 0.0;
    }
    let inside = [ctx.chi(&q[0]), ctx.chi(&q[1]), ctx.chi(&q[2]), ctx.chi(&q[3])];
    let occupied = match channel {
        Channel::HH => inside == [true; 4],
        Channel::PP => inside == [false; 4],
        Channel::HP => inside == [true, false, true, false],
        Channel::PH => inside == [false, true, false, true],
    };
    if !occupied {
        return 0.0;
    }
    if channel.pairs_first_two() {
        let v = pot.value(&(q[0] - q[3])) - pot.value(&(q[0] - q[2]));
        v * v
    } else {
        let v = pot.value(&(q[0] - q[2]));
        2.0 * v * v
    }
}

/// `f(q2) f(q3) f̃(q0) f̃(q1) - f(q0) f(q1) f̃(q2) f̃(q3)`.
#[inline]
pub fn gain_loss(f: [f64; 4]) -> f64 {
    f[2] * f[3] * (1.0 - f[0]) * (1.0 - f[1]) - f[0] * f[1] * (1.0 - f[2]) * (1.0 - f[3])
}

#[inline]
pub(crate) fn mollified_factor(t: f64, e: [f64; 4]) -> f64 {
    delta_t_unchecked(t, e[0] + e[1] - e[2] - e[3])
}

#[inline]
pub(crate) fn doubled_energy_gap(e2: [i64; 4]) -> i64 {
    e2[0] + e2[1] - e2[2] - e2[3]
}

#[inline]
pub(crate) fn sharp_factor(kappa: f64, e2: [i64; 4]) -> f64 {
    if doubled_energy_gap(e2) == 0 {
        kappa
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn term(sigma: f64, factor: f64, g: f64) -> f64 {
    sigma * factor * g
}

/// `π` times the normalization left after resolving both deltas.
pub fn prefactor(model: &Model) -> f64 {
    let d = model.ctx.d();
    let m = model.conv.normalization.measure(d);
    let dl = model.conv.normalization.delta(d);
    PI * (m * m * m * m) * (dl * dl)
}

/// Free momenta of a configuration seen from `slot`, in the order the oracle
/// loops over them.
#[inline]
pub(crate) fn free_pair(slot: usize, q: &Quad) -> (Momentum, Momentum) {
    match slot {
        0 => (q[1], q[2]),
        1 => (q[0], q[2]),
        _ => (q[0], q[1]),
    }
}

#[derive(Clone, Copy, Debug)]
struct Active {
    sigma: f64,
    g: f64,
    e: [f64; 4],
    e2: [i64; 4],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Slot {
    p: Momentum,
    channel: Channel,
    slot: u8,
    a: Momentum,
    b: Momentum,
    quad: usize,
}

/// Counters from a sharp evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SharpStats {
    /// Configurations with nonzero kernel and at least one occupied pair.
    pub active: usize,
    /// Of these, the ones on the free energy shell.
    pub resonant: usize,
    pub nonresonant: usize,
    /// Off-shell configurations whose term came out nonzero. Always zero.
    pub nonresonant_contributions: usize,
}

/// The active configurations of `f`, indexed by output momentum.
///
/// Building the plan fixes `f` and the coupling `λ` used in the dispersion; the
/// same plan can then be evaluated for many times `t` and for the sharp limit.
pub struct CollisionPlan<'m> {
    model: &'m Model,
    quads: Vec<Active>,
    slots: Vec<Slot>,
    groups: Vec<(Momentum, usize, usize)>,
}

impl<'m> CollisionPlan<'m> {
    pub fn new(model: &'m Model, f: &Distribution, lambda: f64) -> Result<Self> {
        f.check_dimension(&model.ctx)?;
        let ctx = &model.ctx;
        let pot = &model.pot;
        let support: Vec<Momentum> = f.support().copied().collect();
        let shifts: Vec<Momentum> = pot.support().copied().collect();

        let mut found: BTreeSet<(Channel, Quad)> = BTreeSet::new();
        for &x in &support {
            for &y in &support {
                for &s in &shifts {
                    // HH / PP gain: (q2, q3) = (x, y)
                    for q0 in [x + s, y + s] {
                        found.insert((Channel::HH, [q0, x + y - q0, x, y]));
                    }
                    // HH / PP loss: (q0, q1) = (x, y)
                    for q2 in [x + s, y + s] {
                        found.insert((Channel::HH, [x, y, q2, x + y - q2]));
                    }
                    // HP / PH gain and loss with transfer s = q0 - q2
                    found.insert((Channel::HP, [x + s, y + s, x, y]));
                    found.insert((Channel::HP, [x, y, x - s, y - s]));
                }
            }
        }

        let mut candidates: Vec<(Channel, Quad)> = Vec::with_capacity(2 * found.len());
        for (c, q) in found {
            let pair = if c == Channel::HH { [Channel::HH, Channel::PP] } else { [Channel::HP, Channel::PH] };
            for ch in pair {
                candidates.push((ch, q));
            }
        }
        candidates.sort();
        candidates.retain(|(c, q)| sigma(ctx, pot, *c, q) != 0.0);

        let mut momenta: Vec<Momentum> = candidates.iter().flat_map(|(_, q)| q.iter().copied()).collect();
        momenta.sort();
        momenta.dedup();
        let energies: Vec<f64> = if model.parallel {
            momenta.par_iter().map(|p| model.energy(lambda, p)).collect()
        } else {
            momenta.iter().map(|p| model.energy(lambda, p)).collect()
        };
        let energy: HashMap<Momentum, f64> = momenta.iter().copied().zip(energies).collect();

        let mut quads = Vec::with_capacity(candidates.len());
        let mut slots = Vec::with_capacity(4 * candidates.len());
        for (i, (c, q)) in candidates.iter().enumerate() {
            quads.push(Active {
                sigma: sigma(ctx, pot, *c, q),
                g: gain_loss([f.get(&q[0]), f.get(&q[1]), f.get(&q[2]), f.get(&q[3])]),
                e: [energy[&q[0]], energy[&q[1]], energy[&q[2]], energy[&q[3]]],
                e2: [
                    doubled_free_energy(ctx, &q[0]),
                    doubled_free_energy(ctx, &q[1]),
                    doubled_free_energy(ctx, &q[2]),
                    doubled_free_energy(ctx, &q[3]),
                ],
            });
            for slot in 0..4 {
                let (a, b) = free_pair(slot, q);
                slots.push(Slot { p: q[slot], channel: *c, slot: slot as u8, a, b, quad: i });
            }
        }
        if model.parallel {
            slots.par_sort_unstable();
        } else {
            slots.sort_unstable();
        }

        let mut groups = Vec::new();
        let mut start = 0;
        for i in 1..=slots.len() {
            if i == slots.len() || slots[i].p != slots[start].p {
                groups.push((slots[start].p, start, i));
                start = i;
            }
        }
        Ok(CollisionPlan { model, quads, slots, groups })
    }

    /// Number of configurations with nonzero kernel.
    pub fn len(&self) -> usize {
        self.quads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quads.is_empty()
    }

    /// Output momenta, the only points where the operator can be nonzero.
    pub fn reachable(&self) -> impl Iterator<Item = &Momentum> + '_ {
        self.groups.iter().map(|(p, _, _)| p)
    }

    fn accumulate(&self, terms: &[f64]) -> SparseField {
        let pref = prefactor(self.model);
        let one = |&(p, lo, hi): &(Momentum, usize, usize)| {
            let mut acc = 0.0;
            for s in &self.slots[lo..hi] {
                if s.slot < 2 {
                    acc += terms[s.quad];
                } else {
                    acc -= terms[s.quad];
                }
            }
            (p, pref * acc)
        };
        if self.model.parallel {
            self.groups.par_iter().map(one).collect::<Vec<_>>().into_iter().collect()
        } else {
            self.groups.iter().map(one).collect()
        }
    }

    fn terms(&self, energy: impl Fn(&Active) -> f64 + Sync) -> Vec<f64> {
        let one = |a: &Active| term(a.sigma, energy(a), a.g);
        if self.model.parallel {
            self.quads.par_iter().map(one).collect()
        } else {
            self.quads.iter().map(one).collect()
        }
    }

    /// `Q_t[f]` at the coupling the plan was built with.
    pub fn mollified(&self, t: f64) -> Result<SparseField> {
        if !(t > 0.0) {
            return Err(Error::NonPositiveTime(t));
        }
        Ok(self.accumulate(&self.terms(|a| mollified_factor(t, a.e))))
    }

    /// `𝒬[f]` together with its resonance counters.
    pub fn sharp(&self) -> (SparseField, SharpStats) {
        let kappa = self.model.kappa();
        let terms = self.terms(|a| sharp_factor(kappa, a.e2));
        let mut stats = SharpStats { active: self.quads.len(), ..Default::default() };
        for (a, t) in self.quads.iter().zip(&terms) {
            if doubled_energy_gap(a.e2) == 0 {
                stats.resonant += 1;
            } else {
                stats.nonresonant += 1;
                if *t != 0.0 {
                    stats.nonresonant_contributions += 1;
                }
            }
        }
        (self.accumulate(&terms), stats)
    }

    pub fn evaluate(&self, energy: Energy) -> Result<SparseField> {
        match energy {
            Energy::Mollified { t, .. } => self.mollified(t),
            Energy::Sharp => Ok(self.sharp().0),
        }
    }
}

/// `Q_t[f]` on every reachable momentum.
pub fn q_mollified(model: &Model, f: &Distribution, lambda: f64, t: f64) -> Result<SparseField> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    CollisionPlan::new(model, f, lambda)?.mollified(t)
}

/// `𝒬[f]`, the collision operator on the free energy shell.
pub fn q_sharp(model: &Model, f: &Distribution) -> Result<(SparseField, SharpStats)> {
    Ok(CollisionPlan::new(model, f, 0.0)?.sharp())
}

/// Measured distance between `Q_t[f]` and `t 𝒬[f]` next to its structural bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitCheck {
    pub t: f64,
    pub lambda: f64,
    /// `sup_p |Q_t[f](p) - t 𝒬[f](p)|`.
    pub deviation: f64,
    /// `t (1/t² + (λt)²)` times the norms of `f`.
    pub structure: f64,
}

impl LimitCheck {
    pub fn ratio(&self) -> Option<f64> {
        (self.structure > 0.0).then(|| self.deviation / self.structure)
    }
}

pub fn q_limit_check(model: &Model, f: &Distribution, lambda: f64, t: f64) -> Result<LimitCheck> {
    model.check_small_coupling(lambda)?;
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    let plan = CollisionPlan::new(model, f, lambda)?;
    let qt = plan.mollified(t)?;
    let (qs, _) = plan.sharp();
    let l1 = model.measure() * f.iter().map(|(_, v)| v).sum::<f64>();
    let sup = f.iter().fold(0.0_f64, |m, (_, v)| m.max(v));
    // f has finite support, so f̃ = 1 somewhere and ‖f̃‖_∞ = 1
    let tilde = 1.0;
    Ok(LimitCheck {
        t,
        lambda,
        deviation: qt.sup_distance(&qs, t),
        structure: t * (1.0 / (t * t) + (lambda * t).powi(2)) * tilde * tilde * l1 * sup,
    })
}

/// Reads `f` at the four slots.
#[inline]
pub(crate) fn occupations(f: &impl Occupation, q: &Quad) -> [f64; 4] {
    [f.value(&q[0]), f.value(&q[1]), f.value(&q[2]), f.value(&q[3])]
}
