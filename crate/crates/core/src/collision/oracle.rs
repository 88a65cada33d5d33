//! Literal evaluation of the collision operator for verification.
//!
//! For an output momentum `p` the oracle walks channel, then slot, then the two
//! free momenta of that slot over a box, and solves the fourth momentum from the
//! channel's momentum law. Every configuration with a nonzero term has all four
//! momenta within `r` (coordinatewise) of `supp f`, so the box
//! `bbox(supp f) ± r` covers the full lattice sum exactly.

use crate::distribution::{Distribution, Occupation};
use crate::error::{Error, Result};
use crate::lattice::{box_points, doubled_free_energy, Momentum};
use crate::model::{Energy, Model};

use super::{mollified_factor, occupations, prefactor, sharp_factor, sigma, term, Channel, Quad};

/// Largest Fermi momentum the oracle accepts.
pub const ORACLE_MAX_PF: f64 = 8.0;

/// Smallest box `[lo, hi]` containing `f`'s support widened by `margin`.
pub fn support_box(f: &Distribution, margin: i64) -> Option<([i64; 3], [i64; 3])> {
    let mut lo = [i64::MAX; 3];
    let mut hi = [i64::MIN; 3];
    for p in f.support() {
        for i in 0..3 {
            lo[i] = lo[i].min(p.0[i] - margin);
            hi[i] = hi[i].max(p.0[i] + margin);
        }
    }
    (!f.is_empty()).then_some((lo, hi))
}

fn solve(channel: Channel, slot: usize, p: Momentum, a: Momentum, b: Momentum) -> Quad {
    if channel.pairs_first_two() {
        match slot {
            0 => [p, a, b, p + a - b],
            1 => [a, p, b, a + p - b],
            2 => [a, b, p, a + b - p],
            _ => [a, b, a + b - p, p],
        }
    } else {
        match slot {
            0 => [p, a, b, a + b - p],
            1 => [a, p, b, p + b - a],
            2 => [a, b, p, b + p - a],
            _ => [a, b, a + p - b, p],
        }
    }
}

fn guard(model: &Model) -> Result<()> {
    if model.ctx.p_f() > ORACLE_MAX_PF {
        return Err(Error::OracleGuard { p_f: model.ctx.p_f(), limit: ORACLE_MAX_PF });
    }
    Ok(())
}

/// Collision operator at `p` by direct summation over the given box.
pub fn q_brute_in_box(
    model: &Model,
    f: &impl Occupation,
    energy: Energy,
    p: &Momentum,
    lo: [i64; 3],
    hi: [i64; 3],
) -> Result<f64> {
    guard(model)?;
    let ctx = &model.ctx;
    let pts = box_points(ctx.d(), lo, hi);
    let kappa = model.kappa();
    let mut acc = 0.0;
    for channel in Channel::ALL {
        for slot in 0..4 {
            for &a in &pts {
                for &b in &pts {
                    let q = solve(channel, slot, *p, a, b);
                    let s = sigma(ctx, &model.pot, channel, &q);
                    if s == 0.0 {
                        continue;
                    }
                    let factor = match energy {
                        Energy::Mollified { t, lambda } => {
                            if !(t > 0.0) {
                                return Err(Error::NonPositiveTime(t));
                            }
                            let e = [
                                model.energy(lambda, &q[0]),
                                model.energy(lambda, &q[1]),
                                model.energy(lambda, &q[2]),
                                model.energy(lambda, &q[3]),
                            ];
                            mollified_factor(t, e)
                        }
                        Energy::Sharp => {
                            let e2 = [
                                doubled_free_energy(ctx, &q[0]),
                                doubled_free_energy(ctx, &q[1]),
                                doubled_free_energy(ctx, &q[2]),
                                doubled_free_energy(ctx, &q[3]),
                            ];
                            sharp_factor(kappa, e2)
                        }
                    };
                    let x = term(s, factor, super::gain_loss(occupations(f, &q)));
                    if slot < 2 {
                        acc += x;
                    } else {
                        acc -= x;
                    }
                }
            }
        }
    }
    Ok(prefactor(model) * acc)
}

/// Collision operator at `p` by direct summation over `bbox(supp f) ± r`.
pub fn q_brute(model: &Model, f: &Distribution, energy: Energy, p: &Momentum) -> Result<f64> {
    guard(model)?;
    match support_box(f, model.ctx.r()) {
        None => Ok(0.0),
        Some((lo, hi)) => q_brute_in_box(model, f, energy, p, lo, hi),
    }
}
