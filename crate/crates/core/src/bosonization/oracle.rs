//! Literal evaluation of `B_t` and `ℬ` for verification.
//!
//! Every coefficient is recomputed from its definition by scanning the cube
//! that contains the Fermi ball; the sharp coefficients test the doubled free
//! energy shell directly instead of using the counting function.

use crate::collision::oracle::ORACLE_MAX_PF;
use crate::distribution::Occupation;
use crate::error::{Error, Result};
use crate::lattice::{doubled_free_energy, isqrt, Momentum};
use crate::model::{Energy, Model};
use crate::mollifier::delta_t_unchecked;

use super::{anchor_gap, anchored, b_prefactor, sharp_alpha_value, Kind};

fn partner(kind: Kind, q: &Momentum, k: &Momentum) -> Momentum {
    match kind {
        Kind::H => *q + *k,
        Kind::P => *q - *k,
    }
}

/// `α` by a full scan of the ball's bounding cube.
pub fn alpha_brute(model: &Model, kind: Kind, q: &Momentum, k: &Momentum, energy: Energy) -> Result<f64> {
    if *k == Momentum::ZERO {
        return Err(Error::ZeroTransfer);
    }
    if !anchored(model, kind, q, k) {
        return Ok(0.0);
    }
    let ctx = &model.ctx;
    let cube = ctx.cube(isqrt(ctx.ball_r2()));
    match energy {
        Energy::Mollified { t, lambda } => {
            if !(t > 0.0) {
                return Err(Error::NonPositiveTime(t));
            }
            let gap = anchor_gap(model, kind, lambda, q, k);
            let mut acc = 0.0;
            for r in cube {
                if ctx.chi(&r) && ctx.chi_perp(&(r + *k)) {
                    acc += delta_t_unchecked(t, gap - (model.energy(lambda, &r) + model.energy(lambda, &(r + *k))));
                }
            }
            Ok(model.measure() * acc)
        }
        Energy::Sharp => {
            let gap2 = doubled_free_energy(ctx, q) - doubled_free_energy(ctx, &partner(kind, q, k));
            let mut count = 0;
            for r in cube {
                if ctx.chi(&r)
                    && ctx.chi_perp(&(r + *k))
                    && gap2 - doubled_free_energy(ctx, &r) - doubled_free_energy(ctx, &(r + *k)) == 0
                {
                    count += 1;
                }
            }
            Ok(sharp_alpha_value(model, count))
        }
    }
}

/// `B[f](q)` from the definition, recomputing every coefficient.
pub fn b_brute(model: &Model, f: &impl Occupation, energy: Energy, q: &Momentum) -> Result<f64> {
    if model.ctx.p_f() > ORACLE_MAX_PF {
        return Err(Error::OracleGuard { p_f: model.ctx.p_f(), limit: ORACLE_MAX_PF });
    }
    let q = *q;
    let fq = f.value(&q);
    let (mut acc_h, mut acc_p) = (0.0, 0.0);
    for (k, v) in model.pot.iter() {
        let k = *k;
        let v2 = v * v;
        let gh = alpha_brute(model, Kind::H, &(q - k), &k, energy)? * f.value(&(q - k)) * (1.0 - fq);
        let lh = alpha_brute(model, Kind::H, &q, &k, energy)? * fq * (1.0 - f.value(&(q + k)));
        let gp = alpha_brute(model, Kind::P, &(q + k), &k, energy)? * f.value(&(q + k)) * (1.0 - fq);
        let lp = alpha_brute(model, Kind::P, &q, &k, energy)? * fq * (1.0 - f.value(&(q - k)));
        acc_h += v2 * (gh - lh);
        acc_p += v2 * (gp - lp);
    }
    let pref = b_prefactor(model);
    Ok(pref * acc_h + pref * acc_p)
}
