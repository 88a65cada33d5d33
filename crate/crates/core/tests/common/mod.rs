#![allow(dead_code)]

use fermi_kinetics::distribution::{Distribution, SparseField};
use fermi_kinetics::lattice::{LatticeContext, Momentum, Normalization};
use fermi_kinetics::model::{Conventions, Model};
use fermi_kinetics::potential::Potential;
use fermi_kinetics::states::make_slater;
use rand::Rng;

pub fn model(p_f: f64, r: i64, normalization: Normalization) -> Model {
    let ctx = LatticeContext::new(3, p_f, r).unwrap();
    Model::new(ctx, Potential::indicator(3, r, 1.0).unwrap())
        .unwrap()
        .with_conventions(Conventions { normalization, ..Default::default() })
        .with_parallel(false)
}

pub fn raw(p_f: f64, r: i64) -> Model {
    model(p_f, r, Normalization::Raw)
}

/// A random point at distance about `p_F` from the origin.
pub fn on_sphere(rng: &mut impl Rng, p_f: f64) -> Momentum {
    loop {
        let u: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return Momentum::new(
                (u[0] / n * p_f).round() as i64,
                (u[1] / n * p_f).round() as i64,
                (u[2] / n * p_f).round() as i64,
            );
        }
    }
}

/// `size` distinct points within `spread` of a random point on the Fermi sphere,
/// with values in `(0, 1)`.
pub fn clustered(rng: &mut impl Rng, p_f: f64, size: usize, spread: i64) -> Distribution {
    let c = on_sphere(rng, p_f);
    let mut entries: Vec<(Momentum, f64)> = Vec::new();
    while entries.len() < size {
        let p = c + Momentum::new(
            rng.gen_range(-spread..=spread),
            rng.gen_range(-spread..=spread),
            rng.gen_range(-spread..=spread),
        );
        if !entries.iter().any(|(q, _)| *q == p) {
            entries.push((p, rng.gen_range(0.05..0.95)));
        }
    }
    Distribution::from_entries(entries).unwrap()
}

/// Slater data in the plane `p₁ = 0`, where `k = ±e₁` is resonant for every
/// hole-particle pair. Holes sit at `p_F/2` on the axes, particles just outside
/// the surface shell.
pub fn plane_slater(ctx: &LatticeContext, n: usize) -> Distribution {
    let p_f = ctx.p_f();
    let a = (0.5 * p_f).round() as i64;
    let b = (0.6 * p_f).round() as i64;
    let outer = p_f + 3.0 * ctx.r() as f64;
    let mut c = 0;
    while (((b * b + c * c) as f64).sqrt()) <= outer {
        c += 1;
    }
    let holes = [Momentum::new(0, 0, a), Momentum::new(0, a, 0), Momentum::new(0, 0, -a), Momentum::new(0, -a, 0)];
    let particles = [Momentum::new(0, b, c), Momentum::new(0, -b, -c), Momentum::new(0, b, -c), Momentum::new(0, -b, c)];
    make_slater(ctx, &holes[..n], &particles[..n], 0.2).unwrap()
}

/// `|Σ w q| / Σ |w q|`, zero on an empty field.
pub fn residual(q: &SparseField, w: impl Fn(&Momentum) -> f64) -> f64 {
    let (s, a) = q.weighted_sums(w);
    if a == 0.0 {
        0.0
    } else {
        s.abs() / a
    }
}

pub fn sign(ctx: &LatticeContext, p: &Momentum) -> f64 {
    if ctx.chi(p) {
        -1.0
    } else {
        1.0
    }
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}
