//! Slater delta data, its admissibility conditions, and the norms used on
//! distributions and operator outputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::{Distribution, SparseField};
use crate::error::{Error, Result, StateViolation};
use crate::lattice::{LatticeContext, Momentum, Normalization};

/// Holes `H ⊂ 𝔅 \ 𝒮` and particles `P ⊂ 𝔅^c \ 𝒮`, `f = Σ_{q ∈ H ∪ P} δ_q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlaterData {
    #[serde(rename = "H")]
    pub holes: Vec<Momentum>,
    #[serde(rename = "P")]
    pub particles: Vec<Momentum>,
    pub epsilon: f64,
}

impl SlaterData {
    pub fn n(&self) -> usize {
        self.holes.len()
    }

    pub fn points(&self) -> impl Iterator<Item = &Momentum> + '_ {
        self.holes.iter().chain(self.particles.iter())
    }

    /// Checks every distribution-level condition, reporting the first failure.
    pub fn validate(&self, ctx: &LatticeContext) -> std::result::Result<(), StateViolation> {
        let eps = self.epsilon;
        if !(eps > 0.0 && eps < 0.5) {
            return Err(StateViolation::Epsilon(eps));
        }
        if self.holes.len() != self.particles.len() {
            return Err(StateViolation::Charged { holes: self.holes.len(), particles: self.particles.len() });
        }
        for h in &self.holes {
            if !ctx.chi(h) {
                return Err(StateViolation::HoleOutside { q: *h });
            }
        }
        for p in &self.particles {
            if ctx.chi(p) {
                return Err(StateViolation::ParticleInside { q: *p });
            }
        }
        let all: Vec<Momentum> = self.points().copied().collect();
        for q in &all {
            if ctx.in_surface(q) {
                return Err(StateViolation::OnSurface { q: *q });
            }
            if !in_component_band(ctx, q, eps) {
                return Err(StateViolation::ComponentBand { q: *q });
            }
        }
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                if a == b {
                    return Err(StateViolation::Duplicate { q: *a });
                }
                if (*a - *b).norm2() <= ctx.r() * ctx.r() {
                    return Err(StateViolation::TooClose { a: *a, b: *b, r: ctx.r() });
                }
            }
        }
        Ok(())
    }

    pub fn distribution(&self) -> Result<Distribution> {
        Distribution::indicator(self.points().copied())
    }
}

/// Some coordinate satisfies `ε p_F² <= q_i² <= (1 - ε) p_F²`.
pub fn in_component_band(ctx: &LatticeContext, q: &Momentum, eps: f64) -> bool {
    let pf2 = ctx.p_f() * ctx.p_f();
    q.components(ctx.d()).iter().any(|&c| {
        let c2 = (c * c) as f64;
        eps * pf2 <= c2 && c2 <= (1.0 - eps) * pf2
    })
}

/// Validates `(H, P, ε)` and returns the indicator of `H ∪ P`.
pub fn make_slater(ctx: &LatticeContext, holes: &[Momentum], particles: &[Momentum], epsilon: f64) -> Result<Distribution> {
    let data = SlaterData { holes: holes.to_vec(), particles: particles.to_vec(), epsilon };
    for q in data.points() {
        ctx.check_momentum(q)?;
    }
    data.validate(ctx)?;
    data.distribution()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorOptions {
    /// Particles stay within `p_F + (3 + band) r`.
    pub band: i64,
    /// Enforce `n <= N^(1/6)`.
    pub regime: bool,
    /// Rejection-sampling budget per point.
    pub attempts: usize,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        GeneratorOptions { band: 3, regime: false, attempts: 100_000 }
    }
}

fn admissible_hole(ctx: &LatticeContext, q: &Momentum, eps: f64) -> bool {
    ctx.chi(q) && !ctx.in_surface(q) && in_component_band(ctx, q, eps)
}

fn admissible_particle(ctx: &LatticeContext, q: &Momentum, eps: f64, outer: f64) -> bool {
    !ctx.chi(q) && !ctx.in_surface(q) && (q.norm2() as f64) <= outer * outer && in_component_band(ctx, q, eps)
}

/// Admissible hole and particle sites, each count capped at `cap`.
fn count_sites(ctx: &LatticeContext, eps: f64, outer: f64, cap: usize) -> (usize, usize) {
    let rad = outer.ceil() as i64;
    let mut lo = [-rad; 3];
    let mut hi = [rad; 3];
    for i in ctx.d()..3 {
        lo[i] = 0;
        hi[i] = 0;
    }
    let (mut holes, mut particles) = (0, 0);
    for x in lo[0]..=hi[0] {
        for y in lo[1]..=hi[1] {
            for z in lo[2]..=hi[2] {
                let q = Momentum([x, y, z]);
                if holes < cap && admissible_hole(ctx, &q, eps) {
                    holes += 1;
                } else if particles < cap && admissible_particle(ctx, &q, eps, outer) {
                    particles += 1;
                }
                if holes >= cap && particles >= cap {
                    return (holes, particles);
                }
            }
        }
    }
    (holes, particles)
}

fn separated(ctx: &LatticeContext, q: &Momentum, taken: &[Momentum]) -> bool {
    taken.iter().all(|x| (*x - *q).norm2() > ctx.r() * ctx.r())
}

/// Seeded rejection sampler for valid Slater data.
///
/// Holes are `round(p_F u)` for `u` uniform in the unit ball, particles are
/// `round(ρ û)` for a uniform direction `û` and `ρ` uniform in the band outside
/// `𝒮`. With a fixed seed the configurations at different `p_F` are therefore
/// close to rescaled copies of each other.
pub fn generate_slater(ctx: &LatticeContext, n: usize, epsilon: f64, seed: u64, opts: GeneratorOptions) -> Result<SlaterData> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(StateViolation::Epsilon(epsilon).into());
    }
    if opts.regime {
        let cap = (ctx.particle_count() as f64).powf(1.0 / 6.0);
        if n as f64 > cap {
            return Err(Error::Regime(format!("n = {n} exceeds N^(1/6) = {cap:.3}")));
        }
    }
    let d = ctx.d();
    let pf = ctx.p_f();
    let r = ctx.r() as f64;
    let inner = pf + 3.0 * r;
    let outer = pf + (3 + opts.band) as f64 * r;

    if n > 0 {
        let (holes, particles) = count_sites(ctx, epsilon, outer, n);
        if holes < n || particles < n {
            return Err(Error::Infeasible(format!(
                "need {n} holes and {n} particles; admissible sites: {holes} holes, {particles} particles \
                 (p_F = {pf}, r = {}, eps = {epsilon}, band = {})",
                ctx.r(),
                opts.band
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken: Vec<Momentum> = Vec::with_capacity(2 * n);
    let unit = |rng: &mut ChaCha8Rng| -> [f64; 3] {
        loop {
            let mut u = [0.0; 3];
            for c in u.iter_mut().take(d) {
                *c = rng.gen_range(-1.0..=1.0);
            }
            let n2: f64 = u.iter().map(|x| x * x).sum();
            if n2 <= 1.0 && n2 > 1e-4 {
                return u;
            }
        }
    };
    let round = |u: [f64; 3], s: f64| Momentum([(u[0] * s).round() as i64, (u[1] * s).round() as i64, (u[2] * s).round() as i64]);

    let mut holes = Vec::with_capacity(n);
    for i in 0..n {
        let mut found = None;
        for _ in 0..opts.attempts {
            let q = round(unit(&mut rng), pf);
            if admissible_hole(ctx, &q, epsilon) && separated(ctx, &q, &taken) {
                found = Some(q);
                break;
            }
        }
        let q = found.ok_or_else(|| {
            Error::Infeasible(format!("placed {i} of {n} holes within {} attempts each", opts.attempts))
        })?;
        taken.push(q);
        holes.push(q);
    }
    let mut particles = Vec::with_capacity(n);
    for i in 0..n {
        let mut found = None;
        for _ in 0..opts.attempts {
            let u = unit(&mut rng);
            let len = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            let rho = inner + rng.gen_range(0.0..=1.0) * (outer - inner);
            let q = round([u[0] / len, u[1] / len, u[2] / len], rho);
            if admissible_particle(ctx, &q, epsilon, outer) && separated(ctx, &q, &taken) {
                found = Some(q);
                break;
            }
        }
        let q = found.ok_or_else(|| {
            Error::Infeasible(format!("placed {i} of {n} particles within {} attempts each", opts.attempts))
        })?;
        taken.push(q);
        particles.push(q);
    }
    let data = SlaterData { holes, particles, epsilon };
    data.validate(ctx)?;
    Ok(data)
}

/// Which norm to take.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Norm {
    L1,
    Linf,
    /// `ℓ¹` with weight `w_m`.
    L1m(f64),
    /// `sup |f| / w_m`, the dual of the weighted `ℓ¹`.
    DualM(f64),
    /// `sup` over `Z^d \ 𝒮`.
    LinfOffSurface,
}

/// `w_m(p) = ⟨p⟩^m` on `𝒮` and `1` elsewhere.
pub fn weight(ctx: &LatticeContext, p: &Momentum, m: f64) -> f64 {
    if ctx.in_surface(p) {
        (1.0 + p.norm2() as f64).powf(m / 2.0)
    } else {
        1.0
    }
}

/// Norm of a finitely supported function given as `(p, value)` pairs.
pub fn norm_of<'a>(
    ctx: &LatticeContext,
    values: impl Iterator<Item = (&'a Momentum, f64)>,
    kind: Norm,
    normalization: Normalization,
) -> f64 {
    let measure = normalization.measure(ctx.d());
    match kind {
        Norm::L1 => measure * values.map(|(_, v)| v.abs()).sum::<f64>(),
        Norm::L1m(m) => measure * values.map(|(p, v)| v.abs() * weight(ctx, p, m)).sum::<f64>(),
        Norm::Linf => values.fold(0.0, |a, (_, v)| a.max(v.abs())),
        Norm::DualM(m) => values.fold(0.0, |a, (p, v)| a.max(v.abs() / weight(ctx, p, m))),
        Norm::LinfOffSurface => values.filter(|(p, _)| !ctx.in_surface(p)).fold(0.0, |a, (_, v)| a.max(v.abs())),
    }
}

pub fn norm(ctx: &LatticeContext, f: &Distribution, kind: Norm, normalization: Normalization) -> f64 {
    norm_of(ctx, f.iter(), kind, normalization)
}

pub fn field_norm(ctx: &LatticeContext, f: &SparseField, kind: Norm, normalization: Normalization) -> f64 {
    norm_of(ctx, f.iter(), kind, normalization)
}
