//! Momentum-lattice geometry on the fixed-volume torus `L = 2π`.
//!
//! The dual lattice is `Z^d` for `d ∈ {1, 2, 3}`. A [`Momentum`] always carries
//! three integer components; in lower dimensions the trailing components are
//! zero. All membership tests (Fermi ball, surface shells, energy shells) are
//! decided in exact integer arithmetic on squared norms.
//!
//! Measure conventions: an integral over the dual lattice is `(2π)^-d` times the
//! lattice sum and a momentum delta is `(2π)^d` times the Kronecker delta. In
//! [`Normalization::Raw`] mode both factors are replaced by one, which leaves
//! every conservation law and ratio unchanged.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::potential::Potential;

/// Integer lattice momentum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Momentum(pub [i64; 3]);

impl Momentum {
    pub const ZERO: Momentum = Momentum([0, 0, 0]);

    pub const fn new(x: i64, y: i64, z: i64) -> Self {
        Momentum([x, y, z])
    }

    /// Builds a momentum from 1 to 3 components, padding with zeros.
    pub fn from_slice(c: &[i64]) -> Result<Self> {
        if c.is_empty() || c.len() > 3 {
            return Err(Error::Lattice(format!(
                "momentum needs 1 to 3 components, got {}",
                c.len()
            )));
        }
        let mut out = [0; 3];
        out[..c.len()].copy_from_slice(c);
        Ok(Momentum(out))
    }

    #[inline]
    pub fn norm2(&self) -> i64 {
        let [x, y, z] = self.0;
        x * x + y * y + z * z
    }

    #[inline]
    pub fn dot(&self, other: &Momentum) -> i64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn norm(&self) -> f64 {
        (self.norm2() as f64).sqrt()
    }

    pub fn components(&self, d: usize) -> &[i64] {
        &self.0[..d]
    }

    /// True when at most one component is nonzero.
    pub fn is_axis_aligned(&self) -> bool {
        self.0.iter().filter(|&&c| c != 0).count() <= 1
    }
}

impl Add for Momentum {
    type Output = Momentum;
    #[inline]
    fn add(self, o: Momentum) -> Momentum {
        Momentum([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Momentum {
    type Output = Momentum;
    #[inline]
    fn sub(self, o: Momentum) -> Momentum {
        Momentum([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Neg for Momentum {
    type Output = Momentum;
    #[inline]
    fn neg(self) -> Momentum {
        Momentum([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl fmt::Display for Momentum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.0[0], self.0[1], self.0[2])
    }
}

impl Serialize for Momentum {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Momentum {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<i64>::deserialize(d)?;
        Momentum::from_slice(&v).map_err(serde::de::Error::custom)
    }
}

/// How `(2π)` factors from the lattice measure and momentum deltas are applied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// `∫ dp = (2π)^-d Σ_p` and `δ(p) = (2π)^d δ_{p,0}`.
    #[default]
    Ledger,
    /// Every measure and delta factor set to one.
    Raw,
}

impl Normalization {
    /// Weight of one lattice point in an integral over `Z^d`.
    pub fn measure(self, d: usize) -> f64 {
        match self {
            Normalization::Ledger => (2.0 * PI).powi(-(d as i32)),
            Normalization::Raw => 1.0,
        }
    }

    /// Weight of a momentum Kronecker delta.
    pub fn delta(self, d: usize) -> f64 {
        match self {
            Normalization::Ledger => (2.0 * PI).powi(d as i32),
            Normalization::Raw => 1.0,
        }
    }
}

/// Which side of the Fermi sphere a convolution is taken against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Inside,
    Outside,
}

#[derive(Serialize, Deserialize)]
struct LatticeSpec {
    d: usize,
    #[serde(rename = "p_F")]
    p_f: f64,
    r: i64,
}

/// Fixed-volume lattice with a filled Fermi ball of radius `p_F`.
///
/// Only `{d, p_F, r}` are persisted; the particle count and surface capacity
/// are recomputed on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatticeSpec", into = "LatticeSpec")]
pub struct LatticeContext {
    d: usize,
    p_f: f64,
    r: i64,
    ball_r2: i64,
    particles: u64,
}

impl TryFrom<LatticeSpec> for LatticeContext {
    type Error = Error;
    fn try_from(s: LatticeSpec) -> Result<Self> {
        LatticeContext::new(s.d, s.p_f, s.r)
    }
}

impl From<LatticeContext> for LatticeSpec {
    fn from(c: LatticeContext) -> Self {
        LatticeSpec { d: c.d, p_f: c.p_f, r: c.r }
    }
}

impl LatticeContext {
    pub fn new(d: usize, p_f: f64, r: i64) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::Lattice(format!("dimension must be 1, 2 or 3, got {d}")));
        }
        if !(p_f.is_finite() && p_f > 0.0) {
            return Err(Error::Lattice(format!("p_F must be positive, got {p_f}")));
        }
        if r < 1 {
            return Err(Error::Lattice(format!("shell width r must be >= 1, got {r}")));
        }
        let ball_r2 = (p_f * p_f).floor() as i64;
        let particles = ball_count(d, ball_r2);
        Ok(LatticeContext { d, p_f, r, ball_r2, particles })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p_f(&self) -> f64 {
        self.p_f
    }

    /// Support radius of the potential, also the unit of the surface shells.
    pub fn r(&self) -> i64 {
        self.r
    }

    /// Largest integer `|p|²` inside the closed Fermi ball.
    pub fn ball_r2(&self) -> i64 {
        self.ball_r2
    }

    /// `|Λ| = (2π)^d`.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.d as i32)
    }

    /// `N`, the number of lattice points in the Fermi ball.
    pub fn particle_count(&self) -> u64 {
        self.particles
    }

    /// `R = |Λ| p_F^(d-1)`.
    pub fn surface_capacity(&self) -> f64 {
        self.volume() * self.p_f.powi(self.d as i32 - 1)
    }

    /// Checks that components beyond `d` vanish.
    pub fn check_momentum(&self, p: &Momentum) -> Result<()> {
        if p.0[self.d..].iter().any(|&c| c != 0) {
            return Err(Error::Lattice(format!("momentum {p} has components beyond d = {}", self.d)));
        }
        Ok(())
    }

    #[inline]
    pub fn chi(&self, p: &Momentum) -> bool {
        p.norm2() <= self.ball_r2
    }

    #[inline]
    pub fn chi_perp(&self, p: &Momentum) -> bool {
        !self.chi(p)
    }

    /// Membership in `S(n) = {p_F - n r <= |p| <= p_F + n r}`.
    pub fn in_shell(&self, p: &Momentum, n: u32) -> bool {
        let width = n as f64 * self.r as f64;
        let n2 = p.norm2() as f64;
        let lo = self.p_f - width;
        let hi = self.p_f + width;
        (lo <= 0.0 || n2 >= lo * lo) && n2 <= hi * hi
    }

    /// The canonical Fermi surface `S = S(3)`.
    pub fn in_surface(&self, p: &Momentum) -> bool {
        self.in_shell(p, 3)
    }

    /// Lattice points of `[-radius, radius]^d` in lexicographic order.
    pub fn cube(&self, radius: i64) -> Vec<Momentum> {
        let lo = [-radius; 3];
        let hi = [radius; 3];
        box_points(self.d, lo, hi)
    }
}

/// Lattice points of the box `[lo, hi]` (first `d` axes) in lexicographic order.
pub fn box_points(d: usize, lo: [i64; 3], hi: [i64; 3]) -> Vec<Momentum> {
    let mut lo = lo;
    let mut hi = hi;
    for i in d..3 {
        lo[i] = 0;
        hi[i] = 0;
    }
    let mut out = Vec::new();
    for x in lo[0]..=hi[0] {
        for y in lo[1]..=hi[1] {
            for z in lo[2]..=hi[2] {
                out.push(Momentum([x, y, z]));
            }
        }
    }
    out
}

/// Exact integer square root of a nonnegative integer.
#[inline]
pub fn isqrt(n: i64) -> i64 {
    debug_assert!(n >= 0);
    n.isqrt()
}

/// Number of points `x ∈ Z^dim` with `|x|² <= m` (row scan).
pub fn ball_count(dim: usize, m: i64) -> u64 {
    if m < 0 {
        return 0;
    }
    match dim {
        0 => 1,
        1 => 2 * isqrt(m) as u64 + 1,
        _ => {
            let top = isqrt(m);
            (-top..=top).map(|x| ball_count(dim - 1, m - x * x)).sum()
        }
    }
}

#[inline]
pub fn chi(ctx: &LatticeContext, p: &Momentum) -> bool {
    ctx.chi(p)
}

pub fn fermi_count(ctx: &LatticeContext) -> u64 {
    ctx.particle_count()
}

pub fn in_shell(ctx: &LatticeContext, p: &Momentum, n: u32) -> bool {
    ctx.in_shell(p, n)
}

/// `(V̂ * χ)(p)` or `(V̂ * χ⊥)(p)`, summed over the support of the potential only.
pub fn convolve_with_chi(
    ctx: &LatticeContext,
    pot: &Potential,
    p: &Momentum,
    side: Side,
    norm: Normalization,
) -> f64 {
    let mut acc = 0.0;
    for (k, v) in pot.iter() {
        let inside = ctx.chi(&(*p - *k));
        if inside == (side == Side::Inside) {
            acc += v;
        }
    }
    norm.measure(ctx.d()) * acc
}

/// Particle/hole dispersion `E_p` including the mean-field correction.
///
/// Negative inside the Fermi ball.
pub fn dispersion(
    ctx: &LatticeContext,
    pot: &Potential,
    lambda: f64,
    p: &Momentum,
    norm: Normalization,
) -> f64 {
    let kinetic = p.norm2() as f64 / 2.0;
    if lambda == 0.0 {
        return free_energy(ctx, p);
    }
    if ctx.chi(p) {
        -(kinetic + lambda / 2.0 * convolve_with_chi(ctx, pot, p, Side::Outside, norm))
    } else {
        kinetic - lambda / 2.0 * convolve_with_chi(ctx, pot, p, Side::Inside, norm)
    }
}

/// Signed free dispersion `e(p) = (χ⊥(p) - χ(p)) p²/2`.
pub fn free_energy(ctx: &LatticeContext, p: &Momentum) -> f64 {
    doubled_free_energy(ctx, p) as f64 / 2.0
}

/// `2 e(p)`, an exact integer.
#[inline]
pub fn doubled_free_energy(ctx: &LatticeContext, p: &Momentum) -> i64 {
    if ctx.chi(p) {
        -p.norm2()
    } else {
        p.norm2()
    }
}
