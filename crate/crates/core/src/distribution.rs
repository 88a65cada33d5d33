//! Sparse occupation functions `f : Z^d → [0, 1]` and sparse operator outputs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeContext, Momentum};

/// Anything that can be read as an occupation function on the whole lattice.
pub trait Occupation: Sync {
    fn value(&self, p: &Momentum) -> f64;
}

/// Finitely supported occupation numbers in `[0, 1]`.
///
/// The complement `1 - f` is never stored.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Distribution {
    values: BTreeMap<Momentum, f64>,
}

#[derive(Serialize, Deserialize)]
struct Point {
    p: Momentum,
    value: f64,
}

impl Serialize for Distribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pts: Vec<Point> = self.values.iter().map(|(p, v)| Point { p: *p, value: *v }).collect();
        pts.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Distribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pts = Vec::<Point>::deserialize(d)?;
        Distribution::from_entries(pts.into_iter().map(|pt| (pt.p, pt.value))).map_err(serde::de::Error::custom)
    }
}

impl Distribution {
    pub fn empty() -> Self {
        Distribution::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (Momentum, f64)>) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (p, v) in entries {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Distribution(format!("f({p}) = {v} outside [0, 1]")));
            }
            if v > 0.0 && values.insert(p, v).is_some() {
                return Err(Error::Distribution(format!("duplicate entry for {p}")));
            }
        }
        Ok(Distribution { values })
    }

    /// `f = 1` on the given points.
    pub fn indicator(points: impl IntoIterator<Item = Momentum>) -> Result<Self> {
        Distribution::from_entries(points.into_iter().map(|p| (p, 1.0)))
    }

    pub fn check_dimension(&self, ctx: &LatticeContext) -> Result<()> {
        self.values.keys().try_for_each(|p| ctx.check_momentum(p))
    }

    #[inline]
    pub fn get(&self, p: &Momentum) -> f64 {
        self.values.get(p).copied().unwrap_or(0.0)
    }

    /// Support points in lexicographic order.
    pub fn support(&self) -> impl ExactSizeIterator<Item = &Momentum> + '_ {
        self.values.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Momentum, f64)> + '_ {
        self.values.iter().map(|(p, v)| (p, *v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `n = Σ_p f(p)`, the number of particles and holes.
    pub fn total(&self) -> f64 {
        self.values.values().sum()
    }
}

impl Occupation for Distribution {
    #[inline]
    fn value(&self, p: &Momentum) -> f64 {
        self.get(p)
    }
}

/// `f ≡ c` on the whole lattice.
#[derive(Clone, Copy, Debug)]
pub struct Uniform(pub f64);

impl Occupation for Uniform {
    fn value(&self, _: &Momentum) -> f64 {
        self.0
    }
}

/// Real-valued lattice function with finite support, sorted lexicographically.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseField {
    values: BTreeMap<Momentum, f64>,
}

impl SparseField {
    pub fn new() -> Self {
        SparseField::default()
    }

    pub fn insert(&mut self, p: Momentum, v: f64) {
        self.values.insert(p, v);
    }

    pub fn add(&mut self, p: Momentum, v: f64) {
        *self.values.entry(p).or_insert(0.0) += v;
    }

    #[inline]
    pub fn get(&self, p: &Momentum) -> f64 {
        self.values.get(p).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Momentum, f64)> + '_ {
        self.values.iter().map(|(p, v)| (p, *v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &Momentum> + '_ {
        self.values.keys()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.values().sum()
    }

    pub fn abs_sum(&self) -> f64 {
        self.values.values().map(|v| v.abs()).sum()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `sup_p |self(p) - scale * other(p)|` over both supports.
    pub fn sup_distance(&self, other: &SparseField, scale: f64) -> f64 {
        let mut m: f64 = 0.0;
        for (p, v) in self.iter() {
            m = m.max((v - scale * other.get(p)).abs());
        }
        for (p, v) in other.iter() {
            if !self.values.contains_key(p) {
                m = m.max((scale * v).abs());
            }
        }
        m
    }

    /// `Σ_p w(p) self(p)` together with `Σ_p |w(p) self(p)|`.
    pub fn weighted_sums(&self, w: impl Fn(&Momentum) -> f64) -> (f64, f64) {
        let mut s = 0.0;
        let mut a = 0.0;
        for (p, v) in self.iter() {
            let x = w(p) * v;
            s += x;
            a += x.abs();
        }
        (s, a)
    }
}

impl FromIterator<(Momentum, f64)> for SparseField {
    fn from_iter<I: IntoIterator<Item = (Momentum, f64)>>(iter: I) -> Self {
        SparseField { values: iter.into_iter().collect() }
    }
}
