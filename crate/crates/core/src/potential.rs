//! Compactly supported, even interaction potentials `V̂(k)` on the lattice.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{box_points, Momentum, Normalization};

/// An even lattice function with `V̂(0) = 0` supported in `|k| <= radius`.
///
/// Entries are kept in lexicographic order of `k`; every sum over the support
/// runs in that order.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    d: usize,
    radius: i64,
    values: BTreeMap<Momentum, f64>,
    // dense copy over [-radius, radius]^3 for O(1) lookups
    grid: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    k: Momentum,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct PotentialSpec {
    d: usize,
    radius: i64,
    values: Vec<Entry>,
}

impl Serialize for Potential {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PotentialSpec {
            d: self.d,
            radius: self.radius,
            values: self.values.iter().map(|(k, v)| Entry { k: *k, value: *v }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Potential {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = PotentialSpec::deserialize(d)?;
        Potential::from_table(spec.d, spec.radius, spec.values.into_iter().map(|e| (e.k, e.value)))
            .map_err(serde::de::Error::custom)
    }
}

impl Potential {
    /// Validates and stores an explicit table. Zero entries are dropped.
    pub fn from_table(
        d: usize,
        radius: i64,
        entries: impl IntoIterator<Item = (Momentum, f64)>,
    ) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::Potential(format!("dimension {d} not supported")));
        }
        if radius < 1 {
            return Err(Error::Potential(format!("radius must be >= 1, got {radius}")));
        }
        let mut values = BTreeMap::new();
        for (k, v) in entries {
            if !v.is_finite() {
                return Err(Error::Potential(format!("non-finite value at {k}")));
            }
            if k.0[d..].iter().any(|&c| c != 0) {
                return Err(Error::Potential(format!("{k} has components beyond d = {d}")));
            }
            if k.norm2() > radius * radius {
                return Err(Error::Potential(format!("{k} lies outside the support radius {radius}")));
            }
            if k == Momentum::ZERO && v != 0.0 {
                return Err(Error::Potential("V(0) must vanish".into()));
            }
            if v != 0.0 && values.insert(k, v).is_some() {
                return Err(Error::Potential(format!("duplicate entry for {k}")));
            }
        }
        for (k, v) in &values {
            if values.get(&-*k) != Some(v) {
                return Err(Error::Potential(format!("not even: V({k}) != V(-{k})")));
            }
        }
        let w = (2 * radius + 1) as usize;
        let mut grid = vec![0.0; w * w * w];
        for (k, v) in &values {
            grid[grid_index(radius, k)] = *v;
        }
        Ok(Potential { d, radius, values, grid })
    }

    /// Rotationally symmetric potential `V̂(k) = g(|k|²)` for `1 <= |k|² <= radius²`.
    pub fn from_radial(d: usize, radius: i64, g: impl Fn(i64) -> f64) -> Result<Self> {
        let pts = box_points(d, [-radius; 3], [radius; 3]);
        let entries = pts.into_iter().filter_map(|k| {
            let n2 = k.norm2();
            (n2 >= 1 && n2 <= radius * radius).then(|| (k, g(n2)))
        });
        Potential::from_table(d, radius, entries)
    }

    /// `V̂ = amplitude` on `1 <= |k| <= radius`.
    pub fn indicator(d: usize, radius: i64, amplitude: f64) -> Result<Self> {
        Potential::from_radial(d, radius, |_| amplitude)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    #[inline]
    pub fn value(&self, k: &Momentum) -> f64 {
        if k.0.iter().any(|c| c.abs() > self.radius) {
            return 0.0;
        }
        self.grid[grid_index(self.radius, k)]
    }

    /// Nonzero entries in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&Momentum, f64)> + '_ {
        self.values.iter().map(|(k, v)| (k, *v))
    }

    pub fn support(&self) -> impl Iterator<Item = &Momentum> + '_ {
        self.values.keys()
    }

    pub fn support_len(&self) -> usize {
        self.values.len()
    }

    pub fn sum(&self) -> f64 {
        self.values.values().sum()
    }

    /// `‖V̂‖_ℓ¹`, with the lattice measure of `norm`.
    pub fn l1_norm(&self, norm: Normalization) -> f64 {
        norm.measure(self.d) * self.values.values().map(|v| v.abs()).sum::<f64>()
    }

    /// Rotational symmetry (value depends only on `|k|²`) and positivity on the
    /// axis points `(0, .., 0, n)` for `1 <= n <= radius`.
    pub fn satisfies_rotational_condition(&self) -> bool {
        let mut by_shell: BTreeMap<i64, f64> = BTreeMap::new();
        for k in box_points(self.d, [-self.radius; 3], [self.radius; 3]) {
            let n2 = k.norm2();
            if n2 == 0 || n2 > self.radius * self.radius {
                continue;
            }
            let v = self.value(&k);
            match by_shell.get(&n2) {
                Some(&w) if w != v => return false,
                Some(_) => {}
                None => {
                    by_shell.insert(n2, v);
                }
            }
        }
        (1..=self.radius).all(|n| {
            let mut axis = [0; 3];
            axis[self.d - 1] = n;
            self.value(&Momentum(axis)) > 0.0
        })
    }
}

#[inline]
fn grid_index(radius: i64, k: &Momentum) -> usize {
    let w = 2 * radius + 1;
    (((k.0[0] + radius) * w + (k.0[1] + radius)) * w + (k.0[2] + radius)) as usize
}
