//! Lattice point counts on lunes and planes.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lattice::{ball_count, box_points, isqrt, LatticeContext, Momentum};

/// Early exit test: a lune point `r` with `r·k = c` exists only if
/// `-k²/2 < c <= p_F |k|`.
#[inline]
fn admissible(ctx: &LatticeContext, c: i64, k: &Momentum) -> bool {
    let k2 = k.norm2();
    if 2 * c + k2 <= 0 {
        return false;
    }
    !(c > 0 && (c as i128) * (c as i128) > (ctx.ball_r2() as i128) * (k2 as i128))
}

#[inline]
fn in_lune(ctx: &LatticeContext, r: &Momentum, k: &Momentum) -> bool {
    ctx.chi(r) && ctx.chi_perp(&(*r + *k))
}

/// `N(q, k) = |{r : |r| <= p_F, |r + k| > p_F, r·k = q·k}|`.
pub fn counting_n(ctx: &LatticeContext, q: &Momentum, k: &Momentum) -> Result<u64> {
    if *k == Momentum::ZERO {
        return Err(Error::ZeroTransfer);
    }
    Ok(counting_n_dot(ctx, q.dot(k), k))
}

/// `N` as a function of the plane offset `c = q·k`.
pub fn counting_n_dot(ctx: &LatticeContext, c: i64, k: &Momentum) -> u64 {
    if !admissible(ctx, c, k) {
        return 0;
    }
    if k.is_axis_aligned() {
        axis_count(ctx, c, k)
    } else {
        plane_scan(ctx, c, k)
    }
}

/// For `k = K e_j` the plane `r_j = s` cuts the lune in a (d-1)-dimensional annulus
/// `B - (s + K)² < |x|² <= B - s²`.
fn axis_count(ctx: &LatticeContext, c: i64, k: &Momentum) -> u64 {
    let big_k = k.0.iter().copied().find(|&x| x != 0).expect("nonzero transfer");
    if c % big_k != 0 {
        return 0;
    }
    let s = c / big_k;
    let b = ctx.ball_r2();
    let dim = ctx.d() - 1;
    ball_count(dim, b - s * s) - ball_count(dim, b - (s + big_k) * (s + big_k))
}

/// Solves the plane equation for the coordinate with the largest `|k_j|` and
/// scans the others over the ball's bounding box.
fn plane_scan(ctx: &LatticeContext, c: i64, k: &Momentum) -> u64 {
    let d = ctx.d();
    let j = (0..d).max_by_key(|&i| (k.0[i].abs(), std::cmp::Reverse(i))).unwrap();
    let rad = isqrt(ctx.ball_r2());
    let mut lo = [-rad; 3];
    let mut hi = [rad; 3];
    lo[j] = 0;
    hi[j] = 0;
    let mut n = 0;
    for mut r in box_points(d, lo, hi) {
        let rest = c - r.dot(k);
        if rest % k.0[j] != 0 {
            continue;
        }
        r.0[j] = rest / k.0[j];
        if in_lune(ctx, &r, k) {
            n += 1;
        }
    }
    n
}

/// Reference count by scanning the whole Fermi ball.
pub fn counting_n_brute(ctx: &LatticeContext, q: &Momentum, k: &Momentum) -> Result<u64> {
    if *k == Momentum::ZERO {
        return Err(Error::ZeroTransfer);
    }
    let c = q.dot(k);
    let rad = isqrt(ctx.ball_r2());
    Ok(ctx.cube(rad).iter().filter(|r| r.dot(k) == c && in_lune(ctx, r, k)).count() as u64)
}

/// Points `x ∈ Z²` with `|x|² <= r2`, and the remainder `count - π r2`.
pub fn gauss_circle(r2: i64) -> Result<(u64, f64)> {
    if r2 < 0 {
        return Err(Error::Lattice(format!("squared radius must be nonnegative, got {r2}")));
    }
    let n = ball_count(2, r2);
    Ok((n, n as f64 - PI * r2 as f64))
}

#[inline]
fn ceil_sqrt(n: i64) -> i64 {
    let s = isqrt(n);
    if s * s == n {
        s
    } else {
        s + 1
    }
}

/// Visits the points with `lo2 <= |r|² <= hi2` in lexicographic order.
fn shell_scan(d: usize, lo2: i64, hi2: i64, mut visit: impl FnMut(Momentum)) {
    fn rec(d: usize, i: usize, r: &mut [i64; 3], used: i64, lo2: i64, hi2: i64, visit: &mut dyn FnMut(Momentum)) {
        let top = isqrt(hi2 - used);
        if i + 1 < d {
            for x in -top..=top {
                r[i] = x;
                rec(d, i + 1, r, used + x * x, lo2, hi2, visit);
            }
            r[i] = 0;
            return;
        }
        let need = lo2 - used;
        if need <= 0 {
            for x in -top..=top {
                r[i] = x;
                visit(Momentum(*r));
            }
        } else {
            let bottom = ceil_sqrt(need);
            for x in (-top..=-bottom).chain(bottom..=top) {
                r[i] = x;
                visit(Momentum(*r));
            }
        }
        r[i] = 0;
    }
    if hi2 < 0 {
        return;
    }
    let mut r = [0; 3];
    rec(d, 0, &mut r, 0, lo2, hi2, &mut visit);
}

/// Visits `L(k) = {r : |r| <= p_F, |r + k| > p_F}` in lexicographic order.
pub fn for_each_lune_point(ctx: &LatticeContext, k: &Momentum, mut visit: impl FnMut(Momentum)) {
    // |r| > sqrt(B) - |k|; one unit of slack for rounding, exact test below
    let gap = (ctx.ball_r2() as f64).sqrt() - k.norm();
    let lo2 = if gap > 0.0 { ((gap * gap).floor() as i64 - 1).max(0) } else { 0 };
    shell_scan(ctx.d(), lo2, ctx.ball_r2(), |r| {
        if ctx.chi_perp(&(r + *k)) {
            visit(r);
        }
    });
}

pub fn lune_points(ctx: &LatticeContext, k: &Momentum) -> Result<Vec<Momentum>> {
    if *k == Momentum::ZERO {
        return Err(Error::ZeroTransfer);
    }
    let mut out = Vec::new();
    for_each_lune_point(ctx, k, |r| out.push(r));
    Ok(out)
}

/// `|L(k)|`.
pub fn lune_cardinality(ctx: &LatticeContext, k: &Momentum) -> Result<u64> {
    if *k == Momentum::ZERO {
        return Err(Error::ZeroTransfer);
    }
    let mut n = 0;
    for_each_lune_point(ctx, k, |_| n += 1);
    Ok(n)
}
