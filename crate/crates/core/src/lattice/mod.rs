//! Weighted simple random walks on a square lattice filling a half-plane
//! box, and their loop erasures.
//!
//! # Conventions
//!
//! Sites are integer pairs `(ix, iy)` at positions `(ix a, iy a)` for mesh
//! `a`. The box rim (bottom row `iy = 0`, side columns, top row) absorbs the
//! walk; the bottom row carries a marked target interval and every other rim
//! site counts as a missed target. Walks start one mesh above the boundary
//! point of interest, which realizes the `1/delta` boundary normalization
//! with `delta = a`.
//!
//! One lattice step corresponds to Brownian time `a^2 / 2` (each coordinate
//! of the walk has variance `a^2/2` per step). All time-like quantities use
//! that clock: a field `nu` weights a path by `exp(-(a^2/2) sum_j nu(W_j))`,
//! and one visit contributes `a^2/2` of continuum local time. With this
//! normalization lattice estimates converge to the half-plane kernels of
//! [`crate::geometry`] with no extra factors.

mod walks;

pub use walks::*;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::Interval;

/// Hard cap on steps per walk.
pub const STEP_CAP: u64 = 1_000_000_000;

/// Absorbing box `[x_lo, x_hi] x [0, y_hi]` with a target interval on the
/// bottom boundary. Target membership is half-open (`lo <= x < hi`), so a
/// partition of an interval into subintervals partitions its target sites
/// exactly.
#[derive(Debug, Clone)]
pub struct LatticeDomain {
    pub mesh: f64,
    pub ix_lo: i32,
    pub ix_hi: i32,
    pub iy_hi: i32,
    pub target: Interval,
    tx_lo: i32,
    tx_hi: i32,
}

impl LatticeDomain {
    pub fn new(mesh: f64, x_lo: f64, x_hi: f64, y_hi: f64, target: Interval) -> Result<Self> {
        if !(mesh > 0.0 && mesh.is_finite()) {
            return Err(Error::InvalidGeometry(format!("mesh must be positive, got {mesh}")));
        }
        let ix_lo = (x_lo / mesh).round() as i32;
        let ix_hi = (x_hi / mesh).round() as i32;
        let iy_hi = (y_hi / mesh).round() as i32;
        if ix_hi - ix_lo < 2 || iy_hi < 2 {
            return Err(Error::InvalidGeometry("box too small for an interior".into()));
        }
        let eps = 1e-9 * mesh;
        let tx_lo = ((target.lo - eps) / mesh).ceil() as i32;
        let tx_hi = ((target.hi - eps) / mesh).ceil() as i32;
        if tx_lo <= ix_lo || tx_hi >= ix_hi {
            return Err(Error::InvalidGeometry(
                "target must sit strictly inside the bottom boundary".into(),
            ));
        }
        if tx_hi <= tx_lo {
            return Err(Error::InvalidGeometry("target contains no lattice sites".into()));
        }
        Ok(Self { mesh, ix_lo, ix_hi, iy_hi, target, tx_lo, tx_hi })
    }

    #[inline]
    pub fn is_interior(&self, ix: i32, iy: i32) -> bool {
        ix > self.ix_lo && ix < self.ix_hi && iy > 0 && iy < self.iy_hi
    }

    #[inline]
    pub fn is_boundary(&self, ix: i32, iy: i32) -> bool {
        let inside =
            ix >= self.ix_lo && ix <= self.ix_hi && iy >= 0 && iy <= self.iy_hi;
        inside && !self.is_interior(ix, iy)
    }

    /// Exit site lies in the target interval (half-open site convention).
    #[inline]
    pub fn in_target(&self, ix: i32, iy: i32) -> bool {
        iy == 0 && ix >= self.tx_lo && ix < self.tx_hi
    }

    /// Exit site lies in a sub-interval of the bottom boundary.
    #[inline]
    pub fn in_bottom_interval(&self, interval: Interval, ix: i32, iy: i32) -> bool {
        if iy != 0 {
            return false;
        }
        let x = self.site_position(ix, iy).re;
        let eps = 1e-9 * self.mesh;
        x >= interval.lo - eps && x < interval.hi - eps
    }

    #[inline]
    pub fn site_position(&self, ix: i32, iy: i32) -> Complex64 {
        Complex64::new(self.mesh * ix as f64, self.mesh * iy as f64)
    }

    /// Interior start site one mesh above the boundary point `x0`.
    pub fn boundary_start(&self, x0: f64) -> Result<(i32, i32)> {
        let ix = (x0 / self.mesh).round() as i32;
        if !self.is_interior(ix, 1) {
            return Err(Error::InvalidGeometry(format!(
                "start point {x0} is not one mesh above an interior column"
            )));
        }
        Ok((ix, 1))
    }

    /// Brownian time carried by one lattice step.
    #[inline]
    pub fn step_time(&self) -> f64 {
        0.5 * self.mesh * self.mesh
    }

    pub fn interior_sites(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        let xs = (self.ix_lo + 1)..self.ix_hi;
        xs.flat_map(move |ix| (1..self.iy_hi).map(move |iy| (ix, iy)))
    }

    pub fn boundary_sites(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        let bottom_top = (self.ix_lo..=self.ix_hi)
            .flat_map(move |ix| [(ix, 0), (ix, self.iy_hi)]);
        let sides = (1..self.iy_hi)
            .flat_map(move |iy| [(self.ix_lo, iy), (self.ix_hi, iy)]);
        bottom_top.chain(sides)
    }
}

/// Chronological loop erasure: scan the path once, truncating back to the
/// previous occurrence whenever a site repeats. Endpoints are preserved and
/// the result is a simple lattice path.
pub fn loop_erase(path: &[(i32, i32)]) -> Result<Vec<(i32, i32)>> {
    validate_path(path)?;
    let mut gamma: Vec<(i32, i32)> = Vec::with_capacity(64.min(path.len()));
    let mut position = std::collections::HashMap::with_capacity(path.len() / 2 + 1);
    for &site in path {
        if let Some(&k) = position.get(&site) {
            for removed in gamma.drain(k + 1..) {
                position.remove(&removed);
            }
        } else {
            position.insert(site, gamma.len());
            gamma.push(site);
        }
    }
    Ok(gamma)
}

/// Loop erasure by the last-visit construction: `n_0` is the last time the
/// path occupies its initial site, and inductively `n_{j+1}` is the last
/// time it occupies the site first entered at `n_j + 1`. Agrees with
/// [`loop_erase`] on every path; kept as an independently coded cross-check.
pub fn loop_erase_max_index(path: &[(i32, i32)]) -> Result<Vec<(i32, i32)>> {
    validate_path(path)?;
    let mut last = std::collections::HashMap::with_capacity(path.len());
    for (i, &site) in path.iter().enumerate() {
        last.insert(site, i);
    }
    let mut gamma = Vec::new();
    let mut n = last[&path[0]];
    gamma.push(path[n]);
    while n + 1 < path.len() {
        n = last[&path[n + 1]];
        gamma.push(path[n]);
    }
    Ok(gamma)
}

fn validate_path(path: &[(i32, i32)]) -> Result<()> {
    if path.is_empty() {
        return Err(Error::InvalidPath("empty path".into()));
    }
    for w in path.windows(2) {
        let dx = (w[1].0 - w[0].0).abs();
        let dy = (w[1].1 - w[0].1).abs();
        if dx + dy != 1 {
            return Err(Error::InvalidPath(format!(
                "sites {:?} and {:?} are not lattice neighbors",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_classifies_sites() {
        let d = LatticeDomain::new(0.25, -1.0, 2.0, 1.5, Interval::new(0.0, 1.0).unwrap()).unwrap();
        assert!(d.is_interior(0, 1));
        assert!(!d.is_interior(-4, 1));
        assert!(d.is_boundary(-4, 3));
        assert!(d.is_boundary(0, 0));
        assert!(!d.is_boundary(-5, 2));
        // target [0, 1) at mesh 1/4: sites 0..3 on the bottom row
        assert!(d.in_target(0, 0));
        assert!(d.in_target(3, 0));
        assert!(!d.in_target(4, 0));
        assert!(!d.in_target(2, 1));
    }

    #[test]
    fn target_partition_is_exact() {
        let whole = Interval::new(1.0, 3.0).unwrap();
        let d = LatticeDomain::new(1.0 / 32.0, -4.0, 6.0, 4.0, whole).unwrap();
        let left = Interval::new(1.0, 2.0).unwrap();
        let right = Interval::new(2.0, 3.0).unwrap();
        for ix in d.ix_lo..=d.ix_hi {
            let in_whole = d.in_target(ix, 0);
            let split = d.in_bottom_interval(left, ix, 0) || d.in_bottom_interval(right, ix, 0);
            assert_eq!(in_whole, split, "site {ix}");
            assert!(
                !(d.in_bottom_interval(left, ix, 0) && d.in_bottom_interval(right, ix, 0)),
                "site {ix} double counted"
            );
        }
    }

    #[test]
    fn erasure_of_simple_path_is_identity() {
        let path = vec![(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)];
        assert_eq!(loop_erase(&path).unwrap(), path);
    }

    #[test]
    fn erasure_of_small_loop_by_hand() {
        // A, B, C, B, C, D with A-B-C-D a straight line: the B-C-B-C loop
        // erases and the result is A, B, C, D.
        let a = (0, 1);
        let b = (0, 2);
        let c = (0, 3);
        let d = (0, 4);
        let path = vec![a, b, c, b, c, d];
        let expect = vec![a, b, c, d];
        assert_eq!(loop_erase(&path).unwrap(), expect);
        assert_eq!(loop_erase_max_index(&path).unwrap(), expect);
    }

    #[test]
    fn erasure_is_idempotent_and_keeps_endpoints() {
        let path = vec![
            (0, 1),
            (1, 1),
            (1, 2),
            (0, 2),
            (0, 1),
            (1, 1),
            (2, 1),
            (2, 2),
            (1, 2),
            (1, 3),
        ];
        let once = loop_erase(&path).unwrap();
        let twice = loop_erase(&once).unwrap();
        assert_eq!(once, twice);
        assert_eq!(once.first(), path.first());
        assert_eq!(once.last(), path.last());
        // simple: no repeated sites
        let set: std::collections::HashSet<_> = once.iter().collect();
        assert_eq!(set.len(), once.len());
    }

    #[test]
    fn rejects_non_adjacent_paths() {
        assert!(matches!(
            loop_erase(&[(0, 1), (2, 1)]),
            Err(Error::InvalidPath(_))
        ));
        assert!(loop_erase(&[]).is_err());
    }

    #[test]
    fn constructions_agree_on_random_walks() {
        use rand::Rng;
        let mut rng = crate::rng::sample_stream(2024, 0);
        for _ in 0..10_000 {
            let mut site = (0i32, 0i32);
            let mut path = vec![site];
            for _ in 0..60 {
                match rng.gen_range(0..4) {
                    0 => site.0 += 1,
                    1 => site.0 -= 1,
                    2 => site.1 += 1,
                    _ => site.1 -= 1,
                }
                path.push(site);
            }
            let a = loop_erase(&path).unwrap();
            let b = loop_erase_max_index(&path).unwrap();
            assert_eq!(a, b);
        }
    }
}
