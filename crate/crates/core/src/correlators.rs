//! Exact multipoint local-time correlators on the upper half-plane.
//!
//! A correlator chains the excursion kernel from a boundary source through
//! the bulk insertion points (Green's function factors) to a terminal
//! boundary factor, summed over all visit orders. The diagram ("Wick") sum
//! extends this with closed Green's-function cycles over the insertions left
//! out of the chain; cycles of length one are excluded (their coincident
//! Green factor is removed by normal ordering), and for length three or more
//! the two orientations of a cycle are counted separately. Cycle weights are
//! positive: the factorization identity checked by
//! [`cumulant_factorization_check`] holds for any fixed per-cycle sign, but
//! only the positive convention matches the loop-ensemble interpretation and
//! the lattice moments, so it is the one implemented.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{excursion_kernel, green_h, harmonic_measure_h, Interval, COINCIDENT_TOL};

/// Where a correlator chain ends on the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Terminal {
    /// Chordal normalization: the chain ends at a marked boundary point.
    Point(f64),
    /// Dipolar normalization: the chain ends anywhere on the interval.
    Interval(Interval),
}

/// Boundary data plus bulk insertion points for one correlator evaluation.
#[derive(Debug, Clone)]
pub struct CorrelatorSpec {
    pub x0: f64,
    pub terminal: Terminal,
    pub insertions: Vec<Complex64>,
}

/// Insertion-count cap: the chain sum is an exact n! enumeration.
pub const MAX_INSERTIONS: usize = 8;

impl CorrelatorSpec {
    pub fn new(x0: f64, terminal: Terminal, insertions: Vec<Complex64>) -> Result<Self> {
        if !x0.is_finite() {
            return Err(Error::InvalidGeometry(format!("source point {x0} not finite")));
        }
        match terminal {
            Terminal::Point(xe) => {
                if (xe - x0).abs() < COINCIDENT_TOL {
                    return Err(Error::CoincidentPoints(
                        "terminal point coincides with the source".into(),
                    ));
                }
            }
            Terminal::Interval(iv) => {
                if x0 >= iv.lo - COINCIDENT_TOL && x0 <= iv.hi + COINCIDENT_TOL {
                    return Err(Error::InvalidGeometry(format!(
                        "source {x0} must lie outside the terminal interval {iv:?}"
                    )));
                }
            }
        }
        if insertions.len() > MAX_INSERTIONS {
            return Err(Error::InvalidGeometry(format!(
                "at most {MAX_INSERTIONS} insertions supported, got {}",
                insertions.len()
            )));
        }
        for (i, z) in insertions.iter().enumerate() {
            if z.im <= 0.0 {
                return Err(Error::InvalidGeometry(format!(
                    "insertion {z} not in the open upper half-plane"
                )));
            }
            for w in insertions.iter().skip(i + 1) {
                if (z - w).norm() < COINCIDENT_TOL {
                    return Err(Error::CoincidentPoints(format!("insertions coincide at {z}")));
                }
            }
        }
        Ok(Self { x0, terminal, insertions })
    }

    fn n(&self) -> usize {
        self.insertions.len()
    }
}

/// Critical partition function: the zero-insertion correlator.
pub fn partition_function(x0: f64, terminal: Terminal) -> Result<f64> {
    let spec = CorrelatorSpec::new(x0, terminal, Vec::new())?;
    Ok(z0_value(&spec))
}

fn z0_value(spec: &CorrelatorSpec) -> f64 {
    match spec.terminal {
        Terminal::Point(xe) => {
            let d = xe - spec.x0;
            2.0 / (std::f64::consts::PI * d * d)
        }
        Terminal::Interval(iv) => {
            iv.length() / (std::f64::consts::PI * (spec.x0 - iv.hi) * (spec.x0 - iv.lo))
        }
    }
}

pub fn terminal_factor(z: Complex64, terminal: Terminal) -> Result<f64> {
    match terminal {
        Terminal::Point(xe) => excursion_kernel(xe, z),
        Terminal::Interval(iv) => harmonic_measure_h(z, iv),
    }
}

/// Chain correlator: sum over all visit orders of
/// `K(x0, z_{p1}) G(z_{p1}, z_{p2}) ... G(z_{p(n-1)}, z_{pn}) T(z_{pn})`.
/// With no insertions this is the partition function.
pub fn connected_correlator(spec: &CorrelatorSpec) -> Result<f64> {
    let n = spec.n();
    if n == 0 {
        return Ok(z0_value(spec));
    }
    let k: Vec<f64> = spec
        .insertions
        .iter()
        .map(|&z| excursion_kernel(spec.x0, z))
        .collect::<Result<_>>()?;
    let t: Vec<f64> = spec
        .insertions
        .iter()
        .map(|&z| terminal_factor(z, spec.terminal))
        .collect::<Result<_>>()?;
    let g = green_matrix(&spec.insertions)?;
    let mut order: Vec<usize> = (0..n).collect();
    let mut total = 0.0;
    permute(&mut order, 0, &mut |p| {
        let mut w = k[p[0]];
        for j in 1..n {
            w *= g[p[j - 1] * n + p[j]];
        }
        total += w * t[p[n - 1]];
    });
    Ok(total)
}

/// Chain correlator started from a bulk point `w` instead of the boundary:
/// the source factor is `G(w, .)`. Harmonic in `w` away from the insertions,
/// which is what [`correlator_recursion_check`] probes.
pub fn bulk_started_correlator(w: Complex64, spec: &CorrelatorSpec) -> Result<f64> {
    let n = spec.n();
    if n == 0 {
        return Err(Error::InvalidGeometry(
            "bulk-started correlator needs at least one insertion".into(),
        ));
    }
    let src: Vec<f64> = spec
        .insertions
        .iter()
        .map(|&z| green_h(w, z))
        .collect::<Result<_>>()?;
    let t: Vec<f64> = spec
        .insertions
        .iter()
        .map(|&z| terminal_factor(z, spec.terminal))
        .collect::<Result<_>>()?;
    let g = green_matrix(&spec.insertions)?;
    let mut order: Vec<usize> = (0..n).collect();
    let mut total = 0.0;
    permute(&mut order, 0, &mut |p| {
        let mut wgt = src[p[0]];
        for j in 1..n {
            wgt *= g[p[j - 1] * n + p[j]];
        }
        total += wgt * t[p[n - 1]];
    });
    Ok(total)
}

/// Maximum five-point finite-difference residual `|1/2 Lap_w C(w)|` of the
/// bulk-started correlator over the probe points. Probes within `3 h` of an
/// insertion (where the distributional source lives) or too close to the
/// boundary for the stencil are skipped. The residual is `O(h^2)` because
/// the exact function is harmonic between insertions.
pub fn correlator_recursion_check(
    spec: &CorrelatorSpec,
    probes: &[Complex64],
    h: f64,
) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidGeometry(format!("bad stencil spacing {h}")));
    }
    let mut max_res: Option<f64> = None;
    'probe: for &w in probes {
        if w.im <= h * 1.5 {
            continue;
        }
        for &z in &spec.insertions {
            if (w - z).norm() < 3.0 * h {
                continue 'probe;
            }
        }
        let c = bulk_started_correlator(w, spec)?;
        let cr = bulk_started_correlator(w + h, spec)?;
        let cl = bulk_started_correlator(w - h, spec)?;
        let cu = bulk_started_correlator(w + Complex64::new(0.0, h), spec)?;
        let cd = bulk_started_correlator(w - Complex64::new(0.0, h), spec)?;
        let res = 0.5 * (cr + cl + cu + cd - 4.0 * c) / (h * h);
        let res = res.abs();
        max_res = Some(max_res.map_or(res, |m: f64| m.max(res)));
    }
    max_res.ok_or_else(|| Error::InvalidGeometry("every probe point was excluded".into()))
}

/// Density of the chain's endpoint on the terminal interval:
/// `A(x) = (x0 - hi)(x0 - lo) / ((hi - lo) (x - x0)^2)`, normalized to 1.
pub fn endpoint_density(x0: f64, interval: Interval, x: f64) -> Result<f64> {
    if x <= interval.lo || x >= interval.hi {
        return Err(Error::InvalidGeometry(format!(
            "endpoint {x} outside the open interval {interval:?}"
        )));
    }
    if x0 >= interval.lo - COINCIDENT_TOL && x0 <= interval.hi + COINCIDENT_TOL {
        return Err(Error::InvalidGeometry(format!(
            "source {x0} must lie outside {interval:?}"
        )));
    }
    let d = x - x0;
    Ok((x0 - interval.hi) * (x0 - interval.lo) / (interval.length() * d * d))
}

/// Exact endpoint-density mass of each of `n_bins` equal-width bins of the
/// terminal interval, from the closed-form antiderivative `-C / (x - x0)`.
/// The masses are positive and sum to 1.
pub fn endpoint_bin_masses(x0: f64, interval: Interval, n_bins: usize) -> Result<Vec<f64>> {
    if n_bins == 0 {
        return Err(Error::InvalidGeometry("need at least one bin".into()));
    }
    if x0 >= interval.lo - COINCIDENT_TOL && x0 <= interval.hi + COINCIDENT_TOL {
        return Err(Error::InvalidGeometry(format!(
            "source {x0} must lie outside {interval:?}"
        )));
    }
    let c = (x0 - interval.hi) * (x0 - interval.lo) / interval.length();
    let width = interval.length() / n_bins as f64;
    let edge = |k: usize| interval.lo + k as f64 * width;
    Ok((0..n_bins)
        .map(|k| c * (1.0 / (edge(k) - x0) - 1.0 / (edge(k + 1) - x0)))
        .collect())
}

/// Vacuum correlator: sum over partitions of the points into closed
/// Green's-function cycles of length at least two, each block of size `m`
/// contributing its `(m-1)!` cyclic orders separately. Empty input gives 1;
/// a single point gives 0.
pub fn vacuum_correlator(points: &[Complex64]) -> Result<f64> {
    if points.len() > MAX_INSERTIONS {
        return Err(Error::InvalidGeometry(format!(
            "at most {MAX_INSERTIONS} points supported, got {}",
            points.len()
        )));
    }
    let g = green_matrix(points)?;
    let n = points.len();
    let mut memo = vec![f64::NAN; 1 << n];
    Ok(vacuum_masked(((1usize << n) - 1) as usize, n, &g, &mut memo))
}

/// Full diagram sum: chains plus cycles. Enumerated as permutations of the
/// index set extended by a source and a sink: the cycle through
/// source -> ... -> sink is the chain (possibly empty, contributing the
/// partition function), every other cycle is a Green's-function cycle, and
/// fixed points are forbidden (no one-cycles).
pub fn wick_sum(spec: &CorrelatorSpec) -> Result<f64> {
    let n = spec.n();
    if n == 0 {
        return Ok(z0_value(spec));
    }
    let k: Vec<f64> = spec
        .insertions
        .iter()
        .map(|&z| excursion_kernel(spec.x0, z))
        .collect::<Result<_>>()?;
    let t: Vec<f64> = spec
        .insertions
        .iter()
        .map(|&z| terminal_factor(z, spec.terminal))
        .collect::<Result<_>>()?;
    let g = green_matrix(&spec.insertions)?;
    let z0 = z0_value(spec);

    // images of 0..=n drawn from {1..=n, n+1 (sink)}; source index is 0
    let sink = n + 1;
    let mut images: Vec<usize> = (1..=sink).collect();
    let mut total = 0.0;
    permute(&mut images, 0, &mut |sigma| {
        // sigma[i] is the successor of node i; successor of sink is the
        // source, closing the chain into a cycle.
        let mut weight = 1.0;
        for i in 0..=n {
            let j = sigma[i];
            weight *= if i == 0 {
                if j == sink { z0 } else { k[j - 1] }
            } else if j == sink {
                t[i - 1]
            } else if j == i {
                0.0 // fixed point: a one-cycle, excluded
            } else {
                g[(i - 1) * n + (j - 1)]
            };
            if weight == 0.0 {
                return;
            }
        }
        total += weight;
    });
    Ok(total)
}

/// Maximum relative deviation, over prefix sizes `1..=points.len()`, between
/// the diagram sum and its factorization into chain parts times vacuum
/// cycles: `wick(S) = sum over J subset of S of connected(J) vacuum(S \ J)`.
/// The two sides are enumerated by unrelated code paths.
pub fn cumulant_factorization_check(
    x0: f64,
    terminal: Terminal,
    points: &[Complex64],
) -> Result<f64> {
    if points.is_empty() || points.len() > 4 {
        return Err(Error::InvalidGeometry(
            "factorization check supports 1 to 4 points".into(),
        ));
    }
    let mut worst: f64 = 0.0;
    for m in 1..=points.len() {
        let subset = &points[..m];
        let whole = wick_sum(&CorrelatorSpec::new(x0, terminal, subset.to_vec())?)?;
        let mut factored = 0.0;
        for mask in 0u32..(1 << m) {
            let chain: Vec<Complex64> = (0..m)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| subset[i])
                .collect();
            let rest: Vec<Complex64> = (0..m)
                .filter(|i| mask & (1 << i) == 0)
                .map(|i| subset[i])
                .collect();
            let conn =
                connected_correlator(&CorrelatorSpec::new(x0, terminal, chain)?)?;
            factored += conn * vacuum_correlator(&rest)?;
        }
        let scale = whole.abs().max(1e-300);
        worst = worst.max((whole - factored).abs() / scale);
    }
    Ok(worst)
}

fn green_matrix(points: &[Complex64]) -> Result<Vec<f64>> {
    let n = points.len();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                g[i * n + j] = green_h(points[i], points[j])?;
            }
        }
    }
    Ok(g)
}

/// Sum over cycle partitions of the masked subset; `memo` caches by mask.
/// The block containing the lowest set bit is grown as an ordered tail
/// `first -> m1 -> ... -> mk -> first` (k >= 1, so no one-cycles), which
/// visits each cyclic order of each block exactly once, orientations
/// included; the remainder recurses.
fn vacuum_masked(mask: usize, n: usize, g: &[f64], memo: &mut [f64]) -> f64 {
    fn extend_tail(
        first: usize,
        last: usize,
        unused: usize,
        w: f64,
        n: usize,
        g: &[f64],
        memo: &mut [f64],
        total: &mut f64,
    ) {
        // close the cycle at `last` (length >= 2 since last != first)
        *total += w * g[last * n + first] * vacuum_masked(unused, n, g, memo);
        let mut rem = unused;
        while rem != 0 {
            let m = rem.trailing_zeros() as usize;
            rem &= rem - 1;
            extend_tail(first, m, unused & !(1 << m), w * g[last * n + m], n, g, memo, total);
        }
    }

    if mask == 0 {
        return 1.0;
    }
    if !memo[mask].is_nan() {
        return memo[mask];
    }
    let first = mask.trailing_zeros() as usize;
    let rest = mask & !(1 << first);
    let mut total = 0.0;
    let mut rem = rest;
    while rem != 0 {
        let m = rem.trailing_zeros() as usize;
        rem &= rem - 1;
        extend_tail(first, m, rest & !(1 << m), g[first * n + m], n, g, memo, &mut total);
    }
    memo[mask] = total;
    total
}

/// Heap's algorithm; calls `visit` on every permutation of `items`.
fn permute<T: Copy>(items: &mut [T], k: usize, visit: &mut impl FnMut(&[T])) {
    let n = items.len();
    if k == n {
        visit(items);
        return;
    }
    for i in k..n {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}
