//! Walk sampling and the Monte Carlo estimators built on it.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::NuField;
use crate::geometry::Interval;
use crate::mc::{reduce_samples, Estimate, MomentAccumulator, RatioAccumulator};
use crate::rng::{sample_stream, DirectionBuffer, SampleRng};

use super::{LatticeDomain, STEP_CAP};

const DX: [i32; 4] = [1, -1, 0, 0];
const DY: [i32; 4] = [0, 0, 1, -1];

/// Everything a sampler needs to draw one weighted walk.
#[derive(Clone, Copy)]
pub struct WalkSpec<'a> {
    pub domain: &'a LatticeDomain,
    pub start: (i32, i32),
    pub nu: &'a NuField,
}

impl<'a> WalkSpec<'a> {
    pub fn from_boundary(domain: &'a LatticeDomain, x0: f64, nu: &'a NuField) -> Result<Self> {
        let start = domain.boundary_start(x0)?;
        Ok(Self { domain, start, nu })
    }
}

/// One sampled walk, materialized.
#[derive(Debug, Clone)]
pub struct WalkSample {
    /// Visited sites `W_0 .. W_tau`, including the absorbing exit site.
    pub path: Vec<(i32, i32)>,
    pub exit: (i32, i32),
    /// `exp(-(a^2/2) sum_{j<tau} nu(W_j))`.
    pub weight: f64,
    pub hit_target: bool,
}

/// Drive one walk, feeding each pre-exit site to `visit`. Returns the exit
/// site. The exit site itself is absorbed, not visited: local time and
/// `nu`-weight accumulate over `W_0 .. W_{tau-1}` only.
#[inline]
pub fn run_walk<V: FnMut(i32, i32)>(
    domain: &LatticeDomain,
    start: (i32, i32),
    rng: &mut SampleRng,
    dirs: &mut DirectionBuffer,
    mut visit: V,
) -> Result<(i32, i32)> {
    debug_assert!(domain.is_interior(start.0, start.1));
    let (mut ix, mut iy) = start;
    let mut steps: u64 = 0;
    loop {
        visit(ix, iy);
        let d = dirs.next(rng) as usize;
        ix += DX[d];
        iy += DY[d];
        steps += 1;
        if !domain.is_interior(ix, iy) {
            return Ok((ix, iy));
        }
        if steps >= STEP_CAP {
            return Err(Error::StepCapExceeded { cap: STEP_CAP });
        }
    }
}

/// Sample one walk with its path and weight materialized. For bulk
/// estimation prefer the `estimate_*` functions, which skip the path.
pub fn sample_walk(spec: WalkSpec<'_>, rng: &mut SampleRng) -> Result<WalkSample> {
    let mut dirs = DirectionBuffer::new();
    let mut path = Vec::with_capacity(256);
    let mut nu_sum = 0.0;
    let nu_zero = spec.nu.is_zero();
    let exit = run_walk(spec.domain, spec.start, rng, &mut dirs, |ix, iy| {
        path.push((ix, iy));
        if !nu_zero {
            nu_sum += spec.nu.eval(spec.domain.site_position(ix, iy));
        }
    })?;
    path.push(exit);
    let weight = (-spec.domain.step_time() * nu_sum).exp();
    let hit_target = spec.domain.in_target(exit.0, exit.1);
    Ok(WalkSample { path, exit, weight, hit_target })
}

/// Mean of `weight * 1{exit in target}` over `n` walks: the lattice
/// partition function for the domain's target interval.
pub fn estimate_partition_ratio(spec: WalkSpec<'_>, n: u64, seed: u64) -> Result<Estimate> {
    let nu_zero = spec.nu.is_zero();
    let acc = reduce_samples(n, |index, acc: &mut ErrorCarrying<MomentAccumulator>| {
        if acc.error.is_some() {
            return;
        }
        let mut rng = sample_stream(seed, index);
        let mut dirs = DirectionBuffer::new();
        let mut nu_sum = 0.0;
        let exit = run_walk(spec.domain, spec.start, &mut rng, &mut dirs, |ix, iy| {
            if !nu_zero {
                nu_sum += spec.nu.eval(spec.domain.site_position(ix, iy));
            }
        });
        match exit {
            Ok((ix, iy)) => {
                let w = if spec.domain.in_target(ix, iy) {
                    (-spec.domain.step_time() * nu_sum).exp()
                } else {
                    0.0
                };
                acc.inner.push(w);
            }
            Err(e) => acc.error = Some(e),
        }
    });
    let acc = acc.into_result()?;
    if acc.n == 0 {
        return Err(Error::DegenerateEstimate("no walks sampled".into()));
    }
    Ok(acc.estimate())
}

/// Ratio of weighted hits on `sub` to weighted hits on the domain target,
/// with a delta-method standard error. `sub` must lie inside the target.
pub fn estimate_hitting_ratio(
    spec: WalkSpec<'_>,
    sub: Interval,
    n: u64,
    seed: u64,
) -> Result<Estimate> {
    if !spec.domain.target.contains_interval(&sub) {
        return Err(Error::InvalidGeometry(format!(
            "sub-interval {sub:?} not contained in target {:?}",
            spec.domain.target
        )));
    }
    let nu_zero = spec.nu.is_zero();
    let acc = reduce_samples(n, |index, acc: &mut ErrorCarrying<RatioAccumulator>| {
        if acc.error.is_some() {
            return;
        }
        let mut rng = sample_stream(seed, index);
        let mut dirs = DirectionBuffer::new();
        let mut nu_sum = 0.0;
        let exit = run_walk(spec.domain, spec.start, &mut rng, &mut dirs, |ix, iy| {
            if !nu_zero {
                nu_sum += spec.nu.eval(spec.domain.site_position(ix, iy));
            }
        });
        match exit {
            Ok((ix, iy)) => {
                let in_uni = spec.domain.in_target(ix, iy);
                let w = if in_uni { (-spec.domain.step_time() * nu_sum).exp() } else { 0.0 };
                let in_sub = in_uni && spec.domain.in_bottom_interval(sub, ix, iy);
                acc.inner.push(if in_sub { w } else { 0.0 }, w);
            }
            Err(e) => acc.error = Some(e),
        }
    });
    let acc = acc.into_result()?;
    if acc.n == 0 || acc.sum_b <= 0.0 {
        return Err(Error::DegenerateEstimate(
            "no weighted hits on the target interval".into(),
        ));
    }
    Ok(acc.ratio())
}

/// Axis-aligned square block of lattice sites used as a local-time probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeCell {
    pub ix_lo: i32,
    pub ix_hi: i32,
    pub iy_lo: i32,
    pub iy_hi: i32,
}

impl LatticeCell {
    /// Square cell of `side` sites centered as close to `center` as the
    /// lattice permits. `side` must be odd so the center site is unique.
    pub fn centered(domain: &LatticeDomain, center: Complex64, side: i32) -> Result<Self> {
        if side < 1 || side % 2 == 0 {
            return Err(Error::InvalidGeometry(format!("cell side must be odd, got {side}")));
        }
        let a = domain.mesh;
        let cx = (center.re / a).round() as i32;
        let cy = (center.im / a).round() as i32;
        let half = side / 2;
        let cell = Self {
            ix_lo: cx - half,
            ix_hi: cx + half,
            iy_lo: cy - half,
            iy_hi: cy + half,
        };
        for (ix, iy) in [(cell.ix_lo, cell.iy_lo), (cell.ix_hi, cell.iy_hi)] {
            if !domain.is_interior(ix, iy) {
                return Err(Error::InvalidGeometry(format!(
                    "cell corner ({ix},{iy}) leaves the interior"
                )));
            }
        }
        Ok(cell)
    }

    #[inline]
    pub fn contains(&self, ix: i32, iy: i32) -> bool {
        ix >= self.ix_lo && ix <= self.ix_hi && iy >= self.iy_lo && iy <= self.iy_hi
    }

    pub fn side(&self) -> i32 {
        self.ix_hi - self.ix_lo + 1
    }

    fn overlaps(&self, other: &Self) -> bool {
        self.ix_lo <= other.ix_hi
            && other.ix_lo <= self.ix_hi
            && self.iy_lo <= other.iy_hi
            && other.iy_lo <= self.iy_hi
    }

    /// Mean of the continuum field over the cell's site positions, for
    /// comparing cell-level local-time statistics against point evaluations.
    pub fn average_over_sites(&self, domain: &LatticeDomain, f: impl Fn(Complex64) -> f64) -> f64 {
        let mut sum = 0.0;
        let mut count = 0u64;
        for ix in self.ix_lo..=self.ix_hi {
            for iy in self.iy_lo..=self.iy_hi {
                sum += f(domain.site_position(ix, iy));
                count += 1;
            }
        }
        sum / count as f64
    }
}

/// Mean of `weight * 1{exit in target} * prod_k L_k`, where `L_k` is
/// `(a^2/2)` times the walk's visit count in `cells[k]`. Cells must be
/// pairwise disjoint, except that repeating one cell verbatim is allowed
/// and raises the power of its local time. An empty cell list leaves the
/// bare weighted hit fraction, the right denominator for conditional
/// moments: the discrete source layer at the start site scales numerator
/// and denominator alike, so it drops out of the ratio.
pub fn estimate_local_time_moment(
    spec: WalkSpec<'_>,
    cells: &[LatticeCell],
    n: u64,
    seed: u64,
) -> Result<Estimate> {
    for (i, a) in cells.iter().enumerate() {
        for b in cells.iter().skip(i + 1) {
            if a.overlaps(b) && a != b {
                return Err(Error::InvalidGeometry(
                    "cells must be pairwise disjoint or identical".into(),
                ));
            }
        }
    }
    if cells.len() > 8 {
        return Err(Error::InvalidGeometry("at most 8 local-time cells supported".into()));
    }
    let nu_zero = spec.nu.is_zero();
    let n_cells = cells.len();
    let acc = reduce_samples(n, |index, acc: &mut ErrorCarrying<MomentAccumulator>| {
        if acc.error.is_some() {
            return;
        }
        let mut rng = sample_stream(seed, index);
        let mut dirs = DirectionBuffer::new();
        let mut nu_sum = 0.0;
        let mut visits = [0u64; 8];
        let exit = run_walk(spec.domain, spec.start, &mut rng, &mut dirs, |ix, iy| {
            if !nu_zero {
                nu_sum += spec.nu.eval(spec.domain.site_position(ix, iy));
            }
            for (k, cell) in cells.iter().enumerate() {
                if cell.contains(ix, iy) {
                    visits[k] += 1;
                }
            }
        });
        match exit {
            Ok((ix, iy)) => {
                let value = if spec.domain.in_target(ix, iy) {
                    let w = (-spec.domain.step_time() * nu_sum).exp();
                    let dt = spec.domain.step_time();
                    let mut prod = w;
                    for v in visits.iter().take(n_cells) {
                        prod *= dt * *v as f64;
                    }
                    prod
                } else {
                    0.0
                };
                acc.inner.push(value);
            }
            Err(e) => acc.error = Some(e),
        }
    });
    let acc = acc.into_result()?;
    if acc.n == 0 {
        return Err(Error::DegenerateEstimate("no walks sampled".into()));
    }
    Ok(acc.estimate())
}

/// Accumulator wrapper that latches the first walk error in a reduction.
struct ErrorCarrying<A> {
    inner: A,
    error: Option<Error>,
}

impl<A: Default> Default for ErrorCarrying<A> {
    fn default() -> Self {
        Self { inner: A::default(), error: None }
    }
}

impl<A: crate::mc::Mergeable> crate::mc::Mergeable for ErrorCarrying<A> {
    fn merge_from(&mut self, other: Self) {
        self.inner.merge_from(other.inner);
        if self.error.is_none() {
            self.error = other.error;
        }
    }
}

impl<A> ErrorCarrying<A> {
    fn into_result(self) -> Result<A> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.inner),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::NuField;
    use crate::geometry::grid::{solve_discrete_dirichlet, StencilGrid};
    use approx::assert_relative_eq;

    fn unit_domain() -> LatticeDomain {
        LatticeDomain::new(1.0, -2.0, 2.0, 4.0, Interval::new(-1.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn exit_law_matches_discrete_harmonic_measure() {
        // 3x3 interior: exit frequencies from the center must match the
        // discrete Dirichlet solution with an indicator boundary condition.
        let domain = LatticeDomain::new(1.0, 0.0, 4.0, 4.0, Interval::new(1.0, 3.0).unwrap())
            .unwrap();
        let start = (2, 2);
        let n = 100_000u64;
        let mut counts = std::collections::HashMap::new();
        let mut rng = sample_stream(7, 0);
        let mut dirs = DirectionBuffer::new();
        for _ in 0..n {
            let exit = run_walk(&domain, start, &mut rng, &mut dirs, |_, _| {}).unwrap();
            *counts.entry(exit).or_insert(0u64) += 1;
        }
        let grid = StencilGrid::new(5, 5, 1.0, 0.0, 0.0).unwrap();
        for &site in [(2i32, 0i32), (0, 2), (2, 4), (1, 0), (4, 3)].iter() {
            let u = solve_discrete_dirichlet(grid, |x, y| {
                let sx = x.round() as i32;
                let sy = y.round() as i32;
                if (sx, sy) == site {
                    1.0
                } else {
                    0.0
                }
            })
            .unwrap();
            let p = u[grid.index(2, 2)];
            let freq = *counts.get(&site).unwrap_or(&0) as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!(
                (freq - p).abs() < 4.0 * se,
                "site {site:?}: freq {freq} vs harmonic {p} (se {se})"
            );
        }
    }

    #[test]
    fn zero_field_gives_unit_weight() {
        let domain = unit_domain();
        let nu = NuField::zero();
        let spec = WalkSpec { domain: &domain, start: (0, 1), nu: &nu };
        let mut rng = sample_stream(1, 0);
        for _ in 0..50 {
            let s = sample_walk(spec, &mut rng).unwrap();
            assert_eq!(s.weight, 1.0);
            assert_eq!(s.exit, *s.path.last().unwrap());
            assert!(domain.is_boundary(s.exit.0, s.exit.1));
        }
    }

    #[test]
    fn constant_field_weight_counts_steps() {
        // nu = c on a box covering the whole interior: weight must equal
        // exp(-c (a^2/2) tau) with tau the number of pre-exit sites.
        let domain = unit_domain();
        let c = 0.3;
        let nu = NuField::constant_box(c, -10.0, 10.0, 0.0, 10.0).unwrap();
        let spec = WalkSpec { domain: &domain, start: (0, 2), nu: &nu };
        let mut rng = sample_stream(2, 0);
        for _ in 0..50 {
            let s = sample_walk(spec, &mut rng).unwrap();
            let tau = (s.path.len() - 1) as f64;
            assert_relative_eq!(
                s.weight,
                (-c * domain.step_time() * tau).exp(),
                max_relative = 1e-12
            );
            assert!(s.weight > 0.0 && s.weight <= 1.0);
        }
    }

    #[test]
    fn weights_decrease_with_amplitude() {
        let domain = unit_domain();
        let spec_amp = |amp: f64| NuField::constant_box(amp, -10.0, 10.0, 0.0, 10.0).unwrap();
        let weak = spec_amp(0.1);
        let strong = spec_amp(0.5);
        // same stream: identical paths, ordered weights
        for seed in 0..20 {
            let mut rng_a = sample_stream(11, seed);
            let mut rng_b = sample_stream(11, seed);
            let wa = sample_walk(WalkSpec { domain: &domain, start: (0, 2), nu: &weak }, &mut rng_a)
                .unwrap();
            let wb =
                sample_walk(WalkSpec { domain: &domain, start: (0, 2), nu: &strong }, &mut rng_b)
                    .unwrap();
            assert_eq!(wa.path, wb.path);
            assert!(wb.weight <= wa.weight);
        }
    }

    #[test]
    fn partition_estimate_matches_direct_loop() {
        let domain = LatticeDomain::new(0.5, -3.0, 3.0, 3.0, Interval::new(-1.0, 1.0).unwrap())
            .unwrap();
        let nu = NuField::disk(0.4, 0.0, 1.0, 0.6).unwrap();
        let spec = WalkSpec::from_boundary(&domain, 0.0, &nu).unwrap();
        let est = estimate_partition_ratio(spec, 4000, 99).unwrap();
        // direct re-computation with the same streams
        let mut acc = MomentAccumulator::default();
        for index in 0..4000u64 {
            let mut rng = sample_stream(99, index);
            let s = sample_walk(spec, &mut rng).unwrap();
            acc.push(if s.hit_target { s.weight } else { 0.0 });
        }
        let direct = acc.estimate();
        assert_eq!(est.value, direct.value);
        assert_eq!(est.n, direct.n);
    }

    #[test]
    fn hitting_ratio_recovers_conditional_frequency() {
        let domain = LatticeDomain::new(0.5, -4.0, 4.0, 4.0, Interval::new(-1.0, 2.0).unwrap())
            .unwrap();
        let nu = NuField::zero();
        let spec = WalkSpec::from_boundary(&domain, 0.0, &nu).unwrap();
        let sub = Interval::new(-1.0, 0.5).unwrap();
        let est = estimate_hitting_ratio(spec, sub, 20_000, 4).unwrap();
        assert!(est.value > 0.0 && est.value < 1.0);
        // at nu = 0 the ratio is a conditional probability; crude sanity
        // bound with generous tolerance
        assert!(est.std_error < 0.02);
        let outside = Interval::new(2.5, 3.0).unwrap();
        assert!(estimate_hitting_ratio(spec, outside, 10, 4).is_err());
    }

    #[test]
    fn local_time_cells_enforce_disjoint_or_identical() {
        let domain = LatticeDomain::new(0.25, -3.0, 3.0, 3.0, Interval::new(-1.0, 1.0).unwrap())
            .unwrap();
        let nu = NuField::zero();
        let spec = WalkSpec::from_boundary(&domain, 0.0, &nu).unwrap();
        let c1 =
            LatticeCell::centered(&domain, Complex64::new(0.0, 1.0), 3).unwrap();
        let c2 =
            LatticeCell::centered(&domain, Complex64::new(0.25, 1.0), 3).unwrap();
        let far = LatticeCell::centered(&domain, Complex64::new(1.5, 1.5), 3).unwrap();
        assert!(estimate_local_time_moment(spec, &[c1, c2], 10, 1).is_err());
        assert!(estimate_local_time_moment(spec, &[c1, c1], 10, 1).is_ok());
        assert!(estimate_local_time_moment(spec, &[c1, far], 10, 1).is_ok());
    }

    #[test]
    fn strip_partition_matches_transfer_matrix() {
        // Wide box, constant nu on a slab covering all heights: each
        // vertical level contributes an independent factor, so the hit
        // probability of the full bottom row solves a 1D killed walk. With
        // per-step weight phi = e^{-lam}/(2 - e^{-lam}) for the horizontal
        // moves folded in, the vertical ladder satisfies
        // u(j) = sinh((H - j) theta) / sinh(H theta), cosh(theta) = 1/phi.
        let mesh = 1.0;
        let height = 6.0;
        let c = 0.08; // lambda = c a^2 / 2 per visit
        let domain = LatticeDomain::new(
            mesh,
            -600.0,
            600.0,
            height,
            Interval::new(-599.0, 599.0).unwrap(),
        )
        .unwrap();
        let nu = NuField::constant_box(c, -700.0, 700.0, 0.0, 700.0).unwrap();
        let spec = WalkSpec { domain: &domain, start: (0, 3), nu: &nu };
        let est = estimate_partition_ratio(spec, 200_000, 31).unwrap();

        let lam = c * domain.step_time();
        // Per visit the walk pays e^{-lam}; horizontal excursions at a
        // level resum into a geometric factor. 1D reduction: p(up or down)
        // = 1/2 total with the horizontal weight folded into phi.
        let phi = (-lam as f64).exp() / (2.0 - (-lam as f64).exp());
        let theta = (1.0 / phi).acosh();
        let h_steps = (height / mesh) as i32;
        let start_level = 3;
        let expect = ((h_steps - start_level) as f64 * theta).sinh()
            / (h_steps as f64 * theta).sinh();
        assert!(
            (est.value - expect).abs() < 4.0 * est.std_error + 1e-4,
            "mc {} vs ladder {expect} (se {})",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn local_time_moment_matches_green_kernel() {
        // Single-site cell at nu = 0: by the strong Markov property at each
        // visit, E[L(cell) ; exit in target] = (a^2/2) G(start, site)
        // * P_site(exit in target), with G the expected visit count. Both
        // factors solve discrete Dirichlet problems on the same grid.
        let domain = LatticeDomain::new(
            0.25,
            -8.0,
            8.0,
            6.0,
            Interval::new(-7.75, 7.75).unwrap(),
        )
        .unwrap();
        let nu = NuField::zero();
        let spec = WalkSpec::from_boundary(&domain, 0.0, &nu).unwrap();
        let cell = LatticeCell::centered(&domain, Complex64::new(0.0, 1.0), 1).unwrap();
        let est = estimate_local_time_moment(spec, &[cell], 60_000, 12).unwrap();

        let grid = StencilGrid::new(
            (domain.ix_hi - domain.ix_lo + 1) as usize,
            domain.iy_hi as usize + 1,
            domain.mesh,
            domain.mesh * domain.ix_lo as f64,
            0.0,
        )
        .unwrap();
        // visit count: (1/2) Lap_h u = -2/h^2 at the cell site, zero rim
        // (I - P = -(h^2/4) Lap_h for the four-neighbor walk)
        let mut source = vec![0.0; grid.len()];
        let si = (cell.ix_lo - domain.ix_lo) as usize;
        let sj = cell.iy_lo as usize;
        source[grid.index(si, sj)] = 2.0 / (domain.mesh * domain.mesh);
        let zero_bc = vec![0.0; grid.len()];
        let u = crate::geometry::grid::DirichletProblem {
            grid,
            boundary: &zero_bc,
            killing: None,
            source: Some(&source),
        }
        .solve()
        .unwrap();
        let expected_visits = u[grid.index((spec.start.0 - domain.ix_lo) as usize, 1)];
        // exit law from the cell site
        let hm = solve_discrete_dirichlet(grid, |x, y| {
            let ix = (x / domain.mesh).round() as i32;
            let iy = (y / domain.mesh).round() as i32;
            if domain.in_target(ix, iy) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let expected = domain.step_time() * expected_visits * hm[grid.index(si, sj)];
        assert!(
            (est.value - expected).abs() < 4.0 * est.std_error,
            "mc {} vs green {expected} (se {})",
            est.value,
            est.std_error
        );
    }
}
