//! Functionals evaluated along integrated chains: the one-point martingale
//! observable, its radial (conformal-radius) part, the bubble integral, and
//! the first-order field functionals built from them.
//!
//! Conventions. For a tracked point with map value g and derivative g', the
//! radial term is A = -(1/pi) log(2 Im g / |g'|), the negative log conformal
//! radius. The full observable adds the boundary excursion correction
//! K(xi; g) T(g) / Z0(xi), where T is the terminal factor (excursion kernel
//! to a target point, or harmonic measure of a target interval) and Z0 the
//! matching partition function; the correction uses the terminal data mapped
//! forward to the same chain index. Along a critical chain (kappa = 2) the
//! observable is a martingale in capacity time, which is what the
//! first-order reweighting and drift formulas below rely on.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::correlators::{partition_function, terminal_factor, Terminal};
use crate::error::{Error, Result};
use crate::field::{NodeLevel, NuField};
use crate::geometry::{conformal_radius, excursion_kernel, harmonic_measure_h, Interval, COINCIDENT_TOL};
use crate::mc::{Estimate, MomentAccumulator};
use crate::rng::sample_stream;

use super::sde::{dipolar_drift, step_image};
use super::{slit_forward, slit_forward_deriv, LoewnerChain, TrackedPoint};

const FRAC_1_PI: f64 = std::f64::consts::FRAC_1_PI;

/// The one-point observable at explicit map data:
/// `-(1/pi) log(2 Im g / |g'|) + K(xi; g) T(g) / Z0(xi)`.
pub fn martingale_value(g: Complex64, dg: Complex64, xi: f64, terminal: Terminal) -> Result<f64> {
    let rho = conformal_radius(g, dg)?;
    let radial = -FRAC_1_PI * rho.ln();
    let k = excursion_kernel(xi, g)?;
    let t = terminal_factor(g, terminal)?;
    let z0 = partition_function(xi, terminal)?;
    Ok(radial + k * t / z0)
}

fn tracked<'a>(chain: &'a LoewnerChain, point_idx: usize) -> Result<&'a TrackedPoint> {
    chain.points.get(point_idx).ok_or_else(|| {
        Error::Config(format!(
            "chain tracks {} points, no index {point_idx}",
            chain.points.len()
        ))
    })
}

/// Radial term A_k = -(1/pi) log(2 Im g_k / |g'_k|) for one tracked point,
/// over its live window. Nondecreasing in k for any chain, because the
/// evolving domain only shrinks.
pub fn radial_series(chain: &LoewnerChain, point_idx: usize) -> Result<Vec<f64>> {
    let p = tracked(chain, point_idx)?;
    (0..p.live_len())
        .map(|k| Ok(-FRAC_1_PI * conformal_radius(p.g[k], p.dg[k])?.ln()))
        .collect()
}

/// Observable series N_k for one tracked point, with the terminal data
/// mapped to index k. Truncated at the point's swallow index and at the
/// chain truncation.
pub fn martingale_series(chain: &LoewnerChain, point_idx: usize) -> Result<Vec<f64>> {
    let p = tracked(chain, point_idx)?;
    (0..p.live_len())
        .map(|k| martingale_value(p.g[k], p.dg[k], chain.xi[k], chain.terminal_at(k)?))
        .collect()
}

/// Capacity-time bubble integral `(4/pi) int (Im g)^2 / |g - xi|^4 ds` over
/// the live window of one tracked point. Equal to the radial increment
/// A_end - A_0 along the same chain; computing it by quadrature gives an
/// independent route to that increment. Per-step trapezoids: the integrand
/// is smooth inside each grid step (the driving is interpolated linearly)
/// but kinked at the nodes, so wider stencils would not raise the order.
pub fn bubble_integral(chain: &LoewnerChain, point_idx: usize) -> Result<f64> {
    let p = tracked(chain, point_idx)?;
    let len = p.live_len();
    if len < 2 {
        return Err(Error::DegenerateEstimate(
            "bubble integral needs at least two live grid points".into(),
        ));
    }
    let f = |k: usize| {
        let im: f64 = p.g[k].im;
        im * im / (p.g[k] - chain.xi[k]).norm_sqr().powi(2)
    };
    let mut total = 0.0;
    let mut prev = f(0);
    for k in 1..len {
        let cur = f(k);
        total += 0.5 * (chain.times[k] - chain.times[k - 1]) * (prev + cur);
        prev = cur;
    }
    Ok(4.0 * FRAC_1_PI * total)
}

/// Observer seeds for `integrate_chain` matching the field's quadrature
/// nodes, so that the field functionals below can locate every node in the
/// chain afterwards.
pub fn field_observers(nu: &NuField, level: NodeLevel) -> Vec<Complex64> {
    nu.quadrature_nodes(level).into_iter().map(|(z, _)| z).collect()
}

/// Pair each field node with its tracked point. Nodes are matched by exact
/// position, which holds whenever the chain was integrated with
/// `field_observers` of the same field and level.
fn node_points<'a>(
    chain: &'a LoewnerChain,
    nu: &NuField,
    level: NodeLevel,
) -> Result<Vec<(&'a TrackedPoint, f64)>> {
    let by_bits: HashMap<(u64, u64), usize> = chain
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| ((p.z0.re.to_bits(), p.z0.im.to_bits()), i))
        .collect();
    nu.quadrature_nodes(level)
        .into_iter()
        .map(|(z, w)| {
            let idx = by_bits
                .get(&(z.re.to_bits(), z.im.to_bits()))
                .copied()
                .ok_or_else(|| {
                    Error::Config(format!(
                        "chain does not track the field node {z}; integrate with field_observers"
                    ))
                })?;
            Ok((&chain.points[idx], w))
        })
        .collect()
}

fn live_at<'a>(chain: &LoewnerChain, p: &'a TrackedPoint, k: usize) -> Result<()> {
    if p.is_live_at(k) {
        return Ok(());
    }
    let time = chain.times.get(p.live_len()).copied().unwrap_or(f64::NAN);
    Err(Error::PointSwallowed { time })
}

fn check_index(chain: &LoewnerChain, k: usize) -> Result<()> {
    if k >= chain.len() {
        return Err(Error::Config(format!(
            "grid index {k} outside the integrated chain of length {}",
            chain.len()
        )));
    }
    Ok(())
}

/// First-order interface energy `int nu(z) [A_k(z) - A_0(z)] d^2 z` at grid
/// index k: the field mass accumulated by the hull, weighted by how much
/// each point's conformal radius has shrunk. Nonnegative for nonnegative
/// fields.
pub fn interface_energy(
    chain: &LoewnerChain,
    k: usize,
    nu: &NuField,
    level: NodeLevel,
) -> Result<f64> {
    if nu.is_zero() {
        return Ok(0.0);
    }
    check_index(chain, k)?;
    let mut sum = 0.0;
    for (p, w) in node_points(chain, nu, level)? {
        live_at(chain, p, k)?;
        let a_k = -FRAC_1_PI * conformal_radius(p.g[k], p.dg[k])?.ln();
        let a_0 = -FRAC_1_PI * conformal_radius(p.g[0], p.dg[0])?.ln();
        sum += w * (a_k - a_0);
    }
    Ok(sum)
}

/// First-order reweighting series `M_k = (1 - S_k) / (1 - S_0)` with
/// `S_k = int nu(z) N_k(z) d^2 z`. Under the critical law M is a mean-one
/// martingale to first order in the field; the series stops at the first
/// index where a field node leaves the domain (optional stopping keeps the
/// mean at one).
pub fn first_order_rn_series(
    chain: &LoewnerChain,
    nu: &NuField,
    level: NodeLevel,
) -> Result<Vec<f64>> {
    if nu.is_zero() {
        return Ok(vec![1.0; chain.len()]);
    }
    let nodes = node_points(chain, nu, level)?;
    let k_max = nodes
        .iter()
        .map(|(p, _)| p.live_len())
        .min()
        .unwrap_or(chain.len())
        .min(chain.len());
    let mut out = Vec::with_capacity(k_max);
    let mut s0 = 0.0;
    for k in 0..k_max {
        let term = chain.terminal_at(k)?;
        let mut s = 0.0;
        for (p, w) in &nodes {
            s += w * martingale_value(p.g[k], p.dg[k], chain.xi[k], term)?;
        }
        if k == 0 {
            s0 = s;
            if (1.0 - s0).abs() < 1e-12 {
                return Err(Error::DegenerateEstimate(
                    "first-order weight vanishes at the start".into(),
                ));
            }
        }
        out.push((1.0 - s) / (1.0 - s0));
    }
    Ok(out)
}

/// First-order correction to the driving drift at grid index k for an
/// interval target: `kappa d/dxi log(1 - S)` expanded to first order in the
/// field,
/// `(2 kappa / |I|) int nu(z) H(g(z), I) Im[(g-lo)(g-hi)/(g-xi)^2] d^2 z`,
/// with everything mapped to index k.
pub fn dipolar_drift_correction(
    chain: &LoewnerChain,
    k: usize,
    nu: &NuField,
    level: NodeLevel,
) -> Result<f64> {
    if nu.is_zero() {
        return Ok(0.0);
    }
    check_index(chain, k)?;
    let Terminal::Interval(iv) = chain.terminal_at(k)? else {
        return Err(Error::Config(
            "dipolar drift correction needs an interval target chain".into(),
        ));
    };
    let xi = chain.xi[k];
    let mut sum = 0.0;
    for (p, w) in node_points(chain, nu, level)? {
        live_at(chain, p, k)?;
        let g = p.g[k];
        let d = g - xi;
        sum += w
            * harmonic_measure_h(g, iv)?
            * ((g - iv.lo) * (g - iv.hi) / (d * d)).im;
    }
    Ok(2.0 * chain.kappa * sum / iv.length())
}

/// Target-point counterpart of `dipolar_drift_correction`:
/// `kappa int nu(z) K(eta; g) Im[(g-eta)^2/(g-xi)^2] d^2 z`. The interval
/// formula converges to this one as the target interval shrinks onto eta.
pub fn chordal_drift_correction(
    chain: &LoewnerChain,
    k: usize,
    nu: &NuField,
    level: NodeLevel,
) -> Result<f64> {
    if nu.is_zero() {
        return Ok(0.0);
    }
    check_index(chain, k)?;
    let Terminal::Point(eta) = chain.terminal_at(k)? else {
        return Err(Error::Config(
            "chordal drift correction needs a point target chain".into(),
        ));
    };
    let xi = chain.xi[k];
    let mut sum = 0.0;
    for (p, w) in node_points(chain, nu, level)? {
        live_at(chain, p, k)?;
        let g = p.g[k];
        let num = g - eta;
        let den = g - xi;
        sum += w * excursion_kernel(eta, g)? * (num * num / (den * den)).im;
    }
    Ok(chain.kappa * sum)
}

/// Monte Carlo route to the drift correction at the start of an interval
/// chain: the covariation of the driving noise with the first-order log
/// weight, `sqrt(kappa) E[dB (log M)_dt] / dt`, estimated from one-step
/// samples with an exact slit update of the nodes and images.
#[allow(clippy::too_many_arguments)]
pub fn girsanov_drift_estimate(
    x0: f64,
    target: Interval,
    nu: &NuField,
    level: NodeLevel,
    kappa: f64,
    n_samples: u64,
    dt: f64,
    seed: u64,
) -> Result<Estimate> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("need a positive step, got dt = {dt}")));
    }
    if x0 >= target.lo - COINCIDENT_TOL && x0 <= target.hi + COINCIDENT_TOL {
        return Err(Error::Loewner(format!(
            "start {x0} must lie outside the target interval {target:?}"
        )));
    }
    let nodes = nu.quadrature_nodes(level);
    if nodes.is_empty() {
        return Err(Error::DegenerateEstimate("field has no quadrature nodes".into()));
    }
    let term0 = Terminal::Interval(target);
    let n0: Vec<f64> = nodes
        .iter()
        .map(|&(z, _)| martingale_value(z, 1.0.into(), x0, term0))
        .collect::<Result<_>>()?;
    // images after one slit step of capacity dt rooted at the start
    let term1 = Terminal::Interval(Interval::new(
        step_image(target.lo, x0, dt),
        step_image(target.hi, x0, dt),
    )?);
    let bare = dipolar_drift(kappa, x0, target.lo, target.hi);
    let sqrt_kappa = kappa.sqrt();
    let mut acc = MomentAccumulator::default();
    let mut rng = sample_stream(seed, 0);
    for _ in 0..n_samples {
        let zeta: f64 = rng.sample(StandardNormal);
        let db = dt.sqrt() * zeta;
        let xi_dt = x0 + bare * dt + sqrt_kappa * db;
        let mut dm = 0.0;
        for (j, &(z, w)) in nodes.iter().enumerate() {
            let g = slit_forward(z, x0, dt);
            let dg = slit_forward_deriv(z, g, x0);
            dm -= w * (martingale_value(g, dg, xi_dt, term1)? - n0[j]);
        }
        acc.push(sqrt_kappa * db * dm / dt);
    }
    Ok(acc.estimate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loewner::sde::sample_dipolar_sle;
    use crate::loewner::{integrate_chain, uniform_times, DrivingSample};
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    /// Two-entry chain over a negligible capacity: map data at the identity.
    fn identity_chain(x0: f64, terminal: Terminal, observers: &[Complex64]) -> LoewnerChain {
        let driving =
            DrivingSample::new(vec![0.0, 1e-9], vec![x0, x0], 2.0, terminal).unwrap();
        integrate_chain(&driving, observers).unwrap()
    }

    fn zero_driving(n: usize, dt: f64, terminal: Terminal) -> DrivingSample {
        DrivingSample::new(uniform_times(n, dt), vec![0.0; n + 1], 2.0, terminal).unwrap()
    }

    #[test]
    fn identity_values_match_the_closed_forms() {
        // interval target: N = -(1/pi) ln 2 + (4/pi)(arg(i-2) - arg(i-1))
        // at z = i, start 0, target [1,2]
        let term = Terminal::Interval(iv(1.0, 2.0));
        let n = martingale_value(c(0.0, 1.0), 1.0.into(), 0.0, term).unwrap();
        let darg = 1f64.atan2(-2.0) - 1f64.atan2(-1.0);
        let expected = FRAC_1_PI * (4.0 * darg - 2f64.ln());
        assert_relative_eq!(n, expected, epsilon = 1e-14);

        // point target eta = 1.5: correction (2/pi) |i - eta|^-2 eta^2 ... =
        // (2/pi) (eta^2 / |i - eta|^2) since Z0 = (2/pi)/eta^2 and K(0; i) = 2/pi
        let n_pt =
            martingale_value(c(0.0, 1.0), 1.0.into(), 0.0, Terminal::Point(1.5)).unwrap();
        let expected_pt = FRAC_1_PI * (2.0 * 2.25 / 3.25 - 2f64.ln());
        assert_relative_eq!(n_pt, expected_pt, epsilon = 1e-14);

        // the series along a negligible chain reproduces the identity value
        let chain = identity_chain(0.0, term, &[c(0.0, 1.0)]);
        let series = martingale_series(&chain, 0).unwrap();
        assert_eq!(series.len(), 2);
        assert_relative_eq!(series[0], expected, epsilon = 1e-14);
        assert_relative_eq!(series[1], expected, epsilon = 1e-6);
    }

    #[test]
    fn martingale_mean_is_conserved_along_dipolar_chains() {
        // E[N_t(z)] = N_0(z) under the critical interval-target law
        let target = iv(1.0, 2.0);
        let term = Terminal::Interval(target);
        let z = c(-1.5, 1.2);
        let n0 = martingale_value(z, 1.0.into(), 0.0, term).unwrap();
        let dt = 1e-3;
        let mut acc = MomentAccumulator::default();
        for i in 0..2500u64 {
            let mut rng = sample_stream(31_337, i);
            let s = sample_dipolar_sle(0.0, target, 2.0, 0.1, dt, &mut rng, 0).unwrap();
            let chain = integrate_chain(&s, &[z]).unwrap();
            let series = martingale_series(&chain, 0).unwrap();
            acc.push(*series.last().unwrap());
        }
        let est = acc.estimate();
        assert!(
            (est.value - n0).abs() <= 4.0 * est.std_error + 0.005,
            "mean {} +- {} vs N_0 = {n0}",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn radial_term_grows_and_integrates_the_bubble() {
        let target = iv(1.0, 2.0);
        let mut rng = sample_stream(99, 7);
        let s = sample_dipolar_sle(0.0, target, 2.0, 0.2, 1e-3, &mut rng, 0).unwrap();
        let obs = [c(0.0, 1.0), c(-1.0, 0.8), c(2.5, 1.5)];
        let chain = integrate_chain(&s, &obs).unwrap();
        for idx in 0..obs.len() {
            let a = radial_series(&chain, idx).unwrap();
            assert!(a.len() >= 2);
            for w in a.windows(2) {
                assert!(w[1] >= w[0] - 1e-9, "radial term decreased: {} -> {}", w[0], w[1]);
            }
            // quadrature on the grid resolves the increment to O(dt): the
            // integrand is kinked at every node of a stochastic driving
            let bubble = bubble_integral(&chain, idx).unwrap();
            assert_relative_eq!(
                bubble,
                a.last().unwrap() - a[0],
                epsilon = 1e-5,
                max_relative = 2e-3
            );
        }
    }

    #[test]
    fn bubble_integral_matches_the_log_radius_drop() {
        // zero driving, z = i: rho_t = 2 (1 - 4t), so the increment at
        // t = 0.1 is (1/pi) ln(5/3)
        let driving = zero_driving(2000, 5e-5, Terminal::Interval(iv(5.0, 6.0)));
        let chain = integrate_chain(&driving, &[c(0.0, 1.0)]).unwrap();
        assert!(chain.truncated_at.is_none());
        let exact = FRAC_1_PI * (5f64 / 3.0).ln();
        let bubble = bubble_integral(&chain, 0).unwrap();
        assert_relative_eq!(bubble, exact, epsilon = 1e-6);
        let a = radial_series(&chain, 0).unwrap();
        assert_relative_eq!(a.last().unwrap() - a[0], exact, epsilon = 1e-6);
        assert_relative_eq!(a[0], -FRAC_1_PI * 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn interface_energy_cross_checks_against_per_node_bubbles() {
        let nu = NuField::disk(0.8, 0.3, 1.6, 0.5).unwrap();
        let obs = field_observers(&nu, NodeLevel::Coarse);
        let driving = zero_driving(200, 5e-4, Terminal::Interval(iv(5.0, 6.0)));
        let chain = integrate_chain(&driving, &obs).unwrap();
        let k = chain.len() - 1;
        let energy = interface_energy(&chain, k, &nu, NodeLevel::Coarse).unwrap();
        assert!(energy > 0.0);
        let nodes = nu.quadrature_nodes(NodeLevel::Coarse);
        let mut total = 0.0;
        for (idx, &(_, w)) in nodes.iter().enumerate() {
            total += w * bubble_integral(&chain, idx).unwrap();
        }
        assert_relative_eq!(energy, total, epsilon = 1e-9, max_relative = 1e-5);
        // trivial cases: zero field, zero window
        assert_eq!(
            interface_energy(&chain, k, &NuField::zero(), NodeLevel::Coarse).unwrap(),
            0.0
        );
        assert!(interface_energy(&chain, 0, &nu, NodeLevel::Coarse).unwrap().abs() < 1e-12);
    }

    #[test]
    fn first_order_weight_is_a_mean_one_martingale() {
        let target = iv(1.0, 2.0);
        let nu = NuField::disk(0.4, -0.9, 1.5, 0.4).unwrap();
        let obs = field_observers(&nu, NodeLevel::Coarse);
        // trivial cases
        let id = identity_chain(0.0, Terminal::Interval(target), &obs);
        let m_id = first_order_rn_series(&id, &nu, NodeLevel::Coarse).unwrap();
        assert_eq!(m_id[0], 1.0);
        assert!((m_id[1] - 1.0).abs() < 1e-6);
        let ones = first_order_rn_series(&id, &NuField::zero(), NodeLevel::Coarse).unwrap();
        assert!(ones.iter().all(|&m| m == 1.0));
        // statistical: mean one under the critical law
        let mut acc = MomentAccumulator::default();
        for i in 0..400u64 {
            let mut rng = sample_stream(2_718, i);
            let s = sample_dipolar_sle(0.0, target, 2.0, 0.08, 1e-3, &mut rng, 0).unwrap();
            let chain = integrate_chain(&s, &obs).unwrap();
            let m = first_order_rn_series(&chain, &nu, NodeLevel::Coarse).unwrap();
            acc.push(*m.last().unwrap());
        }
        let est = acc.estimate();
        assert!(
            (est.value - 1.0).abs() <= 4.0 * est.std_error + 0.002,
            "mean weight {} +- {}",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn drift_correction_is_antisymmetric_under_mirror_geometry() {
        // field symmetric about the start: mirroring the target interval
        // flips the sign of the correction exactly
        let nu = NuField::disk(1.0, 0.0, 1.5, 0.6).unwrap();
        let obs = field_observers(&nu, NodeLevel::Fine);
        let right = identity_chain(0.0, Terminal::Interval(iv(1.0, 2.0)), &obs);
        let left = identity_chain(0.0, Terminal::Interval(iv(-2.0, -1.0)), &obs);
        let f_r = dipolar_drift_correction(&right, 0, &nu, NodeLevel::Fine).unwrap();
        let f_l = dipolar_drift_correction(&left, 0, &nu, NodeLevel::Fine).unwrap();
        assert!(f_r.abs() > 1e-4);
        assert_relative_eq!(f_r, -f_l, max_relative = 1e-10);
    }

    #[test]
    fn dipolar_correction_approaches_the_chordal_one_for_small_targets() {
        let nu = NuField::disk(1.0, -0.6, 1.4, 0.5).unwrap();
        let obs = field_observers(&nu, NodeLevel::Coarse);
        let eta = 3.0;
        let chordal = identity_chain(0.0, Terminal::Point(eta), &obs);
        let f_c = chordal_drift_correction(&chordal, 0, &nu, NodeLevel::Coarse).unwrap();
        assert!(f_c.abs() > 1e-4);
        let mut errs = Vec::new();
        for d in [0.1, 0.05] {
            let dip = identity_chain(0.0, Terminal::Interval(iv(eta - d, eta + d)), &obs);
            let f_d = dipolar_drift_correction(&dip, 0, &nu, NodeLevel::Coarse).unwrap();
            errs.push((f_d - f_c).abs());
        }
        // the gap shrinks quadratically with the interval half-width
        let ratio = errs[0] / errs[1];
        assert!(
            (3.3..4.7).contains(&ratio),
            "errors {errs:?} shrink with ratio {ratio}, expected about 4"
        );
    }

    #[test]
    fn girsanov_route_reproduces_the_quadrature_drift_correction() {
        let target = iv(1.0, 2.0);
        let nu = NuField::disk(0.7, -0.8, 1.6, 0.5).unwrap();
        let obs = field_observers(&nu, NodeLevel::Coarse);
        let id = identity_chain(0.0, Terminal::Interval(target), &obs);
        let f_quad = dipolar_drift_correction(&id, 0, &nu, NodeLevel::Coarse).unwrap();
        let est =
            girsanov_drift_estimate(0.0, target, &nu, NodeLevel::Coarse, 2.0, 30_000, 1e-4, 404)
                .unwrap();
        assert!(est.std_error > 0.0 && est.std_error < f_quad.abs());
        assert!(
            (est.value - f_quad).abs() <= 3.0 * est.std_error + 0.003,
            "mc {} +- {} vs quadrature {f_quad}",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn field_functionals_reject_untracked_nodes_and_bad_indices() {
        let nu = NuField::disk(0.5, 0.0, 2.0, 0.4).unwrap();
        let chain = identity_chain(0.0, Terminal::Interval(iv(1.0, 2.0)), &[c(0.0, 1.0)]);
        assert!(matches!(
            interface_energy(&chain, 0, &nu, NodeLevel::Coarse),
            Err(Error::Config(_))
        ));
        let obs = field_observers(&nu, NodeLevel::Coarse);
        let tracked_chain = identity_chain(0.0, Terminal::Interval(iv(1.0, 2.0)), &obs);
        assert!(matches!(
            dipolar_drift_correction(&tracked_chain, 5, &nu, NodeLevel::Coarse),
            Err(Error::Config(_))
        ));
        // target kind mismatches
        assert!(chordal_drift_correction(&tracked_chain, 0, &nu, NodeLevel::Coarse).is_err());
        let point_chain = identity_chain(0.0, Terminal::Point(3.0), &obs);
        assert!(dipolar_drift_correction(&point_chain, 0, &nu, NodeLevel::Coarse).is_err());
    }
}
