//! Driving-function samplers: dipolar and chordal SLE with boundary force
//! points, Euler-Maruyama in the driving with exact slit-map updates of
//! the boundary images.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::correlators::Terminal;
use crate::error::{Error, Result};
use crate::geometry::{Interval, COINCIDENT_TOL};
use crate::rng::SampleRng;

use super::{slit_forward, DrivingSample};

/// The sampler stops once min |xi - X| falls below STOP_FACTOR
/// sqrt(dt kappa): the curve has reached its target for all purposes a
/// step of size dt can resolve.
const STOP_FACTOR: f64 = 3.0;

/// Dipolar drift coefficient rho_d = (kappa - 6)/2 acting from both
/// interval endpoints.
pub fn dipolar_rho(kappa: f64) -> f64 {
    0.5 * (kappa - 6.0)
}

/// Chordal drift coefficient rho_c = kappa - 6 acting from the target
/// point.
pub fn chordal_rho(kappa: f64) -> f64 {
    kappa - 6.0
}

/// Instantaneous bare drift of the dipolar driving at (xi, X_lo, X_hi).
pub fn dipolar_drift(kappa: f64, xi: f64, x_lo: f64, x_hi: f64) -> f64 {
    let rho = dipolar_rho(kappa);
    rho / (xi - x_lo) + rho / (xi - x_hi)
}

/// Instantaneous bare drift of the chordal driving at (xi, eta).
pub fn chordal_drift(kappa: f64, xi: f64, eta: f64) -> f64 {
    chordal_rho(kappa) / (xi - eta)
}

/// Evolve one boundary image across a step of capacity dt with the driving
/// frozen at xi.
pub(crate) fn step_image(x: f64, xi: f64, dt: f64) -> f64 {
    slit_forward(x.into(), xi, dt).re
}

/// Common Euler-Maruyama loop. `drift` maps (xi, images) to the driving
/// drift; `gap` maps (xi, images) to the distance governing the stop rule.
fn sample_driving<R: Rng>(
    x0: f64,
    terminal: Terminal,
    kappa: f64,
    t_max: f64,
    dt: f64,
    rng: &mut R,
    n_markers: usize,
) -> Result<DrivingSample> {
    if !(dt > 0.0 && t_max >= dt) {
        return Err(Error::Loewner(format!(
            "need 0 < dt <= t_max, got dt = {dt}, t_max = {t_max}"
        )));
    }
    let n_steps = (t_max / dt).round() as usize;
    let stop_gap = STOP_FACTOR * (dt * kappa).sqrt();
    let sigma = (kappa * dt).sqrt();

    let mut images: Vec<f64> = match terminal {
        Terminal::Point(x) => vec![x],
        Terminal::Interval(iv) => vec![iv.lo, iv.hi],
    };
    // interior markers across a dipolar target interval: their images chart
    // the boundary map on the interval, which locate_landing inverts
    let markers: Vec<f64> = match (terminal, n_markers) {
        (Terminal::Interval(iv), n) if n > 0 => (1..=n)
            .map(|j| iv.lo + iv.length() * j as f64 / (n + 1) as f64)
            .collect(),
        _ => Vec::new(),
    };
    let mut marker_images = markers.clone();

    let mut xi = x0;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut xis = Vec::with_capacity(n_steps + 1);
    times.push(0.0);
    xis.push(xi);
    let mut stopped_early = false;

    'outer: for k in 0..n_steps {
        // adaptive substepping keeps drift * h below a fraction of the gap
        let mut remaining = dt;
        while remaining > 0.0 {
            let gap = images
                .iter()
                .map(|x| (xi - x).abs())
                .fold(f64::INFINITY, f64::min);
            if gap < stop_gap {
                stopped_early = true;
                break 'outer;
            }
            let drift: f64 = match images.len() {
                1 => chordal_drift(kappa, xi, images[0]),
                _ => dipolar_drift(kappa, xi, images[0], images[1]),
            };
            let mut h = remaining;
            let max_move = 0.2 * gap;
            if drift.abs() * h > max_move {
                h = max_move / drift.abs();
            }
            let noise: f64 = rng.sample(StandardNormal);
            let xi_new = xi + drift * h + sigma * (h / dt).sqrt() * noise;
            for x in images.iter_mut() {
                *x = step_image(*x, xi, h);
            }
            for x in marker_images.iter_mut() {
                *x = step_image(*x, xi, h);
            }
            xi = xi_new;
            remaining -= h;
        }
        times.push((k + 1) as f64 * dt);
        xis.push(xi);
    }

    let landing = if stopped_early && !markers.is_empty() {
        Some(locate_landing(
            xi,
            terminal,
            &markers,
            &marker_images,
            images[0],
            images[1],
            rng,
        ))
    } else {
        None
    };
    let mut sample = DrivingSample::new(times, xis, kappa, terminal)?;
    sample.stopped_early = stopped_early;
    sample.landing = landing;
    Ok(sample)
}

/// Sample the landing point from the stopped state. The stop rule fires
/// while the conditional landing law is still spread out, so no
/// deterministic readout exists; instead, use the Markov property: given
/// the stopped state, the continuum landing point in image coordinates
/// follows the closed-form density `(xi-Hi)(xi-Lo)/((Hi-Lo)(x-xi)^2)` on
/// `[Lo, Hi]`. Draw from it by inverting its distribution function and pull
/// the draw back to the physical interval through the marker images
/// (piecewise-linear inverse of the boundary map). The spliced law is exact
/// up to driving discretization and marker interpolation.
fn locate_landing<R: Rng>(
    xi: f64,
    terminal: Terminal,
    markers: &[f64],
    marker_images: &[f64],
    lo_img: f64,
    hi_img: f64,
    rng: &mut R,
) -> f64 {
    let Terminal::Interval(iv) = terminal else {
        unreachable!("markers exist only for interval targets");
    };
    // F(x) = c (x - Lo)/(x - xi) with c = (Hi - xi)/(Hi - Lo); c > 1 since
    // xi stays strictly outside the image interval
    let c = (hi_img - xi) / (hi_img - lo_img);
    let u: f64 = rng.gen();
    let x_img = (c * lo_img - u * xi) / (c - u);
    let mut x_left = iv.lo;
    let mut im_left = lo_img;
    for (&x, &im) in markers
        .iter()
        .zip(marker_images)
        .chain(std::iter::once((&iv.hi, &hi_img)))
    {
        if x_img <= im {
            if im <= im_left {
                return x;
            }
            let frac = ((x_img - im_left) / (im - im_left)).clamp(0.0, 1.0);
            return x_left + frac * (x - x_left);
        }
        x_left = x;
        im_left = im;
    }
    iv.hi
}

/// Dipolar SLE_kappa driving toward a boundary interval, started at x0.
/// `n_markers` interior markers (0 to disable) produce a landing-point
/// estimate when the curve reaches the interval before t_max.
pub fn sample_dipolar_sle(
    x0: f64,
    target: Interval,
    kappa: f64,
    t_max: f64,
    dt: f64,
    rng: &mut SampleRng,
    n_markers: usize,
) -> Result<DrivingSample> {
    if x0 >= target.lo - COINCIDENT_TOL && x0 <= target.hi + COINCIDENT_TOL {
        return Err(Error::Loewner(format!(
            "start {x0} must lie outside the target interval {target:?}"
        )));
    }
    sample_driving(x0, Terminal::Interval(target), kappa, t_max, dt, rng, n_markers)
}

/// Chordal SLE_kappa(kappa - 6) driving toward a boundary point.
pub fn sample_chordal_sle(
    x0: f64,
    x_inf: f64,
    kappa: f64,
    t_max: f64,
    dt: f64,
    rng: &mut SampleRng,
) -> Result<DrivingSample> {
    if (x_inf - x0).abs() < COINCIDENT_TOL {
        return Err(Error::Loewner(format!("target {x_inf} coincides with start {x0}")));
    }
    sample_driving(x0, Terminal::Point(x_inf), kappa, t_max, dt, rng, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlators::endpoint_density;
    use crate::rng::sample_stream;
    use approx::assert_relative_eq;

    #[test]
    fn initial_drift_pulls_toward_the_interval() {
        // x0 left of [1,2]: rho_d = -2 at kappa = 2 gives drift +3
        let d = dipolar_drift(2.0, 0.0, 1.0, 2.0);
        assert_relative_eq!(d, 3.0, epsilon = 1e-14);
        assert!(d > 0.0);
        // mirrored configuration pushes the other way
        assert_relative_eq!(dipolar_drift(2.0, 0.0, -2.0, -1.0), -3.0, epsilon = 1e-14);
    }

    #[test]
    fn one_step_mean_matches_the_drift() {
        let target = Interval::new(1.0, 2.0).unwrap();
        let dt = 1e-3;
        let n = 100_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        let mut rng = sample_stream(77, 0);
        for _ in 0..n {
            let s = sample_dipolar_sle(0.0, target, 2.0, dt, dt, &mut rng, 0).unwrap();
            let inc = s.xi[1] - s.xi[0];
            sum += inc;
            sumsq += inc * inc;
        }
        let mean = sum / n as f64;
        let var = (sumsq / n as f64 - mean * mean).max(0.0);
        let se = (var / n as f64).sqrt();
        let expected = dipolar_drift(2.0, 0.0, 1.0, 2.0) * dt;
        assert!(
            (mean - expected).abs() <= 3.0 * se,
            "mean {mean} vs drift*dt {expected}, se {se}"
        );
    }

    #[test]
    fn quadratic_variation_matches_kappa_t() {
        let target = Interval::new(2.0, 3.0).unwrap();
        let dt = 1e-3;
        let t = 0.1;
        let n_paths = 400;
        let mut qvs = Vec::with_capacity(n_paths);
        for i in 0..n_paths {
            let mut rng = sample_stream(911, i as u64);
            let s = sample_dipolar_sle(0.0, target, 2.0, t, dt, &mut rng, 0).unwrap();
            assert!(!s.stopped_early, "target too close for the horizon");
            let qv: f64 = s.xi.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
            qvs.push(qv);
        }
        let mean = qvs.iter().sum::<f64>() / n_paths as f64;
        let var = qvs.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / (n_paths - 1) as f64;
        let se = (var / n_paths as f64).sqrt();
        assert!(
            (mean - 2.0 * t).abs() <= 3.0 * se + 2.0 * dt,
            "qv {mean} vs kappa t {}",
            2.0 * t
        );
    }

    #[test]
    fn driving_starts_at_x0_and_respects_validation() {
        let target = Interval::new(1.0, 2.0).unwrap();
        let mut rng = sample_stream(5, 0);
        let s = sample_dipolar_sle(-0.5, target, 2.0, 0.01, 1e-3, &mut rng, 0).unwrap();
        assert_eq!(s.xi[0], -0.5);
        assert_eq!(s.times[0], 0.0);
        assert!(sample_dipolar_sle(1.5, target, 2.0, 0.01, 1e-3, &mut rng, 0).is_err());
        assert!(sample_chordal_sle(1.0, 1.0, 2.0, 0.01, 1e-3, &mut rng).is_err());
    }

    #[test]
    fn dipolar_curve_reaches_the_interval_and_lands_by_the_endpoint_density() {
        // landing histogram against A(x) = 2/x^2 on [1,2] for x0 = 0
        let target = Interval::new(1.0, 2.0).unwrap();
        let dt = 2e-3;
        let n_paths = 2000;
        let n_bins = 8;
        let mut counts = vec![0usize; n_bins];
        let mut landings = Vec::with_capacity(n_paths);
        for i in 0..n_paths {
            let mut rng = sample_stream(424_242, i as u64);
            // landing capacities have a power-law tail, so the horizon must
            // be generous for every path in the batch to arrive
            let s = sample_dipolar_sle(0.0, target, 2.0, 400.0, dt, &mut rng, 32).unwrap();
            assert!(s.stopped_early, "path {i} did not reach the interval");
            let x = s.landing.unwrap();
            assert!((1.0..=2.0).contains(&x), "landing {x} outside the target");
            let b = (((x - 1.0) * n_bins as f64) as usize).min(n_bins - 1);
            counts[b] += 1;
            landings.push(x);
        }
        // scalar check: mean landing = integral of x A(x) = 2 ln 2
        let mean = landings.iter().sum::<f64>() / n_paths as f64;
        let var = landings.iter().map(|x| (x - mean).powi(2)).sum::<f64>()
            / (n_paths - 1) as f64;
        let se = (var / n_paths as f64).sqrt();
        let exact_mean = 2.0 * std::f64::consts::LN_2;
        assert!(
            (mean - exact_mean).abs() <= 3.0 * se + 0.01,
            "mean landing {mean} vs {exact_mean}, se {se}"
        );
        // binned check against the exact density
        let bin_w = target.length() / n_bins as f64;
        for (b, &c) in counts.iter().enumerate() {
            let mid = 1.0 + (b as f64 + 0.5) * bin_w;
            let p = endpoint_density(0.0, target, mid).unwrap() * bin_w;
            let freq = c as f64 / n_paths as f64;
            let se_bin = (p * (1.0 - p) / n_paths as f64).sqrt();
            assert!(
                (freq - p).abs() <= 4.0 * se_bin + 0.3 * p,
                "bin {b}: freq {freq} vs density {p}"
            );
        }
    }
}
