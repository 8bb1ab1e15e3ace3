//! Ensemble statistics of driving functions: quadratic-variation balance
//! of the sampled SDE paths, pooled diffusivity of the driving extracted
//! from loop-erased lattice walks, and landing histograms on the target.

use crate::correlators::Terminal;
use crate::error::{Error, Result};
use crate::geometry::Interval;
use crate::lattice::{loop_erase, sample_walk, WalkSpec};
use crate::loewner::sde::sample_dipolar_sle;
use crate::loewner::zipper::{extract_driving_capped, CurvePolyline};
use crate::mc::{reduce_samples, Estimate, Mergeable, MomentAccumulator};
use crate::rng::sample_stream;

/// Mean of `sum (d xi)^2 - kappa T` over sampled dipolar paths, where the
/// sum runs over the path's own time grid and `T` is the capacity time the
/// path covered before stopping. Brownian driving makes this zero in
/// expectation at every horizon, including randomly stopped ones.
pub fn driving_qv_estimate(
    x0: f64,
    target: Interval,
    kappa: f64,
    t_max: f64,
    dt: f64,
    n_paths: u64,
    seed: u64,
) -> Result<Estimate> {
    // surface parameter errors once, outside the parallel region
    sample_dipolar_sle(x0, target, kappa, dt, dt, &mut sample_stream(seed, u64::MAX), 0)?;
    let acc: MomentAccumulator = reduce_samples(n_paths, |i, acc: &mut MomentAccumulator| {
        let mut rng = sample_stream(seed, i);
        let d = sample_dipolar_sle(x0, target, kappa, t_max, dt, &mut rng, 0)
            .expect("parameters validated above");
        let t_cover = *d.times.last().expect("sampler returns a nonempty grid");
        let qv: f64 = d.xi.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
        acc.push(qv - kappa * t_cover);
    });
    Ok(acc.estimate())
}

/// Pooled-window diffusivity of loop-erased walk driving.
#[derive(Debug, Clone, Copy)]
pub struct DrivingDiffusivity {
    /// total squared increment sum over total grid time
    pub kappa_hat: f64,
    /// scale estimate `kappa_hat * sqrt(2 / n_increments)`, exact for
    /// independent Gaussian increments
    pub std_error: f64,
    pub n_increments: u64,
    /// walks that exited through the target and contributed a curve
    pub n_curves: u64,
    pub n_walks: u64,
}

#[derive(Default)]
struct PoolAccum {
    qv: f64,
    time: f64,
    weight: f64,
    increments: u64,
    curves: u64,
}

impl Mergeable for PoolAccum {
    fn merge_from(&mut self, other: Self) {
        self.qv += other.qv;
        self.time += other.time;
        self.weight += other.weight;
        self.increments += other.increments;
        self.curves += other.curves;
    }
}

/// Samples `n_walks` lattice walks from `spec`, keeps those that exit
/// through the domain target, loop-erases each, extracts the zipper
/// driving of the erased curve out to capacity `burn_in + window`,
/// resamples it on a uniform grid of spacing `delta` spanning
/// `[burn_in, burn_in + window]` by linear interpolation, and pools the
/// squared increments: `kappa_hat` is total squared increment over total
/// grid time. The burn-in skips the first stretch of capacity, where each
/// grid increment covers only a few lattice steps and the curve's local
/// stiffness suppresses the quadratic variation; past it an increment
/// aggregates many steps and diffuses. A curve whose capacity ends early
/// contributes the grid increments it covers. Walk weights multiply both
/// sums, so a nonzero field tilts the ensemble the same way it tilts
/// hitting ratios.
pub fn lerw_driving_diffusivity(
    spec: WalkSpec<'_>,
    n_walks: u64,
    burn_in: f64,
    window: f64,
    delta: f64,
    seed: u64,
) -> Result<DrivingDiffusivity> {
    if !(burn_in >= 0.0 && burn_in.is_finite()) {
        return Err(Error::Config(format!("burn_in must be finite and >= 0, got {burn_in}")));
    }
    if !(window > 0.0 && window.is_finite() && delta > 0.0 && delta <= window) {
        return Err(Error::Config(format!(
            "need 0 < delta <= window, got delta {delta}, window {window}"
        )));
    }
    sample_walk(spec, &mut sample_stream(seed, u64::MAX))?;
    let mesh = spec.domain.mesh;
    let terminal = Terminal::Interval(spec.domain.target);
    let cap = burn_in + window;
    let acc: PoolAccum = reduce_samples(n_walks, |i, acc: &mut PoolAccum| {
        let mut rng = sample_stream(seed, i);
        let s = sample_walk(spec, &mut rng).expect("parameters validated above");
        if !s.hit_target {
            return;
        }
        let erased = loop_erase(&s.path).expect("sampled walk paths are well-formed");
        let curve =
            CurvePolyline::from_lattice_path(&erased, mesh).expect("erased paths are simple");
        // Unzipping a lattice-simple curve can still fail in floats when a
        // fjord pinches to within rounding of the axis; drop such curves.
        let back = match extract_driving_capped(&curve, terminal, cap) {
            Ok(d) => d,
            Err(_) => return,
        };
        let t_end = *back.times.last().expect("extraction returns a nonempty grid");
        let m = ((t_end.min(cap) - burn_in) / delta).floor();
        if m < 1.0 {
            return;
        }
        let m = m as usize;
        let value_at = |t: f64| -> f64 {
            let j = back.times.partition_point(|&u| u <= t).min(back.times.len() - 1);
            let (t0, t1) = (back.times[j - 1], back.times[j]);
            let (x0, x1) = (back.xi[j - 1], back.xi[j]);
            x0 + (x1 - x0) * (t - t0) / (t1 - t0)
        };
        let mut prev = value_at(burn_in);
        for j in 1..=m {
            let cur = value_at(burn_in + j as f64 * delta);
            acc.qv += s.weight * (cur - prev) * (cur - prev);
            prev = cur;
        }
        acc.time += s.weight * m as f64 * delta;
        acc.weight += s.weight;
        acc.increments += m as u64;
        acc.curves += 1;
    });
    if acc.curves == 0 || acc.increments == 0 {
        return Err(Error::DegenerateEstimate(format!(
            "no walk out of {n_walks} produced a driving window; widen the target or raise n"
        )));
    }
    let kappa_hat = acc.qv / acc.time;
    Ok(DrivingDiffusivity {
        kappa_hat,
        std_error: kappa_hat * (2.0 / acc.increments as f64).sqrt(),
        n_increments: acc.increments,
        n_curves: acc.curves,
        n_walks,
    })
}

/// Binned landing positions of sampled dipolar paths on the target.
#[derive(Debug, Clone)]
pub struct LandingHistogram {
    /// landings per equal-width bin of the target interval
    pub counts: Vec<u64>,
    /// paths that landed before the time horizon
    pub landed: u64,
    pub attempted: u64,
    /// mean capacity time at which the landed paths stopped
    pub mean_stop_time: f64,
}

/// Samples `n_paths` dipolar paths from `x0` aimed at `target` and bins
/// their landing points into `n_bins` equal-width bins. Paths still
/// running at `t_max` are counted in `attempted` but land nowhere, so
/// `counts` sums to `landed`. `n_markers` sets the resolution of the
/// landing-law inversion inside the sampler.
#[allow(clippy::too_many_arguments)]
pub fn landing_histogram(
    x0: f64,
    target: Interval,
    kappa: f64,
    n_paths: u64,
    n_bins: usize,
    t_max: f64,
    dt: f64,
    n_markers: usize,
    seed: u64,
) -> Result<LandingHistogram> {
    if n_bins == 0 {
        return Err(Error::Config("need at least one bin".into()));
    }
    if n_markers < 2 {
        return Err(Error::Config(format!(
            "landing needs at least two markers, got {n_markers}"
        )));
    }
    sample_dipolar_sle(x0, target, kappa, dt, dt, &mut sample_stream(seed, u64::MAX), n_markers)?;
    type Acc = (Vec<u64>, (u64, f64));
    let (counts, (landed, time_sum)): Acc = reduce_samples(n_paths, |i, acc: &mut Acc| {
        if acc.0.is_empty() {
            acc.0.resize(n_bins, 0);
        }
        let mut rng = sample_stream(seed, i);
        let d = sample_dipolar_sle(x0, target, kappa, t_max, dt, &mut rng, n_markers)
            .expect("parameters validated above");
        if let Some(x) = d.landing {
            let u = (x - target.lo) / target.length();
            let b = ((u * n_bins as f64) as usize).min(n_bins - 1);
            acc.0[b] += 1;
            acc.1 .0 += 1;
            acc.1 .1 += *d.times.last().expect("sampler returns a nonempty grid");
        }
    });
    let counts = if counts.is_empty() { vec![0; n_bins] } else { counts };
    Ok(LandingHistogram {
        counts,
        landed,
        attempted: n_paths,
        mean_stop_time: if landed > 0 { time_sum / landed as f64 } else { f64::NAN },
    })
}
