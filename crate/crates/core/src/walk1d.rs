//! One-dimensional weighted walks: a small exactly solvable laboratory.
//!
//! Walks on the integers start at the origin and take steps of +1 or -1
//! carrying weights `mu e^{gamma}` and `mu e^{-gamma}`. Summing the weight
//! over all walks of all lengths gives a geometric series in the total step
//! weight `w = 2 mu cosh(gamma)`, convergent strictly below the critical
//! line `w = 1`. The closed forms here cross-check the two-dimensional
//! machinery in miniature: the same fugacity expansion, the same
//! exponential reweighting between the symmetric and the tilted ensemble,
//! and the same strip factorization that the lattice sampler sees when the
//! field is constant.
//!
//! Reweighting checks run at fixed length (or fixed time for the Brownian
//! analogue); none of the estimators uses a stopping time.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::mc::{reduce_samples, Estimate, MomentAccumulator};
use crate::rng::sample_stream;

/// Step fugacity and tilt of the one-dimensional walk.
#[derive(Debug, Clone, Copy)]
pub struct ToyParams {
    /// Overall scale of the step weights `mu e^{+/- gamma}`.
    pub mu: f64,
    /// Tilt; positive values favour upward steps.
    pub gamma: f64,
}

impl ToyParams {
    pub fn new(mu: f64, gamma: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::Config(format!(
                "step scale mu must be positive and finite, got {mu}"
            )));
        }
        if !gamma.is_finite() {
            return Err(Error::Config(format!("tilt gamma must be finite, got {gamma}")));
        }
        Ok(Self { mu, gamma })
    }

    /// Combined weight of one step, `w = 2 mu cosh(gamma)`. Ensemble sums
    /// over walks of every length converge exactly when this is below one.
    pub fn step_weight(&self) -> f64 {
        2.0 * self.mu * self.gamma.cosh()
    }

    /// Signed step weight `v = 2 mu sinh(gamma)`, the numerator of the mean
    /// displacement per step `v / w = tanh(gamma)`.
    pub fn step_drift(&self) -> f64 {
        2.0 * self.mu * self.gamma.sinh()
    }

    fn require_subcritical(&self) -> Result<(f64, f64)> {
        let w = self.step_weight();
        if w >= 1.0 {
            return Err(Error::Divergent(format!(
                "2 mu cosh(gamma) = {w:.6} sits at or beyond the critical value 1"
            )));
        }
        Ok((w, self.step_drift()))
    }
}

/// Ensemble sums of the one-dimensional walk.
#[derive(Debug, Clone, Copy)]
pub struct ToyPartition {
    /// Partition sum over walks of every length, `1 / (1 - w)`.
    pub z: f64,
    /// Length-weighted series `sum_n n w^n = w / (1 - w)^2`, the fugacity
    /// derivative `w dZ/dw`. Dividing by `z` gives the mean length of the
    /// normalized ensemble, `w / (1 - w)`.
    pub mean_length: f64,
    /// Variance of the endpoint displacement under the normalized ensemble,
    /// `(w - w^2 + v^2) / (1 - w)^2`: the second log-derivative of the
    /// partition sum with respect to a fugacity coupled to displacement.
    /// With no tilt it collapses to `w / (1 - w)`, the normalized mean
    /// length, since each step then contributes unit displacement variance.
    pub endpoint_variance: f64,
}

/// Closed forms for the partition data. Errs when `w >= 1`, where every one
/// of the sums diverges.
pub fn toy_partition(params: &ToyParams) -> Result<ToyPartition> {
    let (w, v) = params.require_subcritical()?;
    let q = 1.0 - w;
    Ok(ToyPartition {
        z: 1.0 / q,
        mean_length: w / (q * q),
        endpoint_variance: (w - w * w + v * v) / (q * q),
    })
}

/// The same sums by exact enumeration of every walk of length at most
/// `n_max`, through a displacement-resolved table of layer weights. In the
/// subcritical regime the truncation deficit of `z` is
/// `sum_{n > n_max} w^n = w^{n_max + 1} / (1 - w)`.
pub fn toy_partition_truncated(params: &ToyParams, n_max: usize) -> ToyPartition {
    let up = params.mu * params.gamma.exp();
    let down = params.mu * (-params.gamma).exp();
    let width = 2 * n_max + 1;
    // layer[k] carries the total weight of current-length walks ending at
    // displacement k - n_max
    let mut layer = vec![0.0; width];
    layer[n_max] = 1.0;
    let mut z = 1.0;
    let mut length_sum = 0.0;
    let mut disp = 0.0;
    let mut disp_sq = 0.0;
    for n in 1..=n_max {
        let mut next = vec![0.0; width];
        for k in 0..width {
            let mut acc = 0.0;
            if k > 0 {
                acc += up * layer[k - 1];
            }
            if k + 1 < width {
                acc += down * layer[k + 1];
            }
            next[k] = acc;
        }
        layer = next;
        let mut total = 0.0;
        for (k, &wgt) in layer.iter().enumerate() {
            let s = k as f64 - n_max as f64;
            total += wgt;
            disp += wgt * s;
            disp_sq += wgt * s * s;
        }
        z += total;
        length_sum += n as f64 * total;
    }
    let mean_disp = disp / z;
    ToyPartition {
        z,
        mean_length: length_sum,
        endpoint_variance: disp_sq / z - mean_disp * mean_disp,
    }
}

/// Total weight of walks started one site above the origin that reach the
/// origin for the first time on their final step. Conditioning on the first
/// step gives `f = mu e^{-gamma} + mu e^{gamma} f^2`, and the branch that
/// vanishes with `mu` is
///
/// `f = e^{-gamma} (1 - sqrt(1 - 4 mu^2)) / (2 mu)`.
///
/// The series converges for `mu <= 1/2` at any tilt (a first-passage walk
/// has one more down step than up steps, so the tilt enters only through
/// the overall `e^{-gamma}`). Passage across `k` levels factorizes into
/// `f^k`, which is the product structure a constant killing field induces
/// on a strip.
pub fn toy_first_passage(params: &ToyParams) -> Result<f64> {
    let mu = params.mu;
    if mu > 0.5 {
        return Err(Error::Divergent(format!(
            "first-passage series needs mu <= 1/2, got {mu}"
        )));
    }
    Ok((-params.gamma).exp() * (1.0 - (1.0 - 4.0 * mu * mu).sqrt()) / (2.0 * mu))
}

/// Monte Carlo means of the exponential weight
/// `Q_n = e^{gamma S_n} / cosh(gamma)^n` over symmetric simple walks,
/// reported at each checkpoint length. The one-step identity
/// `E[Q_{n+1} | S_n] = Q_n (e^{gamma} + e^{-gamma}) / (2 cosh gamma) = Q_n`
/// makes every mean exactly one, so the sampled means test the sampler and
/// nothing else. Checkpoints must be strictly increasing.
pub fn toy_martingale_checkpoints(
    gamma: f64,
    checkpoints: &[usize],
    n_samples: u64,
    seed: u64,
) -> Result<Vec<(usize, Estimate)>> {
    if checkpoints.is_empty() {
        return Err(Error::Config("no checkpoints requested".into()));
    }
    if !checkpoints.windows(2).all(|p| p[0] < p[1]) {
        return Err(Error::Config("checkpoints must be strictly increasing".into()));
    }
    if n_samples == 0 {
        return Err(Error::DegenerateEstimate("zero samples requested".into()));
    }
    let n_max = *checkpoints.last().unwrap();
    let ln_cosh = gamma.cosh().ln();
    let mut slot = vec![usize::MAX; n_max + 1];
    for (j, &c) in checkpoints.iter().enumerate() {
        slot[c] = j;
    }
    let accs = reduce_samples(n_samples, |i, accs: &mut Vec<MomentAccumulator>| {
        if accs.is_empty() {
            accs.resize_with(checkpoints.len(), MomentAccumulator::default);
        }
        let mut rng = sample_stream(seed, i);
        let mut s: i64 = 0;
        if slot[0] != usize::MAX {
            accs[slot[0]].push(1.0);
        }
        for n in 1..=n_max {
            s += if rng.gen::<bool>() { 1 } else { -1 };
            let j = slot[n];
            if j != usize::MAX {
                accs[j].push((gamma * s as f64 - n as f64 * ln_cosh).exp());
            }
        }
    });
    Ok(checkpoints.iter().copied().zip(accs.iter().map(|a| a.estimate())).collect())
}

/// Largest deviation of the Monte Carlo mean of `Q_n` from one over the
/// standard checkpoints `{1, 10, 100}` capped at `n_steps` (with `n_steps`
/// itself always included).
pub fn toy_martingale_check(
    gamma: f64,
    n_steps: usize,
    n_samples: u64,
    seed: u64,
) -> Result<f64> {
    if n_steps == 0 {
        return Err(Error::Config("need at least one step".into()));
    }
    let mut checkpoints: Vec<usize> =
        [1usize, 10, 100].iter().copied().filter(|&c| c < n_steps).collect();
    checkpoints.push(n_steps);
    let report = toy_martingale_checkpoints(gamma, &checkpoints, n_samples, seed)?;
    Ok(report.iter().map(|(_, e)| (e.value - 1.0).abs()).fold(0.0, f64::max))
}

/// Monte Carlo mean of `S_n Q_n` under the symmetric walk. Reweighting by
/// `Q_n` tilts each step's mean to `tanh(gamma)`, so the dressed
/// displacement has mean `n tanh(gamma)`. This is the fixed-length discrete
/// image of the Brownian identity `E[X_t M_t] = g t`; the translation from
/// continuous time is this module's own, checked here and in
/// [`brownian_dressed_drift_estimate`] rather than taken from anywhere.
pub fn dressed_drift_estimate(
    gamma: f64,
    n_steps: usize,
    n_samples: u64,
    seed: u64,
) -> Result<Estimate> {
    if n_steps == 0 {
        return Err(Error::Config("need at least one step".into()));
    }
    if n_samples == 0 {
        return Err(Error::DegenerateEstimate("zero samples requested".into()));
    }
    let ln_cosh = gamma.cosh().ln();
    let acc = reduce_samples(n_samples, |i, acc: &mut MomentAccumulator| {
        let mut rng = sample_stream(seed, i);
        let mut s: i64 = 0;
        for _ in 0..n_steps {
            s += if rng.gen::<bool>() { 1 } else { -1 };
        }
        let q = (gamma * s as f64 - n_steps as f64 * ln_cosh).exp();
        acc.push(s as f64 * q);
    });
    Ok(acc.estimate())
}

/// Monte Carlo mean of `M_T = e^{g X_T - g^2 T / 2}` over Brownian paths
/// built from `n_steps` Gaussian increments. A sum of Gaussian increments
/// is Gaussian at any step count, so the mean is one with no discretization
/// bias; the estimate checks the sampler.
pub fn brownian_martingale_estimate(
    g: f64,
    t: f64,
    n_steps: usize,
    n_samples: u64,
    seed: u64,
) -> Result<Estimate> {
    brownian_weighted_moment(g, t, n_steps, n_samples, seed, |_, m| m)
}

/// Monte Carlo mean of `X_T M_T`, the reweighted Brownian endpoint, equal
/// to `g T`: under the measure tilted by `M_T` the path gains drift `g`.
pub fn brownian_dressed_drift_estimate(
    g: f64,
    t: f64,
    n_steps: usize,
    n_samples: u64,
    seed: u64,
) -> Result<Estimate> {
    brownian_weighted_moment(g, t, n_steps, n_samples, seed, |x, m| x * m)
}

fn brownian_weighted_moment(
    g: f64,
    t: f64,
    n_steps: usize,
    n_samples: u64,
    seed: u64,
    payload: impl Fn(f64, f64) -> f64 + Sync,
) -> Result<Estimate> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Config(format!("horizon must be positive, got {t}")));
    }
    if n_steps == 0 {
        return Err(Error::Config("need at least one step".into()));
    }
    if n_samples == 0 {
        return Err(Error::DegenerateEstimate("zero samples requested".into()));
    }
    let dt = t / n_steps as f64;
    let root_dt = dt.sqrt();
    let acc = reduce_samples(n_samples, |i, acc: &mut MomentAccumulator| {
        let mut rng = sample_stream(seed, i);
        let mut x = 0.0;
        for _ in 0..n_steps {
            let zeta: f64 = rng.sample(StandardNormal);
            x += root_dt * zeta;
        }
        let m = (g * x - 0.5 * g * g * t).exp();
        acc.push(payload(x, m));
    });
    Ok(acc.estimate())
}
