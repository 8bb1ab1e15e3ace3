//! Forward Loewner machinery in the capacity parametrization,
//! dg/dt = 2/(g - xi), with tracked bulk observers and boundary images.
//!
//! The three submodules build on the chain integrator here: `sde` samples
//! driving functions, `zipper` converts curves to driving functions and
//! back, `observables` evaluates the martingale and field functionals
//! along chains.

use num_complex::Complex64;

use crate::correlators::Terminal;
use crate::error::{Error, Result};
use crate::geometry::{Interval, COINCIDENT_TOL};

pub mod observables;
pub mod sde;
pub mod stats;
pub mod zipper;

/// Per-substep tolerance of the adaptive integrator.
const ODE_TOL: f64 = 1e-9;

/// Points closer than SWALLOW_FACTOR * sqrt(dt * kappa) to the driving
/// value are dropped; Euler-scale steps cannot resolve them.
pub(crate) const SWALLOW_FACTOR: f64 = 10.0;

/// A driving function sampled on a time grid, together with the data
/// needed to interpret it: the diffusivity and the terminal target.
#[derive(Debug, Clone)]
pub struct DrivingSample {
    /// capacity times, t[0] = 0, strictly increasing
    pub times: Vec<f64>,
    /// driving values on the grid, xi[0] is the curve's starting point
    pub xi: Vec<f64>,
    pub kappa: f64,
    /// chordal target point or dipolar target interval (pre-images at t=0)
    pub terminal: Terminal,
    /// the SDE sampler stopped before its time horizon (target reached)
    pub stopped_early: bool,
    /// landing point on the target interval, drawn from the conditional
    /// landing law at the stop time, when the sampler tracked markers
    pub landing: Option<f64>,
}

impl DrivingSample {
    pub fn new(times: Vec<f64>, xi: Vec<f64>, kappa: f64, terminal: Terminal) -> Result<Self> {
        if times.is_empty() || times.len() != xi.len() {
            return Err(Error::Loewner(format!(
                "time grid ({}) and driving values ({}) must be equal-length and nonempty",
                times.len(),
                xi.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::Loewner(format!("time grid must start at 0, got {}", times[0])));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Loewner("time grid must be strictly increasing".into()));
        }
        if !(kappa >= 0.0) {
            return Err(Error::Loewner(format!("kappa must be nonnegative, got {kappa}")));
        }
        let x0 = xi[0];
        match terminal {
            Terminal::Point(x) => {
                if (x - x0).abs() < COINCIDENT_TOL {
                    return Err(Error::Loewner(format!(
                        "chordal target {x} coincides with the start {x0}"
                    )));
                }
            }
            Terminal::Interval(iv) => {
                if x0 >= iv.lo - COINCIDENT_TOL && x0 <= iv.hi + COINCIDENT_TOL {
                    return Err(Error::Loewner(format!(
                        "start {x0} must lie outside the target interval {iv:?}"
                    )));
                }
            }
        }
        Ok(Self { times, xi, kappa, terminal, stopped_early: false, landing: None })
    }

    pub fn x0(&self) -> f64 {
        self.xi[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Restriction to the first `len` grid points (at least 1).
    pub fn head(&self, len: usize) -> Self {
        let len = len.clamp(1, self.times.len());
        Self {
            times: self.times[..len].to_vec(),
            xi: self.xi[..len].to_vec(),
            ..self.clone()
        }
    }

    /// The remainder from grid index `from`, with time shifted to 0.
    pub fn tail(&self, from: usize) -> Self {
        let t0 = self.times[from];
        Self {
            times: self.times[from..].iter().map(|t| t - t0).collect(),
            xi: self.xi[from..].to_vec(),
            ..self.clone()
        }
    }
}

/// One bulk observer carried along the chain: g and g' on the time grid,
/// stored while the point stays un-swallowed.
#[derive(Debug, Clone)]
pub struct TrackedPoint {
    pub z0: Complex64,
    pub g: Vec<Complex64>,
    pub dg: Vec<Complex64>,
    /// grid index at which the point was dropped; g/dg hold values for
    /// indices < swallowed_at
    pub swallowed_at: Option<usize>,
}

impl TrackedPoint {
    pub fn live_len(&self) -> usize {
        self.g.len()
    }

    pub fn is_live_at(&self, k: usize) -> bool {
        k < self.g.len()
    }
}

/// Boundary images of the terminal data, evolved by dX/dt = 2/(X - xi).
#[derive(Debug, Clone)]
pub enum BoundaryImages {
    Chordal { eta: Vec<f64> },
    Dipolar { lo: Vec<f64>, hi: Vec<f64> },
}

/// An integrated Loewner chain: the driving restricted to the integrated
/// range, tracked observers, and terminal boundary images.
#[derive(Debug, Clone)]
pub struct LoewnerChain {
    pub times: Vec<f64>,
    pub xi: Vec<f64>,
    pub kappa: f64,
    pub terminal: Terminal,
    pub points: Vec<TrackedPoint>,
    pub images: BoundaryImages,
    /// set when a terminal image was swallowed and integration stopped at
    /// this grid index
    pub truncated_at: Option<usize>,
}

impl LoewnerChain {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Terminal data mapped forward to grid index k.
    pub fn terminal_at(&self, k: usize) -> Result<Terminal> {
        match &self.images {
            BoundaryImages::Chordal { eta } => Ok(Terminal::Point(eta[k])),
            BoundaryImages::Dipolar { lo, hi } => {
                Ok(Terminal::Interval(Interval::new(lo[k], hi[k])?))
            }
        }
    }
}

/// Elementary forward slit map w -> c + sqrt((w-c)^2 + 4 dt). The branch
/// keeps the sign of Re(w - c), which maps the two sides of the slit to
/// the two sides of c and fixes the point at infinity.
pub(crate) fn slit_forward(w: Complex64, c: f64, dt: f64) -> Complex64 {
    let d = w - c;
    let s = (d * d + 4.0 * dt).sqrt();
    if d.re < 0.0 {
        c - s
    } else {
        c + s
    }
}

/// Derivative of the forward slit map at w, given the mapped value.
pub(crate) fn slit_forward_deriv(w: Complex64, mapped: Complex64, c: f64) -> Complex64 {
    (w - c) / (mapped - c)
}

/// Inverse slit map w -> c + sqrt((w-c)^2 - 4 dt), branch landing in the
/// closed upper half-plane on the same side of c as w.
pub(crate) fn slit_inverse(w: Complex64, c: f64, dt: f64) -> Complex64 {
    let d = w - c;
    let mut s = (d * d - 4.0 * dt).sqrt();
    if s.im < 0.0 || (s.im == 0.0 && d.re < 0.0 && s.re > 0.0) {
        s = -s;
    }
    c + s
}

#[derive(Clone, Copy)]
struct OdeState {
    g: Complex64,
    dg: Complex64,
}

fn rhs(state: OdeState, xi: f64) -> OdeState {
    let denom = state.g - xi;
    let v = 2.0 / denom;
    OdeState { g: v, dg: -state.dg * v / denom }
}

fn rk4_step<F: Fn(f64) -> f64>(state: OdeState, t: f64, h: f64, xi_at: &F) -> OdeState {
    let k1 = rhs(state, xi_at(t));
    let mid = |s: OdeState, k: OdeState, w: f64| OdeState { g: s.g + w * k.g, dg: s.dg + w * k.dg };
    let k2 = rhs(mid(state, k1, 0.5 * h), xi_at(t + 0.5 * h));
    let k3 = rhs(mid(state, k2, 0.5 * h), xi_at(t + 0.5 * h));
    let k4 = rhs(mid(state, k3, h), xi_at(t + h));
    OdeState {
        g: state.g + h / 6.0 * (k1.g + 2.0 * k2.g + 2.0 * k3.g + k4.g),
        dg: state.dg + h / 6.0 * (k1.dg + 2.0 * k2.dg + 2.0 * k3.dg + k4.dg),
    }
}

/// Advance one point across a grid interval with linearly interpolated
/// driving. Returns false when the point crosses the swallowing threshold
/// (state then holds the last pre-swallow value).
fn advance_point(
    state: &mut OdeState,
    t0: f64,
    t1: f64,
    xi0: f64,
    xi1: f64,
    thresh: f64,
) -> bool {
    let span = t1 - t0;
    let xi_at = move |t: f64| xi0 + (t - t0) / span * (xi1 - xi0);
    let mut t = t0;
    let mut h = span;
    let t_eps = 1e-14 * span.max(t1.abs()).max(1.0);
    while t < t1 - t_eps {
        h = h.min(t1 - t);
        let gap = (state.g - xi_at(t)).norm();
        if gap < thresh {
            return false;
        }
        if gap < 3.0 * thresh && thresh > 0.0 {
            // stiff region: exact vertical-slit substeps with the driving
            // frozen mid-substep; capacity thresh^2 resolves the approach
            let hs = (t1 - t).min(thresh * thresh);
            let c = xi_at(t + 0.5 * hs);
            let mapped = slit_forward(state.g, c, hs);
            state.dg *= slit_forward_deriv(state.g, mapped, c);
            state.g = mapped;
            t += hs;
            continue;
        }
        let full = rk4_step(*state, t, h, &xi_at);
        let half = rk4_step(*state, t, 0.5 * h, &xi_at);
        let two = rk4_step(half, t + 0.5 * h, 0.5 * h, &xi_at);
        let err = (full.g - two.g).norm()
            + (full.dg - two.dg).norm() / two.dg.norm().max(1.0);
        if err <= 15.0 * ODE_TOL {
            *state = two;
            t += h;
            if err < ODE_TOL {
                h *= 2.0;
            }
        } else {
            h *= 0.5;
        }
    }
    true
}

/// Integrate a chain, tracking the given bulk observers and the terminal
/// boundary images. Swallowed observers are recorded and dropped; a
/// swallowed terminal image truncates the chain.
pub fn integrate_chain(driving: &DrivingSample, observers: &[Complex64]) -> Result<LoewnerChain> {
    for &z in observers {
        if z.im <= 0.0 {
            return Err(Error::Loewner(format!("observer {z} not in the upper half-plane")));
        }
    }
    let m = driving.times.len();
    let mut points: Vec<TrackedPoint> = observers
        .iter()
        .map(|&z| TrackedPoint {
            z0: z,
            g: vec![z],
            dg: vec![Complex64::new(1.0, 0.0)],
            swallowed_at: None,
        })
        .collect();
    let mut image_states: Vec<OdeState> = match driving.terminal {
        Terminal::Point(x) => vec![OdeState { g: x.into(), dg: 1.0.into() }],
        Terminal::Interval(iv) => vec![
            OdeState { g: iv.lo.into(), dg: 1.0.into() },
            OdeState { g: iv.hi.into(), dg: 1.0.into() },
        ],
    };
    let mut image_tracks: Vec<Vec<f64>> =
        image_states.iter().map(|s| vec![s.g.re]).collect();
    let mut truncated_at = None;

    'grid: for k in 0..m - 1 {
        let (t0, t1) = (driving.times[k], driving.times[k + 1]);
        let (xi0, xi1) = (driving.xi[k], driving.xi[k + 1]);
        let thresh = SWALLOW_FACTOR * ((t1 - t0) * driving.kappa).sqrt();
        for (s, track) in image_states.iter_mut().zip(image_tracks.iter_mut()) {
            if !advance_point(s, t0, t1, xi0, xi1, thresh) {
                truncated_at = Some(k + 1);
                break 'grid;
            }
            track.push(s.g.re);
        }
        for p in points.iter_mut() {
            if p.swallowed_at.is_some() {
                continue;
            }
            let mut s = OdeState { g: *p.g.last().unwrap(), dg: *p.dg.last().unwrap() };
            if advance_point(&mut s, t0, t1, xi0, xi1, thresh) {
                p.g.push(s.g);
                p.dg.push(s.dg);
            } else {
                p.swallowed_at = Some(k + 1);
            }
        }
    }

    let kept = truncated_at.unwrap_or(m);
    let images = match driving.terminal {
        Terminal::Point(_) => BoundaryImages::Chordal { eta: image_tracks.swap_remove(0) },
        Terminal::Interval(_) => {
            let hi = image_tracks.swap_remove(1);
            let lo = image_tracks.swap_remove(0);
            BoundaryImages::Dipolar { lo, hi }
        }
    };
    for p in points.iter_mut() {
        p.g.truncate(kept);
        p.dg.truncate(kept);
        if let Some(s) = p.swallowed_at {
            if s >= kept {
                p.swallowed_at = None;
            }
        }
        if p.swallowed_at.is_none() && p.g.len() < kept {
            // cannot happen: live points carry a value per kept index
            return Err(Error::Loewner("tracked point lost values without swallowing".into()));
        }
    }
    Ok(LoewnerChain {
        times: driving.times[..kept].to_vec(),
        xi: driving.xi[..kept].to_vec(),
        kappa: driving.kappa,
        terminal: driving.terminal,
        points,
        images,
        truncated_at,
    })
}

/// Uniform grid helper: n_steps intervals of size dt starting at 0.
pub fn uniform_times(n_steps: usize, dt: f64) -> Vec<f64> {
    (0..=n_steps).map(|k| k as f64 * dt).collect()
}
