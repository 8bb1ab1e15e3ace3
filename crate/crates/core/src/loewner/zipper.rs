//! Zipper algorithms: unzip a simple curve into its driving function by
//! composing elementary vertical-slit maps, and rebuild a polyline trace
//! from a driving function by composing the inverse maps.

use num_complex::Complex64;
use std::collections::HashSet;

use crate::correlators::Terminal;
use crate::error::{Error, Result};

use super::{slit_forward, slit_inverse, DrivingSample};

/// A simple polyline started on the real axis, all later vertices in the
/// open upper half-plane.
#[derive(Debug, Clone)]
pub struct CurvePolyline {
    vertices: Vec<Complex64>,
}

impl CurvePolyline {
    /// Validates shape and polyline simplicity. The simplicity check is
    /// quadratic in the vertex count; lattice paths should come through
    /// `from_lattice_path`, which certifies simplicity in linear time.
    pub fn new(vertices: Vec<Complex64>) -> Result<Self> {
        Self::validate_shape(&vertices)?;
        if let Some((i, j)) = first_self_intersection(&vertices) {
            return Err(Error::InvalidPath(format!(
                "polyline segments {i} and {j} intersect: curve is not simple"
            )));
        }
        Ok(Self { vertices })
    }

    fn validate_shape(vertices: &[Complex64]) -> Result<()> {
        if vertices.len() < 2 {
            return Err(Error::InvalidPath("polyline needs at least two vertices".into()));
        }
        if vertices[0].im.abs() > 1e-12 {
            return Err(Error::InvalidPath(format!(
                "polyline must start on the real axis, got {}",
                vertices[0]
            )));
        }
        for (k, v) in vertices.iter().enumerate().skip(1) {
            if v.im <= 0.0 {
                return Err(Error::InvalidPath(format!(
                    "vertex {k} = {v} not in the open upper half-plane"
                )));
            }
        }
        if vertices.windows(2).any(|w| (w[1] - w[0]).norm() == 0.0) {
            return Err(Error::InvalidPath("repeated consecutive vertices".into()));
        }
        Ok(())
    }

    /// Build from a lattice walk given as sites of spacing `mesh`. The
    /// first site must sit one row above the real axis (its foot becomes
    /// the initial boundary vertex); a single trailing row-zero site (the
    /// absorption point) is dropped. Distinct sites certify simplicity for
    /// axis-step paths.
    pub fn from_lattice_path(path: &[(i32, i32)], mesh: f64) -> Result<Self> {
        if path.is_empty() {
            return Err(Error::InvalidPath("empty lattice path".into()));
        }
        if path[0].1 != 1 {
            return Err(Error::InvalidPath(format!(
                "lattice path must start one row above the axis, got iy = {}",
                path[0].1
            )));
        }
        let mut sites = path;
        if let Some(&(_, iy)) = sites.last() {
            if iy == 0 {
                sites = &sites[..sites.len() - 1];
            }
        }
        let mut seen = HashSet::with_capacity(sites.len());
        for (k, &(ix, iy)) in sites.iter().enumerate() {
            if iy < 1 {
                return Err(Error::InvalidPath(format!(
                    "interior site {k} at row {iy}; only the final site may touch the axis"
                )));
            }
            if !seen.insert((ix, iy)) {
                return Err(Error::InvalidPath(format!(
                    "site ({ix}, {iy}) repeats: lattice path is not loop-erased"
                )));
            }
        }
        let mut vertices = Vec::with_capacity(sites.len() + 1);
        vertices.push(Complex64::new(path[0].0 as f64 * mesh, 0.0));
        vertices.extend(
            sites.iter().map(|&(ix, iy)| Complex64::new(ix as f64 * mesh, iy as f64 * mesh)),
        );
        Self::validate_shape(&vertices)?;
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// First `len` vertices as a new polyline (skips re-validation).
    pub fn head(&self, len: usize) -> Result<Self> {
        if len < 2 || len > self.vertices.len() {
            return Err(Error::InvalidPath(format!("cannot take {len} vertices")));
        }
        Ok(Self { vertices: self.vertices[..len].to_vec() })
    }
}

/// Index pair of the first intersecting non-adjacent segment pair, if any.
fn first_self_intersection(vertices: &[Complex64]) -> Option<(usize, usize)> {
    let n = vertices.len();
    for i in 0..n.saturating_sub(1) {
        for j in i + 2..n - 1 {
            if segments_intersect(
                vertices[i],
                vertices[i + 1],
                vertices[j],
                vertices[j + 1],
            ) {
                return Some((i, j));
            }
        }
    }
    None
}

fn orient(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    (b.re - a.re) * (c.im - a.im) - (b.im - a.im) * (c.re - a.re)
}

fn on_segment(a: Complex64, b: Complex64, p: Complex64) -> bool {
    p.re >= a.re.min(b.re) - 1e-12
        && p.re <= a.re.max(b.re) + 1e-12
        && p.im >= a.im.min(b.im) - 1e-12
        && p.im <= a.im.max(b.im) + 1e-12
}

fn segments_intersect(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if ((o1 > 0.0) != (o2 > 0.0)) && ((o3 > 0.0) != (o4 > 0.0)) && o1 != 0.0 && o2 != 0.0 {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// Unzip a polyline into a piecewise driving function. Vertex k is pulled
/// to the real axis by an elementary slit of capacity (Im w_k)^2/4 rooted
/// at Re w_k, where w_k is its image under the maps of the earlier
/// vertices. A later vertex whose image degenerates to the axis exposes a
/// non-simple curve missed by polyline validation.
pub fn extract_driving(curve: &CurvePolyline, terminal: Terminal) -> Result<DrivingSample> {
    extract_driving_capped(curve, terminal, f64::INFINITY)
}

/// As `extract_driving`, but stops once the accumulated capacity exceeds
/// `max_capacity`. Each vertex image is composed lazily from the stored
/// slits, so the cost is quadratic in the number of vertices actually
/// unzipped, not in the polyline length; statistics over a short capacity
/// window of long walks stay cheap.
pub fn extract_driving_capped(
    curve: &CurvePolyline,
    terminal: Terminal,
    max_capacity: f64,
) -> Result<DrivingSample> {
    let verts = curve.vertices();
    let m = verts.len() - 1;
    let mut slits: Vec<(f64, f64)> = Vec::new();
    let mut times = vec![0.0];
    let mut xi = vec![verts[0].re];
    let mut t = 0.0;
    for k in 0..m {
        let mut w = verts[k + 1];
        for &(c, dt) in &slits {
            w = slit_forward(w, c, dt);
            if w.im <= 1e-12 * (1.0 + w.norm()) {
                return Err(Error::InvalidPath(format!(
                    "vertex {} was swallowed during unzipping: curve is not simple",
                    k + 1
                )));
            }
        }
        if w.im <= 1e-12 * (1.0 + w.norm()) {
            return Err(Error::InvalidPath(format!(
                "vertex {} sits on the real axis after unzipping: curve is not simple",
                k + 1
            )));
        }
        let c = w.re;
        let dt = 0.25 * w.im * w.im;
        slits.push((c, dt));
        if t + dt > t {
            t += dt;
            times.push(t);
            xi.push(c);
        } else {
            // Deep in a fjord |g'| at the tip can be so small that the
            // chord's capacity rounds to zero against the accumulated
            // time. Fold the vertex into the previous grid point rather
            // than emit a duplicate time.
            *xi.last_mut().expect("grid starts nonempty") = c;
        }
        if t >= max_capacity {
            break;
        }
    }
    DrivingSample::new(times, xi, 2.0, terminal)
}

/// Rebuild a polyline trace from a driving function: the tip at time t_k
/// is the pullback of xi(t_k) + i h_tip through the inverse elementary
/// slit maps. h_tip = 0 places vertices on the reconstructed tip itself;
/// a small positive value (a fraction of sqrt(dt)) lifts them slightly
/// for robustness on rough drivings.
pub fn reconstruct_trace(driving: &DrivingSample, h_tip: f64) -> Result<CurvePolyline> {
    if h_tip < 0.0 {
        return Err(Error::Loewner(format!("h_tip must be nonnegative, got {h_tip}")));
    }
    let m = driving.times.len();
    if m < 2 {
        return Err(Error::Loewner("driving needs at least one interval".into()));
    }
    let mut vertices = Vec::with_capacity(m);
    vertices.push(Complex64::new(driving.xi[0], 0.0));
    for k in 1..m {
        let mut w = Complex64::new(driving.xi[k], h_tip);
        for j in (0..k).rev() {
            let dt = driving.times[j + 1] - driving.times[j];
            w = slit_inverse(w, driving.xi[j + 1], dt);
        }
        if w.im <= 0.0 {
            return Err(Error::Loewner(format!(
                "reconstructed vertex {k} fell onto the axis; driving too rough for its grid"
            )));
        }
        vertices.push(w);
    }
    CurvePolyline::new(vertices)
}

/// One re-extracted driving from a subsampled reference trace.
#[derive(Debug, Clone)]
pub struct RoundtripSample {
    /// capacity grid of the re-extracted driving
    pub times: Vec<f64>,
    /// re-extracted driving values
    pub xi: Vec<f64>,
    /// root-mean-square error against the true driving on the evaluation window
    pub rms: f64,
    /// chord count of the subsampled polyline
    pub n_vertices: usize,
}

/// Extraction accuracy at two vertex counts of the same underlying curve.
#[derive(Debug, Clone)]
pub struct RoundtripPair {
    /// `n_vertices` chords
    pub coarse: RoundtripSample,
    /// `2 n_vertices` chords
    pub fine: RoundtripSample,
}

/// Measures extraction accuracy for a known driving function: builds one
/// reference trace with `2 * n_vertices * oversample` reconstruction steps
/// out to capacity `t_end`, keeps every `2 oversample`-th respectively
/// `oversample`-th vertex, re-extracts each driving, and reports RMS
/// errors over grid times up to `t_eval_hi`.
///
/// Subsampling makes extraction see genuine chords of the curve rather
/// than its own elementary slits (extraction inverts those to float
/// precision, which would test nothing). Both vertex counts cut the same
/// reference curve, so the comparison isolates the chord scale; and the
/// evaluation window must sit strictly inside `t_end` because subsampled
/// polylines lose a little capacity to corner cutting, leaving grids of
/// different lengths past the common part.
pub fn roundtrip_pair<F: Fn(f64) -> f64>(
    xi: F,
    n_vertices: usize,
    oversample: usize,
    t_end: f64,
    t_eval_hi: f64,
    terminal: Terminal,
) -> Result<RoundtripPair> {
    if n_vertices < 2 || oversample < 2 {
        return Err(Error::Loewner(format!(
            "need n_vertices >= 2 and oversample >= 2, got {n_vertices} and {oversample}"
        )));
    }
    if !(t_end > 0.0 && t_eval_hi > 0.0 && t_eval_hi <= t_end) {
        return Err(Error::Loewner(format!(
            "need 0 < t_eval_hi <= t_end, got {t_eval_hi} and {t_end}"
        )));
    }
    let n_fine = 2 * n_vertices * oversample;
    let dt = t_end / n_fine as f64;
    let times: Vec<f64> = (0..=n_fine).map(|k| k as f64 * dt).collect();
    let values: Vec<f64> = times.iter().map(|&t| xi(t)).collect();
    let trace = reconstruct_trace(&DrivingSample::new(times, values, 0.0, terminal)?, 0.0)?;
    let subsample = |step: usize| -> Result<RoundtripSample> {
        let verts: Vec<Complex64> = trace.vertices().iter().copied().step_by(step).collect();
        let chords = verts.len() - 1;
        let back = extract_driving(&CurvePolyline::new(verts)?, terminal)?;
        let mut sum = 0.0;
        let mut m = 0usize;
        for (k, &t) in back.times.iter().enumerate() {
            if t <= t_eval_hi {
                let e = back.xi[k] - xi(t);
                sum += e * e;
                m += 1;
            }
        }
        if m == 0 {
            return Err(Error::Loewner(format!(
                "no extracted grid point fell below t_eval_hi = {t_eval_hi}"
            )));
        }
        Ok(RoundtripSample {
            times: back.times,
            xi: back.xi,
            rms: (sum / m as f64).sqrt(),
            n_vertices: chords,
        })
    };
    Ok(RoundtripPair {
        coarse: subsample(2 * oversample)?,
        fine: subsample(oversample)?,
    })
}
