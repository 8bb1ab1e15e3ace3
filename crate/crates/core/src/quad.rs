//! Quadrature rules used by the exact evaluators.
//!
//! Three families cover every integral in the crate:
//!
//! * Gauss–Legendre tensor rules on rectangles and (in polar form) on disks,
//!   for smooth integrands against compactly supported fields;
//! * an adaptive panel rule on rectangles that subdivides until a local
//!   error estimate meets the requested tolerance, used when the integrand
//!   has an integrable logarithmic singularity at a known point;
//! * adaptive Simpson on intervals for one-dimensional checks.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x0 < x1 && y0 < y1) || !(x0.is_finite() && x1.is_finite() && y0.is_finite() && y1.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "degenerate rectangle [{x0}, {x1}] x [{y0}, {y1}]"
            )));
        }
        Ok(Self { x0, x1, y0, y1 })
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.x0 && z.re <= self.x1 && z.im >= self.y0 && z.im <= self.y1
    }

    fn quarters(&self) -> [Rect; 4] {
        let xm = 0.5 * (self.x0 + self.x1);
        let ym = 0.5 * (self.y0 + self.y1);
        [
            Rect { x0: self.x0, x1: xm, y0: self.y0, y1: ym },
            Rect { x0: xm, x1: self.x1, y0: self.y0, y1: ym },
            Rect { x0: self.x0, x1: xm, y0: ym, y1: self.y1 },
            Rect { x0: xm, x1: self.x1, y0: ym, y1: self.y1 },
        ]
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    if n == 1 {
        return (x, 1.0);
    }
    let d = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre tensor rule with `n` points per axis on a rectangle.
/// Returns `(node, weight)` pairs; weights sum to the rectangle area.
pub fn rect_rule(rect: Rect, n: usize) -> Vec<(Complex64, f64)> {
    let (xs, ws) = gauss_legendre(n);
    let cx = 0.5 * (rect.x0 + rect.x1);
    let hx = 0.5 * rect.width();
    let cy = 0.5 * (rect.y0 + rect.y1);
    let hy = 0.5 * rect.height();
    let mut out = Vec::with_capacity(n * n);
    for (i, &xi) in xs.iter().enumerate() {
        for (j, &yj) in xs.iter().enumerate() {
            out.push((
                Complex64::new(cx + hx * xi, cy + hy * yj),
                ws[i] * ws[j] * hx * hy,
            ));
        }
    }
    out
}

/// Polar tensor rule on a disk: Gauss–Legendre in radius (`n_r` points,
/// with the Jacobian `r` folded into the weights) and a uniform periodic
/// rule in angle (`n_theta` points, spectrally accurate for smooth data).
pub fn disk_rule(center: Complex64, radius: f64, n_r: usize, n_theta: usize) -> Vec<(Complex64, f64)> {
    let (rs, ws) = gauss_legendre(n_r);
    let dtheta = 2.0 * std::f64::consts::PI / n_theta as f64;
    let mut out = Vec::with_capacity(n_r * n_theta);
    for (i, &ri) in rs.iter().enumerate() {
        let r = 0.5 * radius * (ri + 1.0);
        let wr = 0.5 * radius * ws[i] * r;
        for k in 0..n_theta {
            let th = dtheta * k as f64;
            out.push((
                center + Complex64::new(r * th.cos(), r * th.sin()),
                wr * dtheta,
            ));
        }
    }
    out
}

/// Adaptive quadrature on a rectangle. Subdivides panels until the
/// difference between a 4-point-per-axis and an 8-point-per-axis tensor
/// rule is below a share of the tolerance. `refine_near` marks a point
/// where the integrand is allowed an integrable singularity: panels whose
/// distance to it is smaller than their diameter are split eagerly.
pub fn integrate_rect_adaptive<F>(
    f: &F,
    rect: Rect,
    rel_tol: f64,
    refine_near: Option<Complex64>,
) -> Result<f64>
where
    F: Fn(Complex64) -> f64,
{
    let coarse_rule = rect_rule(Rect { x0: -1.0, x1: 1.0, y0: -1.0, y1: 1.0 }, 4);
    let fine_rule = rect_rule(Rect { x0: -1.0, x1: 1.0, y0: -1.0, y1: 1.0 }, 8);
    let whole = eval_panel(f, rect, &fine_rule);
    let scale = whole.abs().max(1e-12);
    let mut total = 0.0;
    let mut err_total = 0.0;
    // Worklist of (panel, depth).
    let mut stack = vec![(rect, 0u32)];
    let abs_tol = rel_tol * scale;
    const MAX_DEPTH: u32 = 28;
    while let Some((panel, depth)) = stack.pop() {
        let coarse = eval_panel(f, panel, &coarse_rule);
        let fine = eval_panel(f, panel, &fine_rule);
        let err = (fine - coarse).abs();
        let near_singular = refine_near.map_or(false, |p| {
            let d = (panel.center() - p).norm();
            d < panel.width().hypot(panel.height())
        });
        let budget = abs_tol * (panel.area() / rect.area()).max(1e-6);
        if depth >= MAX_DEPTH || (err <= budget && !(near_singular && depth < 6)) {
            total += fine;
            err_total += err;
        } else {
            for q in panel.quarters() {
                stack.push((q, depth + 1));
            }
        }
    }
    if err_total > 10.0 * abs_tol.max(1e-300) && err_total > 1e-10 * total.abs() {
        return Err(Error::QuadratureDidNotConverge { error: err_total });
    }
    Ok(total)
}

fn eval_panel<F: Fn(Complex64) -> f64>(f: &F, panel: Rect, unit_rule: &[(Complex64, f64)]) -> f64 {
    let cx = 0.5 * (panel.x0 + panel.x1);
    let hx = 0.5 * panel.width();
    let cy = 0.5 * (panel.y0 + panel.y1);
    let hy = 0.5 * panel.height();
    let jac = hx * hy;
    let mut sum = 0.0;
    for &(u, w) in unit_rule {
        sum += w * jac * f(Complex64::new(cx + hx * u.re, cy + hy * u.im));
    }
    sum
}

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate_interval<F>(f: &F, a: f64, b: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        let delta = left + right - whole;
        if depth > 50 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 0)
}
