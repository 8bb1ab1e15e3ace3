//! Exact kernels of the upper half-plane `H = {Im z > 0}`.
//!
//! Conventions, fixed once for the whole crate:
//!
//! * `green_h` is the Dirichlet Green's function normalized so that
//!   `Delta_z G(z, w) = -2 delta(z - w)`; with this normalization it is the
//!   expected local time density at `w` of a standard Brownian motion started
//!   at `z` and killed on the real axis.
//! * `excursion_kernel` is the boundary derivative
//!   `K(x0; z) = lim_{d -> 0} G(x0 + i d, z)/d = -(2/pi) Im 1/(z - x0)`.
//! * `harmonic_measure_h(z, I)` is the probability that Brownian motion from
//!   `z` exits `H` through the interval `I`; each endpoint contributes one
//!   `atan2`, which keeps the value exact for intervals spanning the point
//!   below `z` (no branch-cut surprises).
//!
//! Boundary intervals are ordered `lo < hi`.

pub mod grid;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Points closer than this are treated as coincident and rejected.
pub const COINCIDENT_TOL: f64 = 1e-12;

const FRAC_1_PI: f64 = std::f64::consts::FRAC_1_PI;

/// A boundary interval `[lo, hi]` on the real axis, `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi - lo < COINCIDENT_TOL {
            return Err(Error::InvalidGeometry(format!(
                "interval endpoints must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Strict containment of another interval (shared endpoints allowed).
    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

fn require_upper(z: Complex64, what: &str) -> Result<()> {
    if !(z.im > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "{what} must lie in the open upper half-plane, got {z}"
        )));
    }
    Ok(())
}

/// Dirichlet Green's function of the upper half-plane,
/// `G(z, w) = -(1/pi) log |z - w| / |z - conj(w)|`, normalized by
/// `Delta G = -2 delta`.
pub fn green_h(z: Complex64, w: Complex64) -> Result<f64> {
    require_upper(z, "green_h argument z")?;
    require_upper(w, "green_h argument w")?;
    let d = (z - w).norm();
    if d < COINCIDENT_TOL {
        return Err(Error::CoincidentPoints(format!("green_h({z}, {w})")));
    }
    Ok(-FRAC_1_PI * (d / (z - w.conj()).norm()).ln())
}

/// Excursion (boundary Poisson) kernel `K(x0; z) = -(2/pi) Im 1/(z - x0)`,
/// positive for `z` in the upper half-plane.
pub fn excursion_kernel(x0: f64, z: Complex64) -> Result<f64> {
    require_upper(z, "excursion_kernel argument z")?;
    if (z - Complex64::new(x0, 0.0)).norm() < COINCIDENT_TOL {
        return Err(Error::CoincidentPoints(format!("excursion_kernel({x0}, {z})")));
    }
    Ok(-2.0 * FRAC_1_PI * (1.0 / (z - x0)).im)
}

/// Harmonic measure of the boundary interval `I` seen from `z`:
/// `(1/pi) * (arg(z - hi) - arg(z - lo))`.
pub fn harmonic_measure_h(z: Complex64, interval: Interval) -> Result<f64> {
    require_upper(z, "harmonic_measure_h argument z")?;
    let a_hi = (z - interval.hi).arg();
    let a_lo = (z - interval.lo).arg();
    Ok(FRAC_1_PI * (a_hi - a_lo))
}

/// Conformal radius of a point with respect to the evolving domain, from the
/// uniformizing map value `g(z)` and its derivative:
/// `rho = 2 Im g(z) / |g'(z)|`.
pub fn conformal_radius(g_of_z: Complex64, gprime_of_z: Complex64) -> Result<f64> {
    if !(g_of_z.im > 0.0) {
        return Err(Error::PointSwallowed { time: f64::NAN });
    }
    let dg = gprime_of_z.norm();
    if dg < COINCIDENT_TOL {
        return Err(Error::InvalidGeometry(
            "conformal_radius needs a nonzero map derivative".into(),
        ));
    }
    Ok(2.0 * g_of_z.im / dg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use crate::quad::integrate_interval;

    const I: Complex64 = Complex64::new(0.0, 1.0);

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn green_on_imaginary_axis() {
        // |i - 2i| = 1, |i + 2i| = 3.
        let g = green_h(I, c(0.0, 2.0)).unwrap();
        assert_relative_eq!(g, 3f64.ln() / std::f64::consts::PI, epsilon = 1e-15);
    }

    #[test]
    fn green_is_symmetric() {
        let pts = [c(0.3, 0.7), c(-1.2, 2.5), c(4.0, 0.01), c(-0.33, 1.4142)];
        for &z in &pts {
            for &w in &pts {
                if (z - w).norm() < 1e-9 {
                    continue;
                }
                assert_relative_eq!(
                    green_h(z, w).unwrap(),
                    green_h(w, z).unwrap(),
                    epsilon = 1e-15
                );
            }
        }
    }

    #[test]
    fn green_rejects_coincident_and_lower_half() {
        assert!(matches!(green_h(I, I), Err(Error::CoincidentPoints(_))));
        assert!(green_h(c(0.0, -1.0), I).is_err());
        assert!(green_h(I, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn green_is_moebius_invariant() {
        // Real Moebius maps with positive determinant preserve H and G.
        let maps = [
            (1.0, 2.0, 0.0, 1.0),
            (2.0, -1.0, 1.0, 1.0),
            (0.0, 1.0, -1.0, 0.0),
            (3.0, 0.5, 0.7, 1.1),
        ];
        let pairs = [(c(0.4, 0.8), c(-1.0, 2.0)), (c(2.0, 0.3), c(2.5, 1.7))];
        for &(a, b, cc, d) in &maps {
            assert!(a * d - b * cc > 0.0);
            let phi = |z: Complex64| (a * z + b) / (cc * z + d);
            for &(z, w) in &pairs {
                assert_relative_eq!(
                    green_h(phi(z), phi(w)).unwrap(),
                    green_h(z, w).unwrap(),
                    epsilon = 1e-12,
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn excursion_kernel_basic_values() {
        assert_relative_eq!(
            excursion_kernel(0.0, I).unwrap(),
            2.0 * FRAC_1_PI,
            epsilon = 1e-15
        );
        // K(x0; x0 + iy) = (2/pi)/y
        assert_relative_eq!(
            excursion_kernel(1.5, c(1.5, 0.25)).unwrap(),
            2.0 * FRAC_1_PI / 0.25,
            epsilon = 1e-13
        );
        assert!(excursion_kernel(-2.0, c(3.0, 0.8)).unwrap() > 0.0);
    }

    #[test]
    fn excursion_kernel_is_boundary_derivative_of_green() {
        let z = c(0.7, 1.3);
        let x0 = -0.4;
        let k = excursion_kernel(x0, z).unwrap();
        let mut prev_err = f64::INFINITY;
        for &delta in &[1e-2, 1e-3, 1e-4] {
            let approx_k = green_h(c(x0, delta), z).unwrap() / delta;
            let err = (approx_k - k).abs();
            assert!(err < prev_err);
            prev_err = err;
        }
        assert!(prev_err < 1e-4 * k.abs());
    }

    #[test]
    fn harmonic_measure_symmetric_interval() {
        let h = harmonic_measure_h(I, Interval::new(-1.0, 1.0).unwrap()).unwrap();
        assert_relative_eq!(h, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn harmonic_measure_is_additive_and_bounded() {
        let z = c(0.37, 0.9);
        let whole = Interval::new(-2.0, 3.0).unwrap();
        let left = Interval::new(-2.0, 0.5).unwrap();
        let right = Interval::new(0.5, 3.0).unwrap();
        let hw = harmonic_measure_h(z, whole).unwrap();
        let hl = harmonic_measure_h(z, left).unwrap();
        let hr = harmonic_measure_h(z, right).unwrap();
        assert_relative_eq!(hw, hl + hr, epsilon = 1e-14);
        for h in [hw, hl, hr] {
            assert!(h > 0.0 && h < 1.0);
        }
        // Whole line has measure 1.
        let line = harmonic_measure_h(z, Interval::new(-1e12, 1e12).unwrap()).unwrap();
        assert!((line - 1.0).abs() < 1e-11);
    }

    #[test]
    fn harmonic_measure_near_boundary_limits() {
        let interval = Interval::new(1.0, 2.0).unwrap();
        let inside = harmonic_measure_h(c(1.5, 1e-9), interval).unwrap();
        let outside = harmonic_measure_h(c(5.0, 1e-9), interval).unwrap();
        assert!((inside - 1.0).abs() < 1e-8);
        assert!(outside < 1e-8);
    }

    #[test]
    fn excursion_kernel_integrates_to_twice_harmonic_measure() {
        // int_I K(x; z) dx = 2 H(z, I)
        let z = c(0.2, 1.1);
        let interval = Interval::new(0.8, 2.6).unwrap();
        let integral = integrate_interval(
            &|x| excursion_kernel(x, z).unwrap(),
            interval.lo,
            interval.hi,
            1e-12,
        );
        let h = harmonic_measure_h(z, interval).unwrap();
        assert_relative_eq!(integral, 2.0 * h, epsilon = 1e-10);
    }

    #[test]
    fn conformal_radius_of_zero_driving_map() {
        // g_t(z) = sqrt(z^2 + 4t) solves the zero-driving Loewner equation.
        // At z = 4i, t = 1: g = 2 sqrt(3) i, g' = z/g = 2/sqrt(3), rho = 6.
        let z = c(0.0, 4.0);
        let t = 1.0;
        let g = (z * z + 4.0 * t).sqrt();
        let gp = z / g;
        assert_relative_eq!(conformal_radius(g, gp).unwrap(), 6.0, epsilon = 1e-12);
        // Fresh point: rho equals twice the height.
        assert_relative_eq!(conformal_radius(c(0.3, 0.9), c(1.0, 0.0)).unwrap(), 1.8);
    }

    #[test]
    fn conformal_radius_rejects_swallowed_points() {
        assert!(conformal_radius(c(1.0, 0.0), c(1.0, 0.0)).is_err());
        assert!(conformal_radius(c(1.0, -0.5), c(1.0, 0.0)).is_err());
    }
}
