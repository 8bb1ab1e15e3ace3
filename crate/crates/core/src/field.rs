//! Compactly supported perturbing fields `nu` on the upper half-plane.
//!
//! A field is an amplitude times a fixed profile shape. Shapes are chosen so
//! that integrals against smooth kernels have a natural high-order rule:
//! disks integrate in polar coordinates, rectangles with a tensor
//! Gauss-Legendre rule. The node lists double as observer seeds for Loewner
//! chains, which is why they are exposed rather than hidden behind an
//! `integrate` call.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, Rect};

/// Profile of the field, before scaling by the amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum NuShape {
    /// Indicator of an axis-aligned rectangle.
    ConstantBox { x0: f64, x1: f64, y0: f64, y1: f64 },
    /// Indicator of a disk (must stay inside the open half-plane).
    Disk { center_x: f64, center_y: f64, radius: f64 },
    /// Gaussian bump truncated to a rectangle.
    GaussianBox { center_x: f64, center_y: f64, sigma: f64, x0: f64, x1: f64, y0: f64, y1: f64 },
}

/// A nonnegative field `nu(z) = amplitude * profile(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuField {
    pub amplitude: f64,
    #[serde(flatten)]
    pub shape: NuShape,
}

/// Node count class for quadrature-node generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeLevel {
    /// Few nodes; used when every node is also a tracked Monte Carlo observer.
    Coarse,
    /// Dense nodes for pure quadrature.
    Fine,
}

impl NuField {
    pub fn new(amplitude: f64, shape: NuShape) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "field amplitude must be finite and nonnegative, got {amplitude}"
            )));
        }
        match shape {
            NuShape::ConstantBox { x0, x1, y0, y1 } | NuShape::GaussianBox { x0, x1, y0, y1, .. } => {
                Rect::new(x0, x1, y0, y1)?;
                if y0 < 0.0 {
                    return Err(Error::InvalidGeometry(
                        "field support must lie in the closed upper half-plane".into(),
                    ));
                }
            }
            NuShape::Disk { center_y, radius, .. } => {
                if !(radius > 0.0) {
                    return Err(Error::InvalidGeometry(format!("disk radius must be positive, got {radius}")));
                }
                if center_y - radius < 0.0 {
                    return Err(Error::InvalidGeometry(
                        "disk support must lie in the closed upper half-plane".into(),
                    ));
                }
            }
        }
        Ok(Self { amplitude, shape })
    }

    /// Constant field `amplitude` on the rectangle `[x0, x1] x [y0, y1]`.
    pub fn constant_box(amplitude: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        Self::new(amplitude, NuShape::ConstantBox { x0, x1, y0, y1 })
    }

    /// Constant field `amplitude` on the disk of given center and radius.
    pub fn disk(amplitude: f64, center_x: f64, center_y: f64, radius: f64) -> Result<Self> {
        Self::new(amplitude, NuShape::Disk { center_x, center_y, radius })
    }

    /// A zero field (empty support placeholder with amplitude zero).
    pub fn zero() -> Self {
        Self {
            amplitude: 0.0,
            shape: NuShape::Disk { center_x: 0.0, center_y: 1.0, radius: 1e-3 },
        }
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude == 0.0
    }

    /// Field value at a point.
    #[inline]
    pub fn eval(&self, z: Complex64) -> f64 {
        self.amplitude * self.profile(z)
    }

    /// Profile value (amplitude stripped).
    #[inline]
    pub fn profile(&self, z: Complex64) -> f64 {
        match self.shape {
            NuShape::ConstantBox { x0, x1, y0, y1 } => {
                if z.re >= x0 && z.re <= x1 && z.im >= y0 && z.im <= y1 {
                    1.0
                } else {
                    0.0
                }
            }
            NuShape::Disk { center_x, center_y, radius } => {
                let dx = z.re - center_x;
                let dy = z.im - center_y;
                if dx * dx + dy * dy <= radius * radius {
                    1.0
                } else {
                    0.0
                }
            }
            NuShape::GaussianBox { center_x, center_y, sigma, x0, x1, y0, y1 } => {
                if z.re >= x0 && z.re <= x1 && z.im >= y0 && z.im <= y1 {
                    let dx = z.re - center_x;
                    let dy = z.im - center_y;
                    (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// Tight axis-aligned bounding box of the support.
    pub fn support_box(&self) -> Rect {
        match self.shape {
            NuShape::ConstantBox { x0, x1, y0, y1 } | NuShape::GaussianBox { x0, x1, y0, y1, .. } => {
                Rect { x0, x1, y0, y1 }
            }
            NuShape::Disk { center_x, center_y, radius } => Rect {
                x0: center_x - radius,
                x1: center_x + radius,
                y0: center_y - radius,
                y1: center_y + radius,
            },
        }
    }

    /// Quadrature nodes `(z_i, w_i)` such that `integral nu f = sum w_i f(z_i)`
    /// for smooth `f`; the field value (amplitude included) is folded into the
    /// weights. Nodes lie in the open support, so they can be tracked as
    /// Loewner observers.
    pub fn quadrature_nodes(&self, level: NodeLevel) -> Vec<(Complex64, f64)> {
        if self.is_zero() {
            return Vec::new();
        }
        let (n_r, n_t, n_sq) = match level {
            NodeLevel::Coarse => (8, 16, 12),
            NodeLevel::Fine => (32, 64, 40),
        };
        let mut nodes = match self.shape {
            NuShape::Disk { center_x, center_y, radius } => {
                quad::disk_rule(Complex64::new(center_x, center_y), radius, n_r, n_t)
            }
            NuShape::ConstantBox { x0, x1, y0, y1 } | NuShape::GaussianBox { x0, x1, y0, y1, .. } => {
                quad::rect_rule(Rect { x0, x1, y0, y1 }, n_sq)
            }
        };
        for (z, w) in nodes.iter_mut() {
            *w *= self.eval(*z);
        }
        nodes
    }

    /// `integral nu(z) f(z) d^2z` with a rule adapted to the support shape.
    pub fn integrate<F: Fn(Complex64) -> f64>(&self, level: NodeLevel, f: F) -> f64 {
        self.quadrature_nodes(level)
            .iter()
            .map(|&(z, w)| w * f(z))
            .sum()
    }

    /// Total mass `integral nu d^2z`.
    pub fn mass(&self) -> f64 {
        self.integrate(NodeLevel::Fine, |_| 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn disk_mass_is_area_times_amplitude() {
        let nu = NuField::new(0.2, NuShape::Disk { center_x: 0.0, center_y: 2.0, radius: 0.5 }).unwrap();
        assert_relative_eq!(nu.mass(), 0.2 * std::f64::consts::PI * 0.25, epsilon = 1e-10);
    }

    #[test]
    fn gaussian_box_integrates_like_2d_gaussian() {
        // Wide truncation window: mass ~ amplitude * 2 pi sigma^2.
        let nu = NuField::new(
            1.3,
            NuShape::GaussianBox {
                center_x: 0.0,
                center_y: 3.0,
                sigma: 0.2,
                x0: -1.5,
                x1: 1.5,
                y0: 1.5,
                y1: 4.5,
            },
        )
        .unwrap();
        assert_relative_eq!(
            nu.mass(),
            1.3 * 2.0 * std::f64::consts::PI * 0.04,
            max_relative = 1e-8
        );
    }

    #[test]
    fn supports_must_avoid_lower_half_plane() {
        assert!(NuField::new(1.0, NuShape::Disk { center_x: 0.0, center_y: 0.3, radius: 0.5 }).is_err());
        assert!(NuField::new(
            1.0,
            NuShape::ConstantBox { x0: 0.0, x1: 1.0, y0: -0.1, y1: 1.0 }
        )
        .is_err());
        assert!(NuField::new(-0.5, NuShape::Disk { center_x: 0.0, center_y: 2.0, radius: 0.5 }).is_err());
    }

    #[test]
    fn coarse_and_fine_nodes_agree_on_smooth_integrands() {
        let nu = NuField::new(0.7, NuShape::Disk { center_x: 0.4, center_y: 1.8, radius: 0.6 }).unwrap();
        let f = |z: Complex64| (z.re * 0.8).cos() * (-z.im * 0.3).exp();
        let coarse = nu.integrate(NodeLevel::Coarse, f);
        let fine = nu.integrate(NodeLevel::Fine, f);
        assert_relative_eq!(coarse, fine, max_relative = 1e-8);
    }
}
