//! Smooth manufactured solution on the unit square.
//!
//! `u = sin(pi t) w`, `w = (-cos(pi x) cos(pi y), sin(pi x) sin(pi y))` and
//! `p = -cos(pi t) sin(pi x) cos(pi y)`; loads follow from the equations.

use std::f64::consts::PI;

use nalgebra::{Point2, Vector2};

use crate::problem::{BiotData, Physics};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Manufactured {
    pub mu: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub c0: f64,
}

impl Default for Manufactured {
    fn default() -> Self {
        Self { mu: 1.0, lambda: 1.0, kappa: 1.0, c0: 0.0 }
    }
}

fn shape(x: &Point2<f64>) -> [f64; 2] {
    let (cx, sx) = ((PI * x.x).cos(), (PI * x.x).sin());
    let (cy, sy) = ((PI * x.y).cos(), (PI * x.y).sin());
    [-cx * cy, sx * sy]
}

impl Manufactured {
    pub fn physics(&self) -> Physics {
        Physics::new(self.mu, self.lambda, self.c0, self.kappa)
    }

    pub fn displacement(&self, x: &Point2<f64>, t: f64) -> [f64; 2] {
        let s = (PI * t).sin();
        let w = shape(x);
        [s * w[0], s * w[1]]
    }

    pub fn pressure(&self, x: &Point2<f64>, t: f64) -> f64 {
        -(PI * t).cos() * (PI * x.x).sin() * (PI * x.y).cos()
    }

    pub fn pressure_gradient(&self, x: &Point2<f64>, t: f64) -> [f64; 2] {
        // grad p = pi cos(pi t) w
        let w = shape(x);
        let c = PI * (PI * t).cos();
        [c * w[0], c * w[1]]
    }
}

impl BiotData for Manufactured {
    fn load(&self, x: &Point2<f64>, t: f64) -> [f64; 2] {
        // -div sigma(w) = (4 mu + 2 lambda) pi^2 w
        let a = (4.0 * self.mu + 2.0 * self.lambda) * PI * PI * (PI * t).sin() + PI * (PI * t).cos();
        let w = shape(x);
        [a * w[0], a * w[1]]
    }

    fn source(&self, x: &Point2<f64>, t: f64) -> f64 {
        let s = (PI * x.x).sin() * (PI * x.y).cos();
        let div_dt = 2.0 * PI * PI * (PI * t).cos() * s;
        let lap = 2.0 * PI * PI * (PI * t).cos() * s;
        self.c0 * PI * (PI * t).sin() * s + div_dt - self.kappa * lap
    }

    fn boundary_displacement(&self, x: &Point2<f64>, t: f64) -> [f64; 2] {
        self.displacement(x, t)
    }

    fn boundary_flux(&self, x: &Point2<f64>, n: &Vector2<f64>, t: f64) -> f64 {
        let g = self.pressure_gradient(x, t);
        self.kappa * (g[0] * n.x + g[1] * n.y)
    }

    fn initial_pressure(&self, x: &Point2<f64>) -> f64 {
        self.pressure(x, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_values() {
        let m = Manufactured::default();
        let x = Point2::new(0.37, 0.81);
        assert_eq!(m.displacement(&x, 0.0), [0.0, 0.0]);
        assert!((m.pressure(&Point2::new(0.5, 0.0), 0.0) + 1.0).abs() < 1e-15);
        assert_eq!(m.source(&x, 0.4), 0.0);
    }
}
