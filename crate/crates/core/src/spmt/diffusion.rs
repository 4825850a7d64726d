//! Solid-phase diffusion in a spherical particle.
//!
//! Vertex-centred finite volumes on `n` uniformly spaced nodes `r_i = i R/(n-1)`.
//! Node `i` owns the shell between the neighbouring midpoints (half shells at
//! the centre and at the surface), so the surface node is the surface
//! concentration. Fluxes cross shell faces with area `4π r²`, which makes the
//! volume-weighted sum change only through the prescribed surface flux:
//!
//! ```text
//! d/dt Σ w_i c_i = -3 j_n / R_s,    w_i = shell volume / particle volume
//! ```
//!
//! Time integration is Crank-Nicolson with a tridiagonal solve per step.

use super::kinetics::OutOfRange;

/// Geometry of a radial grid; independent of particle radius once normalised.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalGrid {
    /// Volume fraction owned by each node, summing to one.
    weights: Vec<f64>,
    /// Squared normalised radius of the face between node `i` and `i + 1`.
    face_area: Vec<f64>,
    spacing: f64,
}

impl SphericalGrid {
    /// # Panics
    /// If `n < 3`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 3, "a radial grid needs at least 3 nodes, got {n}");
        let spacing = 1.0 / (n - 1) as f64;
        let faces: Vec<f64> = (0..n - 1).map(|i| (i as f64 + 0.5) * spacing).collect();
        let mut weights = Vec::with_capacity(n);
        let mut inner = 0.0_f64;
        for outer in faces.iter().copied().chain([1.0]) {
            weights.push(outer.powi(3) - inner.powi(3));
            inner = outer;
        }
        let face_area = faces.iter().map(|x| x * x).collect();
        Self {
            weights,
            face_area,
            spacing,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Normalised node positions `r_i / R_s`.
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| i as f64 * self.spacing)
    }

    /// Volume average of `c`.
    pub fn average(&self, c: &[f64]) -> f64 {
        debug_assert_eq!(c.len(), self.len());
        self.weights.iter().zip(c).map(|(w, c)| w * c).sum()
    }

    /// Advance `c` by one Crank-Nicolson step of length `dt` under surface
    /// flux `j_n` (positive = lithium leaving the particle). Fails without
    /// touching `c` if any node would leave `[0, c_max]`.
    pub fn step(
        &self,
        c: &mut [f64],
        d_s: f64,
        j_n: f64,
        dt: f64,
        r_s: f64,
        c_max: f64,
    ) -> Result<(), OutOfRange> {
        let n = self.len();
        assert_eq!(c.len(), n, "concentration vector does not match grid");

        // w_i dc_i/dt = g_i (c_{i+1} - c_i) - g_{i-1} (c_i - c_{i-1}) - (3 j / R) δ_{i,n-1}
        // Solved for the increment, so a flat profile without flux stays bit-exact.
        let scale = 3.0 * d_s / (r_s * r_s * self.spacing);
        let half = 0.5 * dt;
        let source = dt * 3.0 * j_n / r_s;

        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let g_left = if i > 0 {
                scale * self.face_area[i - 1]
            } else {
                0.0
            };
            let g_right = if i + 1 < n {
                scale * self.face_area[i]
            } else {
                0.0
            };
            let mut explicit = 0.0;
            if i > 0 {
                explicit -= g_left * (c[i] - c[i - 1]);
            }
            if i + 1 < n {
                explicit += g_right * (c[i + 1] - c[i]);
            }
            lower[i] = -half * g_left;
            upper[i] = -half * g_right;
            diag[i] = self.weights[i] + half * (g_left + g_right);
            rhs[i] = dt * explicit;
        }
        rhs[n - 1] -= source;

        let delta = solve_tridiagonal(&lower, &diag, &upper, rhs);
        let next: Vec<f64> = c.iter().zip(&delta).map(|(c, d)| c + d).collect();
        let violation = |v: f64| {
            if v.is_nan() {
                f64::INFINITY
            } else {
                (-v).max(v - c_max)
            }
        };
        let worst = (0..n)
            .max_by(|&a, &b| violation(next[a]).total_cmp(&violation(next[b])))
            .expect("grid is not empty");
        if violation(next[worst]) > 0.0 {
            return Err(OutOfRange {
                node: Some(worst),
                value: next[worst],
                c_max,
            });
        }
        c.copy_from_slice(&next);
        Ok(())
    }
}

/// Thomas algorithm. `lower[0]` and `upper[n-1]` are ignored.
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], mut rhs: Vec<f64>) -> Vec<f64> {
    let n = diag.len();
    let mut c_prime = vec![0.0; n];
    c_prime[0] = upper[0] / diag[0];
    rhs[0] /= diag[0];
    for i in 1..n {
        let denom = diag[i] - lower[i] * c_prime[i - 1];
        c_prime[i] = upper[i] / denom;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c_prime[i] * rhs[i + 1];
    }
    rhs
}

/// One diffusion step on a fresh copy of `c`.
pub fn diffusion_step(
    c: &[f64],
    d_s: f64,
    j_n: f64,
    dt: f64,
    r_s: f64,
    c_max: f64,
) -> Result<Vec<f64>, OutOfRange> {
    let grid = SphericalGrid::new(c.len());
    let mut next = c.to_vec();
    grid.step(&mut next, d_s, j_n, dt, r_s, c_max)?;
    Ok(next)
}

/// Volume-averaged (bulk) concentration, `3/R³ ∫ r² c dr` under the grid's
/// shell quadrature.
pub fn bulk_concentration(c: &[f64]) -> f64 {
    SphericalGrid::new(c.len()).average(c)
}
