//! First Dirichlet eigenpair of the p-Laplacian on a structured annulus mesh.
//!
//! The discrete problem minimizes
//!
//! ```text
//!   RQ(u) = sum_T |T| |grad u|_T|^p  /  sum_v m_v |u_v|^p
//! ```
//!
//! over continuous piecewise-linear `u` vanishing on both boundary loops,
//! where `m_v` is the lumped (vertex-average) mass. The minimizer is found by
//! projected descent: each step moves against the Rayleigh-quotient gradient,
//! preconditioned by the Hessian of the p-Dirichlet energy at the current
//! iterate, backtracks until the quotient decreases, and renormalizes to
//! unit discrete p-norm. The projection keeps iterates strictly positive: no
//! step may shrink an interior value below a fixed fraction of its current
//! value, so regions where the eigenfunction is tiny decay geometrically
//! instead of being clamped to an exact zero the descent cannot leave.
//!
//! For `p = 2` a unit step is exactly inverse iteration; for other `p` it is
//! inverse iteration on the linearized problem, so the rate does not degrade
//! under mesh refinement.

use crate::banded::BandedSpd;
use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Nodal values of a piecewise-linear function on a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::FieldSize {
                expected: mesh.n_vertices(),
                got: values.len(),
            });
        }
        Ok(Self { values })
    }

    pub fn zeros(mesh: &Mesh) -> Self {
        Self {
            values: vec![0.0; mesh.n_vertices()],
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialField {
    /// Distance to the nearer boundary circle.
    Tent,
    /// One at every interior vertex.
    Ones,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub p: f64,
    /// Gradient regularization used in the descent direction when `p < 2`.
    /// `None` means `1e-8 / R1`.
    pub epsilon: Option<f64>,
    pub max_iter: usize,
    /// Stop when the relative decrease of the Rayleigh quotient drops below this.
    pub tol: f64,
    pub step_shrink: f64,
    pub initial: InitialField,
}

impl SolverConfig {
    pub const DEFAULT_TOL: f64 = 1e-10;
    pub const DEFAULT_MAX_ITER: usize = 50_000;
    /// Backtracking gives up below this step and declares convergence.
    pub const MIN_STEP: f64 = 1e-14;

    pub fn new(p: f64) -> Self {
        Self {
            p,
            epsilon: None,
            max_iter: Self::DEFAULT_MAX_ITER,
            tol: Self::DEFAULT_TOL,
            step_shrink: 0.5,
            initial: InitialField::Tent,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidConfig(format!("p must be > 1, got {}", self.p)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be > 0, got {}", self.tol)));
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "step_shrink must lie in (0, 1), got {}",
                self.step_shrink
            )));
        }
        if let Some(eps) = self.epsilon {
            if !(eps >= 0.0) {
                return Err(Error::InvalidConfig(format!("epsilon must be >= 0, got {eps}")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be positive".into()));
        }
        Ok(())
    }

    pub fn epsilon_for(&self, mesh: &Mesh) -> f64 {
        self.epsilon.unwrap_or(1e-8 / mesh.spec.r1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub lambda: f64,
    /// Eigenfunction with unit discrete p-norm.
    pub field: ScalarField,
    pub iterations: usize,
    /// Relative Rayleigh-quotient change of the last accepted step.
    pub residual: f64,
    pub converged: bool,
    pub p: f64,
    /// Rayleigh quotient after the initial projection and after every accepted step.
    pub history: Vec<f64>,
}

/// Per-mesh quantities reused across iterations.
pub(crate) struct Discretization {
    pub areas: Vec<f64>,
    /// Gradients of the three hat functions on each triangle.
    pub grads: Vec<[[f64; 2]; 3]>,
    pub lumped_mass: Vec<f64>,
    /// Unknown index of each vertex, `None` on the boundary.
    pub unknown: Vec<Option<usize>>,
    pub n_unknowns: usize,
    pub bandwidth: usize,
}

impl Discretization {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let nv = mesh.n_vertices();
        let mut areas = Vec::with_capacity(mesh.triangles.len());
        let mut grads = Vec::with_capacity(mesh.triangles.len());
        let mut lumped_mass = vec![0.0; nv];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} references a missing vertex"
                )));
            }
            let [a, b, c] = tri.map(|v| mesh.vertices[v]);
            let area2 = crate::mesh::signed_area2(a, b, c);
            if !(area2 > 0.0) {
                return Err(Error::InvalidMesh(format!("triangle {t} has non-positive area")));
            }
            // grad phi_k = rot90(opposite edge) / (2 area)
            let g = |p: [f64; 2], q: [f64; 2]| [(p[1] - q[1]) / area2, (q[0] - p[0]) / area2];
            grads.push([g(b, c), g(c, a), g(a, b)]);
            let area = 0.5 * area2;
            areas.push(area);
            for &v in tri {
                lumped_mass[v] += area / 3.0;
            }
        }

        // Fold the periodic angle index (0, 1, n-1, 2, n-2, ...) so angular
        // neighbours are at most two apart, then order by angle first.
        let n = mesh.n_angular;
        let levels = mesh.n_radial.saturating_sub(1);
        if levels == 0 {
            return Err(Error::InvalidMesh("mesh has no interior vertices".into()));
        }
        let fold = |j: usize| {
            if j == 0 {
                0
            } else if 2 * j <= n {
                2 * j - 1
            } else {
                2 * (n - j)
            }
        };
        let unknown: Vec<Option<usize>> = (0..nv)
            .map(|v| {
                if mesh.is_boundary_vertex(v) {
                    None
                } else {
                    let (i, j) = mesh.ring_angle(v);
                    Some(fold(j) * levels + (i - 1))
                }
            })
            .collect();
        let n_unknowns = unknown.iter().flatten().count();
        let mut bandwidth = 0;
        for tri in &mesh.triangles {
            for &a in tri {
                for &b in tri {
                    if let (Some(x), Some(y)) = (unknown[a], unknown[b]) {
                        bandwidth = bandwidth.max(x.abs_diff(y));
                    }
                }
            }
        }
        Ok(Self {
            areas,
            grads,
            lumped_mass,
            unknown,
            n_unknowns,
            bandwidth,
        })
    }

    #[inline]
    pub fn gradient(&self, tri: &[usize; 3], t: usize, u: &[f64]) -> [f64; 2] {
        let g = &self.grads[t];
        [
            u[tri[0]] * g[0][0] + u[tri[1]] * g[1][0] + u[tri[2]] * g[2][0],
            u[tri[0]] * g[0][1] + u[tri[1]] * g[1][1] + u[tri[2]] * g[2][1],
        ]
    }

    /// `(sum_T |T| |grad u|^p, sum_v m_v |u_v|^p)`.
    pub fn energies(&self, mesh: &Mesh, u: &[f64], p: f64) -> (f64, f64) {
        let mut num = 0.0;
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let g = self.gradient(tri, t, u);
            num += self.areas[t] * (g[0] * g[0] + g[1] * g[1]).powf(0.5 * p);
        }
        let den = u
            .iter()
            .zip(&self.lumped_mass)
            .map(|(x, m)| m * x.abs().powf(p))
            .sum();
        (num, den)
    }

    pub fn p_norm(&self, u: &[f64], p: f64) -> f64 {
        let den: f64 = u
            .iter()
            .zip(&self.lumped_mass)
            .map(|(x, m)| m * x.abs().powf(p))
            .sum();
        den.powf(1.0 / p)
    }
}

/// Discrete Rayleigh quotient of `field` with exponent `p`.
pub fn rayleigh_quotient(mesh: &Mesh, field: &ScalarField, p: f64) -> Result<f64> {
    if field.values.len() != mesh.n_vertices() {
        return Err(Error::FieldSize {
            expected: mesh.n_vertices(),
            got: field.values.len(),
        });
    }
    let disc = Discretization::new(mesh)?;
    let (num, den) = disc.energies(mesh, &field.values, p);
    if !(den > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    Ok(num / den)
}

/// Discrete p-norm with the same lumped quadrature as the Rayleigh quotient.
pub fn discrete_p_norm(mesh: &Mesh, field: &ScalarField, p: f64) -> Result<f64> {
    Ok(Discretization::new(mesh)?.p_norm(&field.values, p))
}

pub fn initial_field(mesh: &Mesh, kind: InitialField) -> ScalarField {
    let spec = &mesh.spec;
    let values = (0..mesh.n_vertices())
        .map(|v| {
            if mesh.is_boundary_vertex(v) {
                return 0.0;
            }
            match kind {
                InitialField::Ones => 1.0,
                InitialField::Tent => {
                    let [x, y] = mesh.vertices[v];
                    let to_inner = (x - spec.s).hypot(y) - spec.r0;
                    let to_outer = spec.r1 - x.hypot(y);
                    to_inner.min(to_outer).max(0.0)
                }
            }
        })
        .collect();
    ScalarField { values }
}

/// Zeroes the boundary, clamps negatives and rescales to unit p-norm.
fn project(disc: &Discretization, u: &mut [f64], p: f64) -> Result<()> {
    for (x, k) in u.iter_mut().zip(&disc.unknown) {
        if k.is_none() || *x < 0.0 {
            *x = 0.0;
        }
    }
    let norm = disc.p_norm(u, p);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::ZeroDenominator);
    }
    u.iter_mut().for_each(|x| *x /= norm);
    Ok(())
}

/// Smallest factor by which one step may scale an interior value.
const POSITIVITY_FRACTION: f64 = 1e-3;

/// Relative floor on the preconditioner weights, keeps the factorization
/// well posed where the gradient vanishes.
const HESSIAN_WEIGHT_FLOOR: f64 = 1e-10;

pub fn solve_first_eigenpair(mesh: &Mesh, config: &SolverConfig) -> Result<EigenResult> {
    config.validate()?;
    let p = config.p;
    let eps2 = config.epsilon_for(mesh).powi(2);
    let disc = Discretization::new(mesh)?;

    let mut u = initial_field(mesh, config.initial).values;
    project(&disc, &mut u, p)?;
    let (num, den) = disc.energies(mesh, &u, p);
    let mut lambda = num / den;
    let mut history = vec![lambda];

    let nt = mesh.triangles.len();
    let mut weights = vec![0.0; nt];
    let mut grads = vec![[0.0; 2]; nt];
    let mut hess = BandedSpd::zeros(disc.n_unknowns, disc.bandwidth);
    let mut rhs = vec![0.0; disc.n_unknowns];
    let mut trial = vec![0.0; u.len()];

    let mut converged = false;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;

    while iterations < config.max_iter {
        iterations += 1;

        let mut w_max: f64 = 0.0;
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let g = disc.gradient(tri, t, &u);
            let g2 = g[0] * g[0] + g[1] * g[1];
            let w = if p < 2.0 {
                (g2 + eps2).powf(0.5 * (p - 2.0))
            } else if p == 2.0 {
                1.0
            } else {
                g2.powf(0.5 * (p - 2.0))
            };
            grads[t] = g;
            weights[t] = w;
            w_max = w_max.max(w);
        }
        let w_floor = HESSIAN_WEIGHT_FLOOR * w_max;

        // F = K_w u - lambda M |u|^{p-2} u and H = second variation of the energy / p.
        rhs.iter_mut().for_each(|x| *x = 0.0);
        hess.clear();
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let area = disc.areas[t];
            let w = weights[t];
            let g = grads[t];
            let g2 = g[0] * g[0] + g[1] * g[1];
            let anis = if p == 2.0 || g2 == 0.0 {
                0.0
            } else if p < 2.0 {
                (p - 2.0) / (g2 + eps2)
            } else {
                (p - 2.0) / g2
            };
            let wh = w.max(w_floor);
            let phi = &disc.grads[t];
            for a in 0..3 {
                let Some(ia) = disc.unknown[tri[a]] else { continue };
                let ga = phi[a];
                rhs[ia] += area * w * (ga[0] * g[0] + ga[1] * g[1]);
                let ga_g = ga[0] * g[0] + ga[1] * g[1];
                for b in 0..=a {
                    let Some(ib) = disc.unknown[tri[b]] else { continue };
                    let gb = phi[b];
                    let gb_g = gb[0] * g[0] + gb[1] * g[1];
                    let val = area * wh * (ga[0] * gb[0] + ga[1] * gb[1] + anis * ga_g * gb_g);
                    hess.add(ia, ib, val);
                }
            }
        }
        for (v, k) in disc.unknown.iter().enumerate() {
            if let Some(k) = *k {
                let x = u[v];
                rhs[k] -= lambda * disc.lumped_mass[v] * x.signum() * x.abs().powf(p - 1.0);
            }
        }
        hess.factor()?;
        hess.solve(&mut rhs);

        let mut step = 1.0;
        let mut accepted = None;
        while step >= SolverConfig::MIN_STEP {
            for (v, k) in disc.unknown.iter().enumerate() {
                trial[v] = match k {
                    Some(k) => (u[v] - step * rhs[*k]).max(POSITIVITY_FRACTION * u[v]),
                    None => 0.0,
                };
            }
            if project(&disc, &mut trial, p).is_ok() {
                let (num, den) = disc.energies(mesh, &trial, p);
                let rq = num / den;
                if rq < lambda {
                    accepted = Some(rq);
                    break;
                }
            }
            step *= config.step_shrink;
        }

        let Some(rq) = accepted else {
            // no descent left at machine precision
            converged = true;
            residual = 0.0;
            break;
        };
        std::mem::swap(&mut u, &mut trial);
        residual = (lambda - rq) / rq;
        lambda = rq;
        history.push(lambda);
        if residual < config.tol {
            converged = true;
            break;
        }
    }

    Ok(EigenResult {
        lambda,
        field: ScalarField { values: u },
        iterations,
        residual,
        converged,
        p,
        history,
    })
}

/// Convenience wrapper that turns a non-converged solve into an error.
pub fn solve_converged(mesh: &Mesh, config: &SolverConfig) -> Result<EigenResult> {
    let res = solve_first_eigenpair(mesh, config)?;
    if res.converged {
        Ok(res)
    } else {
        Err(Error::NotConverged)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AnnulusSpec;

    fn mesh(s: f64, nr: usize, na: usize) -> Mesh {
        Mesh::generate(&AnnulusSpec::planar(1.0, 0.3, s).unwrap(), nr, na).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(1.0).validate().is_err());
        assert!(SolverConfig {
            tol: 0.0,
            ..SolverConfig::new(2.0)
        }
        .validate()
        .is_err());
        assert!(SolverConfig {
            step_shrink: 1.0,
            ..SolverConfig::new(2.0)
        }
        .validate()
        .is_err());
        assert!(SolverConfig {
            epsilon: Some(-1.0),
            ..SolverConfig::new(2.0)
        }
        .validate()
        .is_err());
        assert!(SolverConfig::new(1.01).validate().is_ok());
    }

    #[test]
    fn rayleigh_quotient_is_scale_invariant() {
        let m = mesh(0.2, 6, 24);
        let values: Vec<f64> = (0..m.n_vertices())
            .map(|v| {
                if m.is_boundary_vertex(v) {
                    0.0
                } else {
                    1.0 + ((v * 7919) % 97) as f64 / 97.0
                }
            })
            .collect();
        for p in [1.5, 2.0, 3.7] {
            let u = ScalarField::new(&m, values.clone()).unwrap();
            let a = rayleigh_quotient(&m, &u, p).unwrap();
            for c in [-3.0, 0.01, 250.0] {
                let cu = ScalarField::new(&m, values.iter().map(|x| c * x).collect()).unwrap();
                let b = rayleigh_quotient(&m, &cu, p).unwrap();
                assert!((a - b).abs() <= 1e-13 * a, "p={p} c={c}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn rayleigh_quotient_errors() {
        let m = mesh(0.0, 4, 16);
        assert_eq!(
            rayleigh_quotient(&m, &ScalarField::zeros(&m), 2.0),
            Err(Error::ZeroDenominator)
        );
        assert!(matches!(
            ScalarField::new(&m, vec![0.0; 3]),
            Err(Error::FieldSize { .. })
        ));
    }

    #[test]
    fn converged_pair_satisfies_postconditions() {
        let m = mesh(0.3, 8, 32);
        for p in [1.5, 2.0, 3.0] {
            let res = solve_first_eigenpair(&m, &SolverConfig::new(p)).unwrap();
            assert!(res.converged, "p={p}");
            let rq = rayleigh_quotient(&m, &res.field, p).unwrap();
            assert_eq!(rq.to_bits(), res.lambda.to_bits());
            let norm = discrete_p_norm(&m, &res.field, p).unwrap();
            assert!((norm - 1.0).abs() < 1e-12);
            for v in 0..m.n_vertices() {
                if m.is_boundary_vertex(v) {
                    assert_eq!(res.field.values[v], 0.0);
                } else {
                    assert!(res.field.values[v] > 0.0);
                }
            }
            assert!(res.history.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn initializers_agree() {
        let m = mesh(0.1, 6, 32);
        let tent = solve_first_eigenpair(&m, &SolverConfig::new(2.0)).unwrap();
        let ones = solve_first_eigenpair(
            &m,
            &SolverConfig {
                initial: InitialField::Ones,
                ..SolverConfig::new(2.0)
            },
        )
        .unwrap();
        assert!((tent.lambda - ones.lambda).abs() < 1e-8 * tent.lambda);
    }

    #[test]
    fn non_convergence_returns_partial_result() {
        let m = mesh(0.3, 6, 24);
        let cfg = SolverConfig {
            max_iter: 2,
            ..SolverConfig::new(3.0)
        };
        let res = solve_first_eigenpair(&m, &cfg).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 2);
        assert!(res.lambda.is_finite());
        assert_eq!(solve_converged(&m, &cfg), Err(Error::NotConverged));
    }

    #[test]
    fn solve_is_deterministic() {
        let m = mesh(0.25, 6, 24);
        let a = solve_first_eigenpair(&m, &SolverConfig::new(2.5)).unwrap();
        let b = solve_first_eigenpair(&m, &SolverConfig::new(2.5)).unwrap();
        assert_eq!(a, b);
    }
}
