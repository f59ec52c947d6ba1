//! Boundary-integral formulas for `d lambda_1 / ds`.
//!
//! Moving the inner ball by `ds e1` and moving the outer ball by `-ds e1`
//! produce congruent domains, so the Hadamard derivative can be written on
//! either boundary loop:
//!
//! ```text
//!   d lambda/ds = -(p-1) * integral over inner circle of |du/dn|^p n1
//!   d lambda/ds = +(p-1) * integral over outer circle of |du/dn|^p n1
//! ```
//!
//! with `n` the outward unit normal of the annulus (on the inner circle it
//! points into the hole) and `u` the positive eigenfunction of unit p-norm.
//!
//! The default recovery of `du/dn` reads the flux off the discrete residual at
//! boundary vertices, which converges markedly faster than the gradient of the
//! triangle next to each edge; the latter stays available for comparison.

use crate::error::{Error, Result};
use crate::geometry::AnnulusSpec;
use crate::mesh::{BoundaryTag, Mesh};
use crate::solver::{solve_first_eigenpair, Discretization, EigenResult, ScalarField, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxSample {
    pub midpoint: [f64; 2],
    pub length: f64,
    /// Outward unit normal of the annulus, exact circle normal at the midpoint.
    pub normal: [f64; 2],
    /// `<grad u, n>` from the adjacent triangle.
    pub dudn: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFlux {
    pub tag: BoundaryTag,
    pub samples: Vec<FluxSample>,
}

impl BoundaryFlux {
    /// `sum |du/dn|^p n1 |e|` over the loop.
    pub fn weighted_integral(&self, p: f64) -> f64 {
        self.samples
            .iter()
            .map(|e| e.dudn.abs().powf(p) * e.normal[0] * e.length)
            .sum()
    }

    /// Same samples with the normal orientation reversed.
    pub fn with_flipped_normals(&self) -> Self {
        Self {
            tag: self.tag,
            samples: self
                .samples
                .iter()
                .map(|e| FluxSample {
                    normal: [-e.normal[0], -e.normal[1]],
                    dudn: -e.dudn,
                    ..*e
                })
                .collect(),
        }
    }
}

/// Outward normal of the annulus at `x` on the given loop.
pub fn outward_normal(spec: &AnnulusSpec, tag: BoundaryTag, x: [f64; 2]) -> [f64; 2] {
    let d = match tag {
        BoundaryTag::Outer => x,
        BoundaryTag::Inner => [spec.s - x[0], -x[1]],
    };
    let len = d[0].hypot(d[1]);
    [d[0] / len, d[1] / len]
}

/// Normal derivative of `field` on every edge of one boundary loop.
pub fn boundary_flux(mesh: &Mesh, field: &ScalarField, tag: BoundaryTag) -> Result<BoundaryFlux> {
    if field.values.len() != mesh.n_vertices() {
        return Err(Error::FieldSize {
            expected: mesh.n_vertices(),
            got: field.values.len(),
        });
    }
    let disc = Discretization::new(mesh)?;
    let owners = mesh.boundary_edge_triangles()?;
    let samples = mesh
        .boundary_edges
        .iter()
        .zip(owners)
        .filter(|(e, _)| e.tag == tag)
        .map(|(e, t)| {
            let [a, b] = e.vertices.map(|v| mesh.vertices[v]);
            let midpoint = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let normal = outward_normal(&mesh.spec, tag, midpoint);
            let g = disc.gradient(&mesh.triangles[t], t, &field.values);
            FluxSample {
                midpoint,
                length: (b[0] - a[0]).hypot(b[1] - a[1]),
                normal,
                dudn: g[0] * normal[0] + g[1] * normal[1],
            }
        })
        .collect();
    Ok(BoundaryFlux { tag, samples })
}

/// Boundary flux recovered from the residual of the discrete equation at the
/// boundary vertices. One sample per vertex: `length` is the vertex's share
/// of the loop, `dudn` the signed normal derivative.
pub fn recovered_flux(mesh: &Mesh, result: &EigenResult, tag: BoundaryTag) -> Result<BoundaryFlux> {
    let u = &result.field.values;
    if u.len() != mesh.n_vertices() {
        return Err(Error::FieldSize {
            expected: mesh.n_vertices(),
            got: u.len(),
        });
    }
    let p = result.p;
    let disc = Discretization::new(mesh)?;
    let mut share = vec![0.0; mesh.n_vertices()];
    for e in mesh.boundary_edges.iter().filter(|e| e.tag == tag) {
        let [a, b] = e.vertices.map(|v| mesh.vertices[v]);
        let half = 0.5 * (b[0] - a[0]).hypot(b[1] - a[1]);
        share[e.vertices[0]] += half;
        share[e.vertices[1]] += half;
    }
    let source = |x: f64| x.signum() * x.abs().powf(p - 1.0);
    let mut residual = vec![0.0; mesh.n_vertices()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if tri.iter().all(|&v| share[v] == 0.0) {
            continue;
        }
        let g = disc.gradient(tri, t, u);
        let gg = g[0] * g[0] + g[1] * g[1];
        let w = if gg > 0.0 { gg.powf(0.5 * p - 1.0) } else { 0.0 };
        let area = disc.areas[t];
        for (k, &v) in tri.iter().enumerate() {
            if share[v] == 0.0 {
                continue;
            }
            let gv = disc.grads[t][k];
            // Edge-midpoint rule; the hat function is 1/2 on the two edges through v.
            let [a, b] = [tri[(k + 1) % 3], tri[(k + 2) % 3]];
            let mass = area / 6.0 * (source(0.5 * (u[v] + u[a])) + source(0.5 * (u[v] + u[b])));
            residual[v] += area * w * (g[0] * gv[0] + g[1] * gv[1]) - result.lambda * mass;
        }
    }
    let samples = (0..mesh.n_vertices())
        .filter(|&v| share[v] > 0.0)
        .map(|v| {
            let flux = residual[v] / share[v];
            FluxSample {
                midpoint: mesh.vertices[v],
                length: share[v],
                normal: outward_normal(&mesh.spec, tag, mesh.vertices[v]),
                dudn: flux.signum() * flux.abs().powf(1.0 / (p - 1.0)),
            }
        })
        .collect();
    Ok(BoundaryFlux { tag, samples })
}

fn require_converged(result: &EigenResult) -> Result<()> {
    if result.converged {
        Ok(())
    } else {
        Err(Error::NotConverged)
    }
}

/// How `du/dn` is recovered on the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FluxRecovery {
    /// Residual of the discrete equation at boundary vertices.
    #[default]
    Residual,
    /// Gradient of the triangle owning each boundary edge.
    AdjacentTriangle,
}

impl std::str::FromStr for FluxRecovery {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "residual" => Ok(Self::Residual),
            "triangle" => Ok(Self::AdjacentTriangle),
            _ => Err(Error::InvalidInput(format!(
                "unknown flux recovery `{s}` (residual|triangle)"
            ))),
        }
    }
}

/// `d lambda/ds` from the formula on one boundary loop.
pub fn dlambda_ds(
    mesh: &Mesh,
    result: &EigenResult,
    tag: BoundaryTag,
    recovery: FluxRecovery,
) -> Result<f64> {
    require_converged(result)?;
    let flux = match recovery {
        FluxRecovery::Residual => recovered_flux(mesh, result, tag)?,
        FluxRecovery::AdjacentTriangle => boundary_flux(mesh, &result.field, tag)?,
    };
    let sign = match tag {
        BoundaryTag::Inner => -1.0,
        BoundaryTag::Outer => 1.0,
    };
    Ok(sign * (result.p - 1.0) * flux.weighted_integral(result.p))
}

/// `d lambda/ds` from the inner-boundary formula.
pub fn dlambda_ds_inner(mesh: &Mesh, result: &EigenResult) -> Result<f64> {
    dlambda_ds(mesh, result, BoundaryTag::Inner, FluxRecovery::default())
}

/// `d lambda/ds` from the outer-boundary formula.
pub fn dlambda_ds_outer(mesh: &Mesh, result: &EigenResult) -> Result<f64> {
    dlambda_ds(mesh, result, BoundaryTag::Outer, FluxRecovery::default())
}

/// Central difference of the discrete eigenvalue in `s` (one-sided at `s = 0`),
/// both solves at the same resolution and configuration.
pub fn finite_difference_dlambda(
    spec: &AnnulusSpec,
    config: &SolverConfig,
    ds: f64,
    resolution: (usize, usize),
) -> Result<f64> {
    if !(ds > 0.0) {
        return Err(Error::InvalidInput(format!("ds must be positive, got {ds}")));
    }
    let (lo, hi) = if spec.s == 0.0 {
        (0.0, ds)
    } else {
        (spec.s - ds, spec.s + ds)
    };
    if lo < 0.0 || hi > spec.max_mesh_offset() {
        return Err(Error::OffsetOutOfRange {
            s: if lo < 0.0 { lo } else { hi },
            limit: spec.r1 - spec.r0,
        });
    }
    let solve = |s: f64| -> Result<f64> {
        let mesh = Mesh::generate(&spec.with_offset(s), resolution.0, resolution.1)?;
        let res = solve_first_eigenpair(&mesh, config)?;
        if res.converged {
            Ok(res.lambda)
        } else {
            Err(Error::NotConverged)
        }
    };
    let (a, b) = rayon::join(|| solve(lo), || solve(hi));
    Ok((b? - a?) / (hi - lo))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_field_has_unit_outer_flux() {
        // u = 1 - |x| restricted to a one-ring patch next to the outer circle:
        // its P1 interpolant is exact along radial lines only, so use a fine
        // angular resolution and check against the analytic -1.
        let spec = AnnulusSpec::planar(1.0, 0.3, 0.0).unwrap();
        let mesh = Mesh::generate(&spec, 2, 4096).unwrap();
        let values = mesh.vertices.iter().map(|v| 1.0 - v[0].hypot(v[1])).collect();
        let field = ScalarField::new(&mesh, values).unwrap();
        let flux = boundary_flux(&mesh, &field, BoundaryTag::Outer).unwrap();
        for e in &flux.samples {
            assert!((e.dudn + 1.0).abs() < 1e-6, "{}", e.dudn);
        }
    }

    #[test]
    fn normals_are_unit_and_outward() {
        let spec = AnnulusSpec::planar(1.0, 0.3, 0.4).unwrap();
        let mesh = Mesh::generate(&spec, 4, 32).unwrap();
        let field = ScalarField::zeros(&mesh);
        for tag in [BoundaryTag::Inner, BoundaryTag::Outer] {
            let flux = boundary_flux(&mesh, &field, tag).unwrap();
            assert_eq!(flux.samples.len(), 32);
            for e in &flux.samples {
                let [nx, ny] = e.normal;
                assert!((nx.hypot(ny) - 1.0).abs() < 1e-12);
                let [x, y] = e.midpoint;
                match tag {
                    BoundaryTag::Outer => assert!(nx * x + ny * y > 0.0),
                    BoundaryTag::Inner => assert!(nx * (x - 0.4) + ny * y < 0.0),
                }
            }
        }
    }

    #[test]
    fn flipped_normals_flip_the_integral() {
        let spec = AnnulusSpec::planar(1.0, 0.3, 0.2).unwrap();
        let mesh = Mesh::generate(&spec, 4, 32).unwrap();
        let values = mesh.vertices.iter().map(|v| v[0] + 2.0 * v[1] * v[1]).collect();
        let field = ScalarField::new(&mesh, values).unwrap();
        let flux = boundary_flux(&mesh, &field, BoundaryTag::Inner).unwrap();
        let a = flux.weighted_integral(2.5);
        let b = flux.with_flipped_normals().weighted_integral(2.5);
        assert!(a != 0.0);
        assert_eq!(a, -b);
    }

    #[test]
    fn non_converged_results_rejected() {
        let spec = AnnulusSpec::planar(1.0, 0.3, 0.2).unwrap();
        let mesh = Mesh::generate(&spec, 4, 16).unwrap();
        let cfg = SolverConfig {
            max_iter: 1,
            ..SolverConfig::new(2.0)
        };
        let res = solve_first_eigenpair(&mesh, &cfg).unwrap();
        assert!(!res.converged);
        assert_eq!(dlambda_ds_inner(&mesh, &res), Err(Error::NotConverged));
        assert_eq!(dlambda_ds_outer(&mesh, &res), Err(Error::NotConverged));
        let tri = dlambda_ds(&mesh, &res, BoundaryTag::Inner, FluxRecovery::AdjacentTriangle);
        assert_eq!(tri, Err(Error::NotConverged));
    }

    #[test]
    fn recovered_flux_of_radial_field() {
        // Concentric p=2 eigenfunction: the flux is nearly constant on each
        // circle (the diagonal pattern changes at the quadrant seams) and both
        // formulas vanish by symmetry.
        let spec = AnnulusSpec::planar(1.0, 0.5, 0.0).unwrap();
        let mesh = Mesh::generate(&spec, 32, 128).unwrap();
        let res = solve_first_eigenpair(&mesh, &SolverConfig::new(2.0)).unwrap();
        for tag in [BoundaryTag::Inner, BoundaryTag::Outer] {
            let flux = recovered_flux(&mesh, &res, tag).unwrap();
            assert_eq!(flux.samples.len(), 128);
            let total: f64 = flux.samples.iter().map(|e| e.length).sum();
            let r = if tag == BoundaryTag::Inner { 0.5 } else { 1.0 };
            assert!((total / (2.0 * std::f64::consts::PI * r) - 1.0).abs() < 1e-3);
            let first = flux.samples[0].dudn;
            assert!(first < 0.0);
            for e in &flux.samples {
                assert!(
                    (e.dudn / first - 1.0).abs() < 0.01,
                    "{tag:?} {:?} {} vs {first}",
                    e.midpoint,
                    e.dudn
                );
            }
            assert!(
                dlambda_ds(&mesh, &res, tag, FluxRecovery::Residual)
                    .unwrap()
                    .abs()
                    < 1e-9
            );
        }
    }

    #[test]
    fn recovery_parsing() {
        assert_eq!(
            "residual".parse::<FluxRecovery>().unwrap(),
            FluxRecovery::Residual
        );
        assert_eq!(
            "triangle".parse::<FluxRecovery>().unwrap(),
            FluxRecovery::AdjacentTriangle
        );
        assert!("nodal".parse::<FluxRecovery>().is_err());
    }

    #[test]
    fn finite_difference_range_checked() {
        let spec = AnnulusSpec::planar(1.0, 0.3, 0.69).unwrap();
        let cfg = SolverConfig::new(2.0);
        assert!(finite_difference_dlambda(&spec, &cfg, 0.05, (4, 16)).is_err());
        assert!(finite_difference_dlambda(&spec.with_offset(0.01), &cfg, 0.02, (4, 16)).is_err());
        assert!(finite_difference_dlambda(&spec, &cfg, 0.0, (4, 16)).is_err());
    }
}
