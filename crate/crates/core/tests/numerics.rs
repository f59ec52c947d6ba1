use plap_core::experiments::symmetry_check;
use plap_core::shape::{dlambda_ds, finite_difference_dlambda, recovered_flux, FluxRecovery};
use plap_core::solver::{discrete_p_norm, rayleigh_quotient, solve_first_eigenpair};
use plap_core::{AnnulusSpec, BoundaryTag, Mesh, SolverConfig};
use proptest::prelude::*;

fn solve(r0: f64, s: f64, p: f64, nr: usize, na: usize) -> (Mesh, plap_core::EigenResult) {
    let mesh = Mesh::generate(&AnnulusSpec::planar(1.0, r0, s).unwrap(), nr, na).unwrap();
    let res = solve_first_eigenpair(&mesh, &SolverConfig::new(p)).unwrap();
    assert!(res.converged);
    (mesh, res)
}

#[test]
fn eigenvalue_differences_shrink_under_refinement() {
    for p in [2.0, 3.0] {
        let l: Vec<f64> = [(8, 32), (16, 64), (32, 128)]
            .iter()
            .map(|&(nr, na)| solve(0.3, 0.3, p, nr, na).1.lambda)
            .collect();
        let (d1, d2) = ((l[1] - l[0]).abs(), (l[2] - l[1]).abs());
        assert!(d2 < 0.5 * d1, "p={p}: {l:?}");
    }
}

#[test]
fn concentric_flux_is_uniform_and_inward() {
    let (mesh, res) = solve(0.3, 0.0, 3.0, 16, 64);
    for tag in [BoundaryTag::Inner, BoundaryTag::Outer] {
        let flux = recovered_flux(&mesh, &res, tag).unwrap();
        let mean = flux.samples.iter().map(|e| e.dudn).sum::<f64>() / flux.samples.len() as f64;
        for e in &flux.samples {
            assert!(e.dudn < 0.0);
            assert!(
                (e.dudn / mean - 1.0).abs() < 0.01,
                "{tag:?}: {} vs {mean}",
                e.dudn
            );
        }
    }
}

#[test]
fn eccentric_flux_is_negative_everywhere() {
    let (mesh, res) = solve(0.3, 0.4, 2.0, 16, 64);
    for tag in [BoundaryTag::Inner, BoundaryTag::Outer] {
        assert!(recovered_flux(&mesh, &res, tag)
            .unwrap()
            .samples
            .iter()
            .all(|e| e.dudn < 0.0));
        let tri = plap_core::shape::boundary_flux(&mesh, &res.field, tag).unwrap();
        assert!(tri.samples.iter().all(|e| e.dudn < 0.0));
    }
}

#[test]
fn recovery_methods_roughly_agree() {
    let (mesh, res) = solve(0.3, 0.3, 2.0, 16, 64);
    for tag in [BoundaryTag::Inner, BoundaryTag::Outer] {
        let a = dlambda_ds(&mesh, &res, tag, FluxRecovery::Residual).unwrap();
        let b = dlambda_ds(&mesh, &res, tag, FluxRecovery::AdjacentTriangle).unwrap();
        assert!(a < 0.0 && b < 0.0);
        assert!((a - b).abs() < 0.3 * a.abs(), "{tag:?}: {a} vs {b}");
    }
}

#[test]
fn central_difference_is_second_order() {
    let spec = AnnulusSpec::planar(1.0, 0.3, 0.3).unwrap();
    let cfg = SolverConfig::new(2.0);
    let a = finite_difference_dlambda(&spec, &cfg, 0.02, (16, 64)).unwrap();
    let b = finite_difference_dlambda(&spec, &cfg, 0.01, (16, 64)).unwrap();
    let c = finite_difference_dlambda(&spec, &cfg, 0.005, (16, 64)).unwrap();
    // Successive differences fall by about four.
    let ratio = (a - b) / (b - c);
    assert!(ratio > 3.0 && ratio < 5.0, "{a} {b} {c} ratio {ratio}");
}

#[test]
fn one_sided_difference_at_zero_scales_with_step() {
    // lambda'(0) = 0, so the forward difference is ds * lambda''(0) / 2.
    let spec = AnnulusSpec::planar(1.0, 0.3, 0.0).unwrap();
    let cfg = SolverConfig::new(2.0);
    let a = finite_difference_dlambda(&spec, &cfg, 0.01, (16, 64)).unwrap();
    let b = finite_difference_dlambda(&spec, &cfg, 0.005, (16, 64)).unwrap();
    assert!(a < 0.0 && b < 0.0);
    assert!((a / b - 2.0).abs() < 0.05, "{a} / {b}");
}

#[test]
fn small_offset_strictly_lowers_lambda_at_p3() {
    let l0 = solve(0.3, 0.0, 3.0, 16, 64).1.lambda;
    let l1 = solve(0.3, 0.2, 3.0, 16, 64).1.lambda;
    assert!(l1 < l0 * (1.0 - 10.0 * SolverConfig::DEFAULT_TOL), "{l0} -> {l1}");
}

#[test]
fn eccentric_field_is_mirror_symmetric() {
    let (mesh, res) = solve(0.3, 0.35, 2.0, 16, 64);
    assert!(symmetry_check(&mesh, &res) <= 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn converged_pairs_satisfy_postconditions(
        r0 in 0.2f64..0.6,
        frac in 0.0f64..0.8,
        p in 1.6f64..4.0,
    ) {
        let s = frac * (1.0 - r0);
        let (mesh, res) = solve(r0, s, p, 6, 24);
        let rq = rayleigh_quotient(&mesh, &res.field, p).unwrap();
        prop_assert_eq!(rq, res.lambda);
        prop_assert!((discrete_p_norm(&mesh, &res.field, p).unwrap() - 1.0).abs() < 1e-12);
        for (v, &x) in res.field.values.iter().enumerate() {
            if mesh.is_boundary_vertex(v) {
                prop_assert_eq!(x, 0.0);
            } else {
                prop_assert!(x > 0.0);
            }
        }
        prop_assert!(symmetry_check(&mesh, &res) <= 1e-6);
    }

    #[test]
    fn eigenvalue_scales_with_domain(
        c in 0.3f64..3.0,
        frac in 0.0f64..0.8,
        p in 1.6f64..4.0,
    ) {
        let base = AnnulusSpec::planar(1.0, 0.4, frac * 0.6).unwrap();
        let scaled = AnnulusSpec::planar(c, 0.4 * c, frac * 0.6 * c).unwrap();
        let cfg = SolverConfig::new(p);
        let a = solve_first_eigenpair(&Mesh::generate(&base, 6, 24).unwrap(), &cfg).unwrap();
        let b = solve_first_eigenpair(&Mesh::generate(&scaled, 6, 24).unwrap(), &cfg).unwrap();
        prop_assert!(a.converged && b.converged);
        let predicted = a.lambda * c.powf(-p);
        prop_assert!((b.lambda / predicted - 1.0).abs() < 1e-7, "{} vs {}", b.lambda, predicted);
    }
}

#[test]
fn triangle_flux_is_uniform_on_concentric_outer_loop() {
    // The diagonal pattern changes between quadrants, so uniformity is O(h).
    let (mesh, res) = solve(0.3, 0.0, 2.0, 32, 128);
    let flux = plap_core::shape::boundary_flux(&mesh, &res.field, BoundaryTag::Outer).unwrap();
    let first = flux.samples[0].dudn;
    assert!(flux.samples.iter().all(|e| (e.dudn / first - 1.0).abs() < 0.01));
}

#[test]
fn both_formulas_negative_off_centre() {
    for p in [1.5, 2.0, 3.0] {
        for s in [0.1, 0.2, 0.3, 0.4] {
            let (mesh, res) = solve(0.3, s, p, 12, 48);
            for tag in [BoundaryTag::Inner, BoundaryTag::Outer] {
                for rec in [FluxRecovery::Residual, FluxRecovery::AdjacentTriangle] {
                    let d = dlambda_ds(&mesh, &res, tag, rec).unwrap();
                    assert!(d < 0.0, "p={p} s={s} {tag:?} {rec:?}: {d}");
                }
            }
        }
    }
}

#[test]
fn inner_and_outer_formulas_agree_at_mid_offset() {
    for p in [2.0, 3.0] {
        let (mesh, res) = solve(0.3, 0.3, p, 16, 64);
        let a = dlambda_ds(&mesh, &res, BoundaryTag::Inner, FluxRecovery::Residual).unwrap();
        let b = dlambda_ds(&mesh, &res, BoundaryTag::Outer, FluxRecovery::Residual).unwrap();
        assert!((a - b).abs() <= 0.1 * a.abs().max(b.abs()), "p={p}: {a} vs {b}");
    }
}

#[test]
fn nodal_split_outer_piece_matches_radial_oracle() {
    use plap_core::experiments::{fucik_nodal_split_check, Resolution};
    let rep = fucik_nodal_split_check(
        1.0,
        2.0,
        0.05,
        Resolution::new(16, 64),
        &SolverConfig::new(2.0),
        1,
    )
    .unwrap();
    assert!(rep.converged);
    assert!((rep.lambda_out_concentric / rep.lambda_out_radial - 1.0).abs() < 0.02);
    assert_eq!(rep.verdict, Some(true));
}
