//! Shooting solver for the first radial Dirichlet eigenvalue on balls and
//! concentric annuli in any dimension.
//!
//! Radial eigenfunctions satisfy
//!
//! ```text
//!   -(r^{N-1} |phi'|^{p-2} phi')' = lambda r^{N-1} |phi|^{p-2} phi,
//! ```
//!
//! integrated as a first-order system in `phi` and the flux
//! `w = |phi'|^{p-2} phi'`, which stays regular where `phi'` vanishes.
//! Nothing here touches the finite element code, so agreement between the
//! two is an honest cross-check.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialDomain {
    Ball { radius: f64 },
    Annulus { inner: f64, outer: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialProblem {
    pub domain: RadialDomain,
    pub p: f64,
    pub dim: usize,
    /// Relative bisection tolerance on lambda.
    pub tol: f64,
    pub steps: usize,
}

pub const DEFAULT_STEPS: usize = 20_000;
pub const DEFAULT_TOL: f64 = 1e-10;
/// Upper limit of the doubling search for a bracketing lambda.
pub const LAMBDA_MAX: f64 = 1e8;

impl RadialProblem {
    pub fn ball(radius: f64, p: f64, dim: usize) -> Self {
        Self {
            domain: RadialDomain::Ball { radius },
            p,
            dim,
            tol: DEFAULT_TOL,
            steps: DEFAULT_STEPS,
        }
    }

    pub fn annulus(inner: f64, outer: f64, p: f64, dim: usize) -> Self {
        Self {
            domain: RadialDomain::Annulus { inner, outer },
            p,
            dim,
            tol: DEFAULT_TOL,
            steps: DEFAULT_STEPS,
        }
    }

    pub fn with_steps(self, steps: usize) -> Self {
        Self { steps, ..self }
    }

    pub fn with_tol(self, tol: f64) -> Self {
        Self { tol, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        match self.domain {
            RadialDomain::Ball { radius } if !(radius > 0.0 && radius.is_finite()) => {
                return bad(format!("ball radius must be positive, got {radius}"));
            }
            RadialDomain::Annulus { inner, outer }
                if !(inner > 0.0 && inner < outer && outer.is_finite()) =>
            {
                return bad(format!("need 0 < R0 < R1, got R0 = {inner}, R1 = {outer}"));
            }
            _ => {}
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return bad(format!("p must be > 1, got {}", self.p));
        }
        if self.dim < 2 {
            return bad(format!("dimension must be >= 2, got {}", self.dim));
        }
        if !(self.tol > 0.0) || self.steps < 10 {
            return bad("tolerance must be positive and steps >= 10".into());
        }
        Ok(())
    }

    fn outer_radius(&self) -> f64 {
        match self.domain {
            RadialDomain::Ball { radius } => radius,
            RadialDomain::Annulus { outer, .. } => outer,
        }
    }
}

/// Outcome of one shot at a trial eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Shot {
    /// `phi` stayed positive up to the outer radius.
    Positive,
    /// `phi` reached zero at or before the outer radius.
    Crossed,
}

struct Integrator {
    p: f64,
    dim: f64,
    lambda: f64,
}

impl Integrator {
    #[inline]
    fn rhs(&self, r: f64, phi: f64, w: f64) -> (f64, f64) {
        let (dphi, source) = if self.p == 2.0 {
            (w, phi)
        } else {
            (
                w.signum() * w.abs().powf(1.0 / (self.p - 1.0)),
                phi.signum() * phi.abs().powf(self.p - 1.0),
            )
        };
        let dw = -(self.dim - 1.0) / r * w - self.lambda * source;
        (dphi, dw)
    }

    #[inline]
    fn step(&self, r: f64, h: f64, phi: f64, w: f64) -> (f64, f64) {
        let (k1p, k1w) = self.rhs(r, phi, w);
        let (k2p, k2w) = self.rhs(r + 0.5 * h, phi + 0.5 * h * k1p, w + 0.5 * h * k1w);
        let (k3p, k3w) = self.rhs(r + 0.5 * h, phi + 0.5 * h * k2p, w + 0.5 * h * k2w);
        let (k4p, k4w) = self.rhs(r + h, phi + h * k3p, w + h * k3w);
        (
            phi + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
            w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w),
        )
    }
}

/// Starting radius and state `(r, phi, w)` for a given trial eigenvalue.
fn initial_state(prob: &RadialProblem, lambda: f64) -> (f64, f64, f64) {
    match prob.domain {
        RadialDomain::Annulus { inner, .. } => (inner, 0.0, 1.0),
        RadialDomain::Ball { radius } => {
            // Near the origin phi ~ 1, so (r^{N-1} w)' ~ -lambda r^{N-1}
            // gives w ~ -lambda r / N and phi ~ 1 - c r^{p/(p-1)}.
            let r = 1e-8 * radius;
            let n = prob.dim as f64;
            let q = prob.p / (prob.p - 1.0);
            let w = -lambda * r / n;
            let phi = 1.0 - (lambda / n).powf(1.0 / (prob.p - 1.0)) * r.powf(q) / q;
            (r, phi, w)
        }
    }
}

/// Integrates from the inner edge to the outer radius, optionally recording
/// the profile. Returns whether `phi` hit zero on the way.
fn shoot(prob: &RadialProblem, lambda: f64, mut profile: Option<&mut Vec<(f64, f64)>>) -> Result<Shot> {
    let integ = Integrator {
        p: prob.p,
        dim: prob.dim as f64,
        lambda,
    };
    let (r0, mut phi, mut w) = initial_state(prob, lambda);
    let r_end = prob.outer_radius();
    let h = (r_end - r0) / prob.steps as f64;
    if let Some(prof) = profile.as_deref_mut() {
        prof.push((r0, phi));
    }
    for k in 0..prob.steps {
        let r = r0 + k as f64 * h;
        (phi, w) = integ.step(r, h, phi, w);
        if !(phi.is_finite() && w.is_finite()) {
            return Err(Error::IntegrationBlowUp(r + h));
        }
        if let Some(prof) = profile.as_deref_mut() {
            prof.push((r0 + (k + 1) as f64 * h, phi));
        }
        if phi <= 0.0 && profile.is_none() {
            return Ok(Shot::Crossed);
        }
    }
    Ok(if phi <= 0.0 { Shot::Crossed } else { Shot::Positive })
}

/// Smallest lambda whose shooting solution vanishes at the outer radius.
pub fn radial_first_eigenvalue(prob: &RadialProblem) -> Result<f64> {
    prob.validate()?;
    let mut lo = 0.0;
    let mut hi = 1.0 / prob.outer_radius().powf(prob.p);
    while shoot(prob, hi, None)? == Shot::Positive {
        lo = hi;
        hi *= 2.0;
        if hi > LAMBDA_MAX {
            return Err(Error::BracketNotFound(LAMBDA_MAX));
        }
    }
    while hi - lo > prob.tol * hi {
        let mid = 0.5 * (lo + hi);
        match shoot(prob, mid, None)? {
            Shot::Positive => lo = mid,
            Shot::Crossed => hi = mid,
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Sampled shooting profile `(r, phi(r))` for a trial eigenvalue.
pub fn radial_profile(prob: &RadialProblem, lambda: f64) -> Result<Vec<(f64, f64)>> {
    prob.validate()?;
    let mut prof = Vec::with_capacity(prob.steps + 1);
    shoot(prob, lambda, Some(&mut prof))?;
    Ok(prof)
}

/// Radius `R` at which the ball `B_R` and the annulus `A(R, R1)` share their
/// first eigenvalue: the nodal interface of a radial two-domain candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodalSplit {
    pub radius: f64,
    pub lambda_ball: f64,
    pub lambda_annulus: f64,
}

pub fn radial_nodal_split_radius(r1: f64, p: f64, dim: usize) -> Result<NodalSplit> {
    if !(r1 > 0.0 && r1.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "outer radius must be positive, got {r1}"
        )));
    }
    // The ball eigenvalue scales exactly as R^{-p}.
    let unit_ball = radial_first_eigenvalue(&RadialProblem::ball(1.0, p, dim))?;
    let gap = |r: f64| -> Result<f64> {
        let ann = radial_first_eigenvalue(&RadialProblem::annulus(r, r1, p, dim))?;
        Ok(unit_ball / r.powf(p) - ann)
    };
    // gap decreases from +inf near 0 to -inf near R1; Illinois false
    // position keeps the bracket and converges superlinearly.
    let (mut lo, mut hi) = (1e-3 * r1, (1.0 - 1e-3) * r1);
    let (mut g_lo, mut g_hi) = (gap(lo)?, gap(hi)?);
    if g_lo <= 0.0 || g_hi >= 0.0 {
        return Err(Error::InvalidInput("split radius not bracketed".into()));
    }
    let mut side = 0i8;
    let mut radius = 0.5 * (lo + hi);
    for _ in 0..200 {
        radius = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        if hi - lo <= 1e-12 * r1 {
            break;
        }
        let g = gap(radius)?;
        if g == 0.0 {
            break;
        }
        if g > 0.0 {
            lo = radius;
            g_lo = g;
            if side == 1 {
                g_hi *= 0.5;
            }
            side = 1;
        } else {
            hi = radius;
            g_hi = g;
            if side == -1 {
                g_lo *= 0.5;
            }
            side = -1;
        }
        if (hi - lo).abs() <= 1e-12 * r1 || g.abs() <= 1e-9 * unit_ball {
            radius = if g > 0.0 { lo } else { hi };
            break;
        }
    }
    Ok(NodalSplit {
        radius,
        lambda_ball: radial_first_eigenvalue(&RadialProblem::ball(radius, p, dim))?,
        lambda_annulus: radial_first_eigenvalue(&RadialProblem::annulus(radius, r1, p, dim))?,
    })
}
