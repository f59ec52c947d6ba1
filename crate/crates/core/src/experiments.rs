//! Experiment drivers: offset sweeps, large- and small-p limits, the mirror
//! symmetry audit and the nodal-split check for sign-changing radial
//! candidates.
//!
//! Every driver is a pure function of its inputs. Independent solves may run
//! on a rayon pool, but results are always assembled in input order and each
//! solve is sequential, so reruns are bitwise identical.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{self, AnnulusSpec};
use crate::mesh::{BoundaryTag, Mesh};
use crate::radial::{radial_first_eigenvalue, radial_nodal_split_radius, NodalSplit, RadialProblem};
use crate::shape::{dlambda_ds, finite_difference_dlambda, FluxRecovery};
use crate::solver::{solve_first_eigenpair, EigenResult, SolverConfig};

/// Sweeps stay this far (relative to `R1`) from tangency.
pub const SWEEP_EDGE_MARGIN: f64 = 0.05;
/// Consecutive eigenvalues must drop by more than this many solver tolerances.
pub const DECREASE_MARGIN_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Resolution {
    pub n_radial: usize,
    pub n_angular: usize,
}

impl Resolution {
    pub const fn new(n_radial: usize, n_angular: usize) -> Self {
        Self { n_radial, n_angular }
    }

    pub fn mesh(&self, spec: &AnnulusSpec) -> Result<Mesh> {
        Mesh::generate(spec, self.n_radial, self.n_angular)
    }
}

impl std::fmt::Display for Resolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.n_radial, self.n_angular)
    }
}

impl std::str::FromStr for Resolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("resolution must look like 32x128, got `{s}`"));
        let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        Ok(Self::new(
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        ))
    }
}

/// Seventeen significant digits, enough to round-trip an `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// 64-bit FNV-1a, stable across platforms and toolchains.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn config_fingerprint(config: &SolverConfig) -> u64 {
    let text = format!(
        "p={:?};eps={:?};max_iter={};tol={:?};shrink={:?};init={:?}",
        config.p, config.epsilon, config.max_iter, config.tol, config.step_shrink, config.initial
    );
    fnv1a(text.as_bytes())
}

/// Runs `f` on `jobs` worker threads (sequentially when `jobs <= 1`),
/// keeping results in input order.
pub fn map_ordered<T, R, F>(items: &[T], jobs: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    if jobs <= 1 {
        return items.iter().map(&f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect())
}

/// Largest mirrored-vertex mismatch `|u(theta) - u(-theta)| / max |u|`.
pub fn symmetry_check(mesh: &Mesh, result: &EigenResult) -> f64 {
    let u = &result.field.values;
    let scale = result.field.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    (0..mesh.n_vertices())
        .map(|v| (u[v] - u[mesh.mirror_vertex(v)]).abs())
        .fold(0.0, f64::max)
        / scale
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub s: f64,
    pub lambda: f64,
    pub dlambda_inner: Option<f64>,
    pub dlambda_outer: Option<f64>,
    pub dlambda_fd: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub symmetry: f64,
}

impl SweepRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            fmt_float(self.s),
            fmt_float(self.lambda),
            fmt_opt(self.dlambda_inner),
            fmt_opt(self.dlambda_outer),
            fmt_opt(self.dlambda_fd),
            self.iterations,
            self.converged
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepMeta {
    pub r1: f64,
    pub r0: f64,
    pub p: f64,
    pub resolution: Resolution,
    pub config_hash: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub meta: SweepMeta,
    pub rows: Vec<SweepRow>,
}

pub const SWEEP_CSV_HEADER: &str = "s,lambda,dlambda_inner,dlambda_outer,dlambda_fd,iterations,converged";

impl SweepTable {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }

    /// `lambda(s_{k+1}) < lambda(s_k) - margin * tol * lambda(s_k)` for every
    /// consecutive pair; vacuously true for fewer than two rows.
    pub fn strictly_decreasing(&self, tol: f64) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].lambda < w[0].lambda - DECREASE_MARGIN_FACTOR * tol * w[0].lambda)
    }

    pub fn max_symmetry(&self) -> f64 {
        self.rows.iter().map(|r| r.symmetry).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv_line());
            out.push('\n');
        }
        out
    }
}

/// Which derivative estimates to attach to every sweep row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub config: SolverConfig,
    pub boundary_formulas: bool,
    pub flux: FluxRecovery,
    /// Finite-difference step; `None` skips the extra solves.
    pub fd_step: Option<f64>,
    pub jobs: usize,
}

impl SweepOptions {
    pub fn plain(config: SolverConfig) -> Self {
        Self {
            config,
            boundary_formulas: false,
            flux: FluxRecovery::default(),
            fd_step: None,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub table: SweepTable,
    pub strictly_decreasing: bool,
    pub all_converged: bool,
}

impl SweepReport {
    /// Monotonicity verdict; non-converged rows poison it.
    pub fn passed(&self) -> bool {
        self.strictly_decreasing && self.all_converged
    }
}

fn check_sorted(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidInput(format!("{what} list is empty")));
    }
    if values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(format!(
            "{what} values must be strictly increasing"
        )));
    }
    Ok(())
}

/// Largest offset accepted by the sweep drivers.
pub fn sweep_offset_limit(r1: f64, r0: f64) -> f64 {
    r1 - r0 - SWEEP_EDGE_MARGIN * r1
}

fn check_offsets(r1: f64, r0: f64, s_values: &[f64]) -> Result<()> {
    let limit = sweep_offset_limit(r1, r0);
    if let Some(&s) = s_values.iter().find(|&&s| !(s >= 0.0 && s <= limit + 1e-12 * r1)) {
        return Err(Error::OffsetOutOfRange { s, limit: r1 - r0 });
    }
    Ok(())
}

/// One solve plus the requested derivative estimates.
pub fn solve_row(
    spec: &AnnulusSpec,
    resolution: Resolution,
    opts: &SweepOptions,
) -> Result<(SweepRow, Mesh, EigenResult)> {
    let mesh = resolution.mesh(spec)?;
    let res = solve_first_eigenpair(&mesh, &opts.config)?;
    let mut row = SweepRow {
        s: spec.s,
        lambda: res.lambda,
        dlambda_inner: None,
        dlambda_outer: None,
        dlambda_fd: None,
        iterations: res.iterations,
        converged: res.converged,
        symmetry: symmetry_check(&mesh, &res),
    };
    if res.converged {
        if opts.boundary_formulas {
            row.dlambda_inner = Some(dlambda_ds(&mesh, &res, BoundaryTag::Inner, opts.flux)?);
            row.dlambda_outer = Some(dlambda_ds(&mesh, &res, BoundaryTag::Outer, opts.flux)?);
        }
        if let Some(ds) = opts.fd_step {
            row.dlambda_fd = Some(finite_difference_dlambda(
                spec,
                &opts.config,
                ds,
                (resolution.n_radial, resolution.n_angular),
            )?);
        }
    }
    Ok((row, mesh, res))
}

pub fn sweep_lambda_vs_s(
    r1: f64,
    r0: f64,
    s_values: &[f64],
    resolution: Resolution,
    opts: &SweepOptions,
) -> Result<SweepReport> {
    let base = AnnulusSpec::planar(r1, r0, 0.0)?;
    opts.config.validate()?;
    check_sorted(s_values, "s")?;
    check_offsets(r1, r0, s_values)?;
    let rows = map_ordered(s_values, opts.jobs, |&s| {
        solve_row(&base.with_offset(s), resolution, opts).map(|(row, _, _)| row)
    })?;
    let table = SweepTable {
        meta: SweepMeta {
            r1,
            r0,
            p: opts.config.p,
            resolution,
            config_hash: config_fingerprint(&opts.config),
        },
        rows,
    };
    Ok(SweepReport {
        strictly_decreasing: table.strictly_decreasing(opts.config.tol),
        all_converged: table.all_converged(),
        table,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitBands {
    /// Accepted range of `lambda^{1/p} / Lambda_inf(s)` at the largest p.
    pub infinity_ratio: (f64, f64),
    /// Accepted `|lambda - h(0)| / h(0)` at the smallest p.
    pub cheeger_relative: f64,
}

impl Default for LimitBands {
    fn default() -> Self {
        Self {
            infinity_ratio: (0.75, 1.35),
            cheeger_relative: 0.30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfinityCell {
    pub p: f64,
    pub s: f64,
    pub lambda: f64,
    /// `lambda^{1/p}`.
    pub root: f64,
    /// `2 / (R1 - R0 + s)`.
    pub target: f64,
    pub ratio: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfinityReport {
    pub cells: Vec<InfinityCell>,
    pub bands: LimitBands,
    pub largest_p: f64,
    /// Ratio band holds for every `s` at the largest `p`.
    pub within_band: bool,
    /// `lambda^{1/p}` strictly decreasing in `s` at the largest `p`.
    pub root_decreasing: bool,
    /// The closed-form target strictly decreasing in `s`.
    pub target_decreasing: bool,
    pub all_converged: bool,
}

impl InfinityReport {
    pub fn passed(&self) -> bool {
        self.within_band && self.root_decreasing && self.target_decreasing && self.all_converged
    }

    pub const CSV_HEADER: &'static str = "p,s,lambda,lambda_root,target,ratio,iterations,converged";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                fmt_float(c.p),
                fmt_float(c.s),
                fmt_float(c.lambda),
                fmt_float(c.root),
                fmt_float(c.target),
                fmt_float(c.ratio),
                c.iterations,
                c.converged
            );
        }
        out
    }
}

pub fn limit_p_infinity_check(
    r1: f64,
    r0: f64,
    s_values: &[f64],
    p_values: &[f64],
    resolution: Resolution,
    template: &SolverConfig,
    bands: LimitBands,
    jobs: usize,
) -> Result<InfinityReport> {
    let base = AnnulusSpec::planar(r1, r0, 0.0)?;
    check_sorted(s_values, "s")?;
    check_offsets(r1, r0, s_values)?;
    check_sorted(p_values, "p")?;
    if let Some(&p) = p_values.iter().find(|&&p| !(p > 2.0 && p <= 64.0)) {
        return Err(Error::InvalidInput(format!(
            "p values must lie in (2, 64], got {p}"
        )));
    }
    let grid: Vec<(f64, f64)> = p_values
        .iter()
        .flat_map(|&p| s_values.iter().map(move |&s| (p, s)))
        .collect();
    let cells = map_ordered(&grid, jobs, |&(p, s)| {
        let spec = base.with_offset(s);
        let mesh = resolution.mesh(&spec)?;
        let res = solve_first_eigenpair(&mesh, &SolverConfig { p, ..*template })?;
        let root = res.lambda.powf(1.0 / p);
        let target = geometry::lambda_infinity(&spec);
        Ok(InfinityCell {
            p,
            s,
            lambda: res.lambda,
            root,
            target,
            ratio: root / target,
            iterations: res.iterations,
            converged: res.converged,
        })
    })?;
    let largest_p = *p_values.last().unwrap_or(&f64::NAN);
    let top: Vec<&InfinityCell> = cells.iter().filter(|c| c.p == largest_p).collect();
    let within_band = top
        .iter()
        .all(|c| c.ratio >= bands.infinity_ratio.0 && c.ratio <= bands.infinity_ratio.1);
    let root_decreasing = top.windows(2).all(|w| w[1].root < w[0].root);
    let target_decreasing = top.windows(2).all(|w| w[1].target < w[0].target);
    Ok(InfinityReport {
        all_converged: cells.iter().all(|c| c.converged),
        cells,
        bands,
        largest_p,
        within_band,
        root_decreasing,
        target_decreasing,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheegerCell {
    pub p: f64,
    pub lambda: f64,
    pub relative_error: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheegerReport {
    pub cells: Vec<CheegerCell>,
    /// Cheeger constant of the concentric annulus, `|boundary| / |area|`.
    pub cheeger: f64,
    /// `|boundary| / |area|` of the annulus, identical for every contained offset.
    pub perimeter_volume_ratio: f64,
    pub bands: LimitBands,
    pub smallest_p: f64,
    pub within_band: bool,
    pub all_converged: bool,
}

impl CheegerReport {
    pub fn passed(&self) -> bool {
        self.within_band && self.all_converged
    }

    pub const CSV_HEADER: &'static str =
        "p,s,lambda,cheeger_target,relative_error,perimeter_volume_ratio,iterations,converged";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                fmt_float(c.p),
                fmt_float(0.0),
                fmt_float(c.lambda),
                fmt_float(self.cheeger),
                fmt_float(c.relative_error),
                fmt_float(self.perimeter_volume_ratio),
                c.iterations,
                c.converged
            );
        }
        out
    }
}

/// Concentric solves for `p` approaching 1, compared with the Cheeger constant.
pub fn limit_p_1_check(
    r1: f64,
    r0: f64,
    p_values: &[f64],
    resolution: Resolution,
    template: &SolverConfig,
    bands: LimitBands,
    jobs: usize,
) -> Result<CheegerReport> {
    let spec = AnnulusSpec::planar(r1, r0, 0.0)?;
    if p_values.is_empty() {
        return Err(Error::InvalidInput("p list is empty".into()));
    }
    if p_values.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput(
            "p values must be strictly decreasing toward 1".into(),
        ));
    }
    if let Some(&p) = p_values.iter().find(|&&p| !(p > 1.0 && p <= 1.5)) {
        return Err(Error::InvalidInput(format!(
            "p values must lie in (1, 1.5], got {p}"
        )));
    }
    let cheeger = geometry::perimeter_volume_ratio(&spec);
    let mesh = resolution.mesh(&spec)?;
    let cells = map_ordered(p_values, jobs, |&p| {
        let res = solve_first_eigenpair(&mesh, &SolverConfig { p, ..*template })?;
        Ok(CheegerCell {
            p,
            lambda: res.lambda,
            relative_error: (res.lambda - cheeger).abs() / cheeger,
            iterations: res.iterations,
            converged: res.converged,
        })
    })?;
    let smallest_p = *p_values.last().unwrap_or(&f64::NAN);
    let within_band = cells
        .iter()
        .filter(|c| c.p == smallest_p)
        .all(|c| c.relative_error <= bands.cheeger_relative);
    Ok(CheegerReport {
        all_converged: cells.iter().all(|c| c.converged),
        perimeter_volume_ratio: geometry::perimeter_volume_ratio(&spec.with_offset(0.5 * (r1 - r0))),
        cells,
        cheeger,
        bands,
        smallest_p,
        within_band,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FucikReport {
    pub r1: f64,
    pub p: f64,
    pub s_probe: f64,
    pub split: NodalSplit,
    /// FEM eigenvalue of the concentric outer nodal annulus `A(R1, R)`.
    pub lambda_out_concentric: f64,
    /// FEM eigenvalue with the inner ball shifted by `s_probe`.
    pub lambda_out_shifted: f64,
    /// Radial oracle for the concentric outer annulus.
    pub lambda_out_radial: f64,
    /// First eigenvalue of the inner nodal ball; invariant under translation.
    pub lambda_ball: f64,
    pub tol: f64,
    pub converged: bool,
    /// `None` for a zero probe; otherwise whether the shifted eigenvalue drops
    /// by more than the margin.
    pub verdict: Option<bool>,
}

impl FucikReport {
    pub fn margin(&self) -> f64 {
        self.lambda_out_concentric - self.lambda_out_shifted
    }

    pub const CSV_HEADER: &'static str = "R1,p,s_probe,split_radius,lambda_ball,lambda_annulus_radial,lambda_out_0,lambda_out_probe,margin,converged,verdict";

    pub fn to_csv(&self) -> String {
        format!(
            "{}\n{},{},{},{},{},{},{},{},{},{},{}\n",
            Self::CSV_HEADER,
            fmt_float(self.r1),
            fmt_float(self.p),
            fmt_float(self.s_probe),
            fmt_float(self.split.radius),
            fmt_float(self.lambda_ball),
            fmt_float(self.lambda_out_radial),
            fmt_float(self.lambda_out_concentric),
            fmt_float(self.lambda_out_shifted),
            fmt_float(self.margin()),
            self.converged,
            match self.verdict {
                Some(true) => "strict_decrease",
                Some(false) => "no_decrease",
                None => "equal",
            }
        )
    }
}

/// Splits the radial two-nodal-domain candidate on `B_{R1}` at the radius
/// where both pieces share a first eigenvalue, then shifts the hole of the
/// outer piece by `s_probe` and checks that its eigenvalue strictly drops.
pub fn fucik_nodal_split_check(
    r1: f64,
    p: f64,
    s_probe: f64,
    resolution: Resolution,
    template: &SolverConfig,
    jobs: usize,
) -> Result<FucikReport> {
    let config = SolverConfig { p, ..*template };
    config.validate()?;
    let split = radial_nodal_split_radius(r1, p, 2)?;
    let gap = r1 - split.radius;
    if !(s_probe >= 0.0 && s_probe < 0.3 * gap) {
        return Err(Error::InvalidInput(format!(
            "probe offset must lie in [0, {}), got {s_probe}",
            0.3 * gap
        )));
    }
    let outer = AnnulusSpec::planar(r1, split.radius, 0.0)?;
    let offsets = if s_probe == 0.0 {
        vec![0.0]
    } else {
        vec![0.0, s_probe]
    };
    let solves = map_ordered(&offsets, jobs, |&s| {
        let mesh = resolution.mesh(&outer.with_offset(s))?;
        solve_first_eigenpair(&mesh, &config)
    })?;
    let lambda_out_concentric = solves[0].lambda;
    let lambda_out_shifted = solves.last().map(|r| r.lambda).unwrap_or(lambda_out_concentric);
    let converged = solves.iter().all(|r| r.converged);
    let verdict = (s_probe > 0.0).then_some({
        lambda_out_shifted
            < lambda_out_concentric - DECREASE_MARGIN_FACTOR * config.tol * lambda_out_concentric
    });
    Ok(FucikReport {
        r1,
        p,
        s_probe,
        lambda_out_radial: radial_first_eigenvalue(&RadialProblem::annulus(split.radius, r1, p, 2))?,
        lambda_ball: split.lambda_ball,
        split,
        lambda_out_concentric,
        lambda_out_shifted,
        tol: config.tol,
        converged,
        verdict,
    })
}
