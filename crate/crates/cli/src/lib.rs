//! `plap` command-line front end.
//!
//! Every subcommand writes a CSV whose first line is `# config: <flags>`,
//! the canonical flag string that reproduces the run. Exit codes: 0 success,
//! 1 a monotonicity or limit check failed, 2 usage error, 3 could not compute.

use std::io::Write;

use clap::{Args, CommandFactory, Parser, Subcommand};
use plap_core::experiments::{
    self, fmt_float, fucik_nodal_split_check, limit_p_1_check, limit_p_infinity_check, solve_row,
    sweep_lambda_vs_s, LimitBands, Resolution, SweepOptions, SweepTable, SWEEP_CSV_HEADER,
};
use plap_core::shape::FluxRecovery;
use plap_core::{AnnulusSpec, Error, SolverConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_COMPUTE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "plap",
    version,
    about = "First p-Laplacian eigenvalue on eccentric annuli"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the first eigenpair at one offset.
    Solve(SolveArgs),
    /// Sweep lambda over offsets and check strict decrease.
    Sweep(SweepArgs),
    /// Inner, outer and finite-difference d lambda/ds.
    ShapeDeriv(ShapeArgs),
    /// lambda^(1/p) against 2/(R1-R0+s) for large p.
    LimitPinf(LimitInfArgs),
    /// lambda against the Cheeger constant for p near 1.
    LimitP1(LimitOneArgs),
    /// Nodal-split check for radial sign-changing candidates on a disk.
    FucikCheck(FucikArgs),
    /// Mesh statistics, optionally dumping the mesh.
    MeshInfo(MeshArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Outer radius.
    #[arg(long = "R1", default_value_t = 1.0, allow_negative_numbers = true)]
    pub r1: f64,
    /// Inner radius.
    #[arg(long = "R0", default_value_t = 0.3, allow_negative_numbers = true)]
    pub r0: f64,
    /// Mesh resolution, `<n_radial>x<n_angular>`.
    #[arg(long, default_value = "32x128", value_parser = parse_resolution)]
    pub res: Resolution,
    /// Relative Rayleigh-quotient change at which the solver stops.
    #[arg(long, default_value_t = SolverConfig::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long = "max-iter", default_value_t = SolverConfig::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Output CSV path (standard output when absent).
    #[arg(long, short)]
    pub output: Option<std::path::PathBuf>,
    /// Cap on concurrent solves.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub s: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub p: f64,
    /// Also write the mesh dump to this path.
    #[arg(long = "emit-mesh")]
    pub emit_mesh: Option<std::path::PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Offsets: `start:stop:step`, a comma list, or a single value.
    #[arg(long, default_value = "0:0.6:0.1")]
    pub s: String,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub p: f64,
    /// Add the finite-difference column with this step.
    #[arg(long = "fd-step")]
    pub fd_step: Option<f64>,
    /// Boundary flux recovery: `residual` or `triangle`.
    #[arg(long, default_value = "residual", value_parser = parse_flux)]
    pub flux: FluxRecovery,
}

#[derive(Debug, Clone, Args)]
pub struct ShapeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Offsets: `start:stop:step`, a comma list, or a single value.
    #[arg(long, default_value = "0.3")]
    pub s: String,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub p: f64,
    /// Finite-difference step.
    #[arg(long, default_value_t = 0.01)]
    pub ds: f64,
    /// Boundary flux recovery: `residual` or `triangle`.
    #[arg(long, default_value = "residual", value_parser = parse_flux)]
    pub flux: FluxRecovery,
}

#[derive(Debug, Clone, Args)]
pub struct LimitInfArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "0,0.2,0.4")]
    pub s: String,
    /// Increasing exponents in (2, 64].
    #[arg(long, default_value = "10")]
    pub p: String,
    #[arg(long = "band-low", default_value_t = LimitBands::default().infinity_ratio.0)]
    pub band_low: f64,
    #[arg(long = "band-high", default_value_t = LimitBands::default().infinity_ratio.1)]
    pub band_high: f64,
}

#[derive(Debug, Clone, Args)]
pub struct LimitOneArgs {
    #[command(flatten)]
    pub common: Common,
    /// Exponents in (1, 1.5], decreasing toward 1.
    #[arg(long, default_value = "1.2")]
    pub p: String,
    /// Accepted relative distance to the Cheeger constant at the smallest p.
    #[arg(long, default_value_t = LimitBands::default().cheeger_relative)]
    pub band: f64,
}

#[derive(Debug, Clone, Args)]
pub struct FucikArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub p: f64,
    /// Probe offset of the outer nodal annulus.
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub s: f64,
}

#[derive(Debug, Clone, Args)]
pub struct MeshArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub s: f64,
    #[arg(long = "emit-mesh")]
    pub emit_mesh: Option<std::path::PathBuf>,
}

fn parse_flux(s: &str) -> Result<FluxRecovery, String> {
    s.parse::<FluxRecovery>().map_err(|e| e.to_string())
}

fn flux_name(f: FluxRecovery) -> &'static str {
    match f {
        FluxRecovery::Residual => "residual",
        FluxRecovery::AdjacentTriangle => "triangle",
    }
}

fn parse_resolution(s: &str) -> Result<Resolution, String> {
    s.parse::<Resolution>().map_err(|e| e.to_string())
}

/// Parses `start:stop:step` (inclusive within half a step), `a,b,c`, or `a`.
pub fn parse_values(text: &str) -> Result<Vec<f64>, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("`{t}` is not a number"))
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0) || stop < start {
                return Err(format!("bad range `{text}`"));
            }
            let count = ((stop - start) / step + 0.5).floor() as usize;
            Ok((0..=count).map(|k| start + k as f64 * step).collect())
        }
        [_] => text.split(',').map(num).collect(),
        _ => Err(format!("bad value list `{text}`")),
    }
}

fn fmt_flag(x: f64) -> String {
    format!("{x}")
}

impl Common {
    fn config(&self, p: f64) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            ..SolverConfig::new(p)
        }
    }

    fn canonical(&self) -> String {
        format!(
            "--R1 {} --R0 {} --res {} --tol {} --max-iter {}",
            fmt_flag(self.r1),
            fmt_flag(self.r0),
            self.res,
            fmt_flag(self.tol),
            self.max_iter
        )
    }
}

/// Outcome of a subcommand before it is mapped to an exit code.
enum Failure {
    Usage(String),
    Compute(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidSpec(_)
            | Error::DimensionMismatch { .. }
            | Error::ZeroNormal
            | Error::InvalidMeshParams(_)
            | Error::OffsetOutOfRange { .. }
            | Error::InvalidConfig(_)
            | Error::InvalidInput(_) => Failure::Usage(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

struct Output {
    csv: String,
    exit: i32,
    summary: String,
}

fn validate_common(c: &Common) -> Result<AnnulusSpec, Failure> {
    let spec = AnnulusSpec::planar(c.r1, c.r0, 0.0)?;
    check_resolution(c.res)?;
    if !(c.tol > 0.0) {
        return Err(Failure::Usage(format!("--tol must be positive, got {}", c.tol)));
    }
    if c.max_iter == 0 || c.jobs == 0 {
        return Err(Failure::Usage("--max-iter and --jobs must be positive".into()));
    }
    Ok(spec)
}

fn check_resolution(res: Resolution) -> Result<(), Failure> {
    if res.n_radial < 2 || res.n_angular < 8 || !res.n_angular.is_multiple_of(2) {
        return Err(Failure::Usage(format!(
            "--res needs n_radial >= 2 and even n_angular >= 8, got {res}"
        )));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<(), Failure> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--p must be > 1, got {p}")))
    }
}

fn check_offsets(spec: &AnnulusSpec, s_values: &[f64]) -> Result<(), Failure> {
    let limit = experiments::sweep_offset_limit(spec.r1, spec.r0);
    match s_values
        .iter()
        .find(|&&s| !(s >= 0.0 && s <= limit + 1e-12 * spec.r1))
    {
        Some(s) => Err(Failure::Usage(format!(
            "offset {s} outside [0, {limit}] (R1 - R0 - {} R1)",
            experiments::SWEEP_EDGE_MARGIN
        ))),
        None => Ok(()),
    }
}

fn run_solve(a: &SolveArgs) -> Result<Output, Failure> {
    let spec = validate_common(&a.common)?.with_offset(a.s);
    check_p(a.p)?;
    spec.check_contained()?;
    let opts = SweepOptions::plain(a.common.config(a.p));
    let (row, mesh, _) = solve_row(&spec, a.common.res, &opts)?;
    if let Some(path) = &a.emit_mesh {
        std::fs::write(path, mesh.to_dump())
            .map_err(|e| Failure::Compute(format!("{}: {e}", path.display())))?;
    }
    let exit = if row.converged { EXIT_OK } else { EXIT_COMPUTE };
    Ok(Output {
        csv: format!("{SWEEP_CSV_HEADER}\n{}\n", row.csv_line()),
        exit,
        summary: format!(
            "lambda = {} ({} iterations, converged = {})",
            fmt_float(row.lambda),
            row.iterations,
            row.converged
        ),
    })
}

fn run_sweep(a: &SweepArgs) -> Result<Output, Failure> {
    let spec = validate_common(&a.common)?;
    check_p(a.p)?;
    let s_values = parse_values(&a.s).map_err(Failure::Usage)?;
    check_offsets(&spec, &s_values)?;
    if let Some(ds) = a.fd_step {
        if !(ds > 0.0) {
            return Err(Failure::Usage(format!("--fd-step must be positive, got {ds}")));
        }
    }
    let opts = SweepOptions {
        config: a.common.config(a.p),
        boundary_formulas: true,
        flux: a.flux,
        fd_step: a.fd_step,
        jobs: a.common.jobs,
    };
    let rep = sweep_lambda_vs_s(spec.r1, spec.r0, &s_values, a.common.res, &opts)?;
    let exit = if !rep.all_converged {
        EXIT_COMPUTE
    } else if !rep.strictly_decreasing {
        EXIT_VERDICT
    } else {
        EXIT_OK
    };
    Ok(Output {
        csv: rep.table.to_csv(),
        exit,
        summary: format!(
            "{} rows, strictly decreasing = {}, all converged = {}, max mirror mismatch = {:e}",
            rep.table.rows.len(),
            rep.strictly_decreasing,
            rep.all_converged,
            rep.table.max_symmetry()
        ),
    })
}

fn run_shape(a: &ShapeArgs) -> Result<Output, Failure> {
    let spec = validate_common(&a.common)?;
    check_p(a.p)?;
    let s_values = parse_values(&a.s).map_err(Failure::Usage)?;
    check_offsets(&spec, &s_values)?;
    if !(a.ds > 0.0) {
        return Err(Failure::Usage(format!("--ds must be positive, got {}", a.ds)));
    }
    let opts = SweepOptions {
        config: a.common.config(a.p),
        boundary_formulas: true,
        flux: a.flux,
        fd_step: Some(a.ds),
        jobs: 1,
    };
    let rows = experiments::map_ordered(&s_values, a.common.jobs, |&s| {
        solve_row(&spec.with_offset(s), a.common.res, &opts).map(|(row, _, _)| row)
    })?;
    let all_converged = rows.iter().all(|r| r.converged);
    let negative = rows.iter().filter(|r| r.s > 0.0).all(|r| {
        [r.dlambda_inner, r.dlambda_outer, r.dlambda_fd]
            .iter()
            .all(|d| d.is_some_and(|v| v < 0.0))
    });
    let table = SweepTable {
        meta: experiments::SweepMeta {
            r1: spec.r1,
            r0: spec.r0,
            p: a.p,
            resolution: a.common.res,
            config_hash: experiments::config_fingerprint(&opts.config),
        },
        rows,
    };
    let exit = if !all_converged {
        EXIT_COMPUTE
    } else if !negative {
        EXIT_VERDICT
    } else {
        EXIT_OK
    };
    Ok(Output {
        csv: table.to_csv(),
        exit,
        summary: format!("all derivatives negative for s > 0 = {negative}"),
    })
}

fn run_limit_inf(a: &LimitInfArgs) -> Result<Output, Failure> {
    let spec = validate_common(&a.common)?;
    let s_values = parse_values(&a.s).map_err(Failure::Usage)?;
    let p_values = parse_values(&a.p).map_err(Failure::Usage)?;
    check_offsets(&spec, &s_values)?;
    let bands = LimitBands {
        infinity_ratio: (a.band_low, a.band_high),
        ..LimitBands::default()
    };
    let rep = limit_p_infinity_check(
        spec.r1,
        spec.r0,
        &s_values,
        &p_values,
        a.common.res,
        &a.common.config(2.0),
        bands,
        a.common.jobs,
    )?;
    let exit = if !rep.all_converged {
        EXIT_COMPUTE
    } else if !rep.passed() {
        EXIT_VERDICT
    } else {
        EXIT_OK
    };
    Ok(Output {
        csv: rep.to_csv(),
        exit,
        summary: format!(
            "p = {}: ratio band = {}, lambda^(1/p) decreasing = {}, target decreasing = {}",
            rep.largest_p, rep.within_band, rep.root_decreasing, rep.target_decreasing
        ),
    })
}

fn run_limit_one(a: &LimitOneArgs) -> Result<Output, Failure> {
    let spec = validate_common(&a.common)?;
    let p_values = parse_values(&a.p).map_err(Failure::Usage)?;
    let bands = LimitBands {
        cheeger_relative: a.band,
        ..LimitBands::default()
    };
    let rep = limit_p_1_check(
        spec.r1,
        spec.r0,
        &p_values,
        a.common.res,
        &a.common.config(2.0),
        bands,
        a.common.jobs,
    )?;
    let exit = if !rep.all_converged {
        EXIT_COMPUTE
    } else if !rep.passed() {
        EXIT_VERDICT
    } else {
        EXIT_OK
    };
    Ok(Output {
        csv: rep.to_csv(),
        exit,
        summary: format!(
            "h(0) = {}, within band at p = {}: {}",
            rep.cheeger, rep.smallest_p, rep.within_band
        ),
    })
}

fn run_fucik(a: &FucikArgs) -> Result<Output, Failure> {
    if !(a.common.r1 > 0.0) {
        return Err(Failure::Usage(format!(
            "--R1 must be positive, got {}",
            a.common.r1
        )));
    }
    check_resolution(a.common.res)?;
    check_p(a.p)?;
    let rep = fucik_nodal_split_check(
        a.common.r1,
        a.p,
        a.s,
        a.common.res,
        &a.common.config(a.p),
        a.common.jobs,
    )?;
    let exit = if !rep.converged {
        EXIT_COMPUTE
    } else if rep.verdict == Some(false) {
        EXIT_VERDICT
    } else {
        EXIT_OK
    };
    Ok(Output {
        csv: rep.to_csv(),
        exit,
        summary: format!(
            "split radius = {}, outer piece lambda {} -> {} (verdict {:?})",
            rep.split.radius, rep.lambda_out_concentric, rep.lambda_out_shifted, rep.verdict
        ),
    })
}

fn run_mesh_info(a: &MeshArgs) -> Result<Output, Failure> {
    let spec = validate_common(&a.common)?.with_offset(a.s);
    let mesh = a.common.res.mesh(&spec)?;
    if let Some(path) = &a.emit_mesh {
        std::fs::write(path, mesh.to_dump())
            .map_err(|e| Failure::Compute(format!("{}: {e}", path.display())))?;
    }
    let inner = mesh
        .boundary_edges
        .iter()
        .filter(|e| e.tag == plap_core::BoundaryTag::Inner)
        .count();
    let min_area = mesh
        .triangles
        .iter()
        .map(|&t| mesh.area(t))
        .fold(f64::INFINITY, f64::min);
    let exact = std::f64::consts::PI * (spec.r1 * spec.r1 - spec.r0 * spec.r0);
    let csv = format!(
        "n_radial,n_angular,vertices,triangles,inner_edges,outer_edges,total_area,exact_area,min_triangle_area\n{},{},{},{},{},{},{},{},{}\n",
        mesh.n_radial,
        mesh.n_angular,
        mesh.n_vertices(),
        mesh.triangles.len(),
        inner,
        mesh.boundary_edges.len() - inner,
        fmt_float(mesh.total_area()),
        fmt_float(exact),
        fmt_float(min_area)
    );
    Ok(Output {
        csv,
        exit: EXIT_OK,
        summary: format!(
            "{} vertices, {} triangles",
            mesh.n_vertices(),
            mesh.triangles.len()
        ),
    })
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Solve(a) => &a.common,
            Command::Sweep(a) => &a.common,
            Command::ShapeDeriv(a) => &a.common,
            Command::LimitPinf(a) => &a.common,
            Command::LimitP1(a) => &a.common,
            Command::FucikCheck(a) => &a.common,
            Command::MeshInfo(a) => &a.common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Sweep(_) => "sweep",
            Command::ShapeDeriv(_) => "shape-deriv",
            Command::LimitPinf(_) => "limit-pinf",
            Command::LimitP1(_) => "limit-p1",
            Command::FucikCheck(_) => "fucik-check",
            Command::MeshInfo(_) => "mesh-info",
        }
    }

    /// Flag string that reproduces the run; excludes output path and job count,
    /// which do not affect the numbers.
    pub fn canonical(&self) -> String {
        let extra = match self {
            Command::Solve(a) => format!("--s {} --p {}", fmt_flag(a.s), fmt_flag(a.p)),
            Command::Sweep(a) => {
                let mut s = format!("--s {} --p {} --flux {}", a.s, fmt_flag(a.p), flux_name(a.flux));
                if let Some(ds) = a.fd_step {
                    s.push_str(&format!(" --fd-step {}", fmt_flag(ds)));
                }
                s
            }
            Command::ShapeDeriv(a) => format!(
                "--s {} --p {} --ds {} --flux {}",
                a.s,
                fmt_flag(a.p),
                fmt_flag(a.ds),
                flux_name(a.flux)
            ),
            Command::LimitPinf(a) => format!(
                "--s {} --p {} --band-low {} --band-high {}",
                a.s,
                a.p,
                fmt_flag(a.band_low),
                fmt_flag(a.band_high)
            ),
            Command::LimitP1(a) => format!("--p {} --band {}", a.p, fmt_flag(a.band)),
            Command::FucikCheck(a) => format!("--p {} --s {}", fmt_flag(a.p), fmt_flag(a.s)),
            Command::MeshInfo(a) => format!("--s {}", fmt_flag(a.s)),
        };
        format!("{} {} {}", self.name(), self.common().canonical(), extra)
    }
}

fn dispatch(cmd: &Command) -> Result<Output, Failure> {
    match cmd {
        Command::Solve(a) => run_solve(a),
        Command::Sweep(a) => run_sweep(a),
        Command::ShapeDeriv(a) => run_shape(a),
        Command::LimitPinf(a) => run_limit_inf(a),
        Command::LimitP1(a) => run_limit_one(a),
        Command::FucikCheck(a) => run_fucik(a),
        Command::MeshInfo(a) => run_mesh_info(a),
    }
}

/// Runs the CLI on `argv` (including the program name), writing the CSV to
/// `stdout` unless `--output` is given. Returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    let out = match dispatch(&cli.command) {
        Ok(out) => out,
        Err(Failure::Usage(msg)) => {
            let mut cmd = Cli::command();
            let help = cmd
                .find_subcommand_mut(cli.command.name())
                .map(|c| c.render_help().to_string())
                .unwrap_or_default();
            let _ = writeln!(stderr, "error: {msg}\n\n{help}");
            return EXIT_USAGE;
        }
        Err(Failure::Compute(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_COMPUTE;
        }
    };
    let text = format!("# config: {}\n{}", cli.command.canonical(), out.csv);
    match &cli.command.common().output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                let _ = writeln!(stderr, "error: {}: {e}", path.display());
                return EXIT_COMPUTE;
            }
        }
        None => {
            let _ = stdout.write_all(text.as_bytes());
        }
    }
    let _ = writeln!(stderr, "{}", out.summary);
    out.exit
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_lists() {
        assert_eq!(parse_values("0:0.6:0.1").unwrap().len(), 7);
        assert_eq!(parse_values("0:0.64:0.1").unwrap().len(), 7);
        assert_eq!(parse_values("0:0.66:0.1").unwrap().len(), 8);
        assert_eq!(parse_values("0,0.2,0.4").unwrap(), vec![0.0, 0.2, 0.4]);
        assert_eq!(parse_values("0.3").unwrap(), vec![0.3]);
        assert!(parse_values("0:1").is_err());
        assert!(parse_values("0:1:0").is_err());
        assert!(parse_values("a,b").is_err());
    }

    #[test]
    fn canonical_string_is_stable() {
        let cli = Cli::try_parse_from(["plap", "solve", "--R0", "0.5", "--p", "2", "--jobs", "3"]).unwrap();
        assert_eq!(
            cli.command.canonical(),
            "solve --R1 1 --R0 0.5 --res 32x128 --tol 0.0000000001 --max-iter 50000 --s 0 --p 2"
        );
    }
}
