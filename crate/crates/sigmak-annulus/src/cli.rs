//! Command-line front end.
//!
//! Four subcommands:
//!
//! * `classify`: regime of a problem instance, as JSON on stdout;
//! * `solve`: build the profile, audit it, write a CSV of nodes and a JSON
//!   report; the exit code says whether the audit passed;
//! * `contours`: sample the conserved quantity `H(xi, q)` on a grid, with
//!   a mask marking the non-admissible band `|q| < 1`;
//! * `verify`: audit a previously written profile CSV against freshly
//!   classified problem data.
//!
//! Exit codes: 0 success and audit pass, 1 audit or construction failure,
//! 2 usage or parse error, 3 mutually inconsistent boundary data, 4 I/O
//! error. Output is a pure function of the arguments: no timestamps, no
//! environment lookups, so repeated runs are byte-identical.

use crate::cylinder::{dlnu_dr_from_slope, first_integral, from_cylinder, LevelSet};
use crate::solver::{
    build_profile, classify, reconstruct_u, BoundaryCondition, Branch, CylinderProfile,
    GridControl, ProblemSpec, Regime, RegimeTag, SolverError,
};
use crate::verification::{audit, VerificationConfig, VerificationReport};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::PathBuf;

const CSV_HEADER: &str = "t,r,xi,xi_p,u,dlnu_dr,branch";
const MAX_GRID_AXIS: usize = 4096;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or a malformed input file; exit 2.
    Usage(String),
    /// Construction or audit failure; exit 1.
    Failed(String),
    /// Boundary data admit no solution; exit 3.
    Inconsistent(String),
    /// Filesystem problem; exit 4.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Inconsistent(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Failed(m)
            | CliError::Inconsistent(m)
            | CliError::Io(m) => m,
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Invalid(m) => CliError::Usage(m),
            SolverError::InconsistentData(m) => CliError::Inconsistent(m),
            other => CliError::Failed(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "sigmak-annulus",
    about = "Radial k-curvature profiles on annuli: classification, construction, audit",
    disable_help_subcommand = true
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide which structural regime the boundary data select.
    Classify(ProblemArgs),
    /// Build the profile, audit it, and write CSV + JSON artifacts.
    Solve(SolveArgs),
    /// Sample the conserved quantity on a (xi, q) grid.
    Contours(ContourArgs),
    /// Audit an existing profile CSV against the problem data.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
struct ProblemArgs {
    /// Ambient dimension.
    #[arg(long)]
    n: u32,
    /// Curvature order.
    #[arg(long)]
    k: u32,
    /// Inner radius.
    #[arg(long)]
    a: f64,
    /// Outer radius.
    #[arg(long)]
    b: f64,
    /// Demand blow-up at both boundary spheres.
    #[arg(long, conflicts_with_all = ["c1", "c2"])]
    infinite: bool,
    /// Boundary value at the inner sphere.
    #[arg(long, requires = "c2")]
    c1: Option<f64>,
    /// Boundary value at the outer sphere.
    #[arg(long, requires = "c1")]
    c2: Option<f64>,
    /// Tolerance of the classification solves.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

impl ProblemArgs {
    fn to_spec(&self) -> Result<ProblemSpec, CliError> {
        let bc = match (self.infinite, self.c1, self.c2) {
            (true, None, None) => BoundaryCondition::Infinite,
            (false, Some(c1), Some(c2)) => BoundaryCondition::Finite { c1, c2 },
            _ => {
                return Err(CliError::Usage(
                    "give either --infinite or both --c1 and --c2".into(),
                ))
            }
        };
        Ok(ProblemSpec::new(self.n, self.k, self.a, self.b, bc)?)
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Nodes per monotone branch of the profile.
    #[arg(long, default_value_t = 2001)]
    points: usize,
    /// Where to write the node CSV.
    #[arg(long, default_value = "profile.csv")]
    out_profile: PathBuf,
    /// Where to write the JSON report.
    #[arg(long, default_value = "report.json")]
    out_report: PathBuf,
    /// Worker cap; accepted for compatibility, the construction is
    /// deterministic and single-threaded.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct ContourArgs {
    #[arg(long, default_value_t = 7)]
    n: u32,
    #[arg(long, default_value_t = 2)]
    k: u32,
    #[arg(long, default_value_t = -1.5, allow_negative_numbers = true)]
    xi_min: f64,
    #[arg(long, default_value_t = 1.5, allow_negative_numbers = true)]
    xi_max: f64,
    #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
    q_min: f64,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    q_max: f64,
    /// Samples along the xi axis.
    #[arg(long, default_value_t = 201)]
    nx: usize,
    /// Samples along the q axis.
    #[arg(long, default_value_t = 201)]
    nq: usize,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Profile CSV to audit.
    #[arg(long)]
    profile: PathBuf,
}

/// Everything that determined a run, echoed into every JSON artifact.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub subcommand: &'static str,
    pub n: u32,
    pub k: u32,
    pub a: f64,
    pub b: f64,
    pub bc: BoundaryCondition,
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points_per_branch: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

#[derive(Debug, Serialize)]
struct ClassifyOutput {
    config: RunConfig,
    regime: RegimeTag,
    #[serde(rename = "T")]
    big_t: f64,
    #[serde(rename = "T_bc", skip_serializing_if = "Option::is_none")]
    t_bc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<f64>,
    borderline: bool,
}

#[derive(Debug, Serialize)]
struct SolveOutput {
    config: RunConfig,
    regime: Regime,
    #[serde(skip_serializing_if = "Option::is_none")]
    jump_radius: Option<f64>,
    report: VerificationReport,
}

fn config_for(args: &ProblemArgs, subcommand: &'static str, spec: &ProblemSpec) -> RunConfig {
    RunConfig {
        subcommand,
        n: spec.n,
        k: spec.k,
        a: spec.a,
        b: spec.b,
        bc: spec.bc,
        tol: args.tol,
        points_per_branch: None,
        threads: None,
    }
}

fn write_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Failed(e.to_string()))
}

fn cmd_classify(args: &ProblemArgs, out: &mut impl std::io::Write) -> Result<(), CliError> {
    let spec = args.to_spec()?;
    let regime = classify(&spec, args.tol)?;
    let m = regime.t_m.map(|tm| spec.center() * tm.exp());
    let payload = ClassifyOutput {
        config: config_for(args, "classify", &spec),
        regime: regime.tag,
        big_t: spec.t_half_log(),
        t_bc: regime.t_bc,
        p_a: regime.p_a,
        p_b: regime.p_b,
        m,
        borderline: regime.borderline,
    };
    writeln!(out, "{}", write_json(&payload)?).map_err(|e| CliError::Io(e.to_string()))
}

fn render_profile_csv(profile: &CylinderProfile) -> String {
    let spec = profile.spec;
    let radial = reconstruct_u(profile);
    let mut csv = String::with_capacity(profile.len() * 140);
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    for (bi, br) in profile.branches.iter().enumerate() {
        let letter = if profile.branches.len() == 1 {
            'S'
        } else if bi == 0 {
            'L'
        } else {
            'R'
        };
        for i in br.lo..=br.hi {
            let _ = writeln!(
                csv,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{letter}",
                profile.t[i],
                radial.r[i],
                profile.xi[i],
                profile.xi_p[i],
                radial.u[i],
                radial.dlnu_dr[i],
            );
        }
        let _ = spec;
    }
    csv
}

fn cmd_solve(args: &SolveArgs, out: &mut impl std::io::Write) -> Result<(), CliError> {
    if let Some(t) = args.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
    }
    let spec = args.problem.to_spec()?;
    let regime = classify(&spec, args.problem.tol)?;
    let grid = GridControl {
        points_per_branch: args.points,
        ..GridControl::default()
    };
    let profile = build_profile(&spec, &regime, &grid)?;
    let report = audit(&profile, &VerificationConfig::default())
        .map_err(|e| CliError::Failed(e.to_string()))?;
    let mut config = config_for(&args.problem, "solve", &spec);
    config.points_per_branch = Some(args.points);
    config.threads = args.threads;
    let payload = SolveOutput {
        config,
        regime,
        jump_radius: regime.t_m.map(|tm| spec.center() * tm.exp()),
        report,
    };
    std::fs::write(&args.out_profile, render_profile_csv(&profile))
        .map_err(|e| CliError::Io(format!("{}: {e}", args.out_profile.display())))?;
    std::fs::write(&args.out_report, write_json(&payload)? + "\n")
        .map_err(|e| CliError::Io(format!("{}: {e}", args.out_report.display())))?;
    writeln!(
        out,
        "{} nodes -> {}; report -> {}",
        profile.len(),
        args.out_profile.display(),
        args.out_report.display()
    )
    .map_err(|e| CliError::Io(e.to_string()))?;
    if payload.report.pass {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "audit failed: {}",
            payload.report.failures.join("; ")
        )))
    }
}

fn cmd_contours(args: &ContourArgs, out: &mut impl std::io::Write) -> Result<(), CliError> {
    if args.nx < 2 || args.nq < 2 || args.nx > MAX_GRID_AXIS || args.nq > MAX_GRID_AXIS {
        return Err(CliError::Usage(format!(
            "grid axes must have 2..={MAX_GRID_AXIS} samples, got {}x{}",
            args.nx, args.nq
        )));
    }
    if !(args.xi_min < args.xi_max && args.q_min < args.q_max) {
        return Err(CliError::Usage("empty contour window".into()));
    }
    LevelSet::new(args.n, args.k, 0.0).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut body = String::with_capacity(args.nx * args.nq * 60);
    body.push_str("xi,q,h,excluded\n");
    for i in 0..args.nx {
        let xi = args.xi_min
            + (args.xi_max - args.xi_min) * i as f64 / (args.nx - 1) as f64;
        for j in 0..args.nq {
            let q = args.q_min + (args.q_max - args.q_min) * j as f64 / (args.nq - 1) as f64;
            let h = first_integral(xi, q, args.n, args.k);
            let excluded = if q.abs() < 1.0 { 1 } else { 0 };
            let _ = writeln!(body, "{xi:.16e},{q:.16e},{h:.16e},{excluded}");
        }
    }
    match &args.out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => out
            .write_all(body.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

#[derive(Debug)]
struct CsvRow {
    t: f64,
    r: f64,
    xi: f64,
    xi_p: f64,
    u: f64,
    dlnu_dr: f64,
    letter: char,
}

fn parse_profile_csv(text: &str) -> Result<Vec<CsvRow>, CliError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == CSV_HEADER => {}
        Some((_, h)) => {
            return Err(CliError::Usage(format!(
                "line 1: expected header '{CSV_HEADER}', found '{h}'"
            )))
        }
        None => return Err(CliError::Usage("empty profile file".into())),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(CliError::Usage(format!(
                "line {line_no}: expected 7 fields, found {}",
                fields.len()
            )));
        }
        let mut nums = [0.0f64; 6];
        for (slot, field) in nums.iter_mut().zip(&fields[..6]) {
            *slot = field.trim().parse::<f64>().map_err(|_| {
                CliError::Usage(format!("line {line_no}: unparseable number '{field}'"))
            })?;
            if !slot.is_finite() {
                return Err(CliError::Usage(format!(
                    "line {line_no}: non-finite value '{field}'"
                )));
            }
        }
        let letter = fields[6].trim();
        if !matches!(letter, "L" | "R" | "S") {
            return Err(CliError::Usage(format!(
                "line {line_no}: branch must be L, R, or S, found '{letter}'"
            )));
        }
        if let Some(prev) = rows.last() {
            let prev: &CsvRow = prev;
            if nums[0] < prev.t {
                return Err(CliError::Usage(format!(
                    "line {line_no}: time decreases ({} after {})",
                    nums[0], prev.t
                )));
            }
        }
        rows.push(CsvRow {
            t: nums[0],
            r: nums[1],
            xi: nums[2],
            xi_p: nums[3],
            u: nums[4],
            dlnu_dr: nums[5],
            letter: letter.chars().next().expect("nonempty"),
        });
    }
    if rows.len() < 2 {
        return Err(CliError::Usage(format!(
            "profile has only {} data rows",
            rows.len()
        )));
    }
    Ok(rows)
}

/// Reassemble a profile object from CSV rows so the standard audit can run
/// on it. Structural mismatches against the classified regime are reported
/// as audit failures, not parse errors.
fn profile_from_rows(
    spec: &ProblemSpec,
    regime: &Regime,
    rows: &[CsvRow],
) -> Result<(CylinderProfile, Vec<String>), CliError> {
    let mut structural = Vec::new();
    let mut branches: Vec<Branch> = Vec::new();
    let mut runs: Vec<(char, usize, usize)> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        match runs.last_mut() {
            Some((letter, _, hi)) if *letter == row.letter => *hi = i,
            _ => runs.push((row.letter, i, i)),
        }
    }
    let letters: Vec<char> = runs.iter().map(|(c, _, _)| *c).collect();
    let expected_two = regime.t_m.is_some();
    match (expected_two, letters.as_slice()) {
        (true, ['L', 'R']) | (false, ['S']) => {}
        _ => structural.push(format!(
            "branch letters {letters:?} do not match the {:?} regime",
            regime.tag
        )),
    }
    let t_m_norm = regime.t_m;
    for (letter, lo, hi) in &runs {
        let rising = match letter {
            'L' => true,
            'R' => false,
            _ => rows[*hi].xi > rows[*lo].xi,
        };
        let fold_t = match (letter, regime.tag) {
            ('L', _) | ('R', _) => t_m_norm,
            ('S', RegimeTag::Case2OuterSingular) => Some(spec.t_half_log()),
            ('S', RegimeTag::Case3InnerSingular) => Some(-spec.t_half_log()),
            _ => None,
        };
        branches.push(Branch {
            lo: *lo,
            hi: *hi,
            rising,
            fold_t,
        });
    }
    let level = LevelSet::new(spec.n, spec.k, regime.h)
        .map_err(|e| CliError::Failed(e.to_string()))?;
    let profile = CylinderProfile {
        spec: *spec,
        regime: *regime,
        grid: GridControl::default(),
        big_t: spec.t_half_log(),
        t: rows.iter().map(|r| r.t).collect(),
        xi: rows.iter().map(|r| r.xi).collect(),
        xi_p: rows.iter().map(|r| r.xi_p).collect(),
        branches,
        level,
    };
    // cross-check the redundant radial columns against the cylinder ones
    for (i, row) in rows.iter().enumerate() {
        let (r_want, u_want) = from_cylinder(row.t, row.xi, spec.a, spec.b, spec.n);
        let d_want = dlnu_dr_from_slope(row.xi_p, r_want, spec.n);
        if (row.r - r_want).abs() > 1e-10 * r_want {
            structural.push(format!("row {}: radius {} inconsistent with time", i + 1, row.r));
        }
        if (row.u - u_want).abs() > 1e-8 * u_want.abs() {
            structural.push(format!("row {}: u {} inconsistent with state", i + 1, row.u));
        }
        if (row.dlnu_dr - d_want).abs() > 1e-8 * (1.0 + d_want.abs()) {
            structural.push(format!(
                "row {}: d(ln u)/dr {} inconsistent with slope",
                i + 1,
                row.dlnu_dr
            ));
        }
        if structural.len() > 20 {
            structural.push("further row inconsistencies suppressed".into());
            break;
        }
    }
    Ok((profile, structural))
}

fn cmd_verify(args: &VerifyArgs, out: &mut impl std::io::Write) -> Result<(), CliError> {
    let spec = args.problem.to_spec()?;
    let regime = classify(&spec, args.problem.tol)?;
    let text = std::fs::read_to_string(&args.profile)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.profile.display())))?;
    let rows = parse_profile_csv(&text)?;
    let (profile, structural) = profile_from_rows(&spec, &regime, &rows)?;
    let mut report = audit(&profile, &VerificationConfig::default())
        .map_err(|e| CliError::Failed(e.to_string()))?;
    report.failures.extend(structural);
    report.pass = report.failures.is_empty();
    let payload = SolveOutput {
        config: config_for(&args.problem, "verify", &spec),
        regime,
        jump_radius: regime.t_m.map(|tm| spec.center() * tm.exp()),
        report,
    };
    writeln!(out, "{}", write_json(&payload)?).map_err(|e| CliError::Io(e.to_string()))?;
    if payload.report.pass {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "audit failed: {}",
            payload.report.failures.join("; ")
        )))
    }
}

/// Run the CLI on explicit arguments; returns the process exit code.
pub fn run_from<I, T>(args: I, out: &mut impl std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own message; usage problems are exit 2
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Classify(a) => cmd_classify(a, out),
        Command::Solve(a) => cmd_solve(a, out),
        Command::Contours(a) => cmd_contours(a, out),
        Command::Verify(a) => cmd_verify(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

/// Entry point used by the binary.
pub fn run() -> i32 {
    let mut stdout = std::io::stdout();
    run_from(std::env::args_os(), &mut stdout)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String) {
        let mut buf = Vec::new();
        let code = run_from(
            std::iter::once("sigmak-annulus").chain(args.iter().copied()),
            &mut buf,
        );
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn classify_reports_regime_and_scalars() {
        let (code, out) = run_capture(&[
            "classify", "--n", "7", "--k", "2", "--a", "1", "--b", "10", "--infinite",
        ]);
        assert_eq!(code, 0, "output: {out}");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["regime"], "InfiniteBC");
        assert!((v["T"].as_f64().unwrap() - 0.5 * 10f64.ln()).abs() < 1e-15);
        assert!((v["m"].as_f64().unwrap() - 10f64.sqrt()).abs() < 1e-12);
        assert!(v.get("T_bc").is_none());
    }

    #[test]
    fn classify_finite_reports_critical_length() {
        let (code, out) = run_capture(&[
            "classify", "--n", "7", "--k", "2", "--a", "1", "--b", "10", "--c1", "1", "--c2",
            "1",
        ]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["regime"], "Case4InteriorJump");
        assert!(v["T_bc"].as_f64().unwrap() < v["T"].as_f64().unwrap());
        assert!(v["p_a"].is_number() && v["p_b"].is_number());
    }

    #[test]
    fn usage_errors_are_exit_two() {
        let (code, _) = run_capture(&["classify", "--n", "7", "--k", "2", "--a", "1", "--b", "10"]);
        assert_eq!(code, 2, "missing boundary data must be a usage error");
        let (code, _) = run_capture(&[
            "classify", "--n", "7", "--k", "9", "--a", "1", "--b", "10", "--infinite",
        ]);
        assert_eq!(code, 2, "k > n must be a usage error");
        let (code, _) = run_capture(&[
            "contours", "--nx", "5000",
        ]);
        assert_eq!(code, 2, "oversized grid must be a usage error");
    }

    #[test]
    fn inconsistent_data_is_exit_three() {
        let b = 1.0 + 2e-10;
        let c2 = (1.0f64 / b).powf(2.5);
        let (code, _) = run_capture(&[
            "classify",
            "--n",
            "7",
            "--k",
            "2",
            "--a",
            "1",
            "--b",
            &format!("{b:.17e}"),
            "--c1",
            "1",
            "--c2",
            &format!("{c2:.17e}"),
        ]);
        assert_eq!(code, 3);
    }

    #[test]
    fn contours_pin_known_value_and_mask() {
        let (code, out) = run_capture(&[
            "contours", "--nx", "7", "--nq", "7", "--xi-min", "-1.5", "--xi-max", "1.5",
            "--q-min", "-3", "--q-max", "3",
        ]);
        assert_eq!(code, 0);
        let mut lines = out.lines();
        assert_eq!(lines.next().unwrap(), "xi,q,h,excluded");
        // the centre row xi = 0, q = -1 sits on the degenerate circle:
        // H(0, -1) = -1 for even k
        let target = out
            .lines()
            .find(|l| l.starts_with("0.0000000000000000e0,-1.0000000000000000e0"))
            .expect("grid contains (0, -1)");
        let fields: Vec<&str> = target.split(',').collect();
        assert_eq!(fields[2].parse::<f64>().unwrap(), -1.0);
        assert_eq!(fields[3], "0");
        // interior of the band is masked
        let masked = out
            .lines()
            .find(|l| l.starts_with("0.0000000000000000e0,0.0000000000000000e0"))
            .unwrap();
        assert_eq!(masked.split(',').nth(3).unwrap(), "1");
    }

    #[test]
    fn csv_parser_pinpoints_bad_rows() {
        let good = format!("{CSV_HEADER}\n0.0,1.0,2.0,3.0,4.0,5.0,S\n");
        assert!(parse_profile_csv(&good).is_err(), "one row is too short");
        let bad_header = "time,r\n";
        match parse_profile_csv(bad_header) {
            Err(CliError::Usage(m)) => assert!(m.contains("line 1"), "{m}"),
            other => panic!("{other:?}"),
        }
        let bad_field = format!("{CSV_HEADER}\n0.0,1.0,2.0,bogus,4.0,5.0,S\n0.1,1.0,2.0,3.0,4.0,5.0,S\n");
        match parse_profile_csv(&bad_field) {
            Err(CliError::Usage(m)) => assert!(m.contains("line 2"), "{m}"),
            other => panic!("{other:?}"),
        }
        let bad_letter = format!("{CSV_HEADER}\n0.0,1.0,2.0,3.0,4.0,5.0,S\n0.1,1.0,2.0,3.0,4.0,5.0,X\n");
        match parse_profile_csv(&bad_letter) {
            Err(CliError::Usage(m)) => assert!(m.contains("line 3"), "{m}"),
            other => panic!("{other:?}"),
        }
        let decreasing = format!("{CSV_HEADER}\n0.1,1.0,2.0,3.0,4.0,5.0,S\n0.0,1.0,2.0,3.0,4.0,5.0,S\n");
        match parse_profile_csv(&decreasing) {
            Err(CliError::Usage(m)) => assert!(m.contains("time decreases"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn solve_then_verify_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let prof = dir.path().join("p.csv");
        let rep = dir.path().join("r.json");
        let (code, _) = run_capture(&[
            "solve", "--n", "7", "--k", "2", "--a", "1", "--b", "10", "--infinite",
            "--points", "2001",
            "--out-profile", prof.to_str().unwrap(),
            "--out-report", rep.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
        assert_eq!(report["report"]["pass"], true);
        let (code, out) = run_capture(&[
            "verify", "--n", "7", "--k", "2", "--a", "1", "--b", "10", "--infinite",
            "--profile", prof.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "verify output: {out}");

        // flip the slope signs: parse succeeds, audit must fail
        let text = std::fs::read_to_string(&prof).unwrap();
        let mut flipped = String::from(CSV_HEADER);
        flipped.push('\n');
        for line in text.lines().skip(1) {
            let mut fields: Vec<String> = line.split(',').map(str::to_string).collect();
            let v: f64 = fields[3].parse().unwrap();
            fields[3] = format!("{:.16e}", -v);
            flipped.push_str(&fields.join(","));
            flipped.push('\n');
        }
        let tampered = dir.path().join("tampered.csv");
        std::fs::write(&tampered, flipped).unwrap();
        let (code, _) = run_capture(&[
            "verify", "--n", "7", "--k", "2", "--a", "1", "--b", "10", "--infinite",
            "--profile", tampered.to_str().unwrap(),
        ]);
        assert_eq!(code, 1, "sign-flipped profile must fail the audit");

        // truncate a field: parse must fail with the offending line
        let broken = dir.path().join("broken.csv");
        let mut text = std::fs::read_to_string(&prof).unwrap();
        let cut = text.lines().nth(5).unwrap().len();
        let pos = text.match_indices('\n').nth(4).unwrap().0 + 1;
        text.replace_range(pos..pos + cut, "1.0,2.0,3.0");
        std::fs::write(&broken, text).unwrap();
        let (code, _) = run_capture(&[
            "verify", "--n", "7", "--k", "2", "--a", "1", "--b", "10", "--infinite",
            "--profile", broken.to_str().unwrap(),
        ]);
        assert_eq!(code, 2, "malformed row must be a parse error");
    }
}
