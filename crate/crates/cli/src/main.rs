//! `qlandauer`: entropies, majorization, work-cost bounds and certificates from the command line.

mod demo;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use qlandauer::entropy::{
    h_max_cond, h_min, h_min_cond, h_smooth_classical, h_von_neumann, h_zero, h_zero_cond_with_tol,
    SmoothKind, SmoothingParams,
};
use qlandauer::io::{load_channel, load_state, parse_spectrum, read_json, write_json};
use qlandauer::landauer::{build_instance, work_bound};
use qlandauer::majorize::{absorbed_randomness, lambda_feasible, majorizes, Spectrum};
use qlandauer::qmat::DEFAULT_SUPPORT_TOL;
use qlandauer::sdp::{encode_landauer_primal, CertificateDump};

use report::{CliError, Report};

/// Boltzmann constant in J/K (CODATA 2018, exact).
const BOLTZMANN: f64 = 1.380649e-23;

#[derive(Parser, Debug)]
#[command(name = "qlandauer", version, about = "Work cost of quantum processes")]
struct Cli {
    /// Emit machine-readable JSON at full precision.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Entropy of a state file.
    Entropy {
        state: PathBuf,
        #[arg(long, value_enum)]
        measure: Measure,
        /// Index of the conditioning subsystem of a bipartite state.
        #[arg(long)]
        cond: Option<usize>,
        /// Smoothing radius (trace distance), applied to the spectrum.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Majorization between two spectra, given inline as JSON arrays or as files.
    Majorize {
        spec_a: String,
        spec_b: String,
        /// Test λ-majorization instead of plain majorization.
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
    },
    /// Minimal work to run a channel on a state, with its optimality certificate.
    Workbound {
        sigma: PathBuf,
        channel: PathBuf,
        /// Also solve the work-cost program with the interior-point solver.
        #[arg(long)]
        sdp_check: bool,
        /// Report the work in joules at this temperature (kelvin).
        #[arg(long)]
        temp: Option<f64>,
        /// Write the primal-dual pair to this file for `certify`.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Re-check a dumped primal-dual pair.
    Certify {
        sdp_dump: PathBuf,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Worked examples.
    Demo {
        #[command(subcommand)]
        which: demo::Demo,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Measure {
    H0,
    Hmin,
    Hmax,
    Vn,
}

fn support_tol() -> Result<f64, CliError> {
    match std::env::var("TOL_SUPPORT") {
        Err(_) => Ok(DEFAULT_SUPPORT_TOL),
        Ok(text) => match text.trim().parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
            _ => Err(CliError::Parse(format!(
                "TOL_SUPPORT: expected a positive number, got `{text}`"
            ))),
        },
    }
}

fn entropy(state: &Path, measure: Measure, cond: Option<usize>, eps: Option<f64>) -> Result<Report, CliError> {
    let rho = load_state(state)?;
    let tol = support_tol()?;
    let label = match measure {
        Measure::H0 => "H₀",
        Measure::Hmin => "Hmin",
        Measure::Hmax => "Hmax",
        Measure::Vn => "H",
    };
    let sub = |i: usize| ["A", "B"].get(i).copied().unwrap_or("?");
    let name = match (cond, eps) {
        (Some(b), _) => format!("{label}({}|{})", sub(1 - b.min(1)), sub(b)),
        (None, Some(e)) => format!("{label}^{e}"),
        (None, None) => label.to_string(),
    };
    let value = match (measure, cond, eps) {
        (_, Some(_), Some(_)) => {
            return Err(CliError::Domain("smoothing is only available for unconditional entropies".into()))
        }
        (Measure::H0, None, Some(e)) => h_smooth_classical(&rho.spectrum()?, SmoothingParams::new(e)?, SmoothKind::Zero)?,
        (Measure::Hmin, None, Some(e)) => h_smooth_classical(&rho.spectrum()?, SmoothingParams::new(e)?, SmoothKind::Min)?,
        (_, None, Some(_)) => return Err(CliError::Domain("--eps applies to h0 and hmin only".into())),
        (Measure::H0, None, None) => h_zero(&rho, tol)?,
        (Measure::H0, Some(b), None) => h_zero_cond_with_tol(&rho, b, tol)?,
        (Measure::Hmin, None, None) => h_min(&rho)?,
        (Measure::Hmin, Some(b), None) => h_min_cond(&rho, b)?,
        (Measure::Hmax, None, None) => h_max_cond(&rho.with_dims(vec![rho.dim(), 1])?, 1)?,
        (Measure::Hmax, Some(b), None) => h_max_cond(&rho, b)?,
        (Measure::Vn, None, None) => h_von_neumann(&rho)?,
        (Measure::Vn, Some(b), None) => {
            if rho.dims().len() != 2 || b > 1 {
                return Err(CliError::Domain(format!(
                    "conditioning needs a bipartite state and --cond 0 or 1, got dims {:?}",
                    rho.dims()
                )));
            }
            let joint = h_von_neumann(&rho)?.bits;
            let marginal = h_von_neumann(&rho.reduce(&[b])?)?.bits;
            qlandauer::entropy::EntropyValue::new(joint - marginal)?
        }
    };
    Ok(Report::new(json!({ "measure": name, "bits": value.bits }))
        .line(format!("{name} = {:.6} bits", value.bits)))
}

fn load_spectrum(arg: &str) -> Result<Spectrum, CliError> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('[') || trimmed.starts_with('{') {
        Ok(parse_spectrum(arg)?)
    } else {
        let text = std::fs::read_to_string(arg)
            .map_err(|e| CliError::Parse(format!("{arg}: {e}")))?;
        Ok(parse_spectrum(&text)?)
    }
}

fn majorize(a: &str, b: &str, lambda: Option<f64>) -> Result<Report, CliError> {
    let p = load_spectrum(a)?;
    let q = load_spectrum(b)?;
    let r = absorbed_randomness(&p, &q)?;
    match lambda {
        None => {
            let m = majorizes(&p, &q);
            Ok(Report::new(json!({ "majorizes": m, "absorbed_randomness": r }))
                .line(format!("majorizes: {m}"))
                .line(format!("absorbed randomness R = {r:.6} bits")))
        }
        Some(l) => {
            let (ok, _) = lambda_feasible(&p, &q, l)?;
            Ok(Report::new(json!({ "lambda": l, "lambda_majorizes": ok, "absorbed_randomness": r }))
                .line(format!("lambda-majorizes (λ = {l:.6}): {ok}"))
                .line(format!("absorbed randomness R = {r:.6} bits")))
        }
    }
}

fn workbound(
    sigma: &Path,
    channel: &Path,
    sdp_check: bool,
    temp: Option<f64>,
    dump: Option<&Path>,
) -> Result<Report, CliError> {
    if let Some(t) = temp {
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::Domain(format!("temperature must be positive, got {t}")));
        }
    }
    let sigma_x = load_state(sigma)?;
    let process = load_channel(channel)?;
    let inst = build_instance(&sigma_x, &process)?;
    let report = work_bound(&inst, sdp_check)?;

    let mut out = Report::new(serde_json::to_value(&report).map_err(|e| CliError::Domain(e.to_string()))?)
        .line(format!("H₀(E|X') = {:.6} bits", report.h_zero_cond_bits.bits))
        .line(format!("λ_opt = {:.6} bits", report.lambda_opt))
        .line(format!("minimal work = {:.6} kT ln 2", report.work_min_kt_ln2))
        .line(format!("α (closed-form primal) = {:.6}", report.alpha_primal))
        .line(format!("dual value = {:.6}", report.dual_value))
        .line(format!("duality gap = {:.6}", report.gap))
        .line(format!(
            "certificate: {} (max residual {:.3e})",
            if report.residuals.passed { "passed" } else { "FAILED" },
            report.residuals.max_residual()
        ));
    if let Some(s) = &report.sdp_check {
        out = out.line(format!(
            "SDP α = {:.6} (λ = {:.6}, status {:?}, gap {:.3e}, {} iterations)",
            s.alpha, s.lambda, s.status, s.duality_gap, s.iterations
        ));
    }
    if let Some(t) = temp {
        let joules = report.joules(t, BOLTZMANN);
        out.extend_json("joules", json!(joules));
        out.extend_json("temperature_kelvin", json!(t));
        out = out.line(format!("minimal work at {t:.6} K = {joules:.6e} J"));
    }
    if let Some(path) = dump {
        let sigma_xr = inst.sigma_xr();
        let rho_xr = inst.rho_xr();
        let doc = if sdp_check {
            let program = encode_landauer_primal(sigma_xr, rho_xr)?;
            let sol = program.solve()?;
            CertificateDump::new(sigma_xr, rho_xr, sol.alpha, &sol.t_choi, &sol.certificate, Some((&program, &sol.sdp)))
        } else {
            CertificateDump::new(
                sigma_xr,
                rho_xr,
                report.alpha_primal,
                report.optimal_channel.choi(),
                &report.certificate,
                None,
            )
        };
        write_json(path, &doc)?;
        out = out.line(format!("certificate written to {}", path.display()));
    }
    Ok(out)
}

fn certify(path: &Path, tol: f64) -> Result<Report, CliError> {
    let dump: CertificateDump = read_json(path)?;
    let r = dump.verify(tol)?;
    let rows = [
        ("primal value", r.primal_value),
        ("dual value", r.dual_value),
        ("gap", r.gap),
        ("T ⪰ 0 violation", r.t_psd),
        ("tr_X T ≤ αI violation", r.alpha_constraint),
        ("tr_X' T ≤ I violation", r.trace_constraint),
        ("process constraint residual", r.process_constraint),
        ("tr ω ≤ 1 violation", r.omega_trace),
        ("ω ⪰ 0 violation", r.omega_psd),
        ("X ⪰ 0 violation", r.x_psd),
        ("dual constraint violation", r.dual_constraint),
    ];
    let mut out = Report::new(serde_json::to_value(&r).map_err(|e| CliError::Domain(e.to_string()))?);
    for (name, v) in rows {
        out = out.line(format!("{name}: {v:.6}"));
    }
    out = out.line(format!(
        "certificate: {} at tolerance {tol:e}",
        if r.passed { "passed" } else { "FAILED" }
    ));
    if r.passed {
        Ok(out)
    } else {
        Err(CliError::Rejected(out))
    }
}

fn run(cli: Cli) -> Result<Report, CliError> {
    match cli.command {
        Command::Entropy { state, measure, cond, eps } => entropy(&state, measure, cond, eps),
        Command::Majorize { spec_a, spec_b, lambda } => majorize(&spec_a, &spec_b, lambda),
        Command::Workbound { sigma, channel, sdp_check, temp, dump } => {
            workbound(&sigma, &channel, sdp_check, temp, dump.as_deref())
        }
        Command::Certify { sdp_dump, tol } => certify(&sdp_dump, tol),
        Command::Demo { which } => demo::run(which),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    match run(cli) {
        Ok(report) => {
            report.print(json);
            ExitCode::SUCCESS
        }
        Err(err) => err.exit(json),
    }
}
