//! Command-line front end. Exit codes: 0 on success, 2 for anything
//! wrong with the invocation or a config file, 3 for numeric domain
//! failures inside an otherwise well-formed computation.

mod config;
mod emit;

use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use nalgebra::Vector2;
use num_complex::Complex;

use bellmode::chsh::{
    bell_schmidt_density, beta_optimal, closed_form_b, optimize_settings, settings_value,
    ChshTarget,
};
use bellmode::modes::{helicity_to_linear, Direction};
use bellmode::onephoton::{effective_density, scatter_single, stokes_parameters};
use bellmode::polarizer::{jones_matrix, state_overlap, w_matrix, Polarizer};
use bellmode::scatter::{ModelKind, ScatterModel};
use bellmode::twophoton::{
    effective_density_2, scatter_pair, two_photon_stokes, BellInitial, MomentumMixture,
};

use config::{frame_for, OnePhotonConfig, TwoPhotonConfig};

pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError { code: 2, message: msg.into() }
    }
}

impl From<bellmode::Error> for CliError {
    fn from(e: bellmode::Error) -> Self {
        let code = match e {
            bellmode::Error::Config(_) => 2,
            _ => 3,
        };
        CliError { code, message: e.to_string() }
    }
}

#[derive(Parser)]
#[command(
    name = "bellmode",
    version,
    about = "Polarization transport and Bell-test analysis for tilted polarizers"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the polarizer's transmission matrix for one plane-wave direction
    Jones(JonesArgs),
    /// Print the analyzer-basis change matrix for one direction
    Wmatrix(WmatrixArgs),
    /// Print the transmission overlap of two polarizer orientations
    Overlap(OverlapArgs),
    /// Single-photon pipelines
    #[command(subcommand, name = "one-photon")]
    OnePhoton(OnePhotonCmd),
    /// Photon-pair pipelines
    #[command(subcommand, name = "two-photon")]
    TwoPhoton(TwoPhotonCmd),
    /// Bell-test curves and setting optimization
    #[command(subcommand)]
    Chsh(ChshCmd),
}

#[derive(Args)]
struct OutputArgs {
    /// Write the result here instead of stdout
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct JonesArgs {
    /// Polarizer orientation angle in its own plane
    #[arg(long)]
    beta: f64,
    /// Polar angle of the incoming direction
    #[arg(long)]
    theta: f64,
    /// Azimuth of the incoming direction
    #[arg(long)]
    phi: f64,
    /// Interpret all angle arguments as degrees
    #[arg(long)]
    degrees: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct WmatrixArgs {
    #[arg(long)]
    theta: f64,
    #[arg(long)]
    phi: f64,
    #[arg(long)]
    degrees: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct OverlapArgs {
    /// First polarizer orientation
    #[arg(long)]
    alpha: f64,
    /// Second polarizer orientation
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    theta: f64,
    #[arg(long)]
    phi: f64,
    #[arg(long)]
    degrees: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Subcommand)]
enum OnePhotonCmd {
    /// Build the scattered state from a config file and print the
    /// reconstructed polarization density matrix with its Stokes vector
    #[command(name = "rho-eff")]
    RhoEff(OnePhotonArgs),
}

#[derive(Subcommand)]
enum TwoPhotonCmd {
    /// Same as one-photon rho-eff but for an entangled pair
    #[command(name = "rho2eff")]
    Rho2Eff(TwoPhotonArgs),
}

#[derive(Args)]
struct OnePhotonArgs {
    /// JSON config file describing source, scattering model and detection
    #[arg(long)]
    config: PathBuf,
    /// Override the config's model seed (random kinds only)
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct TwoPhotonArgs {
    /// JSON config file describing source, scattering models and detection
    #[arg(long)]
    config: PathBuf,
    /// Override the arm A model seed (random kinds only)
    #[arg(long)]
    seed_a: Option<u64>,
    /// Override the arm B model seed (random kinds only)
    #[arg(long)]
    seed_b: Option<u64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Subcommand)]
enum ChshCmd {
    /// CSV of the Bell parameter against analyzer tilt, closed form
    /// next to the operator-trace evaluation at fixed settings
    Curve(CurveArgs),
    /// CSV of all near-optimal setting pairs at one tilt
    Optmap(OptmapArgs),
    /// CSV of the optimal orientation angle against tilt, formula next
    /// to the numeric argmax
    Betaopt(BetaoptArgs),
    /// Best reachable Bell value for a momentum mixture, as JSON
    Degrade(DegradeArgs),
}

#[derive(Args)]
struct CurveArgs {
    /// Bell state index 1..=4
    #[arg(long)]
    state: usize,
    /// Tilt sweep start:end:count, endpoints included
    #[arg(long, default_value = "0:1.5707963267948966:50")]
    thetas: String,
    #[arg(long)]
    degrees: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct OptmapArgs {
    #[arg(long)]
    state: usize,
    /// Analyzer tilt of arm B
    #[arg(long)]
    theta: f64,
    /// Azimuth offset passed to the orientation scan
    #[arg(long, default_value_t = 0.0)]
    phi: f64,
    /// Scan resolution in radians, at most pi/8
    #[arg(long, default_value_t = PI / 360.0)]
    grid_step: f64,
    /// Termination width of the local refinement, radians
    #[arg(long, default_value_t = 1e-8)]
    refine_tol: f64,
    #[arg(long)]
    degrees: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct BetaoptArgs {
    #[arg(long)]
    state: usize,
    #[arg(long, default_value = "0:1.2:13")]
    thetas: String,
    #[arg(long, default_value_t = PI / 360.0)]
    grid_step: f64,
    #[arg(long, default_value_t = 1e-8)]
    refine_tol: f64,
    #[arg(long)]
    degrees: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct DegradeArgs {
    /// JSON file with the mixture terms
    #[arg(long)]
    mixture: PathBuf,
    #[arg(long, default_value_t = PI / 360.0)]
    grid_step: f64,
    #[arg(long, default_value_t = 1e-8)]
    refine_tol: f64,
    #[command(flatten)]
    out: OutputArgs,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Jones(a) => {
            let s = angle_scale(a.degrees);
            let pol = Polarizer::new(a.beta * s)?;
            let d = Direction::new(a.theta * s, a.phi * s)?;
            let jm = jones_matrix(&pol, &d)?;
            write_out(&a.out, &format!("{}\n", emit::real_matrix2(jm.matrix())))
        }
        Cmd::Wmatrix(a) => {
            let s = angle_scale(a.degrees);
            let wm = w_matrix(&Direction::new(a.theta * s, a.phi * s)?)?;
            write_out(&a.out, &format!("{}\n", emit::real_matrix2(wm.matrix())))
        }
        Cmd::Overlap(a) => {
            let s = angle_scale(a.degrees);
            let d = Direction::new(a.theta * s, a.phi * s)?;
            let v = state_overlap(a.alpha * s, a.beta * s, &d)?;
            write_out(&a.out, &format!("{{\"overlap\": {}}}\n", emit::real(v)))
        }
        Cmd::OnePhoton(OnePhotonCmd::RhoEff(a)) => run_one_photon(a),
        Cmd::TwoPhoton(TwoPhotonCmd::Rho2Eff(a)) => run_two_photon(a),
        Cmd::Chsh(ChshCmd::Curve(a)) => run_curve(a),
        Cmd::Chsh(ChshCmd::Optmap(a)) => run_optmap(a),
        Cmd::Chsh(ChshCmd::Betaopt(a)) => run_betaopt(a),
        Cmd::Chsh(ChshCmd::Degrade(a)) => run_degrade(a),
    }
}

fn angle_scale(degrees: bool) -> f64 {
    if degrees {
        PI / 180.0
    } else {
        1.0
    }
}

fn write_out(out: &OutputArgs, text: &str) -> Result<(), CliError> {
    match &out.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_config(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))
}

/// "start:end:count" with both endpoints included; count 1 gives just
/// the start value
fn parse_sweep(text: &str, scale: f64) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::config(format!(
            "sweep \"{text}\" is not start:end:count"
        )));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::config(format!("bad sweep start \"{}\"", parts[0])))?;
    let end: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::config(format!("bad sweep end \"{}\"", parts[1])))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| CliError::config(format!("bad sweep count \"{}\"", parts[2])))?;
    if !start.is_finite() || !end.is_finite() || count == 0 {
        return Err(CliError::config("sweep needs finite endpoints and count >= 1"));
    }
    if count == 1 {
        return Ok(vec![start * scale]);
    }
    let step = (end - start) / (count - 1) as f64;
    Ok((0..count).map(|i| (start + step * i as f64) * scale).collect())
}

fn check_state_index(state: usize) -> Result<(), CliError> {
    if (1..=4).contains(&state) {
        Ok(())
    } else {
        Err(CliError::config(format!("state index {state} not in 1..=4")))
    }
}

fn complex_of(pair: [f64; 2]) -> Complex<f64> {
    Complex::new(pair[0], pair[1])
}

/// Flag beats file; a seed flag on a seedless model kind is an error
/// rather than a silent no-op.
fn override_seed(kind: ModelKind, seed: Option<u64>) -> Result<ModelKind, CliError> {
    match (seed, kind) {
        (None, kind) => Ok(kind),
        (Some(s), ModelKind::RandomUnitary { .. }) => Ok(ModelKind::RandomUnitary { seed: s }),
        (Some(s), ModelKind::GaussianEnvelopeRandom { sigma, .. }) => {
            Ok(ModelKind::GaussianEnvelopeRandom { seed: s, sigma })
        }
        (Some(_), _) => Err(CliError::config("--seed given but the model kind takes none")),
    }
}

fn run_one_photon(a: OnePhotonArgs) -> Result<(), CliError> {
    let text = read_config(&a.config)?;
    let cfg: OnePhotonConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("bad config: {e}")))?;
    let modes = cfg.modes.build()?;
    let kind = override_seed(ScatterModel::kind_from_json(&cfg.model)?, a.seed)?;
    let model = ScatterModel::build(kind, &modes)?;
    let mut input = Vector2::new(complex_of(cfg.input[0]), complex_of(cfg.input[1]));
    match cfg.basis.as_deref() {
        None | Some("linear") => {}
        Some("helicity") => input = helicity_to_linear(&input),
        Some(other) => {
            return Err(CliError::config(format!(
                "basis \"{other}\" is neither \"linear\" nor \"helicity\""
            )))
        }
    }
    let state = scatter_single(&input, &model, &modes)?;
    let frame = frame_for(&cfg.polarizer_axis)?;
    let eff = effective_density(&state, &frame)?;
    let stokes = stokes_parameters(&state, &frame)?;
    let body = format!(
        "{{\"rho_eff\": {}, \"stokes\": {}, \"purity\": {}}}\n",
        emit::complex_matrix2(eff.matrix()),
        emit::real_list(&stokes),
        emit::real(eff.purity())
    );
    write_out(&a.out, &body)
}

fn run_two_photon(a: TwoPhotonArgs) -> Result<(), CliError> {
    let text = read_config(&a.config)?;
    let cfg: TwoPhotonConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("bad config: {e}")))?;
    let init = BellInitial::new(complex_of(cfg.c_plus), complex_of(cfg.c_minus))?;
    let modes_a = cfg.modes_a.build()?;
    let modes_b = cfg.modes_b.build()?;
    let kind_a = override_seed(ScatterModel::kind_from_json(&cfg.model_a)?, a.seed_a)?;
    let kind_b = override_seed(ScatterModel::kind_from_json(&cfg.model_b)?, a.seed_b)?;
    let model_a = ScatterModel::build(kind_a, &modes_a)?;
    let model_b = ScatterModel::build(kind_b, &modes_b)?;
    let ps = scatter_pair(&init, &model_a, &model_b, &modes_a, &modes_b)?;
    let frame_a = frame_for(&cfg.axis_a)?;
    let frame_b = frame_for(&cfg.axis_b)?;
    let eff = effective_density_2(&ps, &frame_a, &frame_b)?;
    let stokes = two_photon_stokes(eff.matrix());
    let body = format!(
        "{{\"rho_2eff\": {}, \"stokes\": {}, \"purity\": {}}}\n",
        emit::complex_matrix4(eff.matrix()),
        emit::real_table4(&stokes),
        emit::real(eff.purity())
    );
    write_out(&a.out, &body)
}

fn run_curve(a: CurveArgs) -> Result<(), CliError> {
    check_state_index(a.state)?;
    let thetas = parse_sweep(&a.thetas, angle_scale(a.degrees))?;
    let rho = bell_schmidt_density(a.state)?;
    // settings stay pinned at the flat-incidence optimum while the
    // tilt sweeps, which is exactly what the closed form describes
    let beta = beta_optimal(0.0, a.state)?;
    let delta = PI - beta;
    let mut body = String::from("theta,B_closed,B_numeric\n");
    for theta in thetas {
        let closed = closed_form_b(theta, a.state)?;
        let target = ChshTarget::state(rho, theta)?;
        let numeric = settings_value(&target, beta, delta, 0.0)?;
        body.push_str(&format!(
            "{},{},{}\n",
            emit::real(theta),
            emit::real(closed),
            emit::real(numeric)
        ));
    }
    write_out(&a.out, &body)
}

fn run_optmap(a: OptmapArgs) -> Result<(), CliError> {
    check_state_index(a.state)?;
    let s = angle_scale(a.degrees);
    let target = ChshTarget::state(bell_schmidt_density(a.state)?, a.theta * s)?;
    let points = optimize_settings(&target, a.phi * s, a.grid_step, a.refine_tol)?;
    let mut body = String::from("beta,delta,value\n");
    for p in points {
        body.push_str(&format!(
            "{},{},{}\n",
            emit::real(p.beta),
            emit::real(p.delta),
            emit::real(p.value)
        ));
    }
    write_out(&a.out, &body)
}

fn run_betaopt(a: BetaoptArgs) -> Result<(), CliError> {
    check_state_index(a.state)?;
    let thetas = parse_sweep(&a.thetas, angle_scale(a.degrees))?;
    let rho = bell_schmidt_density(a.state)?;
    let mut body = String::from("theta,beta_closed,beta_numeric\n");
    for theta in thetas {
        let closed = beta_optimal(theta, a.state)?;
        let sign = closed_form_b(theta, a.state)?.signum();
        let target = ChshTarget::state(rho, theta)?;
        let points = optimize_settings(&target, 0.0, a.grid_step, a.refine_tol)?;
        let numeric = points
            .iter()
            .find(|p| p.value * sign > 0.0)
            .or_else(|| points.first())
            .ok_or_else(|| CliError::from(bellmode::Error::domain("empty optimizer result")))?;
        body.push_str(&format!(
            "{},{},{}\n",
            emit::real(theta),
            emit::real(closed),
            emit::real(numeric.beta)
        ));
    }
    write_out(&a.out, &body)
}

fn run_degrade(a: DegradeArgs) -> Result<(), CliError> {
    let text = read_config(&a.mixture)?;
    let mixture = MomentumMixture::from_json(&text)?;
    let target = ChshTarget::mixture(mixture);
    let points = optimize_settings(&target, 0.0, a.grid_step, a.refine_tol)?;
    let best = points
        .iter()
        .copied()
        .max_by(|x, y| {
            x.value
                .abs()
                .total_cmp(&y.value.abs())
                .then(y.beta.total_cmp(&x.beta))
        })
        .ok_or_else(|| CliError::from(bellmode::Error::domain("empty optimizer result")))?;
    let body = format!(
        "{{\"max_value\": {}, \"beta\": {}, \"delta\": {}}}\n",
        emit::real(best.value.abs()),
        emit::real(best.beta),
        emit::real(best.delta)
    );
    write_out(&a.out, &body)
}
