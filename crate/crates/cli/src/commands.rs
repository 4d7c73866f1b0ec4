use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use num_complex::Complex64;
use qamp::amp::{self, Branch, BranchAmplitudes};
use qamp::fock;
use qamp::sweep::{self, GainConstraint, Grid, SweepSpec, Tolerances};
use qamp::tradeoff::{self, CurvePoint, CurveSpec, StateKnowledge};
use qamp::vmf::{self, KnowledgePrior, QuadratureSpec};
use qamp::{AmpError, AmplifierParams, Gain, MetricSet, SignalState};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::table::{format_g, Cell, Format, Table};
use crate::{Command, GridArgs, Output, StateArgs};

pub const VERIFY_TOLERANCE: f64 = 1e-12;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Verification(String),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<AmpError> for CliError {
    fn from(e: AmpError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Metrics {
            chi,
            r,
            state,
            ff,
            no_ff,
            out,
        } => {
            let modes: &[bool] = match (ff, no_ff) {
                (true, _) => &[true],
                (_, true) => &[false],
                _ => &[false, true],
            };
            emit(&metrics_table(chi, r, &state, modes)?, &out)
        }
        Command::Verify { n, seed, tolerance, out } => verify(n, seed, tolerance, &out),
        Command::Sweep { state, grid, out } => emit(&sweep_table(&state, &grid)?, &out),
        Command::Threshold {
            state,
            kappa,
            gains,
            grid,
            nodes,
            out,
        } => {
            let gains = if gains.is_empty() { default_threshold_gains() } else { gains };
            emit(&threshold_table(&state, kappa, &gains, &grid, nodes)?, &out)
        }
        Command::Curve {
            theta,
            kappa,
            gain,
            beta2,
            points,
            f_min,
            grid,
            nodes,
            out,
        } => {
            let knowledge = match (theta, kappa) {
                (Some(t), _) => StateKnowledge::FixedTheta(angle(t, "theta")?),
                (None, Some(k)) => StateKnowledge::Prior(KnowledgePrior::new(k)?),
                (None, None) => return Err(CliError::Config("one of --theta or --kappa is required".into())),
            };
            emit(&curve_table(knowledge, gain, beta2, points, f_min, &grid, nodes)?, &out)
        }
        Command::Merit {
            kappas,
            gains,
            beta2,
            grid,
            nodes,
            out,
        } => emit(&merit_table(&kappas, &gains, beta2, &grid, nodes)?.0, &out),
        Command::TableVmf { kappas, out } => emit(&vmf_table(&kappas)?, &out),
        Command::Figures { out_dir, format } => figures(&out_dir, format),
    }
}

fn emit(table: &Table, out: &Output) -> Result<()> {
    match &out.output {
        Some(path) => fs::write(path, table.render(out.format))?,
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            table.write(out.format, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

/// Units of π to radians, rejecting non-finite input.
fn angle(units_of_pi: f64, name: &str) -> Result<f64> {
    if !units_of_pi.is_finite() {
        return Err(CliError::Config(format!("{name} = {units_of_pi} must be finite")));
    }
    Ok(units_of_pi * PI)
}

fn signal(state: &StateArgs) -> Result<SignalState> {
    let theta = angle(state.theta, "theta")?;
    // φ is periodic; fold it into [0, 2π) before validation.
    let phi = angle(state.phi, "phi")?.rem_euclid(2.0 * PI);
    Ok(SignalState::from_beta_sq(state.beta2, theta, phi)?)
}

fn grid(args: &GridArgs) -> Result<Grid> {
    Ok(Grid::new(args.chi_steps, args.r_steps)?)
}

fn constraint(args: &GridArgs) -> GainConstraint {
    if args.at_least {
        GainConstraint::AtLeast
    } else {
        GainConstraint::Equality
    }
}

fn metrics_table(chi: f64, r: f64, state: &StateArgs, modes: &[bool]) -> Result<Table> {
    let params = AmplifierParams::new(angle(chi, "chi")?, r)?;
    let signal = signal(state)?;
    let filter = amp::filter_transmittances(params);
    let mut t = Table::new(vec![
        "feedforward",
        "chi",
        "r",
        "theta",
        "phi",
        "beta2",
        "p_succ",
        "g_h",
        "g_v",
        "gain",
        "gain_db",
        "fidelity",
        "tau_h",
        "tau_v",
        "physical_filter",
    ]);
    for &ff in modes {
        let m: MetricSet = amp::metrics(&signal, params, ff);
        t.push(vec![
            Cell::Bool(ff),
            Cell::Num(chi),
            Cell::Num(r),
            Cell::Num(state.theta),
            Cell::Num(state.phi),
            Cell::Num(state.beta2),
            Cell::Num(m.p_succ),
            Cell::gain_linear(m.g_h),
            Cell::gain_linear(m.g_v),
            Cell::gain_linear(m.g_overall),
            Cell::gain_db(m.g_overall),
            Cell::Opt(m.fidelity),
            Cell::Opt(filter.tau_h),
            Cell::Opt(filter.tau_v),
            Cell::Bool(m.physical_filter),
        ]);
    }
    Ok(t)
}

fn random_draw(rng: &mut ChaCha8Rng) -> (SignalState, AmplifierParams) {
    let beta_sq: f64 = rng.gen_range(0.0..=1.0);
    let a = Complex64::from_polar((1.0 - beta_sq).sqrt(), rng.gen_range(0.0..2.0 * PI));
    let b = Complex64::from_polar(beta_sq.sqrt(), rng.gen_range(0.0..2.0 * PI));
    let theta = (1.0 - 2.0 * rng.gen::<f64>()).clamp(-1.0, 1.0).acos();
    let phi = rng.gen_range(0.0..2.0 * PI);
    let signal = SignalState::new(a, b, theta, phi).expect("draw is a valid state");
    let params = AmplifierParams::new(rng.gen_range(0.0..=FRAC_PI_4), rng.gen_range(0.0..=1.0))
        .expect("draw is a valid setting");
    (signal, params)
}

fn gain_gap(a: Gain, b: Gain) -> f64 {
    match (a, b) {
        (Gain::Infinite, Gain::Infinite) => 0.0,
        (Gain::Finite(x), Gain::Finite(y)) => (x - y).abs() / x.abs().max(1.0),
        _ => f64::INFINITY,
    }
}

/// Largest componentwise disagreement between the two models for one draw.
fn deviation(signal: &SignalState, params: AmplifierParams) -> f64 {
    let (out1, out2) = amp::branch_states(signal, params);
    let mut worst = fock::heralded_branches(signal, params)
        .iter()
        .map(|b| {
            let expected: &BranchAmplitudes = if b.branch == Branch::Out1 { &out1 } else { &out2 };
            b.max_deviation(expected)
        })
        .fold(0.0, f64::max);
    let (a, b) = (fock::oracle_metrics(signal, params), amp::metrics(signal, params, false));
    let fid = match (a.fidelity, b.fidelity) {
        (Some(x), Some(y)) => (x - y).abs(),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    };
    for d in [
        (a.p_succ - b.p_succ).abs(),
        gain_gap(a.g_h, b.g_h),
        gain_gap(a.g_v, b.g_v),
        gain_gap(a.g_overall, b.g_overall),
        fid,
    ] {
        worst = worst.max(d);
    }
    worst
}

fn verify(n: usize, seed: u64, tolerance: f64, out: &Output) -> Result<()> {
    if n == 0 {
        return Err(CliError::Config("--n must be at least 1".into()));
    }
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(CliError::Config(format!("--tolerance = {tolerance} must be non-negative")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0;
    let mut offender = None;
    for i in 0..n {
        let (signal, params) = random_draw(&mut rng);
        let d = deviation(&signal, params);
        if d > worst {
            worst = d;
        }
        if d > tolerance && offender.is_none() {
            offender = Some((i, signal, params, d));
        }
    }
    let pass = offender.is_none();
    let mut t = Table::new(vec!["draws", "seed", "max_deviation", "tolerance", "pass"]);
    t.push(vec![
        Cell::Num(n as f64),
        Cell::Text(seed.to_string()),
        Cell::Num(worst),
        Cell::Num(tolerance),
        Cell::Bool(pass),
    ]);
    emit(&t, out)?;
    eprintln!(
        "max |delta| = {} {} {}, {}",
        format_g(worst),
        if pass { "<=" } else { ">" },
        format_g(tolerance),
        if pass { "PASS" } else { "FAIL" }
    );
    match offender {
        None => Ok(()),
        Some((i, s, p, d)) => Err(CliError::Verification(format!(
            "draw {i}: alpha = {}, beta = {}, theta = {} pi, phi = {} pi, chi = {} pi, r = {}, deviation {}",
            s.alpha(),
            s.beta(),
            format_g(s.theta() / PI),
            format_g(s.phi() / PI),
            format_g(p.chi() / PI),
            format_g(p.r()),
            format_g(d)
        ))),
    }
}

fn sweep_table(state: &StateArgs, args: &GridArgs) -> Result<Table> {
    let spec = SweepSpec::new(signal(state)?, !args.no_ff).with_steps(args.chi_steps, args.r_steps);
    let mut t = Table::new(vec!["chi", "r", "fidelity", "gain", "gain_db", "p_succ", "physical"]);
    for p in sweep::grid_sweep(&spec)? {
        t.push(vec![
            Cell::Num(p.chi / PI),
            Cell::Num(p.r),
            Cell::Opt(p.fidelity),
            Cell::gain_linear(p.gain),
            Cell::gain_db(p.gain),
            Cell::Num(p.p_succ),
            Cell::Bool(p.physical_filter),
        ]);
    }
    Ok(t)
}

fn default_threshold_gains() -> Vec<Gain> {
    (0..=60)
        .map(|i| Gain::from_db(0.5 * i as f64))
        .chain(std::iter::once(Gain::Infinite))
        .collect()
}

fn threshold_table(
    state: &StateArgs,
    kappa: Option<f64>,
    gains: &[Gain],
    args: &GridArgs,
    nodes: usize,
) -> Result<Table> {
    let mut t = Table::new(vec!["gain_db", "f_min", "reachable"]);
    let values: Vec<(Gain, Option<f64>)> = match kappa {
        None => {
            let spec = SweepSpec::new(signal(state)?, !args.no_ff).with_steps(args.chi_steps, args.r_steps);
            sweep::threshold_curve(gains, &spec)?
        }
        Some(k) => {
            let mut out = Vec::with_capacity(gains.len());
            for &g in gains {
                let spec = curve_spec(StateKnowledge::Prior(KnowledgePrior::new(k)?), g, state.beta2, args, nodes)?;
                out.push((g, tradeoff::threshold(&spec)?));
            }
            out
        }
    };
    for (g, f) in values {
        t.push(vec![Cell::gain_db(g), Cell::Opt(f), Cell::Bool(f.is_some())]);
    }
    Ok(t)
}

fn curve_spec(
    knowledge: StateKnowledge,
    gain: Gain,
    beta2: f64,
    args: &GridArgs,
    nodes: usize,
) -> Result<CurveSpec> {
    let mut spec = CurveSpec::new(knowledge, gain, beta2);
    spec.feedforward = !args.no_ff;
    spec.grid = grid(args)?;
    spec.quadrature = QuadratureSpec::new(nodes)?;
    spec.tolerances = Tolerances::default();
    spec.constraint = constraint(args);
    Ok(spec)
}

const CURVE_COLUMNS: [&str; 7] = ["f", "p_succ", "chi", "r", "fidelity", "gain_db", "reachable"];

fn curve_row(c: &CurvePoint) -> Vec<Cell> {
    let b = c.best;
    vec![
        Cell::Opt((!c.f.is_nan()).then_some(c.f)),
        Cell::Opt(b.map(|b| b.p_succ)),
        Cell::Opt(b.map(|b| b.chi / PI)),
        Cell::Opt(b.map(|b| b.r)),
        Cell::Opt(b.and_then(|b| b.fidelity)),
        Cell::Opt(b.map(|b| b.gain.db())),
        Cell::Bool(c.reachable()),
    ]
}

fn compute_curve(
    knowledge: StateKnowledge,
    gain: Gain,
    beta2: f64,
    points: usize,
    f_min: Option<f64>,
    args: &GridArgs,
    nodes: usize,
) -> Result<Vec<CurvePoint>> {
    if points == 0 {
        return Err(CliError::Config("--points must be at least 1".into()));
    }
    if let (StateKnowledge::FixedTheta(theta), Gain::Infinite, None) = (knowledge, gain, f_min) {
        // One χ per row, exact along r = 0.
        return Ok(tradeoff::infinite_gain_curve(theta, beta2, args.chi_steps)?);
    }
    let mut spec = curve_spec(knowledge, gain, beta2, args, nodes)?;
    spec.f_grid = match f_min {
        Some(lo) if !(lo > 0.0 && lo <= 1.0) => {
            return Err(CliError::Config(format!("--f-min = {lo} must lie in (0, 1]")));
        }
        Some(lo) => tradeoff::fidelity_targets(lo, points),
        None => {
            let lo = tradeoff::threshold(&spec)?.unwrap_or(1.0 / points as f64);
            tradeoff::fidelity_targets(lo, points)
        }
    };
    Ok(tradeoff::averaged_tradeoff_curve(&spec)?)
}

fn curve_table(
    knowledge: StateKnowledge,
    gain: Gain,
    beta2: f64,
    points: usize,
    f_min: Option<f64>,
    args: &GridArgs,
    nodes: usize,
) -> Result<Table> {
    let mut t = Table::new(CURVE_COLUMNS.to_vec());
    for c in compute_curve(knowledge, gain, beta2, points, f_min, args, nodes)? {
        t.push(curve_row(&c));
    }
    Ok(t)
}

const MERIT_COLUMNS: [&str; 9] = ["kappa", "gain_db", "merit", "p_unit", "f_best", "p_best", "chi", "r", "reachable"];

fn merit_row(kappa: f64, gain: Gain, curve: &[CurvePoint]) -> Vec<Cell> {
    match tradeoff::merit_from_curve(curve) {
        Ok(m) => vec![
            Cell::Num(kappa),
            Cell::gain_db(gain),
            Cell::Num(m.merit),
            Cell::Num(m.p_unit),
            Cell::Num(m.best.f),
            Cell::Opt(m.best.p()),
            Cell::Opt(m.best.best.map(|b| b.chi / PI)),
            Cell::Opt(m.best.best.map(|b| b.r)),
            Cell::Bool(true),
        ],
        Err(_) => {
            let mut row = vec![Cell::Num(kappa), Cell::gain_db(gain)];
            row.extend(std::iter::repeat_n(Cell::Opt(None), 6));
            row.push(Cell::Bool(false));
            row
        }
    }
}

/// The merit table plus every underlying curve, keyed by `(κ, gain)`.
#[allow(clippy::type_complexity)]
fn merit_table(
    kappas: &[f64],
    gains: &[Gain],
    beta2: f64,
    args: &GridArgs,
    nodes: usize,
) -> Result<(Table, Vec<(f64, Gain, Vec<CurvePoint>)>)> {
    let mut t = Table::new(MERIT_COLUMNS.to_vec());
    let mut curves = Vec::new();
    for &k in kappas {
        let prior = KnowledgePrior::new(k)?;
        for &g in gains {
            let spec = curve_spec(StateKnowledge::Prior(prior), g, beta2, args, nodes)?;
            let curve = tradeoff::averaged_tradeoff_curve(&spec)?;
            t.push(merit_row(k, g, &curve));
            curves.push((k, g, curve));
        }
    }
    Ok((t, curves))
}

fn vmf_table(kappas: &[f64]) -> Result<Table> {
    let mut t = Table::new(vec!["kappa", "median", "first_decile", "mean_cos"]);
    for &k in kappas {
        let prior = KnowledgePrior::new(k)?;
        t.push(vec![
            Cell::Num(k),
            Cell::Num(vmf::quantile(0.5, prior)? / PI),
            Cell::Num(vmf::quantile(0.1, prior)? / PI),
            Cell::Num(vmf::mean_cos(prior)),
        ]);
    }
    Ok(t)
}

fn default_grid() -> GridArgs {
    GridArgs {
        chi_steps: sweep::DEFAULT_STEPS,
        r_steps: sweep::DEFAULT_STEPS,
        no_ff: false,
        at_least: false,
    }
}

fn figures(dir: &Path, format: Format) -> Result<()> {
    fs::create_dir_all(dir)?;
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let write = |name: &str, table: &Table| -> Result<()> {
        let path = dir.join(format!("{name}.{ext}"));
        fs::write(&path, table.render(format))?;
        eprintln!("wrote {} ({} rows)", path.display(), table.rows.len());
        Ok(())
    };
    let grid = default_grid();
    let thetas = [0.0, 0.125, 0.25, 0.375, 0.5];

    // Success probability against fidelity at infinite gain, per input state.
    let mut fig3 = Table::new(vec!["theta", "f", "p_succ", "chi"]);
    for &theta in &thetas {
        for c in tradeoff::infinite_gain_curve(theta * PI, 0.5, grid.chi_steps)? {
            let b = c.best;
            fig3.push(vec![
                Cell::Num(theta),
                Cell::Opt((!c.f.is_nan()).then_some(c.f)),
                Cell::Opt(b.map(|b| b.p_succ)),
                Cell::Opt(b.map(|b| b.chi / PI)),
            ]);
        }
    }
    write("fig3_infinite_gain", &fig3)?;

    // Threshold fidelity against gain, per input state.
    let mut fig4 = Table::new(vec!["theta", "gain_db", "f_min", "reachable"]);
    let gains = default_threshold_gains();
    for &theta in &thetas[1..] {
        let state = StateArgs {
            theta,
            phi: 0.0,
            beta2: 0.5,
        };
        let t = threshold_table(&state, None, &gains, &grid, vmf::DEFAULT_NODES)?;
        for row in t.rows {
            let mut r = vec![Cell::Num(theta)];
            r.extend(row);
            fig4.push(r);
        }
    }
    write("fig4_threshold", &fig4)?;

    // Prior-averaged curves and the merit derived from them.
    let kappas = [0.0, 1.0, 3.0, 10.0];
    let merit_gains = [Gain::from_db(3.0), Gain::from_db(10.0), Gain::from_db(20.0), Gain::Infinite];
    let (fig6, curves) = merit_table(&kappas, &merit_gains, 0.5, &grid, vmf::DEFAULT_NODES)?;
    let mut columns = vec!["kappa", "gain_db"];
    columns.extend(CURVE_COLUMNS);
    let mut fig5 = Table::new(columns);
    for (k, g, curve) in &curves {
        for c in curve {
            let mut row = vec![Cell::Num(*k), Cell::gain_db(*g)];
            row.extend(curve_row(c));
            fig5.push(row);
        }
    }
    write("fig5_averaged_curves", &fig5)?;
    write("fig6_merit", &fig6)?;
    write("table1_vmf", &vmf_table(&kappas)?)?;
    Ok(())
}
