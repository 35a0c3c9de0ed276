//! Seeded command-line runs of every demonstration, with JSON or CSV output.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage
//! or parameter errors.

use std::f64::consts::SQRT_2;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use nonlocality::bohm::{
    contextuality_samples, contextuality_report, equivariance_test, integrate_trajectory, momentum_statistics,
    ContextualityParams, GaussianPacketModel,
};
use nonlocality::entangle::{
    build_from_bases, correlation_residual, partner_operator, partner_operator_via_coefficients, represent_in_basis,
    singlet,
};
use nonlocality::hilbert::{random_hermitian, Basis, Operator};
use nonlocality::lattice::{
    build_epr_state, build_four_particle_state, correlation_gap, dual_orthogonality_sum, epr_convolution_form,
    epr_delta_form, epr_fourier_form, epr_momentum_correlation, epr_position_correlation, momentum_op,
    orthogonality_sum, EprParams, LatticeConfig, MeasurementOrder, FOUR_PARTICLE_DENSE_CAP,
};
use nonlocality::measure::{perfect_correlation_trial, SeededRng};
use nonlocality::nogo::{
    build_clifton_set_with_spacing, clifton_relations_check, clifton_value_map_search, eigenvalue_constraint_demo,
    oscillator_compatibility, oscillator_sweep, von_neumann_demo, weyl_sweep,
};

pub const SCHEMA: &str = "nonlocality-lab/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "nonlocality-lab", version, about = "Seeded numerical checks of quantum nonlocality")]
pub struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Partner operators and basis independence for a random maximally entangled pair.
    EntangleCheck {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        operators: usize,
    },
    /// Sequential partner/observable measurements.
    PerfectCorrelation {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
    /// Regularized EPR pair on the odd lattice.
    EprLattice {
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        x0: f64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Cosine operator relations and the value-map contradiction.
    CliftonVerify {
        #[arg(long, default_value_t = 8)]
        n_points: usize,
        #[arg(long, default_value_t = 1)]
        k0: i64,
        #[arg(long, default_value_t = 4)]
        m: i64,
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
    },
    /// Additivity against the spectrum of a sum of Pauli matrices.
    VonneumannDemo,
    /// Oscillator energies against simultaneous position and momentum values.
    OscillatorDemo {
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        vp: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        vx: f64,
        #[arg(long, default_value_t = 0.1)]
        omega_min: f64,
        #[arg(long, default_value_t = 10.0)]
        omega_max: f64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 1000)]
        n_max: u32,
    },
    /// One trajectory of a (possibly boosted) Gaussian packet.
    BohmTrajectory {
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        x0: f64,
        #[arg(long, default_value_t = 10.0)]
        t: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        k: f64,
    },
    /// Asymptotic momentum statistics against the Born rule.
    BohmMomentum {
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 100.0)]
        horizon: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
    },
    /// Transported ensembles against |Ψ_t|².
    BohmEquivariance {
        #[arg(long, default_value_t = 3.0)]
        t: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        /// `single` or `symmetric`.
        #[arg(long, value_enum, default_value_t = PacketShape::Single)]
        packets: PacketShape,
        /// Boost of the symmetric pair.
        #[arg(long, default_value_t = 1.0)]
        k: f64,
    },
    /// Momentum measured with and without a prior position measurement on the partner.
    BohmContextuality {
        #[arg(long, default_value_t = 10.0)]
        k: f64,
        #[arg(long, default_value_t = 50.0)]
        horizon: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PacketShape {
    Single,
    Symmetric,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "{m}"),
            Self::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<nonlocality::Error> for CliError {
    fn from(e: nonlocality::Error) -> Self {
        Self::Usage(e.to_string())
    }
}

/// A finished run: rendered output plus whether every check passed.
#[derive(Debug)]
pub struct RunOutput {
    pub text: String,
    pub passed: bool,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

struct Checks(Vec<Value>);

impl Checks {
    fn new() -> Self {
        Self(Vec::new())
    }

    fn add(&mut self, name: &str, passed: bool, value: impl Into<Value>) {
        self.0.push(json!({ "name": name, "passed": passed, "value": value.into() }));
    }

    fn passed(&self) -> bool {
        self.0.iter().all(|c| c["passed"] == true)
    }

    fn failed(&self) -> Vec<Value> {
        self.0.iter().filter(|c| c["passed"] != true).map(|c| c["name"].clone()).collect()
    }
}

struct Report {
    params: Value,
    checks: Checks,
    result: Value,
    csv: Option<String>,
}

pub fn execute(cli: &Cli) -> Result<RunOutput, CliError> {
    let rng = SeededRng::new(cli.seed);
    let report = match &cli.command {
        Command::EntangleCheck { n, operators } => entangle_check(*n, *operators, rng)?,
        Command::PerfectCorrelation { n, trials } => perfect_correlation(*n, *trials, rng)?,
        Command::EprLattice { m, spacing, x0, trials } => epr_lattice(*m, *spacing, *x0, *trials, rng)?,
        Command::CliftonVerify { n_points, k0, m, spacing } => clifton_verify(*n_points, *k0, *m, *spacing)?,
        Command::VonneumannDemo => vonneumann()?,
        Command::OscillatorDemo { vp, vx, omega_min, omega_max, count, n_max } => {
            oscillator(*vp, *vx, *omega_min, *omega_max, *count, *n_max)?
        }
        Command::BohmTrajectory { x0, t, dt, k } => bohm_trajectory(*x0, *t, *dt, *k)?,
        Command::BohmMomentum { trials, horizon, dt } => bohm_momentum(*trials, *horizon, *dt, rng)?,
        Command::BohmEquivariance { t, trials, dt, packets, k } => bohm_equivariance(*t, *trials, *dt, *packets, *k, rng)?,
        Command::BohmContextuality { k, horizon, dt, trials } => {
            bohm_contextuality(ContextualityParams { k: *k, horizon: *horizon, dt: *dt, trials: *trials, seed: rng }, cli.format)?
        }
    };
    let passed = report.checks.passed();
    let text = match cli.format {
        Format::Json => {
            let mut doc = Map::new();
            doc.insert("schema".into(), SCHEMA.into());
            doc.insert("command".into(), command_name(&cli.command).into());
            doc.insert("timestamp".into(), timestamp().into());
            doc.insert("seed".into(), cli.seed.into());
            doc.insert("params".into(), report.params);
            doc.insert("passed".into(), passed.into());
            doc.insert("failed_checks".into(), report.checks.failed().into());
            doc.insert("checks".into(), report.checks.0.into());
            doc.insert("result".into(), report.result);
            serde_json::to_string_pretty(&Value::Object(doc)).expect("serializable") + "\n"
        }
        Format::Csv => match report.csv {
            Some(csv) => csv,
            None => flatten_csv(&report.result),
        },
    };
    Ok(RunOutput { text, passed })
}

pub fn command_name(c: &Command) -> &'static str {
    match c {
        Command::EntangleCheck { .. } => "entangle-check",
        Command::PerfectCorrelation { .. } => "perfect-correlation",
        Command::EprLattice { .. } => "epr-lattice",
        Command::CliftonVerify { .. } => "clifton-verify",
        Command::VonneumannDemo => "vonneumann-demo",
        Command::OscillatorDemo { .. } => "oscillator-demo",
        Command::BohmTrajectory { .. } => "bohm-trajectory",
        Command::BohmMomentum { .. } => "bohm-momentum",
        Command::BohmEquivariance { .. } => "bohm-equivariance",
        Command::BohmContextuality { .. } => "bohm-contextuality",
    }
}

fn timestamp() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    secs.to_string()
}

/// `key,value` rows for every scalar leaf, keys joined with dots.
pub fn flatten_csv(value: &Value) -> String {
    fn walk(prefix: &str, v: &Value, out: &mut String) {
        match v {
            Value::Object(map) => {
                for (k, v) in map {
                    walk(&join(prefix, k), v, out);
                }
            }
            Value::Array(items) => {
                for (i, v) in items.iter().enumerate() {
                    walk(&join(prefix, &i.to_string()), v, out);
                }
            }
            Value::String(s) => writeln!(out, "{prefix},{s}").expect("string write"),
            other => writeln!(out, "{prefix},{other}").expect("string write"),
        }
    }
    fn join(prefix: &str, key: &str) -> String {
        if prefix.is_empty() {
            key.to_string()
        } else {
            format!("{prefix}.{key}")
        }
    }
    let mut out = String::from("key,value\n");
    walk("", value, &mut out);
    out
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn to_value(v: &impl serde::Serialize) -> Value {
    serde_json::to_value(v).expect("serializable report")
}

fn entangle_check(n: usize, operators: usize, rng: SeededRng) -> Result<Report, CliError> {
    if n == 0 || operators == 0 {
        return Err(usage("--n and --operators must be positive"));
    }
    let mut g = rng.generator();
    let state = build_from_bases(&Basis::random(n, &mut g), &Basis::random(n, &mut g))?;
    let (mut residual, mut routes, mut basis): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..operators {
        let o = random_hermitian(n, &mut g);
        let partner = partner_operator(&state, &o)?;
        residual = residual.max(correlation_residual(&state, &o, &partner)?);
        routes = routes.max(partner.max_abs_diff(&partner_operator_via_coefficients(&state, &o)?)?);
        basis = basis.max(represent_in_basis(&state, &Basis::random(n, &mut g))?.max_abs_diff(state.psi()));
    }
    let z = Operator::real_diagonal(&[1.0, -1.0]);
    let singlet_gap = partner_operator(&singlet(), &z)?.max_abs_diff(&z.scale((-1.0).into()))?;
    let mut checks = Checks::new();
    checks.add("max correlation residual < 1e-10", residual < 1e-10, residual);
    checks.add("partner routes agree < 1e-10", routes < 1e-10, routes);
    checks.add("basis independence < 1e-12", basis < 1e-12, basis);
    checks.add("singlet partner of diag(1,-1) is its negative", singlet_gap < 1e-12, singlet_gap);
    Ok(Report {
        params: json!({ "n": n, "operators": operators }),
        checks,
        result: json!({
            "schmidt_coefficients": state.schmidt_coefficients(),
            "max_correlation_residual": residual,
            "max_route_gap": routes,
            "max_basis_deviation": basis,
            "singlet_gap": singlet_gap,
        }),
        csv: None,
    })
}

fn perfect_correlation(n: usize, trials: usize, rng: SeededRng) -> Result<Report, CliError> {
    if n == 0 || trials == 0 {
        return Err(usage("--n and --trials must be positive"));
    }
    let mut g = rng.with_stream_of(1).generator();
    let state = build_from_bases(&Basis::random(n, &mut g), &Basis::random(n, &mut g))?;
    let o = random_hermitian(n, &mut g);
    let r = perfect_correlation_trial(&state, &o, rng, trials)?;
    let mut checks = Checks::new();
    checks.add("every trial matched", r.all_matched(), r.matches);
    Ok(Report { params: json!({ "n": n, "trials": trials }), checks, result: to_value(&r), csv: None })
}

trait StreamOf {
    fn with_stream_of(&self, stream: u64) -> SeededRng;
}

impl StreamOf for SeededRng {
    fn with_stream_of(&self, stream: u64) -> SeededRng {
        SeededRng::with_stream(self.seed, stream)
    }
}

fn epr_lattice(m: usize, spacing: f64, x0: f64, trials: usize, rng: SeededRng) -> Result<Report, CliError> {
    let config = LatticeConfig::odd(spacing, m)?;
    let params = EprParams::new(&config, x0)?;
    let n = config.n_points() as f64;

    let mut orth: f64 = 0.0;
    for label in config.labels() {
        let expected = if label == 0 { n } else { 0.0 };
        orth = orth
            .max((orthogonality_sum(&config, config.point(label))? - expected).norm())
            .max((dual_orthogonality_sum(&config, config.dual_point(label))? - expected).norm());
    }
    let (f, d, c) = (epr_fourier_form(&config, params), epr_delta_form(&config, params), epr_convolution_form(&config, params));
    let forms = f.iter().zip(&d).zip(&c).map(|((a, b), e)| (a - b).norm().max((b - e).norm())).fold(0.0, f64::max);

    let state = build_epr_state(&config, params)?;
    let q = epr_position_correlation(&state, params, MeasurementOrder::FirstThenSecond, rng.with_stream_of(1), trials)?;
    let q_rev = epr_position_correlation(&state, params, MeasurementOrder::SecondThenFirst, rng.with_stream_of(2), trials)?;
    let p = epr_momentum_correlation(&state, rng.with_stream_of(3), trials)?;

    let mut checks = Checks::new();
    checks.add("orthogonality residual < 5e-9 (2M+1)", orth < 5e-9 * n, orth);
    checks.add("three EPR forms agree < 1e-10", forms < 1e-10, forms);
    checks.add("Q2 = Q1 + x0", q.all_matched(), q.matches);
    checks.add("Q1 = Q2 - x0", q_rev.all_matched(), q_rev.matches);
    checks.add("P2 = -P1", p.all_matched(), p.matches);
    let mut result = json!({
        "n_points": config.n_points(),
        "box_length": config.box_length(),
        "x0_label": params.x0_label,
        "orthogonality_residual": orth,
        "form_gap": forms,
        "position": to_value(&q),
        "position_reversed": to_value(&q_rev),
        "momentum": to_value(&p),
    });
    if config.n_points() <= FOUR_PARTICLE_DENSE_CAP {
        let dense = build_four_particle_state(&config, params)?.densify()?;
        let cos_p = |j| momentum_op(&config, 4, j).apply_function(|p| (0.7 * p).cos());
        let gap = correlation_gap(&dense, &cos_p(4)?, &cos_p(2)?)?;
        checks.add("four-particle partner gap < 1e-10", gap < 1e-10, gap);
        result["four_particle_partner_gap"] = gap.into();
    }
    Ok(Report {
        params: json!({ "m": m, "spacing": spacing, "x0": x0, "trials": trials }),
        checks,
        result,
        csv: None,
    })
}

fn clifton_verify(n_points: usize, k0: i64, m: i64, spacing: f64) -> Result<Report, CliError> {
    let set = build_clifton_set_with_spacing(n_points, k0, m, spacing)?;
    let rel = clifton_relations_check(&set)?;
    let weyl = weyl_sweep(&set.config)?;
    let search = clifton_value_map_search(&set)?;
    let mut checks = Checks::new();
    for r in &rel.residuals {
        checks.add(&format!("{} < 1e-10", r.name), r.value < 1e-10, r.value);
    }
    checks.add("[A1,B1] does not vanish", rel.commutator_contrast > 1e-3, rel.commutator_contrast);
    checks.add("expansion route agrees < 1e-11", rel.expansion_route_gap < 1e-11, rel.expansion_route_gap);
    checks.add("Weyl relation < 1e-12 for all pairs", weyl < 1e-12, weyl);
    checks.add("no nonvanishing value map", search.contradiction, search.consistent_patterns);
    Ok(Report {
        params: json!({ "n_points": n_points, "k0": k0, "m": m, "spacing": spacing }),
        checks,
        result: json!({ "relations": to_value(&rel), "weyl_max_residual": weyl, "value_map": to_value(&search) }),
        csv: None,
    })
}

fn vonneumann() -> Result<Report, CliError> {
    let r = von_neumann_demo()?;
    let constraint = eigenvalue_constraint_demo(&Operator::real_diagonal(&[1.0, -1.0]))?;
    let mut checks = Checks::new();
    checks.add("sums are {-√2, 0, √2}", r.attained_sums == vec![-SQRT_2, 0.0, SQRT_2], r.attained_sums.clone());
    let eig_ok = r.sum_eigenvalues.len() == 2
        && (r.sum_eigenvalues[0] + 1.0).abs() < 1e-12
        && (r.sum_eigenvalues[1] - 1.0).abs() < 1e-12;
    checks.add("eigenvalues of (σx+σy)/√2 are {-1, 1}", eig_ok, r.sum_eigenvalues.clone());
    checks.add("no attained sum is an eigenvalue", r.intersection.is_empty(), r.intersection.clone());
    checks.add("f(O) = O on the spectrum", constraint.residual < 1e-10, constraint.residual);
    Ok(Report {
        params: json!({}),
        checks,
        result: json!({ "von_neumann": to_value(&r), "eigenvalue_constraint": to_value(&constraint) }),
        csv: None,
    })
}

fn oscillator(vp: f64, vx: f64, lo: f64, hi: f64, count: usize, n_max: u32) -> Result<Report, CliError> {
    let sweep = oscillator_sweep(vp, vx, lo, hi, count, n_max)?;
    let ground = oscillator_compatibility(1.0, 0.0, 1.0, n_max)?;
    let excluded = !oscillator_compatibility(1.0, 1.0, 1.0, n_max)?;
    let mut checks = Checks::new();
    checks.add("(vp, vx, ω) = (1, 0, 1) is compatible", ground, ground);
    checks.add("(vp, vx, ω) = (1, 1, 1) is incompatible", excluded, excluded);
    checks.add("some ω in the sweep is incompatible", sweep.incompatible > 0, sweep.incompatible);
    Ok(Report {
        params: json!({ "vp": vp, "vx": vx, "omega_min": lo, "omega_max": hi, "count": count, "n_max": n_max }),
        checks,
        result: to_value(&sweep),
        csv: None,
    })
}

fn bohm_trajectory(x0: f64, t: f64, dt: f64, k: f64) -> Result<Report, CliError> {
    let traj = integrate_trajectory(&GaussianPacketModel::boosted(k), x0, t, dt)?;
    let mut worst: f64 = 0.0;
    for (s, x) in traj.times.iter().zip(&traj.positions) {
        let exact = k * s + x0 * (1.0 + s * s).sqrt();
        worst = worst.max((x - exact).abs() / exact.abs().max(1.0));
    }
    let mut checks = Checks::new();
    checks.add("matches kt + x0 √(1+t²) within 1e-6", worst < 1e-6, worst);
    Ok(Report {
        params: json!({ "x0": x0, "t": t, "dt": dt, "k": k }),
        checks,
        result: json!({
            "final_time": traj.final_time(),
            "final_position": traj.final_position(),
            "max_relative_error": worst,
            "steps": traj.times.len() - 1,
            "method": traj.method,
        }),
        csv: Some(traj.to_csv()),
    })
}

fn bohm_momentum(trials: usize, horizon: f64, dt: f64, rng: SeededRng) -> Result<Report, CliError> {
    let r = momentum_statistics(trials, horizon, dt, rng)?;
    let mut checks = Checks::new();
    checks.add("KS p-value > 0.01", r.ks.p_value > 0.01, r.ks.p_value);
    let dev = (r.variance - 0.5).abs();
    checks.add("variance within 3σ of 0.5", dev < 3.0 * r.variance_sigma, r.variance);
    checks.add("initial velocity is zero", r.max_initial_speed == 0.0, r.max_initial_speed);
    Ok(Report { params: json!({ "trials": trials, "horizon": horizon, "dt": dt }), checks, result: to_value(&r), csv: None })
}

fn bohm_equivariance(t: f64, trials: usize, dt: f64, shape: PacketShape, k: f64, rng: SeededRng) -> Result<Report, CliError> {
    let model = match shape {
        PacketShape::Single => GaussianPacketModel::single(),
        PacketShape::Symmetric => GaussianPacketModel::symmetric(k),
    };
    let r = equivariance_test(&model, t, trials, dt, rng)?;
    let mut checks = Checks::new();
    checks.add("KS p-value > 0.01", r.ks.p_value > 0.01, r.ks.p_value);
    Ok(Report {
        params: json!({
            "t": t,
            "trials": trials,
            "dt": dt,
            "packets": match shape { PacketShape::Single => "single", PacketShape::Symmetric => "symmetric" },
            "k": k,
        }),
        checks,
        result: to_value(&r),
        csv: None,
    })
}

fn bohm_contextuality(params: ContextualityParams, format: Format) -> Result<Report, CliError> {
    params.validate()?;
    let r = contextuality_report(&params)?;
    let csv = match format {
        Format::Csv => {
            let mut out = String::from("x0,y0,experiment1,experiment2,median\n");
            for s in contextuality_samples(&params)? {
                let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                writeln!(out, "{},{},{},{},{}", s.x0, s.y0, cell(s.experiment1), cell(s.experiment2), s.median)
                    .expect("string write");
            }
            Some(out)
        }
        Format::Json => None,
    };
    let mut checks = Checks::new();
    checks.add("experiment 1 sign = sgn(x0 + y0) in ≥ 95%", r.experiment1_agreement >= 0.95, r.experiment1_agreement);
    checks.add("experiment 2 sign = sgn(x0) in ≥ 95%", r.experiment2_agreement >= 0.95, r.experiment2_agreement);
    checks.add("experiments disagree on > 10%", r.disagreement_fraction > 0.1, r.disagreement_fraction);
    Ok(Report {
        params: json!({ "k": params.k, "horizon": params.horizon, "dt": params.dt, "trials": params.trials }),
        checks,
        result: to_value(&r),
        csv,
    })
}

/// Reads `NONLOCALITY_THREADS` and sizes the global worker pool.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("NONLOCALITY_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("NONLOCALITY_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| usage(e.to_string()))
}

/// Parses `args`, runs, writes the output, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let outcome = configure_threads().and_then(|()| execute(&cli)).and_then(|out| {
        match &cli.out {
            Some(path) => std::fs::write(path, &out.text).map_err(CliError::Io)?,
            None => print!("{}", out.text),
        }
        Ok(out)
    });
    match outcome {
        Ok(out) => {
            if !out.passed {
                eprintln!("one or more checks failed; see the report");
            }
            out.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("usage: nonlocality-lab [--seed N] [--out PATH] [--format json|csv] <COMMAND> [OPTIONS]");
            2
        }
    }
}
