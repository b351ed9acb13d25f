//! Command-line interface for the isosceles three-body Manev model.

use std::env;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use manev::coords::{self, CylState, McGeheeState};
use manev::dynamics::{self, Field, StartState};
use manev::homographic;
use manev::manifold;
use manev::outfmt;
use manev::params::{IntegrationSettings, PhysicalParams};
use manev::potentials;
use manev::sweep::{self, SweepPlan};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(
    name = "manev",
    about = "Spatial isosceles three-body problem under a Manev potential",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Physical parameters, resolved from flags, a config file, the
/// MANEV_CONFIG environment variable, or the built-in defaults, in that
/// order of precedence.
#[derive(Args)]
struct ParamArgs {
    /// Gravitational constant
    #[arg(long = "G", value_name = "VALUE")]
    g: Option<f64>,
    /// Mass of each outer body
    #[arg(long = "M", value_name = "VALUE")]
    m_outer: Option<f64>,
    /// Mass of the middle body
    #[arg(long = "m", value_name = "VALUE")]
    m_middle: Option<f64>,
    /// Manev coefficient of the outer pair
    #[arg(long, value_name = "VALUE")]
    gamma0: Option<f64>,
    /// Manev coefficient of each outer-middle pair
    #[arg(long, value_name = "VALUE")]
    gamma: Option<f64>,
    /// JSON file with keys G, M, m, gamma0, gamma
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

impl ParamArgs {
    fn resolve(&self) -> Result<PhysicalParams> {
        let mut base = PhysicalParams::default();
        let config = self
            .config
            .clone()
            .or_else(|| env::var_os("MANEV_CONFIG").map(PathBuf::from));
        if let Some(path) = config {
            let text = fs::read_to_string(&path)
                .with_context(|| format!("reading config {}", path.display()))?;
            base = serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?;
        }
        let params = PhysicalParams::validate(
            self.g.unwrap_or(base.g),
            self.m_outer.unwrap_or(base.m_outer),
            self.m_middle.unwrap_or(base.m_middle),
            self.gamma0.unwrap_or(base.gamma0),
            self.gamma.unwrap_or(base.gamma),
        )?;
        Ok(params)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FieldArg {
    /// (r, v, theta, w) in the fully regularized time
    Regularized,
    /// (r, v, theta, w) integrated in the intermediate rescaled time
    Unregularized,
    /// (R, Z, P_R, P_Z) in physical time
    Cylindrical,
    /// (v, theta, w) on the collision manifold r = 0
    Manifold,
    /// (r, v) on the invariant plane theta = 0
    Homographic,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the angular potentials V, W, U and their derivatives
    Potentials {
        #[command(flatten)]
        params: ParamArgs,
        /// Number of grid points across [-pi/2, pi/2]
        #[arg(long, default_value_t = 1001)]
        theta_grid: usize,
        /// Output file (stdout when omitted)
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Convert cylindrical states from CSV to regularized coordinates
    Transform {
        #[command(flatten)]
        params: ParamArgs,
        /// Input CSV with header R,Z,P_R,P_Z,C (stdin when omitted)
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Integrate one orbit and print its samples
    Integrate {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum)]
        field: FieldArg,
        /// Comma-separated start state, matching the chosen field
        #[arg(long, allow_hyphen_values = true, value_name = "FLOATS")]
        start: String,
        /// Energy level (derived from the state for the cylindrical
        /// field, unused by the manifold field)
        #[arg(long, allow_negative_numbers = true, default_value_t = -1.0)]
        h: f64,
        /// Angular momentum
        #[arg(long = "C", allow_negative_numbers = true, default_value_t = 0.0)]
        c: f64,
        /// Length of the run in the regularized time
        #[arg(long, default_value_t = 10.0)]
        sigma_span: f64,
        #[arg(long)]
        rel_tol: Option<f64>,
        #[arg(long)]
        abs_tol: Option<f64>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Classify the collision-manifold topology at one momentum
    Classify {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long = "C", allow_negative_numbers = true)]
        c: f64,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// List the collision-manifold equilibria with their spectra
    Equilibria {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long = "C", allow_negative_numbers = true)]
        c: f64,
        /// Energy level handed to the finite-difference check
        #[arg(long, allow_negative_numbers = true, default_value_t = -1.0)]
        h: f64,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Tabulate the manifold section curve at a fixed v
    Section {
        #[command(flatten)]
        params: ParamArgs,
        /// Section value of v
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        v0: f64,
        #[arg(long = "C", allow_negative_numbers = true)]
        c: f64,
        /// Number of angle grid points
        #[arg(short = 'n', long = "points", default_value_t = 601)]
        n: usize,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Classify the homographic motion at one energy and momentum
    Homographic {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, allow_negative_numbers = true, default_value_t = -1.0)]
        h: f64,
        #[arg(long = "C", allow_negative_numbers = true)]
        c: f64,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Run a parameter sweep from a JSON plan
    Sweep {
        /// Sweep plan file
        #[arg(long, value_name = "PATH")]
        plan: PathBuf,
        /// Output CSV (overrides the plan's output field)
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Worker threads (logical CPU count when omitted)
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn make_writer(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(io::BufWriter::new(
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn parse_start(text: &str, expected: usize, names: &str) -> Result<Vec<f64>> {
    let values: Vec<f64> = text
        .split(',')
        .map(|piece| {
            piece
                .trim()
                .parse::<f64>()
                .with_context(|| format!("start component {piece:?} is not a number"))
        })
        .collect::<Result<_>>()?;
    if values.len() != expected {
        bail!("this field expects --start {names} ({expected} components), got {}", values.len());
    }
    Ok(values)
}

#[derive(Serialize)]
struct ComplexOut {
    re: f64,
    im: f64,
}

impl From<Complex64> for ComplexOut {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Serialize)]
struct Lambda1Out {
    jacobian_form: ComplexOut,
    ratio_form: ComplexOut,
    numeric: f64,
    matching: manifold::Lambda1Form,
}

#[derive(Serialize)]
struct SpectrumOut {
    closed: Vec<ComplexOut>,
    numeric: Vec<ComplexOut>,
    dims: manifold::Dims,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda1: Option<Lambda1Out>,
}

impl From<&manifold::Spectrum> for SpectrumOut {
    fn from(spec: &manifold::Spectrum) -> Self {
        Self {
            closed: spec.closed.iter().copied().map(Into::into).collect(),
            numeric: spec.numeric.iter().copied().map(Into::into).collect(),
            dims: spec.dims,
            lambda1: spec.lambda1.map(|cmp| Lambda1Out {
                jacobian_form: cmp.jacobian_form.into(),
                ratio_form: cmp.ratio_form.into(),
                numeric: cmp.numeric,
                matching: cmp.matching,
            }),
        }
    }
}

#[derive(Serialize)]
struct EquilibriumOut {
    kind: manifold::EquilibriumKind,
    location: [f64; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    spectrum: Option<SpectrumOut>,
}

#[derive(Serialize)]
struct EquilibriaOut {
    schema_version: u32,
    #[serde(rename = "C")]
    c: f64,
    h: f64,
    equilibria: Vec<EquilibriumOut>,
}

#[derive(Serialize)]
struct ClassifyOut {
    schema_version: u32,
    #[serde(rename = "C")]
    c: f64,
    class: manifold::CollisionTopology,
    threshold_low: f64,
    threshold_high: f64,
}

#[derive(Serialize)]
struct HomographicOut {
    schema_version: u32,
    h: f64,
    #[serde(rename = "C")]
    c: f64,
    #[serde(flatten)]
    report: homographic::HomographicReport,
}

#[derive(Serialize)]
struct IntegrateFooter {
    schema_version: u32,
    field: Field,
    h: f64,
    #[serde(rename = "C")]
    c: f64,
    termination: dynamics::Termination,
    max_residual: f64,
}

fn cmd_potentials(params: &PhysicalParams, n: usize, out: &Option<PathBuf>) -> Result<()> {
    if n < 2 {
        bail!("--theta-grid needs at least 2 points");
    }
    let mut w = make_writer(out)?;
    writeln!(w, "theta,V,W,U,dV,dW,dU")?;
    let half = std::f64::consts::FRAC_PI_2;
    for i in 0..n {
        let theta = -half + std::f64::consts::PI * (i as f64) / ((n - 1) as f64);
        let e = potentials::eval(params, theta);
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            outfmt::fmt_f64(theta),
            outfmt::fmt_f64(e.v),
            outfmt::fmt_f64(e.w),
            outfmt::fmt_f64(e.u),
            outfmt::fmt_f64(e.dv),
            outfmt::fmt_f64(e.dw),
            outfmt::fmt_f64(e.du),
        )?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_transform(
    params: &PhysicalParams,
    input: &Option<PathBuf>,
    out: &Option<PathBuf>,
) -> Result<()> {
    let reader: Box<dyn io::Read> = match input {
        Some(path) => Box::new(
            fs::File::open(path).with_context(|| format!("opening {}", path.display()))?,
        ),
        None => Box::new(io::stdin().lock()),
    };
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let expected = ["R", "Z", "P_R", "P_Z", "C"];
    if headers.iter().collect::<Vec<_>>() != expected {
        bail!(
            "input header must be exactly {}, got {}",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        );
    }
    let mut w = make_writer(out)?;
    writeln!(w, "r,v,theta,w,h,residual")?;
    for (i, record) in csv_reader.records().enumerate() {
        let row = i + 1;
        let record = record.with_context(|| format!("reading row {row}"))?;
        let mut values = [0.0f64; 5];
        for (j, field) in record.iter().enumerate() {
            values[j] = field
                .parse()
                .with_context(|| format!("row {row}: field {:?} is not a number", field))?;
        }
        let cyl = CylState {
            r: values[0],
            z: values[1],
            p_r: values[2],
            p_z: values[3],
            c: values[4],
        };
        let h = coords::reduced_energy(params, &cyl).with_context(|| format!("row {row}"))?;
        let state = coords::to_mcgehee(params, &cyl).with_context(|| format!("row {row}"))?;
        let residual = coords::energy_residual(params, &state, h, cyl.c);
        writeln!(
            w,
            "{},{},{},{},{},{}",
            outfmt::fmt_f64(state.r),
            outfmt::fmt_f64(state.v),
            outfmt::fmt_f64(state.theta),
            outfmt::fmt_f64(state.w),
            outfmt::fmt_f64(h),
            outfmt::fmt_f64(residual),
        )?;
    }
    w.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_integrate(
    params: &PhysicalParams,
    field_arg: FieldArg,
    start_text: &str,
    h_flag: f64,
    c: f64,
    sigma_span: f64,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    out: &Option<PathBuf>,
) -> Result<()> {
    let mut settings = IntegrationSettings::default();
    if let Some(r) = rel_tol {
        settings.rel_tol = r;
    }
    if let Some(a) = abs_tol {
        settings.abs_tol = a;
    }
    let (field, start, h) = match field_arg {
        FieldArg::Regularized | FieldArg::Unregularized => {
            let v = parse_start(start_text, 4, "r,v,theta,w")?;
            let field = if field_arg == FieldArg::Regularized {
                Field::Regularized
            } else {
                Field::Unregularized
            };
            (
                field,
                StartState::McGehee(McGeheeState::new(v[0], v[1], v[2], v[3])),
                h_flag,
            )
        }
        FieldArg::Cylindrical => {
            let v = parse_start(start_text, 4, "R,Z,P_R,P_Z")?;
            let cyl = CylState {
                r: v[0],
                z: v[1],
                p_r: v[2],
                p_z: v[3],
                c,
            };
            let h = coords::reduced_energy(params, &cyl)?;
            (Field::Cylindrical, StartState::Cylindrical(cyl), h)
        }
        FieldArg::Manifold => {
            let v = parse_start(start_text, 3, "v,theta,w")?;
            (
                Field::CollisionManifold,
                StartState::Manifold {
                    v: v[0],
                    theta: v[1],
                    w: v[2],
                },
                h_flag,
            )
        }
        FieldArg::Homographic => {
            let v = parse_start(start_text, 2, "r,v")?;
            (
                Field::Regularized,
                StartState::McGehee(McGeheeState::new(v[0], v[1], 0.0, 0.0)),
                h_flag,
            )
        }
    };
    let trajectory = dynamics::integrate(params, field, &start, h, c, &settings, sigma_span)?;
    let mut w = make_writer(out)?;
    writeln!(w, "sigma,t_phys,r,v,theta,w,residual")?;
    for (sigma, state) in &trajectory.samples {
        let residual = coords::energy_residual(params, state, trajectory.h, trajectory.c);
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            outfmt::fmt_f64(*sigma),
            outfmt::fmt_f64(state.t_phys),
            outfmt::fmt_f64(state.r),
            outfmt::fmt_f64(state.v),
            outfmt::fmt_f64(state.theta),
            outfmt::fmt_f64(state.w),
            outfmt::fmt_f64(residual),
        )?;
    }
    let footer = IntegrateFooter {
        schema_version: SCHEMA_VERSION,
        field,
        h: trajectory.h,
        c: trajectory.c,
        termination: trajectory.termination,
        max_residual: trajectory.max_residual,
    };
    writeln!(w, "# {}", outfmt::to_json(&footer))?;
    w.flush()?;
    Ok(())
}

fn cmd_classify(params: &PhysicalParams, c: f64, out: &Option<PathBuf>) -> Result<()> {
    let tc = manifold::classify(params, c);
    let payload = ClassifyOut {
        schema_version: SCHEMA_VERSION,
        c,
        class: tc.class,
        threshold_low: tc.thresholds.0,
        threshold_high: tc.thresholds.1,
    };
    let mut w = make_writer(out)?;
    writeln!(w, "{}", outfmt::to_json(&payload))?;
    w.flush()?;
    Ok(())
}

fn cmd_equilibria(params: &PhysicalParams, h: f64, c: f64, out: &Option<PathBuf>) -> Result<()> {
    let census = manifold::equilibria_with_spectra(params, h, c);
    let payload = EquilibriaOut {
        schema_version: SCHEMA_VERSION,
        c,
        h,
        equilibria: census
            .iter()
            .map(|eq| EquilibriumOut {
                kind: eq.kind,
                location: eq.location,
                spectrum: eq.spectrum.as_ref().map(Into::into),
            })
            .collect(),
    };
    let mut w = make_writer(out)?;
    writeln!(w, "{}", outfmt::to_json(&payload))?;
    w.flush()?;
    Ok(())
}

fn cmd_section(
    params: &PhysicalParams,
    v0: f64,
    c: f64,
    n: usize,
    out: &Option<PathBuf>,
) -> Result<()> {
    if n < 2 {
        bail!("--points needs at least 2 grid points");
    }
    let curve = manifold::section_curve(params, v0, c, n);
    let mut w = make_writer(out)?;
    writeln!(w, "theta,w")?;
    for (theta, wv) in curve {
        writeln!(w, "{},{}", outfmt::fmt_f64(theta), outfmt::fmt_f64(wv))?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_homographic(params: &PhysicalParams, h: f64, c: f64, out: &Option<PathBuf>) -> Result<()> {
    let report = homographic::analyze(params, h, c)?;
    let payload = HomographicOut {
        schema_version: SCHEMA_VERSION,
        h,
        c,
        report,
    };
    let mut w = make_writer(out)?;
    writeln!(w, "{}", outfmt::to_json(&payload))?;
    w.flush()?;
    Ok(())
}

fn cmd_sweep(plan_path: &PathBuf, out: &Option<PathBuf>, workers: Option<usize>) -> Result<()> {
    let text = fs::read_to_string(plan_path)
        .with_context(|| format!("reading plan {}", plan_path.display()))?;
    let plan: SweepPlan = serde_json::from_str(&text)
        .with_context(|| format!("parsing plan {}", plan_path.display()))?;
    let out_path = out
        .clone()
        .or_else(|| plan.output.clone().map(PathBuf::from))
        .context("no output path: pass --out or set \"output\" in the plan")?;
    let workers = workers.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });
    let summary = sweep::run_sweep(&plan, &out_path, workers)?;
    println!("{}", outfmt::to_json(&summary));
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Potentials {
            params,
            theta_grid,
            out,
        } => cmd_potentials(&params.resolve()?, *theta_grid, out),
        Command::Transform { params, input, out } => {
            cmd_transform(&params.resolve()?, input, out)
        }
        Command::Integrate {
            params,
            field,
            start,
            h,
            c,
            sigma_span,
            rel_tol,
            abs_tol,
            out,
        } => cmd_integrate(
            &params.resolve()?,
            *field,
            start,
            *h,
            *c,
            *sigma_span,
            *rel_tol,
            *abs_tol,
            out,
        ),
        Command::Classify { params, c, out } => cmd_classify(&params.resolve()?, *c, out),
        Command::Equilibria { params, c, h, out } => {
            cmd_equilibria(&params.resolve()?, *h, *c, out)
        }
        Command::Section {
            params,
            v0,
            c,
            n,
            out,
        } => cmd_section(&params.resolve()?, *v0, *c, *n, out),
        Command::Homographic { params, h, c, out } => {
            cmd_homographic(&params.resolve()?, *h, *c, out)
        }
        Command::Sweep { plan, out, workers } => cmd_sweep(plan, out, *workers),
    }
}

fn main() -> std::process::ExitCode {
    match run() {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
