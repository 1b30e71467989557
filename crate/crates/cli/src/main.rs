use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ssasl_core::limits::Variant;
use ssasl_core::netmodel::{Dispatch, PowerSystemCase};
use ssasl_core::oracle::{scan_boundary, CheckKind};
use ssasl_core::pipeline::{analyze, monitor, prepare};
use ssasl_core::validate::validate_case;
use ssasl_core::{AnalysisOptions, Error};

#[derive(Debug, Parser)]
#[command(name = "ssasl", version, about = "Steady-state angle stability limits in modal space")]
struct Cli {
    /// JSON file with numeric overrides (same layout as --show-config).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Print the effective numeric configuration to stderr before running.
    #[arg(long, global = true)]
    show_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Args)]
struct CaseArgs {
    /// Case file (JSON).
    case: PathBuf,

    /// Generator dispatch override, `BUS=MW`; repeatable.
    #[arg(long = "set", value_name = "BUS=MW", value_parser = parse_setting)]
    set: Vec<(u32, f64)>,

    /// Output file; stdout when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

impl CaseArgs {
    fn dispatch(&self) -> Dispatch {
        self.set.iter().copied().collect()
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Ms1,
    Ms2,
    Ms3,
    All,
}

impl VariantArg {
    fn variants(self) -> Vec<Variant> {
        match self {
            VariantArg::Ms1 => vec![Variant::Ms1],
            VariantArg::Ms2 => vec![Variant::Ms2],
            VariantArg::Ms3 => vec![Variant::Ms3],
            VariantArg::All => Variant::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CheckArg {
    Vs,
    As,
    Sss,
    All,
}

impl CheckArg {
    fn kinds(self) -> Vec<CheckKind> {
        match self {
            CheckArg::Vs => vec![CheckKind::Vs],
            CheckArg::As => vec![CheckKind::As],
            CheckArg::Sss => vec![CheckKind::Sss],
            CheckArg::All => CheckKind::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the power flow.
    Pf {
        #[command(flatten)]
        case: CaseArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Electromechanical modes: eigenvalues, frequencies and mode shapes (CSV).
    Modes {
        #[command(flatten)]
        case: CaseArgs,
        /// Also write sampled generalized power-angle curves (CSV) here.
        #[arg(long)]
        curves: Option<PathBuf>,
        /// Samples per curve over [-π, π].
        #[arg(long, default_value_t = 181)]
        samples: usize,
        /// Also write single-degree-of-freedom residuals (JSON) here.
        #[arg(long)]
        sdof: Option<PathBuf>,
    },
    /// Limit points and reconstructed steady states (JSON).
    Ssasl {
        #[command(flatten)]
        case: CaseArgs,
        #[arg(long, value_enum, default_value = "all")]
        variant: VariantArg,
    },
    /// MW margins along a scenario of dispatch changes (CSV).
    Monitor {
        #[command(flatten)]
        case: CaseArgs,
        /// JSON list of per-step generator MW overrides.
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        variant: VariantArg,
    },
    /// Ray-scanned stability boundaries in a two-generator plane (CSV).
    Boundary {
        #[command(flatten)]
        case: CaseArgs,
        /// Two scan generators by bus id, `A,B`.
        #[arg(long, value_parser = parse_pair)]
        gens: (u32, u32),
        #[arg(long, default_value_t = 2.0)]
        res_deg: f64,
        #[arg(long, value_enum, default_value = "all")]
        check: CheckArg,
    },
    /// Run the invariant suite and print a pass/fail table.
    Validate {
        #[command(flatten)]
        case: CaseArgs,
    },
}

fn parse_setting(s: &str) -> Result<(u32, f64), String> {
    let (bus, mw) = s.split_once('=').ok_or_else(|| format!("expected BUS=MW, got {s:?}"))?;
    let bus = bus.trim().parse().map_err(|_| format!("bad bus id {bus:?}"))?;
    let mw: f64 = mw.trim().parse().map_err(|_| format!("bad MW value {mw:?}"))?;
    if !mw.is_finite() {
        return Err(format!("non-finite MW value {mw}"));
    }
    Ok((bus, mw))
}

fn parse_pair(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected A,B, got {s:?}"))?;
    let p = |x: &str| x.trim().trim_start_matches(['G', 'g']).parse::<u32>().map_err(|_| format!("bad bus id {x:?}"));
    Ok((p(a)?, p(b)?))
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: if e.is_numeric() { 2 } else { 1 }, kind: e.kind().to_string(), message: e.to_string() }
    }
}

impl Failure {
    fn config(kind: &str, message: impl Into<String>) -> Self {
        Failure { code: 1, kind: kind.into(), message: message.into() }
    }

    fn numeric(kind: &str, message: impl Into<String>) -> Self {
        Failure { code: 2, kind: kind.into(), message: message.into() }
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: &'a str,
    exit_code: u8,
}

fn load_options(path: Option<&Path>) -> Result<AnalysisOptions, Failure> {
    let opts = match path {
        None => AnalysisOptions::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::config("io", format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::config("config", e.to_string()))?
        }
    };
    opts.validate()?;
    Ok(opts)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::config("io", format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("results serialize");
    s.push('\n');
    s
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn run_pf(case: &CaseArgs, format: Format, opts: &AnalysisOptions) -> Result<(), Failure> {
    let sys = PowerSystemCase::load(&case.case)?;
    let pf = ssasl_core::powerflow::solve_power_flow(&sys, &case.dispatch(), &opts.power_flow)?;
    let text = match format {
        Format::Json => to_json(&pf),
        Format::Csv => {
            let mut s = String::from("bus,vm_pu,va_deg\n");
            for (id, v) in pf.bus_ids.iter().zip(&pf.voltage) {
                writeln!(s, "{id},{},{}", v.norm(), v.arg().to_degrees()).unwrap();
            }
            s
        }
    };
    emit(case.out.as_deref(), &text)
}

fn run_modes(
    case: &CaseArgs,
    curves: Option<&Path>,
    samples: usize,
    sdof: Option<&Path>,
    opts: &AnalysisOptions,
) -> Result<(), Failure> {
    let sys = PowerSystemCase::load(&case.case)?;
    let base = prepare(&sys, &case.dispatch(), opts)?;
    let buses: Vec<u32> = sys.generators.iter().map(|g| g.bus).collect();

    let mut s = String::from("mode,eig_re,eig_im,freq_hz,damping_ratio");
    for b in &buses {
        write!(s, ",shape_re_{b},shape_im_{b}").unwrap();
    }
    s.push('\n');
    for mode in 0..base.dec.n_modes() {
        let l = base.dec.mode_eigenvalue(mode);
        write!(s, "{mode},{},{},{},{}", l.re, l.im, base.dec.frequency_hz(mode), -l.re / l.norm()).unwrap();
        for z in base.dec.mode_shape(mode) {
            write!(s, ",{},{}", z.re, z.im).unwrap();
        }
        s.push('\n');
    }
    emit(case.out.as_deref(), &s)?;

    let tol = opts.search.realness_tol;
    if let Some(path) = curves {
        let mut c = String::from("mode,delta_g,h\n");
        for mode in 0..base.dec.n_modes() {
            let pi = std::f64::consts::PI;
            for (d, h) in base.curve(mode, tol).sample(-pi, pi, samples.max(2))? {
                writeln!(c, "{mode},{d},{h}").unwrap();
            }
        }
        emit(Some(path), &c)?;
    }
    if let Some(path) = sdof {
        let grid: Vec<(f64, f64)> = [-0.1, -0.05, 0.0, 0.05, 0.1]
            .iter()
            .flat_map(|&w| [-0.5, -0.25, 0.0, 0.25, 0.5].map(|d| (w, d)))
            .collect();
        let res = (0..base.dec.n_modes())
            .map(|m| ssasl_core::modal::check_sdof_assumption(&base.curve(m, tol), &grid))
            .collect::<ssasl_core::Result<Vec<_>>>()?;
        emit(Some(path), &to_json(&res))?;
    }
    Ok(())
}

fn run_ssasl(case: &CaseArgs, variant: VariantArg, opts: &AnalysisOptions) -> Result<(), Failure> {
    let sys = PowerSystemCase::load(&case.case)?;
    let analysis = analyze(&sys, &case.dispatch(), &variant.variants(), opts)?;
    emit(case.out.as_deref(), &to_json(&analysis))
}

fn load_scenario(path: &Path) -> Result<Vec<Dispatch>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::config("io", format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::config("schema", format!("scenario {}: {e}", path.display())))
}

fn run_monitor(case: &CaseArgs, scenario: &Path, variant: VariantArg, opts: &AnalysisOptions) -> Result<(), Failure> {
    let sys = PowerSystemCase::load(&case.case)?;
    let steps = load_scenario(scenario)?;
    let overrides = case.dispatch();
    let steps: Vec<Dispatch> = steps
        .into_iter()
        .map(|mut d| {
            for (k, v) in &overrides {
                d.entry(*k).or_insert(*v);
            }
            d
        })
        .collect();
    let results = monitor(&sys, &steps, &variant.variants(), opts);

    let mut s = String::from("step,variant,mode,side,margin_mw,min_margin\n");
    for st in &results {
        if let Some(err) = &st.error {
            log::warn!("step {}: {err}", st.step);
            writeln!(s, "{},,,,,", st.step).unwrap();
            continue;
        }
        for r in &st.reports {
            let min = opt_num(r.min.as_ref().map(|m| m.margin_mw));
            for e in &r.entries {
                writeln!(s, "{},{},{},{},{},{min}", st.step, e.variant, e.mode, e.side.index(), e.margin_mw).unwrap();
            }
            for f in &r.failures {
                let v = f.variant.map(|v| v.to_string()).unwrap_or_else(|| r.label.rsplit(' ').next().unwrap_or("").to_string());
                let side = f.side.map(|x| x.index().to_string()).unwrap_or_default();
                writeln!(s, "{},{v},{},{side},,{min}", st.step, f.mode).unwrap();
            }
        }
    }
    emit(case.out.as_deref(), &s)
}

fn run_boundary(
    case: &CaseArgs,
    gens: (u32, u32),
    res_deg: f64,
    check: CheckArg,
    opts: &AnalysisOptions,
) -> Result<(), Failure> {
    let sys = PowerSystemCase::load(&case.case)?;
    let atlas = scan_boundary(&sys, &case.dispatch(), gens, res_deg, &check.kinds(), opts)?;
    let mut s = String::from("angle_deg,Pe_a_mw,Pe_b_mw,delta_a_rad,delta_b_rad,kind\n");
    for kind in check.kinds() {
        for r in atlas.polyline(kind) {
            match r.limit.as_ref().and_then(|l| atlas.coordinates(&sys, l)) {
                Some((pa, pb, da, db)) => writeln!(s, "{},{pa},{pb},{da},{db},{kind}", r.angle_deg).unwrap(),
                None => {
                    log::warn!("ray {}° {kind}: {}", r.angle_deg, r.error.as_deref().unwrap_or("no equilibrium"));
                    writeln!(s, "{},,,,,{kind}", r.angle_deg).unwrap()
                }
            }
        }
    }
    emit(case.out.as_deref(), &s)
}

fn run_validate(case: &CaseArgs, opts: &AnalysisOptions) -> Result<(), Failure> {
    let sys = PowerSystemCase::load(&case.case)?;
    let report = validate_case(&sys, &case.dispatch(), opts)?;
    let mut s = format!("{:<6} {:<40} {:>14} {:>12}\n", "status", "check", "value", "tolerance");
    for c in &report.checks {
        let status = if c.informational { "INFO" } else if c.passed { "PASS" } else { "FAIL" };
        let tol = if c.informational { "-".to_string() } else { format!("{:.1e}", c.tolerance) };
        writeln!(s, "{status:<6} {:<40} {:>14.6e} {tol:>12}", c.name, c.value).unwrap();
    }
    emit(case.out.as_deref(), &s)?;
    if report.all_passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed && !c.informational).map(|c| c.name.as_str()).collect();
        Err(Failure::numeric("validation", format!("failed checks: {}", failed.join(", "))))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let opts = load_options(cli.config.as_deref())?;
    if cli.show_config {
        eprint!("{}", to_json(&opts));
    }
    let Some(command) = cli.command else {
        if cli.show_config {
            return Ok(());
        }
        return Err(Failure::config("usage", "no subcommand given (see --help)"));
    };
    match command {
        Command::Pf { case, format } => run_pf(&case, format, &opts),
        Command::Modes { case, curves, samples, sdof } => run_modes(&case, curves.as_deref(), samples, sdof.as_deref(), &opts),
        Command::Ssasl { case, variant } => run_ssasl(&case, variant, &opts),
        Command::Monitor { case, scenario, variant } => run_monitor(&case, &scenario, variant, &opts),
        Command::Boundary { case, gens, res_deg, check } => run_boundary(&case, gens, res_deg, check, &opts),
        Command::Validate { case } => run_validate(&case, &opts),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let f = Failure::config("usage", e.to_string().trim());
            report(&f);
            return ExitCode::from(f.code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            report(&f);
            ExitCode::from(f.code)
        }
    }
}

fn report(f: &Failure) {
    let r = ErrorReport { error: &f.kind, message: &f.message, exit_code: f.code };
    eprintln!("{}", serde_json::to_string(&r).expect("error report serializes"));
}
