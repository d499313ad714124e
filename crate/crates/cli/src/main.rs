use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bellcone_core::bell::{
    catalog, extremal_bell_from, local_optimum, tsirelson_bound_search, BellExpression, Catalog,
    ExpressionSidecar, SearchGrid,
};
use bellcone_core::closed_forms::pd_singular_values;
use bellcone_core::conditions::{
    self, bound_ineq2, bound_ineq15, bound_ineq4, check_corr_epping, check_ineq2, ConditionId, ConditionReport,
    DEFAULT_CONDITION_TOL,
};
use bellcone_core::generators::{self, LdbAssignment};
use bellcone_core::io::{fmt17, matrix_from_csv, matrix_to_csv};
use bellcone_core::model::{arrange, validate, Behaviour, BehaviourDoc, MatrixKind, Scenario};
use bellcone_core::numlin::norms;
use bellcone_core::slice::{scan_slice, SliceCondition, SliceSpec};
use bellcone_core::TOL_ENV_VAR;

#[derive(Parser)]
#[command(name = "bellcone", version, about = "Trace-norm conditions and Bell-expression bounds for bipartite behaviours")]
struct Cli {
    /// Tolerance for validation and condition checks.
    #[arg(long, global = true, env = TOL_ENV_VAR, default_value_t = DEFAULT_CONDITION_TOL)]
    tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check nonnegativity, normalization and no-signaling of a behaviour.
    Validate { behaviour: PathBuf },
    /// Write a behaviour from one of the built-in families as JSON.
    Generate(GenerateArgs),
    /// Export a matrix arrangement of a behaviour as CSV.
    Matrix {
        behaviour: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::P)]
        kind: Kind,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Trace, spectral and Frobenius norms of a behaviour matrix or a CSV matrix.
    Norms {
        /// Behaviour JSON, or a CSV matrix with `--csv`.
        input: PathBuf,
        #[arg(long)]
        csv: bool,
        #[arg(long, value_enum, default_value_t = Kind::P)]
        kind: Kind,
    },
    /// Evaluate necessary conditions; prints one JSON object per condition.
    Check(CheckArgs),
    /// Local, trace-norm and searched quantum bounds of a Bell expression.
    BellBound {
        #[command(flatten)]
        expr: ExprArgs,
        /// Skip the search over equivalent forms.
        #[arg(long)]
        no_search: bool,
    },
    /// Bell expression `G` with `<P, G> = ‖P‖₁` and `‖G‖_∞ ≤ 1`, as CSV plus JSON sidecar.
    ExtremalBell {
        behaviour: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::P)]
        kind: Kind,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Closed-form singular values of the maximally entangled family as CSV.
    ClosedForms {
        #[arg(long)]
        d: usize,
        /// Emit every dimension from 2 up to `d`.
        #[arg(long)]
        all: bool,
    },
    /// Scan `q·P1 + p·P2 + (1 − p − q)·base` on a grid.
    Slice(SliceArgs),
    /// Dual certificate for the trace-norm bound of a Bell expression.
    Certify {
        #[command(flatten)]
        expr: ExprArgs,
        /// Also certify the marginal-corrected bound for this behaviour.
        #[arg(long)]
        behaviour: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    P,
    Pprime,
    M,
}

impl From<Kind> for MatrixKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::P => MatrixKind::InputMajorP,
            Kind::Pprime => MatrixKind::OutputMajorPprime,
            Kind::M => MatrixKind::CenteredM,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Ldb,
    Pr2d,
    Mm22,
    Maxent,
    Mixed,
    Isotropic,
    Random,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Scenario as `mA,mB,dA,dB`.
    #[arg(long, value_parser = parse_scenario)]
    scenario: Option<Scenario>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Position in the LDB enumeration, starting from 0.
    #[arg(long, default_value_t = 0)]
    index: u128,
    /// Visibility of the isotropic box.
    #[arg(long)]
    v: Option<f64>,
    #[arg(long, default_value_t = 4)]
    terms: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum CondArg {
    Thm1,
    Thm2,
    Ineq2,
    Ineq4,
    CorrNorm,
    CorrEpping,
    Thm8,
    Ineq15,
    All,
}

#[derive(Args)]
struct CheckArgs {
    behaviour: PathBuf,
    #[arg(long, value_enum, default_value_t = CondArg::All)]
    condition: CondArg,
    /// Bell expression for INEQ2/INEQ4: a catalog name or a CSV path.
    #[arg(long)]
    expression: Option<String>,
    /// Correlator coefficients (m_A × m_B CSV) for CORR_EPPING/INEQ15.
    #[arg(long)]
    correlator: Option<PathBuf>,
}

#[derive(Args)]
struct ExprArgs {
    /// Catalog name (g_chsh, g_chsh_shifted, g_phi3) or a CSV path with a JSON sidecar.
    #[arg(long)]
    expression: String,
    /// Scenario of a CSV expression without sidecar, as `mA,mB,dA,dB`.
    #[arg(long, value_parser = parse_scenario)]
    scenario: Option<Scenario>,
}

#[derive(Args)]
struct SliceArgs {
    #[arg(long)]
    p1: PathBuf,
    #[arg(long)]
    p2: PathBuf,
    #[arg(long)]
    base: PathBuf,
    /// Grid points per axis.
    #[arg(long, default_value_t = 101)]
    resolution: usize,
    #[arg(long, value_parser = parse_range, default_value = "0,1")]
    q_range: (f64, f64),
    #[arg(long, value_parser = parse_range, default_value = "0,1")]
    p_range: (f64, f64),
    /// THM1, THM2, CORR_NORM or THM8; ignored when `--expression` is given.
    #[arg(long, value_enum, default_value_t = CondArg::Thm1)]
    condition: CondArg,
    /// Bell expression whose value is compared with `--threshold`.
    #[arg(long, requires = "threshold")]
    expression: Option<String>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    grid: PathBuf,
    #[arg(long)]
    boundary: PathBuf,
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if parts.len() != 4 {
        return Err(format!("expected mA,mB,dA,dB, got {} fields", parts.len()));
    }
    Scenario::new(parts[0], parts[1], parts[2], parts[3]).map_err(|e| e.to_string())
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [a, b] if a.is_finite() && b.is_finite() && a < b => Ok((a, b)),
        _ => Err(format!("expected lo,hi with lo < hi, got {s:?}")),
    }
}

/// Usage or structural failure; exits with status 2.
struct Fail(String);

impl<E: std::fmt::Display> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail(e.to_string())
    }
}

type CmdResult = Result<bool, Fail>;

fn read_text(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Fail> {
    fs::write(path, text).map_err(|e| Fail(format!("{}: {e}", path.display())))
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Fail> {
    match output {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_behaviour(path: &Path) -> Result<Behaviour, Fail> {
    let text = read_text(path)?;
    let doc: BehaviourDoc = serde_json::from_str(&text).map_err(|e| {
        Fail(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column()))
    })?;
    Behaviour::try_from(doc).map_err(|e| Fail(format!("{}: {e}", path.display())))
}

fn read_csv(path: &Path) -> Result<DMatrix<f64>, Fail> {
    matrix_from_csv(&read_text(path)?).map_err(|e| Fail(format!("{}: {e}", path.display())))
}

fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn load_expression(spec: &str, scenario: Option<Scenario>) -> Result<BellExpression, Fail> {
    let cat = catalog();
    if let Some(g) = cat.by_name(spec) {
        return Ok(g.clone());
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Fail(format!(
            "{spec:?} is neither a catalog expression ({}) nor an existing file",
            Catalog::NAMES.join(", ")
        )));
    }
    let g = read_csv(path)?;
    let side = sidecar_path(path);
    let (scenario, name) = match scenario {
        Some(s) => (s, None),
        None => {
            let text = read_text(&side)
                .map_err(|Fail(e)| Fail(format!("{e} (pass --scenario when there is no sidecar)")))?;
            let meta: ExpressionSidecar = serde_json::from_str(&text).map_err(|e| {
                Fail(format!("{}: line {}, column {}: {e}", side.display(), e.line(), e.column()))
            })?;
            (meta.scenario, meta.name)
        }
    };
    Ok(BellExpression::new(scenario, g, name)?)
}

fn write_expression(path: &Path, g: &BellExpression) -> Result<(), Fail> {
    write_text(path, &matrix_to_csv(&g.g))?;
    let meta = serde_json::to_string_pretty(&g.sidecar())?;
    write_text(&sidecar_path(path), &(meta + "\n"))
}

/// One JSON object with fixed-format numbers.
struct JsonLine(String);

impl JsonLine {
    fn new() -> Self {
        JsonLine(String::new())
    }

    fn raw(mut self, key: &str, value: &str) -> Self {
        self.0.push(if self.0.is_empty() { '{' } else { ',' });
        let _ = write!(self.0, "{}:{value}", serde_json::to_string(key).expect("string"));
        self
    }

    fn str(self, key: &str, value: &str) -> Self {
        let v = serde_json::to_string(value).expect("string");
        self.raw(key, &v)
    }

    fn num(self, key: &str, value: f64) -> Self {
        // JSON has no infinities
        if value.is_finite() {
            self.raw(key, &fmt17(value))
        } else {
            self.raw(key, "null")
        }
    }

    fn bool(self, key: &str, value: bool) -> Self {
        self.raw(key, if value { "true" } else { "false" })
    }

    fn finish(mut self) -> String {
        if self.0.is_empty() {
            self.0.push('{');
        }
        self.0.push_str("}\n");
        self.0
    }
}

fn report_line(r: &ConditionReport, valid: bool) -> String {
    let mut line = JsonLine::new().str("condition", &r.condition.to_string());
    if let Some(e) = &r.expression {
        line = line.str("expression", e);
    }
    line.num("measured", r.measured)
        .num("bound", r.bound)
        .num("margin", r.margin)
        .bool("satisfied", r.satisfied)
        .bool("valid_behaviour", valid)
        .finish()
}

fn cmd_validate(path: &Path, tol: f64) -> CmdResult {
    let b = read_behaviour(path)?;
    let report = validate(&b, tol);
    for v in &report.violations {
        println!("{v}");
    }
    println!(
        "{}: {} violation(s), max magnitude {}",
        if report.is_valid() { "valid" } else { "invalid" },
        report.violations.len(),
        fmt17(report.max_magnitude())
    );
    Ok(report.is_valid())
}

fn need<T>(value: Option<T>, flag: &str, family: &str) -> Result<T, Fail> {
    value.ok_or_else(|| Fail(format!("--{flag} is required for family {family}")))
}

fn cmd_generate(a: &GenerateArgs) -> CmdResult {
    let b = match a.family {
        Family::Ldb => {
            let s = need(a.scenario, "scenario", "ldb")?;
            let count = generators::ldb_count(s);
            if a.index >= count {
                return Err(Fail(format!("--index {} out of range: {s} has {count} LDBs", a.index)));
            }
            let asg: LdbAssignment = generators::ldb_assignment(s, a.index);
            generators::ldb(s, &asg)?
        }
        Family::Pr2d => {
            let d = need(a.d, "d", "pr2d")?;
            match a.scenario {
                Some(s) => generators::pr_box_2d(d, s)?,
                None => generators::pr_box(d)?,
            }
        }
        Family::Mm22 => generators::pr_box_mm22_lift(need(a.m, "m", "mm22")?)?,
        Family::Maxent => generators::max_ent_behaviour(need(a.d, "d", "maxent")?)?,
        Family::Mixed => generators::fully_mixed(need(a.scenario, "scenario", "mixed")?)?,
        Family::Isotropic => generators::isotropic(a.d.unwrap_or(2), need(a.v, "v", "isotropic")?)?,
        Family::Random => {
            let s = need(a.scenario, "scenario", "random")?;
            generators::random_ns_mixture(s, a.terms, &mut ChaCha8Rng::seed_from_u64(a.seed))?
        }
    };
    emit(a.output.as_deref(), &(b.to_json() + "\n"))?;
    Ok(true)
}

fn cmd_matrix(path: &Path, kind: Kind, output: Option<&Path>) -> CmdResult {
    let b = read_behaviour(path)?;
    emit(output, &matrix_to_csv(&arrange(&b, kind.into()).data))?;
    Ok(true)
}

fn cmd_norms(input: &Path, csv: bool, kind: Kind) -> CmdResult {
    let m = if csv { read_csv(input)? } else { arrange(&read_behaviour(input)?, kind.into()).data };
    let n = norms(&m)?;
    println!("quantity,value");
    println!("trace_norm,{}", fmt17(n.trace));
    println!("spectral_norm,{}", fmt17(n.spectral));
    println!("frobenius_norm,{}", fmt17(n.frobenius));
    Ok(true)
}

fn cmd_check(a: &CheckArgs, tol: f64) -> CmdResult {
    let b = read_behaviour(&a.behaviour)?;
    let valid = validate(&b, tol).is_valid();
    let expr = a.expression.as_deref().map(|e| load_expression(e, None)).transpose()?;
    let corr = a.correlator.as_deref().map(read_csv).transpose()?;
    let need_expr = || expr.as_ref().ok_or_else(|| Fail("this condition needs --expression".into()));
    let need_corr = || corr.as_ref().ok_or_else(|| Fail("this condition needs --correlator".into()));

    let reports = match a.condition {
        CondArg::Thm1 => vec![conditions::check_thm1(&b, tol)?],
        CondArg::Thm2 => vec![conditions::check_thm2(&b, tol)?],
        CondArg::CorrNorm => vec![conditions::check_corr_norm(&b, tol)?],
        CondArg::Thm8 => vec![conditions::check_thm8(&b, tol)?],
        CondArg::Ineq2 => vec![check_ineq2(&b, need_expr()?, tol)?],
        CondArg::Ineq4 => vec![bound_ineq4(&b, need_expr()?, tol)?],
        CondArg::CorrEpping => vec![check_corr_epping(&b, need_corr()?, tol)?],
        CondArg::Ineq15 => vec![bound_ineq15(&b, need_corr()?, tol)?],
        CondArg::All => {
            let mut out = conditions::check_all(&b, tol)?;
            if let Some(g) = &expr {
                out.push(check_ineq2(&b, g, tol)?);
                out.push(bound_ineq4(&b, g, tol)?);
            }
            if let Some(c) = &corr {
                out.push(check_corr_epping(&b, c, tol)?);
                out.push(bound_ineq15(&b, c, tol)?);
            }
            out
        }
    };
    for r in &reports {
        print!("{}", report_line(r, valid));
    }
    Ok(reports.iter().all(|r| r.satisfied))
}

fn cmd_bell_bound(expr: &ExprArgs, no_search: bool) -> CmdResult {
    let g = load_expression(&expr.expression, expr.scenario)?;
    let mut line = JsonLine::new();
    if let Some(n) = &g.name {
        line = line.str("expression", n);
    }
    match local_optimum(&g) {
        Ok(l) => line = line.num("local_bound", l.value),
        Err(e) => eprintln!("local bound skipped: {e}"),
    }
    line = line.num("trace_norm_bound", bound_ineq2(&g)?);
    if !no_search {
        let r = tsirelson_bound_search(&g, &SearchGrid::default())?;
        line = line.num("searched_bound", r.bound).num("scale", r.form.scale);
        let offsets: Vec<String> = r.form.block_offsets.transpose().iter().map(|v| fmt17(*v)).collect();
        line = line.raw("block_offsets", &format!("[{}]", offsets.join(",")));
    }
    print!("{}", line.finish());
    Ok(true)
}

fn cmd_extremal(path: &Path, kind: Kind, output: &Path) -> CmdResult {
    let b = read_behaviour(path)?;
    let m = arrange(&b, kind.into());
    let g = extremal_bell_from(&m)?.named("extremal");
    write_expression(output, &g)?;
    let value = bellcone_core::numlin::frobenius_inner(&m.data, &g.g)?;
    let n = norms(&m.data)?;
    let line = JsonLine::new()
        .num("inner_product", value)
        .num("trace_norm", n.trace)
        .num("spectral_norm_of_g", bellcone_core::numlin::spectral_norm(&g.g)?)
        .str("csv", &output.display().to_string())
        .str("sidecar", &sidecar_path(output).display().to_string());
    print!("{}", line.finish());
    Ok(true)
}

fn cmd_closed_forms(d: usize, all: bool) -> CmdResult {
    let mut out = String::from("d,j,sigma_minus,sigma_plus,branch_minus,branch_plus\n");
    let dims: Vec<usize> = if all { (2..=d).collect() } else { vec![d] };
    for dim in dims {
        let spec = pd_singular_values(dim)?;
        for (j, (lo, hi)) in spec.branch_pairs().into_iter().enumerate() {
            let _ = writeln!(
                out,
                "{dim},{j},{},{},{},{}",
                fmt17(spec.sigma_minus[j]),
                fmt17(spec.sigma_plus[j]),
                fmt17(lo),
                fmt17(hi)
            );
        }
    }
    print!("{out}");
    Ok(true)
}

fn slice_condition(a: &SliceArgs) -> Result<SliceCondition, Fail> {
    if let Some(e) = &a.expression {
        let g = load_expression(e, None)?;
        let threshold = a.threshold.ok_or_else(|| Fail("--expression needs --threshold".into()))?;
        return Ok(SliceCondition::Expression { g, threshold });
    }
    let id = match a.condition {
        CondArg::Thm1 => ConditionId::Thm1,
        CondArg::Thm2 => ConditionId::Thm2,
        CondArg::CorrNorm => ConditionId::CorrNorm,
        CondArg::Thm8 => ConditionId::Thm8,
        _ => return Err(Fail("slice supports thm1, thm2, corr-norm and thm8, or --expression".into())),
    };
    Ok(SliceCondition::Check(id))
}

fn cmd_slice(a: &SliceArgs, tol: f64) -> CmdResult {
    let spec = SliceSpec {
        p1: read_behaviour(&a.p1)?,
        p2: read_behaviour(&a.p2)?,
        base: read_behaviour(&a.base)?,
        q_range: a.q_range,
        p_range: a.p_range,
        resolution: (a.resolution, a.resolution),
        condition: slice_condition(a)?,
        tol,
    };
    let r = scan_slice(&spec)?;
    let mut grid = String::from("q,p,measured,bound,margin,satisfied,in_polytope\n");
    for g in &r.points {
        let _ = writeln!(
            grid,
            "{},{},{},{},{},{},{}",
            fmt17(g.q),
            fmt17(g.p),
            fmt17(g.measured),
            fmt17(g.bound),
            fmt17(g.margin),
            g.satisfied as u8,
            g.in_polytope as u8
        );
    }
    let mut boundary = String::from("polyline,q,p\n");
    for (k, line) in r.polylines.iter().enumerate() {
        for (q, p) in line {
            let _ = writeln!(boundary, "{},{},{}", k + 1, fmt17(*q), fmt17(*p));
        }
    }
    write_text(&a.grid, &grid)?;
    write_text(&a.boundary, &boundary)?;
    eprintln!(
        "{} points, {} crossings, {} boundary polyline(s)",
        r.points.len(),
        r.crossings.len(),
        r.polylines.len()
    );
    Ok(true)
}

fn cmd_certify(expr: &ExprArgs, behaviour: Option<&Path>, tol: f64) -> CmdResult {
    let g = load_expression(&expr.expression, expr.scenario)?;
    let cert = conditions::dual_certificate_ineq2(&g)?;
    let mut ok = cert.is_feasible(tol) && (cert.objective - cert.analytic_bound).abs() <= tol;
    let line = |variant: &str, c: &conditions::DualCertificate| {
        let x: Vec<String> = c.x.iter().map(|v| fmt17(*v)).collect();
        JsonLine::new()
            .str("variant", variant)
            .num("min_eig", c.min_eig)
            .num("schur_min_eig", c.schur_min_eig)
            .num("objective", c.objective)
            .num("analytic_bound", c.analytic_bound)
            .bool("feasible", c.is_feasible(tol))
            .raw("x", &format!("[{}]", x.join(",")))
            .finish()
    };
    print!("{}", line("ineq2", &cert));
    if let Some(path) = behaviour {
        let b = read_behaviour(path)?;
        let centered = conditions::dual_certificate_ineq4(&b, &g)?;
        ok &= centered.is_feasible(tol) && (centered.objective - centered.analytic_bound).abs() <= tol;
        print!("{}", line("ineq4", &centered));
    }
    Ok(ok)
}

fn run(cli: &Cli) -> CmdResult {
    let tol = cli.tol;
    if !(tol >= 0.0) || !tol.is_finite() {
        return Err(Fail(format!("tolerance must be a nonnegative number, got {tol}")));
    }
    match &cli.command {
        Command::Validate { behaviour } => cmd_validate(behaviour, tol),
        Command::Generate(a) => cmd_generate(a),
        Command::Matrix { behaviour, kind, output } => cmd_matrix(behaviour, *kind, output.as_deref()),
        Command::Norms { input, csv, kind } => cmd_norms(input, *csv, *kind),
        Command::Check(a) => cmd_check(a, tol),
        Command::BellBound { expr, no_search } => cmd_bell_bound(expr, *no_search),
        Command::ExtremalBell { behaviour, kind, output } => cmd_extremal(behaviour, *kind, output),
        Command::ClosedForms { d, all } => cmd_closed_forms(*d, *all),
        Command::Slice(a) => cmd_slice(a, tol),
        Command::Certify { expr, behaviour } => cmd_certify(expr, behaviour.as_deref(), tol),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Fail(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
