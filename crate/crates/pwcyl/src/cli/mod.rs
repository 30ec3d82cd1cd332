//! Command-line front end: `classify`, `cycles`, `orbit`, `sweep` and
//! `audit-tables` over scenario config files.
//!
//! Exit codes: 0 success, 2 invalid scenario, 3 theory-not-applicable
//! (a named precondition of the analysis fails), 4 numeric failure.

mod report;
mod scenario;

pub use report::*;
pub use scenario::*;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::cycles::{self, CycleOutcome};
use crate::flow::SearchConfig;
use crate::model::{
    canonicalize, canonicalize_focus, classify_tangency, reduce_to_quasinormal, CanonicalParams,
    FocusCanonicalParams, ModelError, PiecewiseSystem, Side, TangencyReport,
};
use crate::numeric::lin_grid;
use crate::oracle::{self, OracleConfig, OracleError};
use crate::spectral::{analyze_pair, classify_piece_eps, StructureClass};

#[derive(Debug)]
pub enum CliError {
    Scenario(String),
    Theory(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Scenario(_) => 2,
            CliError::Theory(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Scenario(m) | CliError::Theory(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Scenario(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::NonFinite => CliError::Scenario(e.to_string()),
            ModelError::CanonicalizationResidual { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Theory(e.to_string()),
        }
    }
}

impl From<cycles::CycleError> for CliError {
    fn from(e: cycles::CycleError) -> Self {
        match e {
            cycles::CycleError::UndefinedHalfMap { .. } => CliError::Numeric(e.to_string()),
            cycles::CycleError::Model(m) => m.into(),
            _ => CliError::Theory(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::StartAtTangency { .. } | OracleError::StartNotSewing => {
                CliError::Theory(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "pwcyl",
    about = "Invariant cylinders, limit cycles and structure classification \
             for two-piece linear differential systems in R^3",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario config (key = value lines or a JSON object).
    #[arg(long)]
    config: PathBuf,
    /// Output format: json or csv (overrides the config).
    #[arg(long)]
    format: Option<String>,
    /// Lower end of the cylinder-search window.
    #[arg(long)]
    y_min: Option<f64>,
    /// Upper end of the cylinder-search window.
    #[arg(long)]
    y_max: Option<f64>,
    /// Absolute cap on half-return search times.
    #[arg(long)]
    t_max: Option<f64>,
    /// Seed recorded with (and used by) randomized campaigns.
    #[arg(long)]
    seed: Option<u64>,
    /// Write output to this path instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the system: spectral types, invariants, global structure.
    Classify(CommonArgs),
    /// Find invariant cylinders, limit cycles and periodic surfaces.
    Cycles(CommonArgs),
    /// Integrate one sewing orbit and export it as CSV.
    Orbit {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 0.0)]
        x0: f64,
        #[arg(long)]
        y0: f64,
        #[arg(long, default_value_t = 0.0)]
        z0: f64,
        #[arg(long)]
        t_end: f64,
    },
    /// Re-run classify/cycles over a range of one scenario parameter.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Scenario key to vary (must exist in the config).
        #[arg(long)]
        param: String,
        #[arg(long)]
        start: f64,
        #[arg(long)]
        stop: f64,
        #[arg(long)]
        steps: usize,
    },
    /// Randomized check of the invariant tables against cylinder counts.
    AuditTables {
        /// Output format: json (full report) or csv (summary lines).
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        y_min: Option<f64>,
        #[arg(long)]
        y_max: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Draws per table row.
        #[arg(long, default_value_t = 5)]
        draws: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Entry point used by the binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through this path too
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if is_help { 0 } else { 2 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Classify(common) => {
            reject_explicit_csv(&common, "classify")?;
            let (scenario, _) = load_scenario(&common)?;
            let derived = derive(&scenario)?;
            let report = classify_report(&derived, &scenario);
            write_out(&common.out, report::to_json(&report))
        }
        Command::Cycles(common) => {
            reject_explicit_csv(&common, "cycles")?;
            let (scenario, _) = load_scenario(&common)?;
            let derived = derive(&scenario)?;
            let report = cycles_report(&derived, &scenario)?;
            write_out(&common.out, report::to_json(&report))
        }
        Command::Orbit {
            common,
            x0,
            y0,
            z0,
            t_end,
        } => {
            if common.format.as_deref() == Some("json") {
                return Err(CliError::Scenario(
                    "orbit traces are CSV only; use --format csv or omit --format".into(),
                ));
            }
            let (scenario, _) = load_scenario(&common)?;
            let sys = orbit_system(&scenario)?;
            let cfg = OracleConfig::default();
            let trace = oracle::integrate(&sys, &[x0, y0, z0], t_end, &cfg)?;
            write_out(&common.out, report::trace_to_csv(&trace))
        }
        Command::Sweep {
            common,
            param,
            start,
            stop,
            steps,
        } => {
            let (scenario, text) = load_scenario(&common)?;
            if steps < 1 {
                return Err(CliError::Scenario("steps must be at least 1".into()));
            }
            let values = if steps == 1 {
                vec![start]
            } else {
                lin_grid(start, stop, steps)
            };
            let mut rows = Vec::with_capacity(values.len());
            for &value in &values {
                let sc = apply_overrides(override_key(&text, &param, value)?, &common);
                let derived = derive(&sc)?;
                rows.push(sweep_row(&derived, &sc, value)?);
            }
            let report = SweepReport {
                parameter: param,
                seed: common.seed.unwrap_or(scenario.options.seed),
                rows,
            };
            match effective_format(&scenario, &common)? {
                OutputFormat::Json => write_out(&common.out, report::to_json(&report)),
                OutputFormat::Csv => write_out(&common.out, report::sweep_to_csv(&report)),
            }
        }
        Command::AuditTables {
            format,
            y_min,
            y_max,
            seed,
            draws,
            out,
        } => {
            let range = (
                y_min.unwrap_or(crate::tol::DEFAULT_Y_MIN),
                y_max.unwrap_or(crate::tol::DEFAULT_Y_MAX),
            );
            let report = cycles::audit_tables(
                seed,
                draws,
                range,
                crate::tol::DEFAULT_GRID_NODES,
                SearchConfig::default(),
            );
            match format.as_deref() {
                None | Some("csv") => {
                    let mut text = report.summary_lines().join("\n");
                    text.push('\n');
                    text.push_str(&format!("total mismatches: {}\n", report.total_mismatches()));
                    write_out(&out, text)
                }
                Some("json") => write_out(&out, report::to_json(&report)),
                Some(other) => Err(CliError::Scenario(format!(
                    "unknown output format `{other}`"
                ))),
            }
        }
    }
}

fn load_scenario(common: &CommonArgs) -> Result<(Scenario, String), CliError> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| CliError::Scenario(format!("cannot read {:?}: {e}", common.config)))?;
    let scenario = apply_overrides(parse_scenario(&text)?, common);
    Ok((scenario, text))
}

fn apply_overrides(mut scenario: Scenario, common: &CommonArgs) -> Scenario {
    if let Some(v) = common.y_min {
        scenario.options.y_min = v;
    }
    if let Some(v) = common.y_max {
        scenario.options.y_max = v;
    }
    if let Some(v) = common.t_max {
        scenario.options.t_max = Some(v);
    }
    if let Some(v) = common.seed {
        scenario.options.seed = v;
    }
    scenario
}

fn effective_format(scenario: &Scenario, common: &CommonArgs) -> Result<OutputFormat, CliError> {
    match common.format.as_deref() {
        None => Ok(scenario.format),
        Some("json") => Ok(OutputFormat::Json),
        Some("csv") => Ok(OutputFormat::Csv),
        Some(other) => Err(CliError::Scenario(format!(
            "unknown output format `{other}`"
        ))),
    }
}

fn reject_explicit_csv(common: &CommonArgs, verb: &str) -> Result<(), CliError> {
    match common.format.as_deref() {
        Some("csv") => Err(CliError::Scenario(format!(
            "{verb} emits a structured JSON report; csv applies to orbit and sweep"
        ))),
        Some("json") | None => Ok(()),
        Some(other) => Err(CliError::Scenario(format!(
            "unknown output format `{other}`"
        ))),
    }
}

fn write_out(out: &Option<PathBuf>, text: String) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Numeric(format!("cannot write output: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// scenario -> analysis forms
// ---------------------------------------------------------------------------

/// A scenario normalized to the analysis forms.
#[derive(Debug)]
pub struct Derived {
    pub mode: Mode,
    pub tangency: Option<Vec<TangencyReport>>,
    pub canonical: Option<CanonicalParams>,
    pub focus: Option<FocusCanonicalParams>,
}

/// Reduces whatever form the scenario supplied to the canonical (and, for
/// rotating pairs, the focus) form, validating the fold hypotheses on the
/// way.
pub fn derive(scenario: &Scenario) -> Result<Derived, CliError> {
    let eps = scenario.options.eps_disc;
    match &scenario.params {
        ModeParams::Canonical(cp) => {
            if !cp.is_finite() {
                return Err(CliError::Scenario("non-finite canonical parameters".into()));
            }
            let focus = if analyze_pair(cp, eps).structure == StructureClass::FocusFocus {
                Some(canonicalize_focus(&cp.to_quasinormal())?.params)
            } else {
                None
            };
            Ok(Derived {
                mode: Mode::Canonical,
                tangency: None,
                canonical: Some(*cp),
                focus,
            })
        }
        ModeParams::Focus(fp) => {
            fp.validate()?;
            Ok(Derived {
                mode: Mode::Focus,
                tangency: None,
                canonical: None,
                focus: Some(*fp),
            })
        }
        ModeParams::Quasinormal(q) => {
            let tangency = vec![
                classify_tangency(q, Side::Upper),
                classify_tangency(q, Side::Lower),
            ];
            let canonical = canonicalize(q)?.params;
            let focus = if analyze_pair(&canonical, eps).structure == StructureClass::FocusFocus {
                Some(canonicalize_focus(q)?.params)
            } else {
                None
            };
            Ok(Derived {
                mode: Mode::Quasinormal,
                tangency: Some(tangency),
                canonical: Some(canonical),
                focus,
            })
        }
        ModeParams::Raw(sys) => {
            let reduction = reduce_to_quasinormal(sys)?;
            let q = reduction.q;
            let tangency = vec![
                classify_tangency(&q, Side::Upper),
                classify_tangency(&q, Side::Lower),
            ];
            let canonical = canonicalize(&q)?.params;
            let focus = if analyze_pair(&canonical, eps).structure == StructureClass::FocusFocus {
                Some(canonicalize_focus(&q)?.params)
            } else {
                None
            };
            Ok(Derived {
                mode: Mode::Raw,
                tangency: Some(tangency),
                canonical: Some(canonical),
                focus,
            })
        }
    }
}

/// The system in the user's own coordinates, for orbit export.
fn orbit_system(scenario: &Scenario) -> Result<PiecewiseSystem, CliError> {
    Ok(match &scenario.params {
        ModeParams::Canonical(cp) => cp.to_piecewise(),
        ModeParams::Focus(fp) => {
            fp.validate()?;
            fp.to_piecewise()
        }
        ModeParams::Quasinormal(q) => q.to_piecewise(),
        ModeParams::Raw(sys) => *sys,
    })
}

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

/// Per-piece spectra, pair invariants and the structure verdict.
pub fn classify_report(derived: &Derived, scenario: &Scenario) -> ClassifyReport {
    let eps = scenario.options.eps_disc;
    if let Some(cp) = &derived.canonical {
        let summary = analyze_pair(cp, eps);
        let note = match summary.structure {
            StructureClass::FocusFocus => Some(
                "both pieces rotate: at most one invariant cylinder (dedicated path)".to_string(),
            ),
            _ => None,
        };
        ClassifyReport {
            mode: derived.mode.name(),
            tangency: derived.tangency.clone(),
            canonical: Some(*cp),
            focus_form: derived.focus,
            upper: summary.upper,
            lower: summary.lower,
            invariants: summary
                .invariants
                .as_ref()
                .map(InvariantsReport::from_invariants),
            structure: summary.structure.label().to_string(),
            rule: summary.rule,
            note,
        }
    } else {
        let fp = derived.focus.expect("focus mode carries focus params");
        let upper = classify_piece_eps(fp.a_plus, fp.t2, -fp.d2, eps);
        let lower = classify_piece_eps(fp.a_minus, fp.t1, -fp.d1, eps);
        ClassifyReport {
            mode: derived.mode.name(),
            tangency: None,
            canonical: None,
            focus_form: Some(fp),
            upper,
            lower,
            invariants: None,
            structure: StructureClass::FocusFocus.label().to_string(),
            rule: "both pieces rotate with nonzero contraction; at most one invariant cylinder"
                .into(),
            note: Some("at most one invariant cylinder".into()),
        }
    }
}

fn closure_residual(
    sys: &PiecewiseSystem,
    x0: f64,
    y0: f64,
    period: f64,
    t_max: Option<f64>,
) -> f64 {
    let budget = t_max.unwrap_or(10.0 * (period + 1.0));
    oracle::numeric_return_map(&sys.upper, &sys.lower, x0, y0, budget, &OracleConfig::default())
        .ok()
        .flatten()
        .map(|(xr, yr)| ((xr - x0).powi(2) + (yr - y0).powi(2)).sqrt())
        .unwrap_or(f64::NAN)
}

/// Cylinders, cycles, surfaces and their independent verification.
pub fn cycles_report(derived: &Derived, scenario: &Scenario) -> Result<CyclesReport, CliError> {
    let classify = classify_report(derived, scenario);
    let opts = &scenario.options;
    let cfg = SearchConfig {
        t_max: opts.t_max,
        ..SearchConfig::default()
    };
    let y_range = (opts.y_min, opts.y_max);

    // dedicated path when both pieces rotate
    if let Some(fp) = &derived.focus {
        let analysis = cycles::focus_focus_analyze(fp, y_range, opts.grid_nodes, cfg)?;
        let sys = fp.to_piecewise();
        let cycles_out: Vec<CycleReport> = analysis
            .cycle
            .iter()
            .filter_map(|outcome| match outcome {
                CycleOutcome::Cycle(c) => Some(CycleReport {
                    x0: c.x0,
                    x1: c.x1,
                    period: c.period,
                    multiplier: c.multiplier,
                    closure_residual: closure_residual(
                        &sys,
                        c.x0,
                        c.cylinder.y0,
                        c.period,
                        opts.t_max,
                    ),
                }),
                _ => None,
            })
            .collect();
        let all_closed = analysis
            .cycle
            .as_ref()
            .map(|c| matches!(c, CycleOutcome::AllClosed));
        return Ok(CyclesReport {
            classify,
            cylinders: analysis.cylinders.clone(),
            cycles: cycles_out,
            all_closed,
            continuum: None,
            surface: None,
            focus: Some(FocusReport {
                cylinders: analysis.cylinders,
                cycle: analysis.cycle,
                violations: analysis.violations,
            }),
            undefined_nodes: 0,
            boundary_cases: Vec::new(),
            expectation_mismatch: None,
        });
    }

    let cp = derived
        .canonical
        .expect("non-focus scenarios carry canonical params");
    let summary = analyze_pair(&cp, opts.eps_disc);
    let search = cycles::find_cylinders(
        &cp,
        y_range,
        Some(&summary.structure),
        opts.grid_nodes,
        cfg,
    );
    let sys = cp.to_piecewise();

    let mut cycles_out = Vec::new();
    let mut all_closed = None;
    for cyl in &search.cylinders {
        match cycles::find_limit_cycle(&cp, cyl, cfg) {
            CycleOutcome::Cycle(c) => cycles_out.push(CycleReport {
                x0: c.x0,
                x1: c.x1,
                period: c.period,
                multiplier: c.multiplier,
                closure_residual: closure_residual(&sys, c.x0, cyl.y0, c.period, opts.t_max),
            }),
            CycleOutcome::AllClosed => all_closed = Some(true),
            CycleOutcome::NoneInCylinder => all_closed = all_closed.or(Some(false)),
        }
    }

    let continuum = search.continuum.as_ref().map(|w| ContinuumReport {
        nodes: w.y_grid.len(),
        y_min: opts.y_min,
        y_max: opts.y_max,
        max_abs_q: w.max_abs_q,
        perturbed_max_q: w.perturbed_max_q,
        breaks_under_perturbation: w.breaks_under_perturbation,
    });

    // a continuum with admissible drift signs carries a surface of cycles
    let surface = if search.continuum.is_some()
        && (cp.a_plus != 0.0 || cp.a_minus != 0.0)
        && cp.a_plus * cp.a_minus >= 0.0
    {
        let grid = lin_grid(opts.y_min.max(1e-2), opts.y_max, opts.surface_nodes);
        Some(cycles::periodic_surface(&cp, &grid, cfg)?)
    } else {
        None
    };

    Ok(CyclesReport {
        classify,
        cylinders: search.cylinders,
        cycles: cycles_out,
        all_closed,
        continuum,
        surface,
        focus: None,
        undefined_nodes: search.undefined_nodes,
        boundary_cases: search.boundary_cases,
        expectation_mismatch: search.expectation_mismatch,
    })
}

fn sweep_row(derived: &Derived, scenario: &Scenario, value: f64) -> Result<SweepRow, CliError> {
    let report = cycles_report(derived, scenario)?;
    let inv = report.classify.invariants.as_ref();
    let first_cycle = report.cycles.first();
    Ok(SweepRow {
        value,
        type_plus: format!("{}", report.classify.upper.kind),
        type_minus: format!("{}", report.classify.lower.kind),
        structure: report.classify.structure.clone(),
        kappa: inv.map(|i| i.kappa),
        lambda: inv.map(|i| i.lambda),
        alpha: inv.map(|i| i.alpha),
        beta: inv.map(|i| i.beta),
        n_cylinders: report.cylinders.len(),
        continuum: report.continuum.is_some(),
        y0: report.cylinders.first().map(|c| c.y0),
        period: first_cycle.map(|c| c.period),
        multiplier: first_cycle.map(|c| c.multiplier),
    })
}
