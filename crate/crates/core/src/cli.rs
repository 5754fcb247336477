//! Scenario files, run orchestration, export, and the bundled `check` suite.
//!
//! A scenario is one JSON document:
//!
//! ```json
//! {
//!   "name": "square_density",
//!   "n": 4,
//!   "edges": [[1, 2], [2, 3], [3, 4], [4, 1]],
//!   "kind": "density",
//!   "xi": [[1, 1], [-1, 1], [-1, -1], [1, -1]],
//!   "leaders": [1, 0, 0, 0],
//!   "gamma_ref": {"type": "constant", "value": 2.0},
//!   "theta_ref": {"type": "constant", "value": 0.0},
//!   "alpha": 1.0,
//!   "t_final": 100.0,
//!   "tolerance": 1e-4
//! }
//! ```
//!
//! Omitted fields default to: `x0 = xi`, `gamma0 = 1`, `theta0 = 0`,
//! `dt = 0.01`, `t_final = 50`, `method = "rk4"`, `stride = 1`, `seed = 0`,
//! `alpha = 1`, `gamma_ref = 1`, `theta_ref = 0`. `x0` may also be the string
//! `"random"`, which draws positions uniformly from [−5, 5]² with `seed`.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    alpha_sweep, consensus_residual, formation_residual, moving_formation_residual, AnalysisError,
    ConvergenceReport, FormationMode, Series, SweepRow,
};
use crate::controllers::{ControlError, ControllerKind, FormationSpec, MultiplexState};
use crate::dynamics::{simulate, DynamicsError, Method, SimConfig, Trajectory};
use crate::geometry::Vec2;
use crate::graph::{build_graph, Graph};
use crate::signal::ParameterSignal;

/// Environment variable that overrides the default output directory.
pub const OUT_DIR_ENV: &str = "FORMSIM_OUT";
pub const DEFAULT_OUT_DIR: &str = "formsim-out";
pub const DEFAULT_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_ALPHAS: [f64; 3] = [1.0, 5.0, 10.0];
/// Half-width of the box random initial positions are drawn from.
pub const RANDOM_SPREAD: f64 = 5.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{0}")]
    Usage(String),
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        CliError::Analysis(e.into())
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Process exit status: disjoint and exhaustive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    /// Converged, or every check passed.
    Success = 0,
    /// Usage or runtime error.
    Error = 1,
    /// Ran to completion without converging.
    NotConverged = 2,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum InitialPositions {
    Points(Vec<Vec2>),
    Named(String),
}

/// On-disk form of a scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    n: usize,
    edges: Vec<(usize, usize)>,
    kind: ControllerKind,
    #[serde(default)]
    xi: Option<Vec<Vec2>>,
    #[serde(default)]
    leaders: Option<Vec<u8>>,
    #[serde(default)]
    gamma_ref: Option<ParameterSignal>,
    #[serde(default)]
    theta_ref: Option<ParameterSignal>,
    #[serde(default)]
    alpha: Option<f64>,
    #[serde(default)]
    x0: Option<InitialPositions>,
    #[serde(default)]
    gamma0: Option<Vec<f64>>,
    #[serde(default)]
    theta0: Option<Vec<f64>>,
    #[serde(default)]
    dt: Option<f64>,
    #[serde(default)]
    t_final: Option<f64>,
    #[serde(default)]
    method: Option<Method>,
    #[serde(default)]
    stride: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alphas: Option<Vec<f64>>,
}

/// A fully validated, reproducible run description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: Option<String>,
    pub graph: Graph,
    pub kind: ControllerKind,
    pub spec: FormationSpec,
    pub initial: MultiplexState,
    pub config: SimConfig,
    pub seed: u64,
    /// Residual tolerance used for the convergence verdict.
    pub tolerance: f64,
    /// Gains for `sweep`/`check` on time-varying references.
    pub alphas: Option<Vec<f64>>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn expect_len<T>(what: &str, v: &[T], n: usize) -> Result<(), CliError> {
    if v.len() == n {
        Ok(())
    } else {
        Err(invalid(format!(
            "{what} has {} entries, expected n = {n}",
            v.len()
        )))
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let doc: ScenarioDoc = serde_json::from_str(text).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Scenario::from_doc(doc)
}

impl Scenario {
    fn from_doc(doc: ScenarioDoc) -> Result<Scenario, CliError> {
        let n = doc.n;
        if n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        let built = build_graph(n, &doc.edges).map_err(|e| invalid(e.to_string()))?;
        let graph = built.graph;
        if doc.kind.requires_connected() && !graph.is_connected() {
            return Err(invalid("graph not connected"));
        }

        let xi = match doc.xi {
            Some(xi) => {
                expect_len("xi", &xi, n)?;
                xi
            }
            None if doc.kind == ControllerKind::Consensus => vec![Vec2::ZERO; n],
            None => {
                return Err(invalid(format!(
                    "field `xi` is required for kind {}",
                    doc.kind
                )))
            }
        };
        let leaders = match doc.leaders {
            Some(flags) => {
                expect_len("leaders", &flags, n)?;
                if let Some(bad) = flags.iter().find(|&&k| k > 1) {
                    return Err(invalid(format!("leader flags must be 0 or 1, got {bad}")));
                }
                flags.into_iter().map(|k| k == 1).collect()
            }
            None if doc.kind.drives_gamma() => {
                return Err(invalid(format!(
                    "field `leaders` is required for kind {}",
                    doc.kind
                )))
            }
            // inert for laws without a pinned layer
            None => (0..n).map(|i| i == 0).collect(),
        };
        let gamma_ref = doc
            .gamma_ref
            .unwrap_or_else(|| ParameterSignal::constant(1.0));
        let theta_ref = doc
            .theta_ref
            .unwrap_or_else(|| ParameterSignal::constant(0.0));

        let config = SimConfig {
            dt: doc.dt.unwrap_or(0.01),
            t_final: doc.t_final.unwrap_or(50.0),
            method: doc.method.unwrap_or(Method::Rk4),
            record_stride: doc.stride.unwrap_or(1),
        };
        config.validate().map_err(|e| invalid(e.to_string()))?;
        for (which, sig) in [("gamma_ref", &gamma_ref), ("theta_ref", &theta_ref)] {
            sig.validate(config.t_final, config.dt)
                .map_err(|e| invalid(format!("{which}: {e}")))?;
            for at in sig.discontinuities() {
                config
                    .check_aligned(at)
                    .map_err(|e| invalid(format!("{which}: {e}")))?;
            }
        }

        let spec = FormationSpec::new(
            xi.clone(),
            leaders,
            gamma_ref,
            theta_ref,
            doc.alpha.unwrap_or(1.0),
        )
        .map_err(|e| match e {
            ControlError::NoLeader => invalid("no leader agent"),
            other => invalid(other.to_string()),
        })?;

        let seed = doc.seed.unwrap_or(0);
        let x0 = match doc.x0 {
            None => xi,
            Some(InitialPositions::Points(points)) => {
                expect_len("x0", &points, n)?;
                points
            }
            Some(InitialPositions::Named(s)) if s == "random" => random_positions(n, seed),
            Some(InitialPositions::Named(s)) => {
                return Err(invalid(format!(
                    "x0 must be a list of points or \"random\", got \"{s}\""
                )))
            }
        };
        let gamma0 = doc.gamma0.unwrap_or_else(|| vec![1.0; n]);
        let theta0 = doc.theta0.unwrap_or_else(|| vec![0.0; n]);
        expect_len("gamma0", &gamma0, n)?;
        expect_len("theta0", &theta0, n)?;
        let initial =
            MultiplexState::new(x0, gamma0, theta0).map_err(|e| invalid(e.to_string()))?;
        if !initial.is_finite() {
            return Err(invalid("initial state has non-finite entries"));
        }

        let tolerance = doc.tolerance.unwrap_or(DEFAULT_TOLERANCE);
        if tolerance.is_nan() || tolerance <= 0.0 {
            return Err(invalid("tolerance must be positive"));
        }
        if let Some(alphas) = &doc.alphas {
            if alphas.is_empty() || alphas.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
                return Err(invalid(
                    "alphas must be a nonempty list of positive numbers",
                ));
            }
        }

        Ok(Scenario {
            name: doc.name,
            graph,
            kind: doc.kind,
            spec,
            initial,
            config,
            seed,
            tolerance,
            alphas: doc.alphas,
        })
    }

    fn to_doc(&self) -> ScenarioDoc {
        ScenarioDoc {
            name: self.name.clone(),
            n: self.graph.node_count(),
            edges: self.graph.edges(),
            kind: self.kind,
            xi: Some(self.spec.xi().to_vec()),
            leaders: Some(self.spec.leaders().iter().map(|&k| u8::from(k)).collect()),
            gamma_ref: Some(self.spec.gamma_ref().clone()),
            theta_ref: Some(self.spec.theta_ref().clone()),
            alpha: Some(self.spec.alpha()),
            x0: Some(InitialPositions::Points(self.initial.x.clone())),
            gamma0: Some(self.initial.gamma.clone()),
            theta0: Some(self.initial.theta.clone()),
            dt: Some(self.config.dt),
            t_final: Some(self.config.t_final),
            method: Some(self.config.method),
            stride: Some(self.config.record_stride),
            seed: Some(self.seed),
            tolerance: Some(self.tolerance),
            alphas: self.alphas.clone(),
        }
    }

    /// Serializes with every default made explicit.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("scenario serializes")
    }

    pub fn display_name(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("{}_{}", self.kind, self.graph.node_count()))
    }

    /// True when every reference the controller actually uses is constant.
    pub fn has_constant_references(&self) -> bool {
        (!self.kind.drives_gamma() || self.spec.gamma_ref().is_constant())
            && (!self.kind.drives_theta() || self.spec.theta_ref().is_constant())
    }

    pub fn simulate(&self) -> Result<Trajectory, CliError> {
        Ok(simulate(
            &self.graph,
            &self.spec,
            self.kind,
            &self.initial,
            &self.config,
        )?)
    }
}

fn random_positions(n: usize, seed: u64) -> Vec<Vec2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            Vec2::new(
                rng.random_range(-RANDOM_SPREAD..=RANDOM_SPREAD),
                rng.random_range(-RANDOM_SPREAD..=RANDOM_SPREAD),
            )
        })
        .collect()
}

/// Residual used for the convergence verdict of a run, with its name.
pub fn primary_residual(
    scenario: &Scenario,
    traj: &Trajectory,
) -> Result<(&'static str, Series), CliError> {
    let out = match FormationMode::for_kind(scenario.kind) {
        None => ("consensus", consensus_residual(traj)?),
        Some(FormationMode::Invariant) => (
            "invariant_formation",
            formation_residual(traj, &scenario.spec, FormationMode::Invariant)?,
        ),
        Some(mode) if scenario.has_constant_references() => {
            ("formation", formation_residual(traj, &scenario.spec, mode)?)
        }
        Some(_) => (
            "moving_formation",
            moving_formation_residual(traj, &scenario.spec)?,
        ),
    };
    Ok(out)
}

/// Report written next to the trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub kind: ControllerKind,
    pub metric: &'static str,
    pub graph_fingerprint: String,
    pub spec_fingerprint: String,
    pub sample_times: Vec<f64>,
    #[serde(flatten)]
    pub convergence: ConvergenceReport,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub report: RunReport,
}

impl RunOutcome {
    pub fn status(&self) -> ExitStatus {
        if self.report.convergence.converged {
            ExitStatus::Success
        } else {
            ExitStatus::NotConverged
        }
    }
}

pub fn run_scenario(scenario: &Scenario) -> Result<RunOutcome, CliError> {
    let trajectory = scenario.simulate()?;
    let (metric, series) = primary_residual(scenario, &trajectory)?;
    let convergence = ConvergenceReport::from_series(&series, scenario.tolerance)?;
    let report = RunReport {
        scenario: scenario.display_name(),
        kind: scenario.kind,
        metric,
        graph_fingerprint: trajectory.meta.graph_fingerprint.clone(),
        spec_fingerprint: trajectory.meta.spec_fingerprint.clone(),
        sample_times: series.times,
        convergence,
    };
    Ok(RunOutcome { trajectory, report })
}

fn fmt_float(v: f64) -> String {
    // 17 significant digits round-trip every f64
    format!("{v:.16e}")
}

/// Trajectory as CSV: `t, x1_1, x1_2, …, xn_2, gamma_1…gamma_n, theta_1…theta_n`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.states.first().map_or(0, MultiplexState::n);
    let mut header = vec!["t".to_string()];
    for i in 1..=n {
        header.push(format!("x{i}_1"));
        header.push(format!("x{i}_2"));
    }
    header.extend((1..=n).map(|i| format!("gamma_{i}")));
    header.extend((1..=n).map(|i| format!("theta_{i}")));

    let mut out = header.join(",");
    out.push('\n');
    for (t, state) in traj.samples() {
        out.push_str(&fmt_float(t));
        for v in state.values() {
            out.push(',');
            out.push_str(&fmt_float(v));
        }
        out.push('\n');
    }
    out
}

/// Writes via a temporary sibling file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let file_name = path
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = path.with_file_name(format!(".{file_name}.tmp"));
    fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// `--out` wins, then `FORMSIM_OUT`, then [`DEFAULT_OUT_DIR`].
pub fn resolve_out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// Writes `trajectory.csv` and `report.json` into `dir`; returns their paths.
pub fn write_outputs(dir: &Path, outcome: &RunOutcome) -> Result<(PathBuf, PathBuf), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let traj_path = dir.join("trajectory.csv");
    let report_path = dir.join("report.json");
    write_atomic(&traj_path, trajectory_csv(&outcome.trajectory).as_bytes())?;
    let mut report = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
    report.push('\n');
    write_atomic(&report_path, report.as_bytes())?;
    Ok((traj_path, report_path))
}

pub fn sweep(scenario: &Scenario, alphas: &[f64]) -> Result<Vec<SweepRow>, CliError> {
    Ok(alpha_sweep(
        &scenario.graph,
        &scenario.spec,
        scenario.kind,
        &scenario.initial,
        &scenario.config,
        alphas,
    )?)
}

pub fn sweep_table(rows: &[SweepRow]) -> String {
    let with_theta = rows.iter().any(|r| r.theta_error.is_some());
    let mut out = String::from(if with_theta {
        "alpha,gamma_tail_error,theta_tail_error\n"
    } else {
        "alpha,gamma_tail_error\n"
    });
    for r in rows {
        let _ = write!(out, "{},{}", r.alpha, fmt_float(r.gamma_error));
        if let Some(e) = r.theta_error {
            let _ = write!(out, ",{}", fmt_float(e));
        }
        out.push('\n');
    }
    out
}

pub fn spectrum_text(g: &Graph) -> String {
    g.laplacian_spectrum()
        .iter()
        .enumerate()
        .map(|(i, l)| format!("lambda_{} = {}\n", i + 1, fmt_float(*l)))
        .collect()
}

/// Outcome of one bundled claim.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for ClaimResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag}  {:<28} {}", self.name, self.detail)
    }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Evaluates the claim a scenario stands for.
///
/// Constant references: the run must converge within the scenario tolerance.
/// Time-varying references: tail tracking errors must strictly decrease over
/// the scenario's gains (default 1, 5, 10) for every live layer.
pub fn evaluate_claim(scenario: &Scenario) -> ClaimResult {
    let name = scenario.display_name();
    let result = if scenario.has_constant_references() {
        run_scenario(scenario).map(|o| {
            let c = &o.report.convergence;
            let detail = format!(
                "{} residual {:.3e} (tol {:.1e}, settled at {})",
                o.report.metric,
                c.final_residual,
                c.tolerance,
                c.settle_time
                    .map_or_else(|| "never".to_string(), |t| format!("t = {t:.2}"))
            );
            (c.converged, detail)
        })
    } else {
        let alphas = scenario
            .alphas
            .clone()
            .unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());
        sweep(scenario, &alphas).map(|rows| {
            let gamma: Vec<f64> = rows.iter().map(|r| r.gamma_error).collect();
            let theta: Option<Vec<f64>> = rows.iter().map(|r| r.theta_error).collect();
            let mut ok = strictly_decreasing(&gamma);
            let mut detail = format!("alphas {alphas:?}: gamma tail errors {}", fmt_list(&gamma));
            if let Some(theta) = theta {
                ok &= strictly_decreasing(&theta);
                let _ = write!(detail, ", theta tail errors {}", fmt_list(&theta));
            }
            (ok, detail)
        })
    };
    match result {
        Ok((passed, detail)) => ClaimResult {
            name,
            passed,
            detail,
        },
        Err(e) => ClaimResult {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn fmt_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Scenario files shipped with the crate, as (file name, contents).
pub const BUNDLED_SCENARIOS: &[(&str, &str)] = &[
    (
        "consensus_two_node.json",
        include_str!("../scenarios/consensus_two_node.json"),
    ),
    (
        "consensus_p3.json",
        include_str!("../scenarios/consensus_p3.json"),
    ),
    (
        "invariant_square.json",
        include_str!("../scenarios/invariant_square.json"),
    ),
    (
        "density_square.json",
        include_str!("../scenarios/density_square.json"),
    ),
    (
        "density_orientation_square.json",
        include_str!("../scenarios/density_orientation_square.json"),
    ),
    (
        "sweep_density_sinusoid.json",
        include_str!("../scenarios/sweep_density_sinusoid.json"),
    ),
    (
        "sweep_density_orientation_sinusoid.json",
        include_str!("../scenarios/sweep_density_orientation_sinusoid.json"),
    ),
];

/// Reads every `*.json` in `dir`, sorted by file name.
pub fn scenario_sources(dir: &Path) -> Result<Vec<(String, String)>, CliError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = fs::read_to_string(&p).map_err(io_err(&p))?;
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            Ok((name, text))
        })
        .collect()
}

/// Runs every claim. An empty source list is itself a failure.
pub fn check(sources: &[(String, String)]) -> Vec<ClaimResult> {
    if sources.is_empty() {
        return vec![ClaimResult {
            name: "scenarios".into(),
            passed: false,
            detail: "no scenario files found".into(),
        }];
    }
    sources
        .iter()
        .map(|(file, text)| match parse_scenario(text) {
            Ok(s) => evaluate_claim(&s),
            Err(e) => ClaimResult {
                name: file.clone(),
                passed: false,
                detail: e.to_string(),
            },
        })
        .collect()
}

pub fn bundled_sources() -> Vec<(String, String)> {
    BUNDLED_SCENARIOS
        .iter()
        .map(|(f, t)| (f.to_string(), t.to_string()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "n": 2,
        "edges": [[1, 2]],
        "kind": "density",
        "xi": [[0, 0], [1, 0]],
        "leaders": [1, 0]
    }"#;

    #[test]
    fn minimal_scenario_gets_defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.config, SimConfig::default());
        assert_eq!(s.initial.x, s.spec.xi());
        assert_eq!(s.initial.gamma, vec![1.0, 1.0]);
        assert_eq!(s.initial.theta, vec![0.0, 0.0]);
        assert_eq!(s.spec.alpha(), 1.0);
        assert_eq!(s.seed, 0);
        assert_eq!(s.tolerance, DEFAULT_TOLERANCE);
    }

    #[test]
    fn rejects_missing_leader() {
        let text = MINIMAL.replace("\"leaders\": [1, 0]", "\"leaders\": [0, 0]");
        let err = parse_scenario(&text).unwrap_err();
        assert_eq!(err.to_string(), "validation error: no leader agent");
    }

    #[test]
    fn rejects_disconnected_multiplex_graph() {
        let text = MINIMAL.replace("[[1, 2]]", "[]");
        let err = parse_scenario(&text).unwrap_err();
        assert_eq!(err.to_string(), "validation error: graph not connected");
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse_scenario("{\n  \"n\": 2,\n  \"edges\": oops\n}").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 3, .. }), "{err}");
        let err = parse_scenario(r#"{"n": 2, "edges": [], "kind": "consensus", "bogus": 1}"#)
            .unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err = parse_scenario(r#"{"edges": [], "kind": "consensus"}"#).unwrap_err();
        assert!(err.to_string().contains("missing field `n`"), "{err}");
    }

    #[test]
    fn other_validation_failures() {
        for (from, to, needle) in [
            ("\"leaders\": [1, 0]", "\"leaders\": [1, 0, 0]", "leaders"),
            ("\"leaders\": [1, 0]", "\"leaders\": [2, 0]", "0 or 1"),
            ("[[1, 2]]", "[[1, 3]]", "outside"),
            ("[[1, 2]]", "[[1, 1]]", "self-loop"),
            ("\"density\"", "\"bogus\"", "unknown variant"),
        ] {
            let err = parse_scenario(&MINIMAL.replace(from, to)).unwrap_err();
            assert!(err.to_string().contains(needle), "{needle}: {err}");
        }
        let stepped = MINIMAL.replace(
            "\"leaders\": [1, 0]",
            "\"leaders\": [1, 0], \"gamma_ref\": {\"type\": \"step\", \"before\": 1, \"after\": 2, \"at\": 0.005}",
        );
        assert!(parse_scenario(&stepped)
            .unwrap_err()
            .to_string()
            .contains("multiple of dt"));
        let bounded = MINIMAL.replace(
            "\"leaders\": [1, 0]",
            "\"leaders\": [1, 0], \"gamma_ref\": {\"type\": \"sinusoid\", \"offset\": 1, \"amplitude\": 0.2, \"frequency\": 0.5, \"bound\": 1.1}",
        );
        assert!(parse_scenario(&bounded)
            .unwrap_err()
            .to_string()
            .contains("bound"));
    }

    #[test]
    fn consensus_needs_no_shape_or_leaders() {
        let s = parse_scenario(
            r#"{"n": 3, "edges": [[1, 2], [2, 3]], "kind": "consensus", "x0": "random", "seed": 9}"#,
        )
        .unwrap();
        assert_eq!(s.initial.x, random_positions(3, 9));
        assert!(s
            .initial
            .x
            .iter()
            .all(|p| p.x.abs() <= 5.0 && p.y.abs() <= 5.0));
        assert_ne!(random_positions(3, 9), random_positions(3, 10));
    }

    #[test]
    fn round_trip_is_exact() {
        let s = parse_scenario(
            r#"{"n": 3, "edges": [[1, 2], [2, 3], [3, 1]], "kind": "density_orientation",
                "xi": [[0.1, 0.2], [0.3, -0.7], [1e-3, 2.5]], "leaders": [0, 1, 0],
                "gamma_ref": {"type": "sinusoid", "offset": 1, "amplitude": 0.2, "frequency": 0.5},
                "theta_ref": {"type": "ramp", "start_value": 0, "slope": 0.1, "start": 1, "end": 5},
                "x0": "random", "seed": 42, "alphas": [1, 2.5]}"#,
        )
        .unwrap();
        let again = parse_scenario(&s.to_json()).unwrap();
        assert_eq!(again, s);
        assert_eq!(again.to_json(), s.to_json());
    }

    #[test]
    fn run_converged_and_truncated() {
        let s = parse_scenario(MINIMAL).unwrap();
        let out = run_scenario(&s).unwrap();
        assert_eq!(out.status(), ExitStatus::Success);
        assert!(out.report.convergence.converged);

        // γ(0) = 1 sits on the reference already; move it off to make the run short of converging
        let short = MINIMAL.replace(
            "\"leaders\": [1, 0]",
            "\"leaders\": [1, 0], \"gamma_ref\": {\"type\": \"constant\", \"value\": 2}, \"t_final\": 0.1",
        );
        let out = run_scenario(&parse_scenario(&short).unwrap()).unwrap();
        assert_eq!(out.status(), ExitStatus::NotConverged);
    }

    #[test]
    fn csv_layout_and_precision() {
        let s = parse_scenario(&MINIMAL.replace(
            "\"leaders\": [1, 0]",
            "\"leaders\": [1, 0], \"t_final\": 0.02",
        ))
        .unwrap();
        let out = run_scenario(&s).unwrap();
        let csv = trajectory_csv(&out.trajectory);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,x1_1,x1_2,x2_1,x2_2,gamma_1,gamma_2,theta_1,theta_2"
        );
        let rows: Vec<Vec<f64>> = lines
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 3);
        for (row, (t, state)) in rows.iter().zip(out.trajectory.samples()) {
            assert_eq!(row[0], t);
            let values: Vec<f64> = state.values().collect();
            assert_eq!(&row[1..], values.as_slice());
        }
    }

    #[test]
    fn sweep_table_rows() {
        let rows = vec![
            SweepRow {
                alpha: 1.0,
                gamma_error: 0.5,
                theta_error: None,
            },
            SweepRow {
                alpha: 5.0,
                gamma_error: 0.25,
                theta_error: None,
            },
        ];
        let t = sweep_table(&rows);
        assert_eq!(t.lines().count(), 3);
        assert!(t.starts_with("alpha,gamma_tail_error\n1,5.0000000000000000e-1"));
    }

    #[test]
    fn out_dir_precedence() {
        assert_eq!(resolve_out_dir(Some("a".into())), PathBuf::from("a"));
    }

    #[test]
    fn bundled_scenarios_parse() {
        for (file, text) in BUNDLED_SCENARIOS {
            parse_scenario(text).unwrap_or_else(|e| panic!("{file}: {e}"));
        }
    }

    #[test]
    fn empty_source_list_fails() {
        let r = check(&[]);
        assert_eq!(r.len(), 1);
        assert!(!r[0].passed);
    }
}
