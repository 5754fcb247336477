//! Residuals that measure how far a trajectory is from the limits the control
//! laws are meant to reach, plus convergence summaries and α sweeps.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::controllers::{ControllerKind, FormationSpec, MultiplexState};
use crate::dynamics::{simulate, DynamicsError, SimConfig, Trajectory};
use crate::geometry::{rotation_matrix, Vec2};
use crate::graph::Graph;

/// Fraction of the horizon, counted from the end, used for steady-state statistics.
pub const TAIL_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("trajectory has no samples")]
    EmptyTrajectory,
    #[error("{0} reference varies in time; the fixed-shape limit does not apply")]
    NonConstantReference(&'static str),
    #[error("{layer} layer is frozen under the {kind} controller")]
    FrozenLayer { layer: Layer, kind: ControllerKind },
    #[error("alpha list must be nonempty with positive entries")]
    InvalidAlphas,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// A residual sampled at the trajectory's times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl Series {
    fn from_trajectory(traj: &Trajectory, f: impl Fn(&MultiplexState) -> f64) -> Self {
        Series {
            times: traj.times.clone(),
            values: traj.states.iter().map(f).collect(),
        }
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }

    pub fn settle_time(&self, tol: f64) -> Option<f64> {
        settle_time(&self.times, &self.values, tol)
    }

    /// Supremum over samples with t ≥ (1 − fraction) · t_end.
    pub fn tail_sup(&self, fraction: f64) -> f64 {
        let Some(&t_end) = self.times.last() else {
            return f64::NAN;
        };
        let start = (1.0 - fraction) * t_end;
        self.times
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| **t >= start)
            .map(|(_, v)| *v)
            .fold(0.0, f64::max)
    }

    /// Least-squares slope of ln(value) against time over the final `fraction`
    /// of the horizon. Samples at exactly zero are skipped. `None` with fewer
    /// than two usable samples.
    pub fn log_decay_slope(&self, fraction: f64) -> Option<f64> {
        let t_end = *self.times.last()?;
        let start = (1.0 - fraction) * t_end;
        let pts: Vec<(f64, f64)> = self
            .times
            .iter()
            .zip(&self.values)
            .filter(|(t, v)| **t >= start && **v > 0.0)
            .map(|(t, v)| (*t, v.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let m = pts.len() as f64;
        let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|(t, y)| (t - mean_t) * (y - mean_y)).sum();
        let sxx: f64 = pts.iter().map(|(t, _)| (t - mean_t).powi(2)).sum();
        Some(sxy / sxx)
    }
}

/// Earliest sample time after which every residual is ≤ `tol`.
pub fn settle_time(times: &[f64], residuals: &[f64], tol: f64) -> Option<f64> {
    let last_bad = residuals.iter().rposition(|&r| r.is_nan() || r > tol);
    match last_bad {
        None => times.first().copied(),
        Some(i) => times.get(i + 1).copied(),
    }
}

/// Summary of one residual series against a tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    pub final_residual: f64,
    pub residual_series: Vec<f64>,
    pub settle_time: Option<f64>,
    pub tolerance: f64,
}

impl ConvergenceReport {
    pub fn from_series(series: &Series, tolerance: f64) -> Result<Self, AnalysisError> {
        let final_residual = series.last().ok_or(AnalysisError::EmptyTrajectory)?;
        let settle = series.settle_time(tolerance);
        Ok(ConvergenceReport {
            converged: settle.is_some(),
            final_residual,
            residual_series: series.values.clone(),
            settle_time: settle,
            tolerance,
        })
    }
}

fn non_empty(traj: &Trajectory) -> Result<&MultiplexState, AnalysisError> {
    traj.initial_state().ok_or(AnalysisError::EmptyTrajectory)
}

/// Per sample, maxᵢ ‖xᵢ(t) − x̄(0)‖ where x̄(0) is the initial mean position.
pub fn consensus_residual(traj: &Trajectory) -> Result<Series, AnalysisError> {
    let mean = non_empty(traj)?.mean_position();
    Ok(Series::from_trajectory(traj, |s| {
        s.x.iter().map(|&p| (p - mean).norm()).fold(0.0, f64::max)
    }))
}

/// Which fixed-shape limit a formation residual measures against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormationMode {
    /// xᵢ − xⱼ → ξᵢ − ξⱼ
    Invariant,
    /// xᵢ − xⱼ → γ (ξᵢ − ξⱼ)
    Density,
    /// xᵢ − xⱼ → γ R(θ) (ξᵢ − ξⱼ)
    DensityOrientation,
}

impl FormationMode {
    pub fn for_kind(kind: ControllerKind) -> Option<FormationMode> {
        match kind {
            ControllerKind::Consensus => None,
            ControllerKind::InvariantFormation => Some(FormationMode::Invariant),
            ControllerKind::Density => Some(FormationMode::Density),
            ControllerKind::DensityOrientation => Some(FormationMode::DensityOrientation),
        }
    }
}

/// maxᵢⱼ ‖(xᵢ − xⱼ) − (targetᵢ − targetⱼ)‖ over all pairs.
pub fn max_pair_residual(x: &[Vec2], target: &[Vec2]) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            let r = ((x[i] - x[j]) - (target[i] - target[j])).norm();
            worst = worst.max(r);
        }
    }
    worst
}

/// Pairwise distance to the scaled (and rotated) shape, for constant references.
pub fn formation_residual(
    traj: &Trajectory,
    spec: &FormationSpec,
    mode: FormationMode,
) -> Result<Series, AnalysisError> {
    non_empty(traj)?;
    let (gamma, theta) = match mode {
        FormationMode::Invariant => (1.0, 0.0),
        FormationMode::Density => {
            if !spec.gamma_ref().is_constant() {
                return Err(AnalysisError::NonConstantReference("density"));
            }
            (spec.gamma_ref().value(0.0), 0.0)
        }
        FormationMode::DensityOrientation => {
            if !spec.gamma_ref().is_constant() {
                return Err(AnalysisError::NonConstantReference("density"));
            }
            if !spec.theta_ref().is_constant() {
                return Err(AnalysisError::NonConstantReference("orientation"));
            }
            (spec.gamma_ref().value(0.0), spec.theta_ref().value(0.0))
        }
    };
    let r = rotation_matrix(theta);
    let target: Vec<Vec2> = spec.xi().iter().map(|&p| gamma * r.apply(p)).collect();
    Ok(Series::from_trajectory(traj, |s| {
        max_pair_residual(&s.x, &target)
    }))
}

/// Pairwise distance to each agent's own layer-driven target γᵢ(t) R(θᵢ(t)) ξᵢ.
///
/// This is the limit for time-varying references; it needs no constant reference.
pub fn moving_formation_residual(
    traj: &Trajectory,
    spec: &FormationSpec,
) -> Result<Series, AnalysisError> {
    non_empty(traj)?;
    Ok(Series::from_trajectory(traj, |s| {
        let target: Vec<Vec2> = spec
            .xi()
            .iter()
            .enumerate()
            .map(|(i, &p)| s.gamma[i] * rotation_matrix(s.theta[i]).apply(p))
            .collect();
        max_pair_residual(&s.x, &target)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Gamma,
    Theta,
}

impl std::fmt::Display for Layer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Layer::Gamma => "gamma",
            Layer::Theta => "theta",
        })
    }
}

/// Per sample, maxᵢ |layerᵢ(t) − reference(t)|.
pub fn layer_tracking_error(
    traj: &Trajectory,
    spec: &FormationSpec,
    layer: Layer,
) -> Result<Series, AnalysisError> {
    non_empty(traj)?;
    let kind = traj.meta.kind;
    let live = match layer {
        Layer::Gamma => kind.drives_gamma(),
        Layer::Theta => kind.drives_theta(),
    };
    if !live {
        return Err(AnalysisError::FrozenLayer { layer, kind });
    }
    let values = traj
        .samples()
        .map(|(t, s)| {
            let (states, reference) = match layer {
                Layer::Gamma => (&s.gamma, spec.gamma_ref().value(t)),
                Layer::Theta => (&s.theta, spec.theta_ref().value(t)),
            };
            states
                .iter()
                .map(|v| (v - reference).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(Series {
        times: traj.times.clone(),
        values,
    })
}

/// Steady-state tracking errors for one gain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub gamma_error: f64,
    /// Present only for the density + orientation law.
    pub theta_error: Option<f64>,
}

/// Reruns the simulation once per gain and reports the supremum of each live
/// layer's tracking error over the last [`TAIL_FRACTION`] of the horizon.
pub fn alpha_sweep(
    g: &Graph,
    spec: &FormationSpec,
    kind: ControllerKind,
    initial: &MultiplexState,
    cfg: &SimConfig,
    alphas: &[f64],
) -> Result<Vec<SweepRow>, AnalysisError> {
    if alphas.is_empty() || alphas.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(AnalysisError::InvalidAlphas);
    }
    if !kind.drives_gamma() {
        return Err(AnalysisError::FrozenLayer {
            layer: Layer::Gamma,
            kind,
        });
    }
    alphas
        .par_iter()
        .map(|&alpha| {
            let spec = spec.with_alpha(alpha).map_err(DynamicsError::from)?;
            let traj = simulate(g, &spec, kind, initial, cfg)?;
            let gamma_error =
                layer_tracking_error(&traj, &spec, Layer::Gamma)?.tail_sup(TAIL_FRACTION);
            let theta_error = if kind.drives_theta() {
                Some(layer_tracking_error(&traj, &spec, Layer::Theta)?.tail_sup(TAIL_FRACTION))
            } else {
                None
            };
            Ok(SweepRow {
                alpha,
                gamma_error,
                theta_error,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Method;
    use crate::signal::ParameterSignal;
    use std::f64::consts::FRAC_PI_2;

    use proptest::prelude::*;

    fn square() -> Vec<Vec2> {
        vec![
            Vec2::new(1.0, 1.0),
            Vec2::new(-1.0, 1.0),
            Vec2::new(-1.0, -1.0),
            Vec2::new(1.0, -1.0),
        ]
    }

    fn square_spec(gamma: ParameterSignal, theta: ParameterSignal, alpha: f64) -> FormationSpec {
        FormationSpec::new(
            square(),
            vec![true, false, false, false],
            gamma,
            theta,
            alpha,
        )
        .unwrap()
    }

    fn cfg(t_final: f64) -> SimConfig {
        SimConfig {
            t_final,
            ..SimConfig::default()
        }
    }

    #[test]
    fn consensus_residual_zero_when_agreed() {
        let g = Graph::path(3);
        let init = MultiplexState::from_positions(vec![Vec2::new(2.0, -1.0); 3]);
        let spec = FormationSpec::new(
            vec![Vec2::ZERO; 3],
            vec![true, false, false],
            ParameterSignal::constant(1.0),
            ParameterSignal::constant(0.0),
            1.0,
        )
        .unwrap();
        let traj = simulate(&g, &spec, ControllerKind::Consensus, &init, &cfg(1.0)).unwrap();
        let r = consensus_residual(&traj).unwrap();
        assert!(r.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_node_consensus_residual_decays_at_rate_two() {
        let g = Graph::new(2, &[(1, 2)]).unwrap();
        let init = MultiplexState::from_positions(vec![Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0)]);
        let spec = FormationSpec::new(
            vec![Vec2::ZERO; 2],
            vec![true, false],
            ParameterSignal::constant(1.0),
            ParameterSignal::constant(0.0),
            1.0,
        )
        .unwrap();
        let traj = simulate(&g, &spec, ControllerKind::Consensus, &init, &cfg(20.0)).unwrap();
        let r = consensus_residual(&traj).unwrap();
        // closed form: each agent sits at distance e^{−2t} from the mean
        for (t, v) in r.times.iter().zip(&r.values) {
            assert!((v - (-2.0 * t).exp()).abs() < 1e-9, "t={t}");
        }
        assert!(r.last().unwrap() < 1e-6);
    }

    #[test]
    fn formation_residual_zero_at_limit() {
        let g = Graph::cycle(4);
        let spec = square_spec(
            ParameterSignal::constant(2.0),
            ParameterSignal::constant(FRAC_PI_2),
            1.0,
        );
        let init = MultiplexState::at_formation(&square(), 2.0, FRAC_PI_2, Vec2::new(1.0, 2.0));
        let traj = simulate(
            &g,
            &spec,
            ControllerKind::DensityOrientation,
            &init,
            &cfg(1.0),
        )
        .unwrap();
        let r = formation_residual(&traj, &spec, FormationMode::DensityOrientation).unwrap();
        assert!(r.values.iter().all(|&v| v < 1e-14));
    }

    #[test]
    fn square_doubles_under_density_two() {
        let g = Graph::cycle(4);
        let spec = square_spec(
            ParameterSignal::constant(2.0),
            ParameterSignal::constant(0.0),
            1.0,
        );
        let init = MultiplexState::from_positions(square());
        let traj = simulate(&g, &spec, ControllerKind::Density, &init, &cfg(100.0)).unwrap();
        let r = formation_residual(&traj, &spec, FormationMode::Density).unwrap();
        assert!(r.last().unwrap() < 1e-4);
        let fin = traj.final_state().unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let span = fin.x[i] - fin.x[j];
                let orig = square()[i] - square()[j];
                assert!((span - 2.0 * orig).norm() < 1e-4);
            }
        }
    }

    #[test]
    fn square_residual_at_fifty_matches_closed_form() {
        // x(0) = ξ and γᵢ(0) = 1 give xᵢ − γᵢξᵢ = 0 for all t, so the residual is
        // carried entirely by γ(t) − 2 = −e^{−(L+K)t}·1. nalgebra's expm is the oracle.
        let g = Graph::cycle(4);
        let spec = square_spec(
            ParameterSignal::constant(2.0),
            ParameterSignal::constant(0.0),
            1.0,
        );
        let init = MultiplexState::from_positions(square());
        let traj = simulate(&g, &spec, ControllerKind::Density, &init, &cfg(50.0)).unwrap();
        let got = formation_residual(&traj, &spec, FormationMode::Density)
            .unwrap()
            .last()
            .unwrap();

        let l = g.laplacian();
        let m = nalgebra::DMatrix::from_fn(4, 4, |i, j| {
            -50.0 * (l[(i, j)] + if i == j && i == 0 { 1.0 } else { 0.0 })
        });
        let gamma = m.exp() * nalgebra::DVector::from_element(4, -1.0);
        let xi = square();
        let mut want = 0.0_f64;
        for i in 0..4 {
            for j in 0..4 {
                want = want.max((gamma[i] * xi[i] - gamma[j] * xi[j]).norm());
            }
        }
        assert!((got - want).abs() < 1e-9 * want.max(1.0), "{got} vs {want}");
        assert!((want - 2.598e-4).abs() < 1e-6);
    }

    #[test]
    fn square_quarter_turn() {
        let g = Graph::cycle(4);
        let spec = square_spec(
            ParameterSignal::constant(1.0),
            ParameterSignal::constant(FRAC_PI_2),
            1.0,
        );
        let init = MultiplexState::from_positions(square());
        let traj = simulate(
            &g,
            &spec,
            ControllerKind::DensityOrientation,
            &init,
            &cfg(100.0),
        )
        .unwrap();
        let fin = traj.final_state().unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let d = square()[i] - square()[j];
                // quarter turn: (x, y) ↦ (−y, x)
                let turned = Vec2::new(-d.y, d.x);
                assert!((fin.x[i] - fin.x[j] - turned).norm() < 1e-4);
            }
        }
    }

    #[test]
    fn non_constant_reference_rejected() {
        let g = Graph::cycle(4);
        let spec = square_spec(
            ParameterSignal::sinusoid(1.0, 0.2, 0.5),
            ParameterSignal::constant(0.0),
            1.0,
        );
        let init = MultiplexState::from_positions(square());
        let traj = simulate(&g, &spec, ControllerKind::Density, &init, &cfg(1.0)).unwrap();
        assert_eq!(
            formation_residual(&traj, &spec, FormationMode::Density).unwrap_err(),
            AnalysisError::NonConstantReference("density")
        );
        // the moving-target residual still applies and decays
        let traj = simulate(&g, &spec, ControllerKind::Density, &init, &cfg(50.0)).unwrap();
        assert!(
            moving_formation_residual(&traj, &spec)
                .unwrap()
                .last()
                .unwrap()
                < 1e-6
        );
    }

    #[test]
    fn zero_theta_modes_agree() {
        let g = Graph::cycle(4);
        let spec = square_spec(
            ParameterSignal::constant(2.0),
            ParameterSignal::constant(0.0),
            1.0,
        );
        let init = MultiplexState::from_positions(square());
        let traj = simulate(
            &g,
            &spec,
            ControllerKind::DensityOrientation,
            &init,
            &cfg(10.0),
        )
        .unwrap();
        let a = formation_residual(&traj, &spec, FormationMode::Density).unwrap();
        let b = formation_residual(&traj, &spec, FormationMode::DensityOrientation).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn tracking_error_identically_zero_at_reference() {
        let g = Graph::cycle(4);
        let spec = square_spec(
            ParameterSignal::constant(2.0),
            ParameterSignal::constant(0.0),
            1.0,
        );
        let init = MultiplexState::new(square(), vec![2.0; 4], vec![0.0; 4]).unwrap();
        let traj = simulate(&g, &spec, ControllerKind::Density, &init, &cfg(5.0)).unwrap();
        let e = layer_tracking_error(&traj, &spec, Layer::Gamma).unwrap();
        assert!(e.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn frozen_layer_rejected() {
        let g = Graph::cycle(4);
        let spec = square_spec(
            ParameterSignal::constant(2.0),
            ParameterSignal::constant(0.0),
            1.0,
        );
        let init = MultiplexState::from_positions(square());
        let traj = simulate(&g, &spec, ControllerKind::Density, &init, &cfg(1.0)).unwrap();
        assert_eq!(
            layer_tracking_error(&traj, &spec, Layer::Theta).unwrap_err(),
            AnalysisError::FrozenLayer {
                layer: Layer::Theta,
                kind: ControllerKind::Density
            }
        );
        let traj = simulate(&g, &spec, ControllerKind::Consensus, &init, &cfg(1.0)).unwrap();
        assert!(layer_tracking_error(&traj, &spec, Layer::Gamma).is_err());
    }

    #[test]
    fn three_agent_layer_matches_eigen_decomposition() {
        // γ̇ = −(L + K)(γ − 2·1) on P3 led by the middle agent: independent closed
        // form via nalgebra's symmetric eigendecomposition.
        let g = Graph::path(3);
        let leaders = vec![false, true, false];
        let spec = FormationSpec::new(
            vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(2.0, 0.0),
            ],
            leaders,
            ParameterSignal::constant(2.0),
            ParameterSignal::constant(0.0),
            1.0,
        )
        .unwrap();
        let init = MultiplexState::new(spec.xi().to_vec(), vec![0.0; 3], vec![0.0; 3]).unwrap();
        let traj = simulate(&g, &spec, ControllerKind::Density, &init, &cfg(80.0)).unwrap();
        let m = nalgebra::Matrix3::new(1.0, -1.0, 0.0, -1.0, 3.0, -1.0, 0.0, -1.0, 1.0);
        let eig = m.symmetric_eigen();
        let e0 = nalgebra::Vector3::new(-2.0, -2.0, -2.0);
        let err = layer_tracking_error(&traj, &spec, Layer::Gamma).unwrap();
        for (t, got) in err.times.iter().zip(&err.values) {
            let decay =
                nalgebra::Matrix3::from_diagonal(&eig.eigenvalues.map(|l: f64| (-l * t).exp()));
            let e = eig.eigenvectors * decay * eig.eigenvectors.transpose() * e0;
            assert!((got - e.amax()).abs() < 1e-8, "t={t}");
        }
        assert!(err.last().unwrap() < 1e-6);
    }

    #[test]
    fn larger_alpha_tracks_sinusoid_better() {
        let g = Graph::cycle(4);
        let spec = square_spec(
            ParameterSignal::sinusoid(1.0, 0.2, 0.5),
            ParameterSignal::constant(0.0),
            1.0,
        );
        let init = MultiplexState::from_positions(square());
        let rows = alpha_sweep(
            &g,
            &spec,
            ControllerKind::Density,
            &init,
            &cfg(50.0),
            &[1.0, 5.0, 10.0],
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].gamma_error > rows[1].gamma_error);
        assert!(rows[1].gamma_error > rows[2].gamma_error);
        assert!(rows.iter().all(|r| r.theta_error.is_none()));
    }

    #[test]
    fn sweep_with_constant_reference_is_exact() {
        let g = Graph::cycle(4);
        let spec = square_spec(
            ParameterSignal::constant(2.0),
            ParameterSignal::constant(0.5),
            1.0,
        );
        let init = MultiplexState::from_positions(square());
        let rows = alpha_sweep(
            &g,
            &spec,
            ControllerKind::DensityOrientation,
            &init,
            &cfg(150.0),
            &[1.0, 5.0, 10.0],
        )
        .unwrap();
        for r in rows {
            assert!(r.gamma_error < 1e-6 && r.theta_error.unwrap() < 1e-6);
        }
    }

    #[test]
    fn single_alpha_sweep_matches_direct_tail() {
        let g = Graph::cycle(4);
        let spec = square_spec(
            ParameterSignal::sinusoid(1.0, 0.2, 0.5),
            ParameterSignal::constant(0.0),
            3.0,
        );
        let init = MultiplexState::from_positions(square());
        let c = SimConfig {
            dt: 0.01,
            t_final: 30.0,
            method: Method::Rk4,
            record_stride: 2,
        };
        let rows = alpha_sweep(&g, &spec, ControllerKind::Density, &init, &c, &[3.0]).unwrap();
        let traj = simulate(&g, &spec, ControllerKind::Density, &init, &c).unwrap();
        let direct = layer_tracking_error(&traj, &spec, Layer::Gamma)
            .unwrap()
            .tail_sup(TAIL_FRACTION);
        assert_eq!(
            rows,
            vec![SweepRow {
                alpha: 3.0,
                gamma_error: direct,
                theta_error: None
            }]
        );
    }

    #[test]
    fn sweep_rejects_bad_alphas() {
        let g = Graph::cycle(4);
        let spec = square_spec(
            ParameterSignal::constant(2.0),
            ParameterSignal::constant(0.0),
            1.0,
        );
        let init = MultiplexState::from_positions(square());
        for alphas in [vec![], vec![1.0, -1.0]] {
            assert_eq!(
                alpha_sweep(
                    &g,
                    &spec,
                    ControllerKind::Density,
                    &init,
                    &cfg(1.0),
                    &alphas
                )
                .unwrap_err(),
                AnalysisError::InvalidAlphas
            );
        }
    }

    #[test]
    fn settle_time_examples() {
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.5).collect();
        assert_eq!(settle_time(&times, &[0.1; 50], 1.0), Some(0.0));
        let decaying: Vec<f64> = (0..50).map(|k| 2.0 - k as f64 * 0.05).collect();
        // sample 37 is the first with 2 − 0.05k ≤ 0.15
        assert_eq!(settle_time(&times, &decaying, 0.15), Some(times[37]));
        assert_eq!(settle_time(&times, &[5.0; 50], 1.0), None);
        let mut blip = vec![0.0; 50];
        blip[45] = 2.0;
        assert_eq!(settle_time(&times, &blip, 1.0), Some(times[46]));
        assert_eq!(settle_time(&times, &[f64::NAN; 50], 1.0), None);
    }

    #[test]
    fn log_slope_of_pure_exponential() {
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        let s = Series {
            values: times.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect(),
            times,
        };
        assert!((s.log_decay_slope(0.5).unwrap() + 0.7).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn settle_time_monotone_in_tolerance(
            values in proptest::collection::vec(0.0f64..10.0, 1..60),
            a in 0.0f64..10.0,
            b in 0.0f64..10.0,
        ) {
            let times: Vec<f64> = (0..values.len()).map(|k| k as f64).collect();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let t_lo = settle_time(&times, &values, lo);
            let t_hi = settle_time(&times, &values, hi);
            if let Some(tl) = t_lo {
                prop_assert!(t_hi.is_some() && t_hi.unwrap() <= tl);
            }
        }
    }
}
