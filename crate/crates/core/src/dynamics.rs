//! Fixed-step integration of the control laws.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::controllers::{
    controller_rhs, ControlError, ControllerKind, FormationSpec, MultiplexState,
};
use crate::graph::Graph;

/// Any entry above this magnitude counts as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("state diverged at t = {t} (|entry| = {magnitude:e})")]
    Diverged { t: f64, magnitude: f64 },
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("reference step at t = {at} is not a multiple of dt = {dt}")]
    StepNotAligned { at: f64, dt: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Euler,
    Rk4,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Euler => "euler",
            Method::Rk4 => "rk4",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_final: f64,
    pub method: Method,
    /// Record every k-th step. The final step is always recorded.
    pub record_stride: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.01,
            t_final: 50.0,
            method: Method::Rk4,
            record_stride: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(DynamicsError::InvalidConfig(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_final.is_finite() && self.t_final >= self.dt) {
            return Err(DynamicsError::InvalidConfig(format!(
                "t_final must be at least dt, got {}",
                self.t_final
            )));
        }
        if self.record_stride == 0 {
            return Err(DynamicsError::InvalidConfig(
                "record stride must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        ((self.t_final / self.dt).round() as usize).max(1)
    }

    /// Errors unless `at` falls on the step grid.
    pub fn check_aligned(&self, at: f64) -> Result<(), DynamicsError> {
        let k = at / self.dt;
        if (k - k.round()).abs() > 1e-9 * k.abs().max(1.0) {
            return Err(DynamicsError::StepNotAligned { at, dt: self.dt });
        }
        Ok(())
    }
}

/// State types the integrator can advance.
pub trait OdeState: Clone {
    /// `self + h · d`.
    fn add_scaled(&self, d: &Self, h: f64) -> Self;
    /// Largest absolute entry; NaN if any entry is NaN.
    fn max_abs(&self) -> f64;
}

impl OdeState for MultiplexState {
    fn add_scaled(&self, d: &Self, h: f64) -> Self {
        MultiplexState::add_scaled(self, d, h)
    }

    fn max_abs(&self) -> f64 {
        MultiplexState::max_abs(self)
    }
}

impl OdeState for Vec<f64> {
    fn add_scaled(&self, d: &Self, h: f64) -> Self {
        self.iter().zip(d).map(|(a, b)| a + h * b).collect()
    }

    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m: f64, v| {
            if v.is_nan() || m.is_nan() {
                f64::NAN
            } else {
                m.max(v.abs())
            }
        })
    }
}

fn guard<S: OdeState>(state: S, t: f64) -> Result<S, DynamicsError> {
    let m = state.max_abs();
    if !m.is_finite() {
        Err(DynamicsError::NonFiniteState { t })
    } else if m > DIVERGENCE_LIMIT {
        Err(DynamicsError::Diverged { t, magnitude: m })
    } else {
        Ok(state)
    }
}

/// Advances `state` from `t` by one step of size `dt`.
pub fn step<S, F>(
    mut rhs: F,
    state: &S,
    t: f64,
    dt: f64,
    method: Method,
) -> Result<S, DynamicsError>
where
    S: OdeState,
    F: FnMut(f64, &S) -> Result<S, ControlError>,
{
    let next = match method {
        Method::Euler => state.add_scaled(&rhs(t, state)?, dt),
        Method::Rk4 => {
            let half = 0.5 * dt;
            let k1 = rhs(t, state)?;
            let k2 = rhs(t + half, &state.add_scaled(&k1, half))?;
            let k3 = rhs(t + half, &state.add_scaled(&k2, half))?;
            let k4 = rhs(t + dt, &state.add_scaled(&k3, dt))?;
            state
                .add_scaled(&k1, dt / 6.0)
                .add_scaled(&k2, dt / 3.0)
                .add_scaled(&k3, dt / 3.0)
                .add_scaled(&k4, dt / 6.0)
        }
    };
    guard(next, t + dt)
}

/// Identifies the inputs a trajectory was produced from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryMeta {
    pub kind: ControllerKind,
    pub graph_fingerprint: String,
    pub spec_fingerprint: String,
    pub config: SimConfig,
}

/// Sampled solution. `times[0] == 0` and `times` is strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<MultiplexState>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    pub fn final_state(&self) -> Option<&MultiplexState> {
        self.states.last()
    }

    pub fn initial_state(&self) -> Option<&MultiplexState> {
        self.states.first()
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, &MultiplexState)> {
        self.times.iter().copied().zip(&self.states)
    }
}

fn fingerprint(bytes: &[u8]) -> String {
    hex::encode(&Sha256::digest(bytes)[..8])
}

pub fn graph_fingerprint(g: &Graph) -> String {
    let mut canon = format!("n={};", g.node_count());
    for (i, j) in g.edges() {
        canon.push_str(&format!("{i}-{j};"));
    }
    fingerprint(canon.as_bytes())
}

pub fn spec_fingerprint(spec: &FormationSpec) -> String {
    let bytes = serde_json::to_vec(spec).expect("formation spec serializes");
    fingerprint(&bytes)
}

/// Integrates the selected law from `initial` over `[0, cfg.t_final]`.
pub fn simulate(
    g: &Graph,
    spec: &FormationSpec,
    kind: ControllerKind,
    initial: &MultiplexState,
    cfg: &SimConfig,
) -> Result<Trajectory, DynamicsError> {
    cfg.validate()?;
    let n = g.node_count();
    for (what, got) in [
        ("initial state", initial.n()),
        ("initial gamma", initial.gamma.len()),
        ("initial theta", initial.theta.len()),
        ("formation shape", spec.n()),
    ] {
        if got != n {
            return Err(ControlError::DimensionMismatch {
                what,
                expected: n,
                got,
            }
            .into());
        }
    }
    if kind.requires_connected() && !g.is_connected() {
        return Err(ControlError::NotConnected.into());
    }
    let mut jumps = Vec::new();
    if kind.drives_gamma() {
        jumps.extend(spec.gamma_ref().discontinuities());
    }
    if kind.drives_theta() {
        jumps.extend(spec.theta_ref().discontinuities());
    }
    for at in jumps {
        cfg.check_aligned(at)?;
    }

    let steps = cfg.steps();
    let capacity = steps / cfg.record_stride + 2;
    let mut times = Vec::with_capacity(capacity);
    let mut states = Vec::with_capacity(capacity);
    let mut state = guard(initial.clone(), 0.0)?;
    times.push(0.0);
    states.push(state.clone());

    let rhs = |t: f64, s: &MultiplexState| controller_rhs(kind, g, s, spec, t);
    for k in 0..steps {
        let t = k as f64 * cfg.dt;
        state = step(rhs, &state, t, cfg.dt, cfg.method)?;
        let done = k + 1;
        if done % cfg.record_stride == 0 || done == steps {
            times.push(done as f64 * cfg.dt);
            states.push(state.clone());
        }
    }

    Ok(Trajectory {
        times,
        states,
        meta: TrajectoryMeta {
            kind,
            graph_fingerprint: graph_fingerprint(g),
            spec_fingerprint: spec_fingerprint(spec),
            config: *cfg,
        },
    })
}
