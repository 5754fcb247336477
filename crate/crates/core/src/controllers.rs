//! Right-hand sides of the distributed control laws.
//!
//! Every law reads and returns a [`MultiplexState`] so the integrator sees one
//! signature. Layers a law does not drive are carried with zero derivative.
//!
//! The multiplex laws are implemented in their gain-α form only; α = 1 is
//! the base law. With pᵢ = γᵢ R(θᵢ) ξᵢ the position layer reads
//!
//! ```text
//! ẋᵢ = −Σⱼ (xᵢ − xⱼ) + Σⱼ (pᵢ − pⱼ)
//!      − α [Σⱼ (γᵢ − γⱼ) + kᵢ (γᵢ − γ)] R(θᵢ) ξᵢ
//!      − α γᵢ [Σⱼ (θᵢ − θⱼ) + kᵢ (θᵢ − θ)] Q(θᵢ) ξᵢ
//! γ̇ᵢ = −α [Σⱼ (γᵢ − γⱼ) + kᵢ (γᵢ − γ)]
//! θ̇ᵢ = −α [Σⱼ (θᵢ − θⱼ) + kᵢ (θᵢ − θ)]
//! ```
//!
//! where sums run over the neighbors of i. The density law is the same with
//! θ frozen at zero and R dropped.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{rotation_derivative, rotation_matrix, Vec2};
use crate::graph::Graph;
use crate::signal::ParameterSignal;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("{what} has length {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("graph not connected")]
    NotConnected,
    #[error("no leader agent")]
    NoLeader,
    #[error("gain alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("formation shape entry {0} is not finite")]
    NonFiniteShape(usize),
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), ControlError> {
    if expected == got {
        Ok(())
    } else {
        Err(ControlError::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}

/// Which control law drives the agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Consensus,
    InvariantFormation,
    Density,
    DensityOrientation,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 4] = [
        ControllerKind::Consensus,
        ControllerKind::InvariantFormation,
        ControllerKind::Density,
        ControllerKind::DensityOrientation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ControllerKind::Consensus => "consensus",
            ControllerKind::InvariantFormation => "invariant_formation",
            ControllerKind::Density => "density",
            ControllerKind::DensityOrientation => "density_orientation",
        }
    }

    /// Whether the γ layer evolves under this law.
    pub fn drives_gamma(self) -> bool {
        matches!(
            self,
            ControllerKind::Density | ControllerKind::DensityOrientation
        )
    }

    /// Whether the θ layer evolves under this law.
    pub fn drives_theta(self) -> bool {
        self == ControllerKind::DensityOrientation
    }

    /// The multiplex laws need a connected graph for their limits to hold.
    pub fn requires_connected(self) -> bool {
        self.drives_gamma()
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ControllerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ControllerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown controller kind `{s}`"))
    }
}

/// Target shape, leader flags, reference signals and layer gain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormationSpec {
    xi: Vec<Vec2>,
    leaders: Vec<bool>,
    gamma_ref: ParameterSignal,
    theta_ref: ParameterSignal,
    alpha: f64,
}

impl FormationSpec {
    pub fn new(
        xi: Vec<Vec2>,
        leaders: Vec<bool>,
        gamma_ref: ParameterSignal,
        theta_ref: ParameterSignal,
        alpha: f64,
    ) -> Result<Self, ControlError> {
        check_len("leaders", xi.len(), leaders.len())?;
        if !leaders.iter().any(|&k| k) {
            return Err(ControlError::NoLeader);
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(ControlError::InvalidAlpha(alpha));
        }
        if let Some(i) = xi.iter().position(|p| !p.is_finite()) {
            return Err(ControlError::NonFiniteShape(i + 1));
        }
        let g0 = gamma_ref.value(0.0);
        if g0 <= 0.0 {
            log::warn!(
                "density reference γ(0) = {g0}: formation collapses to a point or is reflected"
            );
        }
        Ok(FormationSpec {
            xi,
            leaders,
            gamma_ref,
            theta_ref,
            alpha,
        })
    }

    pub fn n(&self) -> usize {
        self.xi.len()
    }

    pub fn xi(&self) -> &[Vec2] {
        &self.xi
    }

    pub fn leaders(&self) -> &[bool] {
        &self.leaders
    }

    pub fn gamma_ref(&self) -> &ParameterSignal {
        &self.gamma_ref
    }

    pub fn theta_ref(&self) -> &ParameterSignal {
        &self.theta_ref
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Copy with a different layer gain.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self, ControlError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(ControlError::InvalidAlpha(alpha));
        }
        Ok(FormationSpec {
            alpha,
            ..self.clone()
        })
    }

    /// Copy with the shape replaced, e.g. by a rotated copy of itself.
    pub fn with_shape(&self, xi: Vec<Vec2>) -> Result<Self, ControlError> {
        FormationSpec::new(
            xi,
            self.leaders.clone(),
            self.gamma_ref.clone(),
            self.theta_ref.clone(),
            self.alpha,
        )
    }

    pub fn with_references(
        &self,
        gamma_ref: ParameterSignal,
        theta_ref: ParameterSignal,
    ) -> Result<Self, ControlError> {
        FormationSpec::new(
            self.xi.clone(),
            self.leaders.clone(),
            gamma_ref,
            theta_ref,
            self.alpha,
        )
    }

    fn pin(&self, i: usize) -> f64 {
        if self.leaders[i] {
            1.0
        } else {
            0.0
        }
    }
}

/// Aggregated state of all layers: positions, density states, orientation states.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplexState {
    pub x: Vec<Vec2>,
    pub gamma: Vec<f64>,
    pub theta: Vec<f64>,
}

impl MultiplexState {
    pub fn new(x: Vec<Vec2>, gamma: Vec<f64>, theta: Vec<f64>) -> Result<Self, ControlError> {
        check_len("gamma", x.len(), gamma.len())?;
        check_len("theta", x.len(), theta.len())?;
        Ok(MultiplexState { x, gamma, theta })
    }

    /// Positions only, with γᵢ = 1 and θᵢ = 0.
    pub fn from_positions(x: Vec<Vec2>) -> Self {
        let n = x.len();
        MultiplexState {
            x,
            gamma: vec![1.0; n],
            theta: vec![0.0; n],
        }
    }

    pub fn zeros(n: usize) -> Self {
        MultiplexState {
            x: vec![Vec2::ZERO; n],
            gamma: vec![0.0; n],
            theta: vec![0.0; n],
        }
    }

    /// The limit point γ R(θ) ξᵢ + c with every layer at its reference.
    pub fn at_formation(xi: &[Vec2], gamma: f64, theta: f64, offset: Vec2) -> Self {
        let r = rotation_matrix(theta);
        MultiplexState {
            x: xi.iter().map(|&p| gamma * r.apply(p) + offset).collect(),
            gamma: vec![gamma; xi.len()],
            theta: vec![theta; xi.len()],
        }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().all(|p| p.is_finite())
            && self.gamma.iter().all(|v| v.is_finite())
            && self.theta.iter().all(|v| v.is_finite())
    }

    /// Largest absolute entry over all layers (NaN propagates).
    pub fn max_abs(&self) -> f64 {
        self.values().fold(0.0, |m: f64, v| {
            if v.is_nan() || m.is_nan() {
                f64::NAN
            } else {
                m.max(v.abs())
            }
        })
    }

    /// `self + h · d`, layer by layer.
    pub fn add_scaled(&self, d: &MultiplexState, h: f64) -> MultiplexState {
        MultiplexState {
            x: self.x.iter().zip(&d.x).map(|(&a, &b)| a + h * b).collect(),
            gamma: self
                .gamma
                .iter()
                .zip(&d.gamma)
                .map(|(a, b)| a + h * b)
                .collect(),
            theta: self
                .theta
                .iter()
                .zip(&d.theta)
                .map(|(a, b)| a + h * b)
                .collect(),
        }
    }

    /// Translates every position by `c`.
    pub fn translated(&self, c: Vec2) -> MultiplexState {
        MultiplexState {
            x: self.x.iter().map(|&p| p + c).collect(),
            ..self.clone()
        }
    }

    /// All entries in export order: x₁, y₁, …, xₙ, yₙ, γ₁…γₙ, θ₁…θₙ.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.x
            .iter()
            .flat_map(|p| [p.x, p.y])
            .chain(self.gamma.iter().copied())
            .chain(self.theta.iter().copied())
    }

    pub fn mean_position(&self) -> Vec2 {
        let n = self.n() as f64;
        let s = self.x.iter().fold(Vec2::ZERO, |acc, &p| acc + p);
        (1.0 / n) * s
    }
}

fn check_graph(g: &Graph, what: &'static str, got: usize) -> Result<(), ControlError> {
    check_len(what, g.node_count(), got)
}

fn check_multiplex(
    g: &Graph,
    state: &MultiplexState,
    spec: &FormationSpec,
) -> Result<(), ControlError> {
    check_graph(g, "state", state.n())?;
    check_len("state gamma", state.n(), state.gamma.len())?;
    check_len("state theta", state.n(), state.theta.len())?;
    check_graph(g, "formation shape", spec.n())?;
    if !g.is_connected() {
        return Err(ControlError::NotConnected);
    }
    Ok(())
}

/// −Σⱼ (xᵢ − xⱼ) for every agent, i.e. −(L ⊗ I₂) x.
pub fn consensus_rhs(g: &Graph, x: &[Vec2]) -> Result<Vec<Vec2>, ControlError> {
    check_graph(g, "positions", x.len())?;
    Ok((0..x.len())
        .map(|i| {
            let mut acc = Vec2::ZERO;
            for &j in g.neighbors(i) {
                acc -= x[i] - x[j];
            }
            acc
        })
        .collect())
}

/// −Σⱼ (xᵢ − xⱼ) + Σⱼ (ξᵢ − ξⱼ).
pub fn invariant_formation_rhs(
    g: &Graph,
    x: &[Vec2],
    xi: &[Vec2],
) -> Result<Vec<Vec2>, ControlError> {
    check_graph(g, "positions", x.len())?;
    check_graph(g, "formation shape", xi.len())?;
    Ok((0..x.len())
        .map(|i| {
            let mut acc = Vec2::ZERO;
            for &j in g.neighbors(i) {
                acc -= x[i] - x[j];
                acc += xi[i] - xi[j];
            }
            acc
        })
        .collect())
}

/// Σⱼ (zᵢ − zⱼ) + kᵢ (zᵢ − reference): the pinned consensus error of a scalar layer.
fn pinned_disagreement(g: &Graph, z: &[f64], pin: f64, reference: f64, i: usize) -> f64 {
    let mut s = 0.0;
    for &j in g.neighbors(i) {
        s += z[i] - z[j];
    }
    s + pin * (z[i] - reference)
}

/// Two-layer density law. θ is carried with zero derivative.
pub fn density_rhs(
    g: &Graph,
    state: &MultiplexState,
    spec: &FormationSpec,
    t: f64,
) -> Result<MultiplexState, ControlError> {
    check_multiplex(g, state, spec)?;
    let n = state.n();
    let gamma_ref = spec.gamma_ref.value(t);
    let alpha = spec.alpha;
    let (x, gamma, xi) = (&state.x, &state.gamma, &spec.xi);

    let mut dx = Vec::with_capacity(n);
    let mut dgamma = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = Vec2::ZERO;
        for &j in g.neighbors(i) {
            acc -= x[i] - x[j];
            acc += gamma[i] * xi[i] - gamma[j] * xi[j];
        }
        let bracket = pinned_disagreement(g, gamma, spec.pin(i), gamma_ref, i);
        acc -= (alpha * bracket) * xi[i];
        dx.push(acc);
        dgamma.push(-alpha * bracket);
    }
    Ok(MultiplexState {
        x: dx,
        gamma: dgamma,
        theta: vec![0.0; n],
    })
}

/// Three-layer density and orientation law.
pub fn density_orientation_rhs(
    g: &Graph,
    state: &MultiplexState,
    spec: &FormationSpec,
    t: f64,
) -> Result<MultiplexState, ControlError> {
    check_multiplex(g, state, spec)?;
    let n = state.n();
    let gamma_ref = spec.gamma_ref.value(t);
    let theta_ref = spec.theta_ref.value(t);
    let alpha = spec.alpha;
    let (x, gamma, theta, xi) = (&state.x, &state.gamma, &state.theta, &spec.xi);

    let rotated: Vec<Vec2> = (0..n)
        .map(|i| rotation_matrix(theta[i]).apply(xi[i]))
        .collect();

    let mut dx = Vec::with_capacity(n);
    let mut dgamma = Vec::with_capacity(n);
    let mut dtheta = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = Vec2::ZERO;
        for &j in g.neighbors(i) {
            acc -= x[i] - x[j];
            acc += gamma[i] * rotated[i] - gamma[j] * rotated[j];
        }
        let gamma_bracket = pinned_disagreement(g, gamma, spec.pin(i), gamma_ref, i);
        let theta_bracket = pinned_disagreement(g, theta, spec.pin(i), theta_ref, i);
        acc -= (alpha * gamma_bracket) * rotated[i];
        acc -= (alpha * gamma[i] * theta_bracket) * rotation_derivative(theta[i]).apply(xi[i]);
        dx.push(acc);
        dgamma.push(-alpha * gamma_bracket);
        dtheta.push(-alpha * theta_bracket);
    }
    Ok(MultiplexState {
        x: dx,
        gamma: dgamma,
        theta: dtheta,
    })
}

/// Dispatches to the law selected by `kind`.
pub fn controller_rhs(
    kind: ControllerKind,
    g: &Graph,
    state: &MultiplexState,
    spec: &FormationSpec,
    t: f64,
) -> Result<MultiplexState, ControlError> {
    let frozen = |dx: Vec<Vec2>| {
        let n = dx.len();
        MultiplexState {
            x: dx,
            gamma: vec![0.0; n],
            theta: vec![0.0; n],
        }
    };
    match kind {
        ControllerKind::Consensus => consensus_rhs(g, &state.x).map(frozen),
        ControllerKind::InvariantFormation => {
            invariant_formation_rhs(g, &state.x, &spec.xi).map(frozen)
        }
        ControllerKind::Density => density_rhs(g, state, spec, t),
        ControllerKind::DensityOrientation => density_orientation_rhs(g, state, spec, t),
    }
}
