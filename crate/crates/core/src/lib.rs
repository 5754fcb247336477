//! Multiplex-network formation control for single-integrator agents in the plane.
//!
//! Agents share a physical position layer plus two information layers: a
//! density layer γ and an orientation layer θ. Leader agents see the external
//! density and orientation references and pin those layers to them; the rest
//! of the swarm learns them through neighbor-to-neighbor exchange, which lets
//! leaders scale and rotate the whole formation.
//!
//! Modules, bottom up:
//! - [`graph`]: undirected graphs, degree/adjacency/Laplacian matrices, spectra
//! - [`controllers`]: right-hand sides of the consensus, formation and multiplex laws
//! - [`dynamics`]: fixed-step Euler / RK4 integration into trajectories
//! - [`analysis`]: residuals, convergence reports, α sweeps
//! - [`cli`]: scenario files, trajectory/report export, the `check` suite

pub mod analysis;
pub mod cli;
pub mod controllers;
pub mod dynamics;
pub mod geometry;
pub mod graph;
pub mod linalg;
pub mod signal;

pub use controllers::{ControllerKind, FormationSpec, MultiplexState};
pub use dynamics::{simulate, Method, SimConfig, Trajectory};
pub use geometry::Vec2;
pub use graph::Graph;
pub use signal::ParameterSignal;
