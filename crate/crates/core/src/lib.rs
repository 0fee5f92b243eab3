//! Voter model with zealots on directed weighted networks.
//!
//! The crate provides:
//!
//! * [`network`]: the network data model, validation, generators
//!   (Erdos-Renyi, Barabasi-Albert, complete) and a text file format.
//! * [`equilibrium`]: linear solvers for the equilibrium expected opinions
//!   and the pairwise disagreement probabilities, the opinion diversity
//!   `sigma`, the active-link densities `rho` / `rho_w`, and the
//!   complete-graph closed forms.
//! * [`simulate`]: an event-driven stochastic simulation of the dynamics
//!   with reproducible seeding and replicated runs.
//! * [`optimize`]: optimal 1-zealot placement under a backfire effect that
//!   radicalizes part of the audience, on complete graphs (closed forms) and
//!   on arbitrary networks (projected gradient ascent).
//! * [`congress`]: a party-seat data pipeline that fits zealot counts to
//!   observed diversity and activity levels and sweeps backfire scenarios.

pub mod congress;
pub mod equilibrium;
mod linsolve;
pub mod network;
pub mod optimize;
pub mod simulate;

pub use congress::{
    alpha_sweep, empirical_rho, empirical_sigma, estimate_zealots, estimate_zealots_with,
    parse_members, CongressError, CongressRecord, CongressSeries, Party, SweepObjective,
    SweepRow, ZealotEstimate,
};
pub use equilibrium::{
    rho_complete, sigma_complete, solve_activation, solve_activation_with, solve_opinions,
    solve_opinions_with, transition_rates, two_state_q, ActivationEquilibrium,
    OpinionEquilibrium, SolveError, SolverOptions,
};
pub use network::{
    barabasi_albert, complete, erdos_renyi, load_network, save_network, Network, NetworkError,
    NodeRole, ValidationReport, WeightLaw, ZealotInfluence,
};
pub use optimize::{
    solve_p1_target, solve_p2_diversity_complete, solve_p3_active_complete,
    solve_p_diversity_general, BackfireSpec, GeneralDiversityOptions, GeneralDiversityResult,
    OptimizationResult, OptimizeError, PostIntervention,
};
pub use simulate::{
    replicate, simulate, InitialOpinions, ReplicateSummary, Sample, SimError, SimulationConfig,
    SimulationTrace, TraceSummary,
};
