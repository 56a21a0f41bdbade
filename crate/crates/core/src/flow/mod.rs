//! Flow networks and the exact linear programs used by the solver.

pub mod lp;
pub mod market_lp;
pub mod network;

pub use lp::{LinearProgram, LpOutcome, Sense};
pub use market_lp::{feasible_flow, min_factor, min_factor_lp, money_clearing, MinFactorLp};
pub use network::{max_flow_with_lower_bounds, FlowNetwork, FlowSolution, MaxFlow};
