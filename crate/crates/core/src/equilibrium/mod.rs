//! Equilibrium state, the capless initializer, the descending-price
//! algorithm and the verifiers.

pub mod fptas;
pub mod init;
pub mod state;
pub mod verify;

pub use fptas::{
    check_trace, detect_events, iteration_budget, price_floor, run_fptas, run_fptas_with,
    EventKind, EventOutcome, FptasOptions, FptasRun, Release, TraceCheck, TraceEntry,
};
pub use init::solve_no_utility_caps;
pub use state::MarketState;
pub use verify::{
    allocation_at_prices, verify_approx_equilibrium, verify_equilibrium, VerifyReport,
};
