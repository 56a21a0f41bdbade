//! Runs the descending-price algorithm on a small random market and prints
//! every step together with the per-buyer lemma checks on the trace.
//!
//! cargo run --example fptas_trace [seed]

use budget_nsw::equilibrium::{
    check_trace, run_fptas, verify_approx_equilibrium, verify_equilibrium,
};
use budget_nsw::flow::money_clearing;
use budget_nsw::gen::gen_random_market;
use budget_nsw::instance::perturb;
use budget_nsw::rational::{frac, to_text};
use budget_nsw::Result;

fn main() -> Result<()> {
    let seed: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1797);
    let eps = frac(1, 8);
    let market = gen_random_market(2, 6, 11, seed)?;
    if !money_clearing(&market) {
        println!("seed {seed}: market is not money clearing, try another seed");
        return Ok(());
    }
    let mk = perturb(&market, &eps)?;
    let run = run_fptas(&mk)?;

    let start: Vec<String> = run.initial.prices.iter().map(to_text).collect();
    println!("capless start prices {start:?}");
    for e in &run.trace {
        println!("{}", e.line());
    }
    let end: Vec<String> = run.state.prices.iter().map(to_text).collect();
    println!("final prices {end:?}");
    println!(
        "detachments {}, releases {}",
        run.detachments.len(),
        run.releases.len()
    );

    let check = check_trace(&mk, &run);
    println!(
        "alpha_k strictly increasing: {}; windows {} with {} lacking a (1+eps) drop; budget {:.3e} {}",
        check.alpha_violations.is_empty(),
        check.windows,
        check.window_violations.len(),
        check.budget,
        if check.within_budget() { "kept" } else { "exceeded" }
    );
    let exact = verify_equilibrium(&mk, &run.state.prices, &run.allocation);
    let approx = verify_approx_equilibrium(&market, &run.state.prices, &run.allocation, &eps);
    println!(
        "exact equilibrium of the perturbed market: {}",
        exact.passed()
    );
    println!(
        "eps-approximate equilibrium of the original: {}",
        approx.passed()
    );
    Ok(())
}
