//! The three structural example markets, solved exactly on the
//! unperturbed market, and the non-convexity of the second one.
//!
//! cargo run --example fixtures

use budget_nsw::equilibrium::{allocation_at_prices, run_fptas, verify_equilibrium};
use budget_nsw::gen::{gen_fixture, FixtureName};
use budget_nsw::instance::unperturbed;
use budget_nsw::oracle::brute_equilibrium;
use budget_nsw::rational::{int, to_text};
use budget_nsw::Result;

fn main() -> Result<()> {
    for name in FixtureName::ALL {
        let fx = gen_fixture(name);
        let mk = unperturbed(&fx.market);
        // prop1 is not money clearing; the descending-price algorithm
        // refuses it, the exhaustive search does not.
        let (prices, alloc) = if fx.money_clearing {
            let run = run_fptas(&mk)?;
            (run.state.prices, run.allocation)
        } else {
            let eq = brute_equilibrium(&fx.market)?.expect("prop1 has an equilibrium");
            (eq.prices, eq.allocation)
        };
        let shown: Vec<String> = prices.iter().map(to_text).collect();
        println!(
            "{name}: money clearing {}, prices {shown:?}, published family {}, verifier {}",
            fx.money_clearing,
            fx.in_published_family(&prices),
            if verify_equilibrium(&mk, &prices, &alloc).passed() {
                "pass"
            } else {
                "fail"
            },
        );
    }

    let prop2 = gen_fixture(FixtureName::Prop2);
    let mk = unperturbed(&prop2.market);
    for p in [[int(1), int(6)], [int(5), int(50)], [int(3), int(28)]] {
        let found = allocation_at_prices(&mk, &p)?
            .map(|x| verify_equilibrium(&mk, &p, &x).passed())
            .unwrap_or(false);
        println!(
            "prop2 at ({}, {}): equilibrium {found}",
            to_text(&p[0]),
            to_text(&p[1])
        );
    }
    Ok(())
}
