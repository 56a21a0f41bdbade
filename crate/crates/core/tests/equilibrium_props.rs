use num_traits::{Signed, Zero};
use proptest::prelude::*;

use budget_nsw::equilibrium::{
    allocation_at_prices, run_fptas, verify_approx_equilibrium, verify_equilibrium, FptasRun,
    MarketState,
};
use budget_nsw::flow::money_clearing;
use budget_nsw::gen::{gen_fixture, gen_random_market, FixtureName};
use budget_nsw::instance::{perturb, unperturbed, Allocation, MarketInstance, PerturbedMarket};
use budget_nsw::rational::{frac, int, Rational};

fn solved(
    n: usize,
    m: usize,
    seed: u64,
    eps: &Rational,
) -> Option<(MarketInstance, PerturbedMarket, FptasRun)> {
    let market = gen_random_market(n, m, 7, seed).unwrap();
    if !money_clearing(&market) {
        return None;
    }
    let mk = perturb(&market, eps).unwrap();
    let run = run_fptas(&mk).unwrap();
    Some((market, mk, run))
}

/// Prices at the start and after every step.
fn price_path(run: &FptasRun) -> Vec<Vec<Rational>> {
    std::iter::once(run.initial.prices.clone())
        .chain(run.trace.iter().map(|t| t.prices.clone()))
        .collect()
}

fn capped_buyers(mk: &PerturbedMarket, prices: &[Rational]) -> Vec<bool> {
    let probe = MarketState::new(
        prices.to_vec(),
        vec![vec![Rational::zero(); prices.len()]; mk.buyers()],
    );
    (0..mk.buyers())
        .map(|i| probe.buyer_capped(mk, &probe.alpha(mk, i), i))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fptas_output_is_an_equilibrium(n in 1usize..4, m in 1usize..5, seed in 0u64..100_000, e in 1i64..5) {
        let eps = frac(1, 2 * e);
        let Some((market, mk, run)) = solved(n, m, seed, &eps) else { return Ok(()) };
        let exact = verify_equilibrium(&mk, &run.state.prices, &run.allocation);
        prop_assert!(exact.passed(), "{}", exact);
        let approx = verify_approx_equilibrium(&market, &run.state.prices, &run.allocation, &eps);
        prop_assert!(approx.passed(), "{}", approx);
    }

    #[test]
    fn trace_invariants(n in 2usize..4, m in 2usize..5, seed in 0u64..100_000) {
        let Some((_, mk, run)) = solved(n, m, seed, &frac(1, 4)) else { return Ok(()) };
        let path = price_path(&run);
        for w in path.windows(2) {
            for j in 0..mk.goods() {
                prop_assert!(w[1][j] <= w[0][j], "price of good {} rose", j);
                let uncapped = w[0][j] <= *mk.earning_cap(j);
                prop_assert!(!uncapped || w[1][j] <= *mk.earning_cap(j));
            }
            let before = capped_buyers(&mk, &w[0]);
            let after = capped_buyers(&mk, &w[1]);
            for i in 0..mk.buyers() {
                prop_assert!(!before[i] || after[i], "buyer {} lost its cap", i);
            }
        }
        for t in &run.trace {
            prop_assert!(t.x.is_positive() && t.x < int(1));
            prop_assert!(t.alpha_after > t.alpha_before, "iteration {}: MBB ratio did not grow", t.iter);
        }
        for (k, w) in run.trace.windows(2).enumerate() {
            let released = run.releases.iter().any(|r| r.iter == k + 1);
            for i in 0..mk.buyers() {
                if w[0].settled[i] && !w[1].settled[i] {
                    prop_assert!(released, "buyer {} left Z at step {} without a release", i, k + 2);
                }
            }
        }
        for r in &run.releases {
            for &i in &r.buyers {
                let prices = &path[r.iter];
                prop_assert!(capped_buyers(&mk, prices)[i]);
            }
        }
    }
}

#[test]
fn detached_buyers_are_capped() {
    let mut seen = 0;
    for seed in 0..400u64 {
        let Some((_, mk, run)) = solved(3, 3, 40_000 + seed, &frac(1, 1)) else {
            continue;
        };
        let path = price_path(&run);
        for d in &run.detachments {
            let prices = &path[d.iter];
            let capped = capped_buyers(&mk, prices);
            for &i in &d.buyers {
                assert!(capped[i], "seed {seed}: detached buyer {i} uncapped");
            }
            for &j in &d.goods {
                assert!(run.state.prices[j].is_zero());
            }
            seen += 1;
        }
    }
    eprintln!("detachments checked: {seen}");
}

#[test]
fn verifier_on_published_equilibria() {
    let p1 = gen_fixture(FixtureName::Prop1);
    let mk1 = unperturbed(&p1.market);
    let x = Allocation::from_matrix(vec![vec![frac(1, 2)]]);
    assert!(verify_equilibrium(&mk1, &[int(2)], &x).passed());
    assert!(!verify_equilibrium(&mk1, &[int(3)], &x).passed());

    let p2 = gen_fixture(FixtureName::Prop2);
    let mk2 = unperturbed(&p2.market);
    let at = |a: i64, b: i64| allocation_at_prices(&mk2, &[int(a), int(b)]).unwrap();
    let alloc = at(1, 4).expect("(1, 4) is an equilibrium price vector");
    assert!(verify_equilibrium(&mk2, &[int(1), int(4)], &alloc).passed());
    assert!(at(1, 8).is_none());
    assert!(at(3, 28).is_none());
    assert!(at(5, 50).is_some());
}

#[test]
fn approximate_demand_threshold() {
    // One buyer, one good: optimal utility min(c, m·α) = 4 at p = 2.
    let market = MarketInstance::new(vec![2], vec![vec![4]], vec![4], vec![2]).unwrap();
    let prices = [int(2)];
    let full = Allocation::from_matrix(vec![vec![int(1)]]);
    assert!(verify_approx_equilibrium(&market, &prices, &full, &int(0)).passed());
    let half = Allocation::from_matrix(vec![vec![frac(1, 2)]]);
    assert!(!verify_approx_equilibrium(&market, &prices, &half, &frac(1, 4)).passed());
}

#[test]
fn perturbed_equilibrium_is_approximate_for_the_original() {
    let mut solved_count = 0;
    for seed in 0..40 {
        let Some((market, _, run)) = solved(3, 4, 70_000 + seed, &frac(1, 3)) else {
            continue;
        };
        let report =
            verify_approx_equilibrium(&market, &run.state.prices, &run.allocation, &frac(1, 3));
        assert!(report.passed(), "seed {seed}: {report}");
        solved_count += 1;
    }
    assert!(solved_count > 10);
}

#[test]
fn release_is_the_only_way_out_of_z() {
    let (_, _, run) = solved(2, 3, 5, &frac(1, 4)).expect("money clearing");
    assert_eq!(run.releases.len(), 1);
    let r = &run.releases[0];
    let before = &run.trace[r.iter - 1].settled;
    let after = &run.trace[r.iter].settled;
    for &i in &r.buyers {
        assert!(before[i] && !after[i]);
    }
    for w in run.trace.windows(2).filter(|w| w[1].iter != r.iter + 1) {
        assert!((0..w[0].settled.len()).all(|i| !w[0].settled[i] || w[1].settled[i]));
    }
}
