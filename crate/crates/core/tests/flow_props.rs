use num_traits::{Signed, Zero};
use proptest::prelude::*;

use budget_nsw::equilibrium::{run_fptas_with, FptasOptions, MarketState};
use budget_nsw::flow::lp::{self, LpOutcome};
use budget_nsw::flow::network::{cut_violation, is_feasible_flow};
use budget_nsw::flow::{
    max_flow_with_lower_bounds, min_factor, money_clearing, FlowNetwork, MaxFlow,
};
use budget_nsw::gen::gen_random_market;
use budget_nsw::instance::{perturb, unperturbed, MarketInstance};
use budget_nsw::oracle::{brute_money_clearing, lp_oracle};
use budget_nsw::rational::{frac, int, Rational};

type ArcSpec = (usize, usize, i64, Option<i64>);

fn network(nodes: usize, arcs: &[ArcSpec], balance: &[i64]) -> FlowNetwork {
    let mut net = FlowNetwork::new(nodes);
    for &(a, b, lo, span) in arcs {
        net.add_arc(a % nodes, b % nodes, int(lo), span.map(|s| int(lo + s)));
    }
    let mut rest = 0;
    for (v, &b) in balance.iter().enumerate().take(nodes - 1) {
        net.supply(v, int(b));
        rest += b;
    }
    net.demand(nodes - 1, int(rest));
    net
}

fn arcs() -> impl Strategy<Value = Vec<ArcSpec>> {
    prop::collection::vec(
        (
            0usize..6,
            0usize..6,
            0i64..3,
            prop::option::weighted(0.8, 0i64..5),
        ),
        0..12,
    )
}

/// Hoffman's condition over every node subset.
fn cuts_allow_flow(net: &FlowNetwork) -> bool {
    (0u32..1 << net.nodes).all(|mask| {
        let side: Vec<bool> = (0..net.nodes).map(|v| mask >> v & 1 == 1).collect();
        cut_violation(net, &side).is_none_or(|v| !v.is_positive())
    })
}

fn market() -> impl Strategy<Value = MarketInstance> {
    (1usize..=8, 1usize..=6).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(1u64..6, n),
            prop::collection::vec(
                prop::collection::vec(prop::option::weighted(0.35, 1u64..5), m),
                n,
            ),
            prop::collection::vec(1u64..7, m),
        )
            .prop_map(move |(b, u, d)| {
                let u = u
                    .into_iter()
                    .map(|row| row.into_iter().map(|x| x.unwrap_or(0)).collect())
                    .collect();
                MarketInstance::new(b, u, vec![10; n], d).unwrap()
            })
    })
}

proptest! {
    #[test]
    fn lower_bound_flow_matches_cut_enumeration(
        nodes in 2usize..=6,
        arcs in arcs(),
        balance in prop::collection::vec(-3i64..4, 6),
    ) {
        let net = network(nodes, &arcs, &balance);
        let sol = max_flow_with_lower_bounds(&net).unwrap();
        prop_assert_eq!(sol.feasible, cuts_allow_flow(&net));
        if sol.feasible {
            prop_assert!(is_feasible_flow(&net, &sol.flow));
        } else {
            let cut = sol.cut.expect("certificate");
            let v = cut_violation(&net, &cut).expect("finite boundary");
            prop_assert!(v.is_positive());
        }
    }

    #[test]
    fn money_clearing_matches_subset_enumeration(mk in market()) {
        prop_assert_eq!(money_clearing(&mk), brute_money_clearing(&mk).unwrap());
    }

    #[test]
    fn max_flow_value_bounded_by_cuts(
        arcs in prop::collection::vec((0usize..5, 0usize..5, 0i64..6), 0..14),
    ) {
        let mut mf = MaxFlow::new(5);
        for &(a, b, c) in &arcs {
            mf.add_edge(a, b, Some(int(c)));
        }
        let value = mf.run(0, 4).unwrap();
        let best = (0u32..1 << 5)
            .filter(|mask| mask & 1 == 1 && mask >> 4 & 1 == 0)
            .map(|mask| {
                arcs.iter()
                    .filter(|&&(a, b, _)| mask >> a & 1 == 1 && mask >> b & 1 == 0)
                    .map(|&(_, _, c)| c)
                    .sum::<i64>()
            })
            .min()
            .unwrap();
        prop_assert_eq!(value, int(best));
    }
}

#[test]
fn network_examples() {
    let mut net = FlowNetwork::new(2);
    net.add_arc(0, 1, int(1), Some(int(2)));
    net.supply(0, int(1));
    net.demand(1, int(1));
    let sol = max_flow_with_lower_bounds(&net).unwrap();
    assert!(sol.feasible);
    assert_eq!(sol.flow, vec![int(1)]);

    let mut net = FlowNetwork::new(2);
    net.add_arc(0, 1, int(2), Some(int(2)));
    net.supply(0, int(1));
    net.demand(1, int(1));
    assert!(!max_flow_with_lower_bounds(&net).unwrap().feasible);
}

#[test]
fn money_clearing_with_twelve_buyers() {
    for seed in 0..6 {
        let mk = gen_random_market(12, 5, 4, 500 + seed).unwrap();
        assert_eq!(
            money_clearing(&mk),
            brute_money_clearing(&mk).unwrap(),
            "seed {seed}"
        );
    }
    let big_caps =
        MarketInstance::new(vec![3; 12], vec![vec![1, 0]; 12], vec![5; 12], vec![36, 1]).unwrap();
    assert!(money_clearing(&big_caps));
}

#[test]
fn aggregate_min_factor() {
    // Uncapped buyers and goods, every edge MBB: x = Σ m / Σ p.
    let market = MarketInstance::new(
        vec![1, 2],
        vec![vec![1, 1], vec![1, 1]],
        vec![50, 50],
        vec![10, 10],
    )
    .unwrap();
    let mk = unperturbed(&market);
    let state = MarketState::new(vec![int(3), int(3)], vec![vec![frac(3, 2); 2]; 2]);
    let alphas = state.alphas(&mk);
    let (x, system) = min_factor(&mk, &state, &alphas, &[0, 1], &[0, 1]).unwrap();
    assert_eq!(x, frac(1, 2));
    assert_eq!(lp_oracle(&system.lp).unwrap().value(), Some(&frac(1, 2)));
}

#[test]
fn min_factor_is_tight_on_captured_systems() {
    let shrink = Rational::from_integer(1.into()) - frac(1, 1_000_000);
    let mut checked = 0;
    for seed in 0..60 {
        let n = 2 + (seed % 2) as usize;
        let market = gen_random_market(n, 3, 6, 9000 + seed).unwrap();
        if !money_clearing(&market) {
            continue;
        }
        let mk = perturb(&market, &frac(1, 4)).unwrap();
        let opts = FptasOptions {
            capture_lps: true,
            ..FptasOptions::default()
        };
        let run = run_fptas_with(&mk, &opts).unwrap();
        for sys in run.captured.iter().take(8) {
            let x = match lp::solve(&sys.lp) {
                LpOutcome::Optimal { value, .. } => value,
                other => panic!("seed {seed}: {other:?}"),
            };
            assert!(!matches!(
                lp_oracle(&sys.with_fixed_x(&x)).unwrap(),
                LpOutcome::Infeasible
            ));
            if !x.is_zero() {
                let below = &x * &shrink;
                assert_eq!(
                    lp_oracle(&sys.with_fixed_x(&below)).unwrap(),
                    LpOutcome::Infeasible
                );
            }
            checked += 1;
        }
        let alphas = run.state.alphas(&mk);
        for j in 0..mk.goods() {
            assert!(
                run.state.good_surplus(&mk, j).is_zero(),
                "seed {seed} good {j}"
            );
        }
        for i in 0..mk.buyers() {
            assert!(!run.state.buyer_surplus(&mk, &alphas[i], i).is_negative());
        }
    }
    assert!(checked >= 30, "only {checked} systems");
}
