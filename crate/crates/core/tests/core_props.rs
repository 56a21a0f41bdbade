use num_bigint::BigInt;
use proptest::prelude::*;

use budget_nsw::instance::{
    cap_valuations, nsw_value, perturb, Allocation, MarketInstance, NswInstance,
};
use budget_nsw::io::{parse_state, write_state, StateFile};
use budget_nsw::rational::{self, frac, int, Rational};

fn rat() -> impl Strategy<Value = Rational> {
    (any::<i64>(), 1i64..=i64::MAX)
        .prop_map(|(n, d)| Rational::new(BigInt::from(n), BigInt::from(d)))
}

fn nsw_instance() -> impl Strategy<Value = NswInstance> {
    (1usize..4, 1usize..5).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(prop::collection::vec(0u64..20, m), n),
            prop::collection::vec(1u64..25, n),
        )
            .prop_map(|(v, c)| NswInstance::new(v, c).unwrap())
    })
}

proptest! {
    #[test]
    fn rational_text_round_trip(r in rat()) {
        prop_assert_eq!(rational::parse(&rational::to_text(&r)), Some(r));
    }

    #[test]
    fn state_file_round_trip(
        n in 1usize..4,
        m in 1usize..4,
        cells in prop::collection::vec((0i64..50, 1i64..50), 16),
        shadow in prop::collection::vec(prop::option::of(1i64..30), 4),
        eps in (1i64..10, 1i64..100),
    ) {
        let x: Vec<Vec<Rational>> = (0..n)
            .map(|i| (0..m).map(|j| { let (a, b) = cells[i * 4 + j]; frac(a, b) }).collect())
            .collect();
        let prices = (0..m).map(|j| frac(cells[12 + j % 4].1, 3)).collect();
        let state = StateFile {
            epsilon: frac(eps.0, eps.1),
            prices,
            allocation: Allocation::from_matrix(x),
            shadow_prices: shadow[..m].iter().map(|s| s.map(int)).collect(),
        };
        let text = write_state(&state);
        let back = parse_state(&text).unwrap();
        prop_assert_eq!(&back, &state);
        prop_assert_eq!(write_state(&back), text);
    }

    #[test]
    fn cap_valuations_idempotent(inst in nsw_instance()) {
        let once = cap_valuations(&inst);
        prop_assert!(once.is_capped());
        prop_assert_eq!(cap_valuations(&once), once);
    }

    #[test]
    fn perturbation_brackets_utility(
        rows in prop::collection::vec(prop::collection::vec(0u64..200, 3), 1..4),
        eps in (1i64..8, 1i64..16),
    ) {
        let n = rows.len();
        let market = MarketInstance::new(vec![1; n], rows.clone(), vec![1000; n], vec![5; 3]).unwrap();
        let e = frac(eps.0, eps.1);
        let mk = perturb(&market, &e).unwrap();
        let base = Rational::from_integer(1.into()) + &e;
        for (i, row) in rows.iter().enumerate() {
            for (j, &u) in row.iter().enumerate() {
                let ut = mk.utility(i, j);
                let u = rational::uint(u);
                if u == rational::zero() {
                    prop_assert_eq!(ut, &rational::zero());
                    continue;
                }
                prop_assert!(&u <= ut);
                prop_assert!(ut / &base < u || mk.exponents[i][j] == Some(1));
                let k = mk.exponents[i][j].unwrap();
                prop_assert_eq!(ut, &rational::pow(&base, k));
            }
        }
    }

    #[test]
    fn nsw_grows_when_an_item_is_added(
        inst in nsw_instance(),
        owners in prop::collection::vec(0usize..4, 4),
        extra in 0usize..4,
        to in 0usize..4,
    ) {
        let n = inst.agents();
        let m = inst.items();
        let j = extra % m;
        let mut owner: Vec<Option<usize>> = (0..m).map(|k| Some(owners[k] % n)).collect();
        owner[j] = None;
        let without = nsw_value(&inst, &Allocation::from_assignment(n, &owner));
        owner[j] = Some(to % n);
        let with = nsw_value(&inst, &Allocation::from_assignment(n, &owner));
        prop_assert!(without.product <= with.product);
    }
}

#[test]
fn perturbation_examples() {
    let market =
        MarketInstance::new(vec![1], vec![vec![3, 4, 1]], vec![10], vec![1, 1, 1]).unwrap();
    let mk = perturb(&market, &int(1)).unwrap();
    assert_eq!(mk.utility(0, 0), &int(4));
    assert_eq!(mk.utility(0, 1), &int(4));
    let mk = perturb(&market, &frac(1, 2)).unwrap();
    assert_eq!(mk.utility(0, 2), &frac(3, 2));
    assert_eq!(mk.exponents[0][2], Some(1));
}

#[test]
fn integral_values_survive_capping() {
    let inst = NswInstance::new(vec![vec![9, 2, 5], vec![1, 7, 7]], vec![6, 8]).unwrap();
    let capped = cap_valuations(&inst);
    for a in 0..2usize {
        for b in 0..2usize {
            for c in 0..2usize {
                let alloc = Allocation::from_assignment(2, &[Some(a), Some(b), Some(c)]);
                assert_eq!(nsw_value(&inst, &alloc), nsw_value(&capped, &alloc));
            }
        }
    }
}
