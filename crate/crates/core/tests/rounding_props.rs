use num_traits::{One, Signed};
use proptest::prelude::*;

use budget_nsw::gen::gen_random;
use budget_nsw::instance::{Allocation, NswInstance, PerturbedMarket};
use budget_nsw::oracle::brute_nsw;
use budget_nsw::rational::{frac, Rational};
use budget_nsw::rounding::{find_cycle, pipeline, PipelineOutput};

fn utility(mk: &PerturbedMarket, alloc: &Allocation, i: usize) -> Rational {
    (0..mk.goods())
        .map(|j| mk.utility(i, j) * alloc.get(i, j))
        .sum()
}

fn instance() -> impl Strategy<Value = NswInstance> {
    (1usize..=3, 0usize..3, 2u64..12, any::<u64>())
        .prop_map(|(n, extra, cmax, seed)| gen_random(n, n + extra, 8, cmax, seed).unwrap())
}

fn run(inst: &NswInstance) -> PipelineOutput {
    pipeline(inst, &frac(1, 4)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forest_keeps_utilities_and_sales(inst in instance()) {
        let out = run(&inst);
        let Some(d) = out.details else { return Ok(()) };
        let before = &d.run.allocation;
        let after = &d.forest_allocation;
        prop_assert!(find_cycle(after.matrix()).is_none());
        for i in 0..d.market.buyers() {
            prop_assert_eq!(utility(&d.market, before, i), utility(&d.market, after, i));
            for j in 0..d.market.goods() {
                prop_assert!(!after.get(i, j).is_positive() || before.get(i, j).is_positive());
            }
        }
        for j in 0..d.market.goods() {
            prop_assert_eq!(before.sold(j), after.sold(j));
        }
    }

    #[test]
    fn normalized_values_respect_price_and_cap(inst in instance()) {
        let Some(d) = run(&inst).details else { return Ok(()) };
        let norm = &d.normalized;
        for i in (0..norm.agents()).filter(|&i| !norm.b0[i]) {
            for j in 0..norm.items() {
                let bound = norm.prices[j].clone().min(norm.caps[i].clone());
                prop_assert!(norm.values[i][j] <= bound, "V[{}][{}] above min(p, C)", i, j);
            }
        }
        for (j, p) in norm.prices.iter().enumerate() {
            prop_assert_eq!(p.is_positive(), !norm.g0[j]);
        }
    }

    #[test]
    fn rounding_is_integral_and_lemmas_hold(inst in instance()) {
        let out = run(&inst);
        let owner = out.allocation.assignment().expect("integral");
        prop_assert_eq!(owner.len(), inst.items());
        prop_assert!(owner.iter().all(|o| o.is_some_and(|i| i < inst.agents())));
        let Some(d) = out.details else { return Ok(()) };
        let l = &d.lemmas;
        for (name, t) in [("tree", &l.tree), ("half", &l.half), ("tree0", &l.tree0), ("half0", &l.half0), ("degrees", &l.degrees)] {
            prop_assert!(t.passed(), "{} failed: {}", name, l);
        }
        prop_assert!(l.degrees.checked > 0);
    }

    #[test]
    fn upper_bound_dominates_optimum(inst in instance()) {
        let out = run(&inst);
        let opt = brute_nsw(&inst).unwrap().product;
        prop_assert!(out.certificate.passed());
        if out.certificate.opt_zero {
            prop_assert_eq!(opt, Rational::from_integer(0.into()));
        } else {
            prop_assert!(opt <= out.certificate.upper_bound_product);
        }
    }

    #[test]
    fn certificate_survives_agent_scaling(inst in instance(), gamma in 2u64..6, who in 0usize..3) {
        let i = who % inst.agents();
        let mut values = inst.values().to_vec();
        let mut caps = inst.caps().to_vec();
        for v in values[i].iter_mut() {
            *v *= gamma;
        }
        caps[i] *= gamma;
        let scaled = NswInstance::new(values, caps).unwrap();
        prop_assert!(run(&inst).certificate.passed());
        prop_assert!(run(&scaled).certificate.passed());
    }
}

#[test]
fn single_agent_takes_everything() {
    let inst = NswInstance::new(vec![vec![3, 0, 5, 2]], vec![7]).unwrap();
    let out = run(&inst);
    assert_eq!(out.allocation.assignment().unwrap(), vec![Some(0); 4]);
    assert_eq!(
        out.certificate.nsw_product,
        brute_nsw(&inst).unwrap().product
    );
}

#[test]
fn non_clearing_instance_gets_opt_zero() {
    let inst = NswInstance::new(vec![vec![1], vec![1]], vec![1, 1]).unwrap();
    let out = run(&inst);
    assert!(out.certificate.opt_zero && out.certificate.passed());
    assert!(out.details.is_none());
    assert!(brute_nsw(&inst).unwrap().product < Rational::one());
}
