//! Equilibrium of the perturbed market with utility caps ignored.
//!
//! Ascending prices: every good stays fully paid at its active price while
//! buyers may hold unspent budget. Goods that can pass money to a buyer with
//! unspent budget rise by a common factor until a new MBB edge appears, an
//! earning cap binds, or a subset of them becomes tight.

use num_traits::{One, Signed, Zero};

use crate::equilibrium::state::MarketState;
use crate::error::{Error, Result};
use crate::flow::money_clearing;
use crate::flow::network::MaxFlow;
use crate::instance::PerturbedMarket;
use crate::rational::{Ratio, Rational};

/// Max-flow over the MBB graph with goods supplying `p_j^a` and buyers
/// absorbing up to `m_i`.
struct SpendingFlow {
    mf: MaxFlow,
    value: Rational,
    edges: Vec<(usize, usize, usize)>,
}

fn spending_flow(
    mk: &PerturbedMarket,
    prices: &[Rational],
    goods: &[bool],
    buyers: &[bool],
) -> Result<SpendingFlow> {
    let n = mk.buyers();
    let m = mk.goods();
    let s = n + m;
    let t = s + 1;
    let mut mf = MaxFlow::new(n + m + 2);
    let state = MarketState::new(prices.to_vec(), vec![vec![Rational::zero(); m]; n]);
    for j in (0..m).filter(|&j| goods[j]) {
        mf.add_edge(s, n + j, Some(state.active_price(mk, j)));
    }
    let mut edges = Vec::new();
    for i in (0..n).filter(|&i| buyers[i]) {
        let alpha = state.alpha(mk, i);
        for j in (0..m).filter(|&j| goods[j]) {
            if state.is_mbb(mk, &alpha, i, j) {
                edges.push((i, j, mf.add_edge(n + j, i, None)));
            }
        }
        mf.add_edge(i, t, Some(mk.budget(i).clone()));
    }
    let value = mf.run(s, t)?;
    Ok(SpendingFlow { mf, value, edges })
}

/// Computes prices and a flow in which every buyer spends exactly `m_i` on
/// MBB goods and every good earns exactly `min(p_j, d_j)`. Goods nobody
/// values get price zero.
pub fn solve_no_utility_caps(mk: &PerturbedMarket) -> Result<MarketState> {
    if !money_clearing(&mk.base) {
        return Err(Error::NotMoneyClearing);
    }
    let n = mk.buyers();
    let m = mk.goods();
    let live: Vec<bool> = (0..m)
        .map(|j| (0..n).any(|i| mk.utility(i, j).is_positive()))
        .collect();
    let all_buyers = vec![true; n];

    let min_budget = (0..n).map(|i| mk.budget(i).clone()).min().expect("buyers");
    let p0 = min_budget / Rational::from_integer(m.into());
    let mut prices: Vec<Rational> = live
        .iter()
        .map(|&l| if l { p0.clone() } else { Rational::zero() })
        .collect();
    // Lower each live good until it is MBB for someone.
    let start = MarketState::new(prices.clone(), vec![vec![Rational::zero(); m]; n]);
    let alphas = start.alphas(mk);
    for j in (0..m).filter(|&j| live[j]) {
        let mut best = Rational::zero();
        for i in 0..n {
            let u = mk.utility(i, j);
            if u.is_zero() {
                continue;
            }
            let a = alphas[i].finite().expect("positive prices");
            let cand = u / a;
            if cand > best {
                best = cand;
            }
        }
        prices[j] = best;
    }

    let total_budget: Rational = (0..n).map(|i| mk.budget(i).clone()).sum();
    let guard = 64 * (n + m + 1) * (n + m + 1) * (n + m + 1);
    for _ in 0..guard {
        let flow = spending_flow(mk, &prices, &live, &all_buyers)?;
        if flow.value == total_budget {
            let mut f = vec![vec![Rational::zero(); m]; n];
            for &(i, j, id) in &flow.edges {
                f[i][j] = flow.mf.flow(id).clone();
            }
            let state = MarketState::new(prices, f);
            for j in (0..m).filter(|&j| live[j]) {
                if !state.good_surplus(mk, j).is_zero() {
                    return Err(Error::internal("good not fully paid after ascent"));
                }
            }
            return Ok(state);
        }
        // Nodes that can still pass money to the sink are the active part.
        let t = n + m + 1;
        let reach = flow.mf.reaching(t);
        let active_buyers: Vec<bool> = (0..n).map(|i| reach[i]).collect();
        let active_goods: Vec<bool> = (0..m).map(|j| live[j] && reach[n + j]).collect();
        prices = raise(mk, &prices, &live, &active_buyers, &active_goods)?;
    }
    Err(Error::internal(
        "ascending-price initializer did not terminate",
    ))
}

/// One multiplicative raise of the active goods.
fn raise(
    mk: &PerturbedMarket,
    prices: &[Rational],
    live: &[bool],
    buyers: &[bool],
    goods: &[bool],
) -> Result<Vec<Rational>> {
    let n = mk.buyers();
    let m = mk.goods();
    let state = MarketState::new(prices.to_vec(), vec![vec![Rational::zero(); m]; n]);
    let mut x: Option<Rational> = None;
    let mut consider = |cand: Rational| {
        if x.as_ref().map_or(true, |cur| cand < *cur) {
            x = Some(cand);
        }
    };
    for i in (0..n).filter(|&i| buyers[i]) {
        let alpha = match state.alpha(mk, i) {
            Ratio::Finite(a) => a,
            Ratio::Infinite => return Err(Error::internal("zero price on a live good")),
        };
        for j in (0..m).filter(|&j| live[j] && !goods[j]) {
            let u = mk.utility(i, j);
            if u.is_positive() {
                consider(&alpha * &prices[j] / u);
            }
        }
    }
    for j in (0..m).filter(|&j| goods[j]) {
        if prices[j] < *mk.earning_cap(j) {
            consider(mk.earning_cap(j) / &prices[j]);
        }
    }

    let scaled = |x: &Rational| -> Vec<Rational> {
        prices
            .iter()
            .enumerate()
            .map(|(j, p)| if goods[j] { p * x } else { p.clone() })
            .collect()
    };

    // Tight-set iteration on the active subsystem.
    let mut set: Vec<bool> = goods.to_vec();
    let mut bound = tight_ratio(mk, &state, buyers, &set);
    loop {
        let cand = match (&x, &bound) {
            (Some(a), Some(b)) => a.clone().min(b.clone()),
            (Some(a), None) => a.clone(),
            (None, Some(b)) => b.clone(),
            (None, None) => {
                return Err(Error::internal("no event bounds the price increase"));
            }
        };
        if cand <= Rational::one() {
            return Err(Error::internal("price increase factor not above one"));
        }
        let trial = scaled(&cand);
        let flow = spending_flow(mk, &trial, goods, buyers)?;
        let trial_state = MarketState::new(trial.clone(), vec![vec![Rational::zero(); m]; n]);
        let supply: Rational = (0..m)
            .filter(|&j| goods[j])
            .map(|j| trial_state.active_price(mk, j))
            .sum();
        if flow.value == supply {
            return Ok(trial);
        }
        let side = flow.mf.reachable_from(n + m);
        set = (0..m).map(|j| goods[j] && side[n + j]).collect();
        let next = tight_ratio(mk, &state, buyers, &set);
        match next {
            Some(b) if b < cand => bound = Some(b),
            _ => return Err(Error::internal("tight-set iteration stalled")),
        }
    }
}

/// `(m(Γ(S)) − d(S capped)) / p(S uncapped)` for a good set `S`, the factor
/// at which `S` would become tight. `None` when no good in `S` is uncapped.
fn tight_ratio(
    mk: &PerturbedMarket,
    state: &MarketState,
    buyers: &[bool],
    set: &[bool],
) -> Option<Rational> {
    let n = mk.buyers();
    let m = mk.goods();
    let mut budget = Rational::zero();
    for i in (0..n).filter(|&i| buyers[i]) {
        let alpha = state.alpha(mk, i);
        if (0..m).any(|j| set[j] && state.is_mbb(mk, &alpha, i, j)) {
            budget += mk.budget(i);
        }
    }
    let mut uncapped = Rational::zero();
    for j in (0..m).filter(|&j| set[j]) {
        if state.prices[j] < *mk.earning_cap(j) {
            uncapped += &state.prices[j];
        } else {
            budget -= mk.earning_cap(j);
        }
    }
    if uncapped.is_zero() {
        None
    } else {
        Some(budget / uncapped)
    }
}
