//! The money-clearing test and the two market subproblems of the
//! descending-price solver: the minimum price factor and a feasible flow.

use num_traits::{One, Signed, Zero};

use crate::equilibrium::state::MarketState;
use crate::error::{Error, Result};
use crate::flow::lp::{self, LinearProgram, LpOutcome, Sense};
use crate::flow::network::{max_flow_with_lower_bounds, FlowNetwork, MaxFlow};
use crate::instance::{MarketInstance, PerturbedMarket};
use crate::rational::{self, Ratio, Rational};

/// Whether every buyer subset's budgets fit within the earning caps of the
/// goods it is interested in. One max-flow: source → buyer (m_i), buyer →
/// good (unbounded, where u_ij > 0), good → sink (d_j).
pub fn money_clearing(market: &MarketInstance) -> bool {
    let n = market.buyers();
    let m = market.goods();
    let s = n + m;
    let t = s + 1;
    let mut mf = MaxFlow::new(n + m + 2);
    for i in 0..n {
        mf.add_edge(s, i, Some(rational::uint(market.budgets[i])));
        for j in 0..m {
            if market.utilities[i][j] > 0 {
                mf.add_edge(i, n + j, None);
            }
        }
    }
    for j in 0..m {
        mf.add_edge(n + j, t, Some(rational::uint(market.earning_caps[j])));
    }
    let total: Rational = market.budgets.iter().map(|&b| rational::uint(b)).sum();
    let value = mf.run(s, t).expect("capacities on both ends are finite");
    value == total
}

/// The minimum-factor LP together with the edge list that names its
/// variables. Variable `k < edges.len()` is `g_e` for `edges[k]`; the last
/// variable is `x`.
#[derive(Clone, Debug)]
pub struct MinFactorLp {
    pub lp: LinearProgram,
    pub edges: Vec<(usize, usize)>,
}

impl MinFactorLp {
    pub fn x_var(&self) -> usize {
        self.edges.len()
    }

    /// The current flow on `B̂ × Ĝ` with `x = 1`, which must be feasible.
    pub fn initial_point(&self, state: &MarketState) -> Vec<Rational> {
        let mut y: Vec<Rational> = self
            .edges
            .iter()
            .map(|&(i, j)| state.flow[i][j].clone())
            .collect();
        y.push(Rational::one());
        y
    }

    /// The same constraint system with `x` fixed, as a feasibility problem.
    pub fn with_fixed_x(&self, x: &Rational) -> LinearProgram {
        let mut fixed = self.lp.clone();
        fixed.objective = vec![Rational::zero(); fixed.num_vars];
        fixed.constrain(vec![(self.x_var(), Rational::one())], Sense::Eq, x.clone());
        fixed
    }
}

/// Builds the LP: minimize `x` subject to the goods in `Ĝ` being paid
/// `d_j` (capped) or `x·p_j` (uncapped), capped buyers in `B̂` spending
/// `x·c_i·λ_i` and uncapped ones `m_i` (with equality on `Z`, at least
/// otherwise), over MBB edges of `B̂ × Ĝ`.
pub fn min_factor_lp(
    mk: &PerturbedMarket,
    state: &MarketState,
    alphas: &[Ratio],
    bhat: &[usize],
    ghat: &[usize],
) -> Result<MinFactorLp> {
    let mut edges = Vec::new();
    for &i in bhat {
        for &j in ghat {
            if state.is_mbb(mk, &alphas[i], i, j) {
                edges.push((i, j));
            }
        }
    }
    let x = edges.len();
    let mut lp = LinearProgram::new(x + 1);
    lp.objective[x] = Rational::one();
    for &j in ghat {
        let coeffs: Vec<_> = edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.1 == j)
            .map(|(k, _)| (k, Rational::one()))
            .collect();
        if state.good_capped(mk, j) {
            lp.constrain(coeffs, Sense::Eq, mk.earning_cap(j).clone());
        } else {
            let mut coeffs = coeffs;
            coeffs.push((x, -state.prices[j].clone()));
            lp.constrain(coeffs, Sense::Eq, Rational::zero());
        }
    }
    for &i in bhat {
        let mut coeffs: Vec<_> = edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.0 == i)
            .map(|(k, _)| (k, Rational::one()))
            .collect();
        let sense = if state.zero_surplus[i] {
            Sense::Eq
        } else {
            Sense::Ge
        };
        if state.buyer_capped(mk, &alphas[i], i) {
            let a = alphas[i]
                .finite()
                .ok_or_else(|| Error::internal("unfrozen buyer with infinite MBB ratio"))?;
            coeffs.push((x, -(mk.cap(i) / a)));
            lp.constrain(coeffs, sense, Rational::zero());
        } else {
            lp.constrain(coeffs, sense, mk.budget(i).clone());
        }
    }
    Ok(MinFactorLp { lp, edges })
}

/// The least `x` consistent with the current configuration of `B̂ × Ĝ`.
pub fn min_factor(
    mk: &PerturbedMarket,
    state: &MarketState,
    alphas: &[Ratio],
    bhat: &[usize],
    ghat: &[usize],
) -> Result<(Rational, MinFactorLp)> {
    let system = min_factor_lp(mk, state, alphas, bhat, ghat)?;
    if !system.lp.is_feasible(&system.initial_point(state)) {
        return Err(Error::internal(
            "current flow is not feasible for the minimum-factor LP",
        ));
    }
    match lp::solve(&system.lp) {
        LpOutcome::Optimal { value, .. } => Ok((value, system)),
        LpOutcome::Infeasible => Err(Error::internal("minimum-factor LP infeasible")),
        LpOutcome::Unbounded => Err(Error::internal("minimum-factor LP unbounded")),
    }
}

/// The reverse flow network as a bounded flow problem over the unfrozen
/// part of the market: source → good fixed at `p_j^a`, good → buyer
/// unbounded on MBB edges, buyer → sink at least `m_i^a` (exactly, on `Z`).
/// Returns the network and the arc id of every MBB edge.
pub fn feasible_flow_network(
    mk: &PerturbedMarket,
    state: &MarketState,
    alphas: &[Ratio],
) -> (FlowNetwork, Vec<(usize, usize, usize)>) {
    let n = state.buyers();
    let m = state.goods();
    let s = n + m;
    let t = s + 1;
    let mut net = FlowNetwork::new(n + m + 2);
    let mut edges = Vec::new();
    for j in 0..m {
        if state.frozen_goods[j] {
            continue;
        }
        let pa = state.active_price(mk, j);
        if pa.is_positive() {
            net.add_arc(s, n + j, pa.clone(), Some(pa));
        }
    }
    for i in 0..n {
        if state.frozen_buyers[i] {
            continue;
        }
        for j in 0..m {
            if !state.frozen_goods[j] && state.is_mbb(mk, &alphas[i], i, j) {
                let id = net.add_arc(n + j, i, Rational::zero(), None);
                edges.push((i, j, id));
            }
        }
        let ma = state.active_budget(mk, &alphas[i], i);
        let upper = if state.zero_surplus[i] {
            Some(ma.clone())
        } else {
            None
        };
        net.add_arc(i, t, ma, upper);
    }
    net.add_arc(t, s, Rational::zero(), None);
    (net, edges)
}

/// A money flow on MBB edges that pays every good its active price and
/// every buyer at least its active budget, exactly on `Z`. Frozen rows and
/// columns stay zero.
pub fn feasible_flow(
    mk: &PerturbedMarket,
    state: &MarketState,
    alphas: &[Ratio],
) -> Result<Vec<Vec<Rational>>> {
    let (net, edges) = feasible_flow_network(mk, state, alphas);
    let sol = max_flow_with_lower_bounds(&net)?;
    if !sol.feasible {
        return Err(Error::internal("no feasible flow at the current prices"));
    }
    let mut flow = vec![vec![Rational::zero(); state.goods()]; state.buyers()];
    for (i, j, id) in edges {
        flow[i][j] = sol.flow[id].clone();
    }
    Ok(flow)
}
