//! The descending-price algorithm for markets with earning and utility caps.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::equilibrium::init::solve_no_utility_caps;
use crate::equilibrium::state::MarketState;
use crate::error::{Error, Result};
use crate::flow::market_lp::{feasible_flow, min_factor, MinFactorLp};
use crate::flow::money_clearing;
use crate::instance::{Allocation, PerturbedMarket};
use crate::rational::{self, Ratio, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    NewMbbEdge,
    MinFactorBinding,
    GoodUncaps,
    BuyerCaps,
    PriceFloor,
}

impl EventKind {
    /// Whether the event ends an iteration of the continuous decrease. Cap
    /// changes and the floor clamp only split one iteration into steps.
    pub fn ends_iteration(self) -> bool {
        matches!(self, EventKind::NewMbbEdge | EventKind::MinFactorBinding)
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "NewMbbEdge" => EventKind::NewMbbEdge,
            "MinFactorBinding" => EventKind::MinFactorBinding,
            "GoodUncaps" => EventKind::GoodUncaps,
            "BuyerCaps" => EventKind::BuyerCaps,
            "PriceFloor" => EventKind::PriceFloor,
            _ => return None,
        })
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EventKind::NewMbbEdge => "NewMbbEdge",
            EventKind::MinFactorBinding => "MinFactorBinding",
            EventKind::GoodUncaps => "GoodUncaps",
            EventKind::BuyerCaps => "BuyerCaps",
            EventKind::PriceFloor => "PriceFloor",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    Edge(usize, usize),
    Goods(Vec<usize>),
    Good(usize),
    Buyer(usize),
}

/// The event that stops a price decrease, with the factor applied to `Ĝ`.
#[derive(Clone, Debug, PartialEq)]
pub struct EventOutcome {
    pub kind: EventKind,
    pub x: Rational,
    pub witness: Witness,
}

/// One inner iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceEntry {
    pub iter: usize,
    pub buyer: usize,
    pub kind: EventKind,
    pub x: Rational,
    /// Smallest positive price after the step.
    pub min_price: Rational,
    /// `α_k` before the step.
    pub alpha_before: Rational,
    /// `α_k` after the step.
    pub alpha_after: Rational,
    /// Prices after the step.
    pub prices: Vec<Rational>,
    /// Whether a cap status changed in this step (fewer LP shapes).
    pub cap_transition: bool,
    /// Buyers in `Z` after the step.
    pub settled: Vec<bool>,
}

impl TraceEntry {
    /// `iter <t> buyer <k> event <kind> x <rational> minprice <rational>`,
    /// with 1-based buyer index.
    pub fn line(&self) -> String {
        format!(
            "iter {} buyer {} event {} x {} minprice {}",
            self.iter,
            self.buyer + 1,
            self.kind,
            rational::to_text(&self.x),
            rational::to_text(&self.min_price)
        )
    }
}

/// A block of buyers and goods whose prices were set to zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Detachment {
    pub iter: usize,
    pub buyers: Vec<usize>,
    pub goods: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct FptasOptions {
    /// Keep every minimum-factor LP for later cross-checking.
    pub capture_lps: bool,
    /// Hard cap on inner iterations; `None` derives one from the instance.
    pub max_iterations: Option<usize>,
}

impl Default for FptasOptions {
    fn default() -> Self {
        FptasOptions {
            capture_lps: false,
            max_iterations: None,
        }
    }
}

/// Capped zero-surplus buyers returned to the unsettled set because a
/// tight set of goods blocked any further decrease.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Release {
    /// Number of trace entries before the release.
    pub iter: usize,
    pub buyers: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct FptasRun {
    pub state: MarketState,
    pub allocation: Allocation,
    pub trace: Vec<TraceEntry>,
    pub detachments: Vec<Detachment>,
    pub releases: Vec<Release>,
    pub captured: Vec<MinFactorLp>,
    pub floor: Rational,
    /// State right after the initializer.
    pub initial: MarketState,
}

impl FptasRun {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

/// The price at which a block is detached. Never above `1/(n·Ũⁿ)`; lowered
/// further when some `c_i/m_i` exceeds `n`, so that every buyer of a
/// detached block is capped.
pub fn price_floor(mk: &PerturbedMarket) -> Rational {
    let n = mk.buyers();
    let mut base = Rational::one() / Rational::from_integer(n.into());
    for i in 0..n {
        let r = mk.budget(i) / mk.cap(i);
        if r < base {
            base = r;
        }
    }
    base / rational::pow(&mk.max_utility, n as u32)
}

/// Candidate events for a decrease of the prices in `Ĝ`; the one with the
/// largest factor is returned. Ties keep the earlier kind in declaration
/// order.
pub fn detect_events(
    mk: &PerturbedMarket,
    state: &MarketState,
    alphas: &[Ratio],
    bhat: &[bool],
    ghat: &[bool],
    floor: &Rational,
) -> Result<(EventOutcome, MinFactorLp)> {
    let n = state.buyers();
    let m = state.goods();
    let mut best: Option<EventOutcome> = None;
    let mut offer = |kind: EventKind, x: Rational, witness: Witness| {
        if best.as_ref().map_or(true, |b| x > b.x) {
            best = Some(EventOutcome { kind, x, witness });
        }
    };

    for i in (0..n).filter(|&i| !bhat[i] && !state.frozen_buyers[i]) {
        let Ratio::Finite(a) = &alphas[i] else {
            return Err(Error::internal("unfrozen buyer with infinite MBB ratio"));
        };
        for j in (0..m).filter(|&j| ghat[j]) {
            let u = mk.utility(i, j);
            if u.is_positive() {
                offer(
                    EventKind::NewMbbEdge,
                    u / (a * &state.prices[j]),
                    Witness::Edge(i, j),
                );
            }
        }
    }

    let bl: Vec<usize> = (0..n).filter(|&i| bhat[i]).collect();
    let gl: Vec<usize> = (0..m).filter(|&j| ghat[j]).collect();
    let (mf, lp) = min_factor(mk, state, alphas, &bl, &gl)?;
    offer(EventKind::MinFactorBinding, mf, Witness::Goods(gl.clone()));

    for &j in &gl {
        if state.good_capped(mk, j) {
            offer(
                EventKind::GoodUncaps,
                mk.earning_cap(j) / &state.prices[j],
                Witness::Good(j),
            );
        }
    }
    for &i in &bl {
        if !state.buyer_capped(mk, &alphas[i], i) {
            let a = alphas[i]
                .finite()
                .expect("uncapped buyers have finite ratio");
            offer(
                EventKind::BuyerCaps,
                mk.budget(i) * a / mk.cap(i),
                Witness::Buyer(i),
            );
        }
    }
    let min_hat = gl
        .iter()
        .map(|&j| &state.prices[j])
        .filter(|p| p.is_positive())
        .min()
        .ok_or_else(|| Error::internal("empty reach set of goods"))?;
    offer(
        EventKind::PriceFloor,
        floor / min_hat,
        Witness::Goods(gl.clone()),
    );

    Ok((best.expect("min factor always offered"), lp))
}

/// Runs the descending-price algorithm to an exact equilibrium of the
/// perturbed market.
pub fn run_fptas(mk: &PerturbedMarket) -> Result<FptasRun> {
    run_fptas_with(mk, &FptasOptions::default())
}

pub fn run_fptas_with(mk: &PerturbedMarket, opts: &FptasOptions) -> Result<FptasRun> {
    if !money_clearing(&mk.base) {
        return Err(Error::NotMoneyClearing);
    }
    let n = mk.buyers();
    let m = mk.goods();
    let mut state = solve_no_utility_caps(mk)?;
    let initial = state.clone();
    let floor = price_floor(mk);
    let limit = opts
        .max_iterations
        .unwrap_or_else(|| default_limit(mk, &floor));

    let mut trace = Vec::new();
    let mut detachments = Vec::new();
    let mut captured = Vec::new();
    let mut releases = Vec::new();

    let alphas = state.alphas(mk);
    for i in 0..n {
        state.zero_surplus[i] = state.buyer_surplus(mk, &alphas[i], i).is_zero();
    }

    while let Some(k) = (0..n).find(|&i| !state.zero_surplus[i]) {
        loop {
            let alphas = state.alphas(mk);
            if !state.buyer_surplus(mk, &alphas[k], k).is_positive() {
                break;
            }
            match state.min_positive_price() {
                Some(p) if *p > floor => {}
                _ => break,
            }
            if trace.len() >= limit {
                return Err(Error::internal(format!("iteration limit {limit} reached")));
            }
            let (bhat, ghat) = state.reach_sets(mk, &alphas, k);
            let (event, lp) = detect_events(mk, &state, &alphas, &bhat, &ghat, &floor)?;
            if opts.capture_lps {
                captured.push(lp);
            }
            if event.x >= Rational::one() && event.kind == EventKind::MinFactorBinding {
                let stuck: Vec<usize> = (0..n)
                    .filter(|&i| {
                        i != k
                            && bhat[i]
                            && state.zero_surplus[i]
                            && state.buyer_capped(mk, &alphas[i], i)
                    })
                    .collect();
                if !stuck.is_empty() {
                    for &i in &stuck {
                        state.zero_surplus[i] = false;
                    }
                    releases.push(Release {
                        iter: trace.len(),
                        buyers: stuck,
                    });
                    continue;
                }
            }
            if event.x >= Rational::one() || !event.x.is_positive() {
                return Err(Error::internal(format!(
                    "price factor {} outside (0, 1) at event {} {:?}",
                    rational::to_text(&event.x),
                    event.kind,
                    event.witness
                )));
            }
            let caps_before = cap_signature(mk, &state, &alphas);
            let alpha_before = alphas[k].finite().cloned().unwrap_or_default();
            for j in (0..m).filter(|&j| ghat[j]) {
                state.prices[j] *= &event.x;
            }
            let alphas = state.alphas(mk);
            state.flow = feasible_flow(mk, &state, &alphas)?;
            check_invariants(mk, &state, &alphas)?;
            let alpha_after = alphas[k].finite().cloned().unwrap_or_default();
            let cap_transition = cap_signature(mk, &state, &alphas) != caps_before;
            trace.push(TraceEntry {
                iter: trace.len() + 1,
                buyer: k,
                kind: event.kind,
                x: event.x,
                min_price: state.min_positive_price().cloned().unwrap_or_default(),
                alpha_before,
                alpha_after,
                prices: state.prices.clone(),
                cap_transition,
                settled: state.zero_surplus.clone(),
            });
        }
        if let Some(p) = state.min_positive_price() {
            if *p <= floor {
                detachments.push(detach(mk, &mut state, trace.len())?);
            }
        }
        let alphas = state.alphas(mk);
        for i in 0..n {
            if state.frozen_buyers[i] || state.buyer_surplus(mk, &alphas[i], i).is_zero() {
                state.zero_surplus[i] = true;
            }
        }
        if !state.zero_surplus[k] && !state.buyer_surplus(mk, &alphas[k], k).is_positive() {
            return Err(Error::internal(
                "negative buyer surplus after the inner loop",
            ));
        }
    }

    let allocation = state.allocation();
    Ok(FptasRun {
        state,
        allocation,
        trace,
        detachments,
        releases,
        captured,
        floor,
        initial,
    })
}

/// `(capped buyers, capped goods)` for detecting cap transitions.
fn cap_signature(
    mk: &PerturbedMarket,
    state: &MarketState,
    alphas: &[Ratio],
) -> (Vec<bool>, Vec<bool>) {
    (
        (0..state.buyers())
            .map(|i| state.buyer_capped(mk, &alphas[i], i))
            .collect(),
        (0..state.goods())
            .map(|j| state.good_capped(mk, j))
            .collect(),
    )
}

fn check_invariants(mk: &PerturbedMarket, state: &MarketState, alphas: &[Ratio]) -> Result<()> {
    for j in 0..state.goods() {
        if !state.good_surplus(mk, j).is_zero() {
            return Err(Error::internal(format!(
                "good {} has nonzero surplus",
                j + 1
            )));
        }
    }
    for i in 0..state.buyers() {
        let s = state.buyer_surplus(mk, &alphas[i], i);
        if s.is_negative() || (state.zero_surplus[i] && !s.is_zero()) {
            return Err(Error::internal(format!(
                "buyer {} surplus invariant broken",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Zeroes the prices of the block around the cheapest positive-price good.
/// The block is closed under "connected by an MBB edge" and "some buyer of
/// the block values the good"; every buyer in it must be capped.
fn detach(mk: &PerturbedMarket, state: &mut MarketState, iter: usize) -> Result<Detachment> {
    let n = state.buyers();
    let m = state.goods();
    let alphas = state.alphas(mk);
    let min = state.min_positive_price().cloned().expect("positive price");
    let ell = (0..m)
        .find(|&j| state.prices[j] == min && !state.frozen_goods[j])
        .expect("argmin");

    let mut goods = vec![false; m];
    let mut buyers = vec![false; n];
    goods[ell] = true;
    let mut stack = vec![(false, ell)];
    while let Some((is_buyer, v)) = stack.pop() {
        if is_buyer {
            for j in 0..m {
                if !goods[j] && !state.frozen_goods[j] && state.is_mbb(mk, &alphas[v], v, j) {
                    goods[j] = true;
                    stack.push((false, j));
                }
            }
        } else {
            for i in 0..n {
                if !buyers[i] && !state.frozen_buyers[i] && mk.utility(i, v).is_positive() {
                    buyers[i] = true;
                    stack.push((true, i));
                }
            }
        }
    }

    for i in (0..n).filter(|&i| buyers[i]) {
        if !state.buyer_capped(mk, &alphas[i], i) {
            return Err(Error::internal(format!(
                "buyer {} detached at the price floor is not capped",
                i + 1
            )));
        }
        let a = alphas[i].finite().expect("unfrozen buyer").clone();
        let spent = state.spent(i);
        if !spent.is_positive() {
            return Err(Error::internal("detached buyer spends nothing"));
        }
        // Utility a·spent ≥ c_i; scale down to exactly c_i.
        let scale = mk.cap(i) / (&a * &spent);
        for j in 0..m {
            let f = &state.flow[i][j];
            if f.is_positive() {
                if !goods[j] {
                    return Err(Error::internal("detached buyer pays an outside good"));
                }
                state.frozen_alloc[i][j] = f / &state.prices[j] * &scale;
            }
        }
    }
    for i in (0..n).filter(|&i| buyers[i]) {
        state.frozen_buyers[i] = true;
        state.zero_surplus[i] = true;
        for f in state.flow[i].iter_mut() {
            *f = Rational::zero();
        }
    }
    for j in (0..m).filter(|&j| goods[j]) {
        state.shadow_prices[j] = Some(state.prices[j].clone());
        state.prices[j] = Rational::zero();
        state.frozen_goods[j] = true;
    }
    Ok(Detachment {
        iter,
        buyers: (0..n).filter(|&i| buyers[i]).collect(),
        goods: (0..m).filter(|&j| goods[j]).collect(),
    })
}

/// Generous inner-iteration cap: a multiple of `n³ · log_{1+ε}(Σm / floor)`.
fn default_limit(mk: &PerturbedMarket, floor: &Rational) -> usize {
    let n = mk.buyers() as f64;
    let total: Rational = (0..mk.buyers()).map(|i| mk.budget(i).clone()).sum();
    let one_eps = Rational::one() + &mk.epsilon;
    let logs = rational::log_ratio(&(total / floor), &one_eps).max(1.0);
    let bound = 64.0 * (n + mk.goods() as f64).powi(3) * logs + 1000.0;
    bound.min(5.0e7) as usize
}

/// `4·n³·log_{1+ε}(Σm / floor)`, the logged iteration budget.
pub fn iteration_budget(mk: &PerturbedMarket, floor: &Rational) -> f64 {
    let n = mk.buyers() as f64;
    let total: Rational = (0..mk.buyers()).map(|i| mk.budget(i).clone()).sum();
    let one_eps = Rational::one() + &mk.epsilon;
    4.0 * n.powi(3) * rational::log_ratio(&(total / floor), &one_eps)
}

/// Runtime properties of one solver trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceCheck {
    pub iterations: usize,
    /// Steps where `α_k` did not strictly increase (trace positions).
    pub alpha_violations: Vec<usize>,
    /// Windows of `n²` consecutive iterations checked.
    pub windows: usize,
    /// Windows, by the trace position of their last step, in which no
    /// price dropped by a factor `1 + ε`.
    pub window_violations: Vec<usize>,
    /// `4·n³·log_{1+ε}(Σm / floor)`.
    pub budget: f64,
}

impl TraceCheck {
    pub fn within_budget(&self) -> bool {
        self.iterations as f64 <= self.budget
    }
}

/// Checks that `α_k` strictly increases in every step, and that within
/// every window of `n²` consecutive iterations of one buyer's run some good
/// keeps a positive price and drops by at least a factor `1 + ε`.
/// Iterations are counted as in the algorithm's statement: a step that
/// only stops at a cap transition belongs to the iteration it splits.
pub fn check_trace(mk: &PerturbedMarket, run: &FptasRun) -> TraceCheck {
    let n = mk.buyers();
    let window = (n * n).max(1);
    let growth = Rational::one() + &mk.epsilon;
    let mut check = TraceCheck {
        iterations: run.iterations(),
        alpha_violations: Vec::new(),
        windows: 0,
        window_violations: Vec::new(),
        budget: iteration_budget(mk, &run.floor),
    };
    for (t, e) in run.trace.iter().enumerate() {
        if e.alpha_after <= e.alpha_before {
            check.alpha_violations.push(t);
        }
    }
    // Split into runs of one buyer; within each, the prices after every
    // completed iteration, starting with the prices before the run.
    let mut start = 0;
    while start < run.trace.len() {
        let k = run.trace[start].buyer;
        let mut end = start;
        while end < run.trace.len() && run.trace[end].buyer == k {
            end += 1;
        }
        let before = if start == 0 {
            run.initial.prices.clone()
        } else {
            run.trace[start - 1].prices.clone()
        };
        let mut snapshots = vec![(start, before)];
        for t in start..end {
            let e = &run.trace[t];
            if e.kind.ends_iteration() {
                snapshots.push((t, e.prices.clone()));
            }
        }
        for w in snapshots.windows(window + 1) {
            let (_, p0) = &w[0];
            let (last, p1) = &w[window];
            check.windows += 1;
            let dropped = p0
                .iter()
                .zip(p1)
                .any(|(a, b)| b.is_positive() && b * &growth <= *a);
            if !dropped {
                check.window_violations.push(*last);
            }
        }
        start = end;
    }
    check
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{perturb, MarketInstance};
    use crate::rational::{frac, int};

    #[test]
    fn floor_is_the_printed_one_for_small_caps() {
        let market = MarketInstance::new(
            vec![1, 1],
            vec![vec![1, 3], vec![2, 1]],
            vec![1, 1],
            vec![1, 1],
        )
        .unwrap();
        let mk = perturb(&market, &int(1)).unwrap();
        // Ũ = 4, n = 2: 1/(2·16).
        assert_eq!(price_floor(&mk), frac(1, 32));
    }

    #[test]
    fn trace_line_format() {
        let e = TraceEntry {
            iter: 3,
            buyer: 0,
            kind: EventKind::MinFactorBinding,
            x: frac(1, 2),
            min_price: int(1),
            alpha_before: int(1),
            alpha_after: int(2),
            prices: vec![],
            cap_transition: false,
            settled: vec![],
        };
        assert_eq!(
            e.line(),
            "iter 3 buyer 1 event MinFactorBinding x 1/2 minprice 1/1"
        );
    }
}
