//! Equilibrium checkers. Every check is exact; the report lists each
//! violated condition.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::flow::network::{max_flow_with_lower_bounds, FlowNetwork};
use crate::instance::{Allocation, MarketInstance, PerturbedMarket};
use crate::rational::{self, Ratio, Rational};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub violations: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn fail(&mut self, msg: String) {
        self.violations.push(msg);
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return writeln!(f, "verify pass");
        }
        writeln!(f, "verify fail {}", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "violation {v}")?;
        }
        Ok(())
    }
}

/// Market data the checks need, shared by the exact and approximate forms.
struct View<'a> {
    utilities: &'a [Vec<Rational>],
    caps: Vec<Rational>,
    budgets: Vec<Rational>,
    earning_caps: Vec<Rational>,
}

fn alpha(utilities: &[Rational], prices: &[Rational]) -> Ratio {
    let mut best = Rational::zero();
    for (u, p) in utilities.iter().zip(prices) {
        if u.is_zero() {
            continue;
        }
        if p.is_zero() {
            return Ratio::Infinite;
        }
        let r = u / p;
        if r > best {
            best = r;
        }
    }
    Ratio::Finite(best)
}

fn active_budget(a: &Ratio, m: &Rational, c: &Rational) -> Rational {
    match a {
        Ratio::Infinite => Rational::zero(),
        Ratio::Finite(a) if a.is_zero() => m.clone(),
        Ratio::Finite(a) => (c / a).min(m.clone()),
    }
}

/// Conditions (1)–(3) and (5): non-negative prices, modest supply, no
/// over-allocation, Walras' law.
fn check_supply_side(
    view: &View,
    prices: &[Rational],
    alloc: &Allocation,
    report: &mut VerifyReport,
) {
    if prices.len() != view.earning_caps.len() || alloc.goods() != prices.len() {
        report.fail("dimension mismatch".into());
        return;
    }
    for (j, p) in prices.iter().enumerate() {
        if p.is_negative() {
            report.fail(format!("good {} has negative price", j + 1));
            continue;
        }
        let e = if p.is_zero() {
            Rational::one()
        } else {
            (&view.earning_caps[j] / p).min(Rational::one())
        };
        for i in 0..alloc.buyers() {
            let x = alloc.get(i, j);
            if x.is_negative() || *x > Rational::one() {
                report.fail(format!("x[{}][{}] outside [0,1]", i + 1, j + 1));
            }
        }
        let sold = alloc.sold(j);
        if sold > e {
            report.fail(format!("good {} over-allocated", j + 1));
        }
        if !(p * (&e - &sold)).is_zero() {
            report.fail(format!("good {} violates Walras' law", j + 1));
        }
    }
}

/// Exact thrifty-and-modest equilibrium check on the perturbed market,
/// using the caps the solver worked with.
pub fn verify_equilibrium(
    mk: &PerturbedMarket,
    prices: &[Rational],
    alloc: &Allocation,
) -> VerifyReport {
    let view = View {
        utilities: &mk.utilities,
        caps: mk.caps.clone(),
        budgets: (0..mk.buyers()).map(|i| mk.budget(i).clone()).collect(),
        earning_caps: (0..mk.goods()).map(|j| mk.earning_cap(j).clone()).collect(),
    };
    let mut report = VerifyReport::default();
    check_supply_side(&view, prices, alloc, &mut report);
    if !report.passed() {
        return report;
    }
    for i in 0..alloc.buyers() {
        let a = alpha(&view.utilities[i], prices);
        let row = alloc.row(i);
        for (j, x) in row.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            let u = &view.utilities[i][j];
            let mbb = match &a {
                Ratio::Infinite => prices[j].is_zero() && u.is_positive(),
                Ratio::Finite(a) => {
                    prices[j].is_positive() && u.is_positive() && &(u / &prices[j]) == a
                }
            };
            if !mbb {
                report.fail(format!("buyer {} buys non-MBB good {}", i + 1, j + 1));
            }
        }
        let utility: Rational = row.iter().zip(&view.utilities[i]).map(|(x, u)| x * u).sum();
        let spend: Rational = row.iter().zip(prices).map(|(x, p)| x * p).sum();
        let c = &view.caps[i];
        if utility > *c {
            report.fail(format!("buyer {} exceeds its utility cap", i + 1));
        }
        let optimal = match &a {
            Ratio::Infinite => c.clone(),
            Ratio::Finite(a) => (&view.budgets[i] * a).min(c.clone()),
        };
        if utility != optimal {
            report.fail(format!("buyer {} does not get its demand utility", i + 1));
        }
        let ma = active_budget(&a, &view.budgets[i], c);
        if spend != ma {
            report.fail(format!("buyer {} does not spend its active budget", i + 1));
        }
    }
    report
}

/// ε-approximate equilibrium check against the original market: exact
/// supply conditions and, per buyer, `Σ u x ≤ c`, `Σ p x ≤ m^a` and
/// `u_i(x) ≥ (1−ε)·min(c_i, m_i·α_i)` with true utilities.
pub fn verify_approx_equilibrium(
    market: &MarketInstance,
    prices: &[Rational],
    alloc: &Allocation,
    epsilon: &Rational,
) -> VerifyReport {
    let utilities: Vec<Vec<Rational>> = market
        .utilities
        .iter()
        .map(|row| row.iter().map(|&u| rational::uint(u)).collect())
        .collect();
    let view = View {
        utilities: &utilities,
        caps: market
            .utility_caps
            .iter()
            .map(|&c| rational::uint(c))
            .collect(),
        budgets: market.budgets.iter().map(|&b| rational::uint(b)).collect(),
        earning_caps: market
            .earning_caps
            .iter()
            .map(|&d| rational::uint(d))
            .collect(),
    };
    let mut report = VerifyReport::default();
    check_supply_side(&view, prices, alloc, &mut report);
    if !report.passed() {
        return report;
    }
    for i in 0..alloc.buyers() {
        let a = alpha(&view.utilities[i], prices);
        let row = alloc.row(i);
        let raw: Rational = row.iter().zip(&view.utilities[i]).map(|(x, u)| x * u).sum();
        let spend: Rational = row.iter().zip(prices).map(|(x, p)| x * p).sum();
        let c = &view.caps[i];
        if raw > *c {
            report.fail(format!("buyer {} exceeds its utility cap", i + 1));
        }
        let ma = active_budget(&a, &view.budgets[i], c);
        if spend > ma {
            report.fail(format!(
                "buyer {} spends more than its active budget",
                i + 1
            ));
        }
        let optimal = match &a {
            Ratio::Infinite => c.clone(),
            Ratio::Finite(a) => (&view.budgets[i] * a).min(c.clone()),
        };
        let utility = raw.min(c.clone());
        if utility < (Rational::one() - epsilon) * optimal {
            report.fail(format!(
                "buyer {} below (1-eps) of its demand utility",
                i + 1
            ));
        }
    }
    report
}

/// An allocation that makes `prices` an equilibrium, if one exists. Every
/// price must be positive: then equilibrium means each buyer spends exactly
/// `m_i^a` on MBB goods and each good earns exactly `p_j^a`, which is one
/// bounded flow problem. `Ok(None)` proves that no allocation works.
pub fn allocation_at_prices(
    mk: &PerturbedMarket,
    prices: &[Rational],
) -> Result<Option<Allocation>> {
    let n = mk.buyers();
    let m = mk.goods();
    if prices.len() != m || prices.iter().any(|p| !p.is_positive()) {
        return Err(Error::InvalidInstance(
            "prices must be positive, one per good".into(),
        ));
    }
    let s = n + m;
    let t = s + 1;
    let mut net = FlowNetwork::new(n + m + 2);
    let mut edges = Vec::new();
    for (j, p) in prices.iter().enumerate() {
        let pa = p.clone().min(mk.earning_cap(j).clone());
        net.add_arc(s, n + j, pa.clone(), Some(pa));
    }
    for i in 0..n {
        let a = alpha(&mk.utilities[i], prices);
        for j in 0..m {
            let u = &mk.utilities[i][j];
            if let Ratio::Finite(a) = &a {
                if u.is_positive() && &(u / &prices[j]) == a {
                    edges.push((i, j, net.add_arc(n + j, i, Rational::zero(), None)));
                }
            }
        }
        let ma = active_budget(&a, mk.budget(i), mk.cap(i));
        net.add_arc(i, t, ma.clone(), Some(ma));
    }
    net.add_arc(t, s, Rational::zero(), None);
    let sol = max_flow_with_lower_bounds(&net)?;
    if !sol.feasible {
        return Ok(None);
    }
    let mut alloc = Allocation::zeros(n, m);
    for (i, j, id) in edges {
        alloc.set(i, j, &sol.flow[id] / &prices[j]);
    }
    Ok(Some(alloc))
}
