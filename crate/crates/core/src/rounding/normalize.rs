//! Per-buyer rescaling so that every buyer with a finite MBB ratio has MBB
//! ratio one, and the product upper bound on the optimal Nash welfare.

use num_traits::{One, Signed, Zero};

use crate::equilibrium::state::MarketState;
use crate::error::{Error, Result};
use crate::instance::{Allocation, PerturbedMarket};
use crate::rational::{Ratio, Rational};

/// The rounding view of an equilibrium of the (perturbed) allocation market.
///
/// For a buyer outside `B_0`, `values[i][j] = ũ_ij/α_i` and
/// `caps[i] = ĉ_i/α_i`. Buyers in `B_0` keep their perturbed utilities and
/// caps unchanged.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedInstance {
    pub values: Vec<Vec<Rational>>,
    pub caps: Vec<Rational>,
    pub prices: Vec<Rational>,
    /// Buyers with positive utility for a zero-price good.
    pub b0: Vec<bool>,
    /// Goods of price zero.
    pub g0: Vec<bool>,
    /// `B_c`: buyers capped at the equilibrium prices.
    pub capped: Vec<bool>,
    /// MBB ratio at the equilibrium prices; `None` on `B_0`.
    pub alphas: Vec<Option<Rational>>,
    /// `m_i^a`, unchanged by the rescaling.
    pub active_budgets: Vec<Rational>,
}

impl NormalizedInstance {
    pub fn agents(&self) -> usize {
        self.values.len()
    }

    pub fn items(&self) -> usize {
        self.prices.len()
    }

    /// `min(C_i, Σ_j V_ij q_j)` for a fractional bundle `q`.
    pub fn value(&self, i: usize, bundle: &[Rational]) -> Rational {
        let raw: Rational = self.values[i].iter().zip(bundle).map(|(v, q)| v * q).sum();
        raw.min(self.caps[i].clone())
    }

    /// `Π_{i ∉ B_0} α_i`, the factor between normalized and perturbed
    /// welfare products.
    pub fn raw_scale(&self) -> Rational {
        self.alphas.iter().flatten().product()
    }
}

/// Normalizes the perturbed market at the equilibrium `state` and checks
/// the structure the rounding relies on: unit budgets and earning caps,
/// `V_ij ≤ min(p_j, C_i)` off `B_0`, MBB goods of capped buyers priced at
/// most one, and `B_0` buyers capped and served only by zero-price goods.
/// `alloc` is the equilibrium allocation (or its forest form).
pub fn normalize(
    mk: &PerturbedMarket,
    state: &MarketState,
    alloc: &Allocation,
) -> Result<NormalizedInstance> {
    let n = mk.buyers();
    let m = mk.goods();
    if (0..n).any(|i| !mk.budget(i).is_one()) || (0..m).any(|j| !mk.earning_cap(j).is_one()) {
        return Err(Error::InvalidInstance(
            "normalization needs unit budgets and unit earning caps".into(),
        ));
    }
    let prices = state.prices.clone();
    let g0: Vec<bool> = prices.iter().map(Zero::is_zero).collect();
    let mut norm = NormalizedInstance {
        values: Vec::with_capacity(n),
        caps: Vec::with_capacity(n),
        prices,
        b0: vec![false; n],
        g0,
        capped: vec![false; n],
        alphas: vec![None; n],
        active_budgets: Vec::with_capacity(n),
    };
    for i in 0..n {
        let alpha = state.alpha(mk, i);
        norm.capped[i] = state.buyer_capped(mk, &alpha, i);
        norm.active_budgets.push(state.active_budget(mk, &alpha, i));
        match alpha {
            Ratio::Infinite => {
                norm.b0[i] = true;
                norm.values.push(mk.utilities[i].clone());
                norm.caps.push(mk.cap(i).clone());
            }
            Ratio::Finite(a) if a.is_zero() => {
                return Err(Error::internal(format!(
                    "buyer {} values no good and cannot be normalized",
                    i + 1
                )));
            }
            Ratio::Finite(a) => {
                norm.values
                    .push(mk.utilities[i].iter().map(|u| u / &a).collect());
                norm.caps.push(mk.cap(i) / &a);
                norm.alphas[i] = Some(a);
            }
        }
    }
    check_structure(&norm, alloc)?;
    Ok(norm)
}

fn check_structure(norm: &NormalizedInstance, alloc: &Allocation) -> Result<()> {
    for i in 0..norm.agents() {
        if norm.b0[i] {
            if !norm.capped[i] {
                return Err(Error::internal(format!(
                    "buyer {} in B_0 is not capped",
                    i + 1
                )));
            }
            for j in 0..norm.items() {
                if alloc.get(i, j).is_positive() && !norm.g0[j] {
                    return Err(Error::internal(format!(
                        "buyer {} in B_0 holds positive-price good {}",
                        i + 1,
                        j + 1
                    )));
                }
            }
            continue;
        }
        for j in 0..norm.items() {
            let v = &norm.values[i][j];
            if *v > norm.prices[j] || *v > norm.caps[i] {
                return Err(Error::internal(format!(
                    "normalized value of buyer {} for good {} exceeds min(price, cap)",
                    i + 1,
                    j + 1
                )));
            }
            let mbb = v.is_positive() && *v == norm.prices[j];
            if norm.capped[i] && mbb && norm.prices[j] > Rational::one() {
                return Err(Error::internal(format!(
                    "capped buyer {} has MBB good {} priced above one",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(())
}

/// `Π_{i ∈ B_c} C_i · Π_{j : p_j > 1} p_j` on the normalized scale (caps of
/// `B_0` buyers enter unscaled), with the number of agents.
pub fn upper_bound(norm: &NormalizedInstance) -> (Rational, usize) {
    let caps: Rational = (0..norm.agents())
        .filter(|&i| norm.capped[i])
        .map(|i| norm.caps[i].clone())
        .product();
    let prices: Rational = norm
        .prices
        .iter()
        .filter(|p| **p > Rational::one())
        .cloned()
        .product();
    (caps * prices, norm.agents())
}

/// The upper bound on the perturbed scale: [`upper_bound`] times
/// [`NormalizedInstance::raw_scale`].
pub fn raw_upper_bound(norm: &NormalizedInstance) -> Rational {
    upper_bound(norm).0 * norm.raw_scale()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{perturb, MarketInstance};
    use crate::rational::{frac, int};

    #[test]
    fn scaling_by_the_mbb_ratio() {
        // ũ = 4 at price 2: α = 2, v' = 2 = p, c' = 4/2.
        let market = MarketInstance::new(vec![1], vec![vec![4]], vec![4], vec![1]).unwrap();
        let mk = perturb(&market, &int(1)).unwrap();
        let state = MarketState::new(vec![int(2)], vec![vec![int(1)]]);
        let alloc = state.allocation();
        let norm = normalize(&mk, &state, &alloc).unwrap();
        assert_eq!(norm.values[0][0], int(2));
        assert_eq!(norm.caps[0], int(2));
        assert_eq!(norm.alphas[0], Some(int(2)));
        assert!(!norm.capped[0]);
        assert_eq!(upper_bound(&norm), (int(2), 1));
        assert_eq!(raw_upper_bound(&norm), int(4));
    }

    #[test]
    fn empty_products_are_one() {
        let market = MarketInstance::new(vec![1], vec![vec![2]], vec![4], vec![1]).unwrap();
        let mk = perturb(&market, &int(1)).unwrap();
        let state = MarketState::new(vec![int(1)], vec![vec![int(1)]]);
        let norm = normalize(&mk, &state, &state.allocation()).unwrap();
        assert_eq!(upper_bound(&norm).0, int(1));
    }

    #[test]
    fn single_capped_buyer() {
        // ũ = 2 on two goods priced 1/2: α = 4, c' = 1/2.
        let market = MarketInstance::new(vec![1], vec![vec![2, 2]], vec![2], vec![1, 1]).unwrap();
        let mk = perturb(&market, &int(1)).unwrap();
        let state = MarketState::new(
            vec![frac(1, 2), frac(1, 2)],
            vec![vec![frac(1, 4), frac(1, 4)]],
        );
        let norm = normalize(&mk, &state, &state.allocation()).unwrap();
        assert!(norm.capped[0]);
        assert_eq!(norm.caps[0], frac(1, 2));
        assert_eq!(upper_bound(&norm).0, frac(1, 2));
    }
}
