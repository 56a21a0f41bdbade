//! Prices, money flow and the quantities derived from them.

use num_traits::{Signed, Zero};

use crate::instance::{Allocation, PerturbedMarket};
use crate::rational::{Ratio, Rational};

/// Solver state over a perturbed market.
///
/// Frozen buyers and goods belong to blocks whose prices were set to zero;
/// their allocation is fixed in `frozen_alloc` and `shadow_prices` keeps the
/// prices they had just before.
#[derive(Clone, Debug, PartialEq)]
pub struct MarketState {
    pub prices: Vec<Rational>,
    pub flow: Vec<Vec<Rational>>,
    /// `Z`.
    pub zero_surplus: Vec<bool>,
    pub frozen_buyers: Vec<bool>,
    pub frozen_goods: Vec<bool>,
    pub frozen_alloc: Vec<Vec<Rational>>,
    pub shadow_prices: Vec<Option<Rational>>,
}

impl MarketState {
    pub fn new(prices: Vec<Rational>, flow: Vec<Vec<Rational>>) -> Self {
        let n = flow.len();
        let m = prices.len();
        MarketState {
            prices,
            flow,
            zero_surplus: vec![false; n],
            frozen_buyers: vec![false; n],
            frozen_goods: vec![false; m],
            frozen_alloc: vec![vec![Rational::zero(); m]; n],
            shadow_prices: vec![None; m],
        }
    }

    pub fn buyers(&self) -> usize {
        self.flow.len()
    }

    pub fn goods(&self) -> usize {
        self.prices.len()
    }

    /// `α_i = max_j ũ_ij / p_j`; infinite when buyer `i` values a good of
    /// price zero, and zero when it values nothing.
    pub fn alpha(&self, mk: &PerturbedMarket, i: usize) -> Ratio {
        let mut best = Rational::zero();
        for (u, p) in mk.utilities[i].iter().zip(&self.prices) {
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

    pub fn alphas(&self, mk: &PerturbedMarket) -> Vec<Ratio> {
        (0..self.buyers()).map(|i| self.alpha(mk, i)).collect()
    }

    /// Whether `{i, j}` is an MBB edge given `α_i`.
    pub fn is_mbb(&self, mk: &PerturbedMarket, alpha: &Ratio, i: usize, j: usize) -> bool {
        let u = mk.utility(i, j);
        if u.is_zero() {
            return false;
        }
        let p = &self.prices[j];
        match alpha {
            Ratio::Infinite => p.is_zero(),
            Ratio::Finite(a) => !p.is_zero() && &(u / p) == a,
        }
    }

    /// `m_i^a = min(m_i, c_i/α_i)`.
    pub fn active_budget(&self, mk: &PerturbedMarket, alpha: &Ratio, i: usize) -> Rational {
        match alpha {
            Ratio::Infinite => Rational::zero(),
            Ratio::Finite(a) if a.is_zero() => mk.budget(i).clone(),
            Ratio::Finite(a) => {
                let capped = mk.cap(i) / a;
                capped.min(mk.budget(i).clone())
            }
        }
    }

    /// `p_j^a = min(p_j, d_j)`.
    pub fn active_price(&self, mk: &PerturbedMarket, j: usize) -> Rational {
        self.prices[j].clone().min(mk.earning_cap(j).clone())
    }

    /// A buyer is capped iff `m_i α_i ≥ c_i`.
    pub fn buyer_capped(&self, mk: &PerturbedMarket, alpha: &Ratio, i: usize) -> bool {
        match alpha {
            Ratio::Infinite => true,
            Ratio::Finite(a) => mk.budget(i) * a >= *mk.cap(i),
        }
    }

    /// A good is capped while its price exceeds its earning cap.
    pub fn good_capped(&self, mk: &PerturbedMarket, j: usize) -> bool {
        self.prices[j] > *mk.earning_cap(j)
    }

    pub fn spent(&self, i: usize) -> Rational {
        self.flow[i].iter().sum()
    }

    pub fn earned(&self, j: usize) -> Rational {
        self.flow.iter().map(|row| &row[j]).sum()
    }

    /// `s(i) = Σ_j f_ij − m_i^a`; zero for frozen buyers.
    pub fn buyer_surplus(&self, mk: &PerturbedMarket, alpha: &Ratio, i: usize) -> Rational {
        if self.frozen_buyers[i] {
            return Rational::zero();
        }
        self.spent(i) - self.active_budget(mk, alpha, i)
    }

    /// `s(j) = p_j^a − Σ_i f_ij`; zero for frozen goods.
    pub fn good_surplus(&self, mk: &PerturbedMarket, j: usize) -> Rational {
        if self.frozen_goods[j] {
            return Rational::zero();
        }
        self.active_price(mk, j) - self.earned(j)
    }

    /// Smallest positive price, if any.
    pub fn min_positive_price(&self) -> Option<&Rational> {
        self.prices.iter().filter(|p| p.is_positive()).min()
    }

    /// Buyers and goods that can reach buyer `k` in the MBB residual graph:
    /// arcs `i → j` for MBB edges and `j → i` for MBB edges carrying flow.
    /// Frozen nodes are ignored.
    pub fn reach_sets(
        &self,
        mk: &PerturbedMarket,
        alphas: &[Ratio],
        k: usize,
    ) -> (Vec<bool>, Vec<bool>) {
        let n = self.buyers();
        let m = self.goods();
        let mut buyers = vec![false; n];
        let mut goods = vec![false; m];
        buyers[k] = true;
        let mut stack = vec![(true, k)];
        while let Some((is_buyer, v)) = stack.pop() {
            if is_buyer {
                // Predecessors of buyer v: goods j with flow on an MBB edge.
                for j in 0..m {
                    if !goods[j]
                        && !self.frozen_goods[j]
                        && self.flow[v][j].is_positive()
                        && self.is_mbb(mk, &alphas[v], v, j)
                    {
                        goods[j] = true;
                        stack.push((false, j));
                    }
                }
            } else {
                for i in 0..n {
                    if !buyers[i] && !self.frozen_buyers[i] && self.is_mbb(mk, &alphas[i], i, v) {
                        buyers[i] = true;
                        stack.push((true, i));
                    }
                }
            }
        }
        (buyers, goods)
    }

    /// The allocation: `f_ij / p_j` on positive prices, frozen rows as
    /// stored.
    pub fn allocation(&self) -> Allocation {
        let mut alloc = Allocation::zeros(self.buyers(), self.goods());
        for i in 0..self.buyers() {
            for j in 0..self.goods() {
                if self.frozen_buyers[i] {
                    alloc.set(i, j, self.frozen_alloc[i][j].clone());
                } else if self.prices[j].is_positive() && !self.flow[i][j].is_zero() {
                    alloc.set(i, j, &self.flow[i][j] / &self.prices[j]);
                }
            }
        }
        alloc
    }

    /// Price used for money units: the shadow price for frozen goods.
    pub fn shadow_price(&self, j: usize) -> &Rational {
        self.shadow_prices[j].as_ref().unwrap_or(&self.prices[j])
    }
}
