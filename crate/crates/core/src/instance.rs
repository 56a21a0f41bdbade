//! Allocation instances, market instances and the perturbed market.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Agents with budget-additive valuations `min(c_i, Σ_j v_ij x_ij)` over
/// indivisible items.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NswInstance {
    values: Vec<Vec<u64>>,
    caps: Vec<u64>,
}

impl NswInstance {
    /// `values[i][j]` is agent `i`'s value for item `j`. Every cap must be
    /// positive. Fewer items than agents is accepted: such instances are
    /// never money clearing and have optimal welfare 0.
    pub fn new(values: Vec<Vec<u64>>, caps: Vec<u64>) -> Result<Self> {
        if values.len() != caps.len() {
            return Err(Error::InvalidInstance(format!(
                "{} value rows for {} caps",
                values.len(),
                caps.len()
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidInstance("no agents".into()));
        }
        let m = values[0].len();
        if m == 0 {
            return Err(Error::InvalidInstance("no items".into()));
        }
        if values.iter().any(|row| row.len() != m) {
            return Err(Error::InvalidInstance("ragged value matrix".into()));
        }
        if let Some(i) = caps.iter().position(|&c| c == 0) {
            return Err(Error::InvalidInstance(format!(
                "agent {} has a zero cap",
                i + 1
            )));
        }
        Ok(NswInstance { values, caps })
    }

    pub fn agents(&self) -> usize {
        self.caps.len()
    }

    pub fn items(&self) -> usize {
        self.values[0].len()
    }

    pub fn value(&self, i: usize, j: usize) -> u64 {
        self.values[i][j]
    }

    pub fn values(&self) -> &[Vec<u64>] {
        &self.values
    }

    pub fn cap(&self, i: usize) -> u64 {
        self.caps[i]
    }

    pub fn caps(&self) -> &[u64] {
        &self.caps
    }

    pub fn is_capped(&self) -> bool {
        self.values
            .iter()
            .zip(&self.caps)
            .all(|(row, &c)| row.iter().all(|&v| v <= c))
    }

    /// Budget-additive value of agent `i` for a (possibly fractional) bundle.
    pub fn agent_value(&self, i: usize, bundle: &[Rational]) -> Rational {
        let sum: Rational = bundle
            .iter()
            .zip(&self.values[i])
            .filter(|(x, _)| !x.is_zero())
            .map(|(x, &v)| x * rational::uint(v))
            .sum();
        sum.min(rational::uint(self.caps[i]))
    }
}

/// Replaces every `v_ij` by `min(v_ij, c_i)`. Integral allocations keep their
/// value.
pub fn cap_valuations(inst: &NswInstance) -> NswInstance {
    let values = inst
        .values
        .iter()
        .zip(&inst.caps)
        .map(|(row, &c)| row.iter().map(|&v| v.min(c)).collect())
        .collect();
    NswInstance {
        values,
        caps: inst.caps.clone(),
    }
}

/// The product `Π_i min(c_i, Σ_j v_ij x_ij)`; the Nash social welfare is its
/// `agents`-th root, which is never materialized.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NswValue {
    pub product: Rational,
    pub agents: usize,
}

pub fn nsw_value(inst: &NswInstance, alloc: &Allocation) -> NswValue {
    let product = (0..inst.agents())
        .map(|i| inst.agent_value(i, alloc.row(i)))
        .product();
    NswValue {
        product,
        agents: inst.agents(),
    }
}

/// A linear Fisher market with utility caps on buyers and earning caps on
/// sellers. Every parameter is a non-negative integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarketInstance {
    pub budgets: Vec<u64>,
    pub utilities: Vec<Vec<u64>>,
    pub utility_caps: Vec<u64>,
    pub earning_caps: Vec<u64>,
}

impl MarketInstance {
    pub fn new(
        budgets: Vec<u64>,
        utilities: Vec<Vec<u64>>,
        utility_caps: Vec<u64>,
        earning_caps: Vec<u64>,
    ) -> Result<Self> {
        let n = budgets.len();
        let m = earning_caps.len();
        if n == 0 || m == 0 {
            return Err(Error::InvalidInstance("empty market".into()));
        }
        if utilities.len() != n || utilities.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidInstance("utility matrix shape".into()));
        }
        if utility_caps.len() != n {
            return Err(Error::InvalidInstance("utility cap count".into()));
        }
        if budgets.contains(&0) {
            return Err(Error::InvalidInstance("zero budget".into()));
        }
        if utility_caps.contains(&0) || earning_caps.contains(&0) {
            return Err(Error::InvalidInstance("zero cap".into()));
        }
        Ok(MarketInstance {
            budgets,
            utilities,
            utility_caps,
            earning_caps,
        })
    }

    pub fn buyers(&self) -> usize {
        self.budgets.len()
    }

    pub fn goods(&self) -> usize {
        self.earning_caps.len()
    }

    /// Largest integer among all parameters.
    pub fn max_param(&self) -> u64 {
        self.utilities
            .iter()
            .flatten()
            .chain(&self.budgets)
            .chain(&self.utility_caps)
            .chain(&self.earning_caps)
            .copied()
            .max()
            .unwrap_or(0)
    }
}

/// Unit budgets and unit earning caps over a capped allocation instance.
pub fn to_market(inst: &NswInstance) -> Result<MarketInstance> {
    if !inst.is_capped() {
        return Err(Error::InvalidInstance(
            "valuations exceed caps; run cap_valuations first".into(),
        ));
    }
    MarketInstance::new(
        vec![1; inst.agents()],
        inst.values.clone(),
        inst.caps.clone(),
        vec![1; inst.items()],
    )
}

/// A market whose utilities are rounded up to powers of `1 + ε`.
#[derive(Clone, Debug)]
pub struct PerturbedMarket {
    pub base: MarketInstance,
    pub epsilon: Rational,
    /// `k_ij`, absent where the base utility is zero.
    pub exponents: Vec<Vec<Option<u32>>>,
    /// `ũ_ij = (1+ε)^{k_ij}`, zero where the base utility is zero.
    pub utilities: Vec<Vec<Rational>>,
    /// Utility caps the solver works with. Equal to the base caps unless
    /// raised with [`PerturbedMarket::with_raised_caps`].
    pub caps: Vec<Rational>,
    /// `Ũ`, the largest perturbed utility.
    pub max_utility: Rational,
    budgets: Vec<Rational>,
    earning_caps: Vec<Rational>,
}

impl PerturbedMarket {
    pub fn buyers(&self) -> usize {
        self.base.buyers()
    }

    pub fn goods(&self) -> usize {
        self.base.goods()
    }

    pub fn budget(&self, i: usize) -> &Rational {
        &self.budgets[i]
    }

    pub fn earning_cap(&self, j: usize) -> &Rational {
        &self.earning_caps[j]
    }

    pub fn cap(&self, i: usize) -> &Rational {
        &self.caps[i]
    }

    pub fn utility(&self, i: usize, j: usize) -> &Rational {
        &self.utilities[i][j]
    }

    /// Raises every cap to `max(c_i, max_j ũ_ij)` so that no single good is
    /// worth more than the cap. The raised cap stays below `(1+ε)·c_i`.
    pub fn with_raised_caps(mut self) -> Self {
        for (i, cap) in self.caps.iter_mut().enumerate() {
            for u in &self.utilities[i] {
                if u > cap {
                    *cap = u.clone();
                }
            }
        }
        self
    }
}

/// Rounds every positive utility up to the least power `(1+ε)^k`, `k ≥ 1`,
/// that is at least the utility.
pub fn perturb(market: &MarketInstance, epsilon: &Rational) -> Result<PerturbedMarket> {
    if *epsilon <= Rational::zero() {
        return Err(Error::InvalidInstance("epsilon must be positive".into()));
    }
    let base_factor = Rational::one() + epsilon;
    let mut exponents = Vec::with_capacity(market.buyers());
    let mut utilities = Vec::with_capacity(market.buyers());
    let mut max_utility = Rational::zero();
    for row in &market.utilities {
        let mut exp_row = Vec::with_capacity(row.len());
        let mut util_row = Vec::with_capacity(row.len());
        for &u in row {
            if u == 0 {
                exp_row.push(None);
                util_row.push(Rational::zero());
                continue;
            }
            let target = rational::uint(u);
            let mut k = 1u32;
            let mut power = base_factor.clone();
            while power < target {
                power *= &base_factor;
                k += 1;
            }
            if power > max_utility {
                max_utility = power.clone();
            }
            exp_row.push(Some(k));
            util_row.push(power);
        }
        exponents.push(exp_row);
        utilities.push(util_row);
    }
    Ok(PerturbedMarket {
        epsilon: epsilon.clone(),
        exponents,
        utilities,
        caps: market
            .utility_caps
            .iter()
            .map(|&c| rational::uint(c))
            .collect(),
        max_utility,
        budgets: market.budgets.iter().map(|&b| rational::uint(b)).collect(),
        earning_caps: market
            .earning_caps
            .iter()
            .map(|&d| rational::uint(d))
            .collect(),
        base: market.clone(),
    })
}

/// The market itself viewed as a perturbed market with `ε = 0` and
/// `ũ = u`. The descending-price solver runs on it exactly, without the
/// iteration bound that the rounding to powers of `1 + ε` provides.
pub fn unperturbed(market: &MarketInstance) -> PerturbedMarket {
    let utilities: Vec<Vec<Rational>> = market
        .utilities
        .iter()
        .map(|row| row.iter().map(|&u| rational::uint(u)).collect())
        .collect();
    let max_utility = utilities
        .iter()
        .flatten()
        .max()
        .cloned()
        .unwrap_or_else(Rational::zero);
    PerturbedMarket {
        epsilon: Rational::zero(),
        exponents: vec![vec![None; market.goods()]; market.buyers()],
        utilities,
        caps: market
            .utility_caps
            .iter()
            .map(|&c| rational::uint(c))
            .collect(),
        max_utility,
        budgets: market.budgets.iter().map(|&b| rational::uint(b)).collect(),
        earning_caps: market
            .earning_caps
            .iter()
            .map(|&d| rational::uint(d))
            .collect(),
        base: market.clone(),
    }
}

/// A (fractional) allocation `x_ij ∈ [0,1]` of goods to buyers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocation {
    x: Vec<Vec<Rational>>,
}

impl Allocation {
    pub fn zeros(n: usize, m: usize) -> Self {
        Allocation {
            x: vec![vec![Rational::zero(); m]; n],
        }
    }

    pub fn from_matrix(x: Vec<Vec<Rational>>) -> Self {
        Allocation { x }
    }

    /// `owner[j]` receives item `j`; `None` leaves it unassigned.
    pub fn from_assignment(n: usize, owner: &[Option<usize>]) -> Self {
        let mut alloc = Allocation::zeros(n, owner.len());
        for (j, o) in owner.iter().enumerate() {
            if let Some(i) = *o {
                alloc.x[i][j] = Rational::one();
            }
        }
        alloc
    }

    pub fn buyers(&self) -> usize {
        self.x.len()
    }

    pub fn goods(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.x[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.x[i][j] = v;
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.x[i]
    }

    pub fn matrix(&self) -> &[Vec<Rational>] {
        &self.x
    }

    /// `Σ_i x_ij`.
    pub fn sold(&self, j: usize) -> Rational {
        self.x.iter().map(|row| &row[j]).sum()
    }

    pub fn is_integral(&self) -> bool {
        self.x.iter().flatten().all(|v| v.is_zero() || v.is_one())
    }

    /// Owner of every item for an integral allocation.
    pub fn assignment(&self) -> Option<Vec<Option<usize>>> {
        if !self.is_integral() {
            return None;
        }
        let mut owner = vec![None; self.goods()];
        for (i, row) in self.x.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if v.is_one() {
                    if owner[j].is_some() {
                        return None;
                    }
                    owner[j] = Some(i);
                }
            }
        }
        Some(owner)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    fn inst(values: Vec<Vec<u64>>, caps: Vec<u64>) -> NswInstance {
        NswInstance::new(values, caps).unwrap()
    }

    #[test]
    fn capping_takes_the_minimum() {
        let capped = cap_valuations(&inst(vec![vec![5, 2]], vec![3]));
        assert_eq!(capped.value(0, 0), 3);
        assert_eq!(capped.value(0, 1), 2);
        assert_eq!(capped.caps(), &[3]);
    }

    #[test]
    fn nsw_value_examples() {
        let one = inst(vec![vec![2]], vec![5]);
        let v = nsw_value(&one, &Allocation::from_assignment(1, &[Some(0)]));
        assert_eq!(v.product, int(2));
        assert_eq!(v.agents, 1);

        let two = inst(vec![vec![3, 1], vec![1, 3]], vec![10, 10]);
        let diag = nsw_value(&two, &Allocation::from_assignment(2, &[Some(0), Some(1)]));
        assert_eq!(diag.product, int(9));
        let starved = nsw_value(&two, &Allocation::from_assignment(2, &[Some(0), Some(0)]));
        assert_eq!(starved.product, int(0));
    }

    #[test]
    fn to_market_uses_unit_budgets_and_earning_caps() {
        let m = to_market(&inst(vec![vec![2, 0], vec![1, 1]], vec![4, 4])).unwrap();
        assert_eq!(m.budgets, vec![1, 1]);
        assert_eq!(m.earning_caps, vec![1, 1]);
        assert_eq!(m.utility_caps, vec![4, 4]);
        assert_eq!(m.max_param(), 4);
        assert!(to_market(&inst(vec![vec![5]], vec![3])).is_err());
    }

    #[test]
    fn perturbation_examples() {
        let market =
            MarketInstance::new(vec![1], vec![vec![3, 4, 1, 0]], vec![9], vec![1; 4]).unwrap();
        let p = perturb(&market, &int(1)).unwrap();
        assert_eq!(p.utilities[0][0], int(4));
        assert_eq!(p.exponents[0][0], Some(2));
        assert_eq!(p.utilities[0][1], int(4));
        assert_eq!(p.exponents[0][1], Some(2));
        assert_eq!(p.utilities[0][2], int(2));
        assert_eq!(p.exponents[0][3], None);
        assert_eq!(p.utilities[0][3], int(0));
        assert_eq!(p.max_utility, int(4));

        let half = perturb(&market, &frac(1, 2)).unwrap();
        assert_eq!(half.utilities[0][2], frac(3, 2));
        assert_eq!(half.exponents[0][2], Some(1));
        assert!(perturb(&market, &int(0)).is_err());
    }

    #[test]
    fn raised_caps_dominate_every_perturbed_value() {
        let market = MarketInstance::new(vec![1], vec![vec![3, 1]], vec![3], vec![1, 1]).unwrap();
        let p = perturb(&market, &int(1)).unwrap().with_raised_caps();
        assert_eq!(p.caps[0], int(4));
    }

    #[test]
    fn assignment_round_trip() {
        let owner = vec![Some(1), None, Some(0)];
        let alloc = Allocation::from_assignment(2, &owner);
        assert!(alloc.is_integral());
        assert_eq!(alloc.assignment(), Some(owner));
        let mut frac_alloc = alloc.clone();
        frac_alloc.set(0, 1, frac(1, 2));
        assert!(frac_alloc.assignment().is_none());
    }
}
