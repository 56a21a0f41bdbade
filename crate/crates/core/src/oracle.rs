//! Exhaustive references for small instances. Guards are hard errors: an
//! oracle never truncates its search.

use num_bigint::BigUint;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::equilibrium::verify_equilibrium;
use crate::error::{Error, Result};
use crate::flow::lp::{self, LinearProgram, LpOutcome, Sense};
use crate::instance::{unperturbed, Allocation, MarketInstance, NswInstance};
use crate::rational::{self, Rational};

/// Largest `n^m` [`brute_nsw`] enumerates.
pub const NSW_LIMIT: u64 = 10_000_000;

/// Optimal Nash welfare product with its first maximizer in lexicographic
/// order of the owner vector.
#[derive(Clone, Debug, PartialEq)]
pub struct BruteNsw {
    pub product: Rational,
    pub agents: usize,
    pub owner: Vec<usize>,
}

impl BruteNsw {
    pub fn allocation(&self) -> Allocation {
        let owner: Vec<Option<usize>> = self.owner.iter().map(|&i| Some(i)).collect();
        Allocation::from_assignment(self.agents, &owner)
    }
}

/// Enumerates every assignment of items to agents.
pub fn brute_nsw(inst: &NswInstance) -> Result<BruteNsw> {
    let n = inst.agents();
    let m = inst.items();
    let count = (n as u64).checked_pow(m as u32).filter(|&c| c <= NSW_LIMIT);
    if count.is_none() {
        return Err(Error::TooLarge(format!(
            "{n}^{m} assignments exceed {NSW_LIMIT}"
        )));
    }
    let best: Vec<(BigUint, Vec<usize>)> = (0..n)
        .into_par_iter()
        .map(|first| best_with_first(inst, first))
        .collect();
    let mut winner: Option<(BigUint, Vec<usize>)> = None;
    for cand in best {
        if winner.as_ref().map_or(true, |w| cand.0 > w.0) {
            winner = Some(cand);
        }
    }
    let (product, owner) = winner.expect("at least one agent");
    Ok(BruteNsw {
        product: Rational::from_integer(product.into()),
        agents: n,
        owner,
    })
}

fn best_with_first(inst: &NswInstance, first: usize) -> (BigUint, Vec<usize>) {
    let n = inst.agents();
    let m = inst.items();
    let mut owner = vec![0usize; m];
    owner[0] = first;
    let mut best: Option<(BigUint, Vec<usize>)> = None;
    loop {
        let mut sums = vec![0u64; n];
        for (j, &i) in owner.iter().enumerate() {
            sums[i] += inst.value(i, j);
        }
        let product = product_of(sums.iter().enumerate().map(|(i, &s)| s.min(inst.cap(i))));
        if best.as_ref().map_or(true, |b| product > b.0) {
            best = Some((product, owner.clone()));
        }
        // Odometer over items 1..m, last item fastest.
        let mut j = m;
        loop {
            if j == 1 {
                return best.expect("one assignment");
            }
            j -= 1;
            owner[j] += 1;
            if owner[j] < n {
                break;
            }
            owner[j] = 0;
        }
    }
}

fn product_of(values: impl Iterator<Item = u64>) -> BigUint {
    let mut small: u128 = 1;
    let mut big: Option<BigUint> = None;
    for v in values {
        if v == 0 {
            return BigUint::zero();
        }
        match &mut big {
            Some(b) => *b *= v,
            None => match small.checked_mul(u128::from(v)) {
                Some(p) => small = p,
                None => big = Some(BigUint::from(small) * v),
            },
        }
    }
    big.unwrap_or_else(|| BigUint::from(small))
}

/// Money clearing by checking every buyer subset against the earning caps
/// of its neighbourhood.
pub fn brute_money_clearing(market: &MarketInstance) -> Result<bool> {
    let n = market.buyers();
    let m = market.goods();
    if n > 20 {
        return Err(Error::TooLarge(format!("{n} buyers exceed 20")));
    }
    let masks: Vec<u64> = (0..n)
        .map(|i| {
            (0..m)
                .filter(|&j| market.utilities[i][j] > 0)
                .fold(0u64, |acc, j| acc | (1 << j))
        })
        .collect();
    if m > 64 {
        return Err(Error::TooLarge(format!("{m} goods exceed 64")));
    }
    let ok = (0u32..1 << n).into_par_iter().all(|set| {
        let mut budget = 0u64;
        let mut nbhd = 0u64;
        for i in 0..n {
            if set >> i & 1 == 1 {
                budget += market.budgets[i];
                nbhd |= masks[i];
            }
        }
        let caps: u64 = (0..m)
            .filter(|&j| nbhd >> j & 1 == 1)
            .map(|j| market.earning_caps[j])
            .sum();
        budget <= caps
    });
    Ok(ok)
}

/// Largest number of bases [`lp_oracle`] enumerates.
pub const BASIS_LIMIT: u64 = 2_000_000;

/// Exact LP optimum by enumerating every basis of the standard form.
///
/// Needs a non-negative objective, so the minimum is attained at a vertex
/// whenever the program is feasible.
pub fn lp_oracle(program: &LinearProgram) -> Result<LpOutcome> {
    if program.objective.iter().any(Signed::is_negative) {
        return Err(Error::InvalidInstance(
            "lp_oracle needs a non-negative objective".into(),
        ));
    }
    let (rows, rhs, cols) = program.standard_form();
    let Some((rows, rhs)) = independent_rows(rows, rhs) else {
        return Ok(LpOutcome::Infeasible);
    };
    let r = rows.len();
    if r == 0 {
        let solution = vec![Rational::zero(); program.num_vars];
        return Ok(LpOutcome::Optimal {
            value: program.objective_value(&solution),
            solution,
        });
    }
    let bases = binomial(cols as u64, r as u64);
    if bases > BASIS_LIMIT {
        return Err(Error::TooLarge(format!(
            "C({cols}, {r}) bases exceed {BASIS_LIMIT}"
        )));
    }
    let subsets = combinations(cols, r);
    let best = subsets
        .par_iter()
        .filter_map(|basis| {
            let y = basic_solution(&rows, &rhs, basis, cols)?;
            let value = program.objective_value(&y[..program.num_vars]);
            Some((value, y))
        })
        .min_by(|a, b| a.0.cmp(&b.0));
    Ok(match best {
        None => LpOutcome::Infeasible,
        Some((value, mut y)) => {
            y.truncate(program.num_vars);
            LpOutcome::Optimal { value, solution: y }
        }
    })
}

/// Row-reduces `[A | b]` and keeps a maximal independent set of rows.
/// `None` when the system is inconsistent.
fn independent_rows(
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
) -> Option<(Vec<Vec<Rational>>, Vec<Rational>)> {
    let mut kept: Vec<Vec<Rational>> = Vec::new();
    let mut kept_rhs = Vec::new();
    // Echelon copies used only to test independence.
    let mut echelon: Vec<(usize, Vec<Rational>)> = Vec::new();
    for (row, b) in rows.into_iter().zip(rhs) {
        let mut v = row.clone();
        v.push(b.clone());
        for (pivot, e) in &echelon {
            if !v[*pivot].is_zero() {
                let f = v[*pivot].clone() / &e[*pivot];
                for (a, c) in v.iter_mut().zip(e) {
                    *a -= &f * c;
                }
            }
        }
        let last = v.len() - 1;
        match (0..last).find(|&k| !v[k].is_zero()) {
            Some(p) => {
                echelon.push((p, v));
                kept.push(row);
                kept_rhs.push(b);
            }
            None if v[last].is_zero() => {}
            None => return None,
        }
    }
    Some((kept, kept_rhs))
}

/// Solves `A_B y_B = b` by Gaussian elimination; `None` when singular or
/// some basic variable is negative.
fn basic_solution(
    rows: &[Vec<Rational>],
    rhs: &[Rational],
    basis: &[usize],
    cols: usize,
) -> Option<Vec<Rational>> {
    let r = basis.len();
    let mut a: Vec<Vec<Rational>> = rows
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            let mut v: Vec<Rational> = basis.iter().map(|&k| row[k].clone()).collect();
            v.push(b.clone());
            v
        })
        .collect();
    for c in 0..r {
        let p = (c..r).find(|&k| !a[k][c].is_zero())?;
        a.swap(c, p);
        let inv = Rational::one() / &a[c][c];
        for x in a[c].iter_mut() {
            *x *= &inv;
        }
        let pivot = a[c].clone();
        for (k, row) in a.iter_mut().enumerate() {
            if k != c && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, q) in row.iter_mut().zip(&pivot) {
                    *x -= &f * q;
                }
            }
        }
    }
    let mut y = vec![Rational::zero(); cols];
    for (k, &col) in basis.iter().enumerate() {
        let v = a[k][r].clone();
        if v.is_negative() {
            return None;
        }
        y[col] = v;
    }
    Some(y)
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return u64::MAX;
        }
    }
    acc as u64
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
            return out;
        };
        cur[i] += 1;
        for t in i + 1..k {
            cur[t] = cur[t - 1] + 1;
        }
    }
}

/// A positive-price equilibrium found by [`brute_equilibrium`].
#[derive(Clone, Debug, PartialEq)]
pub struct BruteEquilibrium {
    pub prices: Vec<Rational>,
    pub allocation: Allocation,
}

/// Largest number of configurations [`brute_equilibrium`] tries.
pub const CONFIG_LIMIT: u64 = 100_000;

/// Searches for an equilibrium with all prices positive, for markets whether
/// money clearing or not.
///
/// A configuration fixes the MBB edge set `E` (at least one edge per buyer),
/// which buyers are capped and which goods are capped. For a fixed
/// configuration the conditions are linear in `λ_i = 1/α_i`, `p_j` and the
/// money flow `f_e`:
/// `p_j ≥ u_ij λ_i` (equality on `E`); a capped buyer spends `c_i λ_i ≤ m_i`,
/// an uncapped one `m_i ≤ c_i λ_i`; a capped good earns `d_j ≤ p_j`, an
/// uncapped one `p_j ≤ d_j`. Each LP maximizes the smallest price (at most
/// one); a positive optimum is checked with the exact verifier. The first
/// configuration in enumeration order that passes is returned.
pub fn brute_equilibrium(market: &MarketInstance) -> Result<Option<BruteEquilibrium>> {
    let n = market.buyers();
    let m = market.goods();
    let interest: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..m).filter(|&j| market.utilities[i][j] > 0).collect())
        .collect();
    if interest.iter().any(Vec::is_empty) {
        return Ok(None);
    }
    let mut configs: u64 = 1 << (n + m).min(63);
    for row in &interest {
        configs = configs.saturating_mul((1u64 << row.len().min(63)) - 1);
    }
    if configs > CONFIG_LIMIT {
        return Err(Error::TooLarge(format!(
            "{configs} configurations exceed {CONFIG_LIMIT}"
        )));
    }
    let mk = unperturbed(market);
    let mut edge_masks = vec![1u64; n];
    loop {
        for caps in 0u64..1 << (n + m) {
            if let Some(eq) = try_configuration(market, &interest, &edge_masks, caps) {
                if verify_equilibrium(&mk, &eq.prices, &eq.allocation).passed() {
                    return Ok(Some(eq));
                }
            }
        }
        // Next edge-set choice: per buyer a non-empty subset of its goods.
        let mut i = 0;
        loop {
            if i == n {
                return Ok(None);
            }
            edge_masks[i] += 1;
            if edge_masks[i] < 1 << interest[i].len() {
                break;
            }
            edge_masks[i] = 1;
            i += 1;
        }
    }
}

fn try_configuration(
    market: &MarketInstance,
    interest: &[Vec<usize>],
    edge_masks: &[u64],
    caps: u64,
) -> Option<BruteEquilibrium> {
    let n = market.buyers();
    let m = market.goods();
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| {
            interest[i]
                .iter()
                .enumerate()
                .filter(move |(k, _)| edge_masks[i] >> k & 1 == 1)
                .map(move |(_, &j)| (i, j))
        })
        .collect();
    let lam = |i: usize| i;
    let price = |j: usize| n + j;
    let flow = |e: usize| n + m + e;
    let t = n + m + edges.len();
    let mut lp = LinearProgram::new(t + 1);
    let one = Rational::one;
    let u = |i: usize, j: usize| rational::uint(market.utilities[i][j]);
    for i in 0..n {
        for &j in &interest[i] {
            let on_edge = edges.contains(&(i, j));
            lp.constrain(
                vec![(price(j), one()), (lam(i), -u(i, j))],
                if on_edge { Sense::Eq } else { Sense::Ge },
                Rational::zero(),
            );
        }
        let out: Vec<(usize, Rational)> = edges
            .iter()
            .enumerate()
            .filter(|(_, &(b, _))| b == i)
            .map(|(e, _)| (flow(e), one()))
            .collect();
        let c = rational::uint(market.utility_caps[i]);
        let budget = rational::uint(market.budgets[i]);
        if caps >> i & 1 == 1 {
            let mut spend = out;
            spend.push((lam(i), -c.clone()));
            lp.constrain(spend, Sense::Eq, Rational::zero());
            lp.constrain(vec![(lam(i), c)], Sense::Le, budget);
        } else {
            lp.constrain(out, Sense::Eq, budget.clone());
            lp.constrain(vec![(lam(i), c)], Sense::Ge, budget);
        }
    }
    for j in 0..m {
        let mut earn: Vec<(usize, Rational)> = edges
            .iter()
            .enumerate()
            .filter(|(_, &(_, g))| g == j)
            .map(|(e, _)| (flow(e), one()))
            .collect();
        let d = rational::uint(market.earning_caps[j]);
        if caps >> (n + j) & 1 == 1 {
            lp.constrain(earn, Sense::Eq, d.clone());
            lp.constrain(vec![(price(j), one())], Sense::Ge, d);
        } else {
            earn.push((price(j), -one()));
            lp.constrain(earn, Sense::Eq, Rational::zero());
            lp.constrain(vec![(price(j), one())], Sense::Le, d);
        }
        lp.constrain(
            vec![(price(j), one()), (t, -one())],
            Sense::Ge,
            Rational::zero(),
        );
    }
    lp.constrain(vec![(t, one())], Sense::Le, one());
    lp.objective[t] = -one();
    let LpOutcome::Optimal { solution, .. } = lp::solve(&lp) else {
        return None;
    };
    if !solution[t].is_positive() {
        return None;
    }
    let prices: Vec<Rational> = (0..m).map(|j| solution[price(j)].clone()).collect();
    let mut allocation = Allocation::zeros(n, m);
    for (e, &(i, j)) in edges.iter().enumerate() {
        allocation.set(i, j, &solution[flow(e)] / &prices[j]);
    }
    Some(BruteEquilibrium { prices, allocation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    #[test]
    fn brute_nsw_small_cases() {
        let one = NswInstance::new(vec![vec![2]], vec![5]).unwrap();
        assert_eq!(brute_nsw(&one).unwrap().product, int(2));
        let diag = NswInstance::new(vec![vec![3, 1], vec![1, 3]], vec![10, 10]).unwrap();
        let best = brute_nsw(&diag).unwrap();
        assert_eq!(best.product, int(9));
        assert_eq!(best.owner, vec![0, 1]);
        let starved = NswInstance::new(vec![vec![3], vec![2]], vec![5, 5]).unwrap();
        assert_eq!(brute_nsw(&starved).unwrap().product, int(0));
    }

    #[test]
    fn brute_nsw_guard() {
        let big = NswInstance::new(vec![vec![1; 30]; 3], vec![5; 3]).unwrap();
        assert!(matches!(brute_nsw(&big), Err(Error::TooLarge(_))));
    }

    #[test]
    fn product_overflow_falls_back_to_bigint() {
        let p = product_of([u64::MAX, u64::MAX, 3].into_iter());
        assert_eq!(p, BigUint::from(u64::MAX) * u64::MAX * 3u64);
    }

    #[test]
    fn lp_oracle_single_edge() {
        // min x  s.t.  g = 4x, g = 3  →  x = 3/4.
        let mut prog = LinearProgram::new(2);
        prog.objective[1] = int(1);
        prog.constrain(vec![(0, int(1)), (1, int(-4))], Sense::Eq, int(0));
        prog.constrain(vec![(0, int(1))], Sense::Eq, int(3));
        assert_eq!(lp_oracle(&prog).unwrap().value(), Some(&frac(3, 4)));
    }

    #[test]
    fn lp_oracle_infeasible_and_redundant() {
        let mut prog = LinearProgram::new(1);
        prog.constrain(vec![(0, int(1))], Sense::Le, int(1));
        prog.constrain(vec![(0, int(1))], Sense::Ge, int(2));
        assert_eq!(lp_oracle(&prog).unwrap(), LpOutcome::Infeasible);

        let mut dup = LinearProgram::new(2);
        dup.objective = vec![int(1), int(2)];
        dup.constrain(vec![(0, int(1)), (1, int(1))], Sense::Eq, int(2));
        dup.constrain(vec![(0, int(2)), (1, int(2))], Sense::Eq, int(4));
        assert_eq!(lp_oracle(&dup).unwrap().value(), Some(&int(2)));
    }

    #[test]
    fn money_clearing_subsets() {
        let bad = MarketInstance::new(vec![2], vec![vec![2]], vec![1], vec![1]).unwrap();
        assert!(!brute_money_clearing(&bad).unwrap());
        let good = MarketInstance::new(
            vec![1, 1],
            vec![vec![1, 1], vec![1, 0]],
            vec![5, 5],
            vec![1, 1],
        )
        .unwrap();
        assert!(brute_money_clearing(&good).unwrap());
    }

    #[test]
    fn brute_equilibrium_of_the_single_good_market() {
        let market = MarketInstance::new(vec![2], vec![vec![2]], vec![1], vec![1]).unwrap();
        let eq = brute_equilibrium(&market).unwrap().unwrap();
        assert_eq!(eq.prices, vec![int(2)]);
        assert_eq!(eq.allocation.get(0, 0), &frac(1, 2));
    }
}
