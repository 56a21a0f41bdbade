//! Instance generators: seeded random allocation instances, the three
//! structural fixture markets and the MAX-E3-LIN-2 gadget.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::{MarketInstance, NswInstance};
use crate::rational::{self, Rational};

/// A seeded random instance: `v_ij` uniform in `0..=vmax`, `c_i` uniform in
/// `1..=cmax`, rows without a positive value re-drawn.
pub fn gen_random(n: usize, m: usize, vmax: u64, cmax: u64, seed: u64) -> Result<NswInstance> {
    if n == 0 || n > m {
        return Err(Error::InvalidInstance(format!(
            "need 1 <= n <= m, got n={n} m={m}"
        )));
    }
    if vmax == 0 || cmax == 0 {
        return Err(Error::InvalidInstance(
            "vmax and cmax must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        loop {
            let row: Vec<u64> = (0..m).map(|_| rng.gen_range(0..=vmax)).collect();
            if row.iter().any(|&v| v > 0) {
                values.push(row);
                break;
            }
        }
    }
    let caps = (0..n).map(|_| rng.gen_range(1..=cmax)).collect();
    NswInstance::new(values, caps)
}

/// A seeded random market with unit-free integer data: budgets, caps and
/// earning caps in `1..=pmax`, utilities in `0..=pmax`.
pub fn gen_random_market(n: usize, m: usize, pmax: u64, seed: u64) -> Result<MarketInstance> {
    if n == 0 || m == 0 || pmax == 0 {
        return Err(Error::InvalidInstance("need n, m, pmax positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budgets = (0..n).map(|_| rng.gen_range(1..=pmax)).collect();
    let utilities = (0..n)
        .map(|_| (0..m).map(|_| rng.gen_range(0..=pmax)).collect())
        .collect();
    let caps = (0..n).map(|_| rng.gen_range(1..=pmax)).collect();
    let ecaps = (0..m).map(|_| rng.gen_range(1..=pmax)).collect();
    MarketInstance::new(budgets, utilities, caps, ecaps)
}

/// The three structural example markets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixtureName {
    /// Not money clearing, yet with the equilibrium `p = 2`, `x = 1/2`.
    Prop1,
    /// Money clearing with a non-convex equilibrium set.
    Prop2,
    /// Equilibria disjoint from those of the three relaxed markets.
    Prop3,
}

impl FixtureName {
    pub const ALL: [FixtureName; 3] = [FixtureName::Prop1, FixtureName::Prop2, FixtureName::Prop3];

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "prop1" => Ok(FixtureName::Prop1),
            "prop2" => Ok(FixtureName::Prop2),
            "prop3" => Ok(FixtureName::Prop3),
            other => Err(Error::UnknownFixture(other.to_string())),
        }
    }
}

impl fmt::Display for FixtureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FixtureName::Prop1 => "prop1",
            FixtureName::Prop2 => "prop2",
            FixtureName::Prop3 => "prop3",
        })
    }
}

/// A fixture market with its published equilibria.
///
/// Fractional utilities and caps are made integral by scaling each
/// affected buyer's utilities and cap by `utility_scale[i]`; equilibrium
/// prices and allocations do not change under such scaling. Unbounded caps
/// are encoded as one more than anything reachable: `Σ_j u_ij + 1` for a
/// utility cap, `Σ_i m_i + 1` for an earning cap.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: FixtureName,
    pub market: MarketInstance,
    pub utility_scale: Vec<u64>,
    /// Factor applied to money (budgets, earning caps, prices); one here.
    pub price_scale: u64,
    pub money_clearing: bool,
    /// Published equilibrium prices (the Pareto-optimal ones for prop2).
    pub expected_prices: Vec<Vec<Rational>>,
    /// Published allocation, where the text gives one.
    pub expected_allocation: Option<Vec<Vec<Rational>>>,
}

impl Fixture {
    /// Whether `prices` lie in a published equilibrium family: `(2)` for
    /// prop1, `(1, x)` with `x ∈ [3, 6]` or `(5y, 50y)` with `y ≥ 1` for
    /// prop2, `(20, 20)` for prop3.
    pub fn in_published_family(&self, prices: &[Rational]) -> bool {
        let s = rational::uint(self.price_scale);
        let p: Vec<Rational> = prices.iter().map(|p| p / &s).collect();
        match self.name {
            FixtureName::Prop1 => p == [rational::int(2)],
            FixtureName::Prop3 => p == [rational::int(20), rational::int(20)],
            FixtureName::Prop2 => {
                if p.len() != 2 {
                    return false;
                }
                let first = p[0] == rational::int(1)
                    && p[1] >= rational::int(3)
                    && p[1] <= rational::int(6);
                let y = &p[0] / rational::int(5);
                let second = y >= rational::int(1) && p[1] == y * rational::int(50);
                first || second
            }
        }
    }
}

pub fn gen_fixture(name: FixtureName) -> Fixture {
    let int = rational::int;
    match name {
        FixtureName::Prop1 => Fixture {
            name,
            market: MarketInstance::new(vec![2], vec![vec![2]], vec![1], vec![1]).expect("valid"),
            utility_scale: vec![1],
            price_scale: 1,
            money_clearing: false,
            expected_prices: vec![vec![int(2)]],
            expected_allocation: Some(vec![vec![rational::frac(1, 2)]]),
        },
        // u = [[1, 3], [1/10, 1]], c = (∞, 1): buyer 2 scaled by 10.
        FixtureName::Prop2 => Fixture {
            name,
            market: MarketInstance::new(
                vec![1, 10],
                vec![vec![1, 3], vec![1, 10]],
                vec![1 + 3 + 1, 10],
                vec![5, 6],
            )
            .expect("valid"),
            utility_scale: vec![1, 10],
            price_scale: 1,
            money_clearing: true,
            expected_prices: vec![vec![int(1), int(6)], vec![int(5), int(50)]],
            expected_allocation: None,
        },
        // c = (0.9, ∞), d = (9, ∞), u all 1: buyer 1 scaled by 10.
        FixtureName::Prop3 => Fixture {
            name,
            market: MarketInstance::new(
                vec![100, 11],
                vec![vec![10, 10], vec![1, 1]],
                vec![9, 1 + 1 + 1],
                vec![9, 100 + 11 + 1],
            )
            .expect("valid"),
            utility_scale: vec![10, 1],
            price_scale: 1,
            money_clearing: true,
            expected_prices: vec![vec![int(20), int(20)]],
            expected_allocation: None,
        },
    }
}

/// An Ek-OCC-MAX-E3-LIN-2 instance: equations `x_a + x_b + x_c = rhs` over
/// GF(2) on distinct variables, every variable occurring exactly `k` times.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct E3Lin2Instance {
    variables: usize,
    equations: Vec<([usize; 3], bool)>,
    occurrences: usize,
}

impl E3Lin2Instance {
    pub fn new(variables: usize, equations: Vec<([usize; 3], bool)>) -> Result<Self> {
        if variables == 0 || equations.is_empty() {
            return Err(Error::InvalidInstance(
                "need variables and equations".into(),
            ));
        }
        let mut count = vec![0usize; variables];
        for (vars, _) in &equations {
            let [a, b, c] = *vars;
            if a == b || b == c || a == c {
                return Err(Error::InvalidInstance(
                    "equation variables must be distinct".into(),
                ));
            }
            for &v in vars {
                if v >= variables {
                    return Err(Error::InvalidInstance(format!(
                        "variable {} out of range",
                        v + 1
                    )));
                }
                count[v] += 1;
            }
        }
        let k = count[0];
        if k == 0 || count.iter().any(|&c| c != k) {
            return Err(Error::InvalidInstance(
                "every variable must occur the same positive number of times".into(),
            ));
        }
        Ok(E3Lin2Instance {
            variables,
            equations,
            occurrences: k,
        })
    }

    pub fn variables(&self) -> usize {
        self.variables
    }

    pub fn equations(&self) -> &[([usize; 3], bool)] {
        &self.equations
    }

    /// `k`.
    pub fn occurrences(&self) -> usize {
        self.occurrences
    }

    /// Number of equations satisfied by `assignment`.
    pub fn satisfied(&self, assignment: &[bool]) -> usize {
        self.equations
            .iter()
            .filter(|([a, b, c], rhs)| (assignment[*a] ^ assignment[*b] ^ assignment[*c]) == *rhs)
            .count()
    }
}

/// A random instance with `m` equations over `n` variables, each variable
/// occurring `3m/n` times.
pub fn gen_e3lin2(n: usize, m: usize, seed: u64) -> Result<E3Lin2Instance> {
    if n < 3 || m == 0 || (3 * m) % n != 0 {
        return Err(Error::InvalidInstance(format!(
            "need n >= 3 and n dividing 3m, got n={n} m={m}"
        )));
    }
    let k = 3 * m / n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slots: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(k)).collect();
    for _ in 0..10_000 {
        slots.shuffle(&mut rng);
        let triples: Vec<[usize; 3]> = slots.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
        if triples.iter().all(|[a, b, c]| a != b && b != c && a != c) {
            let equations = triples
                .into_iter()
                .map(|t| (t, rng.gen_bool(0.5)))
                .collect();
            return E3Lin2Instance::new(n, equations);
        }
    }
    Err(Error::InvalidInstance(
        "could not place equations on distinct variables".into(),
    ))
}

/// Agent index of `⟨x_v : b⟩`.
pub fn literal_agent(v: usize, b: bool) -> usize {
    2 * v + usize::from(b)
}

/// The hardness gadget: two agents `⟨x_i:0⟩`, `⟨x_i:1⟩` per variable with
/// cap `4k`; one switch item per variable worth `4k` to its two agents;
/// per equation `x_a + x_b + x_c = α` four classes of three items, one class
/// per satisfying assignment, each item worth 1 to the three agents of its
/// class. Items are ordered switch items first, then equations in order.
pub fn gen_hardness(lin: &E3Lin2Instance) -> Result<NswInstance> {
    let n = lin.variables();
    let k = lin.occurrences() as u64;
    let agents = 2 * n;
    let items = n + 12 * lin.equations().len();
    let mut values = vec![vec![0u64; items]; agents];
    for v in 0..n {
        values[literal_agent(v, false)][v] = 4 * k;
        values[literal_agent(v, true)][v] = 4 * k;
    }
    let mut item = n;
    for ([a, b, c], rhs) in lin.equations() {
        let r = *rhs;
        let classes = [(r, r, r), (!r, !r, r), (!r, r, !r), (r, !r, !r)];
        for (ba, bb, bc) in classes {
            for _ in 0..3 {
                values[literal_agent(*a, ba)][item] = 1;
                values[literal_agent(*b, bb)][item] = 1;
                values[literal_agent(*c, bc)][item] = 1;
                item += 1;
            }
        }
    }
    NswInstance::new(values, vec![4 * k; agents])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_is_seed_deterministic_and_bounded() {
        let a = gen_random(3, 5, 8, 20, 7).unwrap();
        let b = gen_random(3, 5, 8, 20, 7).unwrap();
        assert_eq!(a, b);
        for i in 0..3 {
            assert!(a.values()[i].iter().all(|&v| v <= 8));
            assert!(a.values()[i].iter().any(|&v| v > 0));
            assert!((1..=20).contains(&a.cap(i)));
        }
    }

    #[test]
    fn one_equation_gadget_shape() {
        let lin = E3Lin2Instance::new(3, vec![([0, 1, 2], true)]).unwrap();
        let inst = gen_hardness(&lin).unwrap();
        assert_eq!(inst.agents(), 6);
        assert_eq!(inst.items(), 15);
        assert!(inst.caps().iter().all(|&c| c == 4));
        for j in 3..15 {
            let holders = (0..6).filter(|&i| inst.value(i, j) == 1).count();
            assert_eq!(holders, 3);
        }
    }

    #[test]
    fn every_class_is_a_satisfying_assignment() {
        let lin = E3Lin2Instance::new(3, vec![([0, 1, 2], false)]).unwrap();
        let inst = gen_hardness(&lin).unwrap();
        for j in 3..15 {
            let bits: Vec<bool> = (0..3)
                .map(|v| inst.value(literal_agent(v, true), j) == 1)
                .collect();
            assert_eq!(lin.satisfied(&bits), 1);
        }
    }

    #[test]
    fn occurrence_mismatch_is_rejected() {
        assert!(E3Lin2Instance::new(4, vec![([0, 1, 2], true)]).is_err());
        assert!(E3Lin2Instance::new(3, vec![([0, 0, 2], true)]).is_err());
    }

    #[test]
    fn random_e3lin2_has_uniform_occurrences() {
        let lin = gen_e3lin2(6, 4, 3).unwrap();
        assert_eq!(lin.occurrences(), 2);
    }

    #[test]
    fn unknown_fixture() {
        assert!(matches!(
            FixtureName::parse("prop9"),
            Err(Error::UnknownFixture(_))
        ));
    }
}
