//! Preprocessing and recursive rounding of the forest-shaped equilibrium
//! allocation, plus exact checks of the per-tree guarantees.

use std::collections::VecDeque;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::instance::Allocation;
use crate::rational::{self, Rational};
use crate::rounding::normalize::NormalizedInstance;

/// One tree of the preprocessed forest.
#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    pub root: usize,
    /// Agents in breadth-first order from the root.
    pub agents: Vec<usize>,
    pub goods: Vec<usize>,
    /// Tree inside `B_0 × G_0`.
    pub zero_price: bool,
}

impl Tree {
    /// `k_T`.
    pub fn size(&self) -> usize {
        self.goods.len()
    }
}

/// The forest after preprocessing. Every remaining good has exactly one
/// parent agent and one child agent.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundingForest {
    pub trees: Vec<Tree>,
    pub good_parent: Vec<Option<usize>>,
    pub good_child: Vec<Option<usize>>,
    /// Goods assigned integrally during preprocessing.
    pub preassigned: Vec<Option<usize>>,
    /// Agents that lost their parent good and became roots.
    pub split: Vec<bool>,
    /// The fractional allocation the forest was built from.
    pub x: Allocation,
}

impl RoundingForest {
    /// Child goods of agent `i`, in index order.
    pub fn children(&self, i: usize) -> Vec<usize> {
        (0..self.good_parent.len())
            .filter(|&j| self.good_parent[j] == Some(i))
            .collect()
    }

    /// The value of agent `i` after preprocessing: kept edges count
    /// fractionally, preassigned goods integrally.
    pub fn retained_value(&self, norm: &NormalizedInstance, i: usize) -> Rational {
        let bundle: Vec<Rational> = (0..norm.items())
            .map(|j| {
                if self.preassigned[j] == Some(i) {
                    Rational::one()
                } else if self.good_parent[j] == Some(i) || self.good_child[j] == Some(i) {
                    self.x.get(i, j).clone()
                } else {
                    Rational::zero()
                }
            })
            .collect();
        norm.value(i, &bundle)
    }
}

/// Roots every support tree at its lowest-index agent, then applies the
/// three preprocessing rules in order: childless goods go to their parent;
/// a good with several children keeps the child holding the most of it;
/// a good whose child gets at most half its worth from it goes to the
/// parent. In positive-price trees the last test is `p_j ≤ m_i^a/2`, in
/// zero-price trees `V_ij x_ij ≤ C_i/2`. Cut-off children become roots.
pub fn preprocess(norm: &NormalizedInstance, x: &Allocation) -> Result<RoundingForest> {
    let n = norm.agents();
    let m = norm.items();
    let mut good_parent: Vec<Option<usize>> = vec![None; m];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut component_zero = vec![false; n];
    let mut seen_agent = vec![false; n];
    let mut seen_good = vec![false; m];
    let mut roots = Vec::new();

    for r in 0..n {
        if seen_agent[r] {
            continue;
        }
        roots.push(r);
        seen_agent[r] = true;
        let mut agents = vec![r];
        let mut goods = Vec::new();
        let mut parent_good: Vec<Option<usize>> = vec![None; n];
        let mut queue = VecDeque::from([r]);
        while let Some(i) = queue.pop_front() {
            for j in (0..m).filter(|&j| x.get(i, j).is_positive()) {
                if parent_good[i] == Some(j) {
                    continue;
                }
                if seen_good[j] {
                    return Err(Error::internal("allocation support is not a forest"));
                }
                seen_good[j] = true;
                good_parent[j] = Some(i);
                goods.push(j);
                for c in (0..n).filter(|&c| c != i && x.get(c, j).is_positive()) {
                    if seen_agent[c] {
                        return Err(Error::internal("allocation support is not a forest"));
                    }
                    seen_agent[c] = true;
                    parent_good[c] = Some(j);
                    children[j].push(c);
                    agents.push(c);
                    queue.push_back(c);
                }
            }
        }
        let zero = goods.iter().filter(|&&j| norm.g0[j]).count();
        if zero != 0 && zero != goods.len() {
            return Err(Error::internal(
                "tree mixes zero-price and positive-price goods",
            ));
        }
        let is_zero = if goods.is_empty() {
            norm.b0[r]
        } else {
            zero != 0
        };
        for &i in &agents {
            component_zero[i] = is_zero;
        }
    }

    let mut preassigned: Vec<Option<usize>> = vec![None; m];
    let mut good_child: Vec<Option<usize>> = vec![None; m];
    let mut split = vec![false; n];
    for j in 0..m {
        let Some(parent) = good_parent[j] else {
            continue;
        };
        let kids = &children[j];
        if kids.is_empty() {
            preassigned[j] = Some(parent);
            good_parent[j] = None;
            continue;
        }
        // Largest amount, ties to the lowest index.
        let keep = *kids
            .iter()
            .max_by(|&&a, &&b| x.get(a, j).cmp(x.get(b, j)).then(b.cmp(&a)))
            .expect("non-empty");
        for &c in kids {
            if c != keep {
                split[c] = true;
            }
        }
        let weak = if component_zero[keep] {
            &norm.values[keep][j] * x.get(keep, j) * rational::int(2) <= norm.caps[keep]
        } else {
            &norm.prices[j] * rational::int(2) <= norm.active_budgets[keep]
        };
        if weak {
            preassigned[j] = Some(parent);
            good_parent[j] = None;
            split[keep] = true;
        } else {
            good_child[j] = Some(keep);
        }
    }

    let mut forest = RoundingForest {
        trees: Vec::new(),
        good_parent,
        good_child,
        preassigned,
        split,
        x: x.clone(),
    };
    let mut tree_roots: Vec<usize> = (0..n)
        .filter(|&i| roots.contains(&i) || forest.split[i])
        .collect();
    tree_roots.sort_unstable();
    for r in tree_roots {
        let mut agents = vec![r];
        let mut goods = Vec::new();
        let mut k = 0;
        while k < agents.len() {
            let i = agents[k];
            for j in forest.children(i) {
                goods.push(j);
                agents.push(forest.good_child[j].expect("kept good has a child"));
            }
            k += 1;
        }
        forest.trees.push(Tree {
            root: r,
            agents,
            goods,
            zero_price: component_zero[r],
        });
    }
    let covered: usize = forest.trees.iter().map(|t| t.agents.len()).sum();
    if covered != n {
        return Err(Error::internal(
            "preprocessed trees do not partition the agents",
        ));
    }
    Ok(forest)
}

/// The recursion path `a_1, g_1, …, a_l, g_l, a_{l+1}` of one tree and the
/// child-good counts `k_1 … k_l`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecursionPath {
    pub agents: Vec<usize>,
    pub goods: Vec<usize>,
    pub child_counts: Vec<usize>,
}

impl RecursionPath {
    /// `l`.
    pub fn len(&self) -> usize {
        self.goods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goods.is_empty()
    }
}

/// An integral assignment with the recursion path of every tree.
#[derive(Clone, Debug, PartialEq)]
pub struct Rounding {
    pub owner: Vec<usize>,
    pub paths: Vec<RecursionPath>,
}

impl Rounding {
    pub fn allocation(&self, agents: usize) -> Allocation {
        let owner: Vec<Option<usize>> = self.owner.iter().map(|&i| Some(i)).collect();
        Allocation::from_assignment(agents, &owner)
    }
}

/// Rounds every tree: the root takes the child good worth most to it in the
/// fractional allocation (ties to the lowest index), every other good
/// outside that good's subtree goes to its child agent, and the child agent
/// of the chosen good roots the recursion. Preassigned goods keep their
/// owner. Goods outside the support go to the lowest-index agent that
/// values them, or to the first agent.
pub fn round(norm: &NormalizedInstance, forest: &RoundingForest) -> Rounding {
    let n = norm.agents();
    let m = norm.items();
    let mut owner: Vec<Option<usize>> = forest.preassigned.clone();
    let mut paths = Vec::with_capacity(forest.trees.len());
    for tree in &forest.trees {
        let mut path = RecursionPath {
            agents: vec![tree.root],
            goods: Vec::new(),
            child_counts: Vec::new(),
        };
        let mut a = tree.root;
        loop {
            let kids = forest.children(a);
            if kids.is_empty() {
                break;
            }
            let worth = |j: usize| &norm.values[a][j] * forest.x.get(a, j);
            let chosen = *kids
                .iter()
                .max_by(|&&p, &&q| worth(p).cmp(&worth(q)).then(q.cmp(&p)))
                .expect("non-empty");
            owner[chosen] = Some(a);
            for &g in kids.iter().filter(|&&g| g != chosen) {
                let mut stack = vec![g];
                while let Some(h) = stack.pop() {
                    let c = forest.good_child[h].expect("kept good has a child");
                    owner[h] = Some(c);
                    stack.extend(forest.children(c));
                }
            }
            path.goods.push(chosen);
            path.child_counts.push(kids.len());
            a = forest.good_child[chosen].expect("kept good has a child");
            path.agents.push(a);
        }
        paths.push(path);
    }
    let owner = (0..m)
        .map(|j| {
            owner[j].unwrap_or_else(|| {
                (0..n)
                    .find(|&i| norm.values[i][j].is_positive())
                    .unwrap_or(0)
            })
        })
        .collect();
    Rounding { owner, paths }
}

/// Outcome of one lemma over all trees of a run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LemmaTally {
    pub checked: usize,
    pub failed: usize,
}

impl LemmaTally {
    fn record(&mut self, ok: bool) {
        self.checked += 1;
        if !ok {
            self.failed += 1;
        }
    }

    pub fn passed(&self) -> bool {
        self.failed == 0
    }
}

/// Exact checks of the rounding guarantees. The `*0` tallies cover the
/// zero-price trees.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LemmaReport {
    pub tree: LemmaTally,
    pub half: LemmaTally,
    pub treeb: LemmaTally,
    pub tree0: LemmaTally,
    pub half0: LemmaTally,
    pub treeb0: LemmaTally,
    /// `Σ_T (k_T + 1) ≤ n` and `Σ_T Σ_i k_i ≤ n`.
    pub degrees: LemmaTally,
    pub violations: Vec<String>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn tallies(&self) -> [(&'static str, &LemmaTally); 7] {
        [
            ("tree", &self.tree),
            ("half", &self.half),
            ("treeb", &self.treeb),
            ("tree0", &self.tree0),
            ("half0", &self.half0),
            ("treeb0", &self.treeb0),
            ("degrees", &self.degrees),
        ]
    }
}

impl fmt::Display for LemmaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, t) in self.tallies() {
            writeln!(f, "lemma {name} checked {} failed {}", t.checked, t.failed)?;
        }
        for v in &self.violations {
            writeln!(f, "violation {v}")?;
        }
        Ok(())
    }
}

/// The lower bound on a tree's welfare product:
/// `(1/2)^{k_T−l+1} / (k_1⋯k_l) · Π C_i · Π p_j`, where the caps range over
/// the capped agents of `T` (all agents for a zero-price tree) and the
/// prices over goods above one that are in `T` or preassigned to its agents.
pub fn tree_bound(
    norm: &NormalizedInstance,
    forest: &RoundingForest,
    tree: &Tree,
    path: &RecursionPath,
) -> Rational {
    let exponent = (tree.size() + 1 - path.len()) as u32;
    let mut bound = rational::pow(&rational::frac(1, 2), exponent);
    for &k in &path.child_counts {
        bound /= rational::uint(k as u64);
    }
    for &i in &tree.agents {
        if tree.zero_price || norm.capped[i] {
            bound *= &norm.caps[i];
        }
    }
    if !tree.zero_price {
        let preassigned = (0..norm.items())
            .filter(|&j| forest.preassigned[j].is_some_and(|i| tree.agents.contains(&i)));
        for j in tree.goods.iter().copied().chain(preassigned) {
            if norm.prices[j] > Rational::one() {
                bound *= &norm.prices[j];
            }
        }
    }
    bound
}

/// Checks every per-tree guarantee of the rounding with exact arithmetic.
pub fn check_lemmas(
    norm: &NormalizedInstance,
    forest: &RoundingForest,
    rounding: &Rounding,
) -> LemmaReport {
    let n = norm.agents();
    let m = norm.items();
    let mut report = LemmaReport::default();
    let equilibrium: Vec<Rational> = (0..n).map(|i| norm.value(i, forest.x.row(i))).collect();
    let finals: Vec<Rational> = (0..n)
        .map(|i| {
            let bundle: Vec<Rational> = (0..m)
                .map(|j| {
                    if rounding.owner[j] == i {
                        Rational::one()
                    } else {
                        Rational::zero()
                    }
                })
                .collect();
            norm.value(i, &bundle)
        })
        .collect();
    let half = |v: &Rational| v / rational::int(2);

    for (tree, path) in forest.trees.iter().zip(&rounding.paths) {
        let zero = tree.zero_price;
        for &i in &tree.agents {
            let kept = forest.retained_value(norm, i);
            let need = if i == tree.root {
                half(&equilibrium[i])
            } else {
                equilibrium[i].clone()
            };
            let ok = kept >= need;
            (if zero {
                &mut report.tree0
            } else {
                &mut report.tree
            })
            .record(ok);
            if !ok {
                report.violations.push(format!(
                    "{} agent {} keeps {} below {}",
                    if zero { "tree0" } else { "tree" },
                    i + 1,
                    rational::to_text(&kept),
                    rational::to_text(&need)
                ));
            }
            let parent_good = (0..m).find(|&j| forest.good_child[j] == Some(i));
            if let Some(j) = parent_good.filter(|&j| rounding.owner[j] == i) {
                let need = half(&equilibrium[i]);
                let ok = finals[i] >= need;
                (if zero {
                    &mut report.half0
                } else {
                    &mut report.half
                })
                .record(ok);
                if !ok {
                    report.violations.push(format!(
                        "{} agent {} with parent good {} gets {} below {}",
                        if zero { "half0" } else { "half" },
                        i + 1,
                        j + 1,
                        rational::to_text(&finals[i]),
                        rational::to_text(&need)
                    ));
                }
            }
        }
        let product: Rational = tree.agents.iter().map(|&i| finals[i].clone()).product();
        let bound = tree_bound(norm, forest, tree, path);
        let ok = product >= bound;
        (if zero {
            &mut report.treeb0
        } else {
            &mut report.treeb
        })
        .record(ok);
        if !ok {
            report.violations.push(format!(
                "{} tree rooted at agent {} has product {} below {}",
                if zero { "treeb0" } else { "treeb" },
                tree.root + 1,
                rational::to_text(&product),
                rational::to_text(&bound)
            ));
        }
    }

    let agents: usize = forest.trees.iter().map(|t| t.size() + 1).sum();
    let degrees: usize = rounding.paths.iter().flat_map(|p| &p.child_counts).sum();
    let ok = agents <= n && degrees <= n;
    report.degrees.record(ok);
    if !ok {
        report.violations.push(format!(
            "degrees agents {agents} child goods {degrees} exceed {n}"
        ));
    }
    report
}

/// Whether every agent ends with positive value in the rounded allocation.
pub fn all_positive(norm: &NormalizedInstance, rounding: &Rounding) -> bool {
    (0..norm.agents()).all(|i| {
        let bundle: Vec<Rational> = (0..norm.items())
            .map(|j| {
                if rounding.owner[j] == i {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            })
            .collect();
        norm.value(i, &bundle).is_positive()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    /// Uncapped agents, unit active budgets, MBB normalized values equal to
    /// prices wherever `x > 0`.
    fn norm_from(x: &[Vec<Rational>], prices: Vec<Rational>) -> NormalizedInstance {
        let n = x.len();
        let values = x
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&prices)
                    .map(|(q, p)| {
                        if q.is_positive() {
                            p.clone()
                        } else {
                            Rational::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        NormalizedInstance {
            values,
            caps: vec![int(100); n],
            g0: prices.iter().map(Zero::is_zero).collect(),
            prices,
            b0: vec![false; n],
            capped: vec![false; n],
            alphas: vec![Some(int(1)); n],
            active_budgets: vec![int(1); n],
        }
    }

    #[test]
    fn star_keeps_the_largest_child() {
        // One good held as (1/2, 1/4, 3/20, 1/10); agent 1 is the parent.
        let x = vec![
            vec![frac(1, 2), int(0)],
            vec![frac(1, 4), int(0)],
            vec![frac(3, 20), int(0)],
            vec![frac(1, 10), int(0)],
        ];
        let norm = norm_from(&x, vec![int(1), int(0)]);
        let forest = preprocess(&norm, &Allocation::from_matrix(x)).unwrap();
        assert_eq!(forest.good_child[0], Some(1));
        assert!(forest.split[2] && forest.split[3]);
        assert!(!forest.split[1]);
        assert_eq!(forest.trees.len(), 3);
    }

    #[test]
    fn cheap_good_goes_to_the_parent() {
        // p = 1/4 ≤ m^a/2 for the child: rule (c) fires.
        let x = vec![vec![int(1), frac(1, 2)], vec![int(0), frac(1, 2)]];
        let mut norm = norm_from(&x, vec![frac(3, 4), frac(1, 4)]);
        norm.active_budgets = vec![int(1), int(1)];
        let forest = preprocess(&norm, &Allocation::from_matrix(x)).unwrap();
        assert_eq!(forest.preassigned[0], Some(0));
        assert_eq!(forest.preassigned[1], Some(0));
        assert!(forest.split[1]);
    }

    #[test]
    fn root_takes_its_best_child_good() {
        // Root 0 holds goods 0 and 1 worth 3 and 1 to it; children 1 and 2.
        let x = vec![
            vec![frac(3, 4), frac(1, 4), int(0)],
            vec![frac(1, 4), int(0), int(1)],
            vec![int(0), frac(3, 4), int(0)],
        ];
        let mut norm = norm_from(&x, vec![int(1), int(1), int(1)]);
        norm.values[0] = vec![int(4), int(4), int(0)];
        norm.caps = vec![int(100); 3];
        let forest = preprocess(&norm, &Allocation::from_matrix(x)).unwrap();
        let rounding = round(&norm, &forest);
        assert_eq!(rounding.owner[0], 0);
        assert_eq!(rounding.owner[1], 2);
        assert_eq!(rounding.paths[0].agents[..2], [0, 1]);
        let report = check_lemmas(&norm, &forest, &rounding);
        assert!(report.half.checked > 0);
    }
}
