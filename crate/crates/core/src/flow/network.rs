//! Max-flow over exact rational capacities, and feasibility of flows with
//! lower bounds and node balances.

use std::collections::VecDeque;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Arc capacity; `None` is unbounded.
pub type Capacity = Option<Rational>;

#[derive(Clone, Debug)]
struct Edge {
    to: usize,
    cap: Capacity,
    flow: Rational,
}

/// Residual-graph max-flow solver (Edmonds–Karp, shortest augmenting paths).
#[derive(Clone, Debug)]
pub struct MaxFlow {
    adj: Vec<Vec<usize>>,
    edges: Vec<Edge>,
}

impl MaxFlow {
    pub fn new(nodes: usize) -> Self {
        MaxFlow {
            adj: vec![Vec::new(); nodes],
            edges: Vec::new(),
        }
    }

    pub fn nodes(&self) -> usize {
        self.adj.len()
    }

    /// Adds `from → to` and returns its id. Ids are stable and dense.
    pub fn add_edge(&mut self, from: usize, to: usize, cap: Capacity) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge {
            to,
            cap,
            flow: Rational::zero(),
        });
        self.edges.push(Edge {
            to: from,
            cap: Some(Rational::zero()),
            flow: Rational::zero(),
        });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id / 2
    }

    /// Flow on the edge returned by [`MaxFlow::add_edge`].
    pub fn flow(&self, id: usize) -> &Rational {
        &self.edges[2 * id].flow
    }

    fn residual(&self, e: usize) -> Capacity {
        let edge = &self.edges[e];
        if e % 2 == 1 {
            // Reverse edge: can cancel the forward flow.
            return Some(self.edges[e - 1].flow.clone());
        }
        edge.cap.as_ref().map(|c| c - &edge.flow)
    }

    fn has_residual(&self, e: usize) -> bool {
        match self.residual(e) {
            None => true,
            Some(r) => r.is_positive(),
        }
    }

    fn push(&mut self, e: usize, amount: &Rational) {
        if e % 2 == 0 {
            self.edges[e].flow += amount;
        } else {
            self.edges[e - 1].flow -= amount;
        }
    }

    /// Augments to a maximum `s`–`t` flow and returns the value added by
    /// this call. Fails if an unbounded augmenting path exists.
    pub fn run(&mut self, s: usize, t: usize) -> Result<Rational> {
        let mut total = Rational::zero();
        loop {
            let mut pred: Vec<Option<usize>> = vec![None; self.nodes()];
            let mut seen = vec![false; self.nodes()];
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for &e in &self.adj[u] {
                    let v = self.edges[e].to;
                    if !seen[v] && self.has_residual(e) {
                        seen[v] = true;
                        pred[v] = Some(e);
                        queue.push_back(v);
                    }
                }
            }
            if !seen[t] {
                return Ok(total);
            }
            let mut path = Vec::new();
            let mut v = t;
            while v != s {
                let e = pred[v].expect("bfs predecessor");
                path.push(e);
                v = self.edges[e ^ 1].to;
            }
            let mut bottleneck: Option<Rational> = None;
            for &e in &path {
                if let Some(r) = self.residual(e) {
                    bottleneck = Some(match bottleneck {
                        Some(b) if b <= r => b,
                        _ => r,
                    });
                }
            }
            let amount = bottleneck
                .ok_or_else(|| Error::internal("unbounded augmenting path in max-flow"))?;
            for &e in &path {
                self.push(e, &amount);
            }
            total += amount;
        }
    }

    /// Nodes reachable from `s` in the residual graph.
    pub fn reachable_from(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.nodes()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &e in &self.adj[u] {
                let v = self.edges[e].to;
                if !seen[v] && self.has_residual(e) {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Nodes that can reach `t` in the residual graph.
    pub fn reaching(&self, t: usize) -> Vec<bool> {
        let mut seen = vec![false; self.nodes()];
        seen[t] = true;
        let mut stack = vec![t];
        while let Some(v) = stack.pop() {
            for &e in &self.adj[v] {
                // `e` leaves v; its twin enters v from `edges[e].to`.
                let u = self.edges[e].to;
                if !seen[u] && self.has_residual(e ^ 1) {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen
    }
}

/// An arc with lower and upper bounds.
#[derive(Clone, Debug)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub lower: Rational,
    pub upper: Capacity,
}

/// A network with bounded arcs and node balances. A positive balance is a
/// supply, a negative one a demand.
#[derive(Clone, Debug, Default)]
pub struct FlowNetwork {
    pub nodes: usize,
    pub arcs: Vec<Arc>,
    pub balance: Vec<Rational>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork {
            nodes,
            arcs: Vec::new(),
            balance: vec![Rational::zero(); nodes],
        }
    }

    pub fn add_arc(&mut self, from: usize, to: usize, lower: Rational, upper: Capacity) -> usize {
        self.arcs.push(Arc {
            from,
            to,
            lower,
            upper,
        });
        self.arcs.len() - 1
    }

    pub fn supply(&mut self, node: usize, amount: Rational) {
        self.balance[node] += amount;
    }

    pub fn demand(&mut self, node: usize, amount: Rational) {
        self.balance[node] -= amount;
    }
}

/// Outcome of [`max_flow_with_lower_bounds`].
#[derive(Clone, Debug)]
pub struct FlowSolution {
    pub feasible: bool,
    /// Flow per arc, meaningful when feasible.
    pub flow: Vec<Rational>,
    /// When infeasible: a node set `S` whose boundary cannot carry the net
    /// requirement, i.e. `Σ_{v∈S} b(v) + Σ_{arcs into S} lower`
    /// exceeds `Σ_{arcs out of S} upper`.
    pub cut: Option<Vec<bool>>,
}

/// Finds a flow meeting every lower and upper bound and every node balance,
/// or returns a violated cut.
pub fn max_flow_with_lower_bounds(net: &FlowNetwork) -> Result<FlowSolution> {
    let total: Rational = net.balance.iter().sum();
    if !total.is_zero() {
        return Err(Error::internal("node balances do not sum to zero"));
    }
    let mut excess = net.balance.clone();
    let s = net.nodes;
    let t = net.nodes + 1;
    let mut mf = MaxFlow::new(net.nodes + 2);
    let mut ids = Vec::with_capacity(net.arcs.len());
    for arc in &net.arcs {
        if arc.from >= net.nodes || arc.to >= net.nodes {
            return Err(Error::internal("arc endpoint out of range"));
        }
        if arc.lower.is_negative() {
            return Err(Error::internal("negative lower bound"));
        }
        let residual = match &arc.upper {
            Some(u) if *u < arc.lower => return Err(Error::internal("lower bound above capacity")),
            Some(u) => Some(u - &arc.lower),
            None => None,
        };
        excess[arc.to] += &arc.lower;
        excess[arc.from] -= &arc.lower;
        ids.push(mf.add_edge(arc.from, arc.to, residual));
    }
    let mut required = Rational::zero();
    for (v, e) in excess.iter().enumerate() {
        if e.is_positive() {
            mf.add_edge(s, v, Some(e.clone()));
            required += e;
        } else if e.is_negative() {
            mf.add_edge(v, t, Some(-e));
        }
    }
    let value = mf.run(s, t)?;
    if value == required {
        let flow = net
            .arcs
            .iter()
            .zip(&ids)
            .map(|(arc, &id)| mf.flow(id) + &arc.lower)
            .collect();
        Ok(FlowSolution {
            feasible: true,
            flow,
            cut: None,
        })
    } else {
        let mut side = mf.reachable_from(s);
        side.truncate(net.nodes);
        Ok(FlowSolution {
            feasible: false,
            flow: Vec::new(),
            cut: Some(side),
        })
    }
}

/// Checks that `flow` meets every bound and balance of `net`.
pub fn is_feasible_flow(net: &FlowNetwork, flow: &[Rational]) -> bool {
    if flow.len() != net.arcs.len() {
        return false;
    }
    let mut net_out = vec![Rational::zero(); net.nodes];
    for (arc, f) in net.arcs.iter().zip(flow) {
        if *f < arc.lower {
            return false;
        }
        if let Some(u) = &arc.upper {
            if f > u {
                return false;
            }
        }
        net_out[arc.from] += f;
        net_out[arc.to] -= f;
    }
    net_out == net.balance
}

/// Capacity surplus of a cut certificate: requirement minus what the
/// boundary can carry. Positive for a valid certificate.
pub fn cut_violation(net: &FlowNetwork, side: &[bool]) -> Option<Rational> {
    let mut need: Rational = (0..net.nodes)
        .filter(|&v| side[v])
        .map(|v| net.balance[v].clone())
        .sum();
    for arc in &net.arcs {
        match (side[arc.from], side[arc.to]) {
            (false, true) => need += &arc.lower,
            (true, false) => match &arc.upper {
                Some(u) => need -= u,
                None => return None,
            },
            _ => {}
        }
    }
    Some(need)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    #[test]
    fn classic_max_flow() {
        let mut mf = MaxFlow::new(4);
        mf.add_edge(0, 1, Some(int(3)));
        mf.add_edge(0, 2, Some(int(2)));
        mf.add_edge(1, 2, Some(int(1)));
        mf.add_edge(1, 3, Some(int(2)));
        mf.add_edge(2, 3, Some(int(3)));
        assert_eq!(mf.run(0, 3).unwrap(), int(5));
    }

    #[test]
    fn unbounded_path_is_an_error() {
        let mut mf = MaxFlow::new(2);
        mf.add_edge(0, 1, None);
        assert!(mf.run(0, 1).is_err());
    }

    #[test]
    fn single_arc_with_lower_bound() {
        let mut net = FlowNetwork::new(2);
        net.add_arc(0, 1, int(1), Some(int(2)));
        net.supply(0, int(1));
        net.demand(1, int(1));
        let sol = max_flow_with_lower_bounds(&net).unwrap();
        assert!(sol.feasible);
        assert_eq!(sol.flow, vec![int(1)]);
        assert!(is_feasible_flow(&net, &sol.flow));
    }

    #[test]
    fn lower_bound_above_supply_is_infeasible() {
        let mut net = FlowNetwork::new(2);
        net.add_arc(0, 1, int(2), Some(int(2)));
        net.supply(0, int(1));
        net.demand(1, int(1));
        let sol = max_flow_with_lower_bounds(&net).unwrap();
        assert!(!sol.feasible);
        let cut = sol.cut.unwrap();
        assert!(cut_violation(&net, &cut).unwrap() > int(0));
    }

    #[test]
    fn rational_capacities() {
        let mut net = FlowNetwork::new(3);
        net.add_arc(0, 1, frac(1, 3), Some(frac(1, 2)));
        net.add_arc(0, 2, int(0), None);
        net.supply(0, int(1));
        net.demand(1, frac(1, 2));
        net.demand(2, frac(1, 2));
        let sol = max_flow_with_lower_bounds(&net).unwrap();
        assert!(sol.feasible);
        assert!(is_feasible_flow(&net, &sol.flow));
    }
}
