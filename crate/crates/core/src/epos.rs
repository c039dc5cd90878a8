//! Decentralized plan selection over a tree overlay.
//!
//! Agents sit in a balanced tree. Every iteration has two phases:
//!
//! * bottom-up: children report a proposed subtree aggregate; the parent
//!   picks which child proposals to accept (keeping the previous aggregate
//!   of the rejected ones) together with one of its own plans, minimizing
//!   `lambda * L + (1 - lambda) * G` against the previous global response;
//! * top-down: the root fixes the new global response and the accept/reject
//!   decisions flow back down, so rejected subtrees revert to their previous
//!   selections.
//!
//! The root always has the option of rejecting every change, so the weighted
//! objective never increases from one iteration to the next.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costmodel::{metric_slice, variance, VarianceMetric};
use crate::error::{Error, Result};
use crate::plangen::PlacementPlan;
use crate::seed::{self, Stream};
use crate::topology::NodeId;

/// Balanced tree over agents. Indices refer to positions in the agent list
/// passed to [`build_tree`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    pub fanout: usize,
    pub agents: Vec<NodeId>,
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    /// Agent indices grouped by depth, root level first.
    pub levels: Vec<Vec<usize>>,
}

impl Tree {
    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }
}

/// Lays agents out in heap order over a complete `fanout`-ary tree, after a
/// seeded shuffle of who sits where.
pub fn build_tree(agents: &[NodeId], fanout: usize, seed: u64) -> Result<Tree> {
    if agents.is_empty() {
        return Err(Error::Parameter("tree needs at least one agent".into()));
    }
    if fanout == 0 {
        return Err(Error::Parameter("fanout must be positive".into()));
    }
    let m = agents.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut seed::stream_rng(seed, Stream::Tree, 0));

    let mut parent = vec![None; m];
    let mut children = vec![Vec::new(); m];
    let mut levels: Vec<Vec<usize>> = Vec::new();
    let mut depth_of_pos = vec![0usize; m];
    for pos in 0..m {
        let a = order[pos];
        if pos > 0 {
            let ppos = (pos - 1) / fanout;
            depth_of_pos[pos] = depth_of_pos[ppos] + 1;
            parent[a] = Some(order[ppos]);
            children[order[ppos]].push(a);
        }
        let d = depth_of_pos[pos];
        if levels.len() <= d {
            levels.push(Vec::new());
        }
        levels[d].push(a);
    }
    Ok(Tree {
        fanout,
        agents: agents.to_vec(),
        root: order[0],
        parent,
        children,
        levels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EposParams {
    pub lambda: f64,
    pub iterations: usize,
    pub metric: VarianceMetric,
}

impl Default for EposParams {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            iterations: 40,
            metric: VarianceMetric::Overall,
        }
    }
}

/// `lambda * local + (1 - lambda) * global`.
pub fn weighted_cost(global: f64, local: f64, lambda: f64) -> f64 {
    lambda * local + (1.0 - lambda) * global
}

/// Aggregate plan of one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalResponse {
    pub iteration: usize,
    /// Element-wise sum of all selected utilization vectors (plus baseline).
    pub vector: Vec<f64>,
    /// Variance of `vector` under the configured metric.
    pub global_cost: f64,
    /// Mean raw local cost of the selected plans.
    pub local_cost: f64,
    /// Normalized objective the agents minimize.
    pub weighted_cost: f64,
}

/// Final per-agent state.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeAgent {
    pub agent: NodeId,
    pub selected: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub subtree_response: Vec<f64>,
    /// Sum of normalized local costs of the subtree's selections.
    pub subtree_local_cost: f64,
    pub subtree_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EposOutcome {
    /// Selected plan index per agent (same order as the input plans).
    pub selections: Vec<usize>,
    /// Iteration 0 (cheapest plans) followed by each learning iteration.
    pub history: Vec<GlobalResponse>,
    pub agents: Vec<TreeAgent>,
}

impl EposOutcome {
    pub fn final_response(&self) -> &GlobalResponse {
        self.history.last().expect("history is never empty")
    }
}

struct Proposal {
    own: usize,
    accepted: Vec<bool>,
    sub: Vec<f64>,
    cost: f64,
}

fn metric_range(len: usize, metric: VarianceMetric) -> std::ops::Range<usize> {
    let n = len / 2;
    match metric {
        VarianceMetric::Cpu => 0..n,
        VarianceMetric::Mem => n..len,
        VarianceMetric::Overall => 0..len,
    }
}

/// Runs the iterative selection. `baseline` is load already present on the
/// nodes before any of these plans, added once to the global response.
pub fn run_epos(
    plans: &[Vec<PlacementPlan>],
    tree: &Tree,
    params: &EposParams,
    baseline: Option<&[f64]>,
) -> Result<EposOutcome> {
    let lambda = params.lambda;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Parameter(format!("lambda must lie in [0,1], got {lambda}")));
    }
    let m = plans.len();
    if m != tree.len() {
        return Err(Error::Parameter(format!(
            "{m} plan sets for a tree of {} agents",
            tree.len()
        )));
    }
    if let Some(i) = plans.iter().position(|p| p.is_empty()) {
        return Err(Error::Parameter(format!("agent {i} has no plans")));
    }
    let dim = plans[0][0].utilization.len();
    if plans.iter().flatten().any(|p| p.utilization.len() != dim) {
        return Err(Error::Parameter("utilization vectors differ in length".into()));
    }
    if baseline.is_some_and(|b| b.len() != dim) {
        return Err(Error::Parameter("baseline length mismatch".into()));
    }

    let max_cost = plans
        .iter()
        .flatten()
        .map(|p| p.local_cost)
        .fold(0.0_f64, f64::max);
    let cost_scale = if max_cost > 0.0 { max_cost } else { 1.0 };
    let norm_cost = |a: usize, p: usize| plans[a][p].local_cost / cost_scale;

    let range = metric_range(dim, params.metric);
    let width = range.len() as f64;
    let global_of = |v: &[f64]| variance(metric_slice(v, params.metric));

    // iteration 0: every agent takes its cheapest plan, lowest index on ties
    let mut selected: Vec<usize> = plans
        .iter()
        .map(|ps| {
            (0..ps.len())
                .min_by(|&a, &b| ps[a].local_cost.total_cmp(&ps[b].local_cost))
                .expect("non-empty plan set")
        })
        .collect();
    let mut sub = vec![vec![0.0; dim]; m];
    let mut sub_cost = vec![0.0; m];
    let mut sub_size = vec![0usize; m];
    for level in tree.levels.iter().rev() {
        for &a in level {
            let mut v = vec![0.0; dim];
            plans[a][selected[a]].utilization.add_to(&mut v);
            let mut c = norm_cost(a, selected[a]);
            let mut size = 1;
            for &ch in &tree.children[a] {
                for (x, y) in v.iter_mut().zip(&sub[ch]) {
                    *x += y;
                }
                c += sub_cost[ch];
                size += sub_size[ch];
            }
            sub[a] = v;
            sub_cost[a] = c;
            sub_size[a] = size;
        }
    }

    let with_baseline = |v: &[f64]| -> Vec<f64> {
        match baseline {
            Some(b) => v.iter().zip(b).map(|(x, y)| x + y).collect(),
            None => v.to_vec(),
        }
    };

    let root = tree.root;
    let mut global = with_baseline(&sub[root]);
    let g0 = global_of(&global);
    let g_scale = if g0 > 0.0 { g0 } else { 1.0 };
    let objective = |g: f64, cost_sum: f64| weighted_cost(g / g_scale, cost_sum / m as f64, lambda);

    let mut history = vec![GlobalResponse {
        iteration: 0,
        vector: global.clone(),
        global_cost: g0,
        local_cost: sub_cost[root] * cost_scale / m as f64,
        weighted_cost: objective(g0, sub_cost[root]),
    }];

    for t in 1..=params.iterations {
        let prev = history.last().expect("non-empty");
        let prev_g = prev.global_cost;
        let prev_obj = prev.weighted_cost;
        let total_cost = sub_cost[root];

        let mut proposals: Vec<Option<Proposal>> = (0..m).map(|_| None).collect();
        for level in tree.levels.iter().rev() {
            let decided: Vec<(usize, Proposal)> = level
                .par_iter()
                .map(|&a| {
                    let kids = &tree.children[a];
                    let rest: Vec<f64> = global.iter().zip(&sub[a]).map(|(g, s)| g - s).collect();
                    let rest_cost = total_cost - sub_cost[a];
                    let mut best: Option<(f64, usize, usize)> = None;
                    let mut best_cost = 0.0;
                    for mask in 0..(1usize << kids.len()) {
                        let mut base = rest.clone();
                        let mut combo_cost = 0.0;
                        for (k, &ch) in kids.iter().enumerate() {
                            let (v, c) = if mask >> k & 1 == 1 {
                                let p = proposals[ch].as_ref().expect("child decided");
                                (&p.sub, p.cost)
                            } else {
                                (&sub[ch], sub_cost[ch])
                            };
                            for (x, y) in base.iter_mut().zip(v) {
                                *x += y;
                            }
                            combo_cost += c;
                        }
                        let s1: f64 = base[range.clone()].iter().sum();
                        let s2: f64 = base[range.clone()].iter().map(|x| x * x).sum();
                        for (p, plan) in plans[a].iter().enumerate() {
                            let (mut d1, mut d2) = (0.0, 0.0);
                            for &(i, v) in plan.utilization.entries() {
                                if range.contains(&i) {
                                    d1 += v;
                                    d2 += v * (2.0 * base[i] + v);
                                }
                            }
                            let mean = (s1 + d1) / width;
                            let var = ((s2 + d2) / width - mean * mean).max(0.0);
                            let cost = rest_cost + combo_cost + norm_cost(a, p);
                            let obj = objective(var, cost);
                            if best.is_none_or(|(b, _, _)| obj < b) {
                                best = Some((obj, mask, p));
                                best_cost = combo_cost;
                            }
                        }
                    }
                    let (_, mask, own) = best.expect("at least one plan");
                    // summed directly rather than as (base - rest) to keep it exact
                    let mut new_sub = vec![0.0; dim];
                    for (k, &ch) in kids.iter().enumerate() {
                        let v = if mask >> k & 1 == 1 {
                            &proposals[ch].as_ref().expect("child decided").sub
                        } else {
                            &sub[ch]
                        };
                        for (x, y) in new_sub.iter_mut().zip(v) {
                            *x += y;
                        }
                    }
                    plans[a][own].utilization.add_to(&mut new_sub);
                    let accepted = (0..kids.len()).map(|k| mask >> k & 1 == 1).collect();
                    (
                        a,
                        Proposal {
                            own,
                            accepted,
                            sub: new_sub,
                            cost: best_cost + norm_cost(a, own),
                        },
                    )
                })
                .collect();
            for (a, p) in decided {
                proposals[a] = Some(p);
            }
        }

        let root_prop = proposals[root].as_ref().expect("root decided");
        let cand_global = with_baseline(&root_prop.sub);
        let cand_g = global_of(&cand_global);
        let cand_obj = objective(cand_g, root_prop.cost);
        let accept_root = cand_obj <= prev_obj;

        if accept_root {
            let mut stack = vec![root];
            while let Some(a) = stack.pop() {
                let p = proposals[a].take().expect("proposal present");
                selected[a] = p.own;
                for (k, &ch) in tree.children[a].iter().enumerate() {
                    if p.accepted[k] {
                        stack.push(ch);
                    }
                }
                sub[a] = p.sub;
                sub_cost[a] = p.cost;
            }
            global = cand_global;
        }

        let g_t = if accept_root { cand_g } else { prev_g };
        history.push(GlobalResponse {
            iteration: t,
            vector: global.clone(),
            global_cost: g_t,
            local_cost: sub_cost[root] * cost_scale / m as f64,
            weighted_cost: if accept_root { cand_obj } else { prev_obj },
        });
        if (g_t - prev_g).abs() <= 1e-12 {
            break;
        }
    }

    let agents = (0..m)
        .map(|a| TreeAgent {
            agent: tree.agents[a],
            selected: selected[a],
            parent: tree.parent[a],
            children: tree.children[a].clone(),
            subtree_response: sub[a].clone(),
            subtree_local_cost: sub_cost[a],
            subtree_size: sub_size[a],
        })
        .collect();

    Ok(EposOutcome {
        selections: selected,
        history,
        agents,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(v: &[f64], cost: f64) -> PlacementPlan {
        PlacementPlan::from_vector(v, cost)
    }

    #[test]
    fn tree_shapes() {
        let t = build_tree(&[42], 2, 0).unwrap();
        assert_eq!(t.root, 0);
        assert_eq!(t.depth(), 0);

        let t = build_tree(&(0..7).collect::<Vec<_>>(), 2, 1).unwrap();
        assert_eq!(t.depth(), 2);
        assert_eq!(t.levels.iter().map(Vec::len).collect::<Vec<_>>(), vec![1, 2, 4]);
        assert!(t.children.iter().all(|c| c.len() == 2 || c.is_empty()));

        assert!(build_tree(&[], 2, 0).is_err());
        assert!(build_tree(&[1], 0, 0).is_err());
    }

    #[test]
    fn weighted_cost_examples() {
        assert_eq!(weighted_cost(0.2, 0.4, 0.0), 0.2);
        assert_eq!(weighted_cost(0.2, 0.4, 1.0), 0.4);
        assert!((weighted_cost(0.2, 0.4, 0.5) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn lambda_out_of_range() {
        let plans = vec![vec![plan(&[0.0, 1.0], 0.0)]];
        let tree = build_tree(&[0], 2, 0).unwrap();
        for lambda in [-0.1, 1.1, f64::NAN] {
            let p = EposParams {
                lambda,
                ..Default::default()
            };
            assert!(matches!(run_epos(&plans, &tree, &p, None), Err(Error::Parameter(_))));
        }
    }

    #[test]
    fn two_agents_balance() {
        // agent 0 must load node 0 or node 1; agent 1 likewise; best is split
        let plans = vec![
            vec![plan(&[1.0, 0.0], 0.0), plan(&[0.0, 1.0], 0.1)],
            vec![plan(&[1.0, 0.0], 0.0), plan(&[0.0, 1.0], 0.1)],
        ];
        let tree = build_tree(&[0, 1], 2, 0).unwrap();
        let out = run_epos(&plans, &tree, &EposParams::default(), None).unwrap();
        assert_eq!(out.final_response().global_cost, 0.0);
        let mut s = out.selections.clone();
        s.sort();
        assert_eq!(s, vec![0, 1]);

        let selfish = EposParams {
            lambda: 1.0,
            ..Default::default()
        };
        let out = run_epos(&plans, &tree, &selfish, None).unwrap();
        assert_eq!(out.selections, vec![0, 0]);
    }

    #[test]
    fn starts_from_cheapest_plan() {
        let plans = vec![vec![plan(&[1.0, 0.0], 0.5), plan(&[0.0, 1.0], 0.2), plan(&[0.5, 0.5], 0.2)]];
        let tree = build_tree(&[0], 2, 0).unwrap();
        let selfish = EposParams {
            lambda: 1.0,
            ..Default::default()
        };
        let out = run_epos(&plans, &tree, &selfish, None).unwrap();
        assert_eq!(out.selections, vec![1]);
    }

    #[test]
    fn baseline_is_added_once() {
        let plans = vec![vec![plan(&[0.5, 0.0], 0.0)], vec![plan(&[0.0, 0.25], 0.0)]];
        let tree = build_tree(&[0, 1], 2, 0).unwrap();
        let out = run_epos(&plans, &tree, &EposParams::default(), Some(&[0.1, 0.1])).unwrap();
        assert_eq!(out.final_response().vector, vec![0.6, 0.35]);
    }
}
