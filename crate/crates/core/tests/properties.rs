use fogplace::costmodel::{
    check_capacity, empty_loads, local_cost, processing_time, variance, CostBreakdown,
};
use fogplace::engine::{build_network, profile_requests, selected_profiles};
use fogplace::epos::{build_tree, run_epos, weighted_cost, EposParams};
use fogplace::plangen::{generate_plans, AgentView, PlacementPlan, PlanGenParams};
use fogplace::topology::{HopLimit, Resources};
use fogplace::workload::{IngressDistribution, ServiceRequest};
use fogplace::RunConfig;
use proptest::prelude::*;

fn naive_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let sq: f64 = v.iter().map(|x| x * x).sum::<f64>() / n;
    let m: f64 = v.iter().sum::<f64>() / n;
    sq - m * m
}

proptest! {
    #[test]
    fn variance_matches_moment_form(v in prop::collection::vec(-10.0f64..10.0, 1..40)) {
        let a = variance(&v);
        prop_assert!(a >= 0.0);
        prop_assert!((a - naive_variance(&v)).abs() < 1e-9);
    }

    #[test]
    fn variance_is_shift_invariant(v in prop::collection::vec(0.0f64..1.0, 1..40), c in -5.0f64..5.0) {
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        prop_assert!((variance(&v) - variance(&shifted)).abs() < 1e-9);
    }

    #[test]
    fn local_cost_bounded(requests in 1usize..50, viol in 0usize..50, unh in 0usize..50,
                          dep in 0.0f64..1.0, storage in 0.01f64..10.0) {
        let c = CostBreakdown {
            requests,
            violations: viol.min(requests),
            unhosted: unh.min(requests),
            deployment_bytes: dep * storage,
            storage_demand: storage,
        };
        let l = local_cost(&c);
        prop_assert!((0.0..=3.0 + 1e-12).contains(&l));
    }

    #[test]
    fn capacity_check_is_strict(cap in 0.1f64..10.0, frac in 0.0f64..1.2, reserve in 0.5f64..0.99) {
        let c = Resources::new(cap, cap, cap);
        let load = cap * frac;
        let ok = check_capacity(c, Resources::new(load, load, load), reserve);
        prop_assert_eq!(ok, load < cap * reserve);
        prop_assert!(!check_capacity(c, Resources::new(cap * reserve, 0.0, 0.0), reserve));
    }

    #[test]
    fn processing_time_grows_with_load(cap in 1.0f64..100.0, a in 0.0f64..0.9, b in 0.0f64..0.9) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let t_lo = processing_time(cap, cap * lo, 1000.0).unwrap();
        let t_hi = processing_time(cap, cap * hi, 1000.0).unwrap();
        prop_assert!(t_lo <= t_hi);
        prop_assert!(processing_time(cap, cap, 1000.0).is_err());
    }
}

fn small_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.topology.nodes = 60;
    cfg.workload.profiles = vec![1];
    cfg.workload.distribution = IngressDistribution::Rand;
    cfg
}

fn agent_plans(cfg: &RunConfig) -> (Vec<usize>, Vec<Vec<PlacementPlan>>, Vec<Vec<ServiceRequest>>) {
    let g = build_network(cfg).unwrap();
    let p = &selected_profiles(cfg).unwrap()[0];
    let reqs = profile_requests(cfg, &g, p).unwrap();
    let prior = empty_loads(&g);
    let mut agents: Vec<usize> = reqs.iter().map(|r| r.ingress).collect();
    agents.sort();
    agents.dedup();
    let params = PlanGenParams::default();
    let mut plans = Vec::new();
    let mut groups = Vec::new();
    for &a in &agents {
        let mine: Vec<ServiceRequest> = reqs.iter().filter(|r| r.ingress == a).cloned().collect();
        let view = AgentView::new(&g, a, mine.clone(), HopLimit::Hops(3), &prior, a as u64 + 1);
        plans.push(generate_plans(&view, 20, &params).unwrap());
        groups.push(mine);
    }
    (agents, plans, groups)
}

#[test]
fn plans_cover_every_request_once() {
    let cfg = small_config();
    let g = build_network(&cfg).unwrap();
    let (agents, plans, groups) = agent_plans(&cfg);
    for ((&a, set), reqs) in agents.iter().zip(&plans).zip(&groups) {
        assert!(!set.is_empty() && set.len() <= 20);
        assert!(set.windows(2).all(|w| w[0].local_cost <= w[1].local_cost));
        for p in set {
            assert_eq!(p.utilization.len(), 2 * g.len());
            for r in reqs {
                let placed = p.assignments.contains_key(&r.id);
                let dropped = p.unhosted.contains(&r.id);
                assert!(placed ^ dropped, "agent {a} request {}", r.id);
            }
            assert_eq!(p.assignments.len() + p.unhosted.len(), reqs.len());
            assert!((p.local_cost - local_cost(&p.cost)).abs() < 1e-12);
            // every fog host stays within the hop bound and below the reserve
            let mut load = vec![Resources::default(); g.len()];
            for (id, &h) in &p.assignments {
                let r = reqs.iter().find(|r| r.id == *id).unwrap();
                load[h] += r.demand;
                if !g.node(h).is_cloud() {
                    assert!(g.hop_distance(a, h) <= 3);
                }
            }
            for (h, l) in load.iter().enumerate() {
                if l.cpu > 0.0 && !g.node(h).is_cloud() {
                    assert!(check_capacity(g.capacity(h), *l, cfg.cost.reserve));
                    let n = g.len();
                    assert!((p.utilization.get(h) - l.cpu / g.capacity(h).cpu).abs() < 1e-9);
                    assert!((p.utilization.get(n + h) - l.mem / g.capacity(h).mem).abs() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn epos_response_is_sum_of_selections() {
    let cfg = small_config();
    let (agents, plans, _) = agent_plans(&cfg);
    let tree = build_tree(&agents, 2, 3).unwrap();
    for lambda in [0.0, 0.5, 1.0] {
        let params = EposParams {
            lambda,
            ..Default::default()
        };
        let out = run_epos(&plans, &tree, &params, None).unwrap();
        let dim = plans[0][0].utilization.len();
        let mut sum = vec![0.0; dim];
        for (set, &s) in plans.iter().zip(&out.selections) {
            set[s].utilization.add_to(&mut sum);
        }
        let last = out.final_response();
        for (a, b) in sum.iter().zip(&last.vector) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((last.global_cost - variance(&sum)).abs() < 1e-12);
        let mean_local: f64 = plans
            .iter()
            .zip(&out.selections)
            .map(|(set, &s)| set[s].local_cost)
            .sum::<f64>()
            / plans.len() as f64;
        assert!((last.local_cost - mean_local).abs() < 1e-9);
        let root = &out.agents[tree.root];
        assert_eq!(root.subtree_size, agents.len());
        assert!(out.history.len() >= 2 && out.history.len() <= params.iterations + 1);
        if lambda == 0.0 {
            let costs: Vec<f64> = out.history.iter().map(|h| h.global_cost).collect();
            assert!(costs.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        }
    }
}

#[test]
fn lambda_one_keeps_cheapest_plans() {
    let cfg = small_config();
    let (agents, plans, _) = agent_plans(&cfg);
    let tree = build_tree(&agents, 3, 8).unwrap();
    let params = EposParams {
        lambda: 1.0,
        ..Default::default()
    };
    let out = run_epos(&plans, &tree, &params, None).unwrap();
    for (set, &s) in plans.iter().zip(&out.selections) {
        let best = set.iter().map(|p| p.local_cost).fold(f64::INFINITY, f64::min);
        assert_eq!(set[s].local_cost, best);
    }
    assert!((weighted_cost(0.3, 0.7, 1.0) - 0.7).abs() < 1e-15);
    assert!((weighted_cost(0.3, 0.7, 0.0) - 0.3).abs() < 1e-15);
}

#[test]
fn tree_is_complete_fanout_tree() {
    let agents: Vec<usize> = (100..131).collect();
    for fanout in [1, 2, 3, 5] {
        let t = build_tree(&agents, fanout, 4).unwrap();
        assert_eq!(t.len(), agents.len());
        let roots = (0..t.len()).filter(|&i| t.parent[i].is_none()).count();
        assert_eq!(roots, 1);
        assert!(t.children.iter().all(|c| c.len() <= fanout));
        // depth of the last heap slot
        let mut pos = agents.len() - 1;
        let mut expected_depth = 0;
        while pos > 0 {
            pos = (pos - 1) / fanout;
            expected_depth += 1;
        }
        assert_eq!(t.depth(), expected_depth, "fanout {fanout}");
    }
}
