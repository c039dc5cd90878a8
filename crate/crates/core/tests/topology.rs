use fogplace::topology::{generate_topology, HopLimit, NetworkGraph, TopologyConfig, TopologyKind};
use fogplace::RunConfig;

fn graph(kind: TopologyKind, nodes: usize, seed: u64) -> NetworkGraph {
    let cfg = TopologyConfig {
        kind,
        nodes,
        ..Default::default()
    };
    generate_topology(&cfg, seed).unwrap()
}

// All-pairs hop counts by Floyd-Warshall over the edge list.
fn floyd_hops(g: &NetworkGraph) -> Vec<Vec<u32>> {
    let n = g.len();
    let inf = u32::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for (u, v, _) in g.edges() {
        d[u][v] = 1;
        d[v][u] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

#[test]
fn hop_counts_match_floyd_warshall() {
    for kind in [TopologyKind::BA, TopologyKind::WS, TopologyKind::ER] {
        let g = graph(kind, 80, 11);
        let d = floyd_hops(&g);
        for (i, row) in d.iter().enumerate() {
            for (j, &h) in row.iter().enumerate() {
                assert_eq!(g.hop_distance(i, j), h, "{kind} {i}->{j}");
            }
        }
    }
}

#[test]
fn graphs_are_connected_and_symmetric() {
    for kind in [TopologyKind::BA, TopologyKind::WS, TopologyKind::ER] {
        for seed in 1..4 {
            let g = graph(kind, 200, seed);
            assert!(g.is_connected(), "{kind} seed {seed}");
            for (u, v, d) in g.edges() {
                assert_eq!(g.link_delay(v, u), Some(d));
                assert!(g.neighbors(u).iter().any(|&(w, _)| w == v));
            }
        }
    }
}

#[test]
fn edge_counts() {
    // BA: a star on m+1 nodes, then m edges per newcomer.
    let g = graph(TopologyKind::BA, 200, 3);
    assert_eq!(g.edge_count(), 2 + 2 * (200 - 3));
    // WS keeps the ring lattice's n*k/2 edges through rewiring; bridges only add.
    for seed in 1..6 {
        let g = graph(TopologyKind::WS, 200, seed);
        assert_eq!(g.edge_count(), 200 * 4 / 2 + g.bridges_added(), "seed {seed}");
    }
}

#[test]
fn path_delay_triangle_inequality_on_hops() {
    let g = graph(TopologyKind::ER, 60, 5);
    let n = g.len();
    for a in 0..n {
        for b in 0..n {
            assert_eq!(g.hop_distance(a, b), g.hop_distance(b, a));
            for c in (0..n).step_by(7) {
                assert!(g.hop_distance(a, b) <= g.hop_distance(a, c) + g.hop_distance(c, b));
            }
        }
    }
}

#[test]
fn neighborhoods_nest_and_exclude_cloud() {
    let g = graph(TopologyKind::BA, 200, 9);
    let cloud = g.cloud_nodes();
    for center in [0, 17, 150] {
        let n1 = g.neighborhood(center, HopLimit::Hops(1));
        let n3 = g.neighborhood(center, HopLimit::Hops(3));
        let all = g.neighborhood(center, HopLimit::Unlimited);
        assert!(n1.iter().all(|v| n3.contains(v)));
        assert!(n3.iter().all(|v| all.contains(v)));
        assert_eq!(all.len(), g.fog_nodes().len());
        assert!(all.iter().all(|v| !cloud.contains(v)));
        assert_eq!(n1[0], center);
        assert!(n3.windows(2).all(|w| g.hop_distance(center, w[0]) <= g.hop_distance(center, w[1])));
    }
}

#[test]
fn capacities_sum_to_configured_totals() {
    let cfg = RunConfig::default();
    let g = fogplace::engine::build_network(&cfg).unwrap();
    let fog: f64 = g.fog_nodes().iter().map(|&v| g.capacity(v).cpu).sum();
    let cloud: f64 = g.cloud_nodes().iter().map(|&v| g.capacity(v).cpu).sum();
    assert!((fog - cfg.capacity.fog.cpu).abs() < 1e-6 * fog.max(1.0));
    assert!((cloud - cfg.capacity.cloud.cpu).abs() < 1e-6 * cloud.max(1.0));
}

#[test]
fn same_seed_same_graph() {
    let a = graph(TopologyKind::WS, 120, 42);
    let b = graph(TopologyKind::WS, 120, 42);
    let ea: Vec<_> = a.edges().collect();
    let eb: Vec<_> = b.edges().collect();
    assert_eq!(ea, eb);
}
