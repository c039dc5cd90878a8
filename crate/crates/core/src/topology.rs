//! Edge-to-cloud network graphs: generation (BA, WS, ER), capacities, link
//! delays and hop-distance queries.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::{Add, AddAssign, Sub};
use std::path::Path;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, Stream};

pub type NodeId = usize;

/// A (CPU, memory, storage) triple, used for both capacities and demands.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Resources {
    pub cpu: f64,
    pub mem: f64,
    pub storage: f64,
}

impl Resources {
    pub const ZERO: Resources = Resources {
        cpu: 0.0,
        mem: 0.0,
        storage: 0.0,
    };

    pub fn new(cpu: f64, mem: f64, storage: f64) -> Self {
        Self { cpu, mem, storage }
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(self.cpu * k, self.mem * k, self.storage * k)
    }

    pub fn all_positive(&self) -> bool {
        self.cpu > 0.0 && self.mem > 0.0 && self.storage > 0.0
    }

    pub fn all_finite(&self) -> bool {
        self.cpu.is_finite() && self.mem.is_finite() && self.storage.is_finite()
    }
}

impl From<[f64; 3]> for Resources {
    fn from(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<Resources> for [f64; 3] {
    fn from(r: Resources) -> Self {
        [r.cpu, r.mem, r.storage]
    }
}

impl Add for Resources {
    type Output = Resources;
    fn add(self, o: Resources) -> Resources {
        Resources::new(self.cpu + o.cpu, self.mem + o.mem, self.storage + o.storage)
    }
}

impl AddAssign for Resources {
    fn add_assign(&mut self, o: Resources) {
        *self = *self + o;
    }
}

impl Sub for Resources {
    type Output = Resources;
    fn sub(self, o: Resources) -> Resources {
        Resources::new(self.cpu - o.cpu, self.mem - o.mem, self.storage - o.storage)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Fog,
    Cloud,
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layer::Fog => "fog",
            Layer::Cloud => "cloud",
        })
    }
}

impl FromStr for Layer {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fog" => Ok(Layer::Fog),
            "cloud" => Ok(Layer::Cloud),
            other => Err(format!("unknown layer `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: NodeId,
    pub layer: Layer,
    pub capacity: Resources,
}

impl NodeSpec {
    pub fn is_cloud(&self) -> bool {
        self.layer == Layer::Cloud
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TopologyKind {
    BA,
    WS,
    ER,
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TopologyKind::BA => "BA",
            TopologyKind::WS => "WS",
            TopologyKind::ER => "ER",
        })
    }
}

impl FromStr for TopologyKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "BA" => Ok(TopologyKind::BA),
            "WS" => Ok(TopologyKind::WS),
            "ER" => Ok(TopologyKind::ER),
            other => Err(format!("unknown topology `{other}`")),
        }
    }
}

/// Maximum hop distance between an ingress node and candidate hosts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HopLimit {
    Hops(u32),
    Unlimited,
}

impl HopLimit {
    pub fn admits(self, hops: u32) -> bool {
        match self {
            HopLimit::Hops(h) => hops <= h,
            HopLimit::Unlimited => true,
        }
    }
}

impl fmt::Display for HopLimit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HopLimit::Hops(h) => write!(f, "{h}"),
            HopLimit::Unlimited => f.write_str("inf"),
        }
    }
}

impl FromStr for HopLimit {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "inf" | "Inf" | "INF" | "unlimited" | "∞" => Ok(HopLimit::Unlimited),
            t => t
                .parse::<u32>()
                .map_err(|_| format!("invalid hop limit `{t}`"))
                .and_then(|h| {
                    if h == 0 {
                        Err("hop limit must be positive".to_string())
                    } else {
                        Ok(HopLimit::Hops(h))
                    }
                }),
        }
    }
}

impl Serialize for HopLimit {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            HopLimit::Hops(h) => s.serialize_u32(*h),
            HopLimit::Unlimited => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for HopLimit {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(i64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(n) if n > 0 && n <= u32::MAX as i64 => Ok(HopLimit::Hops(n as u32)),
            Repr::Num(n) => Err(serde::de::Error::custom(format!(
                "hop limit must be positive, got {n}"
            ))),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Graph model plus the knobs that shape links and the cloud layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopologyConfig {
    pub kind: TopologyKind,
    /// Total node count N, cloud nodes included.
    pub nodes: usize,
    pub cloud_nodes: usize,
    /// Barabasi-Albert attachment count.
    pub ba_m: usize,
    /// Watts-Strogatz ring degree (even).
    pub ws_k: usize,
    pub ws_beta: f64,
    /// Erdos-Renyi edge probability.
    pub er_p: f64,
    /// Uniform range for fog-fog link delays, milliseconds.
    pub fog_delay_ms: [f64; 2],
    /// Delay of any link that ends at a cloud node.
    pub wan_delay_ms: f64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            kind: TopologyKind::BA,
            nodes: 200,
            cloud_nodes: 1,
            ba_m: 2,
            ws_k: 4,
            ws_beta: 0.1,
            er_p: 0.02,
            fog_delay_ms: [1.0, 10.0],
            wan_delay_ms: 50.0,
        }
    }
}

impl TopologyConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes;
        if n < 2 {
            return Err(Error::Parameter(format!("need at least 2 nodes, got {n}")));
        }
        if self.cloud_nodes == 0 || self.cloud_nodes >= n {
            return Err(Error::Parameter(format!(
                "cloud_nodes must be in [1, {}), got {}",
                n, self.cloud_nodes
            )));
        }
        match self.kind {
            TopologyKind::BA => {
                if self.ba_m < 1 || self.ba_m >= n {
                    return Err(Error::Parameter(format!(
                        "BA attachment count m must satisfy 1 <= m < n, got m={} n={n}",
                        self.ba_m
                    )));
                }
            }
            TopologyKind::WS => {
                if self.ws_k < 2 || !self.ws_k.is_multiple_of(2) || self.ws_k >= n {
                    return Err(Error::Parameter(format!(
                        "WS ring degree k must be even with 2 <= k < n, got k={} n={n}",
                        self.ws_k
                    )));
                }
                if !(0.0..=1.0).contains(&self.ws_beta) {
                    return Err(Error::Parameter(format!(
                        "WS rewiring probability must lie in [0,1], got {}",
                        self.ws_beta
                    )));
                }
            }
            TopologyKind::ER => {
                if !(self.er_p > 0.0 && self.er_p <= 1.0) {
                    return Err(Error::Parameter(format!(
                        "ER edge probability must lie in (0,1], got {}",
                        self.er_p
                    )));
                }
            }
        }
        let [lo, hi] = self.fog_delay_ms;
        if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::Parameter(format!(
                "fog delay range [{lo}, {hi}] is invalid"
            )));
        }
        if !(self.wan_delay_ms >= 0.0 && self.wan_delay_ms.is_finite()) {
            return Err(Error::Parameter(format!(
                "wan delay {} is invalid",
                self.wan_delay_ms
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CapacityMode {
    Uniform,
    Heterogeneous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CapacityConfig {
    /// Capacity shared evenly by the cloud nodes.
    pub cloud: Resources,
    /// Fog capacity: network total, or per node when `fog_per_node` is set.
    pub fog: Resources,
    pub fog_per_node: bool,
    pub mode: CapacityMode,
    /// Gamma shape of the heterogeneous split; larger means more even.
    pub concentration: f64,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        Self {
            cloud: Resources::new(400.0, 500.0, 200.0),
            fog: Resources::new(704.0, 792.5, 313.5),
            fog_per_node: false,
            mode: CapacityMode::Uniform,
            concentration: 4.0,
        }
    }
}

impl CapacityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cloud.all_positive() && self.cloud.all_finite()) {
            return Err(Error::Config(format!(
                "cloud capacity must be strictly positive, got {:?}",
                self.cloud
            )));
        }
        if !(self.fog.all_positive() && self.fog.all_finite()) {
            return Err(Error::Config(format!(
                "fog capacity must be strictly positive, got {:?}",
                self.fog
            )));
        }
        if self.mode == CapacityMode::Heterogeneous && (self.concentration.is_nan() || self.concentration <= 0.0) {
            return Err(Error::Config("concentration must be positive".into()));
        }
        Ok(())
    }
}

/// Undirected, connected edge-to-cloud network.
#[derive(Debug, Clone)]
pub struct NetworkGraph {
    nodes: Vec<NodeSpec>,
    adjacency: Vec<Vec<(NodeId, f64)>>,
    delays: BTreeMap<(NodeId, NodeId), f64>,
    kind: TopologyKind,
    seed: u64,
    bridges_added: usize,
    hops: Vec<u32>,
    path_delays: Vec<f64>,
}

impl PartialEq for NetworkGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.delays == other.delays
            && self.kind == other.kind
            && self.seed == other.seed
            && self.bridges_added == other.bridges_added
    }
}

/// Builds the graph described by `cfg`. Identical inputs give identical
/// graphs, delays included. Capacities are placeholders (all 1.0) until
/// [`NetworkGraph::assign_capacities`] is called.
pub fn generate_topology(cfg: &TopologyConfig, seed: u64) -> Result<NetworkGraph> {
    cfg.validate()?;
    let n = cfg.nodes;
    let mut rng = seed::stream_rng(seed, Stream::Topology, 0);
    let mut edges = match cfg.kind {
        TopologyKind::BA => barabasi_albert(n, cfg.ba_m, &mut rng),
        TopologyKind::WS => watts_strogatz(n, cfg.ws_k, cfg.ws_beta, &mut rng),
        TopologyKind::ER => erdos_renyi(n, cfg.er_p, &mut rng),
    };
    let bridges_added = bridge_components(n, &mut edges, seed);

    let cloud_start = n - cfg.cloud_nodes;
    let nodes = (0..n)
        .map(|id| NodeSpec {
            id,
            layer: if id >= cloud_start {
                Layer::Cloud
            } else {
                Layer::Fog
            },
            capacity: Resources::new(1.0, 1.0, 1.0),
        })
        .collect::<Vec<_>>();

    let mut delay_rng = seed::stream_rng(seed, Stream::Delays, 0);
    let [lo, hi] = cfg.fog_delay_ms;
    let delays = edges
        .iter()
        .map(|&(u, v)| {
            let d = if nodes[u].is_cloud() || nodes[v].is_cloud() {
                cfg.wan_delay_ms
            } else if hi > lo {
                delay_rng.random_range(lo..hi)
            } else {
                lo
            };
            ((u, v), d)
        })
        .collect();

    Ok(NetworkGraph::from_parts(
        nodes,
        delays,
        cfg.kind,
        seed,
        bridges_added,
    ))
}

fn barabasi_albert(n: usize, m: usize, rng: &mut impl Rng) -> BTreeSet<(NodeId, NodeId)> {
    let mut edges = BTreeSet::new();
    // star on the first m+1 nodes
    let mut repeated = Vec::with_capacity(2 * n * m);
    for v in 1..=m {
        edges.insert((0, v));
        repeated.push(0);
        repeated.push(v);
    }
    for source in (m + 1)..n {
        let mut targets = BTreeSet::new();
        while targets.len() < m {
            targets.insert(repeated[rng.random_range(0..repeated.len())]);
        }
        for &t in &targets {
            edges.insert((t.min(source), t.max(source)));
            repeated.push(t);
            repeated.push(source);
        }
    }
    edges
}

fn watts_strogatz(
    n: usize,
    k: usize,
    beta: f64,
    rng: &mut impl Rng,
) -> BTreeSet<(NodeId, NodeId)> {
    let norm = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut edges = BTreeSet::new();
    for u in 0..n {
        for j in 1..=k / 2 {
            edges.insert(norm(u, (u + j) % n));
        }
    }
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if rng.random::<f64>() >= beta {
                continue;
            }
            let degree_u = edges.iter().filter(|&&(a, b)| a == u || b == u).count();
            if degree_u >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != u && !edges.contains(&norm(u, w)) {
                    break w;
                }
            };
            edges.remove(&norm(u, v));
            edges.insert(norm(u, w));
        }
    }
    edges
}

fn erdos_renyi(n: usize, p: f64, rng: &mut impl Rng) -> BTreeSet<(NodeId, NodeId)> {
    let mut edges = BTreeSet::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random::<f64>() < p {
                edges.insert((u, v));
            }
        }
    }
    edges
}

fn components(n: usize, edges: &BTreeSet<(NodeId, NodeId)>) -> Vec<Vec<NodeId>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Joins every component to the one holding node 0 with a single random
/// edge each, i.e. the minimum number of extra edges. Returns that number.
fn bridge_components(n: usize, edges: &mut BTreeSet<(NodeId, NodeId)>, seed: u64) -> usize {
    let comps = components(n, edges);
    if comps.len() <= 1 {
        return 0;
    }
    let mut rng = seed::stream_rng(seed, Stream::Bridges, 0);
    let mut joined: Vec<NodeId> = comps[0].clone();
    for comp in &comps[1..] {
        let a = *joined.choose(&mut rng).expect("non-empty component");
        let b = *comp.choose(&mut rng).expect("non-empty component");
        edges.insert((a.min(b), a.max(b)));
        joined.extend_from_slice(comp);
    }
    comps.len() - 1
}

impl NetworkGraph {
    fn from_parts(
        nodes: Vec<NodeSpec>,
        delays: BTreeMap<(NodeId, NodeId), f64>,
        kind: TopologyKind,
        seed: u64,
        bridges_added: usize,
    ) -> Self {
        let n = nodes.len();
        let mut adjacency = vec![Vec::new(); n];
        for (&(u, v), &d) in &delays {
            adjacency[u].push((v, d));
            adjacency[v].push((u, d));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(v, _)| v);
        }
        let mut g = Self {
            nodes,
            adjacency,
            delays,
            kind,
            seed,
            bridges_added,
            hops: vec![u32::MAX; n * n],
            path_delays: vec![f64::INFINITY; n * n],
        };
        g.compute_distances();
        g
    }

    /// All-pairs BFS. Path delay is the smallest summed link delay among
    /// the minimum-hop paths; each pair is computed once from the lower id
    /// and mirrored so the matrix is exactly symmetric.
    fn compute_distances(&mut self) {
        let n = self.nodes.len();
        let mut hop = vec![u32::MAX; n];
        let mut delay = vec![f64::INFINITY; n];
        let mut queue = VecDeque::with_capacity(n);
        for s in 0..n {
            hop.fill(u32::MAX);
            delay.fill(f64::INFINITY);
            hop[s] = 0;
            delay[s] = 0.0;
            queue.clear();
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &(v, w) in &self.adjacency[u] {
                    let cand = delay[u] + w;
                    if hop[v] == u32::MAX {
                        hop[v] = hop[u] + 1;
                        delay[v] = cand;
                        queue.push_back(v);
                    } else if hop[v] == hop[u] + 1 && cand < delay[v] {
                        delay[v] = cand;
                    }
                }
            }
            for t in s..n {
                self.hops[s * n + t] = hop[t];
                self.hops[t * n + s] = hop[t];
                self.path_delays[s * n + t] = delay[t];
                self.path_delays[t * n + s] = delay[t];
            }
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of edges added to join disconnected components.
    pub fn bridges_added(&self) -> usize {
        self.bridges_added
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &NodeSpec {
        &self.nodes[id]
    }

    pub fn capacity(&self, id: NodeId) -> Resources {
        self.nodes[id].capacity
    }

    pub fn fog_nodes(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.layer == Layer::Fog)
            .map(|n| n.id)
            .collect()
    }

    pub fn cloud_nodes(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.layer == Layer::Cloud)
            .map(|n| n.id)
            .collect()
    }

    pub fn neighbors(&self, u: NodeId) -> &[(NodeId, f64)] {
        &self.adjacency[u]
    }

    pub fn edge_count(&self) -> usize {
        self.delays.len()
    }

    /// Edges as `(u, v, delay_ms)` with `u < v`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.delays.iter().map(|(&(u, v), &d)| (u, v, d))
    }

    pub fn link_delay(&self, u: NodeId, v: NodeId) -> Option<f64> {
        if u == v {
            return Some(0.0);
        }
        self.delays.get(&(u.min(v), u.max(v))).copied()
    }

    pub fn hop_distance(&self, source: NodeId, dest: NodeId) -> u32 {
        self.hops[source * self.nodes.len() + dest]
    }

    /// Summed link delay along the shortest (by hops) path.
    pub fn path_delay(&self, source: NodeId, dest: NodeId) -> f64 {
        self.path_delays[source * self.nodes.len() + dest]
    }

    pub fn is_connected(&self) -> bool {
        let n = self.nodes.len();
        (0..n).all(|t| self.hops[t] != u32::MAX)
    }

    /// Fog nodes within `h` hops of `center` (center included when it is a
    /// fog node), ordered by (hop distance, id).
    pub fn neighborhood(&self, center: NodeId, h: HopLimit) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self
            .nodes
            .iter()
            .filter(|n| n.layer == Layer::Fog && h.admits(self.hop_distance(center, n.id)))
            .map(|n| n.id)
            .collect();
        out.sort_by_key(|&v| (self.hop_distance(center, v), v));
        out
    }

    /// Cloud node with the smallest path delay from `from` (ties: lowest id).
    pub fn nearest_cloud(&self, from: NodeId) -> Option<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.is_cloud())
            .map(|n| n.id)
            .min_by(|&a, &b| {
                self.path_delay(from, a)
                    .total_cmp(&self.path_delay(from, b))
                    .then(a.cmp(&b))
            })
    }

    /// Returns the graph with cloud and fog capacities set. Cloud capacity is
    /// split evenly over the cloud nodes; fog capacity is split evenly or by
    /// seeded Gamma weights depending on `cfg.mode`.
    pub fn assign_capacities(mut self, cfg: &CapacityConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let fog = self.fog_nodes();
        let cloud = self.cloud_nodes();
        if fog.is_empty() {
            return Err(Error::Config("network has no fog nodes".into()));
        }
        if cloud.is_empty() {
            return Err(Error::Config("network has no cloud node".into()));
        }
        let cloud_share = cfg.cloud.scale(1.0 / cloud.len() as f64);
        for &c in &cloud {
            self.nodes[c].capacity = cloud_share;
        }
        let fog_total = if cfg.fog_per_node {
            cfg.fog.scale(fog.len() as f64)
        } else {
            cfg.fog
        };
        let weights: Vec<f64> = match cfg.mode {
            CapacityMode::Uniform => vec![1.0 / fog.len() as f64; fog.len()],
            CapacityMode::Heterogeneous => {
                let gamma = Gamma::new(cfg.concentration, 1.0)
                    .map_err(|e| Error::Config(format!("bad concentration: {e}")))?;
                let mut rng = seed::stream_rng(seed, Stream::Capacity, 0);
                let raw: Vec<f64> = fog
                    .iter()
                    .map(|_| loop {
                        let x: f64 = gamma.sample(&mut rng);
                        if x > 0.0 {
                            break x;
                        }
                    })
                    .collect();
                let sum: f64 = raw.iter().sum();
                raw.into_iter().map(|x| x / sum).collect()
            }
        };
        for (&f, w) in fog.iter().zip(weights) {
            self.nodes[f].capacity = fog_total.scale(w);
        }
        Ok(self)
    }

    /// Writes the `u v delay_ms` edge list, preceded by one `#` metadata line.
    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(
            w,
            "# kind={} seed={} bridges={}",
            self.kind, self.seed, self.bridges_added
        )
        .map_err(io)?;
        for (u, v, d) in self.edges() {
            writeln!(w, "{u} {v} {d}").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// Writes the `id,layer,cpu,mem,storage` node attribute table.
    pub fn write_node_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "id,layer,cpu,mem,storage").map_err(io)?;
        for n in &self.nodes {
            let c = n.capacity;
            writeln!(w, "{},{},{},{},{}", n.id, n.layer, c.cpu, c.mem, c.storage).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// Rebuilds a graph from files written by [`Self::write_edge_list`] and
    /// [`Self::write_node_csv`].
    pub fn read_files(edge_path: &Path, node_path: &Path) -> Result<Self> {
        let parse_err = |path: &Path, line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };

        let file = std::fs::File::open(node_path).map_err(|e| Error::io(node_path, e))?;
        let mut nodes = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(node_path, e))?;
            let lineno = i + 1;
            if i == 0 {
                if line.trim() != "id,layer,cpu,mem,storage" {
                    return Err(parse_err(node_path, lineno, "unexpected header".into()));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 5 {
                return Err(parse_err(node_path, lineno, "expected 5 columns".into()));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| parse_err(node_path, lineno, format!("`{s}`: {e}")))
            };
            let id: NodeId = cols[0]
                .parse()
                .map_err(|e| parse_err(node_path, lineno, format!("id: {e}")))?;
            if id != nodes.len() {
                return Err(parse_err(node_path, lineno, "ids must be 0..N in order".into()));
            }
            let layer = cols[1]
                .parse()
                .map_err(|e: String| parse_err(node_path, lineno, e))?;
            let capacity = Resources::new(num(cols[2])?, num(cols[3])?, num(cols[4])?);
            if !capacity.all_positive() {
                return Err(parse_err(
                    node_path,
                    lineno,
                    "capacities must be positive".into(),
                ));
            }
            nodes.push(NodeSpec {
                id,
                layer,
                capacity,
            });
        }
        if nodes.is_empty() {
            return Err(Error::Empty(node_path.display().to_string()));
        }

        let file = std::fs::File::open(edge_path).map_err(|e| Error::io(edge_path, e))?;
        let mut kind = TopologyKind::ER;
        let mut seed = 0;
        let mut bridges = 0;
        let mut delays = BTreeMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(edge_path, e))?;
            let lineno = i + 1;
            if let Some(meta) = line.strip_prefix('#') {
                for kv in meta.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("kind", v)) => {
                            kind = v.parse().map_err(|e| parse_err(edge_path, lineno, e))?
                        }
                        Some(("seed", v)) => {
                            seed = v
                                .parse()
                                .map_err(|e| parse_err(edge_path, lineno, format!("{e}")))?
                        }
                        Some(("bridges", v)) => {
                            bridges = v
                                .parse()
                                .map_err(|e| parse_err(edge_path, lineno, format!("{e}")))?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 3 {
                return Err(parse_err(edge_path, lineno, "expected `u v delay_ms`".into()));
            }
            let u: NodeId = cols[0]
                .parse()
                .map_err(|e| parse_err(edge_path, lineno, format!("{e}")))?;
            let v: NodeId = cols[1]
                .parse()
                .map_err(|e| parse_err(edge_path, lineno, format!("{e}")))?;
            let d: f64 = cols[2]
                .parse()
                .map_err(|e| parse_err(edge_path, lineno, format!("{e}")))?;
            if u >= nodes.len() || v >= nodes.len() || u == v {
                return Err(parse_err(edge_path, lineno, format!("bad edge {u}-{v}")));
            }
            delays.insert((u.min(v), u.max(v)), d);
        }
        let g = Self::from_parts(nodes, delays, kind, seed, bridges);
        if !g.is_connected() {
            return Err(Error::Parameter(format!(
                "graph in {} is not connected",
                edge_path.display()
            )));
        }
        Ok(g)
    }

    #[cfg(test)]
    pub(crate) fn from_edges_for_test(n: usize, clouds: &[NodeId], edges: &[(NodeId, NodeId, f64)]) -> Self {
        let nodes = (0..n)
            .map(|id| NodeSpec {
                id,
                layer: if clouds.contains(&id) {
                    Layer::Cloud
                } else {
                    Layer::Fog
                },
                capacity: Resources::new(1.0, 1.0, 1.0),
            })
            .collect();
        let delays = edges
            .iter()
            .map(|&(u, v, d)| ((u.min(v), u.max(v)), d))
            .collect();
        Self::from_parts(nodes, delays, TopologyKind::ER, 0, 0)
    }
}

/// Builds a graph from explicit parts; used by tests and tools that need
/// hand-made networks.
pub fn graph_from_edges(
    nodes: Vec<NodeSpec>,
    edges: &[(NodeId, NodeId, f64)],
) -> Result<NetworkGraph> {
    for (i, n) in nodes.iter().enumerate() {
        if n.id != i {
            return Err(Error::Parameter("node ids must be 0..N in order".into()));
        }
        if !n.capacity.all_positive() {
            return Err(Error::Parameter(format!("node {i} has non-positive capacity")));
        }
    }
    let delays = edges
        .iter()
        .map(|&(u, v, d)| ((u.min(v), u.max(v)), d))
        .collect();
    let g = NetworkGraph::from_parts(nodes, delays, TopologyKind::ER, 0, 0);
    if !g.is_connected() {
        return Err(Error::Parameter("graph is not connected".into()));
    }
    Ok(g)
}
