//! IoT request workloads: per-interval profiles, request materialization,
//! deadlines and ingress placement.

use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Beta, Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, Stream};
use crate::topology::{NetworkGraph, NodeId, Resources};

/// One IoT service request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceRequest {
    pub id: u64,
    /// Index of the requested service in the deadline table.
    pub service: usize,
    pub demand: Resources,
    pub deadline_ms: f64,
    pub arrival_ms: f64,
    pub ingress: NodeId,
    pub waiting_ms: f64,
}

impl ServiceRequest {
    /// Remaining slack before the deadline, used to order requests.
    pub fn slack_ms(&self) -> f64 {
        self.deadline_ms - self.waiting_ms
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Deadline {
    Fixed(f64),
    /// Drawn uniformly from `[lo, hi]` each time the service is requested.
    Range(f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceClass {
    pub label: String,
    pub deadline_ms: Deadline,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

/// Service catalogue with deadlines, one entry per delay-sensitive service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeadlineTable(pub Vec<ServiceClass>);

impl Default for DeadlineTable {
    fn default() -> Self {
        const S: f64 = 1000.0;
        let rows: &[(&[&str], Deadline)] = &[
            (&["Big data file download", "Off-line backup"], Deadline::Fixed(100.0 * S)),
            (&["YouTube", "Home automation", "Video surveillance"], Deadline::Fixed(10.0 * S)),
            (&["Web search", "Sensor readings"], Deadline::Fixed(S)),
            (&["Interactive web site", "Smart building", "Analytics"], Deadline::Fixed(100.0)),
            (&["Broadcast"], Deadline::Fixed(50.0)),
            (&["Web game"], Deadline::Fixed(30.0)),
            (
                &["Virtual reality", "Smart transportation", "Finance", "Accelerated video"],
                Deadline::Fixed(10.0),
            ),
            (&["Health care"], Deadline::Fixed(5.0)),
            (&["Augmented reality"], Deadline::Range(2.0, 10.0)),
            (
                &["Haptics", "Robotics", "Real-time manufacturing", "Self-driving"],
                Deadline::Fixed(1.0),
            ),
        ];
        DeadlineTable(
            rows.iter()
                .flat_map(|(labels, d)| {
                    labels.iter().map(move |l| ServiceClass {
                        label: (*l).to_string(),
                        deadline_ms: *d,
                        weight: 1.0,
                    })
                })
                .collect(),
        )
    }
}

impl DeadlineTable {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::Config("deadline table is empty".into()));
        }
        for c in &self.0 {
            let ok = match c.deadline_ms {
                Deadline::Fixed(d) => d > 0.0 && d.is_finite(),
                Deadline::Range(lo, hi) => lo > 0.0 && hi >= lo && hi.is_finite(),
            };
            if !ok || !(c.weight >= 0.0 && c.weight.is_finite()) {
                return Err(Error::Config(format!("invalid service class `{}`", c.label)));
            }
        }
        if self.0.iter().map(|c| c.weight).sum::<f64>() <= 0.0 {
            return Err(Error::Config("deadline table weights sum to zero".into()));
        }
        Ok(())
    }

    /// True if `d` is a value the table can emit.
    pub fn admits(&self, d: f64) -> bool {
        self.0.iter().any(|c| match c.deadline_ms {
            Deadline::Fixed(x) => x == d,
            Deadline::Range(lo, hi) => (lo..=hi).contains(&d),
        })
    }

    fn draw(&self, rng: &mut impl Rng) -> (usize, f64) {
        let total: f64 = self.0.iter().map(|c| c.weight).sum();
        let mut x = rng.random::<f64>() * total;
        let mut pick = self.0.len() - 1;
        for (i, c) in self.0.iter().enumerate() {
            if x < c.weight {
                pick = i;
                break;
            }
            x -= c.weight;
        }
        let deadline = match self.0[pick].deadline_ms {
            Deadline::Fixed(d) => d,
            Deadline::Range(lo, hi) if hi > lo => rng.random_range(lo..=hi),
            Deadline::Range(lo, _) => lo,
        };
        (pick, deadline)
    }
}

/// Aggregate load of one scheduling interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadProfile {
    pub index: usize,
    pub duration_ms: f64,
    pub load: Resources,
    pub request_count: usize,
}

/// Per-profile aggregate ranges for synthetic workloads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticProfiles {
    pub count: usize,
    pub cpu: [f64; 2],
    pub mem: [f64; 2],
    pub storage: [f64; 2],
    pub requests: [usize; 2],
}

impl Default for SyntheticProfiles {
    fn default() -> Self {
        Self {
            count: 26,
            cpu: [300.0, 500.0],
            mem: [340.0, 560.0],
            storage: [130.0, 220.0],
            requests: [800, 1200],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSource {
    Synthetic { params: SyntheticProfiles, seed: u64 },
    Csv(PathBuf),
}

fn uniform(rng: &mut impl Rng, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Loads ordered profiles. CSV input has header `cpu,mem,storage,count` and
/// one row per profile.
pub fn load_profiles(source: &ProfileSource, duration_ms: f64) -> Result<Vec<WorkloadProfile>> {
    let profiles = match source {
        ProfileSource::Synthetic { params, seed } => {
            let ranges_ok = [params.cpu, params.mem, params.storage]
                .iter()
                .all(|&[lo, hi]| lo >= 0.0 && hi >= lo && hi.is_finite())
                && params.requests[1] >= params.requests[0];
            if !ranges_ok {
                return Err(Error::Config(format!(
                    "invalid synthetic profile ranges: {params:?}"
                )));
            }
            let mut rng = seed::stream_rng(*seed, Stream::Profiles, 0);
            (0..params.count)
                .map(|index| {
                    let load = Resources::new(
                        uniform(&mut rng, params.cpu),
                        uniform(&mut rng, params.mem),
                        uniform(&mut rng, params.storage),
                    );
                    let [lo, hi] = params.requests;
                    let mut request_count = if hi > lo {
                        rng.random_range(lo..=hi)
                    } else {
                        lo
                    };
                    if !load.all_positive() {
                        request_count = 0;
                    }
                    WorkloadProfile {
                        index,
                        duration_ms,
                        load,
                        request_count,
                    }
                })
                .collect::<Vec<_>>()
        }
        ProfileSource::Csv(path) => read_profile_csv(path, duration_ms)?,
    };
    if profiles.is_empty() {
        return Err(Error::Empty("workload source yields no profiles".into()));
    }
    Ok(profiles)
}

fn read_profile_csv(path: &Path, duration_ms: f64) -> Result<Vec<WorkloadProfile>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = i + 1;
        if i == 0 {
            let header: Vec<&str> = line.split(',').map(str::trim).collect();
            if header != ["cpu", "mem", "storage", "count"] {
                return Err(err(lineno, format!("expected header cpu,mem,storage,count, got `{line}`")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(err(lineno, format!("expected 4 columns, got {}", cols.len())));
        }
        let mut vals = [0.0; 3];
        for (v, s) in vals.iter_mut().zip(&cols[..3]) {
            *v = s
                .parse::<f64>()
                .map_err(|e| err(lineno, format!("`{s}`: {e}")))?;
            if !(*v >= 0.0 && v.is_finite()) {
                return Err(err(lineno, format!("negative or non-finite load `{s}`")));
            }
        }
        let count: usize = cols[3]
            .parse()
            .map_err(|e| err(lineno, format!("`{}`: {e}", cols[3])))?;
        let load = Resources::from(vals);
        if count > 0 && !load.all_positive() {
            return Err(err(lineno, "requests with zero aggregate load".into()));
        }
        out.push(WorkloadProfile {
            index: out.len(),
            duration_ms,
            load,
            request_count: count,
        });
    }
    Ok(out)
}

pub fn write_profile_csv(profiles: &[WorkloadProfile], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "cpu,mem,storage,count").map_err(io)?;
    for p in profiles {
        writeln!(w, "{},{},{},{}", p.load.cpu, p.load.mem, p.load.storage, p.request_count)
            .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Splits `total` into `k` strictly positive parts with a symmetric
/// Dirichlet(1) draw.
fn dirichlet_split(total: f64, k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..k)
        .map(|_| loop {
            let x: f64 = Exp1.sample(rng);
            if x > 0.0 {
                break x;
            }
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|x| total * x / sum).collect()
}

/// Request ids carry the profile index in the upper 32 bits.
pub fn request_id(profile: usize, k: usize) -> u64 {
    ((profile as u64) << 32) | k as u64
}

/// Materializes the individual requests of one profile. Ingress nodes are
/// left at 0 until [`distribute_to_ingress`] runs.
pub fn materialize_requests(
    profile: &WorkloadProfile,
    table: &DeadlineTable,
    seed: u64,
) -> Vec<ServiceRequest> {
    let k = profile.request_count;
    if k == 0 {
        return Vec::new();
    }
    let mut rng = seed::stream_rng(seed, Stream::Requests, profile.index as u64);
    let cpu = dirichlet_split(profile.load.cpu, k, &mut rng);
    let mem = dirichlet_split(profile.load.mem, k, &mut rng);
    let storage = dirichlet_split(profile.load.storage, k, &mut rng);
    let start = profile.index as f64 * profile.duration_ms;
    (0..k)
        .map(|i| {
            let (service, deadline_ms) = table.draw(&mut rng);
            let arrival_ms = start + rng.random::<f64>() * profile.duration_ms;
            ServiceRequest {
                id: request_id(profile.index, i),
                service,
                demand: Resources::new(cpu[i], mem[i], storage[i]),
                deadline_ms,
                arrival_ms,
                ingress: 0,
                waiting_ms: 0.0,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IngressDistribution {
    Rand,
    Beta,
}

impl fmt::Display for IngressDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IngressDistribution::Rand => "rand",
            IngressDistribution::Beta => "beta",
        })
    }
}

impl FromStr for IngressDistribution {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "rand" | "random" => Ok(IngressDistribution::Rand),
            "beta" => Ok(IngressDistribution::Beta),
            other => Err(format!("unknown distribution `{other}`")),
        }
    }
}

/// Sets each request's ingress fog node. `Beta` maps a Beta(2,5) draw onto
/// the fog nodes ordered by id.
pub fn distribute_to_ingress(
    mut requests: Vec<ServiceRequest>,
    g: &NetworkGraph,
    mode: IngressDistribution,
    seed: u64,
) -> Result<Vec<ServiceRequest>> {
    let fog = g.fog_nodes();
    if fog.is_empty() {
        return Err(Error::Config("network has no fog nodes".into()));
    }
    let mut rng = seed::stream_rng(seed, Stream::Ingress, 0);
    let beta = Beta::new(2.0, 5.0).expect("valid beta parameters");
    for r in &mut requests {
        let idx = match mode {
            IngressDistribution::Rand => rng.random_range(0..fog.len()),
            IngressDistribution::Beta => {
                let x: f64 = beta.sample(&mut rng);
                ((x * fog.len() as f64).floor() as usize).min(fog.len() - 1)
            }
        };
        r.ingress = fog[idx];
    }
    Ok(requests)
}

/// Audit dump: `id,arrival_ms,cpu,mem,storage,deadline_ms,ingress`.
pub fn write_request_csv(requests: &[ServiceRequest], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "id,arrival_ms,cpu,mem,storage,deadline_ms,ingress").map_err(io)?;
    for r in requests {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.id, r.arrival_ms, r.demand.cpu, r.demand.mem, r.demand.storage, r.deadline_ms, r.ingress
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}
