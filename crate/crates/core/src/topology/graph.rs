use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TopologyError;
use crate::rng::{streams, StreamKey};

/// Maximum number of resamples for a geometric graph that came out disconnected.
pub const MAX_REGENERATIONS: u64 = 100;

/// Undirected simple graph on `0..n`. Edges are stored with `i < j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, TopologyError> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(TopologyError::BadSpec(format!("self-loop at node {a}")));
            }
            if a >= n || b >= n {
                return Err(TopologyError::BadSpec(format!("edge ({a}, {b}) outside 0..{n}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self { n, edges: set })
    }

    pub fn ring(n: usize) -> Self {
        let edges = (0..n).map(|i| (i, (i + 1) % n)).filter(|(a, b)| a != b);
        Self::new(n, edges).expect("ring edges are in range")
    }

    /// Star with hub 0.
    pub fn star(n: usize) -> Self {
        Self::new(n, (1..n).map(|i| (0, i))).expect("star edges are in range")
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
        Self::new(n, edges).expect("complete edges are in range")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|(a, b)| *a == v || *b == v).count()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
        count == self.n
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Geometric,
    RingStarAlternating,
    Ring,
    Star,
    Complete,
    FixedList,
}

/// Recipe for a time-varying graph sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSequenceSpec {
    pub kind: GraphKind,
    pub n: usize,
    /// Connection radius in the unit square (geometric only).
    #[serde(default)]
    pub radius: f64,
    /// Rounds between regenerations.
    #[serde(default = "default_reseed_period")]
    pub reseed_period: u64,
    #[serde(default)]
    pub seed: u64,
    /// Edge lists cycled one per period (fixed_list only).
    #[serde(default)]
    pub graphs: Vec<Vec<(usize, usize)>>,
}

fn default_reseed_period() -> u64 {
    1
}

impl GraphSequenceSpec {
    pub fn new(kind: GraphKind, n: usize) -> Self {
        Self {
            kind,
            n,
            radius: 0.0,
            reseed_period: 1,
            seed: 0,
            graphs: Vec::new(),
        }
    }

    pub fn geometric(n: usize, radius: f64, seed: u64) -> Self {
        Self {
            radius,
            seed,
            ..Self::new(GraphKind::Geometric, n)
        }
    }

    pub fn period_of(&self, round_index: u64) -> u64 {
        round_index / self.reseed_period.max(1)
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        if self.n < 2 {
            return Err(TopologyError::BadSpec(format!("need n >= 2, got {}", self.n)));
        }
        if self.reseed_period == 0 {
            return Err(TopologyError::BadSpec("reseed_period must be >= 1".into()));
        }
        match self.kind {
            GraphKind::Geometric if !(self.radius > 0.0 && self.radius.is_finite()) => Err(
                TopologyError::BadSpec(format!("geometric radius must be positive, got {}", self.radius)),
            ),
            GraphKind::FixedList if self.graphs.is_empty() => {
                Err(TopologyError::BadSpec("fixed_list needs at least one edge list".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Deterministic graph for `(spec, round_index)`.
pub fn build_graph(spec: &GraphSequenceSpec, round_index: u64) -> Result<Graph, TopologyError> {
    spec.validate()?;
    let n = spec.n;
    let period = spec.period_of(round_index);
    let graph = match spec.kind {
        GraphKind::Ring => Graph::ring(n),
        GraphKind::Star => Graph::star(n),
        GraphKind::Complete => Graph::complete(n),
        GraphKind::RingStarAlternating => {
            if period.is_multiple_of(2) {
                Graph::ring(n)
            } else {
                Graph::star(n)
            }
        }
        GraphKind::FixedList => {
            let edges = &spec.graphs[(period % spec.graphs.len() as u64) as usize];
            Graph::new(n, edges.iter().copied())?
        }
        GraphKind::Geometric => return geometric_graph(n, spec.radius, spec.seed, period),
    };
    if !graph.is_connected() {
        return Err(TopologyError::Disconnected { attempts: 1 });
    }
    Ok(graph)
}

fn geometric_graph(n: usize, radius: f64, seed: u64, period: u64) -> Result<Graph, TopologyError> {
    let r2 = radius * radius;
    for attempt in 0..MAX_REGENERATIONS {
        let mut rng = StreamKey::new(seed, streams::GRAPH_POINTS)
            .with_iter(period)
            .with_index(attempt)
            .rng();
        let points: Vec<(f64, f64)> = (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let (dx, dy) = (points[i].0 - points[j].0, points[i].1 - points[j].1);
                if dx * dx + dy * dy <= r2 {
                    edges.push((i, j));
                }
            }
        }
        let g = Graph::new(n, edges)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(TopologyError::Disconnected {
        attempts: MAX_REGENERATIONS,
    })
}

/// Reproducibility dump: `n=<n>` then `round <q>: i-j,i-j,...` per round.
pub fn write_sequence(n: usize, rounds: &[(u64, Graph)]) -> String {
    let mut out = format!("n={n}\n");
    for (q, g) in rounds {
        let edges: Vec<String> = g.edges().map(|(a, b)| format!("{a}-{b}")).collect();
        let _ = writeln!(out, "round {q}: {}", edges.join(","));
    }
    out
}

pub fn parse_sequence(text: &str) -> Result<(usize, Vec<(u64, Graph)>), TopologyError> {
    let bad = |line: usize, msg: &str| TopologyError::Parse {
        line,
        message: msg.to_string(),
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| bad(1, "missing header"))?;
    let n: usize = header
        .trim()
        .strip_prefix("n=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad(1, "expected `n=<n>`"))?;
    let mut rounds = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let rest = line
            .trim()
            .strip_prefix("round ")
            .ok_or_else(|| bad(lineno, "expected `round <q>:`"))?;
        let (q, edges) = rest.split_once(':').ok_or_else(|| bad(lineno, "missing ':'"))?;
        let q: u64 = q.trim().parse().map_err(|_| bad(lineno, "bad round index"))?;
        let mut list = Vec::new();
        for tok in edges.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (a, b) = tok.split_once('-').ok_or_else(|| bad(lineno, "edge must be i-j"))?;
            let a: usize = a.parse().map_err(|_| bad(lineno, "bad node index"))?;
            let b: usize = b.parse().map_err(|_| bad(lineno, "bad node index"))?;
            list.push((a, b));
        }
        rounds.push((q, Graph::new(n, list)?));
    }
    Ok((n, rounds))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge_vec(g: &Graph) -> Vec<(usize, usize)> {
        g.edges().collect()
    }

    #[test]
    fn ring_and_star_definitions() {
        let ring = build_graph(&GraphSequenceSpec::new(GraphKind::Ring, 4), 17).unwrap();
        assert_eq!(edge_vec(&ring), vec![(0, 1), (0, 3), (1, 2), (2, 3)]);
        let star = build_graph(&GraphSequenceSpec::new(GraphKind::Star, 5), 3).unwrap();
        assert_eq!(edge_vec(&star), vec![(0, 1), (0, 2), (0, 3), (0, 4)]);
    }

    #[test]
    fn alternation_follows_period() {
        let mut spec = GraphSequenceSpec::new(GraphKind::RingStarAlternating, 6);
        spec.reseed_period = 2;
        assert_eq!(build_graph(&spec, 0).unwrap(), Graph::ring(6));
        assert_eq!(build_graph(&spec, 1).unwrap(), Graph::ring(6));
        assert_eq!(build_graph(&spec, 2).unwrap(), Graph::star(6));
        assert_eq!(build_graph(&spec, 4).unwrap(), Graph::ring(6));
    }

    #[test]
    fn geometric_is_deterministic_and_connected() {
        let spec = GraphSequenceSpec::geometric(30, 0.4, 11);
        let a = build_graph(&spec, 5).unwrap();
        let b = build_graph(&spec, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.is_connected());
        assert_ne!(a, build_graph(&spec, 6).unwrap());
    }

    #[test]
    fn tiny_radius_reports_disconnected() {
        let spec = GraphSequenceSpec::geometric(40, 1e-3, 1);
        assert!(matches!(
            build_graph(&spec, 0),
            Err(TopologyError::Disconnected { attempts: 100 })
        ));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(
            build_graph(&GraphSequenceSpec::new(GraphKind::Ring, 1), 0),
            Err(TopologyError::BadSpec(_))
        ));
        assert!(Graph::new(3, [(1, 1)]).is_err());
        assert!(Graph::new(3, [(0, 3)]).is_err());
    }

    #[test]
    fn text_dump_round_trips() {
        let rounds = vec![(0, Graph::ring(5)), (1, Graph::star(5))];
        let text = write_sequence(5, &rounds);
        assert!(text.starts_with("n=5\nround 0: 0-1,0-4,1-2,2-3,3-4\n"));
        let (n, parsed) = parse_sequence(&text).unwrap();
        assert_eq!(n, 5);
        assert_eq!(parsed, rounds);
        assert!(matches!(
            parse_sequence("n=3\nround x: 0-1"),
            Err(TopologyError::Parse { line: 2, .. })
        ));
    }
}
