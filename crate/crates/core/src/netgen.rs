//! Undirected network topologies: square lattice, complete graph, metafunnel
//! and superstar, plus a plain edge-list text format.
//!
//! Node indexing is fixed so that serialized networks and seeded runs are
//! reproducible: the lattice is row-major, the complete graph uses natural
//! order, and the central node of a metafunnel or superstar is index 0.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(
        "unknown preset `{0}` (expected lattice22, complete475, metafunnel533 or superstar2420)"
    )]
    UnknownPreset(String),
}

fn parse_err(line: usize, msg: impl Into<String>) -> NetError {
    NetError::Parse {
        line,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Lattice,
    Complete,
    Metafunnel,
    Superstar,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Lattice => "lattice",
            Kind::Complete => "complete",
            Kind::Metafunnel => "metafunnel",
            Kind::Superstar => "superstar",
        }
    }
}

impl FromStr for Kind {
    type Err = NetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lattice" => Ok(Kind::Lattice),
            "complete" => Ok(Kind::Complete),
            "metafunnel" => Ok(Kind::Metafunnel),
            "superstar" => Ok(Kind::Superstar),
            other => Err(NetError::InvalidParameter(format!(
                "unknown network kind `{other}`"
            ))),
        }
    }
}

/// Constructor parameters of a topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Topology {
    Lattice { n: usize },
    Complete { n: usize },
    Metafunnel { k: usize, steps: usize, g: usize },
    Superstar { s: usize, h: usize },
}

impl Topology {
    pub fn kind(&self) -> Kind {
        match self {
            Topology::Lattice { .. } => Kind::Lattice,
            Topology::Complete { .. } => Kind::Complete,
            Topology::Metafunnel { .. } => Kind::Metafunnel,
            Topology::Superstar { .. } => Kind::Superstar,
        }
    }

    /// Parameters as `key=value` pairs in constructor order.
    pub fn params(&self) -> Vec<(&'static str, usize)> {
        match *self {
            Topology::Lattice { n } => vec![("n", n)],
            Topology::Complete { n } => vec![("n", n)],
            Topology::Metafunnel { k, steps, g } => vec![("k", k), ("steps", steps), ("g", g)],
            Topology::Superstar { s, h } => vec![("s", s), ("h", h)],
        }
    }

    fn params_string(&self) -> String {
        self.params()
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Closed-form node count, or `None` on overflow.
    pub fn node_count(&self) -> Option<usize> {
        match *self {
            Topology::Lattice { n } => n.checked_mul(n),
            Topology::Complete { n } => Some(n),
            Topology::Metafunnel { k, steps, g } => {
                let mut level = 1usize;
                let mut sum = 0usize;
                for _ in 0..steps {
                    level = level.checked_mul(k)?;
                    sum = sum.checked_add(level)?;
                }
                sum.checked_mul(g)?.checked_add(1)
            }
            Topology::Superstar { s, h } => s.checked_mul(h)?.checked_add(1),
        }
    }

    fn validate(&self) -> Result<(), NetError> {
        let bad = |what: &str| Err(NetError::InvalidParameter(what.to_string()));
        match *self {
            Topology::Lattice { n } if n < 2 => bad("lattice side n must be >= 2"),
            Topology::Complete { n } if n < 2 => bad("complete graph needs n >= 2"),
            Topology::Metafunnel { k, steps, g } if k < 1 || steps < 1 || g < 1 => {
                bad("metafunnel needs k, steps, g >= 1")
            }
            Topology::Superstar { s, h } if s < 1 || h < 1 => bad("superstar needs s, h >= 1"),
            _ => match self.node_count() {
                Some(n) if n <= u32::MAX as usize => Ok(()),
                _ => bad("network too large"),
            },
        }
    }

    /// Builds the network described by these parameters.
    pub fn build(&self) -> Result<Network, NetError> {
        match *self {
            Topology::Lattice { n } => build_lattice(n),
            Topology::Complete { n } => build_complete(n),
            Topology::Metafunnel { k, steps, g } => build_metafunnel(k, steps, g),
            Topology::Superstar { s, h } => build_superstar(s, h),
        }
    }

    /// Parses `kind:key=value,...`, e.g. `metafunnel:k=5,steps=3,g=3`.
    pub fn parse_descriptor(s: &str) -> Result<Self, NetError> {
        let (kind, params) = s.split_once(':').ok_or_else(|| {
            NetError::InvalidParameter(format!("expected `kind:key=value,...`, got `{s}`"))
        })?;
        Topology::from_parts(kind.trim().parse()?, params.trim())
    }

    fn from_parts(kind: Kind, params: &str) -> Result<Self, NetError> {
        let mut values: Vec<(String, usize)> = Vec::new();
        for pair in params.split(',').filter(|p| !p.is_empty()) {
            let (key, value) = pair.split_once('=').ok_or_else(|| {
                NetError::InvalidParameter(format!("malformed parameter `{pair}`"))
            })?;
            let value = value.trim().parse::<usize>().map_err(|_| {
                NetError::InvalidParameter(format!("parameter `{key}` is not an integer"))
            })?;
            values.push((key.trim().to_string(), value));
        }
        let get = |key: &str| -> Result<usize, NetError> {
            values
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| *v)
                .ok_or_else(|| {
                    NetError::InvalidParameter(format!("{} requires `{key}`", kind.name()))
                })
        };
        let topology = match kind {
            Kind::Lattice => Topology::Lattice { n: get("n")? },
            Kind::Complete => Topology::Complete { n: get("n")? },
            Kind::Metafunnel => Topology::Metafunnel {
                k: get("k")?,
                steps: get("steps")?,
                g: get("g")?,
            },
            Kind::Superstar => Topology::Superstar {
                s: get("s")?,
                h: get("h")?,
            },
        };
        if values.len() != topology.params().len() {
            return Err(NetError::InvalidParameter(format!(
                "unexpected parameters for {}: `{params}`",
                kind.name()
            )));
        }
        Ok(topology)
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind().name(), self.params_string())
    }
}

/// The four canonical parameterisations, each with roughly 475 nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    Lattice22,
    Complete475,
    Metafunnel533,
    Superstar2420,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Lattice22,
        Preset::Complete475,
        Preset::Metafunnel533,
        Preset::Superstar2420,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Lattice22 => "lattice22",
            Preset::Complete475 => "complete475",
            Preset::Metafunnel533 => "metafunnel533",
            Preset::Superstar2420 => "superstar2420",
        }
    }

    pub fn topology(self) -> Topology {
        match self {
            Preset::Lattice22 => Topology::Lattice { n: 22 },
            Preset::Complete475 => Topology::Complete { n: 475 },
            Preset::Metafunnel533 => Topology::Metafunnel {
                k: 5,
                steps: 3,
                g: 3,
            },
            Preset::Superstar2420 => Topology::Superstar { s: 24, h: 20 },
        }
    }

    pub fn build(self) -> Network {
        self.topology()
            .build()
            .expect("preset parameters are valid")
    }
}

impl FromStr for Preset {
    type Err = NetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| NetError::UnknownPreset(s.to_string()))
    }
}

/// Immutable undirected graph stored as compressed sparse rows.
///
/// Every adjacency list is sorted, free of duplicates and self-loops, and
/// non-empty; the relation is symmetric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    topology: Topology,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl Network {
    fn from_edges(topology: Topology, n: usize, edges: &[(u32, u32)]) -> Network {
        let mut degree = vec![0usize; n];
        for &(a, b) in edges {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut neighbors = vec![0u32; offsets[n]];
        for &(a, b) in edges {
            neighbors[fill[a as usize]] = b;
            fill[a as usize] += 1;
            neighbors[fill[b as usize]] = a;
            fill[b as usize] += 1;
        }
        for i in 0..n {
            neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Network {
            topology,
            offsets,
            neighbors,
        }
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn kind(&self) -> Kind {
        self.topology.kind()
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, node: usize) -> &[u32] {
        &self.neighbors[self.offsets[node]..self.offsets[node + 1]]
    }

    #[inline]
    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.node_count()).map(|i| self.degree(i)).collect()
    }

    /// Edges `(i, j)` with `i < j` in ascending lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.node_count()).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .filter(move |&&j| j as usize > i)
                .map(move |&j| (i as u32, j))
        })
    }

    /// Checks the structural invariants and returns the first violation.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.node_count();
        for i in 0..n {
            let adj = self.neighbors(i);
            if adj.is_empty() {
                return Err(format!("node {i} is isolated"));
            }
            for w in adj.windows(2) {
                if w[0] >= w[1] {
                    return Err(format!("adjacency of node {i} is unsorted or duplicated"));
                }
            }
            for &j in adj {
                let j = j as usize;
                if j == i {
                    return Err(format!("self-loop at node {i}"));
                }
                if j >= n {
                    return Err(format!("node {i} links to out-of-range node {j}"));
                }
                if self.neighbors(j).binary_search(&(i as u32)).is_err() {
                    return Err(format!("edge {i}-{j} is not symmetric"));
                }
            }
        }
        Ok(())
    }

    /// True when breadth-first search from node 0 reaches every node.
    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(v) = queue.pop_front() {
            for &w in self.neighbors(v) {
                let w = w as usize;
                if !seen[w] {
                    seen[w] = true;
                    reached += 1;
                    queue.push_back(w);
                }
            }
        }
        reached == n
    }
}

/// `n`-by-`n` grid without wrap-around, row-major indexing.
pub fn build_lattice(n: usize) -> Result<Network, NetError> {
    let topology = Topology::Lattice { n };
    topology.validate()?;
    let id = |r: usize, c: usize| (r * n + c) as u32;
    let mut edges = Vec::with_capacity(2 * n * (n - 1));
    for r in 0..n {
        for c in 0..n {
            if c + 1 < n {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < n {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    Ok(Network::from_edges(topology, n * n, &edges))
}

pub fn build_complete(n: usize) -> Result<Network, NetError> {
    let topology = Topology::Complete { n };
    topology.validate()?;
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n as u32 {
        for j in i + 1..n as u32 {
            edges.push((i, j));
        }
    }
    Ok(Network::from_edges(topology, n, &edges))
}

/// Central node 0 feeding `g` funnels. Level `l` of each funnel holds `k^l`
/// nodes; consecutive levels of the same funnel are joined completely, and
/// the centre is joined to every level-1 node. Funnels are laid out one after
/// another, level by level.
pub fn build_metafunnel(k: usize, steps: usize, g: usize) -> Result<Network, NetError> {
    let topology = Topology::Metafunnel { k, steps, g };
    topology.validate()?;
    let n = topology.node_count().expect("validated");
    let mut edges = Vec::new();
    let mut next = 1u32;
    for _ in 0..g {
        let mut prev: Vec<u32> = vec![0];
        let mut size = 1usize;
        for _ in 0..steps {
            size *= k;
            let level: Vec<u32> = (next..next + size as u32).collect();
            next += size as u32;
            for &a in &prev {
                for &b in &level {
                    edges.push((a, b));
                }
            }
            prev = level;
        }
    }
    Ok(Network::from_edges(topology, n, &edges))
}

/// Centre 0 joined to all `s*h` other nodes, which form `h` groups of `s`.
/// The first node of each group is dominant and joined to the rest of its
/// group.
pub fn build_superstar(s: usize, h: usize) -> Result<Network, NetError> {
    let topology = Topology::Superstar { s, h };
    topology.validate()?;
    let n = 1 + s * h;
    let mut edges = Vec::with_capacity(s * h + h * (s - 1));
    for i in 1..n as u32 {
        edges.push((0, i));
    }
    for group in 0..h {
        let dominant = (1 + group * s) as u32;
        for member in 1..s as u32 {
            edges.push((dominant, dominant + member));
        }
    }
    Ok(Network::from_edges(topology, n, &edges))
}

/// Renders the edge-list document: a header line followed by one `i j` pair
/// per line.
pub fn serialize_network(net: &Network) -> String {
    let topology = net.topology();
    let mut out = format!(
        "# kind={} params={} nodes={}\n",
        topology.kind().name(),
        topology.params_string(),
        net.node_count()
    );
    for (i, j) in net.edges() {
        out.push_str(&i.to_string());
        out.push(' ');
        out.push_str(&j.to_string());
        out.push('\n');
    }
    out
}

pub fn parse_network(doc: &str) -> Result<Network, NetError> {
    let mut lines = doc.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (header_line, header) = lines.next().ok_or_else(|| parse_err(1, "empty document"))?;
    let rest = header.strip_prefix('#').ok_or_else(|| {
        parse_err(
            header_line,
            "missing `# kind=... params=... nodes=...` header",
        )
    })?;

    let mut kind = None;
    let mut params = None;
    let mut nodes = None;
    for field in rest.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| parse_err(header_line, format!("malformed header field `{field}`")))?;
        match key {
            "kind" => {
                kind = Some(
                    value
                        .parse::<Kind>()
                        .map_err(|e| parse_err(header_line, e.to_string()))?,
                )
            }
            "params" => params = Some(value),
            "nodes" => {
                nodes = Some(value.parse::<usize>().map_err(|_| {
                    parse_err(
                        header_line,
                        format!("node count `{value}` is not an integer"),
                    )
                })?)
            }
            other => {
                return Err(parse_err(
                    header_line,
                    format!("unknown header field `{other}`"),
                ))
            }
        }
    }
    let kind = kind.ok_or_else(|| parse_err(header_line, "header lacks `kind`"))?;
    let params = params.ok_or_else(|| parse_err(header_line, "header lacks `params`"))?;
    let nodes = nodes.ok_or_else(|| parse_err(header_line, "header lacks `nodes`"))?;
    let topology =
        Topology::from_parts(kind, params).map_err(|e| parse_err(header_line, e.to_string()))?;
    topology
        .validate()
        .map_err(|e| parse_err(header_line, e.to_string()))?;
    if topology.node_count() != Some(nodes) {
        return Err(parse_err(
            header_line,
            format!("nodes={nodes} does not match {topology}"),
        ));
    }

    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut last_line = header_line;
    for (line_no, line) in lines {
        last_line = line_no;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let mut index = || -> Result<u32, NetError> {
            let tok = fields
                .next()
                .ok_or_else(|| parse_err(line_no, "expected two node indices"))?;
            let v = tok
                .parse::<u32>()
                .map_err(|_| parse_err(line_no, format!("`{tok}` is not a node index")))?;
            if v as usize >= nodes {
                return Err(parse_err(
                    line_no,
                    format!("node {v} out of range (nodes={nodes})"),
                ));
            }
            Ok(v)
        };
        let a = index()?;
        let b = index()?;
        if fields.next().is_some() {
            return Err(parse_err(line_no, "trailing fields after edge"));
        }
        if a == b {
            return Err(parse_err(line_no, format!("self-loop at node {a}")));
        }
        let key = (a.min(b), a.max(b));
        if !seen.insert(key) {
            return Err(parse_err(
                line_no,
                format!("duplicate edge {} {}", key.0, key.1),
            ));
        }
        edges.push(key);
    }

    let net = Network::from_edges(topology, nodes, &edges);
    if let Some(gap) = (0..nodes).find(|&i| net.degree(i) == 0) {
        return Err(parse_err(
            last_line,
            format!("node index gap: node {gap} has no edges"),
        ));
    }
    Ok(net)
}
