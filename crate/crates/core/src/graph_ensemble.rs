//! Random d-regular graphs, their magnetic decorations, and ensemble bookkeeping.
//!
//! Graphs are drawn from the pairing (configuration) model with whole-matching
//! rejection, which is exactly uniform over simple d-regular graphs. The
//! acceptance rate of that scheme decays like `exp(-(d^2-1)/4)`, so above
//! [`PAIRING_MAX_DEGREE`] the automatic sampler switches to the
//! Steger–Wormald incremental pairing, which is asymptotically uniform.

use std::collections::VecDeque;
use std::f64::consts::TAU;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_ATTEMPTS: usize = 10_000;

/// Largest degree for which [`Sampler::Auto`] uses whole-matching rejection.
pub const PAIRING_MAX_DEGREE: usize = 5;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const PHASE_STREAM: u64 = 0x6D61_676E_6574_6963;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-graph seed for position `index` of an ensemble.
///
/// The map `index -> seed` is injective for a fixed master seed: the input
/// to the (bijective) SplitMix64 finalizer is an odd-stride progression.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Seed for the magnetic phases of the graph generated from `graph_seed`.
pub fn phase_seed_for(graph_seed: u64) -> u64 {
    splitmix64(graph_seed ^ PHASE_STREAM)
}

/// A (nominally simple) d-regular undirected graph stored as sorted
/// adjacency lists.
///
/// Graphs returned by [`generate_regular`] always satisfy the regular-graph
/// invariants. Graphs built through [`RegularGraph::from_edges`] or read from
/// disk are not checked beyond index bounds; run [`validate`] on them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularGraph {
    vertex_count: usize,
    degree: usize,
    adjacency: Vec<Vec<usize>>,
    seed: u64,
}

impl RegularGraph {
    pub fn from_edges(vertex_count: usize, degree: usize, seed: u64, edges: &[(usize, usize)]) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::InvalidParameters("graph needs at least one vertex".into()));
        }
        let mut adjacency = vec![Vec::with_capacity(degree); vertex_count];
        for &(u, w) in edges {
            if u >= vertex_count || w >= vertex_count {
                return Err(Error::InvalidParameters(format!(
                    "edge ({u}, {w}) references a vertex outside 0..{vertex_count}"
                )));
            }
            adjacency[u].push(w);
            adjacency[w].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self {
            vertex_count,
            degree,
            adjacency,
            seed,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    /// Undirected edges `(i, j)` with `i <= j`, in lexicographic order.
    /// Repeated edges appear once per copy; a loop appears once per two
    /// adjacency entries.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.vertex_count * self.degree / 2);
        for (u, list) in self.adjacency.iter().enumerate() {
            let mut loops = 0;
            for &w in list {
                if u < w {
                    out.push((u, w));
                } else if u == w {
                    loops += 1;
                    if loops % 2 == 0 {
                        out.push((u, u));
                    }
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let n = self.vertex_count;
        let mut a = DMatrix::<f64>::zeros(n, n);
        for (u, list) in self.adjacency.iter().enumerate() {
            for &w in list {
                a[(u, w)] += 1.0;
            }
        }
        a
    }

    pub fn is_connected(&self) -> bool {
        let n = self.vertex_count;
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &w in &self.adjacency[u] {
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

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub is_simple: bool,
    pub is_regular: bool,
    pub is_connected: bool,
}

impl ValidationReport {
    /// Simple and regular; connectivity is a policy question, not validity.
    pub fn is_valid(&self) -> bool {
        self.is_simple && self.is_regular
    }
}

/// Checks simplicity (no loops, no repeated or one-sided adjacency entries),
/// regularity and connectivity.
pub fn validate(g: &RegularGraph) -> ValidationReport {
    let mut is_simple = true;
    'outer: for (u, list) in g.adjacency.iter().enumerate() {
        for (k, &w) in list.iter().enumerate() {
            let repeated = k > 0 && list[k - 1] == w;
            if w == u || repeated || g.adjacency[w].binary_search(&u).is_err() {
                is_simple = false;
                break 'outer;
            }
        }
    }
    let is_regular = g.adjacency.iter().all(|list| list.len() == g.degree);
    ValidationReport {
        is_simple,
        is_regular,
        is_connected: g.is_connected(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    /// Pairing model for `d <= PAIRING_MAX_DEGREE`, Steger–Wormald above.
    #[default]
    Auto,
    Pairing,
    StegerWormald,
}

impl Sampler {
    pub fn resolve(self, degree: usize) -> Sampler {
        match self {
            Sampler::Auto if degree <= PAIRING_MAX_DEGREE => Sampler::Pairing,
            Sampler::Auto => Sampler::StegerWormald,
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorOptions {
    pub max_attempts: usize,
    pub sampler: Sampler,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self {
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            sampler: Sampler::Auto,
        }
    }
}

pub fn check_parameters(vertex_count: usize, degree: usize) -> Result<()> {
    if degree < 3 {
        return Err(Error::InvalidParameters(format!("degree must be at least 3, got {degree}")));
    }
    if vertex_count <= degree {
        return Err(Error::InvalidParameters(format!(
            "need V > d, got V={vertex_count}, d={degree}"
        )));
    }
    if (vertex_count * degree) % 2 == 1 {
        return Err(Error::InvalidParameters(format!(
            "V*d must be even, got V={vertex_count}, d={degree}"
        )));
    }
    Ok(())
}

/// Samples a simple d-regular graph on `vertex_count` vertices.
/// Identical arguments give identical graphs.
pub fn generate_regular(vertex_count: usize, degree: usize, seed: u64) -> Result<RegularGraph> {
    generate_regular_with(vertex_count, degree, seed, &GeneratorOptions::default())
}

pub fn generate_regular_with(
    vertex_count: usize,
    degree: usize,
    seed: u64,
    opts: &GeneratorOptions,
) -> Result<RegularGraph> {
    check_parameters(vertex_count, degree)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adjacency = vec![Vec::with_capacity(degree); vertex_count];
    let mut stubs: Vec<usize> = (0..vertex_count)
        .flat_map(|v| std::iter::repeat_n(v, degree))
        .collect();

    let sampler = opts.sampler.resolve(degree);
    for _ in 0..opts.max_attempts {
        let ok = match sampler {
            Sampler::StegerWormald => try_steger_wormald(vertex_count, degree, &mut rng, &mut adjacency),
            _ => try_pairing(&mut stubs, &mut rng, &mut adjacency),
        };
        if ok {
            for list in &mut adjacency {
                list.sort_unstable();
            }
            return Ok(RegularGraph {
                vertex_count,
                degree,
                adjacency,
                seed,
            });
        }
    }
    Err(Error::GenerationFailure {
        vertex_count,
        degree,
        attempts: opts.max_attempts,
    })
}

fn try_pairing(stubs: &mut [usize], rng: &mut ChaCha8Rng, adjacency: &mut [Vec<usize>]) -> bool {
    adjacency.iter_mut().for_each(Vec::clear);
    stubs.shuffle(rng);
    for pair in stubs.chunks_exact(2) {
        let (a, b) = (pair[0], pair[1]);
        if a == b || adjacency[a].contains(&b) {
            return false;
        }
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    true
}

fn try_steger_wormald(
    vertex_count: usize,
    degree: usize,
    rng: &mut ChaCha8Rng,
    adjacency: &mut [Vec<usize>],
) -> bool {
    adjacency.iter_mut().for_each(Vec::clear);
    let mut stubs: Vec<usize> = (0..vertex_count)
        .flat_map(|v| std::iter::repeat_n(v, degree))
        .collect();
    let mut leftover = vec![0usize; vertex_count];
    let max_rounds = 10 * vertex_count * degree;

    for _ in 0..max_rounds {
        if stubs.is_empty() {
            return true;
        }
        stubs.shuffle(rng);
        leftover.iter_mut().for_each(|c| *c = 0);
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            if a != b && !adjacency[a].contains(&b) {
                adjacency[a].push(b);
                adjacency[b].push(a);
            } else {
                leftover[a] += 1;
                leftover[b] += 1;
            }
        }
        let open: Vec<usize> = (0..vertex_count).filter(|&v| leftover[v] > 0).collect();
        let suitable = open.iter().enumerate().any(|(k, &u)| {
            open[k + 1..].iter().any(|&w| !adjacency[u].contains(&w))
        });
        if !open.is_empty() && !suitable {
            return false;
        }
        stubs = open
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, leftover[v]))
            .collect();
    }
    false
}

/// A regular graph whose edges carry antisymmetric phases: the implied
/// Hermitian matrix has `M[i][j] = exp(i chi_ij)` and `chi_ji = -chi_ij`.
///
/// Exactly one phase is stored per undirected edge `(i, j)`, `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MagneticGraph {
    base: RegularGraph,
    edges: Vec<(usize, usize)>,
    phases: Vec<f64>,
    phase_seed: u64,
}

/// Decorates every edge of `g` with an independent phase uniform on `[0, 2π)`.
pub fn decorate_magnetic(g: &RegularGraph, phase_seed: u64) -> Result<MagneticGraph> {
    require_valid(g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(phase_seed);
    let edges = g.edges();
    let phases = edges.iter().map(|_| rng.gen::<f64>() * TAU).collect();
    Ok(MagneticGraph {
        base: g.clone(),
        edges,
        phases,
        phase_seed,
    })
}

fn require_valid(g: &RegularGraph) -> Result<()> {
    let report = validate(g);
    if report.is_valid() {
        Ok(())
    } else {
        Err(Error::InvalidParameters(format!(
            "graph is not a simple {}-regular graph: {report:?}",
            g.degree()
        )))
    }
}

impl MagneticGraph {
    /// Phases given in the order of `base.edges()`.
    pub fn with_phases(base: &RegularGraph, phases: Vec<f64>, phase_seed: u64) -> Result<Self> {
        require_valid(base)?;
        let edges = base.edges();
        if phases.len() != edges.len() {
            return Err(Error::DimensionMismatch {
                expected: edges.len(),
                got: phases.len(),
            });
        }
        if let Some(&bad) = phases.iter().find(|p| !p.is_finite()) {
            return Err(Error::Domain {
                value: bad,
                domain: "finite phase",
            });
        }
        let phases = phases.into_iter().map(|p| p.rem_euclid(TAU)).collect();
        Ok(Self {
            base: base.clone(),
            edges,
            phases,
            phase_seed,
        })
    }

    /// Test hook: every phase zero, so M equals A.
    pub fn zero_phases(base: &RegularGraph) -> Result<Self> {
        Self::with_phases(base, vec![0.0; base.edge_count()], 0)
    }

    /// Phases given per edge in any order; every edge of `base` must appear once.
    pub fn from_edge_phases(base: &RegularGraph, mut entries: Vec<((usize, usize), f64)>, phase_seed: u64) -> Result<Self> {
        for ((i, j), chi) in entries.iter_mut() {
            if *i > *j {
                std::mem::swap(i, j);
                *chi = -*chi;
            }
        }
        entries.sort_by_key(|a| a.0);
        let edges = base.edges();
        let listed: Vec<(usize, usize)> = entries.iter().map(|e| e.0).collect();
        if listed != edges {
            return Err(Error::InvalidParameters(
                "phase table does not match the edge set of the graph".into(),
            ));
        }
        Self::with_phases(base, entries.into_iter().map(|e| e.1).collect(), phase_seed)
    }

    pub fn base(&self) -> &RegularGraph {
        &self.base
    }

    pub fn phase_seed(&self) -> u64 {
        self.phase_seed
    }

    /// `(edge, chi)` pairs with `edge.0 < edge.1`, sorted by edge.
    pub fn edge_phases(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.edges.iter().copied().zip(self.phases.iter().copied())
    }

    /// Phase of the directed step `i -> j`, or `None` if not an edge.
    pub fn phase(&self, i: usize, j: usize) -> Option<f64> {
        let (key, sign) = if i < j { ((i, j), 1.0) } else { ((j, i), -1.0) };
        self.edges
            .binary_search(&key)
            .ok()
            .map(|k| sign * self.phases[k])
    }

    /// Phases of the steps `u -> w` for each `w` in `base.neighbors(u)`.
    pub fn neighbor_phases(&self, u: usize) -> Vec<f64> {
        self.base
            .neighbors(u)
            .iter()
            .map(|&w| self.phase(u, w).expect("neighbor is an edge"))
            .collect()
    }

    pub fn hermitian_matrix(&self) -> DMatrix<Complex64> {
        let n = self.base.vertex_count();
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for ((i, j), chi) in self.edge_phases() {
            let z = Complex64::from_polar(1.0, chi);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
        m
    }

    /// Same graph with every phase negated (the complex conjugate matrix).
    pub fn conjugate(&self) -> MagneticGraph {
        MagneticGraph {
            base: self.base.clone(),
            edges: self.edges.clone(),
            phases: self.phases.iter().map(|p| (-p).rem_euclid(TAU)).collect(),
            phase_seed: self.phase_seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConnectivityPolicy {
    #[default]
    AcceptAll,
    ConnectedOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub vertex_count: usize,
    pub degree: usize,
    pub ensemble_size: usize,
    pub master_seed: u64,
    pub magnetic: bool,
    pub connectivity: ConnectivityPolicy,
    pub rejected_disconnected: usize,
    pub sampler: Sampler,
    pub created: String,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_seeds: Option<Vec<u64>>,
}

impl EnsembleManifest {
    /// Manifest equality ignoring the creation timestamp.
    pub fn same_content(&self, other: &EnsembleManifest) -> bool {
        let mut a = self.clone();
        a.created.clone_from(&other.created);
        &a == other
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRequest {
    pub vertex_count: usize,
    pub degree: usize,
    pub size: usize,
    pub master_seed: u64,
    pub magnetic: bool,
    pub connectivity: ConnectivityPolicy,
    pub generator: GeneratorOptions,
}

impl EnsembleRequest {
    pub fn new(vertex_count: usize, degree: usize, size: usize, master_seed: u64) -> Self {
        Self {
            vertex_count,
            degree,
            size,
            master_seed,
            magnetic: false,
            connectivity: ConnectivityPolicy::AcceptAll,
            generator: GeneratorOptions::default(),
        }
    }

    pub fn magnetic(mut self, magnetic: bool) -> Self {
        self.magnetic = magnetic;
        self
    }

    pub fn connectivity(mut self, policy: ConnectivityPolicy) -> Self {
        self.connectivity = policy;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub manifest: EnsembleManifest,
    pub graphs: Vec<RegularGraph>,
    /// Present iff the request was magnetic; aligned with `graphs`.
    pub magnetic: Option<Vec<MagneticGraph>>,
}

/// Generates an ensemble in parallel. Graph `k` is seeded by
/// `derive_seed(master_seed, k)`; under [`ConnectivityPolicy::ConnectedOnly`]
/// disconnected candidates are skipped and the next index is tried, so the
/// result does not depend on scheduling.
pub fn generate_ensemble(req: &EnsembleRequest, created: String) -> Result<Ensemble> {
    check_parameters(req.vertex_count, req.degree)?;
    if req.size == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let build = |index: u64| -> Result<RegularGraph> {
        generate_regular_with(
            req.vertex_count,
            req.degree,
            derive_seed(req.master_seed, index),
            &req.generator,
        )
    };

    let mut graphs = Vec::with_capacity(req.size);
    let mut rejected = 0usize;
    match req.connectivity {
        ConnectivityPolicy::AcceptAll => {
            graphs = (0..req.size as u64).into_par_iter().map(build).collect::<Result<Vec<_>>>()?;
        }
        ConnectivityPolicy::ConnectedOnly => {
            let cap = 100 * req.size + 1000;
            let mut next = 0u64;
            while graphs.len() < req.size {
                let need = (req.size - graphs.len()) as u64;
                let batch = (next..next + need).into_par_iter().map(build).collect::<Result<Vec<_>>>()?;
                next += need;
                for g in batch {
                    if graphs.len() == req.size {
                        break;
                    }
                    if g.is_connected() {
                        graphs.push(g);
                    } else {
                        rejected += 1;
                    }
                }
                if rejected > cap {
                    return Err(Error::GenerationFailure {
                        vertex_count: req.vertex_count,
                        degree: req.degree,
                        attempts: rejected,
                    });
                }
            }
        }
    }

    let seeds: Vec<u64> = graphs.iter().map(RegularGraph::seed).collect();
    let (magnetic, phase_seeds) = if req.magnetic {
        let decorated = graphs
            .par_iter()
            .map(|g| decorate_magnetic(g, phase_seed_for(g.seed())))
            .collect::<Result<Vec<_>>>()?;
        let ps = decorated.iter().map(MagneticGraph::phase_seed).collect();
        (Some(decorated), Some(ps))
    } else {
        (None, None)
    };

    Ok(Ensemble {
        manifest: EnsembleManifest {
            vertex_count: req.vertex_count,
            degree: req.degree,
            ensemble_size: req.size,
            master_seed: req.master_seed,
            magnetic: req.magnetic,
            connectivity: req.connectivity,
            rejected_disconnected: rejected,
            sampler: req.generator.sampler.resolve(req.degree),
            created,
            seeds,
            phase_seeds,
        },
        graphs,
        magnetic,
    })
}

/// Text form: header `V d seed`, then `i j` per undirected edge, with the
/// phase `chi` appended (17 significant digits) for magnetic graphs.
pub fn write_graph_file(g: &RegularGraph, magnetic: Option<&MagneticGraph>) -> String {
    let mut out = String::with_capacity(16 * g.edge_count() + 32);
    writeln!(out, "{} {} {}", g.vertex_count(), g.degree(), g.seed()).unwrap();
    match magnetic {
        Some(m) => {
            for ((i, j), chi) in m.edge_phases() {
                writeln!(out, "{i} {j} {chi:.16e}").unwrap();
            }
        }
        None => {
            for (i, j) in g.edges() {
                writeln!(out, "{i} {j}").unwrap();
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphFile {
    pub graph: RegularGraph,
    /// `(edge, chi)` rows when the file carries phases.
    pub phases: Option<Vec<((usize, usize), f64)>>,
}

impl GraphFile {
    pub fn into_magnetic(self, phase_seed: u64) -> Result<MagneticGraph> {
        let phases = self
            .phases
            .ok_or_else(|| Error::InvalidParameters("graph file carries no phases".into()))?;
        MagneticGraph::from_edge_phases(&self.graph, phases, phase_seed)
    }
}

pub fn parse_graph_file(text: &str) -> Result<GraphFile> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::Parse {
            line: hline,
            message: format!("header must be `V d seed`, got {header:?}"),
        });
    }
    let vertex_count = parse_field::<usize>(fields[0], hline)?;
    let degree = parse_field::<usize>(fields[1], hline)?;
    let seed = parse_field::<u64>(fields[2], hline)?;

    let mut edges = Vec::new();
    let mut phases = Vec::new();
    let mut with_phase = None;
    for (line, row) in lines {
        let f: Vec<&str> = row.split_whitespace().collect();
        let has_phase = match f.len() {
            2 => false,
            3 => true,
            _ => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected `i j [chi]`, got {row:?}"),
                })
            }
        };
        if *with_phase.get_or_insert(has_phase) != has_phase {
            return Err(Error::Parse {
                line,
                message: "mixed rows with and without phases".into(),
            });
        }
        let e = (parse_field::<usize>(f[0], line)?, parse_field::<usize>(f[1], line)?);
        if e.0 >= vertex_count || e.1 >= vertex_count {
            return Err(Error::Parse {
                line,
                message: format!("vertex index out of range 0..{vertex_count}"),
            });
        }
        edges.push(e);
        if has_phase {
            phases.push((e, parse_field::<f64>(f[2], line)?));
        }
    }
    let graph = RegularGraph::from_edges(vertex_count, degree, seed, &edges)?;
    Ok(GraphFile {
        graph,
        phases: with_phase.unwrap_or(false).then_some(phases),
    })
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("cannot parse {s:?}"),
    })
}
