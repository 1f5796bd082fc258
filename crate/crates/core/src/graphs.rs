//! Graph families and search operators.
//!
//! Generators for every family handled by the analysis (complete, joined
//! complete, simplex of complete graphs, hypercube, periodic cubic lattice,
//! Erdős–Rényi, Paley, Latin square), plus generic edge-list ingestion and
//! the operator constructors (Laplacian, shifted adjacency, SC composite).

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::spectral::{self, SpectralError};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("self loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("edge ({0}, {1}) has non-positive weight")]
    NonPositiveWeight(usize, usize),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Weighted undirected edge with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub i: usize,
    pub j: usize,
    pub w: T,
}

/// Undirected weighted graph without self loops or parallel edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph<T: Scalar> {
    n: usize,
    edges: Vec<Edge<T>>,
}

impl<T: Scalar> Graph<T> {
    /// Validates and normalizes an edge set: endpoints in range, no self
    /// loops, no duplicates, positive weights. Edges are stored sorted.
    pub fn new(n: usize, edges: Vec<(usize, usize, T)>) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::InvalidParameter(
                "graph needs at least one vertex".into(),
            ));
        }
        let mut normalized = Vec::with_capacity(edges.len());
        for (a, b, w) in edges {
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if j >= n {
                return Err(GraphError::VertexOutOfRange { vertex: j, n });
            }
            if w <= T::zero() {
                return Err(GraphError::NonPositiveWeight(i, j));
            }
            normalized.push(Edge { i, j, w });
        }
        normalized.sort_by_key(|e| (e.i, e.j));
        for pair in normalized.windows(2) {
            if pair[0].i == pair[1].i && pair[0].j == pair[1].j {
                return Err(GraphError::DuplicateEdge(pair[0].i, pair[0].j));
            }
        }
        Ok(Graph {
            n,
            edges: normalized,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Dense symmetric adjacency matrix.
    pub fn adjacency_matrix(&self) -> Array2<T> {
        let mut a = Array2::zeros((self.n, self.n));
        for e in &self.edges {
            a[(e.i, e.j)] = e.w;
            a[(e.j, e.i)] = e.w;
        }
        a
    }

    /// Weighted degree of every vertex.
    pub fn degrees(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.n];
        for e in &self.edges {
            d[e.i] += e.w;
            d[e.j] += e.w;
        }
        d
    }
}

/// Which operator a matrix represents; decides which structural invariants
/// apply (Laplacians have zero row sums and are positive semidefinite).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Laplacian,
    ShiftedAdjacency,
    ScComposite,
}

/// Real symmetric search operator.
///
/// `matrix` equals the underlying operator minus `shift_applied` times the
/// identity; shifting changes the dynamics only by a global phase.
#[derive(Debug, Clone)]
pub struct SearchOperator<T: Scalar> {
    pub n: usize,
    pub matrix: Array2<T>,
    pub shift_applied: T,
    pub kind: OperatorKind,
}

impl<T: Scalar> SearchOperator<T> {
    fn new(matrix: Array2<T>, shift_applied: T, kind: OperatorKind) -> Self {
        let n = matrix.nrows();
        debug_assert_eq!(n, matrix.ncols());
        let op = SearchOperator {
            n,
            matrix,
            shift_applied,
            kind,
        };
        debug_assert!(op.symmetry_residual() <= T::from_f64_const(1e-12));
        op
    }

    /// Maximum relative asymmetry `|m_ij - m_ji| / max|entry|`.
    pub fn symmetry_residual(&self) -> T {
        let mut max_entry = T::zero();
        let mut max_asym = T::zero();
        for i in 0..self.n {
            for j in 0..i {
                max_asym = max_asym.max((self.matrix[(i, j)] - self.matrix[(j, i)]).abs());
            }
            for j in 0..self.n {
                max_entry = max_entry.max(self.matrix[(i, j)].abs());
            }
        }
        if max_entry == T::zero() {
            T::zero()
        } else {
            max_asym / max_entry
        }
    }

    /// Returns a copy with `c` subtracted from the diagonal, accumulating the
    /// shift bookkeeping.
    pub fn shifted_by(&self, c: T) -> SearchOperator<T> {
        let mut matrix = self.matrix.clone();
        for i in 0..self.n {
            matrix[(i, i)] -= c;
        }
        SearchOperator {
            n: self.n,
            matrix,
            shift_applied: self.shift_applied + c,
            kind: self.kind,
        }
    }

    /// Subtracts the ground energy so the least eigenvalue becomes 0.
    /// Costs one eigendecomposition.
    pub fn ground_shifted(&self) -> Result<SearchOperator<T>, SpectralError> {
        let spectrum = spectral::eig_sym(self)?;
        Ok(self.shifted_by(spectrum.eigenvalues[0]))
    }
}

/// Weighted Laplacian `L = D - A` of a graph.
pub fn laplacian<T: Scalar>(g: &Graph<T>) -> SearchOperator<T> {
    let n = g.n();
    let mut m = Array2::zeros((n, n));
    for e in g.edges() {
        m[(e.i, e.j)] = -e.w;
        m[(e.j, e.i)] = -e.w;
        m[(e.i, e.i)] += e.w;
        m[(e.j, e.j)] += e.w;
    }
    SearchOperator::new(m, T::zero(), OperatorKind::Laplacian)
}

/// Search operator `a0 I - A` where `a0` is the largest adjacency eigenvalue,
/// so the least eigenvalue of the result is 0 up to solver accuracy.
pub fn shifted_adjacency<T: Scalar>(g: &Graph<T>) -> Result<SearchOperator<T>, GraphError> {
    let a = g.adjacency_matrix();
    let (evals, _) = spectral::eigh(a.view())?;
    let a0 = evals[g.n() - 1];
    let mut m = a.mapv(|x| -x);
    for i in 0..g.n() {
        m[(i, i)] += a0;
    }
    Ok(SearchOperator::new(
        m,
        -a0,
        OperatorKind::ShiftedAdjacency,
    ))
}

/// Complete graph on `n >= 2` vertices.
pub fn complete_graph<T: Scalar>(n: usize) -> Result<Graph<T>, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidParameter(format!(
            "complete graph needs n >= 2, got {n}"
        )));
    }
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((i, j, T::one()));
        }
    }
    Graph::new(n, edges)
}

/// Two complete graphs on `n/2` vertices each plus one bridge edge `(a, b)`
/// with `a` in the first half and `b` in the second.
pub fn joined_complete<T: Scalar>(n: usize, a: usize, b: usize) -> Result<Graph<T>, GraphError> {
    if n < 4 || n % 2 != 0 {
        return Err(GraphError::InvalidParameter(format!(
            "joined complete graph needs even n >= 4, got {n}"
        )));
    }
    let half = n / 2;
    if a >= half || b < half || b >= n {
        return Err(GraphError::InvalidParameter(format!(
            "bridge endpoints must satisfy a < {half} <= b < {n}, got a={a}, b={b}"
        )));
    }
    let mut edges = Vec::with_capacity(half * (half - 1) + 1);
    for block in 0..2 {
        let off = block * half;
        for i in 0..half {
            for j in (i + 1)..half {
                edges.push((off + i, off + j, T::one()));
            }
        }
    }
    edges.push((a, b, T::one()));
    Graph::new(n, edges)
}

/// Hypercube on `2^nbits` vertices; edges join labels at Hamming distance 1.
pub fn hypercube<T: Scalar>(nbits: usize) -> Result<Graph<T>, GraphError> {
    if nbits < 1 {
        return Err(GraphError::InvalidParameter(
            "hypercube needs nbits >= 1".into(),
        ));
    }
    let n = 1usize << nbits;
    let mut edges = Vec::with_capacity(n * nbits / 2);
    for i in 0..n {
        for h in 0..nbits {
            let j = i ^ (1 << h);
            if i < j {
                edges.push((i, j, T::one()));
            }
        }
    }
    Graph::new(n, edges)
}

/// Periodic cubic lattice: `side^d` vertices on a torus, each joined to its
/// `2d` axis neighbors. `side` must be odd so the momentum grid is symmetric.
pub fn cubic_lattice<T: Scalar>(d: usize, side: usize) -> Result<Graph<T>, GraphError> {
    if d < 1 {
        return Err(GraphError::InvalidParameter("lattice needs d >= 1".into()));
    }
    if side < 3 || side % 2 == 0 {
        return Err(GraphError::InvalidParameter(format!(
            "lattice needs odd side >= 3, got {side}"
        )));
    }
    let n = side.pow(d as u32);
    let mut edges = Vec::new();
    let mut stride = 1usize;
    for _ in 0..d {
        for i in 0..n {
            let coord = (i / stride) % side;
            let up = if coord + 1 == side {
                i + stride - stride * side
            } else {
                i + stride
            };
            let (lo, hi) = if i < up { (i, up) } else { (up, i) };
            edges.push((lo, hi, T::one()));
        }
        stride *= side;
    }
    // side = 2 would make up == down; excluded by the odd-side precondition.
    Graph::new(n, edges)
}

/// Deterministic seeded generator used by every randomized construction.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi G(n, p): each unordered pair included independently with
/// probability `p`, drawn from a seeded generator in a fixed pair order.
pub fn erdos_renyi<T: Scalar>(n: usize, p: f64, seed: u64) -> Result<Graph<T>, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidParameter(format!(
            "Erdős–Rényi graph needs n >= 2, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(GraphError::InvalidParameter(format!(
            "edge probability must lie in [0, 1], got {p}"
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((i, j, T::one()));
            }
        }
    }
    Graph::new(n, edges)
}

fn is_prime(q: usize) -> bool {
    if q < 2 {
        return false;
    }
    let mut k = 2;
    while k * k <= q {
        if q % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}

/// Paley graph on Z_q for prime `q = 1 (mod 4)`: vertices are residues,
/// edges join pairs whose difference is a nonzero quadratic residue.
pub fn paley<T: Scalar>(q: usize) -> Result<Graph<T>, GraphError> {
    if !is_prime(q) || q % 4 != 1 {
        return Err(GraphError::InvalidParameter(format!(
            "Paley graph needs a prime q = 1 (mod 4); got {q} (prime powers unsupported)"
        )));
    }
    let mut residue = vec![false; q];
    for x in 1..q {
        residue[(x * x) % q] = true;
    }
    let mut edges = Vec::new();
    for i in 0..q {
        for j in (i + 1)..q {
            if residue[(j - i) % q] {
                edges.push((i, j, T::one()));
            }
        }
    }
    Graph::new(q, edges)
}

/// Latin square graph on the `t x t` cells: two cells are adjacent when they
/// share a row, a column, or a symbol in one of the `d - 2` squares
/// `L_c(i, j) = (i + c*j) mod t`. `d = 3` works for every `t >= 2`; `d > 3`
/// requires prime `t` (so the squares are mutually orthogonal) and `d <= t+1`.
pub fn latin_square_graph<T: Scalar>(t: usize, d: usize) -> Result<Graph<T>, GraphError> {
    if t < 2 || d < 3 {
        return Err(GraphError::InvalidParameter(format!(
            "Latin square graph needs t >= 2 and d >= 3, got t={t}, d={d}"
        )));
    }
    if d > 3 && (!is_prime(t) || d > t + 1) {
        return Err(GraphError::InvalidParameter(format!(
            "d > 3 needs prime t with d <= t + 1, got t={t}, d={d}"
        )));
    }
    let n = t * t;
    let idx = |i: usize, j: usize| i * t + j;
    let mut edges = Vec::new();
    for c1 in 0..n {
        let (i1, j1) = (c1 / t, c1 % t);
        for c2 in (c1 + 1)..n {
            let (i2, j2) = (c2 / t, c2 % t);
            let mut adjacent = i1 == i2 || j1 == j2;
            if !adjacent {
                for c in 1..(d - 1) {
                    if (i1 + c * j1) % t == (i2 + c * j2) % t {
                        adjacent = true;
                        break;
                    }
                }
            }
            if adjacent {
                edges.push((idx(i1, j1), idx(i2, j2), T::one()));
            }
        }
    }
    Graph::new(n, edges)
}

/// Vertex-relabeled union with no cross edges.
pub fn disjoint_union<T: Scalar>(gs: &[Graph<T>]) -> Result<Graph<T>, GraphError> {
    if gs.is_empty() {
        return Err(GraphError::InvalidParameter(
            "disjoint union needs at least one graph".into(),
        ));
    }
    let n: usize = gs.iter().map(|g| g.n()).sum();
    let mut edges = Vec::new();
    let mut offset = 0;
    for g in gs {
        for e in g.edges() {
            edges.push((e.i + offset, e.j + offset, e.w));
        }
        offset += g.n();
    }
    Graph::new(n, edges)
}

/// Cross-block partner of each vertex in the simplex of complete graphs.
///
/// Vertex `(g, r)` (block `g` of `R+1`, slot `r` of `R`) pairs with the slot
/// of block `g'` that points back at `g`, where `g'` is the `r`-th element of
/// the other blocks in increasing order. The map is a fixed-point-free
/// involution and every vertex's partner lies in a different block.
pub fn sc_pairing(r_blocks: usize) -> Vec<usize> {
    let r = r_blocks;
    let mut partner = vec![0usize; r * (r + 1)];
    for g in 0..=r {
        for slot in 0..r {
            let gp = if slot < g { slot } else { slot + 1 };
            let rp = if g < gp { g } else { g - 1 };
            partner[g * r + slot] = gp * r + rp;
        }
    }
    partner
}

/// Composite operator for the weighted simplex of complete graphs: the
/// block-diagonal sum of `R+1` complete-graph Laplacians plus the connecting
/// term with unit diagonal and `-w` on the perfect cross-block pairing.
///
/// Row sums equal `1 - w`; the uniform vector is an eigenvector with that
/// eigenvalue.
pub fn simplex_complete_operator<T: Scalar>(
    r_blocks: usize,
    w: T,
) -> Result<SearchOperator<T>, GraphError> {
    let r = r_blocks;
    if r < 2 {
        return Err(GraphError::InvalidParameter(format!(
            "simplex of complete graphs needs R >= 2, got {r}"
        )));
    }
    if w <= T::zero() {
        return Err(GraphError::InvalidParameter(
            "connecting weight must be positive".into(),
        ));
    }
    let n = r * (r + 1);
    let partner = sc_pairing(r);
    for (v, &p) in partner.iter().enumerate() {
        if p >= n || partner[p] != v || p / r == v / r {
            return Err(GraphError::InvalidParameter(
                "simplex pairing construction failed".into(),
            ));
        }
    }
    let mut m = Array2::zeros((n, n));
    for g in 0..=r {
        let off = g * r;
        for i in 0..r {
            for j in 0..r {
                m[(off + i, off + j)] = if i == j {
                    T::from_count(r - 1)
                } else {
                    -T::one()
                };
            }
        }
    }
    for (v, &p) in partner.iter().enumerate() {
        m[(v, v)] += T::one();
        m[(v, p)] -= w;
    }
    Ok(SearchOperator::new(m, T::zero(), OperatorKind::ScComposite))
}

/// Serializes a graph as `N <count>` followed by one `i j w` line per edge.
pub fn save_edgelist<T: Scalar>(g: &Graph<T>) -> String {
    let mut out = format!("N {}\n", g.n());
    for e in g.edges() {
        out.push_str(&format!("{} {} {}\n", e.i, e.j, e.w));
    }
    out
}

/// Parses the edge-list format produced by [`save_edgelist`].
pub fn load_edgelist<T: Scalar>(text: &str) -> Result<Graph<T>, GraphError> {
    let mut lines = text.lines().enumerate();
    let (header_line, header) = loop {
        match lines.next() {
            Some((idx, line)) if !line.trim().is_empty() => break (idx + 1, line),
            Some(_) => continue,
            None => {
                return Err(GraphError::Parse {
                    line: 1,
                    message: "empty input".into(),
                })
            }
        }
    };
    let mut parts = header.split_whitespace();
    let n = match (parts.next(), parts.next(), parts.next()) {
        (Some("N"), Some(count), None) => count.parse::<usize>().map_err(|e| GraphError::Parse {
            line: header_line,
            message: format!("bad vertex count: {e}"),
        })?,
        _ => {
            return Err(GraphError::Parse {
                line: header_line,
                message: "expected header `N <count>`".into(),
            })
        }
    };
    let mut edges = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(GraphError::Parse {
                line: line_no,
                message: format!("expected `i j w`, got {} fields", fields.len()),
            });
        }
        let i = fields[0].parse::<usize>().map_err(|e| GraphError::Parse {
            line: line_no,
            message: format!("bad vertex index: {e}"),
        })?;
        let j = fields[1].parse::<usize>().map_err(|e| GraphError::Parse {
            line: line_no,
            message: format!("bad vertex index: {e}"),
        })?;
        let w = fields[2].parse::<f64>().map_err(|e| GraphError::Parse {
            line: line_no,
            message: format!("bad weight: {e}"),
        })?;
        edges.push((i, j, T::from_f64_const(w)));
    }
    Graph::new(n, edges)
}
