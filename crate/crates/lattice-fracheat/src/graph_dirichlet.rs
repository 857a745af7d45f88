//! Weighted graphs, fractional powers of the graph Laplacian and the
//! restricted Dirichlet operator `L^D_{Ω,s}`: zero-extend, apply `(-Δ)^s` on
//! the host and restrict back to `Ω`.
//!
//! All operators act on `ℓ²(V, μ)`. They are self-adjoint for the weighted
//! inner product and become symmetric after conjugation by `diag(√μ)`.
//! The measure on `Ω` is `μ` restricted to `Ω`.

use crate::lattice_core::{FracOrder, LatticeError};
use crate::quadrature::gauss_legendre;
use crate::semigroup::{FitScale, RateReport, SemigroupError};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, VecDeque};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("weight matrix must be square of size {expected}, got {rows}x{cols}")]
    Shape { expected: usize, rows: usize, cols: usize },
    #[error("weights at ({0}, {1}) are not symmetric")]
    Asymmetric(usize, usize),
    #[error("weight at ({0}, {1}) is negative or not finite")]
    BadWeight(usize, usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("measure at vertex {0} must be positive and finite")]
    BadMeasure(usize),
    #[error("vertex {0} is unknown")]
    UnknownVertex(String),
    #[error("vertex {0} is listed twice")]
    DuplicateVertex(String),
    #[error("Ω is empty")]
    EmptyOmega,
    #[error("Ω must be a proper subset of the vertices")]
    OmegaNotProper,
    #[error("Ω is not connected")]
    DisconnectedOmega,
    #[error("Ω has no exterior boundary")]
    EmptyBoundary,
    #[error("Bochner quadrature did not settle below {tol:.1e} (last change {change:.3e} at {nodes} nodes)")]
    QuadratureStalled { tol: f64, change: f64, nodes: usize },
    #[error("Bochner quadrature needs 0 < s < 1")]
    LocalOrder,
    #[error("eigensolver failed to converge")]
    EigenFailure,
    #[error("vector length {got} does not match {expected}")]
    Length { expected: usize, got: usize },
    #[error("graph input: {0}")]
    Input(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Semigroup(#[from] SemigroupError),
}

/// A finite weighted graph `(V, μ, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    mu: Vec<f64>,
    w: DMatrix<f64>,
    ids: Vec<String>,
}

impl WeightedGraph {
    pub fn new(mu: Vec<f64>, w: DMatrix<f64>) -> Result<Self, GraphError> {
        let n = mu.len();
        if w.nrows() != n || w.ncols() != n {
            return Err(GraphError::Shape { expected: n, rows: w.nrows(), cols: w.ncols() });
        }
        for (x, &m) in mu.iter().enumerate() {
            if !(m.is_finite() && m > 0.0) {
                return Err(GraphError::BadMeasure(x));
            }
        }
        for x in 0..n {
            if w[(x, x)] != 0.0 {
                return Err(GraphError::SelfLoop(x));
            }
            for y in 0..n {
                if !(w[(x, y)].is_finite() && w[(x, y)] >= 0.0) {
                    return Err(GraphError::BadWeight(x, y));
                }
                if w[(x, y)] != w[(y, x)] {
                    return Err(GraphError::Asymmetric(x, y));
                }
            }
        }
        let ids = (0..n).map(|k| k.to_string()).collect();
        Ok(Self { mu, w, ids })
    }

    pub fn from_edges(mu: Vec<f64>, edges: &[(usize, usize, f64)]) -> Result<Self, GraphError> {
        let n = mu.len();
        let mut w = DMatrix::zeros(n, n);
        for &(a, b, wt) in edges {
            if a >= n {
                return Err(GraphError::UnknownVertex(a.to_string()));
            }
            if b >= n {
                return Err(GraphError::UnknownVertex(b.to_string()));
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            w[(a, b)] += wt;
            w[(b, a)] += wt;
        }
        Self::new(mu, w)
    }

    /// Path `0 - 1 - ⋯ - (n-1)` with unit data.
    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|k| (k - 1, k, 1.0)).collect();
        Self::from_edges(vec![1.0; n], &edges).expect("valid path")
    }

    /// Cycle on `n >= 3` vertices with unit data.
    pub fn cycle(n: usize) -> Self {
        let edges: Vec<_> = (0..n).map(|k| (k, (k + 1) % n, 1.0)).collect();
        Self::from_edges(vec![1.0; n], &edges).expect("valid cycle")
    }

    /// Square box `{0..side}²` of `ℤ²` with unit data; vertex `(i, j)` has
    /// index `i · side + j`.
    pub fn grid_box(side: usize) -> Self {
        let mut edges = Vec::new();
        for i in 0..side {
            for j in 0..side {
                let v = i * side + j;
                if j + 1 < side {
                    edges.push((v, v + 1, 1.0));
                }
                if i + 1 < side {
                    edges.push((v, v + side, 1.0));
                }
            }
        }
        Self::from_edges(vec![1.0; side * side], &edges).expect("valid box")
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// Vertex labels, as read from input or `0..n`.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    fn neighbours(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |&y| self.w[(x, y)] > 0.0)
    }

    /// Connected components, as a component label per vertex.
    pub fn components(&self) -> Vec<usize> {
        let n = self.n();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            let mut queue = VecDeque::from([start]);
            while let Some(x) = queue.pop_front() {
                for y in self.neighbours(x) {
                    if label[y] == usize::MAX {
                        label[y] = next;
                        queue.push_back(y);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }

    /// Whether the subgraph induced on `set` is connected.
    pub fn induces_connected(&self, set: &[usize]) -> bool {
        if set.is_empty() {
            return false;
        }
        let inside: Vec<bool> = (0..self.n()).map(|x| set.contains(&x)).collect();
        let mut seen = vec![false; self.n()];
        seen[set[0]] = true;
        let mut queue = VecDeque::from([set[0]]);
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for y in self.neighbours(x) {
                if inside[y] && !seen[y] {
                    seen[y] = true;
                    count += 1;
                    queue.push_back(y);
                }
            }
        }
        count == set.len()
    }

    /// Vertices outside `set` adjacent to it.
    pub fn boundary(&self, set: &[usize]) -> Vec<usize> {
        (0..self.n())
            .filter(|y| !set.contains(y) && set.iter().any(|&x| self.w[(x, *y)] > 0.0))
            .collect()
    }

    /// Parses the JSON graph format; returns the graph and the `omega` list.
    pub fn from_json(text: &str) -> Result<(Self, Vec<usize>), GraphError> {
        let spec: GraphSpec = serde_json::from_str(text).map_err(|e| GraphError::Input(e.to_string()))?;
        spec.build()
    }
}

/// Vertex identifier in the JSON format.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VertexId {
    Number(i64),
    Name(String),
}

impl VertexId {
    fn label(&self) -> String {
        match self {
            VertexId::Number(k) => k.to_string(),
            VertexId::Name(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VertexSpec {
    pub id: VertexId,
    #[serde(default = "unit")]
    pub mu: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub a: VertexId,
    pub b: VertexId,
    #[serde(default = "unit")]
    pub w: f64,
}

fn unit() -> f64 {
    1.0
}

/// `{vertices: [{id, mu}], edges: [{a, b, w}], omega: [ids]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphSpec {
    pub vertices: Vec<VertexSpec>,
    pub edges: Vec<EdgeSpec>,
    #[serde(default)]
    pub omega: Vec<VertexId>,
}

impl GraphSpec {
    pub fn build(&self) -> Result<(WeightedGraph, Vec<usize>), GraphError> {
        let mut index = HashMap::new();
        for (k, v) in self.vertices.iter().enumerate() {
            if index.insert(v.id.clone(), k).is_some() {
                return Err(GraphError::DuplicateVertex(v.id.label()));
            }
        }
        let find = |id: &VertexId| index.get(id).copied().ok_or_else(|| GraphError::UnknownVertex(id.label()));
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            edges.push((find(&e.a)?, find(&e.b)?, e.w));
        }
        let mut g = WeightedGraph::from_edges(self.vertices.iter().map(|v| v.mu).collect(), &edges)?;
        g.ids = self.vertices.iter().map(|v| v.id.label()).collect();
        let omega = self.omega.iter().map(find).collect::<Result<Vec<_>, _>>()?;
        Ok((g, omega))
    }
}

/// `-Δ` with `(-Δu)(x) = (1/μ(x)) Σ_y w_xy (u(x) - u(y))`.
pub fn host_laplacian(g: &WeightedGraph) -> DMatrix<f64> {
    let n = g.n();
    let mut l = DMatrix::zeros(n, n);
    for x in 0..n {
        let mut deg = 0.0;
        for y in 0..n {
            let w = g.w[(x, y)];
            if w > 0.0 {
                l[(x, y)] = -w / g.mu[x];
                deg += w;
            }
        }
        l[(x, x)] = deg / g.mu[x];
    }
    l
}

/// `D^{1/2} A D^{-1/2}`, symmetrised.
fn symmetrize(a: &DMatrix<f64>, mu: &[f64]) -> DMatrix<f64> {
    let n = mu.len();
    let sq: Vec<f64> = mu.iter().map(|m| m.sqrt()).collect();
    let b = DMatrix::from_fn(n, n, |i, j| sq[i] * a[(i, j)] / sq[j]);
    (&b + b.transpose()) * 0.5
}

/// `D^{-1/2} B D^{1/2}`.
fn desymmetrize(b: &DMatrix<f64>, mu: &[f64]) -> DMatrix<f64> {
    let n = mu.len();
    let sq: Vec<f64> = mu.iter().map(|m| m.sqrt()).collect();
    DMatrix::from_fn(n, n, |i, j| b[(i, j)] * sq[j] / sq[i])
}

fn eigen(s: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>), GraphError> {
    let n = s.nrows();
    let e = SymmetricEigen::try_new(s, 1e-15, 100_000).ok_or(GraphError::EigenFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let vals: Vec<f64> = order.iter().map(|&k| e.eigenvalues[k]).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(GraphError::EigenFailure);
    }
    let vecs = DMatrix::from_fn(n, n, |i, j| e.eigenvectors[(i, order[j])]);
    Ok((vals, vecs))
}

/// `(-Δ)^s` by the spectral calculus of the host Laplacian.
pub fn frac_power_spectral(g: &WeightedGraph, s: FracOrder) -> Result<DMatrix<f64>, GraphError> {
    let l = host_laplacian(g);
    if s.is_local() {
        return Ok(l);
    }
    let (vals, q) = eigen(symmetrize(&l, &g.mu))?;
    let floor = 1e-12 * vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let pw = DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| if v <= floor { 0.0 } else { v.powf(s.value()) }),
    );
    let b = &q * DMatrix::from_diagonal(&pw) * q.transpose();
    Ok(desymmetrize(&b, &g.mu))
}

/// `e^{M}` for a Metzler `M` by uniformisation: `M + cI` is entrywise
/// nonnegative, so every Taylor term of the scaled exponential is too.
/// Scaling and squaring fold `e^{-c/2^j}` in before squaring.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let c = (0..n).map(|i| -m[(i, i)]).fold(0.0, f64::max);
    let a = m + DMatrix::identity(n, n) * c;
    let norm = a.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let j = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scale = 2f64.powi(-j);
    let a = a * scale;
    let mut term = DMatrix::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=18 {
        term = &term * &a / k as f64;
        sum += &term;
    }
    let mut e = sum * (-c * scale).exp();
    for _ in 0..j {
        e = &e * &e;
    }
    e
}

/// `(I - e^{-tA}) / t`, with a series where `t ‖A‖` is small.
fn one_minus_exp_over_t(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let ta = a * t;
    let norm = ta.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    if norm > 0.5 {
        return (DMatrix::identity(n, n) - expm(&(-ta))) / t;
    }
    let mut term = a.clone();
    let mut sum = a.clone();
    for k in 2..=30 {
        term = -(&term * &ta) / k as f64;
        sum += &term;
        if term.amax() <= 1e-18 * sum.amax() {
            break;
        }
    }
    sum
}

/// Orthogonal projector onto `ker S` for the symmetrised Laplacian: the
/// normalised `√μ` on each connected component.
fn kernel_projector(g: &WeightedGraph) -> DMatrix<f64> {
    let n = g.n();
    let comp = g.components();
    let mut p = DMatrix::zeros(n, n);
    let count = comp.iter().copied().max().map_or(0, |c| c + 1);
    for c in 0..count {
        let members: Vec<usize> = (0..n).filter(|&x| comp[x] == c).collect();
        let total: f64 = members.iter().map(|&x| g.mu[x]).sum();
        for &x in &members {
            for &y in &members {
                p[(x, y)] = (g.mu[x] * g.mu[y]).sqrt() / total;
            }
        }
    }
    p
}

/// `(-Δ)^s = (s/Γ(1-s)) ∫₀^∞ (I - e^{tΔ}) t^{-1-s} dt` by quadrature.
///
/// On `(0, 1)` the substitution `t = τ^k`, `k = 5/(1-s)`, turns the
/// integrand into `O(τ⁴)`. On `(1, ∞)` the kernel projector is integrated
/// exactly and the decaying rest by Gauss–Legendre on panels `[2^j, 2^{j+1}]`.
/// Node counts double until the result moves by less than `quad_tol / 10`.
pub fn frac_power_bochner(g: &WeightedGraph, s: FracOrder, quad_tol: f64) -> Result<DMatrix<f64>, GraphError> {
    if s.is_local() {
        return Err(GraphError::LocalOrder);
    }
    let sv = s.value();
    let n = g.n();
    let sym = symmetrize(&host_laplacian(g), &g.mu);
    let p0 = kernel_projector(g);
    let k = 5.0 / (1.0 - sv);
    let pref = sv / statrs::function::gamma::gamma(1.0 - sv);
    let eval = |nodes: usize| -> DMatrix<f64> {
        let mut acc = DMatrix::zeros(n, n);
        for (tau, w) in gauss_legendre(nodes, 0.0, 1.0) {
            acc += one_minus_exp_over_t(&sym, tau.powf(k)) * (w * k * tau.powi(4));
        }
        let rest = DMatrix::identity(n, n) - &p0;
        acc += rest / sv;
        let mut lo = 1.0;
        loop {
            let hi = 2.0 * lo;
            let mut panel = DMatrix::zeros(n, n);
            for (t, w) in gauss_legendre(nodes, lo, hi) {
                panel += (expm(&(-&sym * t)) - &p0) * (w * t.powf(-1.0 - sv));
            }
            acc -= &panel;
            if panel.amax() < 1e-3 * quad_tol || hi > 1e12 {
                break;
            }
            lo = hi;
        }
        acc * pref
    };
    let mut nodes = 8;
    let mut prev = eval(nodes);
    loop {
        nodes *= 2;
        let next = eval(nodes);
        let change = (&next - &prev).amax();
        if change < quad_tol / 10.0 {
            return Ok(desymmetrize(&next, &g.mu));
        }
        if nodes >= 256 {
            return Err(GraphError::QuadratureStalled { tol: quad_tol, change, nodes });
        }
        prev = next;
    }
}

/// `L^D_{Ω,s}` as a dense `|Ω| x |Ω|` matrix acting on `ℓ²(Ω, μ|_Ω)`.
#[derive(Debug, Clone)]
pub struct DirichletOperator {
    pub host: WeightedGraph,
    pub omega: Vec<usize>,
    pub s: FracOrder,
    pub matrix: DMatrix<f64>,
    /// Non-fatal conditions noticed during construction.
    pub warnings: Vec<String>,
}

/// Builds `L^D_{Ω,s}`: the principal submatrix of `(-Δ)^s` on `Ω` for
/// `s < 1`, the Dirichlet stencil for `s = 1`.
pub fn dirichlet_operator(g: &WeightedGraph, omega: &[usize], s: FracOrder) -> Result<DirichletOperator, GraphError> {
    if omega.is_empty() {
        return Err(GraphError::EmptyOmega);
    }
    let mut seen = vec![false; g.n()];
    for &x in omega {
        if x >= g.n() {
            return Err(GraphError::UnknownVertex(x.to_string()));
        }
        if std::mem::replace(&mut seen[x], true) {
            return Err(GraphError::DuplicateVertex(g.ids[x].clone()));
        }
    }
    if omega.len() == g.n() {
        return Err(GraphError::OmegaNotProper);
    }
    if !g.induces_connected(omega) {
        return Err(GraphError::DisconnectedOmega);
    }
    let mut warnings = Vec::new();
    if g.boundary(omega).is_empty() {
        if s.is_local() {
            return Err(GraphError::EmptyBoundary);
        }
        warnings.push("Ω has no exterior boundary; only long-range weights leave Ω".to_string());
    }
    let m = omega.len();
    let matrix = if s.is_local() {
        DMatrix::from_fn(m, m, |i, j| {
            let (x, y) = (omega[i], omega[j]);
            if i == j {
                (0..g.n()).map(|z| g.w[(x, z)]).sum::<f64>() / g.mu[x]
            } else {
                -g.w[(x, y)] / g.mu[x]
            }
        })
    } else {
        let full = frac_power_spectral(g, s)?;
        DMatrix::from_fn(m, m, |i, j| full[(omega[i], omega[j])])
    };
    Ok(DirichletOperator {
        host: g.clone(),
        omega: omega.to_vec(),
        s,
        matrix,
        warnings,
    })
}

impl DirichletOperator {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// `μ` restricted to `Ω`.
    pub fn measure(&self) -> Vec<f64> {
        self.omega.iter().map(|&x| self.host.mu[x]).collect()
    }

    /// `⟨u, v⟩ = Σ_{x∈Ω} μ(x) u(x) v(x)`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.omega.iter().zip(u).zip(v).map(|((&x, a), b)| self.host.mu[x] * a * b).sum()
    }

    /// `ℓ^p(Ω, μ)` norm.
    pub fn norm(&self, u: &[f64], p: f64) -> f64 {
        if p.is_infinite() {
            return u.iter().fold(0.0, |m, v| m.max(v.abs()));
        }
        let sum: f64 = self.omega.iter().zip(u).map(|(&x, v)| self.host.mu[x] * v.abs().powf(p)).sum();
        sum.powf(1.0 / p)
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(u)).as_slice().to_vec()
    }

    /// `e^{-tL} u` by the matrix exponential.
    pub fn exp_apply(&self, u: &[f64], t: f64) -> Vec<f64> {
        (expm(&(-&self.matrix * t)) * DVector::from_column_slice(u)).as_slice().to_vec()
    }
}

/// Eigenpairs of `L^D_{Ω,s}`, orthonormal in `ℓ²(Ω, μ|_Ω)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    /// Column `k` holds `ψ_{k+1}`.
    pub eigenvectors: DMatrix<f64>,
    pub measure: Vec<f64>,
}

impl SpectralData {
    pub fn gap(&self) -> f64 {
        self.eigenvalues[1] - self.eigenvalues[0]
    }

    pub fn mode(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.column(k).iter().copied().collect()
    }

    pub fn coefficient(&self, u: &[f64], k: usize) -> f64 {
        self.eigenvectors
            .column(k)
            .iter()
            .zip(u)
            .zip(&self.measure)
            .map(|((p, a), m)| m * p * a)
            .sum()
    }

    /// `Σ_k e^{-μ_k t} ⟨u₀, ψ_k⟩ ψ_k`, optionally without the first mode.
    fn expand(&self, u0: &[f64], t: f64, skip_first: bool) -> Vec<f64> {
        let n = self.measure.len();
        let mut out = vec![0.0; n];
        for k in usize::from(skip_first)..n {
            let c = (-self.eigenvalues[k] * t).exp() * self.coefficient(u0, k);
            for (o, p) in out.iter_mut().zip(self.eigenvectors.column(k).iter()) {
                *o += c * p;
            }
        }
        out
    }
}

/// Weighted eigendecomposition via `D^{1/2} L D^{-1/2}`; `ψ₁` is made
/// positive in sum.
pub fn spectral_solve(op: &DirichletOperator) -> Result<SpectralData, GraphError> {
    let measure = op.measure();
    let (vals, q) = eigen(symmetrize(&op.matrix, &measure))?;
    let n = measure.len();
    let mut vecs = DMatrix::from_fn(n, n, |i, j| q[(i, j)] / measure[i].sqrt());
    for k in 0..n {
        let nrm: f64 = (0..n).map(|i| measure[i] * vecs[(i, k)].powi(2)).sum::<f64>().sqrt();
        let sign = if k == 0 && vecs.column(0).sum() < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vecs[(i, k)] *= sign / nrm;
        }
    }
    Ok(SpectralData {
        eigenvalues: vals,
        eigenvectors: vecs,
        measure,
    })
}

/// `u(t)` on `Ω` by the spectral expansion.
pub fn dirichlet_evolve(spec: &SpectralData, u0: &[f64], t: f64) -> Result<Vec<f64>, GraphError> {
    if u0.len() != spec.measure.len() {
        return Err(GraphError::Length { expected: spec.measure.len(), got: u0.len() });
    }
    Ok(spec.expand(u0, t, false))
}

/// First-mode asymptotics over a time sweep.
#[derive(Debug, Clone, Serialize)]
pub struct FirstModeReport {
    pub mu1: f64,
    pub mu2: f64,
    /// `‖u(t) - e^{-μ₁t}⟨u₀,ψ₁⟩ψ₁‖_p` against `t`; slope near `-μ₂`.
    pub remainder: RateReport,
    /// `‖e^{μ₁t} u(t)/⟨u₀,ψ₁⟩ - ψ₁‖_p` against `t`; slope near `-(μ₂ - μ₁)`.
    /// Absent when `⟨u₀, ψ₁⟩ = 0`.
    pub renormalized: Option<RateReport>,
    /// Largest `‖R(t)‖₂ / (e^{-μ₂t} ‖u₀‖₂)` over the sweep.
    pub l2_ratio_max: f64,
}

/// Semi-log fits of the first-mode remainder.
pub fn first_mode_report(
    op: &DirichletOperator,
    spec: &SpectralData,
    u0: &[f64],
    p: f64,
    times: &[f64],
) -> Result<FirstModeReport, GraphError> {
    use crate::semigroup::MIN_SWEEP_POINTS;
    if times.len() < MIN_SWEEP_POINTS {
        return Err(SemigroupError::TooFewPoints { needed: MIN_SWEEP_POINTS, got: times.len() }.into());
    }
    if u0.len() != op.len() {
        return Err(GraphError::Length { expected: op.len(), got: u0.len() });
    }
    let (mu1, mu2) = (spec.eigenvalues[0], spec.eigenvalues[1]);
    let c1 = spec.coefficient(u0, 0);
    let u0_l2 = op.norm(u0, 2.0);
    let mut rem = Vec::with_capacity(times.len());
    let mut ren = Vec::with_capacity(times.len());
    let mut l2_ratio_max = 0.0f64;
    let orthogonal = c1.abs() <= 1e-12 * u0_l2.max(f64::MIN_POSITIVE);
    for &t in times {
        let r = spec.expand(u0, t, true);
        rem.push(op.norm(&r, p));
        l2_ratio_max = l2_ratio_max.max(op.norm(&r, 2.0) / ((-mu2 * t).exp() * u0_l2));
        if !orthogonal {
            let scaled: Vec<f64> = r.iter().map(|v| v * (mu1 * t).exp() / c1).collect();
            ren.push(op.norm(&scaled, p));
        }
    }
    let remainder = RateReport::fit(FitScale::SemiLog, times.to_vec(), rem.clone(), rem)?;
    let renormalized = if orthogonal {
        None
    } else {
        Some(RateReport::fit(FitScale::SemiLog, times.to_vec(), ren.clone(), ren)?)
    };
    Ok(FirstModeReport {
        mu1,
        mu2,
        remainder,
        renormalized,
        l2_ratio_max,
    })
}

/// Outcome of the positivity check for `e^{-tL}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityReport {
    /// Off-diagonal entries of `-L` are all `>= 0`.
    pub metzler: bool,
    /// The positivity pattern of `-L` is strongly connected.
    pub irreducible: bool,
    /// Every off-diagonal entry of `-L` is `> 0`.
    pub complete_pattern: bool,
    pub times: Vec<f64>,
    /// Smallest entry of `e^{-tL}` per sample time.
    pub min_entries: Vec<f64>,
    pub min_entry: f64,
    /// Every entry positive at every sample time.
    pub positive: bool,
}

/// Positivity of `e^{-tL}` for an arbitrary square `L`.
pub fn positivity_check_matrix(l: &DMatrix<f64>, times: &[f64]) -> PositivityReport {
    let n = l.nrows();
    let off = |i: usize, j: usize| -l[(i, j)];
    let metzler = (0..n).all(|i| (0..n).all(|j| i == j || off(i, j) >= 0.0));
    let complete_pattern = (0..n).all(|i| (0..n).all(|j| i == j || off(i, j) > 0.0));
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        if n == 0 {
            return true;
        }
        seen[0] = true;
        let mut queue = VecDeque::from([0]);
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                let e = if forward { off(i, j) } else { off(j, i) };
                if i != j && e > 0.0 && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.iter().all(|&b| b)
    };
    let irreducible = reach(true) && reach(false);
    let min_entries: Vec<f64> = times.iter().map(|&t| expm(&(-l * t)).min()).collect();
    let min_entry = min_entries.iter().copied().fold(f64::INFINITY, f64::min);
    PositivityReport {
        metzler,
        irreducible,
        complete_pattern,
        times: times.to_vec(),
        positive: min_entry > 0.0,
        min_entries,
        min_entry,
    }
}

/// Positivity of `S_{Ω,s}(t) = e^{-t L^D_{Ω,s}}` on `Ω`.
pub fn positivity_improving_check(op: &DirichletOperator, times: &[f64]) -> PositivityReport {
    positivity_check_matrix(&op.matrix, times)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        (a - b).amax() < tol
    }

    #[test]
    fn path_laplacian_stencil() {
        let l = host_laplacian(&WeightedGraph::path(3));
        let want = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        assert_eq!(l, want);
    }

    #[test]
    fn cycle_spectrum() {
        let g = WeightedGraph::cycle(4);
        let (vals, _) = eigen(symmetrize(&host_laplacian(&g), g.mu())).unwrap();
        for (v, w) in vals.iter().zip([0.0, 2.0, 2.0, 4.0]) {
            assert!((v - w).abs() < 1e-12);
        }
        let half = frac_power_spectral(&g, FracOrder::new(0.5).unwrap()).unwrap();
        let (vals, _) = eigen(symmetrize(&half, g.mu())).unwrap();
        for (v, w) in vals.iter().zip([0.0, 2f64.sqrt(), 2f64.sqrt(), 2.0]) {
            assert!((v - w).abs() < 1e-12);
        }
    }

    #[test]
    fn square_root_squares_to_laplacian() {
        let g = WeightedGraph::from_edges(vec![1.0, 2.0, 0.5, 1.5], &[(0, 1, 1.0), (1, 2, 0.3), (2, 3, 2.0), (0, 3, 0.7)]).unwrap();
        let h = frac_power_spectral(&g, FracOrder::new(0.5).unwrap()).unwrap();
        assert!(close(&(&h * &h), &host_laplacian(&g), 1e-10));
    }

    #[test]
    fn expm_of_diagonal_and_rotation_generator() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -3.0]));
        let e = expm(&d);
        assert!((e[(0, 0)] - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(e[(0, 1)], 0.0);
        let m = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
        let e = expm(&(m * 5.0));
        let want = 0.5 * (1.0 + (-10f64).exp());
        assert!((e[(0, 0)] - want).abs() < 1e-14);
    }

    #[test]
    fn dirichlet_stencil_on_path() {
        let op = dirichlet_operator(&WeightedGraph::path(5), &[1, 2, 3], FracOrder::ONE).unwrap();
        let want = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        assert_eq!(op.matrix, want);
    }

    #[test]
    fn omega_validation() {
        let g = WeightedGraph::path(5);
        let s = FracOrder::ONE;
        assert_eq!(dirichlet_operator(&g, &[], s).unwrap_err(), GraphError::EmptyOmega);
        assert_eq!(dirichlet_operator(&g, &[0, 2], s).unwrap_err(), GraphError::DisconnectedOmega);
        assert_eq!(dirichlet_operator(&g, &[0, 1, 2, 3, 4], s).unwrap_err(), GraphError::OmegaNotProper);
    }

    #[test]
    fn json_roundtrip() {
        let text = r#"{"vertices":[{"id":"a","mu":1},{"id":"b","mu":2},{"id":3}],
            "edges":[{"a":"a","b":"b","w":1.5},{"a":"b","b":3}],"omega":["b"]}"#;
        let (g, omega) = WeightedGraph::from_json(text).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(omega, vec![1]);
        assert_eq!(g.weights()[(0, 1)], 1.5);
        assert_eq!(g.weights()[(1, 2)], 1.0);
        assert!(WeightedGraph::from_json(r#"{"vertices":[{"id":1}],"edges":[{"a":1,"b":2}]}"#).is_err());
    }
}
