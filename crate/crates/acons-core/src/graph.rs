//! Undirected weighted communication graph, its Laplacian, and the
//! orthonormal decomposition used by all compact-form analysis.
//!
//! For a connected graph the Laplacian `L = D - A` has a single zero
//! eigenvalue with eigenvector `1`. The transform `T = [r N]`, with
//! `r = 1/sqrt(n) * 1` and `N` any orthonormal completion, block-diagonalizes
//! it: `Tᵀ L T = diag(0, L⁺)` where the reduced Laplacian `L⁺ = Nᵀ L N` is
//! positive definite. `N` is fixed here as the trailing columns of the
//! Householder reflection mapping `e₁` to `r`, which makes the decomposition
//! deterministic.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::math;
use crate::{Error, Result};

/// Undirected weighted graph over `n >= 2` agents.
///
/// The adjacency matrix must be symmetric with zero diagonal and
/// non-negative entries, and the positive-weight edges must form a
/// connected graph. All of that is enforced at construction, so downstream
/// code never revalidates.
#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    n: usize,
    adjacency: Matrix,
}

impl Topology {
    pub fn new(adjacency: Matrix) -> Result<Self> {
        if !is_connected(&adjacency)? {
            return Err(Error::Disconnected);
        }
        Ok(Topology { n: adjacency.rows(), adjacency })
    }

    /// Ring of `n` agents with uniform edge weight.
    pub fn ring(n: usize, weight: f64) -> Result<Self> {
        let mut a = Matrix::zeros(n, n);
        if n >= 2 {
            for i in 0..n {
                let j = (i + 1) % n;
                a[(i, j)] = weight;
                a[(j, i)] = weight;
            }
        }
        Topology::new(a)
    }

    /// Path `1 - 2 - ... - n` with uniform edge weight.
    pub fn path(n: usize, weight: f64) -> Result<Self> {
        let mut a = Matrix::zeros(n, n);
        for i in 1..n {
            a[(i - 1, i)] = weight;
            a[(i, i - 1)] = weight;
        }
        Topology::new(a)
    }

    /// Complete graph with uniform edge weight.
    pub fn complete(n: usize, weight: f64) -> Result<Self> {
        let a = Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { weight });
        Topology::new(a)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn adjacency(&self) -> &Matrix {
        &self.adjacency
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.adjacency.row(i).iter().sum()
    }

    /// `L = D - A`; row and column sums are exactly zero by construction.
    pub fn laplacian(&self) -> Matrix {
        let n = self.n;
        let mut l = self.adjacency.scaled(-1.0);
        for i in 0..n {
            l[(i, i)] = self.degree(i);
        }
        l
    }

    /// Topology with agent `remove` (0-based) deleted, for departures.
    /// Fails if the survivors are disconnected.
    pub fn remove_agent(&self, remove: usize) -> Result<Topology> {
        if remove >= self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: remove });
        }
        let keep: Vec<usize> = (0..self.n).filter(|&i| i != remove).collect();
        let a = Matrix::from_fn(keep.len(), keep.len(), |i, j| {
            self.adjacency[(keep[i], keep[j])]
        });
        Topology::new(a)
    }
}

/// Validates a candidate adjacency matrix and reports whether the graph of
/// its positive-weight edges is connected (breadth-first reachability).
pub fn is_connected(candidate: &Matrix) -> Result<bool> {
    if !candidate.is_square() {
        return Err(Error::NotSquare { rows: candidate.rows(), cols: candidate.cols() });
    }
    let n = candidate.rows();
    if n < 2 {
        return Err(Error::AgentCountTooSmall(n));
    }
    for i in 0..n {
        for j in 0..n {
            let w = candidate[(i, j)];
            if !w.is_finite() {
                return Err(Error::NonFiniteInput("adjacency matrix"));
            }
            if w < 0.0 {
                return Err(Error::NegativeWeight(i, j));
            }
            if i == j && w != 0.0 {
                return Err(Error::NonzeroDiagonal(i));
            }
            if j > i && candidate[(i, j)] != candidate[(j, i)] {
                return Err(Error::AsymmetricAdjacency(i, j));
            }
        }
    }

    let mut seen = vec![false; n];
    let mut queue = vec![0usize];
    seen[0] = true;
    let mut reached = 1;
    while let Some(i) = queue.pop() {
        for j in 0..n {
            if !seen[j] && candidate[(i, j)] > 0.0 {
                seen[j] = true;
                reached += 1;
                queue.push(j);
            }
        }
    }
    Ok(reached == n)
}

/// Orthonormal transform `T = [r N]` and reduced Laplacian `L⁺ = Nᵀ L N`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDecomposition {
    n: usize,
    transform: Matrix,
    reduced_laplacian: Matrix,
}

impl SpectralDecomposition {
    /// Deterministic decomposition: `T` is the Householder reflection taking
    /// `e₁` to `r = 1/sqrt(n) * 1`; its trailing `n-1` columns form `N`.
    pub fn new(topology: &Topology) -> Self {
        let n = topology.n();
        let transform = householder_completion(n);
        let l = topology.laplacian();
        let basis = transform_columns(&transform, 1, n);
        let reduced = &(&basis.transpose() * &l) * &basis;
        SpectralDecomposition { n, transform, reduced_laplacian: reduced }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Full orthonormal transform `T`, first column `1/sqrt(n) * 1`.
    pub fn transform(&self) -> &Matrix {
        &self.transform
    }

    /// Disagreement basis `N` (columns 2..n of `T`).
    pub fn disagreement_basis(&self) -> Matrix {
        transform_columns(&self.transform, 1, self.n)
    }

    /// Reduced Laplacian `L⁺`, symmetric positive definite, `(n-1)x(n-1)`.
    pub fn reduced_laplacian(&self) -> &Matrix {
        &self.reduced_laplacian
    }

    /// `Tᵀ x`.
    pub fn to_transformed(&self, x: &[f64]) -> Vec<f64> {
        self.transform.transpose().mul_vec(x)
    }
}

/// Householder reflection `H = I - 2 u uᵀ / (uᵀu)` with `u = e₁ - r`, so
/// that `H e₁ = r`. `H` is symmetric orthogonal, hence its columns are an
/// orthonormal basis whose first element is `r`.
fn householder_completion(n: usize) -> Matrix {
    let r = 1.0 / math::sqrt(n as f64);
    let mut u = vec![-r; n];
    u[0] += 1.0;
    let uu: f64 = u.iter().map(|x| x * x).sum();
    if uu == 0.0 {
        // u = 0 would need n = 1; unreachable since n >= 2.
        return Matrix::identity(n);
    }
    Matrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - 2.0 * u[i] * u[j] / uu
    })
}

fn transform_columns(t: &Matrix, from: usize, to: usize) -> Matrix {
    Matrix::from_fn(t.rows(), to - from, |i, j| t[(i, from + j)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{self, sort_complex, sym_eigen};
    use proptest::prelude::*;

    #[test]
    fn unit_path_laplacian() {
        let top = Topology::path(2, 1.0).unwrap();
        let l = top.laplacian();
        assert_eq!(l[(0, 0)], 1.0);
        assert_eq!(l[(0, 1)], -1.0);
        assert_eq!(l[(1, 0)], -1.0);
        assert_eq!(l[(1, 1)], 1.0);
    }

    #[test]
    fn laplacian_annihilates_ones() {
        let top = Topology::ring(5, 0.7).unwrap();
        let l = top.laplacian();
        let ones = vec![1.0; 5];
        for r in l.mul_vec(&ones) {
            assert_eq!(r, 0.0);
        }
        // 1ᵀ L = 0 as well (symmetry).
        for j in 0..5 {
            let col: f64 = (0..5).map(|i| l[(i, j)]).sum();
            assert_eq!(col, 0.0);
        }
    }

    #[test]
    fn ring6_spectrum() {
        // Circulant oracle: the unit ring Laplacian has eigenvalues
        // 2 - 2 cos(2 pi k / n), here {0, 1, 1, 3, 3, 4}.
        let n = 6;
        let mut expected: Vec<f64> = (0..n)
            .map(|k| 2.0 - 2.0 * (2.0 * core::f64::consts::PI * k as f64 / n as f64).cos())
            .collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(
            expected.iter().map(|v| (v * 1e6).round() / 1e6).collect::<Vec<_>>(),
            vec![0.0, 1.0, 1.0, 3.0, 3.0, 4.0]
        );

        let top = Topology::ring(n, 1.0).unwrap();
        let eig = sym_eigen(&top.laplacian()).unwrap();
        for (got, want) in eig.values.iter().zip(expected) {
            assert!((got - want).abs() < 1e-10, "got {got} want {want}");
        }
    }

    #[test]
    fn connectivity_cases() {
        let path2 = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(is_connected(&path2).unwrap());

        let no_edge = Matrix::zeros(2, 2);
        assert!(!is_connected(&no_edge).unwrap());

        // Ring of 6 with one edge removed is a path: still connected.
        let mut ring = Topology::ring(6, 1.0).unwrap().adjacency().clone();
        ring[(0, 5)] = 0.0;
        ring[(5, 0)] = 0.0;
        assert!(is_connected(&ring).unwrap());
    }

    #[test]
    fn invalid_candidates_rejected() {
        let asym = Matrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(is_connected(&asym), Err(Error::AsymmetricAdjacency(0, 1)));

        let neg = Matrix::from_rows(&[vec![0.0, -1.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(is_connected(&neg), Err(Error::NegativeWeight(0, 1)));

        let diag = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(is_connected(&diag), Err(Error::NonzeroDiagonal(0)));

        assert_eq!(Topology::new(Matrix::zeros(2, 2)).unwrap_err(), Error::Disconnected);
        assert_eq!(is_connected(&Matrix::zeros(1, 1)), Err(Error::AgentCountTooSmall(1)));
    }

    #[test]
    fn two_agent_decomposition() {
        let top = Topology::path(2, 1.0).unwrap();
        let dec = SpectralDecomposition::new(&top);
        let s = 1.0 / 2.0f64.sqrt();
        let t = dec.transform();
        assert!((t[(0, 0)] - s).abs() < 1e-15);
        assert!((t[(1, 0)] - s).abs() < 1e-15);
        // N = (1/sqrt 2)(1, -1) up to sign; NᵀLN = 2 either way.
        assert!((dec.reduced_laplacian()[(0, 0)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn ring6_reduced_spectrum_matches_nonzero_laplacian_eigenvalues() {
        let top = Topology::ring(6, 1.0).unwrap();
        let dec = SpectralDecomposition::new(&top);
        let mut vals = linalg::general_eigenvalues(dec.reduced_laplacian()).unwrap();
        sort_complex(&mut vals);
        let expected = [1.0, 1.0, 3.0, 3.0, 4.0];
        for (got, want) in vals.iter().zip(expected) {
            assert!(got.im.abs() < 1e-10);
            assert!((got.re - want).abs() < 1e-9, "got {} want {want}", got.re);
        }
    }

    #[test]
    fn decomposition_is_deterministic() {
        let top = Topology::ring(7, 1.3).unwrap();
        let a = SpectralDecomposition::new(&top);
        let b = SpectralDecomposition::new(&top);
        for (x, y) in a.transform().data().iter().zip(b.transform().data()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        for (x, y) in a.reduced_laplacian().data().iter().zip(b.reduced_laplacian().data()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn remove_agent_keeps_survivor_structure() {
        let top = Topology::ring(6, 1.0).unwrap();
        let reduced = top.remove_agent(0).unwrap();
        assert_eq!(reduced.n(), 5);
        // Survivors 2..6 form a path: degree 1 at the ends.
        assert_eq!(reduced.degree(0), 1.0);
        assert_eq!(reduced.degree(4), 1.0);
        assert_eq!(reduced.degree(2), 2.0);
    }

    /// Random connected graph: a spanning path plus random extra edges,
    /// weights in (0, 2].
    fn connected_graph() -> impl Strategy<Value = Matrix> {
        (2usize..=12).prop_flat_map(|n| {
            let weights = proptest::collection::vec(0.01f64..=2.0, n * n);
            let extra = proptest::collection::vec(proptest::bool::ANY, n * n);
            (Just(n), weights, extra).prop_map(|(n, w, extra)| {
                let mut a = Matrix::zeros(n, n);
                for i in 1..n {
                    a[(i - 1, i)] = w[i];
                    a[(i, i - 1)] = w[i];
                }
                for i in 0..n {
                    for j in (i + 1)..n {
                        if extra[i * n + j] && a[(i, j)] == 0.0 {
                            a[(i, j)] = w[i * n + j];
                            a[(j, i)] = w[i * n + j];
                        }
                    }
                }
                a
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        /// L symmetric PSD with exactly one zero eigenvalue, and TᵀLT is
        /// block-diagonal diag(0, L⁺) to 1e-10.
        #[test]
        fn decomposition_block_structure(adj in connected_graph()) {
            let top = Topology::new(adj).unwrap();
            let n = top.n();
            let l = top.laplacian();
            prop_assert!(l.asymmetry() == 0.0);

            let eig = sym_eigen(&l).unwrap();
            let scale = 1.0 + l.frobenius_norm();
            prop_assert!(eig.values[0].abs() < 1e-9 * scale);
            prop_assert!(eig.values[1] > 1e-9, "second eigenvalue {}", eig.values[1]);
            for v in &eig.values {
                prop_assert!(*v > -1e-9 * scale);
            }

            let dec = SpectralDecomposition::new(&top);
            let t = dec.transform();
            let residual = (&t.transpose() * t).sub(&Matrix::identity(n));
            prop_assert!(linalg::spectral_norm(&residual).unwrap() < 1e-12);

            let block = &(&t.transpose() * &l) * t;
            // First row/column must vanish; trailing block must equal L⁺.
            for j in 0..n {
                prop_assert!(block[(0, j)].abs() < 1e-10 * scale);
                prop_assert!(block[(j, 0)].abs() < 1e-10 * scale);
            }
            for i in 1..n {
                for j in 1..n {
                    let diff = block[(i, j)] - dec.reduced_laplacian()[(i - 1, j - 1)];
                    prop_assert!(diff.abs() < 1e-10 * scale);
                }
            }
        }
    }
}
