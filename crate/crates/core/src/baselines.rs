//! Dense-matrix reference orderings: maximum spanning tree traversal and
//! spectral (Fiedler) seriation.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::graph::SimilarityGraph;
use crate::perm::Permutation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("matrix has {len} entries, expected {n}x{n}")]
    Shape { n: usize, len: usize },
    #[error("entry ({i},{j}) is not finite")]
    NonFinite { i: usize, j: usize },
    #[error("entries ({i},{j}) and ({j},{i}) differ")]
    Asymmetric { i: usize, j: usize },
    #[error("entry ({i},{j}) is negative")]
    Negative { i: usize, j: usize },
    #[error("similarity graph is disconnected")]
    DisconnectedSimilarity,
    #[error("nothing to order")]
    Empty,
}

/// Symmetric `n x n` similarity matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSimilarity {
    m: DMatrix<f64>,
}

impl DenseSimilarity {
    /// Validates a row-major matrix; the diagonal is forced to zero.
    pub fn new(n: usize, row_major: Vec<f64>) -> Result<Self, BaselineError> {
        if row_major.len() != n * n {
            return Err(BaselineError::Shape { n, len: row_major.len() });
        }
        let mut m = DMatrix::from_row_slice(n, n, &row_major);
        for i in 0..n {
            m[(i, i)] = 0.0;
            for j in 0..n {
                if !m[(i, j)].is_finite() {
                    return Err(BaselineError::NonFinite { i, j });
                }
                if m[(i, j)] != m[(j, i)] {
                    return Err(BaselineError::Asymmetric { i: i.min(j), j: i.max(j) });
                }
            }
        }
        Ok(Self { m })
    }

    /// Dense form of a sparse graph; missing pairs become zero.
    pub fn from_graph(g: &SimilarityGraph) -> Self {
        let n = g.len();
        let mut m = DMatrix::zeros(n, n);
        for (u, v, w) in g.edges() {
            m[(u, v)] = w;
            m[(v, u)] = w;
        }
        Self { m }
    }

    pub fn len(&self) -> usize {
        self.m.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { m: &self.m * factor }
    }
}

/// Maximum-weight spanning tree by Prim's algorithm over all pairs, rooted
/// at item 0. Equal keys go to the smaller id. Returns `(parent, child, w)`
/// in insertion order.
pub fn max_spanning_tree(m: &DenseSimilarity) -> Vec<(usize, usize, f64)> {
    let n = m.len();
    if n == 0 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::NEG_INFINITY; n];
    let mut link = vec![0usize; n];
    let mut out = Vec::with_capacity(n - 1);
    in_tree[0] = true;
    for v in 1..n {
        best[v] = m.get(0, v);
    }
    for _ in 1..n {
        let mut pick = None;
        for v in 0..n {
            if !in_tree[v] && pick.is_none_or(|p: usize| best[v] > best[p]) {
                pick = Some(v);
            }
        }
        let v = pick.expect("vertex outside tree");
        in_tree[v] = true;
        out.push((link[v], v, best[v]));
        for u in 0..n {
            if !in_tree[u] && m.get(v, u) > best[u] {
                best[u] = m.get(v, u);
                link[u] = v;
            }
        }
    }
    out
}

/// Maximum spanning tree linearized by depth-first traversal from one end of
/// the tree's longest path, visiting heavier child edges first.
pub fn naive_mst_order(m: &DenseSimilarity) -> Result<Permutation, BaselineError> {
    let n = m.len();
    if n == 0 {
        return Err(BaselineError::Empty);
    }
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (u, v, w) in max_spanning_tree(m) {
        adj[u].push((v, w));
        adj[v].push((u, w));
    }
    for list in &mut adj {
        list.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    }
    let tree = SimilarityGraph::from_edges(
        n,
        adj.iter()
            .enumerate()
            .flat_map(|(u, l)| l.iter().filter(move |e| e.0 > u).map(move |&(v, w)| (u, v, w))),
    );
    let start = crate::graph::double_sweep(&tree, 0)
        .map(|ds| ds.endpoint_a)
        .unwrap_or(0);

    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        order.push(v);
        for &(u, _) in adj[v].iter().rev() {
            if !seen[u] {
                stack.push(u);
            }
        }
    }
    Ok(Permutation::new(order).expect("tree spans all items").canonical())
}

/// `I - D^{-1/2} W D^{-1/2}`.
pub fn normalized_laplacian(m: &DenseSimilarity) -> Result<DMatrix<f64>, BaselineError> {
    let n = m.len();
    let mut inv_sqrt = DVector::zeros(n);
    for i in 0..n {
        let mut d = 0.0;
        for j in 0..n {
            let w = m.get(i, j);
            if w < 0.0 {
                return Err(BaselineError::Negative { i, j });
            }
            d += w;
        }
        if d <= 0.0 && n > 1 {
            return Err(BaselineError::DisconnectedSimilarity);
        }
        inv_sqrt[i] = if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 };
    }
    let mut l = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            l[(i, j)] -= inv_sqrt[i] * m.get(i, j) * inv_sqrt[j];
        }
    }
    Ok(l)
}

/// Eigenpair with the `index`-th smallest eigenvalue of a symmetric matrix.
///
/// Eigenvalues are recomputed as Rayleigh quotients of the returned vectors:
/// the QR sweep can hand back a correct basis with two values swapped.
pub fn symmetric_eigenpair(a: &DMatrix<f64>, index: usize) -> (f64, DVector<f64>) {
    let eig = SymmetricEigen::new(a.clone());
    let values: Vec<f64> = eig
        .eigenvectors
        .column_iter()
        .map(|x| x.dot(&(a * x)) / x.norm_squared())
        .collect();
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&x, &y| values[x].total_cmp(&values[y]).then(x.cmp(&y)));
    let k = idx[index];
    (values[k], eig.eigenvectors.column(k).into_owned())
}

fn is_connected(m: &DenseSimilarity) -> bool {
    let n = m.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for u in 0..n {
            if !seen[u] && m.get(v, u) > 0.0 {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Second eigenpair of the normalized Laplacian, with the eigenvector mapped
/// back through `D^{-1/2}`.
pub fn fiedler_vector(m: &DenseSimilarity) -> Result<(f64, DVector<f64>), BaselineError> {
    let n = m.len();
    if n == 0 {
        return Err(BaselineError::Empty);
    }
    let l = normalized_laplacian(m)?;
    if n == 1 {
        return Ok((0.0, DVector::zeros(1)));
    }
    if !is_connected(m) {
        return Err(BaselineError::DisconnectedSimilarity);
    }
    let (lambda, x) = symmetric_eigenpair(&l, 1);
    let y = DVector::from_iterator(
        n,
        (0..n).map(|i| x[i] / m.m.row(i).sum().sqrt()),
    );
    Ok((lambda, y))
}

/// Items sorted by their Fiedler-vector component (ties by id).
pub fn fiedler_order(m: &DenseSimilarity) -> Result<Permutation, BaselineError> {
    let (_, y) = fiedler_vector(m)?;
    let mut order: Vec<usize> = (0..m.len()).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b)));
    Ok(Permutation::new(order).expect("sorted ids").canonical())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn banded(truth: &Permutation) -> DenseSimilarity {
        let n = truth.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let d = truth.rank(i).abs_diff(truth.rank(j)) as f64;
                    data[i * n + j] = (-d / 2.0).exp();
                }
            }
        }
        DenseSimilarity::new(n, data).unwrap()
    }

    fn random_matrix(n: usize, rng: &mut impl Rng) -> DenseSimilarity {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let w = rng.gen_range(0.01..1.0);
                data[i * n + j] = w;
                data[j * n + i] = w;
            }
        }
        DenseSimilarity::new(n, data).unwrap()
    }

    #[test]
    fn validation() {
        assert!(matches!(DenseSimilarity::new(2, vec![0.0; 3]), Err(BaselineError::Shape { .. })));
        assert!(matches!(
            DenseSimilarity::new(2, vec![0.0, 1.0, 2.0, 0.0]),
            Err(BaselineError::Asymmetric { i: 0, j: 1 })
        ));
        assert!(matches!(
            DenseSimilarity::new(2, vec![0.0, f64::NAN, f64::NAN, 0.0]),
            Err(BaselineError::NonFinite { .. })
        ));
    }

    #[test]
    fn banded_matrices_are_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [2, 3, 10, 25] {
            let truth = Permutation::random(n, &mut rng);
            let m = banded(&truth);
            assert!(naive_mst_order(&m).unwrap().matches_up_to_reversal(&truth), "mst n={n}");
            assert!(fiedler_order(&m).unwrap().matches_up_to_reversal(&truth), "fiedler n={n}");
        }
    }

    #[test]
    fn single_item() {
        let m = DenseSimilarity::new(1, vec![0.0]).unwrap();
        assert_eq!(naive_mst_order(&m).unwrap().order(), &[0]);
        assert_eq!(fiedler_order(&m).unwrap().order(), &[0]);
    }

    #[test]
    fn disconnected_similarity_is_rejected() {
        let mut data = vec![0.0; 16];
        data[1] = 1.0;
        data[4] = 1.0;
        data[2 * 4 + 3] = 1.0;
        data[3 * 4 + 2] = 1.0;
        let m = DenseSimilarity::new(4, data).unwrap();
        assert_eq!(fiedler_order(&m), Err(BaselineError::DisconnectedSimilarity));
    }

    #[test]
    fn two_plateaus_can_invert_blocks() {
        // Two flat blocks joined by a weak bridge: the spectral order
        // separates the blocks but cannot order items inside a plateau.
        let n = 10;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    data[i * n + j] = if (i < 5) == (j < 5) { 1.0 } else { 0.01 };
                }
            }
        }
        let m = DenseSimilarity::new(n, data).unwrap();
        let p = fiedler_order(&m).unwrap();
        let first: Vec<bool> = p.order().iter().map(|&v| v < 5).collect();
        assert!(first[..5].iter().all(|&b| b == first[0]));
        assert!(!p.matches_up_to_reversal(&Permutation::identity(n)) || n < 3);
    }

    /// Decodes a Prüfer sequence into the edges of a labeled tree.
    fn prufer_tree(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
        let mut degree = vec![1; n];
        for &x in seq {
            degree[x] += 1;
        }
        let mut edges = Vec::new();
        for &x in seq {
            let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
            edges.push((leaf, x));
            degree[leaf] -= 1;
            degree[x] -= 1;
        }
        let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
        edges.push((rest[0], rest[1]));
        edges
    }

    #[test]
    fn tree_weight_matches_exhaustive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for n in [3, 5, 8] {
            let m = random_matrix(n, &mut rng);
            let mut best = f64::NEG_INFINITY;
            let total = n.pow(n as u32 - 2);
            let mut seq = vec![0; n - 2];
            for code in 0..total {
                let mut c = code;
                for s in seq.iter_mut() {
                    *s = c % n;
                    c /= n;
                }
                let w: f64 = prufer_tree(&seq, n).iter().map(|&(u, v)| m.get(u, v)).sum();
                best = best.max(w);
            }
            let got: f64 = max_spanning_tree(&m).iter().map(|e| e.2).sum();
            assert!((got - best).abs() < 1e-12, "n={n}: {got} vs {best}");
        }
    }

    #[test]
    fn laplacian_eigenpair_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for n in [2, 5, 12, 40] {
            let m = random_matrix(n, &mut rng);
            let l = normalized_laplacian(&m).unwrap();
            let (lambda, x) = symmetric_eigenpair(&l, 1);
            let r = (&l * &x - &x * lambda).norm();
            assert!(r <= 1e-8, "n={n}: residual {r:e}");
        }
    }

    #[test]
    fn spd_eigenpair_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for n in [3, 8, 30] {
            let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let a = &b * b.transpose() + DMatrix::identity(n, n) * 0.1;
            for k in 0..n {
                let (lambda, x) = symmetric_eigenpair(&a, k);
                assert!(lambda > 0.0);
                assert!((&a * &x - &x * lambda).norm() <= 1e-8);
            }
        }
    }

    proptest! {
        #[test]
        fn fiedler_ignores_positive_scaling(seed in any::<u64>(), scale in 0.01f64..100.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(9, &mut rng);
            let a = fiedler_order(&m).unwrap();
            let b = fiedler_order(&m.scaled(scale)).unwrap();
            prop_assert!(a.matches_up_to_reversal(&b));
        }

        #[test]
        fn mst_visits_every_item_once(seed in any::<u64>(), n in 1usize..30) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(n, &mut rng);
            let p = naive_mst_order(&m).unwrap();
            let mut seen = p.order().to_vec();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        }
    }
}
