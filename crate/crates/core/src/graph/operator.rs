use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::graph::GraphSpec;
use crate::scalar::Real;

/// Square sparse matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Entries with the same position are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|t| t.0 >= n || t.1 >= n) {
            return Err(Error::shape(format!("entry ({i}, {j}) outside a {n}x{n} matrix")));
        }
        triplets.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0; n + 1];
        let mut cols: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            last = Some((i, j));
            cols.push(j);
            vals.push(v);
            row_ptr[i + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseMatrix { n, row_ptr, cols, vals })
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix { n, row_ptr: (0..=n).collect(), cols: (0..n).collect(), vals: vec![1.0; n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    /// Offsets of each row into the stored entries.
    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map_or(0.0, |k| v[k])
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).collect()).collect()
    }

    /// `self · Y` for a row-major `n × cols` matrix `Y`.
    pub fn matmul<T: Real>(&self, y: &[T], cols: usize) -> Result<Vec<T>> {
        apply_pattern(self, &self.vals.iter().map(|&v| T::cst(v)).collect::<Vec<_>>(), y, cols)
    }

    pub fn scaled(&self, s: f64) -> Self {
        SparseMatrix { vals: self.vals.iter().map(|v| v * s).collect(), ..self.clone() }
    }
}

/// Multiplies the matrix with the sparsity of `pattern` and entries
/// `weights` (aligned with the stored entries) by a row-major `n × cols`
/// matrix `y`.
pub fn apply_pattern<T: Real>(pattern: &SparseMatrix, weights: &[T], y: &[T], cols: usize) -> Result<Vec<T>> {
    if y.len() != pattern.n * cols || weights.len() != pattern.nnz() {
        return Err(Error::shape(format!(
            "cannot apply a {n}x{n} operator with {} entries to {} values of width {cols}",
            weights.len(),
            y.len(),
            n = pattern.n
        )));
    }
    let mut out = Vec::with_capacity(y.len());
    let mut column = Vec::new();
    for i in 0..pattern.n {
        let r = pattern.row_ptr[i]..pattern.row_ptr[i + 1];
        let w = &weights[r.clone()];
        for c in 0..cols {
            column.clear();
            column.extend(pattern.cols[r.clone()].iter().map(|&j| y[j * cols + c]));
            out.push(T::dot(w, &column));
        }
    }
    Ok(out)
}

/// `Â = D^{-1/2}(W + I)D^{-1/2}` with `D` the degree matrix of `W + I`.
pub fn normalized_operator(g: &GraphSpec) -> Result<SparseMatrix> {
    let mut degree = vec![1.0; g.n_nodes];
    for &(i, _, w) in &g.edges {
        degree[i] += w;
    }
    let inv_sqrt: Vec<f64> = degree.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut trip: Vec<(usize, usize, f64)> = (0..g.n_nodes).map(|i| (i, i, inv_sqrt[i] * inv_sqrt[i])).collect();
    trip.extend(g.edges.iter().map(|&(i, j, w)| (i, j, w * inv_sqrt[i] * inv_sqrt[j])));
    SparseMatrix::from_triplets(g.n_nodes, trip)
}

/// `L = I − Â`.
pub fn laplacian(g: &GraphSpec) -> Result<SparseMatrix> {
    let a = normalized_operator(g)?;
    let mut trip: Vec<(usize, usize, f64)> = (0..a.n).map(|i| (i, i, 1.0)).collect();
    for i in 0..a.n {
        let (c, v) = a.row(i);
        trip.extend(c.iter().zip(v).map(|(&j, &x)| (i, j, -x)));
    }
    SparseMatrix::from_triplets(a.n, trip)
}

/// `−L Y`.
pub fn grand_l_rhs<T: Real>(l: &SparseMatrix, y: &[T], cols: usize) -> Result<Vec<T>> {
    Ok(l.matmul(y, cols)?.into_iter().map(|v| -v).collect())
}

/// Attention weights on the stored entries of `pattern` (the `W + I`
/// support): `a_ij = softmax_j((W_K y_i)·(W_Q y_j) / d_k)`.
pub fn attention_matrix<T: Real>(
    pattern: &SparseMatrix,
    y: &Tensor<T>,
    w_key: &Tensor<T>,
    w_query: &Tensor<T>,
) -> Result<Vec<T>> {
    if y.rows() != pattern.n {
        return Err(Error::shape(format!("{} feature rows for {} nodes", y.rows(), pattern.n)));
    }
    if w_key.shape() != w_query.shape() {
        return Err(Error::shape("key and query maps differ in shape"));
    }
    let keys = y.matmul(w_key)?;
    let queries = y.matmul(w_query)?;
    let inv_dk = T::cst(1.0 / w_key.cols() as f64);
    let mut weights = Vec::with_capacity(pattern.nnz());
    for i in 0..pattern.n {
        let (cols, _) = pattern.row(i);
        let logits: Vec<T> = cols.iter().map(|&j| T::dot(keys.row(i), queries.row(j)) * inv_dk).collect();
        let shift = logits.iter().map(|l| l.value()).fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<T> = logits.iter().map(|&l| (l - T::cst(shift)).exp()).collect();
        let inv = T::sum(&exps).recip();
        weights.extend(exps.into_iter().map(|e| e * inv));
    }
    Ok(weights)
}

/// `(A(Y) − I) Y`.
pub fn grand_nl_rhs<T: Real>(
    pattern: &SparseMatrix,
    y: &Tensor<T>,
    w_key: &Tensor<T>,
    w_query: &Tensor<T>,
) -> Result<Vec<T>> {
    let a = attention_matrix(pattern, y, w_key, w_query)?;
    let ay = apply_pattern(pattern, &a, y.data(), y.cols())?;
    Ok(ay.into_iter().zip(y.data()).map(|(v, &x)| v - x).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Split;

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> GraphSpec {
        GraphSpec::new(n, edges, Tensor::zeros(n, 1), vec![0; n], vec![Some(Split::Train); n]).unwrap()
    }

    #[test]
    fn isolated_and_pair() {
        let one = graph(1, &[]);
        assert_eq!(normalized_operator(&one).unwrap().to_dense(), vec![vec![1.0]]);
        assert_eq!(laplacian(&one).unwrap().to_dense(), vec![vec![0.0]]);

        let pair = graph(2, &[(0, 1, 1.0)]);
        let a = normalized_operator(&pair).unwrap().to_dense();
        for row in &a {
            for &v in row {
                assert!((v - 0.5).abs() < 1e-15);
            }
        }
        let l = laplacian(&pair).unwrap();
        let out = grand_l_rhs(&l, &[1.0, 0.0], 1).unwrap();
        assert!((out[0] + 0.5).abs() < 1e-15 && (out[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degree_vector_is_fixed() {
        let g = graph(4, &[(0, 1, 1.0), (1, 2, 2.0), (1, 3, 0.5)]);
        let a = normalized_operator(&g).unwrap();
        let mut d = [1.0; 4];
        for &(i, _, w) in &g.edges {
            d[i] += w;
        }
        let v: Vec<f64> = d.iter().map(|x| x.sqrt()).collect();
        let av = a.matmul(&v, 1).unwrap();
        for (x, y) in av.iter().zip(&v) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn uniform_attention_on_pair() {
        let g = graph(2, &[(0, 1, 1.0)]);
        let pattern = normalized_operator(&g).unwrap();
        let y = Tensor::matrix(2, 1, vec![1.0, 0.0]).unwrap();
        let z = Tensor::zeros(1, 1);
        let a = attention_matrix(&pattern, &y, &z, &z).unwrap();
        assert_eq!(a, vec![0.5; 4]);
        let out = grand_nl_rhs(&pattern, &y, &z, &z).unwrap();
        assert_eq!(out, vec![-0.5, 0.5]);
        let single = normalized_operator(&graph(1, &[])).unwrap();
        let a1 = attention_matrix(&single, &Tensor::matrix(1, 1, vec![3.0]).unwrap(), &z, &z).unwrap();
        assert_eq!(a1, vec![1.0]);
    }

    #[test]
    fn triplets_merge_and_validate() {
        let m = SparseMatrix::from_triplets(2, vec![(0, 1, 1.0), (0, 1, 2.0), (1, 0, 1.0)]).unwrap();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.nnz(), 2);
        assert!(SparseMatrix::from_triplets(2, vec![(2, 0, 1.0)]).is_err());
        assert_eq!(SparseMatrix::identity(3).matmul(&[1.0, 2.0, 3.0], 1).unwrap(), vec![1.0, 2.0, 3.0]);
    }
}
