//! Dense and sparse kernels shared by the assembly and solve paths.
//!
//! Sparse matrices use a symmetric CSR layout storing the full pattern, so a
//! row walk reaches every neighbor of a DOF. Constrained solves go through a
//! banded Cholesky factorization: with lexicographic DOF ordering on a
//! structured grid the free-free block has a narrow band, and a direct
//! factorization is immune to the ill conditioning that high-contrast
//! coefficients inflict on iterative methods. Everything here runs in a fixed
//! order, independent of thread count.

use nalgebra::{Cholesky, DMatrix, DVector};
use nalgebra::linalg::SymmetricEigen;

use crate::{Error, Real, Result};

/// Which bilinear form a symmetric sparse matrix discretizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormKind {
    /// Elastic energy form.
    Stiffness,
    /// Weighted L2 form used by the auxiliary spectral problems.
    WeightedMass,
    /// Plain L2 form.
    Mass,
}

impl FormKind {
    /// Short name for error messages.
    pub fn label(self) -> &'static str {
        match self {
            FormKind::Stiffness => "energy",
            FormKind::WeightedMass => "weighted mass",
            FormKind::Mass => "mass",
        }
    }
}

/// Symmetric sparse matrix in CSR layout (full pattern, both triangles).
#[derive(Clone, Debug)]
pub struct SymmetricCsr<T> {
    dimension: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
    kind: FormKind,
}

impl<T: Real> SymmetricCsr<T> {
    /// Builds from (row, col, value) triplets, merging duplicates by
    /// addition. Merge order follows triplet order, so the result is a pure
    /// function of the triplet sequence.
    pub fn from_triplets(dimension: usize, kind: FormKind, triplets: &[(usize, usize, T)]) -> Self {
        let mut counts = vec![0usize; dimension + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for i in 0..dimension {
            counts[i + 1] += counts[i];
        }
        let mut col_idx = vec![0usize; triplets.len()];
        let mut values = vec![T::zero(); triplets.len()];
        let mut cursor = counts.clone();
        for &(r, c, v) in triplets {
            let p = cursor[r];
            col_idx[p] = c;
            values[p] = v;
            cursor[r] += 1;
        }
        // Merge duplicates row by row. The stable sort keeps insertion order
        // within equal columns, so the additions below happen in triplet
        // order regardless of how the triplets were produced upstream.
        let mut out_ptr = vec![0usize; dimension + 1];
        let mut out_col = Vec::with_capacity(triplets.len());
        let mut out_val = Vec::with_capacity(triplets.len());
        let mut scratch: Vec<(usize, usize)> = Vec::new();
        for r in 0..dimension {
            let (lo, hi) = (counts[r], counts[r + 1]);
            scratch.clear();
            scratch.extend((lo..hi).map(|p| (col_idx[p], p)));
            scratch.sort_by_key(|&(c, _)| c);
            let mut i = 0;
            while i < scratch.len() {
                let c = scratch[i].0;
                let mut v = values[scratch[i].1];
                let mut j = i + 1;
                while j < scratch.len() && scratch[j].0 == c {
                    v += values[scratch[j].1];
                    j += 1;
                }
                out_col.push(c);
                out_val.push(v);
                i = j;
            }
            out_ptr[r + 1] = out_col.len();
        }
        SymmetricCsr {
            dimension,
            row_ptr: out_ptr,
            col_idx: out_col,
            values: out_val,
            kind,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn kind(&self) -> FormKind {
        self.kind
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Iterates the stored entries of one row as (column, value).
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col_idx[lo..hi]
            .iter()
            .zip(&self.values[lo..hi])
            .map(|(&c, &v)| (c, v))
    }

    pub fn entry(&self, r: usize, c: usize) -> T {
        self.row(r)
            .find(|&(cc, _)| cc == c)
            .map_or_else(T::zero, |(_, v)| v)
    }

    pub fn matvec(&self, x: &DVector<T>) -> DVector<T> {
        debug_assert_eq!(x.len(), self.dimension);
        let mut y = DVector::zeros(self.dimension);
        for r in 0..self.dimension {
            let mut s = T::zero();
            for (c, v) in self.row(r) {
                s += v * x[c];
            }
            y[r] = s;
        }
        y
    }

    /// u' M v without forming an intermediate of matrix size.
    pub fn quad_form(&self, u: &DVector<T>, v: &DVector<T>) -> T {
        debug_assert_eq!(u.len(), self.dimension);
        debug_assert_eq!(v.len(), self.dimension);
        let mut s = T::zero();
        for r in 0..self.dimension {
            let mut row_sum = T::zero();
            for (c, val) in self.row(r) {
                row_sum += val * v[c];
            }
            s += u[r] * row_sum;
        }
        s
    }

    /// Largest |entry| mismatch against the transpose. Zero for an exactly
    /// symmetric matrix; assembly tests pin this near machine precision.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for r in 0..self.dimension {
            for (c, v) in self.row(r) {
                let d = (v - self.entry(c, r)).abs();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    /// Max absolute row sum. Bounds the spectral norm from above for a
    /// symmetric matrix, which is all the residual checks need.
    pub fn inf_norm(&self) -> T {
        let mut worst = T::zero();
        for r in 0..self.dimension {
            let mut sum = T::zero();
            for (_, v) in self.row(r) {
                sum += v.abs();
            }
            if sum > worst {
                worst = sum;
            }
        }
        worst
    }

    /// Largest |diagonal entry|, a cheap magnitude scale for tolerances.
    pub fn max_abs_diag(&self) -> T {
        let mut worst = T::zero();
        for r in 0..self.dimension {
            let d = self.entry(r, r).abs();
            if d > worst {
                worst = d;
            }
        }
        worst
    }

    /// Dense copy, for small oracles only.
    pub fn to_dense(&self) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.dimension, self.dimension);
        for r in 0..self.dimension {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }
}

/// Copies `v` at the given indices into a packed vector.
pub fn gather<T: Real>(v: &DVector<T>, idx: &[usize]) -> DVector<T> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

/// Adds the packed values back at the given indices.
pub fn scatter_add<T: Real>(target: &mut DVector<T>, idx: &[usize], packed: &DVector<T>) {
    assert_eq!(idx.len(), packed.len());
    for (k, &i) in idx.iter().enumerate() {
        target[i] += packed[k];
    }
}

/// Cholesky factorization of an SPD matrix stored as a lower band.
///
/// Entry (i, j) with `i - bandwidth <= j <= i` lives at
/// `band[i * (bandwidth + 1) + bandwidth + j - i]`.
pub struct BandedCholesky<T> {
    n: usize,
    bandwidth: usize,
    band: Vec<T>,
}

impl<T: Real> BandedCholesky<T> {
    /// Factors a matrix given in lower-band storage. The band is consumed
    /// and overwritten with the Cholesky factor.
    pub fn factor(n: usize, bandwidth: usize, mut band: Vec<T>) -> Result<Self> {
        let stride = bandwidth + 1;
        assert_eq!(band.len(), n * stride);
        for i in 0..n {
            let jmin = i.saturating_sub(bandwidth);
            for j in jmin..=i {
                let mut s = band[i * stride + bandwidth + j - i];
                let kmin = jmin.max(j.saturating_sub(bandwidth));
                for k in kmin..j {
                    s -= band[i * stride + bandwidth + k - i] * band[j * stride + bandwidth + k - j];
                }
                if i == j {
                    if s <= T::zero() {
                        return Err(Error::NotSpd(format!(
                            "banded factorization broke down at pivot {i} of {n}"
                        )));
                    }
                    band[i * stride + bandwidth] = s.sqrt();
                } else {
                    band[i * stride + bandwidth + j - i] = s / band[j * stride + bandwidth];
                }
            }
        }
        Ok(BandedCholesky { n, bandwidth, band })
    }

    /// Extracts the subblock of `a` over the ordered DOF set `sub` and
    /// factors it. `sub` must be sorted ascending; on a structured grid that
    /// keeps the band narrow.
    pub fn factor_csr_subset(a: &SymmetricCsr<T>, sub: &[usize]) -> Result<Self> {
        let mut pos = vec![usize::MAX; a.dimension()];
        for (p, &gd) in sub.iter().enumerate() {
            debug_assert!(pos[gd] == usize::MAX, "duplicate DOF in subset");
            pos[gd] = p;
        }
        let mut bandwidth = 0usize;
        for (p, &gd) in sub.iter().enumerate() {
            for (c, _) in a.row(gd) {
                let q = pos[c];
                if q != usize::MAX {
                    bandwidth = bandwidth.max(p.abs_diff(q));
                }
            }
        }
        let stride = bandwidth + 1;
        let mut band = vec![T::zero(); sub.len() * stride];
        for (p, &gd) in sub.iter().enumerate() {
            for (c, v) in a.row(gd) {
                let q = pos[c];
                if q != usize::MAX && q <= p {
                    band[p * stride + bandwidth + q - p] = v;
                }
            }
        }
        Self::factor(sub.len(), bandwidth, band)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn solve_in_place(&self, x: &mut DVector<T>) {
        debug_assert_eq!(x.len(), self.n);
        let (n, bw, stride) = (self.n, self.bandwidth, self.bandwidth + 1);
        for i in 0..n {
            let jmin = i.saturating_sub(bw);
            let mut s = x[i];
            for j in jmin..i {
                s -= self.band[i * stride + bw + j - i] * x[j];
            }
            x[i] = s / self.band[i * stride + bw];
        }
        for i in (0..n).rev() {
            let jmax = (i + bw).min(n.saturating_sub(1));
            let mut s = x[i];
            for j in (i + 1)..=jmax {
                s -= self.band[j * stride + bw + i - j] * x[j];
            }
            x[i] = s / self.band[i * stride + bw];
        }
    }

    pub fn solve(&self, b: &DVector<T>) -> DVector<T> {
        let mut x = b.clone();
        self.solve_in_place(&mut x);
        x
    }
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted
/// ascending and eigenvector columns permuted to match.
pub fn sym_eig_ascending<T: Real>(m: DMatrix<T>) -> (DVector<T>, DMatrix<T>) {
    let n = m.nrows();
    let se = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let values = DVector::from_fn(n, |i, _| se.eigenvalues[order[i]]);
    let vectors = DMatrix::from_fn(n, n, |i, j| se.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Solves the symmetric pencil A x = theta S x with S positive definite.
///
/// Reduction: S = L L', C = inv(L) A inv(L'), then a symmetric
/// eigendecomposition of C; eigenvectors are mapped back through inv(L'),
/// which makes them S-orthonormal. Eigenvalues come back ascending.
pub fn generalized_sym_eig<T: Real>(
    a: &DMatrix<T>,
    s: &DMatrix<T>,
) -> Result<(DVector<T>, DMatrix<T>)> {
    let chol = Cholesky::new(s.clone())
        .ok_or_else(|| Error::NotSpd("weighted mass form in spectral problem".into()))?;
    let l = chol.l();
    let b = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::NotSpd("singular triangular factor".into()))?;
    let c_t = l
        .solve_lower_triangular(&b.transpose())
        .ok_or_else(|| Error::NotSpd("singular triangular factor".into()))?;
    let c = (&c_t + c_t.transpose()) * T::of(0.5);
    let (values, y) = sym_eig_ascending(c);
    let vectors = l
        .transpose()
        .solve_upper_triangular(&y)
        .ok_or_else(|| Error::NotSpd("singular triangular factor".into()))?;
    Ok((values, vectors))
}
