//! SPD and correlation matrix types, Cholesky machinery, and the bijective
//! constrained/unconstrained transforms with their log-Jacobians.
//!
//! An [`SPDMatrix`] stores only its lower Cholesky factor; the factor is the
//! source of truth, which guarantees positive definiteness by construction
//! and makes log-determinants O(d). Transforms are written generically over
//! [`Real`] so the same code serves plain evaluation and dual-number
//! differentiation.
//!
//! Packed storage convention: lower triangles are stored row-wise, entry
//! `(i, j)` with `j <= i` at index `i*(i+1)/2 + j`. Unconstrained SPD
//! vectors use the same order with log-transformed diagonal entries;
//! unconstrained correlation vectors enumerate the strict lower triangle
//! row-wise.

use crate::autodiff::Real;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub(crate) const LN_2: f64 = std::f64::consts::LN_2;

/// Index into a packed row-wise lower triangle, `j <= i`.
#[inline]
pub(crate) fn tri(i: usize, j: usize) -> usize {
    debug_assert!(j <= i);
    i * (i + 1) / 2 + j
}

/// Number of entries in a packed lower triangle including the diagonal.
#[inline]
pub fn tri_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Number of strict lower-triangle entries.
#[inline]
pub fn strict_tri_len(d: usize) -> usize {
    d * (d - 1) / 2
}

/// Reporting order for correlation pairs: (0,1), (0,2), .., (0,d-1), (1,2), ..
/// 0-based; printed 1-based as `rho_1_2` etc.
pub fn pair_order(d: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(strict_tri_len(d));
    for i in 0..d {
        for j in (i + 1)..d {
            pairs.push((i, j));
        }
    }
    pairs
}

/// 17-significant-digit decimal rendering used by the matrix file formats.
pub fn fmt_g17(x: f64) -> String {
    format!("{:.16e}", x)
}

// ---------------------------------------------------------------------------
// dense symmetric helper type
// ---------------------------------------------------------------------------

/// Plain dense symmetric matrix (row-major), used for sums of outer products
/// and other quantities that need not be positive definite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMat {
    dim: usize,
    data: Vec<f64>,
}

impl SymMat {
    pub fn zeros(dim: usize) -> Self {
        SymMat {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn from_dense(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Domain(format!(
                "dense data length {} does not match dim {}",
                data.len(),
                dim
            )));
        }
        Ok(SymMat { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn scale(&self, c: f64) -> SymMat {
        SymMat {
            dim: self.dim,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Cholesky
// ---------------------------------------------------------------------------

/// Lower Cholesky factor of a symmetric matrix given as a dense row-major
/// slice. The input is checked for symmetry at 1e-10 relative tolerance and
/// symmetrized by averaging before factorization.
pub fn cholesky(m: &[f64], dim: usize) -> Result<Vec<f64>> {
    if m.len() != dim * dim {
        return Err(Error::Domain(format!(
            "matrix slice length {} does not match dim {}",
            m.len(),
            dim
        )));
    }
    let max_abs = m.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    if !max_abs.is_finite() {
        return Err(Error::NotPositiveDefinite("non-finite entries".into()));
    }
    let tol = 1e-10 * (1.0 + max_abs);
    for i in 0..dim {
        for j in 0..i {
            if (m[i * dim + j] - m[j * dim + i]).abs() > tol {
                return Err(Error::Domain(format!(
                    "matrix not symmetric at ({i},{j}): {} vs {}",
                    m[i * dim + j],
                    m[j * dim + i]
                )));
            }
        }
    }
    // symmetrize to absorb accumulation-order noise, then factor
    let mut a = vec![0.0; tri_len(dim)];
    for i in 0..dim {
        for j in 0..=i {
            a[tri(i, j)] = 0.5 * (m[i * dim + j] + m[j * dim + i]);
        }
    }
    cholesky_packed(&a, dim)
}

/// Cholesky of a symmetrized packed lower triangle.
pub(crate) fn cholesky_packed(a: &[f64], dim: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; tri_len(dim)];
    for i in 0..dim {
        for j in 0..=i {
            let mut s = a[tri(i, j)];
            for k in 0..j {
                s -= l[tri(i, k)] * l[tri(j, k)];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(Error::NotPositiveDefinite(format!(
                        "pivot {s} at row {i}"
                    )));
                }
                l[tri(i, i)] = s.sqrt();
            } else {
                l[tri(i, j)] = s / l[tri(j, j)];
            }
        }
    }
    Ok(l)
}

/// Inverse of a packed lower-triangular factor, generic over the scalar.
pub(crate) fn tri_inverse_generic<S: Real>(l: &[S], dim: usize) -> Vec<S> {
    let mut k = vec![S::constant(0.0); tri_len(dim)];
    for j in 0..dim {
        k[tri(j, j)] = S::constant(1.0) / l[tri(j, j)].clone();
        for i in (j + 1)..dim {
            let mut s = S::constant(0.0);
            for m in j..i {
                s = s + l[tri(i, m)].clone() * k[tri(m, j)].clone();
            }
            k[tri(i, j)] = -(s / l[tri(i, i)].clone());
        }
    }
    k
}

/// Gram matrix KᵀK of a packed lower-triangular K, returned dense row-major.
/// For K = L⁻¹ this is the inverse of L·Lᵀ.
pub(crate) fn gram_of_tri_generic<S: Real>(k: &[S], dim: usize) -> Vec<S> {
    let mut g = vec![S::constant(0.0); dim * dim];
    for a in 0..dim {
        for b in 0..=a {
            // (KᵀK)_{ab} = Σ_i K_{ia} K_{ib}, entries vanish for i < max(a,b)
            let mut s = S::constant(0.0);
            for i in a..dim {
                s = s + k[tri(i, a)].clone() * k[tri(i, b)].clone();
            }
            g[a * dim + b] = s.clone();
            g[b * dim + a] = s;
        }
    }
    g
}

// ---------------------------------------------------------------------------
// SPDMatrix
// ---------------------------------------------------------------------------

/// Symmetric positive-definite matrix stored via its lower Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SPDMatrix {
    dim: usize,
    chol: Vec<f64>, // packed row-wise lower triangle, strictly positive diagonal
}

impl SPDMatrix {
    /// Builds from a packed lower Cholesky factor, validating the invariants.
    pub fn from_chol_packed(dim: usize, chol: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        if chol.len() != tri_len(dim) {
            return Err(Error::Domain(format!(
                "packed factor length {} does not match dim {}",
                chol.len(),
                dim
            )));
        }
        if chol.iter().any(|x| !x.is_finite()) {
            return Err(Error::NotPositiveDefinite("non-finite factor entry".into()));
        }
        for i in 0..dim {
            if chol[tri(i, i)] <= 0.0 {
                return Err(Error::NotPositiveDefinite(format!(
                    "factor diagonal {} at row {i}",
                    chol[tri(i, i)]
                )));
            }
        }
        Ok(SPDMatrix { dim, chol })
    }

    /// Factors a dense symmetric matrix.
    pub fn from_dense(m: &[f64], dim: usize) -> Result<Self> {
        let chol = cholesky(m, dim)?;
        SPDMatrix::from_chol_packed(dim, chol)
    }

    pub fn identity(dim: usize) -> Self {
        let mut chol = vec![0.0; tri_len(dim)];
        for i in 0..dim {
            chol[tri(i, i)] = 1.0;
        }
        SPDMatrix { dim, chol }
    }

    /// Diagonal matrix with the given strictly positive diagonal.
    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let dim = diag.len();
        let mut chol = vec![0.0; tri_len(dim)];
        for (i, &v) in diag.iter().enumerate() {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::NotPositiveDefinite(format!(
                    "diagonal entry {v} at index {i}"
                )));
            }
            chol[tri(i, i)] = v.sqrt();
        }
        SPDMatrix::from_chol_packed(dim, chol)
    }

    /// `c * I`.
    pub fn scaled_identity(dim: usize, c: f64) -> Result<Self> {
        SPDMatrix::from_diagonal(&vec![c; dim])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn chol_packed(&self) -> &[f64] {
        &self.chol
    }

    /// Σ_ij reconstructed from the factor.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i >= j { (i, j) } else { (j, i) };
        let mut s = 0.0;
        for k in 0..=b {
            s += self.chol[tri(a, k)] * self.chol[tri(b, k)];
        }
        s
    }

    /// Dense row-major Σ = L·Lᵀ.
    pub fn to_dense(&self) -> Vec<f64> {
        let d = self.dim;
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let v = self.entry(i, j);
                m[i * d + j] = v;
                m[j * d + i] = v;
            }
        }
        m
    }

    /// log |Σ| = 2 Σ log L_ii.
    pub fn log_det(&self) -> f64 {
        (0..self.dim).map(|i| self.chol[tri(i, i)].ln()).sum::<f64>() * 2.0
    }

    /// Matrix inverse, returned as a new SPD matrix.
    pub fn inverse(&self) -> SPDMatrix {
        let k = tri_inverse_generic(&self.chol, self.dim);
        let g = gram_of_tri_generic(&k, self.dim);
        // KᵀK is symmetric positive definite by construction
        let chol = cholesky_packed(&pack_lower(&g, self.dim), self.dim)
            .expect("inverse of SPD matrix is SPD");
        SPDMatrix {
            dim: self.dim,
            chol,
        }
    }

    /// Splits Σ into standard deviations and a correlation matrix.
    pub fn decompose(&self) -> CovDecomposition {
        let d = self.dim;
        let sigma: Vec<f64> = (0..d).map(|i| self.entry(i, i).sqrt()).collect();
        // scale rows of L by 1/σ_i: R = D⁻¹ L Lᵀ D⁻¹ with unit row norms
        let mut w = self.chol.clone();
        for i in 0..d {
            for j in 0..=i {
                w[tri(i, j)] /= sigma[i];
            }
        }
        let corr = CorrelationMatrix::from_unit_row_chol(d, w);
        CovDecomposition { sigma, corr }
    }

    /// Quadratic form xᵀ Σ⁻¹ x via one forward triangular solve.
    pub fn inv_quad_form(&self, x: &[f64]) -> f64 {
        let d = self.dim;
        let mut y = x.to_vec();
        for i in 0..d {
            let mut s = y[i];
            for k in 0..i {
                s -= self.chol[tri(i, k)] * y[k];
            }
            y[i] = s / self.chol[tri(i, i)];
        }
        y.iter().map(|v| v * v).sum()
    }

    /// Row-major CSV block of the dense matrix, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let d = self.dim;
        let m = self.to_dense();
        let mut out = String::new();
        for i in 0..d {
            let row: Vec<String> = (0..d).map(|j| fmt_g17(m[i * d + j])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses a row-major CSV block as written by [`SPDMatrix::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<f64>().map_err(|_| Error::Parse {
                        line: lineno + 1,
                        msg: format!("bad number {tok:?}"),
                    })
                })
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        let d = rows.len();
        if d == 0 {
            return Err(Error::Parse {
                line: 0,
                msg: "empty matrix block".into(),
            });
        }
        let mut m = vec![0.0; d * d];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("row has {} entries, expected {d}", row.len()),
                });
            }
            m[i * d..(i + 1) * d].copy_from_slice(row);
        }
        SPDMatrix::from_dense(&m, d)
    }
}

/// JSON form `{dim, lower_chol: [...]}` — the factor is the serialized truth.
impl Serialize for SPDMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("SPDMatrix", 2)?;
        st.serialize_field("dim", &self.dim)?;
        st.serialize_field("lower_chol", &self.chol)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for SPDMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            dim: usize,
            lower_chol: Vec<f64>,
        }
        let raw = Raw::deserialize(d)?;
        SPDMatrix::from_chol_packed(raw.dim, raw.lower_chol).map_err(serde::de::Error::custom)
    }
}

fn pack_lower(dense: &[f64], dim: usize) -> Vec<f64> {
    let mut a = vec![0.0; tri_len(dim)];
    for i in 0..dim {
        for j in 0..=i {
            a[tri(i, j)] = dense[i * dim + j];
        }
    }
    a
}

// ---------------------------------------------------------------------------
// CorrelationMatrix and CovDecomposition
// ---------------------------------------------------------------------------

/// Correlation matrix: unit diagonal, symmetric, positive definite, all
/// off-diagonals strictly inside (-1, 1). Stores the dense entries together
/// with the lower Cholesky factor established at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    dim: usize,
    entries: Vec<f64>, // dense row-major
    chol: Vec<f64>,    // packed lower factor with unit row norms
}

impl CorrelationMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        let mut chol = vec![0.0; tri_len(dim)];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
            chol[tri(i, i)] = 1.0;
        }
        CorrelationMatrix { dim, entries, chol }
    }

    /// Validates and stores a dense correlation matrix.
    pub fn from_dense(m: &[f64], dim: usize) -> Result<Self> {
        if m.len() != dim * dim {
            return Err(Error::Domain(format!(
                "dense data length {} does not match dim {}",
                m.len(),
                dim
            )));
        }
        for i in 0..dim {
            if m[i * dim + i] != 1.0 {
                return Err(Error::Domain(format!(
                    "diagonal entry {} at row {i} must be exactly 1",
                    m[i * dim + i]
                )));
            }
            for j in 0..i {
                let v = m[i * dim + j];
                if (v - m[j * dim + i]).abs() > 1e-12 {
                    return Err(Error::Domain(format!("asymmetric at ({i},{j})")));
                }
                if !(v > -1.0 && v < 1.0) {
                    return Err(Error::Domain(format!(
                        "off-diagonal {v} at ({i},{j}) outside (-1, 1)"
                    )));
                }
            }
        }
        let chol = cholesky(m, dim)?;
        let mut entries = m.to_vec();
        // store exactly symmetric entries
        for i in 0..dim {
            for j in 0..i {
                let v = 0.5 * (entries[i * dim + j] + entries[j * dim + i]);
                entries[i * dim + j] = v;
                entries[j * dim + i] = v;
            }
        }
        Ok(CorrelationMatrix { dim, entries, chol })
    }

    /// Builds R = W·Wᵀ from a factor with unit row norms (transform output).
    pub(crate) fn from_unit_row_chol(dim: usize, w: Vec<f64>) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
            for j in 0..i {
                let mut s = 0.0;
                for k in 0..=j {
                    s += w[tri(i, k)] * w[tri(j, k)];
                }
                entries[i * dim + j] = s;
                entries[j * dim + i] = s;
            }
        }
        CorrelationMatrix {
            dim,
            entries,
            chol: w,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn to_dense(&self) -> Vec<f64> {
        self.entries.clone()
    }

    pub fn chol_packed(&self) -> &[f64] {
        &self.chol
    }

    /// Off-diagonal entries in reporting order (see [`pair_order`]).
    pub fn offdiag_vector(&self) -> Vec<f64> {
        pair_order(self.dim)
            .into_iter()
            .map(|(i, j)| self.entry(i, j))
            .collect()
    }
}

/// A covariance split into standard deviations and a correlation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovDecomposition {
    pub sigma: Vec<f64>,
    pub corr: CorrelationMatrix,
}

impl CovDecomposition {
    pub fn new(sigma: Vec<f64>, corr: CorrelationMatrix) -> Result<Self> {
        if sigma.len() != corr.dim() {
            return Err(Error::Domain(format!(
                "sigma length {} does not match correlation dim {}",
                sigma.len(),
                corr.dim()
            )));
        }
        if sigma.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::Domain("standard deviations must be positive and finite".into()));
        }
        Ok(CovDecomposition { sigma, corr })
    }

    pub fn dim(&self) -> usize {
        self.sigma.len()
    }
}

/// Σ = diag(σ)·R·diag(σ); the factor is diag(σ)·W so no refactorization is
/// needed.
pub fn compose(dec: &CovDecomposition) -> Result<SPDMatrix> {
    let d = dec.dim();
    let mut chol = dec.corr.chol_packed().to_vec();
    for i in 0..d {
        for j in 0..=i {
            chol[tri(i, j)] *= dec.sigma[i];
        }
    }
    SPDMatrix::from_chol_packed(d, chol)
}

/// Splits Σ into (σ, R). Inverse of [`compose`] up to floating point.
pub fn decompose(sigma_mat: &SPDMatrix) -> CovDecomposition {
    sigma_mat.decompose()
}

// ---------------------------------------------------------------------------
// unconstrained transforms
// ---------------------------------------------------------------------------

/// Unconstrained vector -> packed lower Cholesky factor with exponentiated
/// diagonal, plus the log-Jacobian of the full map from the vector to the
/// independent entries of Σ = L·Lᵀ.
pub(crate) fn spd_constrain_generic<S: Real>(v: &[S], d: usize) -> (Vec<S>, S) {
    debug_assert_eq!(v.len(), tri_len(d));
    let mut chol = Vec::with_capacity(tri_len(d));
    let mut log_jac = S::constant(d as f64 * LN_2);
    let mut idx = 0;
    for i in 0..d {
        for j in 0..=i {
            let x = v[idx].clone();
            idx += 1;
            if j == i {
                // d|Σ|-entries/d L contributes L_ii^{d-i+1}, exp adds one more
                log_jac = log_jac + x.clone() * ((d - i + 1) as f64);
                chol.push(x.exp());
            } else {
                chol.push(x);
            }
        }
    }
    (chol, log_jac)
}

/// Total bijection from R^{d(d+1)/2} onto SPD matrices.
pub fn spd_constrain(v: &[f64], d: usize) -> Result<(SPDMatrix, f64)> {
    if v.len() != tri_len(d) {
        return Err(Error::LayoutMismatch(format!(
            "unconstrained SPD vector length {} != d(d+1)/2 = {}",
            v.len(),
            tri_len(d)
        )));
    }
    let (chol, log_jac) = spd_constrain_generic(v, d);
    Ok((SPDMatrix::from_chol_packed(d, chol)?, log_jac))
}

/// Inverse of [`spd_constrain`].
pub fn spd_unconstrain(m: &SPDMatrix) -> Vec<f64> {
    let d = m.dim();
    let l = m.chol_packed();
    let mut v = Vec::with_capacity(tri_len(d));
    for i in 0..d {
        for j in 0..=i {
            if i == j {
                v.push(l[tri(i, i)].ln());
            } else {
                v.push(l[tri(i, j)]);
            }
        }
    }
    v
}

/// Unconstrained vector -> packed unit-row-norm Cholesky factor of a
/// correlation matrix via canonical partial correlations, plus the
/// log-Jacobian of the map from the vector to the strict lower entries of R.
pub(crate) fn corr_constrain_generic<S: Real>(v: &[S], d: usize) -> (Vec<S>, S) {
    debug_assert_eq!(v.len(), strict_tri_len(d));
    let mut w = vec![S::constant(0.0); tri_len(d)];
    let mut log_jac = S::constant(0.0);
    w[tri(0, 0)] = S::constant(1.0);
    let mut idx = 0;
    for i in 1..d {
        // running Σ_{k<j} log(1 - z_{ik}²)
        let mut sum_log = S::constant(0.0);
        for j in 0..i {
            let z = v[idx].clone().tanh();
            idx += 1;
            let one_m_z2 = -(z.clone() * z.clone()) + 1.0;
            let log_one_m_z2 = one_m_z2.ln();
            // tanh Jacobian plus ∂w_ij/∂z_ij = Π_{k<j} sqrt(1 - z_ik²)
            log_jac = log_jac + log_one_m_z2.clone() + sum_log.clone() * 0.5;
            w[tri(i, j)] = z * (sum_log.clone() * 0.5).exp();
            sum_log = sum_log + log_one_m_z2;
        }
        w[tri(i, i)] = (sum_log * 0.5).exp();
    }
    // ∂R_ij/∂w_ij = w_jj, once for each row below j
    for j in 0..d {
        if d - 1 - j > 0 {
            log_jac = log_jac + w[tri(j, j)].clone().ln() * ((d - 1 - j) as f64);
        }
    }
    (w, log_jac)
}

/// Total bijection from R^{d(d-1)/2} onto correlation matrices.
pub fn corr_constrain(v: &[f64], d: usize) -> Result<(CorrelationMatrix, f64)> {
    if v.len() != strict_tri_len(d) {
        return Err(Error::LayoutMismatch(format!(
            "unconstrained correlation vector length {} != d(d-1)/2 = {}",
            v.len(),
            strict_tri_len(d)
        )));
    }
    let (w, log_jac) = corr_constrain_generic(v, d);
    Ok((CorrelationMatrix::from_unit_row_chol(d, w), log_jac))
}

/// Inverse of [`corr_constrain`].
pub fn corr_unconstrain(r: &CorrelationMatrix) -> Vec<f64> {
    let d = r.dim();
    let w = r.chol_packed();
    let mut v = Vec::with_capacity(strict_tri_len(d));
    for i in 1..d {
        let mut remaining = 1.0; // Π_{k<j} (1 - z_ik²)
        for j in 0..i {
            let z = w[tri(i, j)] / remaining.sqrt();
            v.push(z.atanh());
            remaining *= 1.0 - z * z;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn cholesky_diagonal_case() {
        let l = cholesky(&[4.0, 0.0, 0.0, 9.0], 2).unwrap();
        assert_eq!(l, vec![2.0, 0.0, 3.0]);
    }

    #[test]
    fn cholesky_identity_case() {
        let m = SPDMatrix::identity(3);
        let l = cholesky(&m.to_dense(), 3).unwrap();
        assert_eq!(l, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn cholesky_reconstruction_round_trip() {
        let m = vec![2.0, 1.0, 1.0, 2.0];
        let l = cholesky(&m, 2).unwrap();
        let s = SPDMatrix::from_chol_packed(2, l).unwrap();
        let back = s.to_dense();
        for (a, b) in m.iter().zip(back.iter()) {
            assert_close(*a, *b, 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let err = cholesky(&[1.0, 2.0, 2.0, 1.0], 2).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite(_)));
    }

    #[test]
    fn cholesky_rejects_asymmetric() {
        let err = cholesky(&[1.0, 0.5, 0.4, 1.0], 2).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn decompose_identity() {
        let dec = SPDMatrix::identity(2).decompose();
        assert_eq!(dec.sigma, vec![1.0, 1.0]);
        assert_eq!(dec.corr.entry(0, 1), 0.0);
    }

    #[test]
    fn decompose_forced_arithmetic() {
        let m = SPDMatrix::from_dense(&[4.0, 3.0, 3.0, 9.0], 2).unwrap();
        let dec = m.decompose();
        assert_close(dec.sigma[0], 2.0, 1e-15);
        assert_close(dec.sigma[1], 3.0, 1e-15);
        assert_close(dec.corr.entry(0, 1), 0.5, 1e-15);
    }

    #[test]
    fn compose_identity_and_table_cells() {
        let dec = CovDecomposition::new(vec![1.0, 1.0], CorrelationMatrix::identity(2)).unwrap();
        let m = compose(&dec).unwrap();
        for (a, b) in m.to_dense().iter().zip([1.0, 0.0, 0.0, 1.0].iter()) {
            assert_close(*a, *b, 1e-15);
        }

        let mut r = vec![1.0, 0.5, 0.5, 1.0];
        let corr = CorrelationMatrix::from_dense(&r, 2).unwrap();
        let dec = CovDecomposition::new(vec![2.0, 3.0], corr).unwrap();
        let m = compose(&dec).unwrap();
        assert_close(m.entry(0, 0), 4.0, 1e-12);
        assert_close(m.entry(0, 1), 3.0, 1e-12);
        assert_close(m.entry(1, 1), 9.0, 1e-12);

        r = vec![1.0, 0.99, 0.99, 1.0];
        let corr = CorrelationMatrix::from_dense(&r, 2).unwrap();
        let dec = CovDecomposition::new(vec![0.01, 0.01], corr).unwrap();
        let m = compose(&dec).unwrap();
        assert_close(m.entry(0, 1), 9.9e-5, 1e-18);
    }

    #[test]
    fn spd_constrain_zero_vector_is_identity() {
        let (m, _) = spd_constrain(&[0.0, 0.0, 0.0], 2).unwrap();
        for (a, b) in m.to_dense().iter().zip([1.0, 0.0, 0.0, 1.0].iter()) {
            assert_close(*a, *b, 1e-15);
        }
    }

    #[test]
    fn corr_constrain_zero_vector_is_identity() {
        let (r, _) = corr_constrain(&[0.0, 0.0, 0.0], 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(r.entry(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn corr_constrain_single_pair() {
        let v = [0.5f64.atanh()];
        let (r, _) = corr_constrain(&v, 2).unwrap();
        assert_close(r.entry(0, 1), 0.5, 1e-15);
    }

    #[test]
    fn spd_round_trip_small() {
        let v = vec![0.3, -0.7, 1.1];
        let (m, _) = spd_constrain(&v, 2).unwrap();
        let back = spd_unconstrain(&m);
        for (a, b) in v.iter().zip(back.iter()) {
            assert_close(*a, *b, 1e-12);
        }
    }

    #[test]
    fn corr_round_trip_small() {
        let v = vec![0.4, -1.2, 0.9];
        let (r, _) = corr_constrain(&v, 3).unwrap();
        let back = corr_unconstrain(&r);
        for (a, b) in v.iter().zip(back.iter()) {
            assert_close(*a, *b, 1e-10);
        }
    }

    #[test]
    fn spd_json_round_trip() {
        let m = SPDMatrix::from_dense(&[2.0, 1.0, 1.0, 2.0], 2).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("lower_chol"));
        let back: SPDMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn spd_csv_round_trip_17_digits() {
        let m = SPDMatrix::from_dense(&[2.0, 1.0, 1.0, 2.0], 2).unwrap();
        let csv = m.to_csv();
        let back = SPDMatrix::from_csv(&csv).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_close(m.entry(i, j), back.entry(i, j), 1e-15);
            }
        }
    }

    #[test]
    fn inverse_multiplies_to_identity() {
        let m = SPDMatrix::from_dense(&[4.0, 1.0, 1.0, 3.0], 2).unwrap();
        let inv = m.inverse();
        let a = m.to_dense();
        let b = inv.to_dense();
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for k in 0..2 {
                    s += a[i * 2 + k] * b[k * 2 + j];
                }
                assert_close(s, if i == j { 1.0 } else { 0.0 }, 1e-12);
            }
        }
    }
}
