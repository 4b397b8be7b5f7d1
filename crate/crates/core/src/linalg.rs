//! Dense kernels shared by the density evaluators and the samplers.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Tolerances used when validating matrix inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed |a_ij - conj(a_ji)|, relative to max(1, max |a_ij|).
    pub hermitian: f64,
    /// Allowed eigenpair residual ||Hv - λv|| relative to ||H||.
    pub eigen_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { hermitian: 1e-12, eigen_residual: 1e-9 }
    }
}

/// A point of the closure of the Weyl chamber: x_1 <= x_2 <= ... <= x_N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeylVector(Vec<f64>);

impl WeylVector {
    /// Accepts ties.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_finite(&coords)?;
        if let Some(index) = coords.windows(2).position(|w| w[0] > w[1]) {
            return Err(Error::NotOrdered { index: index + 1 });
        }
        Ok(Self(coords))
    }

    /// Requires x_1 < x_2 < ... < x_N.
    pub fn strict(coords: Vec<f64>) -> Result<Self> {
        let v = Self::new(coords)?;
        if let Some(index) = v.0.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::NotStrictlyOrdered { index: index + 1 });
        }
        Ok(v)
    }

    /// Sorts arbitrary finite coordinates into the chamber.
    pub fn sorted(mut coords: Vec<f64>) -> Result<Self> {
        check_finite(&coords)?;
        coords.sort_by(f64::total_cmp);
        Ok(Self(coords))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_strict(&self) -> bool {
        self.0.windows(2).all(|w| w[0] < w[1])
    }

    pub fn is_origin(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn min_gap(&self) -> f64 {
        self.0.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}

impl TryFrom<Vec<f64>> for WeylVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<WeylVector> for Vec<f64> {
    fn from(v: WeylVector) -> Self {
        v.0
    }
}

impl std::ops::Index<usize> for WeylVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

fn check_finite(coords: &[f64]) -> Result<()> {
    match coords.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

fn check_square<T>(m: &DMatrix<T>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(())
}

/// Complex Hermitian N×N matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(DMatrix<C64>);

impl HermitianMatrix {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        Self::with_tolerance(entries, Tolerances::default().hermitian)
    }

    /// Validates symmetry up to `tol` and then stores the exactly Hermitian part.
    pub fn with_tolerance(entries: DMatrix<C64>, tol: f64) -> Result<Self> {
        check_square(&entries)?;
        if let Some(index) = entries.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let n = entries.nrows();
        let scale = entries.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let mut deviation: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                deviation = deviation.max((entries[(i, j)] - entries[(j, i)].conj()).norm());
            }
        }
        if deviation > tol * scale {
            return Err(Error::NotHermitian { deviation, tolerance: tol * scale });
        }
        let mut h = entries;
        for i in 0..n {
            h[(i, i)] = C64::new(h[(i, i)].re, 0.0);
            for j in i + 1..n {
                let avg = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
                h[(i, j)] = avg;
                h[(j, i)] = avg.conj();
            }
        }
        Ok(Self(h))
    }

    /// Caller guarantees exact Hermiticity (used by the samplers, which fill
    /// the upper triangle and mirror it).
    pub(crate) fn from_upper(n: usize, mut upper: impl FnMut(usize, usize) -> C64) -> Self {
        let mut h = DMatrix::<C64>::zeros(n, n);
        for i in 0..n {
            h[(i, i)] = C64::new(upper(i, i).re, 0.0);
            for j in i + 1..n {
                let z = upper(i, j);
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
        Self(h)
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        Self::from_upper(diag.len(), |i, j| if i == j { C64::new(diag[i], 0.0) } else { C64::new(0.0, 0.0) })
    }

    pub fn from_real(a: &SymmetricMatrix) -> Self {
        Self(a.0.map(|v| C64::new(v, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    /// Tr H² = Σ |h_ij|².
    pub fn trace_sq(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.trace_sq().sqrt()
    }

    /// U† H U.
    pub fn conjugate_by(&self, u: &DMatrix<C64>) -> Self {
        let m = u.adjoint() * &self.0 * u;
        Self::from_upper(self.dim(), |i, j| m[(i, j)])
    }

    pub fn sub(&self, other: &Self) -> Self {
        let d = &self.0 - &other.0;
        Self::from_upper(self.dim(), |i, j| d[(i, j)])
    }

    pub fn add(&self, other: &Self) -> Self {
        let d = &self.0 + &other.0;
        Self::from_upper(self.dim(), |i, j| d[(i, j)])
    }

    /// Largest |Im h_ij|; zero iff the matrix is real symmetric.
    pub fn max_imag(&self) -> f64 {
        self.0.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn to_symmetric(&self) -> Option<SymmetricMatrix> {
        (self.max_imag() == 0.0).then(|| SymmetricMatrix(self.0.map(|z| z.re)))
    }
}

/// Real symmetric N×N matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        check_square(&entries)?;
        let n = entries.nrows();
        for i in 0..n {
            for j in i + 1..n {
                let d = (entries[(i, j)] - entries[(j, i)]).abs();
                if d > 0.0 {
                    return Err(Error::NotHermitian { deviation: d, tolerance: 0.0 });
                }
            }
        }
        Ok(Self(entries))
    }

    pub(crate) fn from_upper(n: usize, mut upper: impl FnMut(usize, usize) -> f64) -> Self {
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = upper(i, j);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        Self(a)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn trace_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    /// Vᵀ A V.
    pub fn conjugate_by(&self, v: &DMatrix<f64>) -> Self {
        let m = v.transpose() * &self.0 * v;
        Self::from_upper(self.dim(), |i, j| m[(i, j)])
    }
}

/// Real skew-symmetric M×M matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix(DMatrix<f64>);

impl SkewMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        check_square(&entries)?;
        let n = entries.nrows();
        for i in 0..n {
            if entries[(i, i)] != 0.0 {
                return Err(Error::NotSkew { deviation: entries[(i, i)].abs() });
            }
            for j in i + 1..n {
                let d = (entries[(i, j)] + entries[(j, i)]).abs();
                if d > 0.0 {
                    return Err(Error::NotSkew { deviation: d });
                }
            }
        }
        Ok(Self(entries))
    }

    /// Builds the matrix from its strict upper triangle a(i, j), i < j.
    pub fn from_upper(m: usize, mut upper: impl FnMut(usize, usize) -> f64) -> Self {
        let mut a = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in i + 1..m {
                let v = upper(i, j);
                a[(i, j)] = v;
                a[(j, i)] = -v;
            }
        }
        Self(a)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// h_N(x) = ∏_{i<j} (x_j - x_i).
pub fn vandermonde(x: &[f64]) -> f64 {
    let mut prod = 1.0;
    for j in 1..x.len() {
        for i in 0..j {
            prod *= x[j] - x[i];
        }
    }
    prod
}

/// Gaussian heat kernel G_t(x, y) = (2πt)^{-1/2} exp(-(y-x)²/2t).
pub fn heat_kernel(t: f64, x: f64, y: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonPositive { name: "t", value: t });
    }
    Ok(gaussian_kernel(t, x, y))
}

#[inline]
pub(crate) fn gaussian_kernel(t: f64, x: f64, y: f64) -> f64 {
    let d = y - x;
    (-d * d / (2.0 * t)).exp() / (2.0 * std::f64::consts::PI * t).sqrt()
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn ordered_eigenvalues(h: &HermitianMatrix) -> WeylVector {
    let mut vals: Vec<f64> = if h.dim() == 1 {
        vec![h.0[(0, 0)].re]
    } else {
        SymmetricEigen::new(h.0.clone()).eigenvalues.iter().copied().collect()
    };
    vals.sort_by(f64::total_cmp);
    WeylVector(vals)
}

/// Ascending eigenvalues with unit eigenvectors in the matching columns.
pub fn ordered_eigenpairs(h: &HermitianMatrix) -> (WeylVector, DMatrix<C64>) {
    let eig = SymmetricEigen::new(h.0.clone());
    let mut order: Vec<usize> = (0..h.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = DMatrix::from_fn(h.dim(), h.dim(), |i, j| eig.eigenvectors[(i, order[j])]);
    (WeylVector(vals), vecs)
}

/// max_k ||H v_k - λ_k v_k|| / ||H||.
pub fn eigen_residual(h: &HermitianMatrix, vals: &WeylVector, vecs: &DMatrix<C64>) -> f64 {
    let norm = h.norm().max(f64::MIN_POSITIVE);
    (0..h.dim())
        .map(|k| {
            let v: DVector<C64> = vecs.column(k).into_owned();
            (h.entries() * &v - v.scale(vals[k])).norm() / norm
        })
        .fold(0.0, f64::max)
}

/// Pfaffian via skew-symmetric Gaussian elimination with partial pivoting
/// (Parlett–Reid reduction to tridiagonal form).
pub fn pfaffian(a: &SkewMatrix) -> Result<f64> {
    let m = a.dim();
    if m % 2 == 1 {
        return Err(Error::OddDimension(m));
    }
    let mut w = a.0.clone();
    Ok(pfaffian_in_place(&mut w))
}

pub(crate) fn pfaffian_in_place(w: &mut DMatrix<f64>) -> f64 {
    let m = w.nrows();
    let mut pf = 1.0;
    let mut k = 0;
    while k + 1 < m {
        let mut kp = k + 1;
        let mut best = w[(k + 1, k)].abs();
        for i in k + 2..m {
            if w[(i, k)].abs() > best {
                best = w[(i, k)].abs();
                kp = i;
            }
        }
        if kp != k + 1 {
            w.swap_rows(k + 1, kp);
            w.swap_columns(k + 1, kp);
            pf = -pf;
        }
        let pivot = w[(k, k + 1)];
        if pivot == 0.0 {
            return 0.0;
        }
        pf *= pivot;
        if k + 2 < m {
            let tau: Vec<f64> = (k + 2..m).map(|j| w[(k, j)] / pivot).collect();
            let col: Vec<f64> = (k + 2..m).map(|i| w[(i, k + 1)]).collect();
            for (a, i) in (k + 2..m).enumerate() {
                for (b, j) in (k + 2..m).enumerate() {
                    w[(i, j)] += tau[a] * col[b] - col[a] * tau[b];
                }
            }
        }
        k += 2;
    }
    pf
}

/// Determinant by LU with partial pivoting.
pub fn determinant(m: &DMatrix<f64>) -> Result<f64> {
    check_square(m)?;
    Ok(m.clone().lu().determinant())
}

pub fn determinant_complex(m: &DMatrix<C64>) -> Result<C64> {
    check_square(m)?;
    Ok(m.clone().lu().determinant())
}
