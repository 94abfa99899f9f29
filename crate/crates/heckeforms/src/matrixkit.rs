//! Matrices over commutative rings, indexed from 0 so that order r means
//! (r+1)×(r+1): the exchange, Vandermonde, basis and Pascal matrices, the
//! x- and y-exchanges, the Schur-Hadamard product and determinants.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use crate::scalar::{binomial, binomial_general, Scalar};
use crate::series::{QSeries, TauPoly};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatError {
    #[error("unknown matrix kind `{0}`")]
    UnknownKind(String),
    #[error("expected a square matrix, got {0}×{1}")]
    NotSquare(usize, usize),
    #[error("shape mismatch: {0}×{1} against {2}×{3}")]
    Shape(usize, usize, usize, usize),
    #[error("linear system is inconsistent")]
    Inconsistent,
    #[error("matrix is singular")]
    Singular,
    #[error("empty matrix")]
    Empty,
}

/// Commutative ring operations needed by the matrix kit. Elements carry
/// their own notion of zero and one so that truncated series can take part.
pub trait Ring: Clone + Debug + PartialEq + Send + Sync {
    /// Rings whose elements carry truncation (series, τ-polynomials).
    const SERIES_LIKE: bool = false;
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn is_zero_elem(&self) -> bool;
    fn r_add(&self, o: &Self) -> Self;
    fn r_sub(&self, o: &Self) -> Self;
    fn r_mul(&self, o: &Self) -> Self;
    fn r_neg(&self) -> Self;
    /// Exact quotient, when it exists and is cheap to form.
    fn r_div_exact(&self, _d: &Self) -> Option<Self> {
        None
    }
}

impl<T: Scalar> Ring for T {
    fn zero_like(&self) -> Self {
        T::zero()
    }
    fn one_like(&self) -> Self {
        T::one()
    }
    fn is_zero_elem(&self) -> bool {
        self.is_zero()
    }
    fn r_add(&self, o: &Self) -> Self {
        self.clone() + o.clone()
    }
    fn r_sub(&self, o: &Self) -> Self {
        self.clone() - o.clone()
    }
    fn r_mul(&self, o: &Self) -> Self {
        self.clone() * o.clone()
    }
    fn r_neg(&self) -> Self {
        -self.clone()
    }
    fn r_div_exact(&self, d: &Self) -> Option<Self> {
        (!d.is_zero()).then(|| self.clone() / d.clone())
    }
}

impl<T: Scalar> Ring for QSeries<T> {
    const SERIES_LIKE: bool = true;
    fn zero_like(&self) -> Self {
        QSeries::zero(self.precision())
    }
    fn one_like(&self) -> Self {
        QSeries::one(self.len().max(1))
    }
    fn is_zero_elem(&self) -> bool {
        self.is_zero()
    }
    fn r_add(&self, o: &Self) -> Self {
        self + o
    }
    fn r_sub(&self, o: &Self) -> Self {
        self - o
    }
    fn r_mul(&self, o: &Self) -> Self {
        self * o
    }
    fn r_neg(&self) -> Self {
        -self
    }
    fn r_div_exact(&self, d: &Self) -> Option<Self> {
        self.try_div(d).ok()
    }
}

impl<T: Scalar> Ring for TauPoly<T> {
    const SERIES_LIKE: bool = true;
    fn zero_like(&self) -> Self {
        TauPoly::from_series(QSeries::zero(self.precision()))
    }
    fn one_like(&self) -> Self {
        TauPoly::from_series(QSeries::one(self.term(0).len().max(1)))
    }
    fn is_zero_elem(&self) -> bool {
        self.is_zero()
    }
    fn r_add(&self, o: &Self) -> Self {
        self.try_add(o).expect("τ-polynomial addition")
    }
    fn r_sub(&self, o: &Self) -> Self {
        self.try_sub(o).expect("τ-polynomial subtraction")
    }
    fn r_mul(&self, o: &Self) -> Self {
        self.try_mul(o).expect("τ-polynomial product")
    }
    fn r_neg(&self) -> Self {
        self.neg_poly()
    }
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<R> {
    rows: usize,
    cols: usize,
    data: Vec<R>,
}

impl<R: Ring> Mat<R> {
    pub fn from_rows(rows: Vec<Vec<R>>) -> Result<Self, MatError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if let Some(bad) = rows.iter().find(|x| x.len() != c) {
            return Err(MatError::Shape(r, c, 1, bad.len()));
        }
        Ok(Mat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> R) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Column vector.
    pub fn column(v: Vec<R>) -> Self {
        Mat {
            rows: v.len(),
            cols: 1,
            data: v,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &R {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: R) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[R] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<R>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// Entries of a column vector.
    pub fn to_vec(&self) -> Vec<R> {
        self.data.clone()
    }

    pub fn map<S: Ring>(&self, f: impl Fn(&R) -> S) -> Mat<S> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    fn require_square(&self) -> Result<(), MatError> {
        if self.is_square() {
            Ok(())
        } else {
            Err(MatError::NotSquare(self.rows, self.cols))
        }
    }

    fn require_shape(&self, o: &Self) -> Result<(), MatError> {
        if self.rows == o.rows && self.cols == o.cols {
            Ok(())
        } else {
            Err(MatError::Shape(self.rows, self.cols, o.rows, o.cols))
        }
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    /// Rows in reverse order (left multiplication by ι), for any shape.
    pub fn flip_rows(&self) -> Self {
        Mat::from_fn(self.rows, self.cols, |i, j| self.get(self.rows - 1 - i, j).clone())
    }

    /// Columns in reverse order (right multiplication by ι), for any shape.
    pub fn flip_cols(&self) -> Self {
        Mat::from_fn(self.rows, self.cols, |i, j| self.get(i, self.cols - 1 - j).clone())
    }

    /// A^X = ιA.
    pub fn x_exchange(&self) -> Result<Self, MatError> {
        self.require_square()?;
        Ok(self.flip_rows())
    }

    /// A^Y = Aι.
    pub fn y_exchange(&self) -> Result<Self, MatError> {
        self.require_square()?;
        Ok(self.flip_cols())
    }

    pub fn hadamard(&self, o: &Self) -> Result<Self, MatError> {
        self.require_shape(o)?;
        Ok(self.zip(o, |a, b| a.r_mul(b)))
    }

    fn zip(&self, o: &Self, f: impl Fn(&R, &R) -> R) -> Self {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, o: &Self) -> Result<Self, MatError> {
        self.require_shape(o)?;
        Ok(self.zip(o, |a, b| a.r_add(b)))
    }

    pub fn sub(&self, o: &Self) -> Result<Self, MatError> {
        self.require_shape(o)?;
        Ok(self.zip(o, |a, b| a.r_sub(b)))
    }

    pub fn scale(&self, c: &R) -> Self {
        self.map(|a| c.r_mul(a))
    }

    pub fn mul(&self, o: &Self) -> Result<Self, MatError> {
        if self.cols != o.rows {
            return Err(MatError::Shape(self.rows, self.cols, o.rows, o.cols));
        }
        if self.cols == 0 {
            return Err(MatError::Empty);
        }
        Ok(Mat::from_fn(self.rows, o.cols, |i, j| {
            (1..self.cols).fold(self.get(i, 0).r_mul(o.get(0, j)), |acc, k| {
                acc.r_add(&self.get(i, k).r_mul(o.get(k, j)))
            })
        }))
    }

    pub fn is_lower_triangular(&self) -> bool {
        (0..self.rows).all(|i| (i + 1..self.cols).all(|j| self.get(i, j).is_zero_elem()))
    }

    pub fn is_upper_triangular(&self) -> bool {
        (0..self.rows).all(|i| (0..i.min(self.cols)).all(|j| self.get(i, j).is_zero_elem()))
    }

    /// Constant along diagonals.
    pub fn is_toeplitz(&self) -> bool {
        (1..self.rows).all(|i| (1..self.cols).all(|j| self.get(i, j) == self.get(i - 1, j - 1)))
    }

    /// Constant along antidiagonals.
    pub fn is_hankel(&self) -> bool {
        (1..self.rows).all(|i| (0..self.cols - 1).all(|j| self.get(i, j) == self.get(i - 1, j + 1)))
    }

    /// Determinant: fraction-free elimination over fields, cofactor expansion
    /// for series rings below order 6.
    pub fn det(&self) -> Result<R, MatError> {
        self.require_square()?;
        if self.rows == 0 {
            return Err(MatError::Empty);
        }
        if R::SERIES_LIKE && self.rows < 6 {
            return Ok(self.det_cofactor());
        }
        Ok(self.det_bareiss().unwrap_or_else(|| self.det_cofactor()))
    }

    /// Laplace expansion along the first row; division-free.
    pub fn det_cofactor(&self) -> R {
        let cols: Vec<usize> = (0..self.cols).collect();
        self.minor(0, &cols)
    }

    fn minor(&self, row: usize, cols: &[usize]) -> R {
        if cols.len() == 1 {
            return self.get(row, cols[0]).clone();
        }
        let mut acc: Option<R> = None;
        for (k, &c) in cols.iter().enumerate() {
            let a = self.get(row, c);
            if a.is_zero_elem() && acc.is_some() {
                continue;
            }
            let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
            let term = a.r_mul(&self.minor(row + 1, &rest));
            acc = Some(match acc {
                None if k % 2 == 0 => term,
                None => term.r_neg(),
                Some(s) if k % 2 == 0 => s.r_add(&term),
                Some(s) => s.r_sub(&term),
            });
        }
        acc.expect("nonempty minor")
    }

    /// Bareiss elimination; `None` when an exact quotient is unavailable.
    pub fn det_bareiss(&self) -> Option<R> {
        let n = self.rows;
        let mut m = self.to_rows();
        let one = m[0][0].one_like();
        let mut prev = one.clone();
        let mut sign = false;
        for k in 0..n.saturating_sub(1) {
            let Some(p) = (k..n).find(|&i| !m[i][k].is_zero_elem()) else {
                return Some(m[0][0].zero_like());
            };
            if p != k {
                m.swap(p, k);
                sign = !sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = m[k][k].r_mul(&m[i][j]).r_sub(&m[i][k].r_mul(&m[k][j]));
                    m[i][j] = num.r_div_exact(&prev)?;
                }
                m[i][k] = m[i][k].zero_like();
            }
            prev = m[k][k].clone();
        }
        let d = m[n - 1][n - 1].clone();
        Some(if sign { d.r_neg() } else { d })
    }
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat::from_fn(rows, cols, |_, _| T::zero())
    }

    pub fn identity(r: usize) -> Self {
        Mat::from_fn(r + 1, r + 1, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Mat::from_fn(rows, cols, |_, _| T::one())
    }

    /// Inverse over a field by exact elimination.
    pub fn inverse(&self) -> Result<Self, MatError> {
        self.require_square()?;
        let n = self.rows;
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let e: Vec<T> = (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect();
            let sol = solve_affine(self, &e)?;
            if !sol.kernel.is_empty() {
                return Err(MatError::Singular);
            }
            cols.push(sol.particular);
        }
        Ok(Mat::from_fn(n, n, |i, j| cols[j][i].clone()))
    }
}

/// Solution set `particular + span(kernel)` of a linear system.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineSolution<T> {
    pub particular: Vec<T>,
    pub kernel: Vec<Vec<T>>,
}

/// Solves A x = rhs over a field by fraction-free elimination with column
/// skipping, returning a particular solution and a kernel basis.
pub fn solve_affine<T: Scalar>(a: &Mat<T>, rhs: &[T]) -> Result<AffineSolution<T>, MatError> {
    let (n, m) = (a.rows(), a.cols());
    if rhs.len() != n {
        return Err(MatError::Shape(n, m, rhs.len(), 1));
    }
    let mut aug: Vec<Vec<T>> = (0..n)
        .map(|i| {
            let mut row = a.row(i).to_vec();
            row.push(rhs[i].clone());
            row
        })
        .collect();
    let mut prev = T::one();
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..m {
        if row == n {
            break;
        }
        let Some(p) = (row..n).find(|&i| !aug[i][col].is_zero()) else {
            continue;
        };
        aug.swap(p, row);
        for i in row + 1..n {
            for j in col + 1..=m {
                let num = aug[row][col].clone() * aug[i][j].clone() - aug[i][col].clone() * aug[row][j].clone();
                aug[i][j] = num / prev.clone();
            }
            aug[i][col] = T::zero();
        }
        prev = aug[row][col].clone();
        pivots.push(col);
        row += 1;
    }
    if aug[row..].iter().any(|r| !r[m].is_zero()) {
        return Err(MatError::Inconsistent);
    }
    let free: Vec<usize> = (0..m).filter(|c| !pivots.contains(c)).collect();
    let back = |fixed: &[(usize, T)], with_rhs: bool| -> Vec<T> {
        let mut x = vec![T::zero(); m];
        for (c, v) in fixed {
            x[*c] = v.clone();
        }
        for (k, &pc) in pivots.iter().enumerate().rev() {
            let mut s = if with_rhs { aug[k][m].clone() } else { T::zero() };
            for j in pc + 1..m {
                s = s - aug[k][j].clone() * x[j].clone();
            }
            x[pc] = s / aug[k][pc].clone();
        }
        x
    };
    Ok(AffineSolution {
        particular: back(&[], true),
        kernel: free.iter().map(|&f| back(&[(f, T::one())], false)).collect(),
    })
}

fn sign<T: Scalar>(odd: bool) -> T {
    if odd {
        -T::one()
    } else {
        T::one()
    }
}

fn big<T: Scalar>(n: BigInt) -> T {
    T::from_rational(&num_rational::BigRational::from_integer(n))
}

/// p_r^∨, entries C(i, j).
pub fn pascal_lower<T: Scalar>(r: usize) -> Mat<T> {
    Mat::from_fn(r + 1, r + 1, |i, j| big(binomial(i as i64, j as i64)))
}

/// p_r^∧ = (p_r^∨)^T.
pub fn pascal_upper<T: Scalar>(r: usize) -> Mat<T> {
    pascal_lower(r).transpose()
}

/// ι_r, ones on the antidiagonal.
pub fn exchange<T: Scalar>(r: usize) -> Mat<T> {
    Mat::from_fn(r + 1, r + 1, |i, j| if i + j == r { T::one() } else { T::zero() })
}

/// 𝐚_r = 𝒱_r(−1, …, −1) ⊙ ι_r, entry (i, r−i) = (−1)^{r−i}.
pub fn alt_exchange<T: Scalar>(r: usize) -> Mat<T> {
    Mat::from_fn(
        r + 1,
        r + 1,
        |i, j| if i + j == r { sign(j % 2 == 1) } else { T::zero() },
    )
}

/// 𝒱(z_0, …, z_r), entries z_i^j.
pub fn vandermonde<T: Scalar>(points: &[T]) -> Mat<T> {
    let n = points.len();
    Mat::from_fn(n, n, |i, j| points[i].pow_u32(j as u32))
}

/// B_r(z) = (1, z, …, z^r)^T.
pub fn basis_vector<R: Ring>(r: usize, z: &R) -> Mat<R> {
    let mut v = vec![z.one_like()];
    for k in 1..=r {
        let next = v[k - 1].r_mul(z);
        v.push(next);
    }
    Mat::column(v)
}

/// V_r^∨(z), entries z^{i−j} on and below the diagonal.
pub fn basis_matrix<R: Ring>(r: usize, z: &R) -> Mat<R> {
    let pows = basis_vector(r, z).to_vec();
    Mat::from_fn(
        r + 1,
        r + 1,
        |i, j| if j <= i { pows[i - j].clone() } else { z.zero_like() },
    )
}

/// 𝐛_r = (C(r,0), …, C(r,r))^T.
pub fn b_vector<T: Scalar>(r: usize) -> Mat<T> {
    Mat::column((0..=r).map(|k| big(binomial(r as i64, k as i64))).collect())
}

/// 𝐛_r^{−1} = (C(r,0)^{−1}, …, C(r,r)^{−1})^T.
pub fn b_inverse<T: Scalar>(r: usize) -> Mat<T> {
    Mat::column(
        (0..=r)
            .map(|k| T::one() / big::<T>(binomial(r as i64, k as i64)))
            .collect(),
    )
}

/// Upper triangular Toeplitz matrix with `t[k]` on superdiagonal k.
pub fn upper_toeplitz<R: Ring>(t: &[R]) -> Mat<R> {
    let n = t.len();
    Mat::from_fn(n, n, |i, j| if j >= i { t[j - i].clone() } else { t[0].zero_like() })
}

/// Builds a named matrix. `args` are the Vandermonde points or the single
/// argument of a basis vector or matrix.
pub fn build<T: Scalar>(kind: &str, r: usize, args: &[T]) -> Result<Mat<T>, MatError> {
    let arg = || args.first().cloned().unwrap_or_else(T::zero);
    Ok(match kind {
        "pascal_lower" => pascal_lower(r),
        "pascal_upper" => pascal_upper(r),
        "exchange" => exchange(r),
        "alt_exchange" => alt_exchange(r),
        "vandermonde" => {
            if args.is_empty() {
                vandermonde(&(0..=r).map(|k| T::from_i64(k as i64)).collect::<Vec<_>>())
            } else {
                vandermonde(args)
            }
        }
        "basis_vector" => basis_vector(r, &arg()),
        "basis_matrix" => basis_matrix(r, &arg()),
        "basis_matrix_upper" => basis_matrix(r, &arg()).transpose(),
        "b_vector" => b_vector(r),
        "b_inverse" => b_inverse(r),
        "identity" => Mat::identity(r),
        _ => return Err(MatError::UnknownKind(kind.to_string())),
    })
}

/// B_r(x + zy).
pub fn mixed_binomial_lhs<T: Scalar>(x: &T, y: &T, z: &T, r: usize) -> Mat<T> {
    basis_vector(r, &(x.clone() + z.clone() * y.clone()))
}

/// (p_r^∨ ⊙ V_r^∨(x)) (B_r(y) ⊙ B_r(z)).
pub fn mixed_binomial_rhs<T: Scalar>(x: &T, y: &T, z: &T, r: usize) -> Mat<T> {
    let m = pascal_lower::<T>(r).hadamard(&basis_matrix(r, x)).expect("same order");
    let v = basis_vector(r, y).hadamard(&basis_vector(r, z)).expect("same order");
    m.mul(&v).expect("conformable")
}

/// Σ_{ℓ=0}^{k} (−1)^ℓ C(k,ℓ) C(y−ℓ, p).
pub fn binom_convolution(k: i64, y: i64, p: i64) -> BigInt {
    (0..=k).fold(BigInt::zero(), |acc, l| {
        let t = binomial(k, l) * binomial_general(y - l, p);
        if l % 2 == 0 {
            acc + t
        } else {
            acc - t
        }
    })
}

/// C(y−k, y−p), the closed form of [`binom_convolution`].
pub fn binom_convolution_closed(k: i64, y: i64, p: i64) -> BigInt {
    binomial(y - k, y - p)
}
