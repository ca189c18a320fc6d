//! Dense helpers behind the invertible 1x1 convolution: orthogonal
//! initialization, PLU factorization, and triangular solves batched over
//! time frames.

use ndarray::{Array2, ArrayView2};
use rand::Rng;

use super::scalar::{standard_normal, Scalar};

/// Random rotation via modified Gram-Schmidt (two passes) on a Gaussian
/// draw. Runs in f64 regardless of the model precision so the factor
/// quality does not depend on `T`.
pub fn random_orthogonal(n: usize, rng: &mut impl Rng) -> Array2<f64> {
    let mut a = Array2::<f64>::zeros((n, n));
    for v in a.iter_mut() {
        *v = standard_normal::<f64, _>(rng);
    }
    let mut q = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut v: Vec<f64> = a.column(j).to_vec();
        // Re-orthogonalize once; for Gaussian input this reaches machine
        // precision orthogonality.
        for _ in 0..2 {
            for i in 0..j {
                let qi = q.column(i);
                let r: f64 = qi.iter().zip(v.iter()).map(|(&x, &y)| x * y).sum();
                for (vk, &qk) in v.iter_mut().zip(qi.iter()) {
                    *vk -= r * qk;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm > 0.0, "degenerate Gaussian draw");
        for (k, vk) in v.iter().enumerate() {
            q[[k, j]] = vk / norm;
        }
    }
    q
}

/// LU with partial pivoting. Returns `(perm, l, u)` with
/// `a[perm[i], .]  == (l · u)[i, .]`, `l` unit lower triangular and `u`
/// upper triangular with nonzero diagonal for nonsingular input.
pub fn lu_decompose(a: &Array2<f64>) -> (Vec<usize>, Array2<f64>, Array2<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut m = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut pivot = k;
        let mut best = m[[k, k]].abs();
        for i in (k + 1)..n {
            let v = m[[i, k]].abs();
            if v > best {
                best = v;
                pivot = i;
            }
        }
        assert!(best > 0.0, "singular matrix in LU factorization");
        if pivot != k {
            perm.swap(k, pivot);
            for j in 0..n {
                let tmp = m[[k, j]];
                m[[k, j]] = m[[pivot, j]];
                m[[pivot, j]] = tmp;
            }
        }
        let inv = 1.0 / m[[k, k]];
        for i in (k + 1)..n {
            let factor = m[[i, k]] * inv;
            m[[i, k]] = factor;
            for j in (k + 1)..n {
                m[[i, j]] -= factor * m[[k, j]];
            }
        }
    }
    let mut l = Array2::<f64>::eye(n);
    let mut u = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if j < i {
                l[[i, j]] = m[[i, j]];
            } else {
                u[[i, j]] = m[[i, j]];
            }
        }
    }
    (perm, l, u)
}

fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x.iter()) {
        *yi = *yi + alpha * xi;
    }
}

fn rows_mut<T: Scalar>(b: &mut Array2<T>) -> (&mut [T], usize) {
    let t = b.ncols();
    let buf = b
        .as_slice_mut()
        .expect("frame matrix must be standard layout");
    (buf, t)
}

/// Solve `L x = b` in place, `l` unit lower triangular, `b` holding one
/// column per time frame.
pub fn solve_unit_lower_inplace<T: Scalar>(l: &ArrayView2<T>, b: &mut Array2<T>) {
    let c = b.nrows();
    let (buf, t) = rows_mut(b);
    for i in 1..c {
        let (done, rest) = buf.split_at_mut(i * t);
        let row_i = &mut rest[..t];
        for j in 0..i {
            let lij = l[[i, j]];
            if lij != T::zero() {
                axpy(-lij, &done[j * t..(j + 1) * t], row_i);
            }
        }
    }
}

/// Solve `U x = b` in place, strict upper part in `u`, diagonal passed
/// separately.
pub fn solve_upper_inplace<T: Scalar>(u: &ArrayView2<T>, diag: &[T], b: &mut Array2<T>) {
    let c = b.nrows();
    let (buf, t) = rows_mut(b);
    for i in (0..c).rev() {
        let (left, rest) = buf.split_at_mut((i + 1) * t);
        let row_i = &mut left[i * t..];
        for j in (i + 1)..c {
            let uij = u[[i, j]];
            if uij != T::zero() {
                axpy(-uij, &rest[(j - i - 1) * t..(j - i) * t], row_i);
            }
        }
        let inv = T::one() / diag[i];
        for v in row_i.iter_mut() {
            *v = *v * inv;
        }
    }
}

/// Solve `Uᵀ x = b` in place (lower triangular with the same diagonal).
pub fn solve_upper_transpose_inplace<T: Scalar>(u: &ArrayView2<T>, diag: &[T], b: &mut Array2<T>) {
    let c = b.nrows();
    let (buf, t) = rows_mut(b);
    for i in 0..c {
        let (done, rest) = buf.split_at_mut(i * t);
        let row_i = &mut rest[..t];
        for j in 0..i {
            let uji = u[[j, i]];
            if uji != T::zero() {
                axpy(-uji, &done[j * t..(j + 1) * t], row_i);
            }
        }
        let inv = T::one() / diag[i];
        for v in row_i.iter_mut() {
            *v = *v * inv;
        }
    }
}

/// Solve `Lᵀ x = b` in place (unit upper triangular).
pub fn solve_unit_lower_transpose_inplace<T: Scalar>(l: &ArrayView2<T>, b: &mut Array2<T>) {
    let c = b.nrows();
    let (buf, t) = rows_mut(b);
    for i in (0..c).rev() {
        let (left, rest) = buf.split_at_mut((i + 1) * t);
        let row_i = &mut left[i * t..];
        for j in (i + 1)..c {
            let lji = l[[j, i]];
            if lji != T::zero() {
                axpy(-lji, &rest[(j - i - 1) * t..(j - i) * t], row_i);
            }
        }
    }
}

/// Scatter rows: `out[perm[i], .] = b[i, .]`.
pub fn permute_rows_scatter<T: Scalar>(perm: &[usize], b: &ArrayView2<T>) -> Array2<T> {
    let mut out = Array2::<T>::zeros(b.raw_dim());
    for (i, &p) in perm.iter().enumerate() {
        out.row_mut(p).assign(&b.row(i));
    }
    out
}

/// Gather rows: `out[i, .] = b[perm[i], .]`.
pub fn permute_rows_gather<T: Scalar>(perm: &[usize], b: &ArrayView2<T>) -> Array2<T> {
    let mut out = Array2::<T>::zeros(b.raw_dim());
    for (i, &p) in perm.iter().enumerate() {
        out.row_mut(i).assign(&b.row(p));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gram_schmidt_gives_orthogonal_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let q = random_orthogonal(24, &mut rng);
        let qtq = q.t().dot(&q);
        for i in 0..24 {
            for j in 0..24 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((qtq[[i, j]] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lu_reconstructs_permuted_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_orthogonal(16, &mut rng);
        let (perm, l, u) = lu_decompose(&a);
        let lu = l.dot(&u);
        for i in 0..16 {
            for j in 0..16 {
                assert!((a[[perm[i], j]] - lu[[i, j]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn triangular_solves_invert_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 12;
        let q = random_orthogonal(n, &mut rng);
        let (_, l, u) = lu_decompose(&q);
        let diag: Vec<f64> = (0..n).map(|i| u[[i, i]]).collect();
        let mut rhs = Array2::<f64>::zeros((n, 5));
        for v in rhs.iter_mut() {
            *v = standard_normal::<f64, _>(&mut rng);
        }
        // x = U^{-1} L^{-1} rhs, then L U x should equal rhs
        let mut x = rhs.clone();
        solve_unit_lower_inplace(&l.view(), &mut x);
        solve_upper_inplace(&u.view(), &diag, &mut x);
        let back = l.dot(&u.dot(&x));
        for (a, b) in back.iter().zip(rhs.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
        // transpose solves: Uᵀ Lᵀ y = rhs  ⇒  (L U)ᵀ y = rhs
        let mut y = rhs.clone();
        solve_upper_transpose_inplace(&u.view(), &diag, &mut y);
        solve_unit_lower_transpose_inplace(&l.view(), &mut y);
        let back = l.dot(&u).t().dot(&y);
        for (a, b) in back.iter().zip(rhs.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
