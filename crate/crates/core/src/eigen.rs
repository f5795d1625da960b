//! Dense Hermitian eigensolver.
//!
//! Householder reduction of the complex Hermitian input to a tridiagonal
//! matrix, a diagonal phase change that makes the off-diagonal real, and the
//! implicit-shift QL iteration on the resulting real symmetric tridiagonal.
//! Sized for the small operators used here (dimension at most a few hundred).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{ensure_square, CMatrix, ONE, ZERO};

/// Relative residual tolerance `|M v - lambda v| <= tol * |M|`.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: Option<CMatrix>,
}

/// Eigen-decomposition of a Hermitian matrix. Only the lower triangle is read.
///
/// With `with_vectors` the residual of every pair is verified against
/// [`RESIDUAL_TOL`] and a [`Error::ConvergenceFailure`] reports the worst one.
pub fn eigh(m: &CMatrix, with_vectors: bool) -> Result<HermitianEigen> {
    let n = ensure_square(m)?;
    if n == 0 {
        return Ok(HermitianEigen {
            values: Vec::new(),
            vectors: with_vectors.then(|| CMatrix::zeros(0, 0)),
        });
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }

    // Row-major working copy, Hermitian-completed from the lower triangle.
    let mut a = vec![ZERO; n * n];
    for i in 0..n {
        for j in 0..=i {
            let z = m[(i, j)];
            a[i * n + j] = z;
            a[j * n + i] = z.conj();
        }
        a[i * n + i] = Complex64::new(m[(i, i)].re, 0.0);
    }

    let (d, e, q) = tridiagonalize(&mut a, n, with_vectors);

    // Phase change so the subdiagonal becomes |e_j|.
    let mut phase = vec![ONE; n];
    let mut offdiag = vec![0.0; n];
    for j in 0..n.saturating_sub(1) {
        let r = e[j].norm();
        offdiag[j] = r;
        phase[j + 1] = if r > 0.0 { phase[j] * (e[j] / r) } else { phase[j] };
    }

    let mut diag = d;
    let mut zt = with_vectors.then(|| {
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        z
    });
    tql2(&mut diag, &mut offdiag, zt.as_deref_mut(), n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| diag[x].total_cmp(&diag[y]));
    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();

    let vectors = match (zt, q) {
        (Some(zt), Some(q)) => {
            // eigenvectors = Q * D * Z, Z stored transposed (row i = vector i).
            let mut out = CMatrix::zeros(n, n);
            for (col, &src) in order.iter().enumerate() {
                let z = &zt[src * n..(src + 1) * n];
                for r in 0..n {
                    let qrow = &q[r * n..(r + 1) * n];
                    let mut acc = ZERO;
                    for k in 0..n {
                        acc += qrow[k] * phase[k] * z[k];
                    }
                    out[(r, col)] = acc;
                }
            }
            Some(out)
        }
        _ => None,
    };

    if let Some(v) = &vectors {
        let worst = max_relative_residual(m, &values, v);
        if worst > RESIDUAL_TOL {
            return Err(Error::ConvergenceFailure { residual: worst });
        }
    }

    Ok(HermitianEigen { values, vectors })
}

pub fn eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    Ok(eigh(m, false)?.values)
}

/// `max_i |M v_i - lambda_i v_i|_2 / max(|lambda|max, tiny)`.
pub fn max_relative_residual(m: &CMatrix, values: &[f64], vectors: &CMatrix) -> f64 {
    let scale = values.iter().fold(0.0f64, |acc, &l| acc.max(l.abs())).max(f64::MIN_POSITIVE);
    let mv = m * vectors;
    let mut worst: f64 = 0.0;
    for (i, &l) in values.iter().enumerate() {
        let r: f64 = mv
            .column(i)
            .iter()
            .zip(vectors.column(i).iter())
            .map(|(a, b)| (a - b * l).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r / scale);
    }
    worst
}

/// Householder reduction. Returns the real diagonal, the complex subdiagonal
/// `e[j] = T[j+1][j]` and optionally the accumulated unitary (row-major).
fn tridiagonalize(
    a: &mut [Complex64],
    n: usize,
    with_q: bool,
) -> (Vec<f64>, Vec<Complex64>, Option<Vec<Complex64>>) {
    let mut d = vec![0.0; n];
    let mut e = vec![ZERO; n];
    let mut q = with_q.then(|| {
        let mut q = vec![ZERO; n * n];
        for i in 0..n {
            q[i * n + i] = ONE;
        }
        q
    });

    let mut v = vec![ZERO; n];
    let mut u = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let lo = k + 1;
        let len = n - lo;
        let mut alpha_sq = 0.0;
        for i in 0..len {
            v[i] = a[(lo + i) * n + k];
            alpha_sq += v[i].norm_sqr();
        }
        d[k] = a[k * n + k].re;
        let alpha = alpha_sq.sqrt();
        let x0 = v[0];
        let x0_abs = x0.norm();
        // Already reduced: column below the subdiagonal vanishes.
        if alpha == 0.0 || alpha_sq - x0_abs * x0_abs <= f64::MIN_POSITIVE {
            e[k] = x0;
            continue;
        }
        let ph = if x0_abs > 0.0 { x0 / x0_abs } else { ONE };
        v[0] += ph * alpha;
        let tau = 1.0 / (alpha * (alpha + x0_abs));
        e[k] = -ph * alpha;

        // u = tau * B v
        for i in 0..len {
            let row = &a[(lo + i) * n + lo..(lo + i) * n + n];
            let mut acc = ZERO;
            for (bij, vj) in row.iter().zip(&v[..len]) {
                acc += bij * vj;
            }
            u[i] = acc * tau;
        }
        // w = u - (tau/2)(v^dag u) v
        let mut vu = ZERO;
        for i in 0..len {
            vu += v[i].conj() * u[i];
        }
        let kf = 0.5 * tau * vu.re;
        for i in 0..len {
            u[i] -= v[i] * kf;
        }
        // B -= v w^dag + w v^dag
        for i in 0..len {
            let vi = v[i];
            let wi = u[i];
            let row = &mut a[(lo + i) * n + lo..(lo + i) * n + n];
            for (j, bij) in row.iter_mut().enumerate() {
                *bij -= vi * u[j].conj() + wi * v[j].conj();
            }
        }
        if let Some(q) = q.as_mut() {
            // Q[:, lo..] -= tau (Q[:, lo..] v) v^dag
            for r in 0..n {
                let row = &mut q[r * n + lo..r * n + n];
                let mut s = ZERO;
                for (qr, vj) in row.iter().zip(&v[..len]) {
                    s += qr * vj;
                }
                s *= tau;
                for (qr, vj) in row.iter_mut().zip(&v[..len]) {
                    *qr -= s * vj.conj();
                }
            }
        }
    }
    if n >= 2 {
        d[n - 2] = a[(n - 2) * n + (n - 2)].re;
        e[n - 2] = a[(n - 1) * n + (n - 2)];
    }
    d[n - 1] = a[(n - 1) * n + (n - 1)].re;
    (d, e, q)
}

/// Implicit QL on a real symmetric tridiagonal (`e[i]` couples `i` and `i+1`,
/// `e[n-1]` unused). `zt`, if given, holds eigenvectors as rows.
fn tql2(d: &mut [f64], e: &mut [f64], mut zt: Option<&mut [f64]>, n: usize) -> Result<()> {
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let max_iter = 30 * n.max(10);
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > max_iter {
                    return Err(Error::ConvergenceFailure { residual: e[l].abs() });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = zt.as_deref_mut() {
                        let (head, tail) = z.split_at_mut((i + 1) * n);
                        let zi = &mut head[i * n..];
                        let zi1 = &mut tail[..n];
                        for k in 0..n {
                            let hk = zi1[k];
                            zi1[k] = s * zi[k] + c * hk;
                            zi[k] = c * zi[k] - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = CMatrix::from_fn(n, n, |_, _| {
            Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        });
        (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
    }

    #[test]
    fn pauli_spectra() {
        let z = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
        let x = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let y = CMatrix::from_row_slice(
            2,
            2,
            &[ZERO, Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), ZERO],
        );
        for m in [z, x, y] {
            let e = eigh(&m, true).unwrap();
            assert!((e.values[0] + 1.0).abs() < 1e-14);
            assert!((e.values[1] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn matches_independent_solver_and_has_small_residuals() {
        for (n, seed) in [(1, 1), (2, 2), (3, 3), (7, 4), (16, 5), (33, 6), (64, 7)] {
            let m = random_hermitian(n, seed);
            let ours = eigh(&m, true).unwrap();
            let mut reference: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
            reference.sort_by(f64::total_cmp);
            let scale = reference.iter().fold(1.0f64, |a, &b| a.max(b.abs()));
            for (a, b) in ours.values.iter().zip(&reference) {
                assert!((a - b).abs() < 1e-11 * scale, "n={n}: {a} vs {b}");
            }
            let v = ours.vectors.as_ref().unwrap();
            assert!(max_relative_residual(&m, &ours.values, v) < 1e-12);
            let gram = v.adjoint() * v;
            assert!((gram - CMatrix::identity(n, n)).norm() < 1e-11);
        }
    }

    #[test]
    fn degenerate_and_diagonal_inputs() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(3.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(3.0, 0.0),
            Complex64::new(0.0, 0.0),
        ]));
        let e = eigh(&m, true).unwrap();
        assert_eq!(e.values, vec![-1.0, 0.0, 3.0, 3.0]);
        let zero = CMatrix::zeros(5, 5);
        assert_eq!(eigenvalues(&zero).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn rejects_non_square() {
        assert!(eigh(&CMatrix::zeros(2, 3), false).is_err());
    }
}
