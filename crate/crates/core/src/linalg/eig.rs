//! Hermitian eigendecomposition.
//!
//! Complex Householder reduction to a real symmetric tridiagonal matrix,
//! followed by the implicit-shift QL iteration with the unitary accumulated
//! throughout. The accuracy contract is the reconstruction residual, not
//! the algorithm.

// Index loops mirror the textbook recurrences; iterator forms obscure them.
#![allow(clippy::needless_range_loop)]

use super::{ComplexMatrix, C64};
use crate::error::{Error, Result};
use crate::tol;

/// Result of [`herm_eig`]: eigenvalues in descending order, with column `j`
/// of `eigenvectors` the eigenvector of `eigenvalues[j]`.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

const MAX_QL_ITERATIONS: usize = 60;

pub fn herm_eig(x: &ComplexMatrix) -> Result<HermEig> {
    let residual = x.hermiticity_residual();
    if residual > tol::STRUCTURAL {
        return Err(Error::NotHermitian { residual });
    }
    let n = x.dim();
    // Hermitize exactly so input rounding cannot leak into the iteration.
    let mut a = ComplexMatrix::from_fn(n, |i, j| 0.5 * (x.get(i, j) + x.get(j, i).conj()));
    let mut q = ComplexMatrix::identity(n);

    tridiagonalize(&mut a, &mut q);

    // Chase the subdiagonal phases into q so the tridiagonal matrix is real.
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n];
    for i in 0..n {
        d[i] = a.get(i, i).re;
    }
    let mut phase = C64::new(1.0, 0.0);
    for i in 0..n.saturating_sub(1) {
        let c = a.get(i + 1, i);
        let m = c.norm();
        e[i] = m;
        if m > 0.0 {
            phase *= c / m;
        }
        for r in 0..n {
            q.set(r, i + 1, q.get(r, i + 1) * phase);
        }
    }

    ql_implicit(&mut d, &mut e, &mut q)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).expect("finite eigenvalues"));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, |r, col| q.get(r, order[col]));
    Ok(HermEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Reduce Hermitian `a` to tridiagonal form in place, accumulating the
/// unitary into `q` so that a_in = q * a_out * q'.
fn tridiagonalize(a: &mut ComplexMatrix, q: &mut ComplexMatrix) {
    let n = a.dim();
    if n < 3 {
        return;
    }
    let mut v = vec![C64::new(0.0, 0.0); n];
    let mut w = vec![C64::new(0.0, 0.0); n];
    for k in 0..n - 2 {
        let m = n - k - 1;
        let mut nrm_sq = 0.0f64;
        for r in 0..m {
            nrm_sq += a.get(k + 1 + r, k).norm_sqr();
        }
        if nrm_sq <= f64::MIN_POSITIVE {
            continue;
        }
        let nrm = nrm_sq.sqrt();
        let alpha = a.get(k + 1, k);
        let phase = if alpha.norm() > 0.0 {
            alpha / alpha.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        // Reflector mapping the column below the diagonal onto -phase*nrm*e1.
        for r in 0..m {
            v[r] = a.get(k + 1 + r, k);
        }
        v[0] += phase * nrm;
        let vnorm_sq: f64 = v[..m].iter().map(|z| z.norm_sqr()).sum();
        if vnorm_sq <= f64::MIN_POSITIVE {
            continue;
        }
        let beta = 2.0 / vnorm_sq;

        // w = beta*A*v - (beta/2)(v' beta A v) v on the trailing block.
        for i in 0..m {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..m {
                acc += a.get(k + 1 + i, k + 1 + j) * v[j];
            }
            w[i] = beta * acc;
        }
        let mut vw = C64::new(0.0, 0.0);
        for i in 0..m {
            vw += v[i].conj() * w[i];
        }
        let kappa = 0.5 * beta * vw;
        for i in 0..m {
            w[i] -= kappa * v[i];
        }

        // A <- A - v w' - w v' on the trailing block.
        for i in 0..m {
            for j in 0..m {
                let delta = v[i] * w[j].conj() + w[i] * v[j].conj();
                a.set(k + 1 + i, k + 1 + j, a.get(k + 1 + i, k + 1 + j) - delta);
            }
        }

        // Column k maps exactly onto the new subdiagonal entry.
        let sub = -phase * nrm;
        a.set(k + 1, k, sub);
        a.set(k, k + 1, sub.conj());
        for r in 1..m {
            a.set(k + 1 + r, k, C64::new(0.0, 0.0));
            a.set(k, k + 1 + r, C64::new(0.0, 0.0));
        }

        // Q <- Q * P with P = I - beta v v' on the trailing indices.
        for r in 0..n {
            let mut t = C64::new(0.0, 0.0);
            for l in 0..m {
                t += q.get(r, k + 1 + l) * v[l];
            }
            let tb = beta * t;
            for j in 0..m {
                q.set(r, k + 1 + j, q.get(r, k + 1 + j) - tb * v[j].conj());
            }
        }
    }
}

/// Implicit-shift QL on the real tridiagonal (d, e), rotations accumulated
/// into the columns of `q`. `e[i]` couples `d[i]` and `d[i+1]`.
fn ql_implicit(d: &mut [f64], e: &mut [f64], q: &mut ComplexMatrix) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    let rows = q.dim();
    let eps = f64::EPSILON;
    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::EigNonConvergence {
                        residual: e[l].abs(),
                    });
                }

                // Implicit shift from the leading 2x2.
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for i in (l + 2)..n {
                    d[i] -= h;
                }
                f += h;

                // QL sweep from m-1 down to l.
                p = d[m];
                let mut c = 1.0f64;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0f64;
                let mut s2 = 0.0f64;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    for row in 0..rows {
                        let hq = q.get(row, i + 1);
                        q.set(row, i + 1, s * q.get(row, i) + c * hq);
                        q.set(row, i, c * q.get(row, i) - s * hq);
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
    use crate::linalg::gaussian_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(dim: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = gaussian_matrix(dim, &mut rng);
        ComplexMatrix::from_fn(dim, |i, j| 0.5 * (g.get(i, j) + g.get(j, i).conj()))
    }

    fn reconstruction_residual(x: &ComplexMatrix, eig: &HermEig) -> f64 {
        let v = &eig.eigenvectors;
        let lam = ComplexMatrix::diagonal(
            &eig.eigenvalues
                .iter()
                .map(|&l| C64::new(l, 0.0))
                .collect::<Vec<_>>(),
        );
        let rebuilt = v.matmul(&lam).matmul(&v.adjoint());
        x.max_abs_diff(&rebuilt)
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let eig = herm_eig(&ComplexMatrix::identity(4)).unwrap();
        for &v in &eig.eigenvalues {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rank_one_projector_spectrum() {
        // omega_2 is the projector on the d = 2 maximally entangled state.
        let mut w = ComplexMatrix::zeros(4);
        for &(i, j) in &[(0usize, 0usize), (0, 3), (3, 0), (3, 3)] {
            w.set(i, j, C64::new(0.5, 0.0));
        }
        let eig = herm_eig(&w).unwrap();
        assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-12);
        for &v in &eig.eigenvalues[1..] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn reconstructs_random_hermitian_matrices() {
        for seed in 0..100u64 {
            let x = random_hermitian(16, seed);
            let eig = herm_eig(&x).unwrap();
            let res = reconstruction_residual(&x, &eig);
            assert!(res <= 1e-9, "seed {seed}: residual {res:.3e}");
        }
    }

    #[test]
    fn eigenvectors_are_unitary() {
        let x = random_hermitian(16, 7);
        let eig = herm_eig(&x).unwrap();
        let v = &eig.eigenvectors;
        let gram = v.adjoint().matmul(v);
        assert!(gram.approx_eq(&ComplexMatrix::identity(16), 1e-9));
    }

    #[test]
    fn eigenvalues_are_descending() {
        let x = random_hermitian(12, 8);
        let eig = herm_eig(&x).unwrap();
        for pair in eig.eigenvalues.windows(2) {
            assert!(pair[0] >= pair[1]);
        }
    }

    #[test]
    fn gram_matrices_are_psd() {
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = gaussian_matrix(10, &mut rng);
            let gram = g.adjoint().matmul(&g);
            let eig = herm_eig(&gram).unwrap();
            assert!(*eig.eigenvalues.last().unwrap() >= -1e-10);
        }
    }

    #[test]
    fn rejects_non_hermitian_input() {
        let mut x = ComplexMatrix::identity(3);
        x.set(0, 1, C64::new(0.3, 0.0));
        let err = herm_eig(&x).unwrap_err();
        assert!(matches!(err, Error::NotHermitian { .. }));
    }

    #[test]
    fn handles_degenerate_spectra() {
        // Two eigenvalue clusters with high multiplicity.
        let mut diag = vec![C64::new(2.0, 0.0); 6];
        for v in diag.iter_mut().take(3) {
            *v = C64::new(-1.0, 0.0);
        }
        let d = ComplexMatrix::diagonal(&diag);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = crate::linalg::haar_unitary(6, &mut rng);
        let x = u.matmul(&d).matmul(&u.adjoint());
        let eig = herm_eig(&x).unwrap();
        let res = reconstruction_residual(&x, &eig);
        assert!(res < 1e-10, "residual {res:.3e}");
        for &v in &eig.eigenvalues[..3] {
            assert!((v - 2.0).abs() < 1e-10);
        }
        for &v in &eig.eigenvalues[3..] {
            assert!((v + 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn one_and_two_dimensional_inputs() {
        let x1 = ComplexMatrix::diagonal(&[C64::new(3.5, 0.0)]);
        let e1 = herm_eig(&x1).unwrap();
        assert_eq!(e1.eigenvalues, vec![3.5]);

        let x2 = random_hermitian(2, 9);
        let e2 = herm_eig(&x2).unwrap();
        assert!(reconstruction_residual(&x2, &e2) < 1e-12);
    }
}
