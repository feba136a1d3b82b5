//! Seeded random matrices: complex Gaussian samples and Haar unitaries.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{ComplexMatrix, C64};

/// Matrix of iid standard complex Gaussian entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let entries = (0..dim * dim)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re * inv_sqrt2, im * inv_sqrt2)
        })
        .collect();
    ComplexMatrix { dim, entries }
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the R
/// diagonal kept real positive, which is the phase convention that makes Q
/// Haar. Gram-Schmidt runs twice per column to hold orthogonality at
/// machine level.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    assert!(dim >= 1, "unitary dimension must be positive");
    let g = gaussian_matrix(dim, rng);
    let mut cols: Vec<Vec<C64>> = (0..dim)
        .map(|j| (0..dim).map(|i| g.get(i, j)).collect())
        .collect();
    for j in 0..dim {
        for _ in 0..2 {
            let (head, tail) = cols.split_at_mut(j);
            let cj = &mut tail[0];
            for ci in head.iter() {
                let mut r = C64::new(0.0, 0.0);
                for k in 0..dim {
                    r += ci[k].conj() * cj[k];
                }
                for k in 0..dim {
                    cj[k] -= r * ci[k];
                }
            }
        }
        let nrm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in cols[j].iter_mut() {
            *z /= nrm;
        }
    }
    ComplexMatrix::from_fn(dim, |i, j| cols[j][i])
}
