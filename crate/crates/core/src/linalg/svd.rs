//! Singular values by the one-sided Jacobi method.
//!
//! Columns are rotated pairwise until mutually orthogonal; their norms are
//! then the singular values. Small singular values come out with full
//! absolute accuracy, which the Schmidt-rank tooling relies on.

use super::C64;

const MAX_SWEEPS: usize = 60;
const ORTHO_TOL: f64 = 1e-14;

/// Singular values of the row-major `rows` x `cols` matrix, descending.
/// Returns `min(rows, cols)` values.
pub fn singular_values(entries: &[C64], rows: usize, cols: usize) -> Vec<f64> {
    assert_eq!(entries.len(), rows * cols, "matricization size mismatch");
    // Work on the transpose when it is wider than tall; same spectrum.
    let transposed = cols > rows;
    let (len, nc) = if transposed {
        (cols, rows)
    } else {
        (rows, cols)
    };
    let mut col: Vec<Vec<C64>> = (0..nc)
        .map(|j| {
            (0..len)
                .map(|i| {
                    if transposed {
                        entries[j * cols + i]
                    } else {
                        entries[i * cols + j]
                    }
                })
                .collect()
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..nc {
            for qi in (p + 1)..nc {
                let (head, tail) = col.split_at_mut(qi);
                let cp = &mut head[p];
                let cq = &mut tail[0];
                let mut app = 0.0f64;
                let mut aqq = 0.0f64;
                let mut apq = C64::new(0.0, 0.0);
                for i in 0..len {
                    app += cp[i].norm_sqr();
                    aqq += cq[i].norm_sqr();
                    apq += cp[i].conj() * cq[i];
                }
                let scale = (app * aqq).sqrt();
                if scale == 0.0 || apq.norm() <= ORTHO_TOL * scale {
                    continue;
                }
                rotated = true;
                let g = apq.norm();
                let psi = apq / g;
                // Absorb the phase into column q, then rotate with real angles.
                for z in cq.iter_mut() {
                    *z *= psi.conj();
                }
                let zeta = (aqq - app) / (2.0 * g);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..len {
                    let vp = cp[i];
                    let vq = cq[i];
                    cp[i] = c * vp - s * vq;
                    cq[i] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<f64> = col
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    sv
}
