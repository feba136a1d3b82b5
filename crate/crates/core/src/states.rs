//! State construction and validation: the PPT family, reference states,
//! and Schmidt-number diagnostics.

use crate::error::{Error, Result};
use crate::linalg::{self, Bipartition, ComplexMatrix, C64};
use crate::tol;

/// Default threshold below which a Schmidt coefficient counts as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Guard subtracted before the ceiling in the fidelity witness, so fidelity
/// values that are exactly k/d cannot round up to an unjustified k+1.
const CEIL_GUARD: f64 = 1e-9;

pub const FAMILY_MIN_D: usize = 4;
pub const FAMILY_MAX_D: usize = 64;

/// Validated quantum state with its A|B split.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    mat: ComplexMatrix,
    part: Bipartition,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace, and positivity at construction.
    pub fn new(mat: ComplexMatrix, part: Bipartition) -> Result<Self> {
        part.check(mat.dim())?;
        let herm = mat.hermiticity_residual();
        if herm > tol::STRUCTURAL {
            return Err(Error::invariant("state hermiticity", herm));
        }
        let trace_res = (mat.trace() - C64::new(1.0, 0.0)).norm();
        if trace_res > tol::STRUCTURAL {
            return Err(Error::invariant("state unit trace", trace_res));
        }
        linalg::check_psd(&mat, "state")?;
        Ok(Self { mat, part })
    }

    /// Skips the invariant checks. For use where validity is inherited by
    /// construction (tensor powers of validated states, partial transposes
    /// that were just checked for positivity).
    pub fn new_unchecked(mat: ComplexMatrix, part: Bipartition) -> Self {
        debug_assert_eq!(mat.dim(), part.total());
        Self { mat, part }
    }

    pub fn maximally_mixed(part: Bipartition) -> Self {
        let dim = part.total();
        Self::new_unchecked(
            ComplexMatrix::identity(dim).scale_re(1.0 / dim as f64),
            part,
        )
    }

    /// Projector onto the given (normalized) state vector.
    pub fn from_pure(psi: &[C64], part: Bipartition) -> Result<Self> {
        if psi.len() != part.total() {
            return Err(Error::BipartitionMismatch {
                dim_a: part.dim_a,
                dim_b: part.dim_b,
                dim: psi.len(),
            });
        }
        let dim = psi.len();
        let mat = ComplexMatrix::from_fn(dim, |i, j| psi[i] * psi[j].conj());
        Self::new(mat, part)
    }

    pub fn mat(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn part(&self) -> Bipartition {
        self.part
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn partial_transpose(&self) -> ComplexMatrix {
        linalg::partial_transpose(&self.mat, self.part).expect("bipartition validated")
    }
}

/// Projector omega_d onto the maximally entangled state of local dimension
/// d: entries [(i,i),(j,j)] = 1/d, zero elsewhere.
pub fn max_entangled_projector(d: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d * d);
    let amp = 1.0 / d as f64;
    for i in 0..d {
        for j in 0..d {
            m.set(i * d + i, j * d + j, C64::new(amp, 0.0));
        }
    }
    m
}

/// The vector (1/sqrt(d)) sum_i |ii>.
pub fn max_entangled_vector(d: usize) -> Vec<C64> {
    let mut psi = vec![C64::new(0.0, 0.0); d * d];
    let amp = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        psi[i * d + i] = C64::new(amp, 0.0);
    }
    psi
}

/// Member of the PPT state family, with the externally claimed Schmidt
/// bounds carried as metadata. The claims come from cited results and are
/// never re-proven or asserted by this crate's tests.
#[derive(Debug, Clone)]
pub struct FamilyState {
    d: usize,
    state: DensityOperator,
    claimed_schmidt_lower: usize,
    claimed_pt_schmidt_upper: usize,
}

impl FamilyState {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn state(&self) -> &DensityOperator {
        &self.state
    }

    /// Normalization denominator 3d^2/4 + d/2 - 2 (integer for even d).
    pub fn denominator(&self) -> usize {
        family_denominator(self.d)
    }

    /// External claim: Schmidt number of the state is at least ceil(d/4).
    pub fn claimed_schmidt_lower(&self) -> usize {
        self.claimed_schmidt_lower
    }

    /// External claim: Schmidt number of the partial transpose is at most 4.
    pub fn claimed_pt_schmidt_upper(&self) -> usize {
        self.claimed_pt_schmidt_upper
    }
}

pub fn family_denominator(d: usize) -> usize {
    3 * d * d / 4 + d / 2 - 2
}

/// Builds the family member of even local dimension d:
///
///   [(1_4 - w_2) (x) (1_{d^2/4} - w_{d/2}) + (d/2 + 1) w_2 (x) w_{d/2}]
///   normalized by 3d^2/4 + d/2 - 2,
///
/// with the factors regrouped so the bipartition is (A1 A2 | B1 B2) of local
/// dimension d on each side. The 4-dimensional factor lives on A1 B1, the
/// (d/2)^2-dimensional one on A2 B2. All state invariants plus positivity of
/// the partial transpose are verified before returning.
pub fn build_family_state(d: usize) -> Result<FamilyState> {
    if !d.is_multiple_of(2) || !(FAMILY_MIN_D..=FAMILY_MAX_D).contains(&d) {
        return Err(Error::Domain(format!(
            "family dimension must be even and in {FAMILY_MIN_D}..={FAMILY_MAX_D}, got {d}"
        )));
    }
    let half = d / 2;
    let omega2 = max_entangled_projector(2);
    let omega_half = max_entangled_projector(half);
    let comp4 = ComplexMatrix::identity(4).sub(&omega2);
    let comp_rest = ComplexMatrix::identity(half * half).sub(&omega_half);
    let weight = (half + 1) as f64;
    let numerator = linalg::tensor(&comp4, &comp_rest)?
        .add(&linalg::tensor(&omega2, &omega_half)?.scale_re(weight));
    let mat = numerator.scale_re(1.0 / family_denominator(d) as f64);
    let grouped = regroup_to_bipartition(&mat, &[(2, 2), (half, half)])?;
    let part = Bipartition::new(d, d);
    let state = DensityOperator::new(grouped, part)?;
    linalg::check_psd(&state.partial_transpose(), "family state ppt")?;
    Ok(FamilyState {
        d,
        state,
        claimed_schmidt_lower: d.div_ceil(4),
        claimed_pt_schmidt_upper: 4,
    })
}

fn regroup_permutation(local_dims: &[(usize, usize)]) -> Vec<usize> {
    let n = local_dims.len();
    // Old digit order (a1, b1, a2, b2, ...); new order (a1 .. an, b1 .. bn).
    let mut dims_old = Vec::with_capacity(2 * n);
    for &(da, db) in local_dims {
        dims_old.push(da);
        dims_old.push(db);
    }
    let mut dims_new = Vec::with_capacity(2 * n);
    for &(da, _) in local_dims {
        dims_new.push(da);
    }
    for &(_, db) in local_dims {
        dims_new.push(db);
    }
    // new position of old digit 2i is i; of old digit 2i+1 is n + i
    let mut new_pos = vec![0usize; 2 * n];
    for i in 0..n {
        new_pos[2 * i] = i;
        new_pos[2 * i + 1] = n + i;
    }
    let mut strides_new = vec![1usize; 2 * n];
    for p in (0..2 * n - 1).rev() {
        strides_new[p] = strides_new[p + 1] * dims_new[p + 1];
    }
    let total: usize = dims_old.iter().product();
    let mut perm = vec![0usize; total];
    for (v, slot) in perm.iter_mut().enumerate() {
        let mut rest = v;
        let mut w = 0usize;
        for pos in (0..2 * n).rev() {
            let digit = rest % dims_old[pos];
            rest /= dims_old[pos];
            w += digit * strides_new[new_pos[pos]];
        }
        *slot = w;
    }
    perm
}

fn permute_conjugate(x: &ComplexMatrix, perm: &[usize]) -> ComplexMatrix {
    let n = x.dim();
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out.set(perm[i], perm[j], x.get(i, j));
        }
    }
    out
}

/// Permutes a matrix written factor-by-factor on (A1 B1)(A2 B2)... into the
/// global (A1..An | B1..Bn) index order. Exact (entries are only moved).
pub fn regroup_to_bipartition(
    x: &ComplexMatrix,
    local_dims: &[(usize, usize)],
) -> Result<ComplexMatrix> {
    let total: usize = local_dims.iter().map(|&(a, b)| a * b).product();
    if total != x.dim() {
        return Err(Error::DimensionMismatch {
            left: total,
            right: x.dim(),
        });
    }
    Ok(permute_conjugate(x, &regroup_permutation(local_dims)))
}

/// Inverse of [`regroup_to_bipartition`].
pub fn regroup_from_bipartition(
    x: &ComplexMatrix,
    local_dims: &[(usize, usize)],
) -> Result<ComplexMatrix> {
    let total: usize = local_dims.iter().map(|&(a, b)| a * b).product();
    if total != x.dim() {
        return Err(Error::DimensionMismatch {
            left: total,
            right: x.dim(),
        });
    }
    let perm = regroup_permutation(local_dims);
    let mut inverse = vec![0usize; perm.len()];
    for (old, &new) in perm.iter().enumerate() {
        inverse[new] = old;
    }
    Ok(permute_conjugate(x, &inverse))
}

/// Certified lower bound on the Schmidt number from the fidelity with the
/// maximally entangled state: ceil(d * Tr(w_d rho)), clamped to [1, d].
/// Generally far from tight.
pub fn fidelity_witness_lower_bound(rho: &DensityOperator) -> Result<usize> {
    let part = rho.part();
    if part.dim_a != part.dim_b {
        return Err(Error::Domain(format!(
            "fidelity witness needs a square bipartition, got {}x{}",
            part.dim_a, part.dim_b
        )));
    }
    let d = part.dim_a;
    let omega = max_entangled_projector(d);
    let fidelity = linalg::hs_inner(&omega, rho.mat())?.re;
    let bound = (d as f64 * fidelity - CEIL_GUARD).ceil() as isize;
    Ok(bound.clamp(1, d as isize) as usize)
}

/// Number of Schmidt coefficients of the (normalized) vector strictly above
/// `tol`.
pub fn schmidt_rank_pure(psi: &[C64], part: Bipartition, tol: f64) -> Result<usize> {
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > crate::tol::STRUCTURAL {
        return Err(Error::Domain(format!(
            "state vector is not normalized: |psi| = {norm}"
        )));
    }
    let sv = linalg::schmidt_coefficients(psi, part)?;
    Ok(sv.into_iter().filter(|&s| s > tol).count())
}
