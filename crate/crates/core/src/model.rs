//! Hidden quantum models: behavior simulation, the partial-transpose
//! construction, and its sequential and multi-copy extensions.

use crate::error::{Error, Result};
use crate::linalg::{self, Bipartition, ComplexMatrix};
use crate::measurements::{
    effective_sequential_povm, KrausInstrument, MeasurementAssignment, MAX_OUTCOME_TUPLES,
};
use crate::states::{regroup_to_bipartition, DensityOperator, FamilyState};
use crate::tol;

/// Longest supported measurement chain.
pub const MAX_CHAIN_LEN: usize = 4;

/// Where a claimed Schmidt bound comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Proven in cited work; recorded, never re-derived here.
    ExternalClaim,
    /// Certified by the fidelity witness on this machine.
    WitnessCertified,
}

/// A claimed Schmidt bound together with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchmidtBound {
    pub value: usize,
    pub provenance: Provenance,
}

impl SchmidtBound {
    pub fn external_claim(value: usize) -> Self {
        Self {
            value,
            provenance: Provenance::ExternalClaim,
        }
    }

    pub fn witness_certified(value: usize) -> Self {
        Self {
            value,
            provenance: Provenance::WitnessCertified,
        }
    }
}

/// Joint conditional probability table p(a, b | x, y), stored dense with
/// index (((x * num_y + y) * num_a + a) * num_b + b).
#[derive(Debug, Clone)]
pub struct BehaviorTable {
    num_x: usize,
    num_y: usize,
    num_a: usize,
    num_b: usize,
    probs: Vec<f64>,
}

impl BehaviorTable {
    pub fn new(
        num_x: usize,
        num_y: usize,
        num_a: usize,
        num_b: usize,
        probs: Vec<f64>,
    ) -> Result<Self> {
        if probs.len() != num_x * num_y * num_a * num_b {
            return Err(Error::ShapeMismatch);
        }
        let table = Self {
            num_x,
            num_y,
            num_a,
            num_b,
            probs,
        };
        table.validate()?;
        Ok(table)
    }

    #[inline]
    fn idx(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        ((x * self.num_y + y) * self.num_a + a) * self.num_b + b
    }

    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.probs[self.idx(x, y, a, b)]
    }

    /// (num settings x, num settings y, num outcomes a, num outcomes b)
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.num_x, self.num_y, self.num_a, self.num_b)
    }

    /// Range, normalization, and no-signalling checks.
    pub fn validate(&self) -> Result<()> {
        for &p in &self.probs {
            if !(-tol::PROB_RANGE..=1.0 + tol::PROB_RANGE).contains(&p) {
                let overshoot = if p < 0.0 { -p } else { p - 1.0 };
                return Err(Error::invariant("probability range", overshoot));
            }
        }
        let norm = self.normalization_residual();
        if norm > tol::STRUCTURAL {
            return Err(Error::invariant("behavior normalization", norm));
        }
        let ns = self.no_signalling_residual();
        if ns > tol::STRUCTURAL {
            return Err(Error::invariant("no-signalling", ns));
        }
        Ok(())
    }

    /// Max over settings of |sum_ab p(ab|xy) - 1|.
    pub fn normalization_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for x in 0..self.num_x {
            for y in 0..self.num_y {
                let mut total = 0.0;
                for a in 0..self.num_a {
                    for b in 0..self.num_b {
                        total += self.get(x, y, a, b);
                    }
                }
                worst = worst.max((total - 1.0).abs());
            }
        }
        worst
    }

    /// Largest spread of a local marginal across the distant setting.
    pub fn no_signalling_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        // Alice's marginal must not depend on y.
        for x in 0..self.num_x {
            for a in 0..self.num_a {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for y in 0..self.num_y {
                    let m: f64 = (0..self.num_b).map(|b| self.get(x, y, a, b)).sum();
                    lo = lo.min(m);
                    hi = hi.max(m);
                }
                worst = worst.max(hi - lo);
            }
        }
        // Bob's marginal must not depend on x.
        for y in 0..self.num_y {
            for b in 0..self.num_b {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for x in 0..self.num_x {
                    let m: f64 = (0..self.num_a).map(|a| self.get(x, y, a, b)).sum();
                    lo = lo.min(m);
                    hi = hi.max(m);
                }
                worst = worst.max(hi - lo);
            }
        }
        worst
    }

    /// Worst residual across the table's structural checks, for reports.
    pub fn max_residual(&self) -> f64 {
        self.normalization_residual()
            .max(self.no_signalling_residual())
    }
}

/// Max over settings of the total variation distance between two tables.
pub fn behavior_distance(p: &BehaviorTable, q: &BehaviorTable) -> Result<f64> {
    if p.dims() != q.dims() {
        return Err(Error::ShapeMismatch);
    }
    let (nx, ny, na, nb) = p.dims();
    let mut worst = 0.0f64;
    for x in 0..nx {
        for y in 0..ny {
            let mut tv = 0.0;
            for a in 0..na {
                for b in 0..nb {
                    tv += (p.get(x, y, a, b) - q.get(x, y, a, b)).abs();
                }
            }
            worst = worst.max(0.5 * tv);
        }
    }
    Ok(worst)
}

/// A state, measurement assignments for both sides, and the claimed Schmidt
/// bounds of the state and of its partial transpose. The two bounds travel
/// together because the transform swaps them.
#[derive(Debug, Clone)]
pub struct HqModel {
    state: DensityOperator,
    alice: MeasurementAssignment,
    bob: MeasurementAssignment,
    schmidt_bound: SchmidtBound,
    pt_schmidt_bound: SchmidtBound,
}

impl HqModel {
    pub fn new(
        state: DensityOperator,
        alice: MeasurementAssignment,
        bob: MeasurementAssignment,
        schmidt_bound: SchmidtBound,
        pt_schmidt_bound: SchmidtBound,
    ) -> Result<Self> {
        let part = state.part();
        if alice.dim() != part.dim_a {
            return Err(Error::DimensionMismatch {
                left: alice.dim(),
                right: part.dim_a,
            });
        }
        if bob.dim() != part.dim_b {
            return Err(Error::DimensionMismatch {
                left: bob.dim(),
                right: part.dim_b,
            });
        }
        Ok(Self {
            state,
            alice,
            bob,
            schmidt_bound,
            pt_schmidt_bound,
        })
    }

    pub fn state(&self) -> &DensityOperator {
        &self.state
    }

    pub fn alice(&self) -> &MeasurementAssignment {
        &self.alice
    }

    pub fn bob(&self) -> &MeasurementAssignment {
        &self.bob
    }

    pub fn schmidt_bound(&self) -> SchmidtBound {
        self.schmidt_bound
    }

    pub fn pt_schmidt_bound(&self) -> SchmidtBound {
        self.pt_schmidt_bound
    }

    pub fn simulate(&self) -> Result<BehaviorTable> {
        simulate_behavior(&self.state, &self.alice, &self.bob)
    }
}

impl FamilyState {
    /// Model of this family member with the externally claimed bounds
    /// attached.
    pub fn hq_model(
        &self,
        alice: MeasurementAssignment,
        bob: MeasurementAssignment,
    ) -> Result<HqModel> {
        HqModel::new(
            self.state().clone(),
            alice,
            bob,
            SchmidtBound::external_claim(self.claimed_schmidt_lower()),
            SchmidtBound::external_claim(self.claimed_pt_schmidt_upper()),
        )
    }
}

/// p(a, b | x, y) = Re Tr((M_{a|x} (x) M_{b|y}) rho). The imaginary residue
/// is tracked and must stay below tolerance.
pub fn simulate_behavior(
    state: &DensityOperator,
    alice: &MeasurementAssignment,
    bob: &MeasurementAssignment,
) -> Result<BehaviorTable> {
    let part = state.part();
    if alice.dim() != part.dim_a {
        return Err(Error::DimensionMismatch {
            left: alice.dim(),
            right: part.dim_a,
        });
    }
    if bob.dim() != part.dim_b {
        return Err(Error::DimensionMismatch {
            left: bob.dim(),
            right: part.dim_b,
        });
    }
    let (nx, ny, na, nb) = (
        alice.num_settings(),
        bob.num_settings(),
        alice.outcomes(),
        bob.outcomes(),
    );
    let mut probs = Vec::with_capacity(nx * ny * na * nb);
    let mut max_imag = 0.0f64;
    for x in 0..nx {
        for y in 0..ny {
            for a in 0..na {
                for b in 0..nb {
                    let z = linalg::product_expectation(
                        alice.povm(x).effect(a),
                        bob.povm(y).effect(b),
                        state.mat(),
                        part,
                    )?;
                    max_imag = max_imag.max(z.im.abs());
                    probs.push(z.re);
                }
            }
        }
    }
    if max_imag > tol::STRUCTURAL {
        return Err(Error::invariant("probability imaginary residue", max_imag));
    }
    BehaviorTable::new(nx, ny, na, nb, probs)
}

/// Partial transpose of a state, checked for positivity, as a new state.
pub fn pt_state(state: &DensityOperator) -> Result<DensityOperator> {
    let pt = state.partial_transpose();
    let eig = linalg::herm_eig(&pt)?;
    let min_eigenvalue = *eig.eigenvalues.last().expect("dim is positive");
    if min_eigenvalue < tol::EIG_FLOOR {
        return Err(Error::NotPpt { min_eigenvalue });
    }
    // Partial transposition preserves Hermiticity and trace entrywise, and
    // positivity was checked above, so the invariants hold as-is.
    Ok(DensityOperator::new_unchecked(pt, state.part()))
}

/// The hidden-model construction: transpose the state on B, leave Alice
/// untouched, transpose Bob's effects, and swap the bound metadata. The
/// input state must be PPT, otherwise the output would not be a state.
pub fn hq_transform(model: &HqModel) -> Result<HqModel> {
    let state = pt_state(model.state())?;
    Ok(HqModel {
        state,
        alice: model.alice().clone(),
        bob: model.bob().transposed(),
        schmidt_bound: model.pt_schmidt_bound(),
        pt_schmidt_bound: model.schmidt_bound(),
    })
}

/// Bob's sequential measurement: one instrument per (step, setting), with a
/// uniform dimension, and uniform outcome counts within each step.
#[derive(Debug, Clone)]
pub struct SequentialAssignment {
    steps: Vec<Vec<KrausInstrument>>,
}

impl SequentialAssignment {
    pub fn new(steps: Vec<Vec<KrausInstrument>>) -> Result<Self> {
        let first = steps
            .first()
            .and_then(|s| s.first())
            .ok_or_else(|| Error::Domain("a chain needs at least one step and setting".into()))?;
        let dim = first.dim();
        for step in &steps {
            let outcomes = step
                .first()
                .ok_or_else(|| Error::Domain("every step needs at least one setting".into()))?
                .outcomes();
            for inst in step {
                if inst.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        left: dim,
                        right: inst.dim(),
                    });
                }
                if inst.outcomes() != outcomes {
                    return Err(Error::Domain(format!(
                        "instruments within a step must share an outcome count: {} vs {}",
                        outcomes,
                        inst.outcomes()
                    )));
                }
            }
        }
        Ok(Self { steps })
    }

    pub fn dim(&self) -> usize {
        self.steps[0][0].dim()
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn settings_at(&self, step: usize) -> usize {
        self.steps[step].len()
    }

    pub fn outcomes_at(&self, step: usize) -> usize {
        self.steps[step][0].outcomes()
    }

    pub fn instrument(&self, step: usize, setting: usize) -> &KrausInstrument {
        &self.steps[step][setting]
    }

    /// Number of distinct setting tuples.
    pub fn setting_tuples(&self) -> usize {
        (0..self.num_steps()).map(|s| self.settings_at(s)).product()
    }

    /// Number of distinct outcome tuples.
    pub fn outcome_tuples(&self) -> usize {
        (0..self.num_steps()).map(|s| self.outcomes_at(s)).product()
    }

    /// Instruments selected by one setting tuple, decoded from its
    /// lexicographic index (first step slowest).
    pub fn chain_for(&self, mut tuple_index: usize) -> Vec<&KrausInstrument> {
        let m = self.num_steps();
        let mut settings = vec![0usize; m];
        for s in (0..m).rev() {
            settings[s] = tuple_index % self.settings_at(s);
            tuple_index /= self.settings_at(s);
        }
        settings
            .iter()
            .enumerate()
            .map(|(s, &y)| self.instrument(s, y))
            .collect()
    }

    pub fn conjugated(&self) -> SequentialAssignment {
        SequentialAssignment {
            steps: self
                .steps
                .iter()
                .map(|step| step.iter().map(KrausInstrument::conjugated).collect())
                .collect(),
        }
    }
}

/// Chain transform paired with the state transpose: every instrument is
/// replaced by its entrywise conjugate.
pub fn sequential_hq_transform(bob_chain: &SequentialAssignment) -> SequentialAssignment {
    bob_chain.conjugated()
}

/// Worst entrywise deviation, over all setting tuples, between the effective
/// POVM of the conjugated chain and the transpose of the original chain's:
/// the operator identity (F1'..Fm' Fm..F1)^T = (F1*)'..(Fm*)' Fm*..F1*.
pub fn effective_povm_transpose_residual(chain: &SequentialAssignment) -> Result<f64> {
    let conj = chain.conjugated();
    let mut worst = 0.0f64;
    for y in 0..chain.setting_tuples() {
        let direct = effective_sequential_povm(&chain.chain_for(y))?;
        let dual = effective_sequential_povm(&conj.chain_for(y))?;
        for (e, f) in direct.effects().iter().zip(dual.effects()) {
            worst = worst.max(e.transpose().max_abs_diff(f));
        }
    }
    Ok(worst)
}

/// Behavior over outcome tuples: Alice measures a plain POVM per setting,
/// Bob applies a chain of instruments. Both the setting-tuple and the
/// outcome-tuple axes are flattened lexicographically, first step slowest.
pub fn simulate_sequential(
    state: &DensityOperator,
    alice: &MeasurementAssignment,
    bob_chain: &SequentialAssignment,
) -> Result<BehaviorTable> {
    let part = state.part();
    if alice.dim() != part.dim_a {
        return Err(Error::DimensionMismatch {
            left: alice.dim(),
            right: part.dim_a,
        });
    }
    if bob_chain.dim() != part.dim_b {
        return Err(Error::DimensionMismatch {
            left: bob_chain.dim(),
            right: part.dim_b,
        });
    }
    if bob_chain.num_steps() > MAX_CHAIN_LEN {
        return Err(Error::Capacity {
            what: "chain length".into(),
            value: bob_chain.num_steps(),
            max: MAX_CHAIN_LEN,
        });
    }
    let nb = bob_chain.outcome_tuples();
    if nb > MAX_OUTCOME_TUPLES {
        return Err(Error::Capacity {
            what: "outcome tuples".into(),
            value: nb,
            max: MAX_OUTCOME_TUPLES,
        });
    }
    let (nx, ny, na) = (
        alice.num_settings(),
        bob_chain.setting_tuples(),
        alice.outcomes(),
    );
    let mut probs = vec![0.0f64; nx * ny * na * nb];
    let mut max_imag = 0.0f64;
    for y in 0..ny {
        let effective = effective_sequential_povm(&bob_chain.chain_for(y))?;
        for x in 0..nx {
            for a in 0..na {
                for b in 0..nb {
                    let z = linalg::product_expectation(
                        alice.povm(x).effect(a),
                        effective.effect(b),
                        state.mat(),
                        part,
                    )?;
                    max_imag = max_imag.max(z.im.abs());
                    probs[((x * ny + y) * na + a) * nb + b] = z.re;
                }
            }
        }
    }
    if max_imag > tol::STRUCTURAL {
        return Err(Error::invariant("probability imaginary residue", max_imag));
    }
    BehaviorTable::new(nx, ny, na, nb, probs)
}

/// n regrouped copies of a family state, with the claimed bound for the
/// partial transpose (4 per copy) carried as metadata.
#[derive(Debug, Clone)]
pub struct MultiCopyState {
    d: usize,
    copies: usize,
    state: DensityOperator,
    pt_schmidt_bound: SchmidtBound,
}

impl MultiCopyState {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn state(&self) -> &DensityOperator {
        &self.state
    }

    pub fn pt_schmidt_bound(&self) -> SchmidtBound {
        self.pt_schmidt_bound
    }
}

/// n-fold tensor power of the family state, regrouped to the global
/// (A-copies | B-copies) bipartition of local dimension d^n.
pub fn multicopy_state(fs: &FamilyState, copies: usize) -> Result<MultiCopyState> {
    if copies == 0 {
        return Err(Error::Domain("copies must be at least 1".into()));
    }
    let d = fs.d();
    let single = d * d;
    let mut total: usize = 1;
    for _ in 0..copies {
        total = total
            .checked_mul(single)
            .filter(|&t| t <= linalg::max_dim())
            .ok_or(Error::Capacity {
                what: "multi-copy dimension".into(),
                value: total.saturating_mul(single),
                max: linalg::max_dim(),
            })?;
    }
    let mut mat = fs.state().mat().clone();
    for _ in 1..copies {
        mat = linalg::tensor(&mat, fs.state().mat())?;
    }
    let grouped = regroup_to_bipartition(&mat, &vec![(d, d); copies])?;
    let local = d.pow(copies as u32);
    // Tensor powers of a validated state inherit its invariants.
    let state = DensityOperator::new_unchecked(grouped, Bipartition::new(local, local));
    Ok(MultiCopyState {
        d,
        copies,
        state,
        pt_schmidt_bound: SchmidtBound::external_claim(4usize.pow(copies as u32)),
    })
}

/// Regrouped tensor power of an arbitrary matrix on the same cut as
/// [`multicopy_state`]; used to check tensor stability of the transpose.
pub fn multicopy_matrix(
    single: &ComplexMatrix,
    part: Bipartition,
    copies: usize,
) -> Result<ComplexMatrix> {
    part.check(single.dim())?;
    let mut mat = single.clone();
    for _ in 1..copies {
        mat = linalg::tensor(&mat, single)?;
    }
    regroup_to_bipartition(&mat, &vec![(part.dim_a, part.dim_b); copies])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurements::{random_assignment, random_instrument, Povm};
    use crate::seed::{derive_seed, streams};
    use crate::states::{build_family_state, max_entangled_projector};

    fn family_model(d: usize, seed: u64) -> HqModel {
        let fs = build_family_state(d).unwrap();
        let alice = random_assignment(d, 2, 3, derive_seed(seed, streams::ALICE, 0)).unwrap();
        let bob = random_assignment(d, 2, 3, derive_seed(seed, streams::BOB, 0)).unwrap();
        fs.hq_model(alice, bob).unwrap()
    }

    #[test]
    fn maximally_mixed_behavior_factorizes() {
        let part = Bipartition::new(3, 3);
        let rho = DensityOperator::maximally_mixed(part);
        let alice = random_assignment(3, 2, 2, 5).unwrap();
        let bob = random_assignment(3, 2, 2, 6).unwrap();
        let table = simulate_behavior(&rho, &alice, &bob).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        let expected = alice.povm(x).effect(a).trace().re
                            * bob.povm(y).effect(b).trace().re
                            / 9.0;
                        assert!((table.get(x, y, a, b) - expected).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn omega2_with_basis_measurements_is_perfectly_correlated() {
        let part = Bipartition::new(2, 2);
        let rho = DensityOperator::new(max_entangled_projector(2), part).unwrap();
        let basis = MeasurementAssignment::new(vec![Povm::computational_basis(2)]).unwrap();
        let table = simulate_behavior(&rho, &basis, &basis).unwrap();
        assert!((table.get(0, 0, 0, 0) - 0.5).abs() < 1e-14);
        assert!((table.get(0, 0, 1, 1) - 0.5).abs() < 1e-14);
        assert!(table.get(0, 0, 0, 1).abs() < 1e-14);
        assert!(table.get(0, 0, 1, 0).abs() < 1e-14);
    }

    #[test]
    fn family_behavior_is_normalized() {
        let fs = build_family_state(4).unwrap();
        let alice = random_assignment(4, 2, 4, 21).unwrap();
        let bob = random_assignment(4, 2, 4, 22).unwrap();
        let table = simulate_behavior(fs.state(), &alice, &bob).unwrap();
        assert!(table.normalization_residual() <= 1e-10);
        assert!(table.no_signalling_residual() <= 1e-10);
    }

    #[test]
    fn transform_fixes_the_maximally_mixed_state() {
        let part = Bipartition::new(2, 2);
        let rho = DensityOperator::maximally_mixed(part);
        let alice = random_assignment(2, 2, 2, 31).unwrap();
        let bob = random_assignment(2, 2, 2, 32).unwrap();
        let model = HqModel::new(
            rho.clone(),
            alice,
            bob,
            SchmidtBound::witness_certified(1),
            SchmidtBound::witness_certified(1),
        )
        .unwrap();
        let transformed = hq_transform(&model).unwrap();
        assert!(transformed.state().mat().approx_eq(rho.mat(), 0.0));
    }

    #[test]
    fn transform_of_family_model_is_a_valid_model() {
        let model = family_model(8, 41);
        let transformed = hq_transform(&model).unwrap();
        // re-run the full validations explicitly
        DensityOperator::new(
            transformed.state().mat().clone(),
            transformed.state().part(),
        )
        .unwrap();
        for povm in transformed.bob().povms() {
            povm.validate().unwrap();
        }
        assert_eq!(transformed.schmidt_bound().value, 4);
        assert_eq!(
            transformed.schmidt_bound().provenance,
            Provenance::ExternalClaim
        );
    }

    #[test]
    fn transform_is_an_involution() {
        let model = family_model(4, 43);
        let back = hq_transform(&hq_transform(&model).unwrap()).unwrap();
        assert!(back.state().mat().approx_eq(model.state().mat(), 1e-12));
        for (p, q) in back.bob().povms().iter().zip(model.bob().povms()) {
            for (e, f) in p.effects().iter().zip(q.effects()) {
                assert!(e.approx_eq(f, 1e-12));
            }
        }
        assert_eq!(back.schmidt_bound(), model.schmidt_bound());
    }

    #[test]
    fn transform_rejects_non_ppt_states() {
        let part = Bipartition::new(2, 2);
        let rho = DensityOperator::new(max_entangled_projector(2), part).unwrap();
        let alice = random_assignment(2, 2, 2, 51).unwrap();
        let bob = random_assignment(2, 2, 2, 52).unwrap();
        let model = HqModel::new(
            rho,
            alice,
            bob,
            SchmidtBound::external_claim(2),
            SchmidtBound::external_claim(2),
        )
        .unwrap();
        match hq_transform(&model) {
            Err(Error::NotPpt { min_eigenvalue }) => {
                assert!((min_eigenvalue + 0.5).abs() < 1e-10);
            }
            other => panic!("expected NotPpt, got {other:?}"),
        }
    }

    #[test]
    fn behavior_distance_basics() {
        let p = BehaviorTable::new(1, 1, 2, 1, vec![1.0, 0.0]).unwrap();
        let q = BehaviorTable::new(1, 1, 2, 1, vec![0.0, 1.0]).unwrap();
        assert_eq!(behavior_distance(&p, &p).unwrap(), 0.0);
        assert!((behavior_distance(&p, &q).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn behavior_distance_rejects_shape_mismatch() {
        let p = BehaviorTable::new(1, 1, 2, 1, vec![1.0, 0.0]).unwrap();
        let q = BehaviorTable::new(1, 1, 1, 2, vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            behavior_distance(&p, &q),
            Err(Error::ShapeMismatch)
        ));
    }

    #[test]
    fn behavior_of_family_state_matches_its_transform() {
        let model = family_model(8, 61);
        let p = model.simulate().unwrap();
        let q = hq_transform(&model).unwrap().simulate().unwrap();
        let tv = behavior_distance(&p, &q).unwrap();
        assert!(tv <= 1e-10, "tv distance {tv:.3e}");
    }

    #[test]
    fn transform_without_transposing_bob_changes_the_behavior() {
        // Negative control: the equality needs both halves of the transform.
        let model = family_model(8, 61);
        let p = model.simulate().unwrap();
        let wrong = simulate_behavior(
            &pt_state(model.state()).unwrap(),
            model.alice(),
            model.bob(),
        )
        .unwrap();
        let tv = behavior_distance(&p, &wrong).unwrap();
        assert!(tv > 1e-4, "transpose pairing looks trivial: tv = {tv:.3e}");
    }

    fn random_chain(
        dim: usize,
        steps: usize,
        settings: usize,
        outcomes: usize,
        seed: u64,
    ) -> SequentialAssignment {
        let steps = (0..steps)
            .map(|s| {
                (0..settings)
                    .map(|y| {
                        random_instrument(
                            dim,
                            outcomes,
                            derive_seed(
                                seed,
                                streams::INSTRUMENT_STEP,
                                ((s as u64) << 16) | y as u64,
                            ),
                        )
                        .unwrap()
                    })
                    .collect()
            })
            .collect();
        SequentialAssignment::new(steps).unwrap()
    }

    #[test]
    fn single_step_chain_reduces_to_plain_behavior() {
        let fs = build_family_state(4).unwrap();
        let alice = random_assignment(4, 2, 2, 71).unwrap();
        let chain = random_chain(4, 1, 2, 3, 72);
        let seq = simulate_sequential(fs.state(), &alice, &chain).unwrap();
        let induced: Vec<Povm> = (0..2)
            .map(|y| effective_sequential_povm(&[chain.instrument(0, y)]).unwrap())
            .collect();
        let bob = MeasurementAssignment::new(induced).unwrap();
        let plain = simulate_behavior(fs.state(), &alice, &bob).unwrap();
        assert_eq!(seq.dims(), plain.dims());
        assert!(behavior_distance(&seq, &plain).unwrap() <= 1e-14);
    }

    #[test]
    fn identity_chain_reproduces_alices_local_statistics() {
        let fs = build_family_state(4).unwrap();
        let alice = random_assignment(4, 2, 3, 81).unwrap();
        let id_step = vec![KrausInstrument::identity(4)];
        let chain = SequentialAssignment::new(vec![id_step.clone(), id_step]).unwrap();
        let table = simulate_sequential(fs.state(), &alice, &chain).unwrap();
        let reduced = linalg::partial_trace_b(fs.state().mat(), fs.state().part()).unwrap();
        for x in 0..2 {
            for a in 0..3 {
                let marginal: f64 = (0..table.dims().3).map(|b| table.get(x, 0, a, b)).sum();
                let local = linalg::hs_inner(alice.povm(x).effect(a), &reduced)
                    .unwrap()
                    .re;
                assert!((marginal - local).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sequential_chain_matches_conjugated_chain_on_the_transpose() {
        let fs = build_family_state(4).unwrap();
        let alice = random_assignment(4, 2, 2, 91).unwrap();
        let chain = random_chain(4, 3, 2, 2, 92);
        let p = simulate_sequential(fs.state(), &alice, &chain).unwrap();
        let transposed = pt_state(fs.state()).unwrap();
        let q = simulate_sequential(&transposed, &alice, &sequential_hq_transform(&chain)).unwrap();
        let tv = behavior_distance(&p, &q).unwrap();
        assert!(tv <= 1e-10, "tv distance {tv:.3e}");
    }

    #[test]
    fn both_parties_sequential_still_match_under_the_transform() {
        // Alice's POVMs are themselves effective sequential POVMs; the
        // transform still only touches the state and Bob's side.
        let fs = build_family_state(4).unwrap();
        let alice_povms: Vec<Povm> = (0..2u64)
            .map(|x| {
                let steps: Vec<KrausInstrument> = (0..2)
                    .map(|s| random_instrument(4, 2, derive_seed(101, x, s)).unwrap())
                    .collect();
                let refs: Vec<&KrausInstrument> = steps.iter().collect();
                effective_sequential_povm(&refs).unwrap()
            })
            .collect();
        let alice = MeasurementAssignment::new(alice_povms).unwrap();
        let chain = random_chain(4, 2, 2, 2, 102);
        let p = simulate_sequential(fs.state(), &alice, &chain).unwrap();
        let transposed = pt_state(fs.state()).unwrap();
        let q = simulate_sequential(&transposed, &alice, &sequential_hq_transform(&chain)).unwrap();
        assert!(behavior_distance(&p, &q).unwrap() <= 1e-10);
    }

    #[test]
    fn sequential_transform_fixes_real_chains_and_is_an_involution() {
        let id = KrausInstrument::identity(3);
        let chain = SequentialAssignment::new(vec![vec![id]]).unwrap();
        let fixed = sequential_hq_transform(&chain);
        assert_eq!(
            chain.instrument(0, 0).branches(),
            fixed.instrument(0, 0).branches()
        );

        let random = random_chain(4, 2, 2, 2, 93);
        let back = sequential_hq_transform(&sequential_hq_transform(&random));
        for s in 0..2 {
            for y in 0..2 {
                assert_eq!(
                    random.instrument(s, y).branches(),
                    back.instrument(s, y).branches()
                );
            }
        }
    }

    #[test]
    fn chain_length_is_capped() {
        let fs = build_family_state(4).unwrap();
        let alice = random_assignment(4, 1, 2, 94).unwrap();
        let chain = random_chain(4, 5, 1, 2, 95);
        assert!(matches!(
            simulate_sequential(fs.state(), &alice, &chain),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn single_copy_multicopy_is_the_original_state() {
        let fs = build_family_state(4).unwrap();
        let mc = multicopy_state(&fs, 1).unwrap();
        assert!(mc.state().mat().approx_eq(fs.state().mat(), 0.0));
        assert_eq!(mc.pt_schmidt_bound().value, 4);
    }

    #[test]
    fn two_copy_transpose_factorizes() {
        let fs = build_family_state(4).unwrap();
        let mc = multicopy_state(&fs, 2).unwrap();
        let part = mc.state().part();
        let joint_pt = linalg::partial_transpose(mc.state().mat(), part).unwrap();
        let single_pt = fs.state().partial_transpose();
        let factored = multicopy_matrix(&single_pt, fs.state().part(), 2).unwrap();
        let res = joint_pt.max_abs_diff(&factored);
        assert!(res <= 1e-12, "factorization residual {res:.3e}");
    }

    #[test]
    fn two_copy_behavior_matches_the_transformed_model() {
        let fs = build_family_state(4).unwrap();
        let mc = multicopy_state(&fs, 2).unwrap();
        let alice = random_assignment(16, 2, 2, 96).unwrap();
        let bob = random_assignment(16, 2, 2, 97).unwrap();
        let model = HqModel::new(
            mc.state().clone(),
            alice,
            bob,
            SchmidtBound::external_claim(fs.claimed_schmidt_lower()),
            mc.pt_schmidt_bound(),
        )
        .unwrap();
        let p = model.simulate().unwrap();
        let q = hq_transform(&model).unwrap().simulate().unwrap();
        assert!(behavior_distance(&p, &q).unwrap() <= 1e-10);
    }

    #[test]
    fn multicopy_capacity_is_enforced() {
        let fs = build_family_state(8).unwrap();
        assert!(matches!(
            multicopy_state(&fs, 3),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn behavior_table_rejects_bad_values() {
        assert!(matches!(
            BehaviorTable::new(1, 1, 1, 2, vec![1.2, -0.2]),
            Err(Error::InvariantViolation { .. })
        ));
        assert!(matches!(
            BehaviorTable::new(1, 1, 1, 2, vec![0.3, 0.3]),
            Err(Error::InvariantViolation { .. })
        ));
        assert!(matches!(
            BehaviorTable::new(1, 1, 1, 1, vec![1.0, 1.0]),
            Err(Error::ShapeMismatch)
        ));
    }
}
