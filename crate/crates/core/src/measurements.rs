//! POVMs and sequential Kraus instruments, including the transpose and
//! conjugate duals used by the hidden-model construction.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, C64};
use crate::seed::{derive_seed, streams};
use crate::tol;

/// Finite POVM: positive effects on a fixed dimension summing to identity.
#[derive(Debug, Clone)]
pub struct Povm {
    dim: usize,
    effects: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(effects: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = effects
            .first()
            .map(ComplexMatrix::dim)
            .ok_or_else(|| Error::Domain("a POVM needs at least one effect".into()))?;
        for e in &effects {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: e.dim(),
                });
            }
        }
        let povm = Self { dim, effects };
        povm.validate()?;
        Ok(povm)
    }

    /// Re-runs the structural checks: Hermiticity and positivity of each
    /// effect, completeness of the sum.
    pub fn validate(&self) -> Result<()> {
        let mut sum = ComplexMatrix::zeros(self.dim);
        for (a, e) in self.effects.iter().enumerate() {
            let herm = e.hermiticity_residual();
            if herm > tol::STRUCTURAL {
                return Err(Error::invariant(format!("effect {a} hermiticity"), herm));
            }
            linalg::check_psd(e, &format!("effect {a}"))?;
            sum = sum.add(e);
        }
        let res = sum.max_abs_diff(&ComplexMatrix::identity(self.dim));
        if res > tol::STRUCTURAL {
            return Err(Error::invariant("povm completeness", res));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn effect(&self, outcome: usize) -> &ComplexMatrix {
        &self.effects[outcome]
    }

    /// Every effect replaced by its full transpose. Transposition preserves
    /// the spectrum of each effect and the completeness sum exactly, so no
    /// re-validation is needed.
    pub fn transposed(&self) -> Povm {
        Povm {
            dim: self.dim,
            effects: self.effects.iter().map(ComplexMatrix::transpose).collect(),
        }
    }

    /// Projective measurement in the computational basis.
    pub fn computational_basis(dim: usize) -> Povm {
        let effects = (0..dim)
            .map(|i| {
                let mut p = ComplexMatrix::zeros(dim);
                p.set(i, i, C64::new(1.0, 0.0));
                p
            })
            .collect();
        Povm { dim, effects }
    }
}

#[derive(Serialize, Deserialize)]
struct PovmRepr {
    dim: usize,
    effects: Vec<ComplexMatrix>,
}

impl Serialize for Povm {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PovmRepr {
            dim: self.dim,
            effects: self.effects.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Povm {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = PovmRepr::deserialize(deserializer)?;
        let povm = Povm::new(repr.effects).map_err(serde::de::Error::custom)?;
        if povm.dim() != repr.dim {
            return Err(serde::de::Error::custom(format!(
                "declared dim {} does not match effects of dim {}",
                repr.dim,
                povm.dim()
            )));
        }
        Ok(povm)
    }
}

/// Measurement with post-measurement states: one Kraus operator per outcome,
/// completeness sum F'F = identity.
#[derive(Debug, Clone)]
pub struct KrausInstrument {
    dim: usize,
    branches: Vec<ComplexMatrix>,
}

impl KrausInstrument {
    pub fn new(branches: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = branches
            .first()
            .map(ComplexMatrix::dim)
            .ok_or_else(|| Error::Domain("an instrument needs at least one branch".into()))?;
        for b in &branches {
            if b.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: b.dim(),
                });
            }
        }
        let inst = Self { dim, branches };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let res = self.completeness_residual();
        if res > tol::STRUCTURAL {
            return Err(Error::invariant("instrument completeness", res));
        }
        Ok(())
    }

    /// Max-abs entrywise deviation of sum F'F from identity.
    pub fn completeness_residual(&self) -> f64 {
        let mut sum = ComplexMatrix::zeros(self.dim);
        for f in &self.branches {
            sum = sum.add(&f.adjoint().matmul(f));
        }
        sum.max_abs_diff(&ComplexMatrix::identity(self.dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.branches.len()
    }

    pub fn branches(&self) -> &[ComplexMatrix] {
        &self.branches
    }

    /// Entrywise complex conjugation of every Kraus operator. Conjugating
    /// the completeness identity keeps it exact, so the result is valid by
    /// construction.
    pub fn conjugated(&self) -> KrausInstrument {
        KrausInstrument {
            dim: self.dim,
            branches: self.branches.iter().map(ComplexMatrix::conj).collect(),
        }
    }

    /// The trivial single-branch instrument {1}.
    pub fn identity(dim: usize) -> KrausInstrument {
        KrausInstrument {
            dim,
            branches: vec![ComplexMatrix::identity(dim)],
        }
    }
}

/// One POVM per measurement setting, uniform dimension and outcome count.
#[derive(Debug, Clone)]
pub struct MeasurementAssignment {
    settings: Vec<Povm>,
}

impl MeasurementAssignment {
    pub fn new(settings: Vec<Povm>) -> Result<Self> {
        let first = settings
            .first()
            .ok_or_else(|| Error::Domain("an assignment needs at least one setting".into()))?;
        let (dim, outcomes) = (first.dim(), first.outcomes());
        for p in &settings {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: p.dim(),
                });
            }
            if p.outcomes() != outcomes {
                return Err(Error::Domain(format!(
                    "settings must share an outcome count: {} vs {}",
                    outcomes,
                    p.outcomes()
                )));
            }
        }
        Ok(Self { settings })
    }

    pub fn dim(&self) -> usize {
        self.settings[0].dim()
    }

    pub fn num_settings(&self) -> usize {
        self.settings.len()
    }

    pub fn outcomes(&self) -> usize {
        self.settings[0].outcomes()
    }

    pub fn povm(&self, setting: usize) -> &Povm {
        &self.settings[setting]
    }

    pub fn povms(&self) -> &[Povm] {
        &self.settings
    }

    pub fn transposed(&self) -> MeasurementAssignment {
        MeasurementAssignment {
            settings: self.settings.iter().map(Povm::transposed).collect(),
        }
    }
}

fn check_block_dim(dim: usize, outcomes: usize) -> Result<()> {
    dim.checked_mul(outcomes)
        .filter(|&t| t <= linalg::max_dim())
        .map(|_| ())
        .ok_or(Error::DimensionLimit {
            requested: dim.saturating_mul(outcomes),
            max: linalg::max_dim(),
        })
}

/// Haar-block POVM: a Haar unitary on dim*outcomes is drawn, its first `dim`
/// columns split into `outcomes` row blocks V_a, and effect_a = V_a' V_a.
/// Completeness is exact by unitarity. Deterministic for a fixed seed.
pub fn random_povm(dim: usize, outcomes: usize, seed: u64) -> Result<Povm> {
    if dim < 2 {
        return Err(Error::Domain(format!(
            "povm dimension must be >= 2, got {dim}"
        )));
    }
    if outcomes < 2 {
        return Err(Error::Domain(format!(
            "random POVMs need >= 2 outcomes (the trivial POVM is excluded), got {outcomes}"
        )));
    }
    check_block_dim(dim, outcomes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = linalg::haar_unitary(dim * outcomes, &mut rng);
    let effects = (0..outcomes)
        .map(|a| {
            ComplexMatrix::from_fn(dim, |i, j| {
                let mut acc = C64::new(0.0, 0.0);
                for r in 0..dim {
                    acc += u.get(a * dim + r, i).conj() * u.get(a * dim + r, j);
                }
                acc
            })
        })
        .collect();
    Povm::new(effects)
}

/// Haar-block instrument: the `outcomes` row blocks of the first `dim`
/// columns of a Haar unitary are the Kraus operators; completeness is exact
/// by unitarity. `outcomes = 1` yields a single unitary branch.
pub fn random_instrument(dim: usize, outcomes: usize, seed: u64) -> Result<KrausInstrument> {
    if dim < 2 {
        return Err(Error::Domain(format!(
            "instrument dimension must be >= 2, got {dim}"
        )));
    }
    if outcomes < 1 {
        return Err(Error::Domain(
            "instruments need at least one outcome".into(),
        ));
    }
    check_block_dim(dim, outcomes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = linalg::haar_unitary(dim * outcomes, &mut rng);
    let branches = (0..outcomes)
        .map(|a| ComplexMatrix::from_fn(dim, |r, c| u.get(a * dim + r, c)))
        .collect();
    KrausInstrument::new(branches)
}

/// One random POVM per setting, with per-setting seeds derived from `seed`.
pub fn random_assignment(
    dim: usize,
    settings: usize,
    outcomes: usize,
    seed: u64,
) -> Result<MeasurementAssignment> {
    if settings == 0 {
        return Err(Error::Domain("need at least one setting".into()));
    }
    let povms = (0..settings)
        .map(|x| {
            random_povm(
                dim,
                outcomes,
                derive_seed(seed, streams::POVM_SETTING, x as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    MeasurementAssignment::new(povms)
}

/// Cap on the number of outcome tuples an effective sequential POVM may have.
pub const MAX_OUTCOME_TUPLES: usize = 4096;

/// Effective POVM of a measurement chain with one chosen instrument per
/// step: the effect for outcome tuple (b1, .., bm) is
/// F1' .. Fm' Fm .. F1 with Fk the step-k operator for outcome bk.
/// Tuples are ordered lexicographically with b1 the slowest index.
pub fn effective_sequential_povm(steps: &[&KrausInstrument]) -> Result<Povm> {
    let first = steps
        .first()
        .ok_or_else(|| Error::Domain("a chain needs at least one step".into()))?;
    let dim = first.dim();
    for s in steps {
        if s.dim() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: s.dim(),
            });
        }
    }
    let mut tuples: usize = 1;
    for s in steps {
        tuples = tuples
            .checked_mul(s.outcomes())
            .filter(|&t| t <= MAX_OUTCOME_TUPLES)
            .ok_or(Error::Capacity {
                what: "outcome tuples".into(),
                value: tuples.saturating_mul(s.outcomes()),
                max: MAX_OUTCOME_TUPLES,
            })?;
    }
    let mut effects = Vec::with_capacity(tuples);
    collect_effects(steps, 0, &ComplexMatrix::identity(dim), &mut effects);
    Povm::new(effects)
}

fn collect_effects(
    steps: &[&KrausInstrument],
    depth: usize,
    prefix: &ComplexMatrix,
    effects: &mut Vec<ComplexMatrix>,
) {
    if depth == steps.len() {
        effects.push(prefix.adjoint().matmul(prefix));
        return;
    }
    for f in steps[depth].branches() {
        collect_effects(steps, depth + 1, &f.matmul(prefix), effects);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_povm_is_complete_across_seeds() {
        for seed in 0..100u64 {
            let povm = random_povm(8, 4, seed).unwrap();
            let mut sum = ComplexMatrix::zeros(8);
            for e in povm.effects() {
                sum = sum.add(e);
            }
            let res = sum.max_abs_diff(&ComplexMatrix::identity(8));
            assert!(res <= 1e-10, "seed {seed}: completeness residual {res:.3e}");
        }
    }

    #[test]
    fn random_povm_rejects_trivial_outcome_count() {
        assert!(matches!(random_povm(4, 1, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn random_povm_is_deterministic_bitwise() {
        let a = random_povm(5, 3, 77).unwrap();
        let b = random_povm(5, 3, 77).unwrap();
        for (x, y) in a.effects().iter().zip(b.effects()) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn effect_eigenvalues_lie_in_the_unit_interval() {
        let povm = random_povm(6, 3, 5).unwrap();
        for e in povm.effects() {
            let eig = linalg::herm_eig(e).unwrap();
            assert!(eig.eigenvalues[0] <= 1.0 + 1e-10);
            assert!(*eig.eigenvalues.last().unwrap() >= -1e-10);
        }
    }

    #[test]
    fn transpose_fixes_diagonal_povms() {
        let povm = Povm::computational_basis(3);
        let t = povm.transposed();
        for (a, b) in povm.effects().iter().zip(t.effects()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn transpose_is_an_involution() {
        let povm = random_povm(4, 3, 9).unwrap();
        let back = povm.transposed().transposed();
        for (a, b) in povm.effects().iter().zip(back.effects()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn transposed_povm_passes_validation_at_dim_9() {
        let povm = random_povm(9, 3, 11).unwrap();
        povm.transposed().validate().unwrap();
    }

    #[test]
    fn conjugation_fixes_real_instruments() {
        let inst = KrausInstrument::identity(3);
        let c = inst.conjugated();
        assert_eq!(inst.branches(), c.branches());
    }

    #[test]
    fn conjugation_is_an_involution() {
        let inst = random_instrument(4, 2, 13).unwrap();
        let back = inst.conjugated().conjugated();
        assert_eq!(inst.branches(), back.branches());
    }

    #[test]
    fn conjugation_preserves_completeness() {
        for seed in 0..20u64 {
            let inst = random_instrument(5, 3, seed).unwrap();
            let orig = inst.completeness_residual();
            let conj = inst.conjugated().completeness_residual();
            assert!((orig - conj).abs() <= 1e-12);
        }
    }

    #[test]
    fn random_instrument_is_complete_across_seeds() {
        for seed in 0..100u64 {
            let inst = random_instrument(4, 3, seed).unwrap();
            assert!(inst.completeness_residual() <= 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn random_instrument_is_deterministic() {
        let a = random_instrument(4, 2, 3).unwrap();
        let b = random_instrument(4, 2, 3).unwrap();
        assert_eq!(a.branches(), b.branches());
    }

    #[test]
    fn single_outcome_instrument_is_an_isometry() {
        let inst = random_instrument(4, 1, 21).unwrap();
        assert_eq!(inst.outcomes(), 1);
        assert!(inst.completeness_residual() <= 1e-13);
    }

    #[test]
    fn single_step_chain_gives_the_induced_povm() {
        let inst = random_instrument(4, 3, 31).unwrap();
        let povm = effective_sequential_povm(&[&inst]).unwrap();
        assert_eq!(povm.outcomes(), 3);
        for (e, f) in povm.effects().iter().zip(inst.branches()) {
            let expected = f.adjoint().matmul(f);
            assert!(e.approx_eq(&expected, 1e-14));
        }
    }

    #[test]
    fn identity_chain_collapses_to_identity_effect() {
        let id = KrausInstrument::identity(3);
        let povm = effective_sequential_povm(&[&id, &id]).unwrap();
        assert_eq!(povm.outcomes(), 1);
        assert!(povm.effect(0).approx_eq(&ComplexMatrix::identity(3), 1e-15));
    }

    #[test]
    fn three_step_chain_has_eight_complete_effects() {
        let steps: Vec<KrausInstrument> = (0..3)
            .map(|s| random_instrument(4, 2, 100 + s).unwrap())
            .collect();
        let refs: Vec<&KrausInstrument> = steps.iter().collect();
        let povm = effective_sequential_povm(&refs).unwrap();
        assert_eq!(povm.outcomes(), 8);
        let mut sum = ComplexMatrix::zeros(4);
        for e in povm.effects() {
            sum = sum.add(e);
        }
        assert!(sum.max_abs_diff(&ComplexMatrix::identity(4)) <= 1e-9);
    }

    #[test]
    fn conjugated_chain_povm_is_the_transpose() {
        // (F1' .. Fm' Fm .. F1)^T equals the effective operator of the
        // conjugated chain, checked entrywise.
        let steps: Vec<KrausInstrument> = (0..3)
            .map(|s| random_instrument(5, 2, 200 + s).unwrap())
            .collect();
        let refs: Vec<&KrausInstrument> = steps.iter().collect();
        let conj: Vec<KrausInstrument> = steps.iter().map(KrausInstrument::conjugated).collect();
        let conj_refs: Vec<&KrausInstrument> = conj.iter().collect();
        let direct = effective_sequential_povm(&refs).unwrap();
        let dual = effective_sequential_povm(&conj_refs).unwrap();
        for (e, f) in direct.effects().iter().zip(dual.effects()) {
            assert!(e.transpose().approx_eq(f, 1e-10));
        }
    }

    #[test]
    fn chain_rejects_mixed_dimensions() {
        let a = random_instrument(4, 2, 1).unwrap();
        let b = random_instrument(5, 2, 2).unwrap();
        assert!(matches!(
            effective_sequential_povm(&[&a, &b]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn chain_rejects_tuple_overflow() {
        let inst = random_instrument(2, 9, 3).unwrap();
        let refs = vec![&inst; 4];
        assert!(matches!(
            effective_sequential_povm(&refs),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn assignment_requires_uniform_outcome_counts() {
        let a = random_povm(4, 2, 1).unwrap();
        let b = random_povm(4, 3, 2).unwrap();
        assert!(matches!(
            MeasurementAssignment::new(vec![a, b]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn povm_json_roundtrip() {
        let povm = random_povm(3, 2, 55).unwrap();
        let json = serde_json::to_string(&povm).unwrap();
        let back: Povm = serde_json::from_str(&json).unwrap();
        assert_eq!(back.dim(), povm.dim());
        for (a, b) in povm.effects().iter().zip(back.effects()) {
            assert!(a.approx_eq(b, 0.0));
        }
    }

    #[test]
    fn povm_json_rejects_incomplete_effects() {
        let half = ComplexMatrix::identity(2).scale_re(0.5);
        let bad = serde_json::json!({
            "dim": 2,
            "effects": [serde_json::to_value(&half).unwrap()],
        });
        assert!(serde_json::from_value::<Povm>(bad).is_err());
    }
}
