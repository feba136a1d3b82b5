//! The verification campaigns behind each subcommand.

use hqmodel_core::error::Result;
use hqmodel_core::linalg::{self, gaussian_matrix, herm_eig, Bipartition, C64};
use hqmodel_core::measurements::{random_assignment, random_instrument, KrausInstrument};
use hqmodel_core::model::{
    behavior_distance, effective_povm_transpose_residual, hq_transform, multicopy_matrix,
    multicopy_state, pt_state, sequential_hq_transform, simulate_behavior, simulate_sequential,
    SequentialAssignment,
};
use hqmodel_core::seed::{derive_seed, streams};
use hqmodel_core::states::{build_family_state, fidelity_witness_lower_bound};
use hqmodel_core::tol;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::report::{FamilyReport, ScenarioReport};

pub fn family_report(d: usize) -> Result<FamilyReport> {
    let fs = build_family_state(d)?;
    let mat = fs.state().mat();
    let trace_residual = (mat.trace() - C64::new(1.0, 0.0)).norm();
    let min_eig = *herm_eig(mat)?.eigenvalues.last().expect("positive dim");
    let pt = fs.state().partial_transpose();
    let min_eig_pt = *herm_eig(&pt)?.eigenvalues.last().expect("positive dim");
    Ok(FamilyReport {
        d,
        denominator: fs.denominator(),
        trace_residual,
        min_eig,
        min_eig_pt,
        witness_lower_bound: fidelity_witness_lower_bound(fs.state())?,
        claimed_schmidt_lower: fs.claimed_schmidt_lower(),
        claimed_pt_schmidt_upper: fs.claimed_pt_schmidt_upper(),
    })
}

pub fn family_scenario(d: usize) -> Result<ScenarioReport> {
    let report = family_report(d)?;
    let max_residual = report
        .trace_residual
        .max(-report.min_eig)
        .max(-report.min_eig_pt)
        .max(0.0);
    Ok(ScenarioReport {
        scenario_id: format!("family-d{d}"),
        d,
        n_copies: 1,
        chain_length: 0,
        settings: 0,
        outcomes: 0,
        seed: 0,
        tv_distance: 0.0,
        max_residual,
        pass: report.passes(),
    })
}

/// Trace self-duality on random matrix pairs over the (s, s) cut of a
/// square total dimension d = s * s.
pub fn run_duality(d: usize, trials: usize, master: u64) -> Result<Vec<ScenarioReport>> {
    let side = d.isqrt();
    if side * side != d {
        return Err(hqmodel_core::Error::Domain(format!(
            "verify-duality needs a perfect-square dimension to fix the cut, got {d}"
        )));
    }
    let part = Bipartition::new(side, side);
    let mut reports = Vec::with_capacity(trials);
    for trial in 0..trials {
        let seed = derive_seed(master, streams::DUALITY, trial as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = gaussian_matrix(d, &mut rng);
        let y = gaussian_matrix(d, &mut rng);
        let lhs = linalg::hs_inner(&x, &linalg::partial_transpose(&y, part)?)?;
        let rhs = linalg::hs_inner(&linalg::partial_transpose(&x, part)?, &y)?;
        let residual = (lhs - rhs).norm();
        reports.push(ScenarioReport {
            scenario_id: format!("duality-d{d}-t{trial:04}"),
            d,
            n_copies: 1,
            chain_length: 0,
            settings: 0,
            outcomes: 0,
            seed,
            tv_distance: 0.0,
            max_residual: residual,
            pass: residual <= tol::BEHAVIOR,
        });
    }
    Ok(reports)
}

/// Behavior of the family state against its transformed model, with the
/// per-scenario measurement sizes drawn from the seed (capped by the flags).
pub fn run_behavior(
    d: usize,
    trials: usize,
    settings: usize,
    outcomes: usize,
    master: u64,
) -> Result<Vec<ScenarioReport>> {
    let fs = build_family_state(d)?;
    let mut reports = Vec::with_capacity(trials);
    for trial in 0..trials {
        let seed = derive_seed(master, streams::BEHAVIOR, ((d as u64) << 32) | trial as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sa = rng.random_range(1..=settings.max(1));
        let sb = rng.random_range(1..=settings.max(1));
        let oa = rng.random_range(2..=outcomes.max(2));
        let ob = rng.random_range(2..=outcomes.max(2));
        let alice = random_assignment(d, sa, oa, derive_seed(seed, streams::ALICE, 0))?;
        let bob = random_assignment(d, sb, ob, derive_seed(seed, streams::BOB, 0))?;
        let model = fs.hq_model(alice, bob)?;
        let p = model.simulate()?;
        let q = hq_transform(&model)?.simulate()?;
        let tv = behavior_distance(&p, &q)?;
        reports.push(ScenarioReport {
            scenario_id: format!("behavior-d{d}-t{trial:04}"),
            d,
            n_copies: 1,
            chain_length: 0,
            settings: sa.max(sb),
            outcomes: oa.max(ob),
            seed,
            tv_distance: tv,
            max_residual: p.max_residual().max(q.max_residual()),
            pass: tv <= tol::BEHAVIOR,
        });
    }
    Ok(reports)
}

/// Sequential chains on Bob's side against the conjugated chains on the
/// transposed state, plus the effective-POVM transpose identity.
pub fn run_sequential(
    d: usize,
    trials: usize,
    chain_len: usize,
    settings: usize,
    outcomes: usize,
    master: u64,
) -> Result<Vec<ScenarioReport>> {
    let fs = build_family_state(d)?;
    let transposed = pt_state(fs.state())?;
    let mut reports = Vec::with_capacity(trials);
    for trial in 0..trials {
        let seed = derive_seed(
            master,
            streams::SEQUENTIAL,
            ((d as u64) << 32) | trial as u64,
        );
        let alice = random_assignment(
            d,
            settings,
            outcomes.max(2),
            derive_seed(seed, streams::ALICE, 0),
        )?;
        let bob_seed = derive_seed(seed, streams::BOB, 0);
        let steps: Vec<Vec<KrausInstrument>> = (0..chain_len)
            .map(|s| {
                (0..settings)
                    .map(|y| {
                        random_instrument(
                            d,
                            outcomes,
                            derive_seed(
                                bob_seed,
                                streams::INSTRUMENT_STEP,
                                ((s as u64) << 16) | y as u64,
                            ),
                        )
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let chain = SequentialAssignment::new(steps)?;
        let conj = sequential_hq_transform(&chain);

        let p = simulate_sequential(fs.state(), &alice, &chain)?;
        let q = simulate_sequential(&transposed, &alice, &conj)?;
        let tv = behavior_distance(&p, &q)?;
        let op_residual = effective_povm_transpose_residual(&chain)?;
        let max_residual = p.max_residual().max(q.max_residual()).max(op_residual);
        reports.push(ScenarioReport {
            scenario_id: format!("sequential-d{d}-t{trial:04}"),
            d,
            n_copies: 1,
            chain_length: chain_len,
            settings,
            outcomes,
            seed,
            tv_distance: tv,
            max_residual,
            pass: tv <= tol::BEHAVIOR && op_residual <= tol::BEHAVIOR,
        });
    }
    Ok(reports)
}

/// Multi-copy campaign: one factorization scenario for the transpose of the
/// tensor power, then behavior scenarios with global POVMs on each side.
pub fn run_multicopy(
    d: usize,
    copies: usize,
    trials: usize,
    settings: usize,
    outcomes: usize,
    master: u64,
) -> Result<Vec<ScenarioReport>> {
    let fs = build_family_state(d)?;
    let mc = multicopy_state(&fs, copies)?;
    let local = mc.state().part().dim_a;
    let mut reports = Vec::with_capacity(trials + 1);

    let joint_pt = linalg::partial_transpose(mc.state().mat(), mc.state().part())?;
    let factored = multicopy_matrix(&fs.state().partial_transpose(), fs.state().part(), copies)?;
    let fact_res = joint_pt.max_abs_diff(&factored);
    reports.push(ScenarioReport {
        scenario_id: format!("multicopy-factorization-d{d}-n{copies}"),
        d,
        n_copies: copies,
        chain_length: 0,
        settings: 0,
        outcomes: 0,
        seed: 0,
        tv_distance: 0.0,
        max_residual: fact_res,
        pass: fact_res <= tol::ENTRYWISE,
    });

    let transposed = pt_state(mc.state())?;
    for trial in 0..trials {
        let seed = derive_seed(
            master,
            streams::MULTICOPY,
            ((d as u64) << 32) | trial as u64,
        );
        let alice = random_assignment(
            local,
            settings,
            outcomes,
            derive_seed(seed, streams::ALICE, 0),
        )?;
        let bob = random_assignment(
            local,
            settings,
            outcomes,
            derive_seed(seed, streams::BOB, 0),
        )?;
        let p = simulate_behavior(mc.state(), &alice, &bob)?;
        let q = simulate_behavior(&transposed, &alice, &bob.transposed())?;
        let tv = behavior_distance(&p, &q)?;
        reports.push(ScenarioReport {
            scenario_id: format!("multicopy-d{d}-n{copies}-t{trial:04}"),
            d,
            n_copies: copies,
            chain_length: 0,
            settings,
            outcomes,
            seed,
            tv_distance: tv,
            max_residual: p.max_residual().max(q.max_residual()),
            pass: tv <= tol::BEHAVIOR,
        });
    }
    Ok(reports)
}

/// Every campaign at its verification size.
pub fn run_full_suite(master: u64) -> Result<Vec<ScenarioReport>> {
    let mut reports = Vec::new();
    for d in [4usize, 6, 8, 12] {
        reports.push(family_scenario(d)?);
    }
    reports.extend(run_duality(9, 1000, master)?);
    for d in [4usize, 6, 8] {
        reports.extend(run_behavior(d, 200, 4, 4, master)?);
    }
    for d in [4usize, 6] {
        reports.extend(run_sequential(d, 100, 3, 2, 2, master)?);
    }
    reports.extend(run_multicopy(4, 2, 50, 2, 4, master)?);
    Ok(reports)
}
