//! Report formats emitted by the verification campaigns.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

/// Outcome of one verification scenario.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub scenario_id: String,
    pub d: usize,
    pub n_copies: usize,
    pub chain_length: usize,
    pub settings: usize,
    pub outcomes: usize,
    pub seed: u64,
    pub tv_distance: f64,
    pub max_residual: f64,
    pub pass: bool,
}

/// Envelope around a campaign run. Everything except `timestamp` is a pure
/// function of the configuration, so two runs with the same flags differ in
/// that one field only.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub timestamp: u64,
    pub master_seed: u64,
    pub scenarios: Vec<ScenarioReport>,
    pub all_pass: bool,
}

impl RunReport {
    pub fn new(command: &str, master_seed: u64, scenarios: Vec<ScenarioReport>) -> Self {
        let all_pass = scenarios.iter().all(|s| s.pass);
        Self {
            command: command.to_string(),
            timestamp: unix_timestamp(),
            master_seed,
            scenarios,
            all_pass,
        }
    }

    pub fn failing_ids(&self) -> Vec<&str> {
        self.scenarios
            .iter()
            .filter(|s| !s.pass)
            .map(|s| s.scenario_id.as_str())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    /// Flat per-scenario rows; the envelope fields stay in the JSON format.
    /// Column order is fixed: scenario_id, d, n_copies, chain_length,
    /// settings, outcomes, seed, tv_distance, max_residual, pass.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "scenario_id,d,n_copies,chain_length,settings,outcomes,seed,tv_distance,max_residual,pass\n",
        );
        for s in &self.scenarios {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                s.scenario_id,
                s.d,
                s.n_copies,
                s.chain_length,
                s.settings,
                s.outcomes,
                s.seed,
                s.tv_distance,
                s.max_residual,
                s.pass
            ));
        }
        out
    }
}

/// Diagnostics of one state family member.
#[derive(Debug, Serialize)]
pub struct FamilyReport {
    pub d: usize,
    pub denominator: usize,
    pub trace_residual: f64,
    pub min_eig: f64,
    pub min_eig_pt: f64,
    pub witness_lower_bound: usize,
    pub claimed_schmidt_lower: usize,
    pub claimed_pt_schmidt_upper: usize,
}

impl FamilyReport {
    pub fn passes(&self) -> bool {
        self.trace_residual <= 1e-12 && self.min_eig >= -1e-10 && self.min_eig_pt >= -1e-10
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    pub fn to_csv(&self) -> String {
        format!(
            "d,denominator,trace_residual,min_eig,min_eig_pt,witness_lower_bound,claimed_schmidt_lower,claimed_pt_schmidt_upper\n{},{},{},{},{},{},{},{}\n",
            self.d,
            self.denominator,
            self.trace_residual,
            self.min_eig,
            self.min_eig_pt,
            self.witness_lower_bound,
            self.claimed_schmidt_lower,
            self.claimed_pt_schmidt_upper
        )
    }
}

pub fn unix_timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
