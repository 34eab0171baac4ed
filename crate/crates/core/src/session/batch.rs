use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::record::CorpusRecord;
use super::runner::{run_session, SessionEnv};
use super::SessionError;
use crate::backends::{BackendError, Backends};
use crate::profiles::PatientProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum EntryStatus {
    Ok { record_id: String },
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchEntry {
    pub index: usize,
    pub profile_id: String,
    pub seed: u64,
    #[serde(flatten)]
    pub status: EntryStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub seed: u64,
    pub succeeded: usize,
    pub failed: usize,
    pub entries: Vec<BatchEntry>,
}

pub struct BatchOutcome {
    pub records: Vec<CorpusRecord>,
    pub report: BatchReport,
}

/// Run independent sessions, session `i` with seed `seed ^ i`. Failures are
/// collected, never fatal. Output order follows input order regardless of
/// `workers`.
pub fn run_batch<F>(profiles: &[PatientProfile], env: &SessionEnv<'_>, make_backends: F, seed: u64) -> BatchOutcome
where
    F: Fn(&PatientProfile) -> Result<Backends, BackendError> + Sync,
{
    let run = |(i, p): (usize, &PatientProfile)| {
        let s = seed ^ i as u64;
        let result = make_backends(p)
            .map_err(|e| SessionError::BackendSetup(e.to_string()))
            .and_then(|b| run_session(p, env, &b, s));
        (i, p.id.clone(), s, result)
    };
    let results: Vec<_> = if env.session.workers <= 1 {
        profiles.iter().enumerate().map(run).collect()
    } else {
        match rayon::ThreadPoolBuilder::new().num_threads(env.session.workers).build() {
            Ok(pool) => pool.install(|| profiles.par_iter().enumerate().map(run).collect()),
            Err(_) => profiles.iter().enumerate().map(run).collect(),
        }
    };
    let mut records = Vec::new();
    let mut entries = Vec::new();
    for (index, profile_id, s, result) in results {
        let status = match result {
            Ok(r) => {
                let id = r.record_id.clone();
                records.push(r);
                EntryStatus::Ok { record_id: id }
            }
            Err(e) => EntryStatus::Failed { error: e.to_string() },
        };
        entries.push(BatchEntry { index, profile_id, seed: s, status });
    }
    let failed = entries.iter().filter(|e| matches!(e.status, EntryStatus::Failed { .. })).count();
    BatchOutcome { report: BatchReport { seed, succeeded: records.len(), failed, entries }, records }
}
