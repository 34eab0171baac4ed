use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

use super::EvalError;
use crate::agents::AgentParams;
use crate::backends::{BackendError, Backends};
use crate::profiles::{ClinicalStatus, PatientProfile};
use crate::session::{run_batch, BatchEntry, CorpusRecord, EntryStatus, SessionEnv};

/// Trust over one session: the pre-interview value at round 0, then the
/// value after each answered round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustTrajectory {
    pub record_id: String,
    pub profile_id: String,
    pub points: Vec<(u32, f64)>,
    pub delta_trust: f64,
    pub rounds_to_saturation: u32,
}

/// Trajectory of a traced record; `None` when internal traces are absent.
pub fn trajectory(record: &CorpusRecord) -> Option<TrustTrajectory> {
    let initial = record.run_meta.initial_state?.trust;
    let mut points = vec![(0, initial)];
    for t in &record.final_transcript {
        if let Some(p) = &t.patient_trace {
            points.push((t.round, p.trust));
        }
    }
    let last = points.last().map(|p| p.1).unwrap_or(initial);
    Some(TrustTrajectory {
        record_id: record.record_id.clone(),
        profile_id: record.profile.id.clone(),
        points,
        delta_trust: last - initial,
        rounds_to_saturation: record.run_meta.termination.round,
    })
}

pub type BackendFactory<'a> = dyn Fn(&PatientProfile) -> Result<Backends, BackendError> + Sync + 'a;

/// One configuration under comparison.
pub struct AblationArm<'a> {
    pub name: String,
    pub params: AgentParams,
    pub backends: &'a BackendFactory<'a>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrust {
    pub round: u32,
    pub mean_trust: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    pub name: String,
    pub sessions: usize,
    pub mean_delta_trust: f64,
    pub mean_rounds_to_saturation: f64,
    pub status_accuracy: f64,
    /// Over non-healthy ground truth; `None` if there is none.
    pub severity_accuracy: Option<f64>,
    pub trust_by_round: Vec<RoundTrust>,
    pub trajectories: Vec<TrustTrajectory>,
    pub failures: Vec<BatchEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub seed: u64,
    pub arms: Vec<ArmReport>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn arm_report(name: &str, records: &[CorpusRecord], failures: Vec<BatchEntry>) -> Result<ArmReport, EvalError> {
    let trajectories = records
        .iter()
        .map(|r| trajectory(r).ok_or_else(|| EvalError::Invalid(format!("{} has no internal trace", r.record_id))))
        .collect::<Result<Vec<_>, _>>()?;
    let mut by_round: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    for t in &trajectories {
        for (round, trust) in &t.points {
            let e = by_round.entry(*round).or_default();
            e.0 += trust;
            e.1 += 1;
        }
    }
    let graded: Vec<&CorpusRecord> =
        records.iter().filter(|r| r.profile.ground_truth.status != ClinicalStatus::Healthy).collect();
    Ok(ArmReport {
        name: name.to_string(),
        sessions: records.len(),
        mean_delta_trust: mean(trajectories.iter().map(|t| t.delta_trust)),
        mean_rounds_to_saturation: mean(trajectories.iter().map(|t| f64::from(t.rounds_to_saturation))),
        status_accuracy: mean(
            records.iter().map(|r| f64::from(u8::from(r.diagnosis.status == r.profile.ground_truth.status))),
        ),
        severity_accuracy: (!graded.is_empty()).then(|| {
            mean(graded.iter().map(|r| f64::from(u8::from(r.diagnosis.severity == r.profile.ground_truth.severity))))
        }),
        trust_by_round: by_round
            .into_iter()
            .map(|(round, (sum, n))| RoundTrust { round, mean_trust: sum / n as f64, n })
            .collect(),
        trajectories,
        failures,
    })
}

/// Run every arm over the same profiles with the same batch seed, so
/// session `i` of each arm shares profile and seed. Internal traces are
/// forced on.
pub fn ablation_run(
    profiles: &[PatientProfile],
    arms: &[AblationArm<'_>],
    env: &SessionEnv<'_>,
    seed: u64,
) -> Result<AblationReport, EvalError> {
    if arms.is_empty() {
        return Err(EvalError::Invalid("no arms configured".into()));
    }
    let mut reports = Vec::with_capacity(arms.len());
    for arm in arms {
        arm.params.validate().map_err(|e| EvalError::Invalid(format!("arm {}: {e}", arm.name)))?;
        let mut session = env.session.clone();
        session.trace_internal = true;
        let arm_env = SessionEnv {
            repo: env.repo,
            prompts: env.prompts,
            bank: env.bank,
            agent: arm.params.clone(),
            session,
            config_hash: env.config_hash.clone(),
        };
        let outcome = run_batch(profiles, &arm_env, arm.backends, seed);
        let failures =
            outcome.report.entries.into_iter().filter(|e| matches!(e.status, EntryStatus::Failed { .. })).collect();
        reports.push(arm_report(&arm.name, &outcome.records, failures)?);
    }
    Ok(AblationReport { seed, arms: reports })
}

fn csv_err(e: csv::Error) -> EvalError {
    EvalError::Invalid(format!("csv: {e}"))
}

/// `round,mean_trust,arm,n`, one row per arm and round.
pub fn write_trust_by_round_csv<W: Write>(report: &AblationReport, out: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["round", "mean_trust", "arm", "n"]).map_err(csv_err)?;
    for arm in &report.arms {
        for r in &arm.trust_by_round {
            w.write_record([r.round.to_string(), r.mean_trust.to_string(), arm.name.clone(), r.n.to_string()])
                .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| EvalError::Invalid(e.to_string()))
}

/// `arm,record_id,delta_trust,rounds_to_saturation`, one row per session.
pub fn write_delta_trust_csv<W: Write>(report: &AblationReport, out: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["arm", "record_id", "delta_trust", "rounds_to_saturation"]).map_err(csv_err)?;
    for arm in &report.arms {
        for t in &arm.trajectories {
            w.write_record([
                arm.name.clone(),
                t.record_id.clone(),
                t.delta_trust.to_string(),
                t.rounds_to_saturation.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| EvalError::Invalid(e.to_string()))
}
