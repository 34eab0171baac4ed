use serde::{Deserialize, Serialize};

use super::SaturationStatus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    Proceed,
    Investigate,
    Terminate,
}

/// Which way an unreliable narrative leans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DeceptionHint {
    Concealing,
    Exaggerating,
}

impl DeceptionHint {
    pub fn parse(text: &str) -> Option<DeceptionHint> {
        match text.trim() {
            "Concealing" => Some(DeceptionHint::Concealing),
            "Exaggerating" => Some(DeceptionHint::Exaggerating),
            _ => None,
        }
    }
}

/// Signals from one Evaluator reasoning step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuspicionEvidence {
    pub inconsistency_flags: Vec<String>,
    pub nonverbal_mismatch: bool,
    pub cot_estimate: f64,
    #[serde(default)]
    pub deception_hint: Option<DeceptionHint>,
}

/// The Evaluator's running suspicion score with its threshold and logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuspicionTracker {
    pub xi: f64,
    pub theta_susp: f64,
    pub alpha: f64,
    pub beta: f64,
    pub history: Vec<(u32, f64)>,
    pub decision_log: Vec<(u32, Decision)>,
    /// Inconsistency flags by round.
    pub flag_log: Vec<(u32, String)>,
    pub concealing_votes: u32,
    pub exaggerating_votes: u32,
}

impl SuspicionTracker {
    pub fn new(theta_susp: f64, alpha: f64, beta: f64) -> SuspicionTracker {
        SuspicionTracker {
            xi: 0.0,
            theta_susp,
            alpha,
            beta,
            history: Vec::new(),
            decision_log: Vec::new(),
            flag_log: Vec::new(),
            concealing_votes: 0,
            exaggerating_votes: 0,
        }
    }

    pub fn with_xi(mut self, xi: f64) -> SuspicionTracker {
        self.xi = xi.clamp(0.0, 1.0);
        self
    }

    /// Suspicion currently exceeds the threshold.
    pub fn flagged(&self) -> bool {
        self.xi > self.theta_susp
    }

    /// Majority direction among deception hints; `None` on a tie.
    pub fn direction(&self) -> Option<DeceptionHint> {
        use std::cmp::Ordering::*;
        match self.concealing_votes.cmp(&self.exaggerating_votes) {
            Greater => Some(DeceptionHint::Concealing),
            Less => Some(DeceptionHint::Exaggerating),
            Equal => None,
        }
    }

    pub fn record_decision(&mut self, round: u32, decision: Decision) {
        self.decision_log.push((round, decision));
    }
}

/// Exponentially smoothed suspicion plus a bonus per inconsistency; a
/// nonverbal mismatch counts as one more inconsistency.
pub fn update_suspicion(tracker: &SuspicionTracker, round: u32, evidence: &SuspicionEvidence) -> SuspicionTracker {
    let mut t = tracker.clone();
    let estimate = evidence.cot_estimate.clamp(0.0, 1.0);
    let flags = evidence.inconsistency_flags.len() + usize::from(evidence.nonverbal_mismatch);
    t.xi = ((1.0 - t.alpha) * t.xi + t.alpha * estimate + t.beta * flags as f64).clamp(0.0, 1.0);
    t.history.push((round, t.xi));
    t.flag_log.extend(evidence.inconsistency_flags.iter().map(|f| (round, f.clone())));
    if evidence.nonverbal_mismatch {
        t.flag_log.push((round, "nonverbal cues contradict the verbal answer".into()));
    }
    match evidence.deception_hint {
        Some(DeceptionHint::Concealing) => t.concealing_votes += 1,
        Some(DeceptionHint::Exaggerating) => t.exaggerating_votes += 1,
        None => {}
    }
    t
}

/// Terminate once saturated; otherwise investigate iff suspicion is
/// strictly above threshold.
pub fn decide(tracker: &SuspicionTracker, saturation: &SaturationStatus) -> Decision {
    if saturation.terminate_ok() {
        Decision::Terminate
    } else if tracker.xi > tracker.theta_susp {
        Decision::Investigate
    } else {
        Decision::Proceed
    }
}
