use rand::Rng;
use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use super::record::{
    transcript_text, ClinicianTrace, CorpusRecord, DecodeSettings, PatientTrace, RunMeta, Termination, TurnRecord,
};
use super::{SessionError, SessionParams};
use crate::agents::{
    assessor_select, diagnose, evaluator_rate, evaluator_turn, patient_self_report, patient_turn, AgentIo,
    AgentParams, AgentState, Agenda, DiagnoseInput, EvaluatorView, PatientTurnInput, RatingContext,
};
use crate::backends::Backends;
use crate::profiles::{FeatureBank, PatientProfile};
use crate::prompts::PromptSet;
use crate::rng::stream;
use crate::scales::{validate_plan, Repository};

pub const GREETING: &str = "Hello, welcome. Please have a seat and make yourself comfortable.";
pub const OPENING_QUESTION: &str = "What brings you here today?";

/// Everything a session reads besides the profile, backends and seed.
pub struct SessionEnv<'a> {
    pub repo: &'a Repository,
    pub prompts: &'a PromptSet,
    pub bank: &'a FeatureBank,
    pub agent: AgentParams,
    pub session: SessionParams,
    pub config_hash: String,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

fn initial_state(params: &AgentParams, seed: u64) -> AgentState {
    if params.initial_jitter <= 0.0 {
        return AgentState::new(params.initial_trust, params.initial_stress);
    }
    let mut rng = stream(seed, "initial_state", 0);
    let j = params.initial_jitter;
    AgentState::new(
        params.initial_trust + rng.random_range(-j..=j),
        params.initial_stress + rng.random_range(-j..=j),
    )
}

/// Run one intake: plan, greeting, opening, interview until the Evaluator
/// terminates on saturation, then both rating passes and the diagnosis.
pub fn run_session(
    profile: &PatientProfile,
    env: &SessionEnv<'_>,
    backends: &Backends,
    seed: u64,
) -> Result<CorpusRecord, SessionError> {
    profile.validate_with(env.bank).map_err(|e| SessionError::InvalidProfile(e.to_string()))?;
    let started = env.session.wall_clock.then(now_ms);
    let params = &env.agent;
    let sp = &env.session;
    let trace = sp.trace_internal;
    let mut io = AgentIo::new(backends, env.prompts, params, seed);

    let outcome = assessor_select(&profile.demographics, &profile.chief_complaint, env.repo, &mut io)?;
    let violations = validate_plan(&outcome.plan, env.repo);
    if !violations.is_empty() {
        let text: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(SessionError::PlanInvalid(text.join("; ")));
    }
    let plan = outcome.plan;
    let mut agenda = Agenda::build(&plan, env.repo);
    let mut tracker = params.tracker();
    let mut state = initial_state(params, seed);
    let start_state = state;
    let mut rng = stream(seed, "nonverbal", 0);

    let mut turns = vec![TurnRecord {
        round: 0,
        doctor_utterance: GREETING.to_string(),
        patient_utterance: None,
        nonverbal: Vec::new(),
        clinician_trace: None,
        patient_trace: None,
    }];

    let history = transcript_text(&turns);
    let input = PatientTurnInput { doctor_utterance: OPENING_QUESTION, topic: None, opening: true, history: &history };
    let (pd, answer) = patient_turn(profile, state, &input, &mut io, params, &mut rng)?;
    state = pd.next_state;
    let chief_complaint_repaired = pd.chief_complaint_repaired;
    turns.push(TurnRecord {
        round: 1,
        doctor_utterance: OPENING_QUESTION.to_string(),
        patient_utterance: Some(answer),
        nonverbal: pd.nonverbal_cues.clone(),
        clinician_trace: None,
        patient_trace: trace.then(|| PatientTrace {
            trust: state.trust,
            stress: state.stress,
            strategy: pd.strategy,
            directive_text: pd.strategy_directive.clone(),
        }),
    });

    let mut last_target: Option<usize> = None;
    let mut round = 2u32;
    let termination = loop {
        if round > sp.round_cap {
            return Err(SessionError::RoundLimitExceeded { cap: sp.round_cap });
        }
        let saturation = agenda.saturation(round - 1, sp.min_rounds, sp.exhaustion_window);
        let history = transcript_text(&turns);
        let last = turns.last().expect("transcript is never empty");
        let view = EvaluatorView {
            round,
            agenda: &agenda,
            saturation: &saturation,
            repo: env.repo,
            last_patient_utterance: last.patient_utterance.as_deref().unwrap_or(""),
            last_nonverbal: &last.nonverbal,
            last_target,
            history: &history,
        };
        let (ed, doctor) = evaluator_turn(&view, &mut tracker, &mut io, params)?;
        let clinician_trace = trace.then(|| ClinicianTrace {
            xi: tracker.xi,
            decision: ed.decision,
            hypothesis_note: ed.hypothesis_note.clone(),
            target: ed.target,
            topic: ed.target_topic,
        });
        let Some(target) = ed.target else {
            turns.push(TurnRecord {
                round,
                doctor_utterance: doctor,
                patient_utterance: None,
                nonverbal: Vec::new(),
                clinician_trace,
                patient_trace: None,
            });
            break Termination { round, conditions: saturation.conditions() };
        };
        let input = PatientTurnInput {
            doctor_utterance: &doctor,
            topic: ed.target_topic,
            opening: false,
            history: &history,
        };
        let (pd, answer) = patient_turn(profile, state, &input, &mut io, params, &mut rng)?;
        state = pd.next_state;
        agenda.record(target, round, pd.strategy.answered(), pd.strategy.disclosed());
        last_target = Some(target);
        turns.push(TurnRecord {
            round,
            doctor_utterance: doctor,
            patient_utterance: Some(answer),
            nonverbal: pd.nonverbal_cues.clone(),
            clinician_trace,
            patient_trace: trace.then(|| PatientTrace {
                trust: state.trust,
                stress: state.stress,
                strategy: pd.strategy,
                directive_text: pd.strategy_directive.clone(),
            }),
        });
        round += 1;
    };

    let transcript = transcript_text(&turns);
    let ctx = RatingContext { repo: env.repo, agenda: &agenda, transcript: &transcript, last_round: termination.round };
    let mut self_reports = BTreeMap::new();
    for entry in &plan.self_report_scales {
        let def = env.repo.get(&entry.abbr).ok_or_else(|| SessionError::RatingIncomplete(vec![entry.abbr.clone()]))?;
        self_reports.insert(entry.abbr.clone(), patient_self_report(profile, def, &ctx, &mut io, params)?);
    }
    let clinician: BTreeMap<String, _> = evaluator_rate(&plan, profile, &ctx, &tracker, &mut io, params)?
        .into_iter()
        .map(|r| (r.scale_abbr.clone(), r))
        .collect();
    let missing: Vec<String> = plan
        .clinician_scales
        .iter()
        .filter(|e| !clinician.contains_key(&e.abbr))
        .chain(plan.self_report_scales.iter().filter(|e| !self_reports.contains_key(&e.abbr)))
        .map(|e| e.abbr.clone())
        .collect();
    if !missing.is_empty() {
        return Err(SessionError::RatingIncomplete(missing));
    }

    let diagnosis = diagnose(
        &DiagnoseInput {
            profile,
            plan: &plan,
            repo: env.repo,
            self_reports: &self_reports,
            clinician_reports: &clinician,
            tracker: &tracker,
            last_round: termination.round,
        },
        &mut io,
    )?;

    let run_meta = RunMeta {
        seed,
        config_hash: env.config_hash.clone(),
        backend_ids: backends.ids(),
        started_unix_ms: started,
        finished_unix_ms: env.session.wall_clock.then(now_ms),
        token_usage: io.usage,
        calls: io.calls_made().iter().map(|(r, n)| (r.as_str().to_string(), *n)).collect(),
        decode: DecodeSettings {
            cot_temperature: params.cot_temperature,
            chat_temperature: params.chat_temperature,
            max_tokens: params.max_tokens,
        },
        evaluator_mode: params.evaluator_mode,
        call_mode: params.call_mode,
        plan_source: outcome.source,
        trace_internal: trace,
        initial_state: trace.then_some(start_state),
        min_rounds: sp.min_rounds,
        exhaustion_window: sp.exhaustion_window,
        termination,
    };
    Ok(CorpusRecord {
        record_id: format!("{}-{seed:016x}", profile.id),
        profile: profile.clone(),
        plan,
        final_transcript: turns,
        patient_self_report: self_reports,
        doctor_clinician_report: clinician,
        diagnosis,
        honesty_echo: profile.honesty.clone(),
        chief_complaint_repaired,
        run_meta,
    })
}
