use super::record::CorpusRecord;

/// The public projection of a record: per-round patient and clinician
/// traces removed.
pub fn public_view(record: &CorpusRecord) -> CorpusRecord {
    let mut out = record.clone();
    for t in &mut out.final_transcript {
        t.patient_trace = None;
        t.clinician_trace = None;
    }
    out.run_meta.trace_internal = false;
    out.run_meta.initial_state = None;
    out
}
