use super::{DeceptionStrategy, FeatureBank, FieldPath, HonestyState, PatientProfile, ProfileError};
use crate::rng::{derive_seed, fnv1a};

const TEMPLATES: [&str; 3] = [
    "[{id}] Behavioral constraint: {label}. Observable cues: {cues}.",
    "[{id}] Presentation rule: {label}. Show it through: {cues}.",
    "[{id}] When this topic comes up: {label}. Cues to display: {cues}.",
];

/// Set the honesty state and write each feature's observables into its
/// target fields. Ground truth, demographics and risk flags are untouched.
pub fn augment_profile(
    base: &PatientProfile,
    strategy: DeceptionStrategy,
    feature_ids: &[String],
    seed: u64,
    bank: &FeatureBank,
) -> Result<PatientProfile, ProfileError> {
    if strategy != DeceptionStrategy::Frankness && feature_ids.is_empty() {
        return Err(ProfileError::MissingFeatures);
    }
    let mut features = Vec::with_capacity(feature_ids.len());
    for id in feature_ids {
        let f = bank.get(id).ok_or_else(|| ProfileError::UnknownFeature(id.clone()))?;
        if f.strategy_class != strategy {
            return Err(ProfileError::StrategyMismatch { id: id.clone(), expected: strategy, found: f.strategy_class });
        }
        features.push(f);
    }

    let mut out = base.clone();
    for f in features {
        let h = derive_seed(seed, "augment", fnv1a(&f.id));
        let template = TEMPLATES[(h % TEMPLATES.len() as u64) as usize];
        let n = f.observables.len().max(1);
        let rot = ((h >> 16) % n as u64) as usize;
        let cues: Vec<&str> =
            f.observables.iter().cycle().skip(rot).take(f.observables.len()).map(String::as_str).collect();
        let text = template
            .replace("{id}", &f.id)
            .replace("{label}", &f.label)
            .replace("{cues}", &cues.join("; "));
        for target in &f.target_fields {
            let path = FieldPath::parse(target)
                .ok_or_else(|| ProfileError::UnresolvedTarget { id: f.id.clone(), path: target.clone() })?;
            path.append(&mut out, &text);
        }
    }
    out.honesty = HonestyState {
        deception_strategy: strategy,
        active_features: feature_ids.to_vec(),
        topic_overrides: base.honesty.topic_overrides.clone(),
    };
    Ok(out)
}
