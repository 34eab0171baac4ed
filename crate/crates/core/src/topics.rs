//! Closed topic vocabulary shared by honesty overrides, the interview agenda
//! and scale item mapping.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::scales::ScaleDomain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topic {
    Mood,
    Anhedonia,
    Sleep,
    Appetite,
    Energy,
    Guilt,
    Concentration,
    Psychomotor,
    Risk,
    Worry,
    Nervousness,
    Restlessness,
    Irritability,
    Panic,
    Somatic,
    Avoidance,
    Trauma,
    Intrusion,
    Hyperarousal,
    Daytime,
    Personality,
}

impl Topic {
    pub const ALL: [Topic; 21] = [
        Topic::Mood,
        Topic::Anhedonia,
        Topic::Sleep,
        Topic::Appetite,
        Topic::Energy,
        Topic::Guilt,
        Topic::Concentration,
        Topic::Psychomotor,
        Topic::Risk,
        Topic::Worry,
        Topic::Nervousness,
        Topic::Restlessness,
        Topic::Irritability,
        Topic::Panic,
        Topic::Somatic,
        Topic::Avoidance,
        Topic::Trauma,
        Topic::Intrusion,
        Topic::Hyperarousal,
        Topic::Daytime,
        Topic::Personality,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Topic::Mood => "mood",
            Topic::Anhedonia => "anhedonia",
            Topic::Sleep => "sleep",
            Topic::Appetite => "appetite",
            Topic::Energy => "energy",
            Topic::Guilt => "guilt",
            Topic::Concentration => "concentration",
            Topic::Psychomotor => "psychomotor",
            Topic::Risk => "risk",
            Topic::Worry => "worry",
            Topic::Nervousness => "nervousness",
            Topic::Restlessness => "restlessness",
            Topic::Irritability => "irritability",
            Topic::Panic => "panic",
            Topic::Somatic => "somatic",
            Topic::Avoidance => "avoidance",
            Topic::Trauma => "trauma",
            Topic::Intrusion => "intrusion",
            Topic::Hyperarousal => "hyperarousal",
            Topic::Daytime => "daytime",
            Topic::Personality => "personality",
        }
    }

    /// Plain-language description used in engine-built questions and
    /// directives.
    pub fn describe(self) -> &'static str {
        match self {
            Topic::Mood => "your mood lately",
            Topic::Anhedonia => "interest in things you used to enjoy",
            Topic::Sleep => "your sleep",
            Topic::Appetite => "your appetite and weight",
            Topic::Energy => "your energy levels",
            Topic::Guilt => "feelings of guilt or self-blame",
            Topic::Concentration => "your focus and concentration",
            Topic::Psychomotor => "feeling slowed down or restless in your body",
            Topic::Risk => "any thoughts of hurting yourself",
            Topic::Worry => "how much you worry",
            Topic::Nervousness => "feeling nervous or on edge",
            Topic::Restlessness => "being unable to sit still",
            Topic::Irritability => "irritability",
            Topic::Panic => "sudden waves of fear",
            Topic::Somatic => "physical sensations like a racing heart",
            Topic::Avoidance => "things or places you avoid",
            Topic::Trauma => "the difficult event you went through",
            Topic::Intrusion => "unwanted memories or nightmares",
            Topic::Hyperarousal => "feeling jumpy or always on guard",
            Topic::Daytime => "how tired you feel during the day",
            Topic::Personality => "how you usually are as a person",
        }
    }

    /// Map free text (e.g. an Evaluator's "Depressed Mood") onto the
    /// vocabulary. Exact names win; otherwise the first keyword hit.
    pub fn parse_loose(text: &str) -> Option<Topic> {
        let lower = text.trim().to_lowercase();
        if let Some(t) = Topic::ALL.iter().find(|t| t.as_str() == lower) {
            return Some(*t);
        }
        const KEYWORDS: &[(&str, Topic)] = &[
            ("suicid", Topic::Risk),
            ("self-harm", Topic::Risk),
            ("self harm", Topic::Risk),
            ("risk", Topic::Risk),
            ("anhedonia", Topic::Anhedonia),
            ("interest", Topic::Anhedonia),
            ("pleasure", Topic::Anhedonia),
            ("daytime", Topic::Daytime),
            ("sleepiness", Topic::Daytime),
            ("sleep", Topic::Sleep),
            ("insomnia", Topic::Sleep),
            ("appetite", Topic::Appetite),
            ("weight", Topic::Appetite),
            ("energy", Topic::Energy),
            ("fatigue", Topic::Energy),
            ("tired", Topic::Energy),
            ("guilt", Topic::Guilt),
            ("worth", Topic::Guilt),
            ("concentrat", Topic::Concentration),
            ("focus", Topic::Concentration),
            ("psychomotor", Topic::Psychomotor),
            ("slowed", Topic::Psychomotor),
            ("worry", Topic::Worry),
            ("nervous", Topic::Nervousness),
            ("anxious", Topic::Nervousness),
            ("tense", Topic::Nervousness),
            ("restless", Topic::Restlessness),
            ("irritab", Topic::Irritability),
            ("panic", Topic::Panic),
            ("somatic", Topic::Somatic),
            ("physical", Topic::Somatic),
            ("avoid", Topic::Avoidance),
            ("trauma", Topic::Trauma),
            ("intrusi", Topic::Intrusion),
            ("flashback", Topic::Intrusion),
            ("nightmare", Topic::Intrusion),
            ("hyperarous", Topic::Hyperarousal),
            ("startle", Topic::Hyperarousal),
            ("on guard", Topic::Hyperarousal),
            ("personality", Topic::Personality),
            ("mood", Topic::Mood),
            ("sad", Topic::Mood),
            ("depress", Topic::Mood),
        ];
        KEYWORDS
            .iter()
            .find(|(kw, _)| lower.contains(kw))
            .map(|(_, t)| *t)
    }

    /// Topics probed by a scale domain, in the order items cycle through them.
    pub fn for_domain(domain: ScaleDomain) -> &'static [Topic] {
        match domain {
            ScaleDomain::Depression => &[
                Topic::Mood,
                Topic::Anhedonia,
                Topic::Sleep,
                Topic::Appetite,
                Topic::Energy,
                Topic::Guilt,
                Topic::Concentration,
                Topic::Psychomotor,
                Topic::Risk,
            ],
            ScaleDomain::Anxiety => &[
                Topic::Worry,
                Topic::Nervousness,
                Topic::Restlessness,
                Topic::Irritability,
                Topic::Panic,
                Topic::Somatic,
                Topic::Avoidance,
            ],
            ScaleDomain::Ptsd => &[
                Topic::Trauma,
                Topic::Intrusion,
                Topic::Avoidance,
                Topic::Mood,
                Topic::Hyperarousal,
                Topic::Sleep,
            ],
            ScaleDomain::Sleep => &[Topic::Sleep, Topic::Daytime],
            ScaleDomain::MoodPersonality => &[Topic::Personality, Topic::Mood],
        }
    }

    /// Topic for item `index` (0-based) of a scale in `domain`.
    pub fn for_item(domain: ScaleDomain, index: usize) -> Topic {
        let topics = Topic::for_domain(domain);
        topics[index % topics.len()]
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loose_parsing() {
        assert_eq!(Topic::parse_loose("Depressed Mood"), Some(Topic::Mood));
        assert_eq!(Topic::parse_loose("sleep"), Some(Topic::Sleep));
        assert_eq!(Topic::parse_loose("Suicidal ideation"), Some(Topic::Risk));
        assert_eq!(Topic::parse_loose("Daytime sleepiness"), Some(Topic::Daytime));
        assert_eq!(Topic::parse_loose("weather"), None);
    }

    #[test]
    fn items_cycle_through_domain_topics() {
        assert_eq!(Topic::for_item(ScaleDomain::Depression, 0), Topic::Mood);
        assert_eq!(Topic::for_item(ScaleDomain::Depression, 9), Topic::Mood);
        assert_eq!(Topic::for_item(ScaleDomain::Sleep, 3), Topic::Daytime);
    }
}
