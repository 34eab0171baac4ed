use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use crate::scales::{Repository, ScaleDefinition, ScalePlan};
use crate::topics::Topic;

/// One thing the Evaluator intends to ask about: a rater-administered item,
/// or a topic needed only by a self-report scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgendaItem {
    pub scale: String,
    pub item: usize,
    pub topic: Topic,
    pub clinician: bool,
}

/// Interview agenda with per-item ask and evidence bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Agenda {
    pub items: Vec<AgendaItem>,
    asked: Vec<Vec<u32>>,
    evidence: Vec<Vec<u32>>,
    required: BTreeSet<Topic>,
    covered: BTreeSet<Topic>,
    topic_evidence: BTreeMap<Topic, Vec<u32>>,
    no_info_streak: u32,
}

fn topics_of(def: &ScaleDefinition) -> impl Iterator<Item = (usize, Topic)> + '_ {
    (0..def.item_count).map(|i| (i, Topic::for_item(def.domain, i)))
}

impl Agenda {
    pub fn build(plan: &ScalePlan, repo: &Repository) -> Agenda {
        let mut items = Vec::new();
        let mut required = BTreeSet::new();
        for entry in &plan.clinician_scales {
            if let Some(def) = repo.get(&entry.abbr) {
                for (i, topic) in topics_of(def) {
                    items.push(AgendaItem { scale: def.abbr.clone(), item: i, topic, clinician: true });
                    required.insert(topic);
                }
            }
        }
        for entry in &plan.self_report_scales {
            if let Some(def) = repo.get(&entry.abbr) {
                for (i, topic) in topics_of(def) {
                    if required.insert(topic) {
                        items.push(AgendaItem { scale: def.abbr.clone(), item: i, topic, clinician: false });
                    }
                }
            }
        }
        let n = items.len();
        Agenda {
            items,
            asked: vec![Vec::new(); n],
            evidence: vec![Vec::new(); n],
            required,
            covered: BTreeSet::new(),
            topic_evidence: BTreeMap::new(),
            no_info_streak: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn required_topics(&self) -> &BTreeSet<Topic> {
        &self.required
    }

    pub fn times_asked(&self, idx: usize) -> usize {
        self.asked[idx].len()
    }

    pub fn has_evidence(&self, idx: usize) -> bool {
        !self.evidence[idx].is_empty()
    }

    /// The item a non-investigating turn should ask: never-asked items in
    /// order, then the least-asked item still lacking evidence, then the
    /// least-asked item overall.
    pub fn next_for_proceed(&self) -> Option<usize> {
        if let Some(i) = (0..self.len()).find(|&i| self.asked[i].is_empty()) {
            return Some(i);
        }
        let least = |pred: &dyn Fn(usize) -> bool| (0..self.len()).filter(|&i| pred(i)).min_by_key(|&i| self.asked[i].len());
        least(&|i| self.evidence[i].is_empty()).or_else(|| least(&|_| true))
    }

    /// Best item to probe a topic with: least-asked item on that topic
    /// lacking evidence, else the first item on that topic.
    pub fn for_topic(&self, topic: Topic) -> Option<usize> {
        (0..self.len())
            .filter(|&i| self.items[i].topic == topic && self.evidence[i].is_empty())
            .min_by_key(|&i| self.asked[i].len())
            .or_else(|| (0..self.len()).find(|&i| self.items[i].topic == topic))
    }

    /// Log the patient's answer to item `idx` at `round`. `answered` means
    /// the topic was engaged at all; `disclosed` that the answer is usable
    /// as evidence. Returns whether the answer added new evidence.
    pub fn record(&mut self, idx: usize, round: u32, answered: bool, disclosed: bool) -> bool {
        let re_ask = !self.asked[idx].is_empty();
        let new_info = disclosed && self.evidence[idx].is_empty();
        self.asked[idx].push(round);
        let topic = self.items[idx].topic;
        if answered {
            self.covered.insert(topic);
        }
        if disclosed {
            self.evidence[idx].push(round);
            self.topic_evidence.entry(topic).or_default().push(round);
        }
        if new_info || !re_ask {
            self.no_info_streak = 0;
        } else {
            self.no_info_streak += 1;
        }
        new_info
    }

    /// Supporting rounds per item for one plan scale.
    pub fn evidence_for(&self, def: &ScaleDefinition) -> BTreeMap<usize, Vec<u32>> {
        let own: BTreeMap<usize, &Vec<u32>> = self
            .items
            .iter()
            .enumerate()
            .filter(|(_, it)| it.clinician && it.scale == def.abbr)
            .map(|(i, it)| (it.item, &self.evidence[i]))
            .collect();
        let mut out = BTreeMap::new();
        for (i, topic) in topics_of(def) {
            let rounds = match own.get(&i) {
                Some(r) => (*r).clone(),
                None => self.topic_evidence.get(&topic).cloned().unwrap_or_default(),
            };
            if !rounds.is_empty() {
                out.insert(i, rounds);
            }
        }
        out
    }

    /// Current saturation given the number of answered interview rounds.
    pub fn saturation(&self, rounds: u32, min_rounds: u32, exhaustion_window: u32) -> SaturationStatus {
        SaturationStatus {
            required_topics: self.required.clone(),
            covered_topics: self.covered.clone(),
            rounds,
            min_rounds,
            evidence_sufficient: self.evidence.iter().all(|e| !e.is_empty()),
            patient_exhausted: exhaustion_window > 0 && self.no_info_streak >= exhaustion_window,
        }
    }
}

/// The four stopping conditions; termination needs at least two.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaturationStatus {
    pub required_topics: BTreeSet<Topic>,
    pub covered_topics: BTreeSet<Topic>,
    pub rounds: u32,
    pub min_rounds: u32,
    pub evidence_sufficient: bool,
    pub patient_exhausted: bool,
}

impl SaturationStatus {
    pub fn domains_covered(&self) -> bool {
        self.required_topics.is_subset(&self.covered_topics)
    }

    pub fn rounds_reached(&self) -> bool {
        self.rounds >= self.min_rounds
    }

    pub fn conditions(&self) -> [bool; 4] {
        [self.domains_covered(), self.rounds_reached(), self.evidence_sufficient, self.patient_exhausted]
    }

    pub fn terminate_ok(&self) -> bool {
        self.conditions().iter().filter(|c| **c).count() >= 2
    }

    /// A status with no condition met.
    pub fn unsaturated() -> SaturationStatus {
        SaturationStatus {
            required_topics: BTreeSet::from([Topic::Mood]),
            covered_topics: BTreeSet::new(),
            rounds: 0,
            min_rounds: 18,
            evidence_sufficient: false,
            patient_exhausted: false,
        }
    }

    /// A status with every condition met.
    pub fn saturated() -> SaturationStatus {
        SaturationStatus {
            required_topics: BTreeSet::from([Topic::Mood]),
            covered_topics: BTreeSet::from([Topic::Mood]),
            rounds: 18,
            min_rounds: 18,
            evidence_sufficient: true,
            patient_exhausted: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scales::PlanEntry;

    fn plan() -> ScalePlan {
        ScalePlan {
            clinician_scales: vec![PlanEntry::new("MADRS", "")],
            self_report_scales: vec![PlanEntry::new("PHQ-9", ""), PlanEntry::new("ISI", "")],
        }
    }

    #[test]
    fn agenda_layout() {
        let a = Agenda::build(&plan(), &Repository::bundled());
        assert_eq!(a.len(), 11);
        assert!(a.items[..10].iter().all(|i| i.clinician && i.scale == "MADRS"));
        assert_eq!(a.items[10], AgendaItem { scale: "ISI".into(), item: 1, topic: Topic::Daytime, clinician: false });
        assert_eq!(a.required_topics().len(), 10);
    }

    #[test]
    fn proceed_order_and_exhaustion() {
        let mut a = Agenda::build(&plan(), &Repository::bundled());
        for round in 0..11u32 {
            let i = a.next_for_proceed().unwrap();
            assert_eq!(i, round as usize);
            assert!(!a.record(i, round + 2, true, false));
        }
        let s = a.saturation(11, 18, 3);
        assert!(s.domains_covered() && !s.evidence_sufficient && !s.patient_exhausted);
        for k in 0..3 {
            let i = a.next_for_proceed().unwrap();
            assert_eq!(i, k);
            a.record(i, 13 + k as u32, true, false);
        }
        let s = a.saturation(14, 18, 3);
        assert!(s.patient_exhausted && s.terminate_ok());
    }

    #[test]
    fn new_evidence_resets_exhaustion() {
        let mut a = Agenda::build(&plan(), &Repository::bundled());
        a.record(0, 2, true, false);
        a.record(0, 3, true, false);
        a.record(0, 4, true, false);
        assert!(a.record(0, 5, true, true));
        assert!(!a.saturation(5, 18, 3).patient_exhausted);
        assert_eq!(a.for_topic(Topic::Mood), Some(9));
    }

    #[test]
    fn evidence_maps_per_scale() {
        let repo = Repository::bundled();
        let mut a = Agenda::build(&plan(), &repo);
        a.record(2, 4, true, true);
        let madrs = a.evidence_for(repo.get("MADRS").unwrap());
        assert_eq!(madrs, BTreeMap::from([(2, vec![4])]));
        let phq = a.evidence_for(repo.get("PHQ-9").unwrap());
        assert_eq!(phq, BTreeMap::from([(2, vec![4])]));
    }

    #[test]
    fn two_of_four_rule() {
        let mut s = SaturationStatus::unsaturated();
        assert!(!s.terminate_ok());
        s.rounds = 18;
        assert!(!s.terminate_ok());
        s.patient_exhausted = true;
        assert!(s.terminate_ok());
    }
}
