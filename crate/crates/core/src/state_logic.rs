//! Trigger-action logic on top of stable state events: state sets with
//! discrete or continuous semantics, entry counters, staggered parameters,
//! and bindings from triggers to ordered action lists.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{AssetId, BehaviorId, StateId, StateSetId};
use crate::teach::StateEvent;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateLogicError {
    #[error("state set {0} is not continuous")]
    NotContinuous(StateSetId),
    #[error("unknown state {0}")]
    UnknownState(StateId),
    #[error("unknown state set {0}")]
    UnknownStateSet(StateSetId),
    #[error("state {0} belongs to more than one state set")]
    StateInTwoSets(StateId),
    #[error("invalid state set {id}: {reason}")]
    InvalidStateSet { id: StateSetId, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSetKind {
    Discrete,
    /// States registered in sequence; each maps to an evenly spaced value.
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StateDef {
    pub id: StateId,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StateSet {
    pub id: StateSetId,
    pub kind: StateSetKind,
    /// Position in this list is the state's ordinal within the set.
    pub states: Vec<StateDef>,
    #[serde(default)]
    pub param_start: f64,
    #[serde(default = "one")]
    pub param_end: f64,
}

fn one() -> f64 {
    1.0
}

impl StateSet {
    pub fn discrete(id: impl Into<StateSetId>) -> Self {
        Self { id: id.into(), kind: StateSetKind::Discrete, states: Vec::new(), param_start: 0.0, param_end: 1.0 }
    }

    pub fn continuous(id: impl Into<StateSetId>, param_start: f64, param_end: f64) -> Self {
        Self { id: id.into(), kind: StateSetKind::Continuous, states: Vec::new(), param_start, param_end }
    }

    pub fn with_state(mut self, id: impl Into<StateId>, name: impl Into<String>) -> Self {
        self.states.push(StateDef { id: id.into(), name: name.into() });
        self
    }

    pub fn ordinal_of(&self, state: &StateId) -> Option<usize> {
        self.states.iter().position(|s| &s.id == state)
    }

    pub fn contains(&self, state: &StateId) -> bool {
        self.ordinal_of(state).is_some()
    }

    pub fn validate(&self) -> Result<(), StateLogicError> {
        let invalid = |reason: &str| StateLogicError::InvalidStateSet { id: self.id.clone(), reason: reason.into() };
        if self.kind == StateSetKind::Continuous {
            if self.states.len() < 2 {
                return Err(invalid("continuous sets need at least 2 states"));
            }
            if !self.param_start.is_finite() || !self.param_end.is_finite() {
                return Err(invalid("parameter range must be finite"));
            }
        }
        for (i, s) in self.states.iter().enumerate() {
            if self.states[..i].iter().any(|o| o.id == s.id) {
                return Err(invalid("duplicate state"));
            }
        }
        Ok(())
    }
}

/// Evenly spaced value for `state`: `start + ordinal * (end - start) / (K - 1)`.
/// Both endpoints are returned exactly.
pub fn staggered_param(set: &StateSet, state: &StateId) -> Result<f64, StateLogicError> {
    if set.kind != StateSetKind::Continuous {
        return Err(StateLogicError::NotContinuous(set.id.clone()));
    }
    let ordinal = set.ordinal_of(state).ok_or_else(|| StateLogicError::UnknownState(state.clone()))?;
    let last = set.states.len() - 1;
    Ok(if ordinal == 0 {
        set.param_start
    } else if ordinal == last {
        set.param_end
    } else {
        set.param_start + (ordinal as f64 * (set.param_end - set.param_start)) / last as f64
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "on", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum Trigger {
    Enter { state: StateId },
    Transition { from: StateId, to: StateId },
}

impl Trigger {
    pub fn matches(&self, event: &StateEvent) -> bool {
        match self {
            Trigger::Enter { state } => &event.to == state,
            Trigger::Transition { from, to } => &event.to == to && event.from.as_ref() == Some(from),
        }
    }

    pub fn states(&self) -> Vec<&StateId> {
        match self {
            Trigger::Enter { state } => vec![state],
            Trigger::Transition { from, to } => vec![from, to],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum Action {
    #[serde(rename_all = "camelCase")]
    ApplyKeyedScene { state_id: StateId },
    #[serde(rename_all = "camelCase")]
    PlayAudio { asset_id: AssetId },
    /// Sets a named parameter; continuous state sets publish under their id.
    #[serde(rename_all = "camelCase")]
    SetParameter { parameter: StateSetId, value: f64 },
    #[serde(rename_all = "camelCase")]
    RunBehavior { behavior_id: BehaviorId, on: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TriggerBinding {
    pub trigger: Trigger,
    pub actions: Vec<Action>,
}

impl TriggerBinding {
    pub fn new(trigger: Trigger, actions: Vec<Action>) -> Self {
        Self { trigger, actions }
    }

    /// All state ids this binding refers to.
    pub fn referenced_states(&self) -> Vec<&StateId> {
        let mut out = self.trigger.states();
        out.extend(self.actions.iter().filter_map(|a| match a {
            Action::ApplyKeyedScene { state_id } => Some(state_id),
            _ => None,
        }));
        out
    }
}

pub type ActionList = Vec<Action>;

/// Mutable trigger-action state, driven by one event loop.
#[derive(Debug, Clone, Default)]
pub struct StateRuntime {
    sets: Vec<StateSet>,
    bindings: Vec<TriggerBinding>,
    counters: BTreeMap<StateId, u64>,
    params: BTreeMap<StateSetId, f64>,
    current: Option<StateId>,
}

impl StateRuntime {
    pub fn new(sets: Vec<StateSet>, bindings: Vec<TriggerBinding>) -> Result<Self, StateLogicError> {
        let mut seen: Vec<&StateId> = Vec::new();
        for set in &sets {
            set.validate()?;
            for s in &set.states {
                if seen.contains(&&s.id) {
                    return Err(StateLogicError::StateInTwoSets(s.id.clone()));
                }
                seen.push(&s.id);
            }
        }
        for b in &bindings {
            if let Some(missing) = b.referenced_states().into_iter().find(|s| !seen.contains(s)) {
                return Err(StateLogicError::UnknownState(missing.clone()));
            }
        }
        let counters = seen.iter().map(|s| ((*s).clone(), 0)).collect();
        Ok(Self { sets, bindings, counters, params: BTreeMap::new(), current: None })
    }

    pub fn set_of(&self, state: &StateId) -> Option<&StateSet> {
        self.sets.iter().find(|s| s.contains(state))
    }

    pub fn sets(&self) -> &[StateSet] {
        &self.sets
    }

    pub fn bindings(&self) -> &[TriggerBinding] {
        &self.bindings
    }

    pub fn count(&self, state: &StateId) -> u64 {
        self.counters.get(state).copied().unwrap_or(0)
    }

    pub fn counters(&self) -> &BTreeMap<StateId, u64> {
        &self.counters
    }

    pub fn current(&self) -> Option<&StateId> {
        self.current.as_ref()
    }

    pub fn parameter(&self, id: &StateSetId) -> Option<f64> {
        self.params.get(id).copied()
    }

    pub fn parameters(&self) -> &BTreeMap<StateSetId, f64> {
        &self.params
    }

    /// Counts the entry, then collects matching binding actions in
    /// declaration order, followed by the staggered value when the state
    /// belongs to a continuous set.
    pub fn on_state_event(&mut self, event: &StateEvent) -> ActionList {
        *self.counters.entry(event.to.clone()).or_insert(0) += 1;
        self.current = Some(event.to.clone());

        let mut actions: ActionList = self
            .bindings
            .iter()
            .filter(|b| b.trigger.matches(event))
            .flat_map(|b| b.actions.iter().cloned())
            .collect();

        if let Some(set) = self.sets.iter().find(|s| s.contains(&event.to)) {
            if set.kind == StateSetKind::Continuous {
                let value = staggered_param(set, &event.to).expect("continuous set containing state");
                actions.push(Action::SetParameter { parameter: set.id.clone(), value });
            }
        }
        for a in &actions {
            if let Action::SetParameter { parameter, value } = a {
                self.params.insert(parameter.clone(), *value);
            }
        }
        actions
    }

    pub fn reset_counters(&mut self) {
        self.counters.values_mut().for_each(|c| *c = 0);
    }

    /// Counters, parameters and current state back to their initial values.
    pub fn reset(&mut self) {
        self.reset_counters();
        self.params.clear();
        self.current = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(from: Option<&str>, to: &str) -> StateEvent {
        StateEvent { to: to.into(), from: from.map(Into::into), timestamp_ms: 0, run_length: 3, min_confidence: 1.0 }
    }

    fn continuous(k: usize, a: f64, b: f64) -> StateSet {
        (0..k).fold(StateSet::continuous("slider", a, b), |s, i| s.with_state(format!("s{i}"), ""))
    }

    fn values(set: &StateSet) -> Vec<f64> {
        set.states.iter().map(|s| staggered_param(set, &s.id).unwrap()).collect()
    }

    #[test]
    fn six_states_over_unit_range() {
        assert_eq!(values(&continuous(6, 0.0, 1.0)), vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]);
    }

    #[test]
    fn two_states_are_the_endpoints() {
        assert_eq!(values(&continuous(2, -3.5, 7.25)), vec![-3.5, 7.25]);
    }

    #[test]
    fn five_states_ten_to_twenty() {
        assert_eq!(values(&continuous(5, 10.0, 20.0)), vec![10.0, 12.5, 15.0, 17.5, 20.0]);
    }

    #[test]
    fn staggered_errors() {
        let d = StateSet::discrete("d").with_state("a", "").with_state("b", "");
        assert_eq!(staggered_param(&d, &"a".into()), Err(StateLogicError::NotContinuous("d".into())));
        let c = continuous(3, 0.0, 1.0);
        assert_eq!(staggered_param(&c, &"nope".into()), Err(StateLogicError::UnknownState("nope".into())));
        assert!(StateSet::continuous("c", 0.0, 1.0).with_state("a", "").validate().is_err());
    }

    fn discrete_ab() -> StateSet {
        StateSet::discrete("d").with_state("A", "").with_state("B", "")
    }

    #[test]
    fn counts_entries_including_first() {
        let mut rt = StateRuntime::new(vec![discrete_ab()], vec![]).unwrap();
        for e in [ev(None, "A"), ev(Some("A"), "B"), ev(Some("B"), "A")] {
            rt.on_state_event(&e);
        }
        assert_eq!(rt.count(&"A".into()), 2);
        assert_eq!(rt.count(&"B".into()), 1);
    }

    #[test]
    fn transition_trigger_needs_prior_state() {
        let binding = TriggerBinding::new(
            Trigger::Transition { from: "A".into(), to: "B".into() },
            vec![Action::PlayAudio { asset_id: "x".into() }],
        );
        let set = discrete_ab().with_state("C", "");
        let mut rt = StateRuntime::new(vec![set], vec![binding]).unwrap();
        assert!(rt.on_state_event(&ev(None, "C")).is_empty());
        assert!(rt.on_state_event(&ev(Some("C"), "B")).is_empty());
        rt.on_state_event(&ev(Some("B"), "A"));
        assert_eq!(rt.on_state_event(&ev(Some("A"), "B")), vec![Action::PlayAudio { asset_id: "x".into() }]);
    }

    #[test]
    fn bindings_fire_in_declaration_order_then_parameter() {
        let bindings = vec![
            TriggerBinding::new(Trigger::Enter { state: "s1".into() }, vec![Action::ApplyKeyedScene { state_id: "s1".into() }]),
            TriggerBinding::new(
                Trigger::Enter { state: "s1".into() },
                vec![Action::RunBehavior { behavior_id: "spin".into(), on: true }],
            ),
        ];
        let mut rt = StateRuntime::new(vec![continuous(3, 0.0, 10.0)], bindings).unwrap();
        let actions = rt.on_state_event(&ev(None, "s1"));
        assert_eq!(
            actions,
            vec![
                Action::ApplyKeyedScene { state_id: "s1".into() },
                Action::RunBehavior { behavior_id: "spin".into(), on: true },
                Action::SetParameter { parameter: "slider".into(), value: 5.0 },
            ]
        );
        assert_eq!(rt.parameter(&"slider".into()), Some(5.0));
    }

    #[test]
    fn reset_is_idempotent() {
        let mut rt = StateRuntime::new(vec![discrete_ab()], vec![]).unwrap();
        rt.on_state_event(&ev(None, "A"));
        rt.reset_counters();
        assert_eq!(rt.count(&"A".into()), 0);
        rt.reset_counters();
        assert_eq!(rt.count(&"A".into()), 0);
        rt.on_state_event(&ev(Some("A"), "A"));
        assert_eq!(rt.count(&"A".into()), 1);
    }

    #[test]
    fn rejects_state_in_two_sets_and_dangling_binding() {
        let err = StateRuntime::new(vec![discrete_ab(), StateSet::discrete("e").with_state("A", "")], vec![]);
        assert_eq!(err.unwrap_err(), StateLogicError::StateInTwoSets("A".into()));
        let b = TriggerBinding::new(Trigger::Enter { state: "Z".into() }, vec![]);
        assert_eq!(StateRuntime::new(vec![discrete_ab()], vec![b]).unwrap_err(), StateLogicError::UnknownState("Z".into()));
    }
}
