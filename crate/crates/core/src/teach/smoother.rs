//! Hysteresis smoothing of per-frame predictions into stable state events.
//!
//! A candidate state becomes stable once the last `hysteresis_m` predictions
//! all name it with confidence at least `confidence_tau`. A prediction below
//! `tau` breaks the run.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{Prediction, TeachError};
use crate::ids::StateId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SmootherConfig {
    /// Number of recent predictions retained for inspection.
    pub window_n: usize,
    pub confidence_tau: f64,
    pub hysteresis_m: usize,
}

impl Default for SmootherConfig {
    fn default() -> Self {
        Self { window_n: 7, confidence_tau: 0.6, hysteresis_m: 3 }
    }
}

impl SmootherConfig {
    pub fn validate(&self) -> Result<(), TeachError> {
        if self.hysteresis_m == 0 || self.hysteresis_m > self.window_n {
            return Err(TeachError::InvalidConfig(format!(
                "need 1 <= hysteresis_m ({}) <= window_n ({})",
                self.hysteresis_m, self.window_n
            )));
        }
        if !(0.0..=1.0).contains(&self.confidence_tau) {
            return Err(TeachError::InvalidConfig(format!("confidence_tau {} outside [0,1]", self.confidence_tau)));
        }
        Ok(())
    }
}

/// A change of the stable state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StateEvent {
    pub to: StateId,
    pub from: Option<StateId>,
    pub timestamp_ms: u64,
    /// Length of the confident run that triggered the event (always >= M).
    pub run_length: usize,
    /// Lowest confidence within the triggering run.
    pub min_confidence: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SmootherState {
    pub stable: Option<StateId>,
    candidate: Option<StateId>,
    run: usize,
    run_min_confidence: f64,
    window: VecDeque<Prediction>,
}

impl SmootherState {
    pub fn recent(&self) -> impl Iterator<Item = &Prediction> {
        self.window.iter()
    }
}

pub fn smooth(pred: &Prediction, state: &mut SmootherState, cfg: &SmootherConfig) -> Option<StateEvent> {
    state.window.push_back(pred.clone());
    while state.window.len() > cfg.window_n.max(1) {
        state.window.pop_front();
    }

    if pred.top_confidence < cfg.confidence_tau {
        state.candidate = None;
        state.run = 0;
        return None;
    }
    if state.candidate.as_ref() == Some(&pred.top_state_id) {
        state.run += 1;
        state.run_min_confidence = state.run_min_confidence.min(pred.top_confidence);
    } else {
        state.candidate = Some(pred.top_state_id.clone());
        state.run = 1;
        state.run_min_confidence = pred.top_confidence;
    }

    if state.run >= cfg.hysteresis_m && state.stable.as_ref() != state.candidate.as_ref() {
        let to = state.candidate.clone().expect("candidate set above");
        let from = state.stable.replace(to.clone());
        return Some(StateEvent {
            to,
            from,
            timestamp_ms: pred.timestamp_ms,
            run_length: state.run,
            min_confidence: state.run_min_confidence,
        });
    }
    None
}

/// Owns a config and state; convenience wrapper over [`smooth`].
#[derive(Debug, Clone, Default)]
pub struct Smoother {
    pub config: SmootherConfig,
    pub state: SmootherState,
}

impl Smoother {
    pub fn new(config: SmootherConfig) -> Result<Self, TeachError> {
        config.validate()?;
        Ok(Self { config, state: SmootherState::default() })
    }

    pub fn push(&mut self, pred: &Prediction) -> Option<StateEvent> {
        smooth(pred, &mut self.state, &self.config)
    }

    pub fn stable(&self) -> Option<&StateId> {
        self.state.stable.as_ref()
    }

    pub fn reset(&mut self) {
        self.state = SmootherState::default();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pred(state: &str, conf: f64, t: u64) -> Prediction {
        let ordinal = (state.as_bytes()[0] - b'A') as usize;
        let mut probabilities = vec![(1.0 - conf) / 2.0; 3];
        probabilities[ordinal] = conf;
        Prediction { probabilities, top_state_id: state.into(), top_ordinal: ordinal, top_confidence: conf, timestamp_ms: t }
    }

    fn run(stream: &[(&str, f64)]) -> Vec<(usize, StateEvent)> {
        let mut s = Smoother::new(SmootherConfig::default()).unwrap();
        stream
            .iter()
            .enumerate()
            .filter_map(|(i, &(st, c))| s.push(&pred(st, c, i as u64)).map(|e| (i, e)))
            .collect()
    }

    fn repeat(state: &'static str, conf: f64, n: usize) -> Vec<(&'static str, f64)> {
        vec![(state, conf); n]
    }

    #[test]
    fn constant_stream_enters_once_at_m_minus_1() {
        let events = run(&repeat("A", 1.0, 20));
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].0, 2);
        assert_eq!(events[0].1.from, None);
        assert_eq!(events[0].1.to, "A".into());
    }

    #[test]
    fn short_flicker_is_ignored() {
        let stream = [repeat("A", 1.0, 10), repeat("B", 1.0, 2), repeat("A", 1.0, 10)].concat();
        let events = run(&stream);
        assert_eq!(events.len(), 1);
        assert!(events.iter().all(|(_, e)| e.to != "B".into()));
    }

    #[test]
    fn transition_at_index_12() {
        let stream = [repeat("A", 1.0, 10), repeat("B", 1.0, 10)].concat();
        let events = run(&stream);
        assert_eq!(events.len(), 2);
        assert_eq!(events[1].0, 12);
        assert_eq!(events[1].1.from, Some("A".into()));
        assert_eq!(events[1].1.to, "B".into());
    }

    #[test]
    fn low_confidence_resets_run() {
        let stream = [repeat("B", 0.9, 2), repeat("B", 0.5, 1), repeat("B", 0.9, 2)].concat();
        assert!(run(&stream).is_empty());
        let stream = [repeat("C", 0.4, 30)].concat();
        assert!(run(&stream).is_empty());
    }

    #[test]
    fn config_bounds() {
        assert!(SmootherConfig { hysteresis_m: 8, ..Default::default() }.validate().is_err());
        assert!(SmootherConfig { hysteresis_m: 0, ..Default::default() }.validate().is_err());
        assert!(SmootherConfig { hysteresis_m: 7, ..Default::default() }.validate().is_ok());
    }
}
