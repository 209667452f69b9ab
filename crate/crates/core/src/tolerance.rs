//! Discretization slack certified by refinement.

use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

/// One observable measured on a graph and on its refinement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Observable {
    pub name: String,
    pub coarse: f64,
    pub fine: f64,
    pub rel_change: f64,
}

/// Evidence from an `h -> h/2` refinement pair.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RefinementEvidence {
    pub h_coarse: f64,
    pub h_fine: f64,
    pub observables: Vec<Observable>,
}

impl RefinementEvidence {
    pub fn new(h_coarse: f64, h_fine: f64) -> Self {
        RefinementEvidence { h_coarse, h_fine, observables: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, coarse: f64, fine: f64) {
        self.push_against(name, coarse, fine, 0.0);
    }

    /// Like [`push`](Self::push), but the change is taken relative to at least
    /// `reference`. For quantities compared against a bound whose continuum
    /// value may be zero (`l_hat` on a round sphere).
    pub fn push_against(&mut self, name: impl Into<String>, coarse: f64, fine: f64, reference: f64) {
        let scale = coarse.abs().max(fine.abs()).max(reference.abs());
        let rel_change = if scale == 0.0 { 0.0 } else { (coarse - fine).abs() / scale };
        self.observables.push(Observable { name: name.into(), coarse, fine, rel_change });
    }

    pub fn max_rel_change(&self) -> f64 {
        self.observables.iter().map(|o| o.rel_change).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceStatus {
    /// No refinement evidence was supplied.
    Assumed,
    /// Observed refinement change does not exceed the slack.
    Certified,
    /// Observed refinement change exceeds the slack.
    Insufficient,
}

/// Relative slack `eps_h` applied to continuum inequalities on graphs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tolerance {
    pub eps_h: f64,
    pub status: ToleranceStatus,
    pub evidence: Option<RefinementEvidence>,
}

impl Tolerance {
    pub fn assumed(eps_h: f64) -> Self {
        Tolerance { eps_h, status: ToleranceStatus::Assumed, evidence: None }
    }

    /// Slack `eps_h` backed by refinement evidence.
    pub fn with_evidence(eps_h: f64, evidence: RefinementEvidence) -> Self {
        let status = if evidence.max_rel_change() <= eps_h {
            ToleranceStatus::Certified
        } else {
            ToleranceStatus::Insufficient
        };
        Tolerance { eps_h, status, evidence: Some(evidence) }
    }

    pub fn is_certified(&self) -> bool {
        self.status == ToleranceStatus::Certified
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_follows_evidence() {
        assert_eq!(Tolerance::assumed(0.15).status, ToleranceStatus::Assumed);
        let mut ev = RefinementEvidence::new(0.1, 0.05);
        ev.push("l_hat", 1.0, 1.05);
        assert!(Tolerance::with_evidence(0.15, ev.clone()).is_certified());
        ev.push("b", 1.0, 2.0);
        assert_eq!(Tolerance::with_evidence(0.15, ev).status, ToleranceStatus::Insufficient);
    }

    #[test]
    fn reference_floors_the_scale() {
        let mut ev = RefinementEvidence::new(0.1, 0.05);
        ev.push_against("l_hat", 0.005, 0.003, 1.0);
        assert!((ev.observables[0].rel_change - 0.002).abs() < 1e-15);
    }
}
