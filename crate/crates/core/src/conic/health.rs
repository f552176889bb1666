//! Process-wide record of the accuracy of every `Optimal` solve, measured
//! by [`kkt_residuals`] on the returned point rather than by the solver's
//! own stopping test.

use super::{kkt_residuals, ConicProblem, ConicSolution, ConicStatus};
use serde::Serialize;
use std::sync::Mutex;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct HealthSnapshot {
    pub optimal_solves: u64,
    pub max_relative_gap: f64,
    pub max_primal_residual: f64,
    pub max_dual_residual: f64,
    /// Largest distance of a slack or dual block to its cone.
    pub max_cone_distance: f64,
}

static HEALTH: Mutex<HealthSnapshot> = Mutex::new(HealthSnapshot {
    optimal_solves: 0,
    max_relative_gap: 0.0,
    max_primal_residual: 0.0,
    max_dual_residual: 0.0,
    max_cone_distance: 0.0,
});

pub(crate) fn record(p: &ConicProblem, sol: &ConicSolution) {
    if sol.status != ConicStatus::Optimal {
        return;
    }
    let r = kkt_residuals(p, sol);
    let mut h = HEALTH.lock().unwrap_or_else(|e| e.into_inner());
    h.optimal_solves += 1;
    h.max_relative_gap = h.max_relative_gap.max(sol.relative_gap);
    h.max_primal_residual = h.max_primal_residual.max(r.primal_relative);
    h.max_dual_residual = h.max_dual_residual.max(r.dual_relative);
    h.max_cone_distance = h.max_cone_distance.max(r.max_cone_distance());
}

pub fn snapshot() -> HealthSnapshot {
    *HEALTH.lock().unwrap_or_else(|e| e.into_inner())
}

/// Returns the current record and starts a new one.
pub fn take() -> HealthSnapshot {
    std::mem::take(&mut *HEALTH.lock().unwrap_or_else(|e| e.into_inner()))
}
