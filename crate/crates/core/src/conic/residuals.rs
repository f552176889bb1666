use super::cones::{dot, norm};
use super::{ConicProblem, ConicSolution};
use nalgebra::DVector;

/// Optimality diagnostics for an arbitrary primal-dual pair.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    /// `|| (A x - b, G x + s - h) ||`
    pub primal: f64,
    pub primal_relative: f64,
    /// `|| A^T y + G^T z + c ||`
    pub dual: f64,
    pub dual_relative: f64,
    /// `<s, z>`
    pub complementarity: f64,
    /// Distance of each slack block `s_i` to its cone.
    pub primal_cone_distance: Vec<f64>,
    /// Distance of each dual block `z_i` to its (self-dual) cone.
    pub dual_cone_distance: Vec<f64>,
}

impl ResidualReport {
    pub fn max_cone_distance(&self) -> f64 {
        self.primal_cone_distance.iter().chain(&self.dual_cone_distance).copied().fold(0.0, f64::max)
    }
}

pub fn kkt_residuals(p: &ConicProblem, sol: &ConicSolution) -> ResidualReport {
    let x = DVector::from_column_slice(&sol.x);
    let y = DVector::from_column_slice(&sol.y);
    let z = DVector::from_column_slice(&sol.z);
    let ax = &p.a * &x - DVector::from_column_slice(&p.b);
    let gx = &p.g * &x + DVector::from_column_slice(&sol.s) - DVector::from_column_slice(&p.h);
    let primal = (ax.norm_squared() + gx.norm_squared()).sqrt();
    let rx = p.a.tr_mul(&y) + p.g.tr_mul(&z) + DVector::from_column_slice(&p.c);
    let dual = rx.norm();
    let ranges = p.cone_ranges();
    let dist =
        |v: &[f64]| -> Vec<f64> { ranges.iter().zip(&p.cones).map(|(r, k)| k.distance(&v[r.clone()])).collect() };
    ResidualReport {
        primal,
        primal_relative: primal / (1.0 + (norm(&p.b).powi(2) + norm(&p.h).powi(2)).sqrt()),
        dual,
        dual_relative: dual / (1.0 + norm(&p.c)),
        complementarity: dot(&sol.s, &sol.z),
        primal_cone_distance: dist(&sol.s),
        dual_cone_distance: dist(&sol.z),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{Cone, ConicStatus};
    use nalgebra::DMatrix;

    fn lp() -> ConicProblem {
        // min x s.t. x >= 1
        ConicProblem::new(
            vec![1.0],
            DMatrix::from_element(1, 1, -1.0),
            vec![-1.0],
            DMatrix::zeros(0, 1),
            vec![],
            vec![Cone::NonNeg(1)],
        )
        .unwrap()
    }

    fn pair(x: f64, s: f64, z: f64) -> ConicSolution {
        ConicSolution {
            status: ConicStatus::Optimal,
            x: vec![x],
            s: vec![s],
            y: vec![],
            z: vec![z],
            primal_objective: x,
            dual_objective: z,
            gap: s * z,
            relative_gap: 0.0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            iterations: 0,
        }
    }

    #[test]
    fn exact_pair_has_zero_residuals() {
        let r = kkt_residuals(&lp(), &pair(1.0, 0.0, 1.0));
        assert!(r.primal <= 1e-10 && r.dual <= 1e-10 && r.complementarity.abs() <= 1e-10);
        assert_eq!(r.max_cone_distance(), 0.0);
    }

    #[test]
    fn perturbed_primal() {
        let r = kkt_residuals(&lp(), &pair(1.1, 0.0, 1.0));
        assert!((r.primal - 0.1).abs() < 1e-12);
    }

    #[test]
    fn infeasible_slack_reports_distance() {
        let r = kkt_residuals(&lp(), &pair(0.5, -0.5, 1.0));
        assert!(r.primal <= 1e-12);
        assert!((r.primal_cone_distance[0] - 0.5).abs() < 1e-12);
    }
}
