//! Dense primal-dual interior-point solver for cone programs.
//!
//! Problems are stored as
//!
//! ```text
//!   minimize    c^T x
//!   subject to  G x + s = h,   s in K = K_1 x ... x K_m
//!               A x = b
//! ```
//!
//! where each `K_i` is a nonnegative orthant, a second-order cone or a real
//! PSD cone. The classical standard form (`A x = b`, `x` split into free and
//! cone segments) is accepted through [`ConicProblem::standard_form`].

mod cones;
pub mod health;
pub mod model;
mod residuals;
mod solver;

pub use cones::{smat, svec, svec_index, Cone};
pub use residuals::{kkt_residuals, ResidualReport};
pub use solver::solve;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProblemError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite data in problem")]
    NonFinite,
    #[error("malformed problem dump: {0}")]
    Dump(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicProblem {
    pub c: Vec<f64>,
    pub g: DMatrix<f64>,
    pub h: Vec<f64>,
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
    pub cones: Vec<Cone>,
}

/// One segment of the variable vector in standard form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    Free(usize),
    Cone(Cone),
}

impl Segment {
    fn len(&self) -> usize {
        match self {
            Segment::Free(n) => *n,
            Segment::Cone(k) => k.dim(),
        }
    }
}

impl ConicProblem {
    pub fn new(
        c: Vec<f64>,
        g: DMatrix<f64>,
        h: Vec<f64>,
        a: DMatrix<f64>,
        b: Vec<f64>,
        cones: Vec<Cone>,
    ) -> Result<Self, ProblemError> {
        let p = Self { c, g, h, a, b, cones };
        p.check()?;
        Ok(p)
    }

    /// `min c^T x  s.t. A x = b`, with `x` partitioned into free and cone
    /// segments. Cone segments become `-x_seg + s = 0, s in K`.
    pub fn standard_form(
        c: Vec<f64>,
        a: DMatrix<f64>,
        b: Vec<f64>,
        segments: &[Segment],
    ) -> Result<Self, ProblemError> {
        let n = c.len();
        let total: usize = segments.iter().map(Segment::len).sum();
        if total != n {
            return Err(ProblemError::Dimension(format!("segments cover {total} entries but x has {n}")));
        }
        let cones: Vec<Cone> = segments
            .iter()
            .filter_map(|s| match s {
                Segment::Cone(k) => Some(*k),
                Segment::Free(_) => None,
            })
            .collect();
        let m: usize = cones.iter().map(Cone::dim).sum();
        let mut g = DMatrix::zeros(m, n);
        let (mut col, mut row) = (0, 0);
        for seg in segments {
            match seg {
                Segment::Free(len) => col += len,
                Segment::Cone(k) => {
                    for i in 0..k.dim() {
                        g[(row + i, col + i)] = -1.0;
                    }
                    row += k.dim();
                    col += k.dim();
                }
            }
        }
        Self::new(c, g, vec![0.0; m], a, b, cones)
    }

    pub fn n_vars(&self) -> usize {
        self.c.len()
    }

    pub fn n_eq(&self) -> usize {
        self.b.len()
    }

    pub fn cone_dim(&self) -> usize {
        self.h.len()
    }

    pub fn degree(&self) -> usize {
        self.cones.iter().map(Cone::degree).sum()
    }

    /// Offsets of each cone block inside `s` / `z`.
    pub fn cone_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut off = 0;
        self.cones
            .iter()
            .map(|k| {
                let r = off..off + k.dim();
                off += k.dim();
                r
            })
            .collect()
    }

    fn check(&self) -> Result<(), ProblemError> {
        let n = self.c.len();
        let m: usize = self.cones.iter().map(Cone::dim).sum();
        let dims_ok = self.g.ncols() == n
            && self.g.nrows() == m
            && self.h.len() == m
            && self.a.ncols() == n
            && self.a.nrows() == self.b.len();
        if !dims_ok {
            return Err(ProblemError::Dimension(format!(
                "n={n}, cone dim={m}, G {}x{}, h {}, A {}x{}, b {}",
                self.g.nrows(),
                self.g.ncols(),
                self.h.len(),
                self.a.nrows(),
                self.a.ncols(),
                self.b.len()
            )));
        }
        if self.cones.iter().any(|k| k.dim() == 0) {
            return Err(ProblemError::Dimension("empty cone".into()));
        }
        let finite = self.c.iter().chain(&self.h).chain(&self.b).all(|v| v.is_finite())
            && self.g.iter().chain(self.a.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(ProblemError::NonFinite);
        }
        Ok(())
    }

    /// Debug dump in the `secbeam-conic-v1` JSON layout (dense row-major `G`
    /// and `A`, cones in order), suitable for cross-checking elsewhere.
    pub fn to_json(&self) -> String {
        let dump = ProblemDump {
            format: DUMP_FORMAT.to_string(),
            n: self.n_vars(),
            c: self.c.clone(),
            g: rows(&self.g),
            h: self.h.clone(),
            a: rows(&self.a),
            b: self.b.clone(),
            cones: self.cones.clone(),
        };
        serde_json::to_string_pretty(&dump).expect("problem dump serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ProblemError> {
        let d: ProblemDump = serde_json::from_str(s).map_err(|e| ProblemError::Dump(e.to_string()))?;
        if d.format != DUMP_FORMAT {
            return Err(ProblemError::Dump(format!("unknown format {:?}", d.format)));
        }
        let from_rows = |r: &[Vec<f64>]| -> Result<DMatrix<f64>, ProblemError> {
            if r.iter().any(|row| row.len() != d.n) {
                return Err(ProblemError::Dimension("ragged matrix rows".into()));
            }
            Ok(DMatrix::from_fn(r.len(), d.n, |i, j| r[i][j]))
        };
        Self::new(d.c, from_rows(&d.g)?, d.h, from_rows(&d.a)?, d.b, d.cones)
    }
}

const DUMP_FORMAT: &str = "secbeam-conic-v1";

#[derive(Serialize, Deserialize)]
struct ProblemDump {
    format: String,
    n: usize,
    c: Vec<f64>,
    g: Vec<Vec<f64>>,
    h: Vec<f64>,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    cones: Vec<Cone>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConicStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIter,
    NumericalTrouble,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub gap_tol: f64,
    /// Complementarity `s^T z / (1 + |c^T x|)` targeted once the feasibility
    /// and gap tolerances hold.
    pub comp_tol: f64,
    pub max_iter: usize,
    pub step_fraction: f64,
    pub refinement_steps: usize,
    /// Per-iteration progress on standard error.
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-8,
            gap_tol: 1e-7,
            comp_tol: 1e-12,
            max_iter: 200,
            step_fraction: 0.99,
            refinement_steps: 3,
            verbose: false,
        }
    }
}

/// Primal-dual answer. For `Optimal`, `(x, s)` is primal and `(y, z)` dual;
/// for `PrimalInfeasible`, `(y, z)` is a certificate with `h^T z + b^T y = -1`;
/// for `DualInfeasible`, `(x, s)` is a certificate with `c^T x = -1`.
#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: ConicStatus,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `s^T z` at the returned point.
    pub gap: f64,
    pub relative_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

/// Random strictly feasible SDP `min <C, X>, <A_i, X> = b_i, X >= 0` of
/// side `n` with `k` constraints, paired with its explicit dual
/// `min -b^T y, C - sum y_i A_i >= 0`. Optimal values are negatives of each
/// other.
pub fn random_sdp_pair<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> (ConicProblem, ConicProblem) {
    let sym = |rng: &mut R| {
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        (&m + m.transpose()) * 0.5
    };
    let x0 = {
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        &b * b.transpose() + DMatrix::identity(n, n)
    };
    let ai: Vec<DMatrix<f64>> = (0..k).map(|_| sym(rng)).collect();
    let y0: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut cm = DMatrix::identity(n, n) * (n as f64);
    for (a, y) in ai.iter().zip(&y0) {
        cm += a * *y;
    }
    let bvec: Vec<f64> = ai.iter().map(|a| (a * &x0).trace()).collect();
    let d = n * (n + 1) / 2;
    let amat = DMatrix::from_fn(k, d, |i, j| svec(&ai[i])[j]);
    let primal = ConicProblem::standard_form(svec(&cm), amat, bvec.clone(), &[Segment::Cone(Cone::Psd(n))]).unwrap();
    // dual: min -b^T y s.t. sum y_i A_i + S = C
    let g = DMatrix::from_fn(d, k, |r, i| svec(&ai[i])[r]);
    let dual = ConicProblem::new(
        bvec.iter().map(|v| -v).collect(),
        g,
        svec(&cm),
        DMatrix::zeros(0, k),
        vec![],
        vec![Cone::Psd(n)],
    )
    .unwrap();
    (primal, dual)
}
