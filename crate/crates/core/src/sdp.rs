//! Dense primal-dual interior-point solver for small complex SDPs.
//!
//! Problems have the form
//!
//! ```text
//! maximize   sum_k tr(A_k X_k)
//! subject to sum_k tr(B_{m,k} X_k) {<=, =, >=} c_m,   X_k Hermitian PSD
//! ```
//!
//! Each Hermitian `n x n` block is mapped to a real symmetric `2n x 2n` block
//! through `[[Re, -Im], [Im, Re]]`. Inequalities get a nonnegative slack, and
//! the resulting standard-form problem is solved with the HKM search direction
//! and a Mehrotra predictor-corrector. If the main solve does not reach the
//! tolerances, a phase-1 problem with artificial variables decides whether the
//! constraints are satisfiable at all.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

type RMat = DMatrix<f64>;

const TOL: f64 = 1e-9;
const RELAXED_TOL: f64 = 1e-7;
const MAX_ITER: usize = 200;
const STEP_FRACTION: f64 = 0.98;
const PHASE1_TRACE_WEIGHT: f64 = 1e-6;
const INFEASIBILITY_TOL: f64 = 1e-7;
const DIVERGENCE: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

/// One linear trace constraint. `matrices[k]` multiplies block `k`; `None` means zero.
#[derive(Debug, Clone)]
pub struct SdpConstraint {
    pub matrices: Vec<Option<CMat>>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub block_dim: usize,
    pub n_blocks: usize,
    pub objective: Vec<CMat>,
    pub constraints: Vec<SdpConstraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x_blocks: Vec<CMat>,
    pub objective_value: f64,
    /// Upper bound from the dual iterate.
    pub dual_bound: f64,
    /// Relative duality gap of the final iterate.
    pub gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub status: SdpStatus,
    pub iterations: usize,
}

impl SdpSolution {
    /// Converts non-optimal outcomes into errors.
    pub fn require_optimal(self) -> Result<SdpSolution> {
        match self.status {
            SdpStatus::Optimal => Ok(self),
            SdpStatus::Infeasible => Err(Error::Infeasible("SDP constraints cannot be met".into())),
            SdpStatus::MaxIter => Err(Error::MaxIterations(self.iterations)),
        }
    }
}

impl SdpConstraint {
    /// `sum_k tr(B_k X_k)` for Hermitian blocks.
    pub fn evaluate(&self, x: &[CMat]) -> f64 {
        self.matrices
            .iter()
            .zip(x)
            .filter_map(|(b, x)| b.as_ref().map(|b| trace_re(b, x)))
            .sum()
    }

    /// Signed violation, positive when the constraint is broken.
    pub fn violation(&self, x: &[CMat]) -> f64 {
        let v = self.evaluate(x);
        match self.sense {
            Sense::Le => v - self.rhs,
            Sense::Ge => self.rhs - v,
            Sense::Eq => (v - self.rhs).abs(),
        }
    }
}

fn trace_re(a: &CMat, b: &CMat) -> f64 {
    let mut s = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            s += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    s
}

impl SdpProblem {
    pub fn objective_at(&self, x: &[CMat]) -> f64 {
        self.objective.iter().zip(x).map(|(a, x)| trace_re(a, x)).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.block_dim;
        let check = |m: &CMat, what: &str| -> Result<()> {
            if m.shape() != (n, n) {
                return Err(Error::DimensionMismatch(format!(
                    "{what} is {:?}, expected {n}x{n}",
                    m.shape()
                )));
            }
            let defect = (m - m.adjoint()).norm();
            if defect > 1e-12 * m.norm().max(1.0) || !m.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::Config(format!("{what} is not a finite Hermitian matrix")));
            }
            Ok(())
        };
        if self.objective.len() != self.n_blocks {
            return Err(Error::DimensionMismatch(format!(
                "{} objective matrices for {} blocks",
                self.objective.len(),
                self.n_blocks
            )));
        }
        for (k, a) in self.objective.iter().enumerate() {
            check(a, &format!("objective[{k}]"))?;
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.matrices.len() != self.n_blocks {
                return Err(Error::DimensionMismatch(format!(
                    "constraint {i} has the wrong block count"
                )));
            }
            if !c.rhs.is_finite() {
                return Err(Error::Config(format!(
                    "constraint {i} has a non-finite right-hand side"
                )));
            }
            for (k, b) in c.matrices.iter().enumerate() {
                if let Some(b) = b {
                    check(b, &format!("constraint[{i}][{k}]"))?;
                }
            }
        }
        Ok(())
    }

    /// Writes the instance as JSON (complex entries as `[re, im]` pairs).
    pub fn write_debug(&self, path: &Path) -> Result<()> {
        #[derive(Serialize)]
        struct Dump<'a> {
            block_dim: usize,
            n_blocks: usize,
            objective: Vec<Vec<Vec<[f64; 2]>>>,
            constraints: Vec<DumpRow<'a>>,
        }
        #[derive(Serialize)]
        struct DumpRow<'a> {
            matrices: Vec<Option<Vec<Vec<[f64; 2]>>>>,
            sense: &'a Sense,
            rhs: f64,
        }
        let cells = |m: &CMat| -> Vec<Vec<[f64; 2]>> {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect()
        };
        let dump = Dump {
            block_dim: self.block_dim,
            n_blocks: self.n_blocks,
            objective: self.objective.iter().map(cells).collect(),
            constraints: self
                .constraints
                .iter()
                .map(|c| DumpRow {
                    matrices: c.matrices.iter().map(|m| m.as_ref().map(cells)).collect(),
                    sense: &c.sense,
                    rhs: c.rhs,
                })
                .collect(),
        };
        let text = serde_json::to_string_pretty(&dump).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

fn embed(a: &CMat) -> RMat {
    let n = a.nrows();
    let mut out = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = a[(i, j)];
            out[(i, j)] = v.re;
            out[(i + n, j + n)] = v.re;
            out[(i, j + n)] = -v.im;
            out[(i + n, j)] = v.im;
        }
    }
    out
}

fn unembed(x: &RMat) -> CMat {
    let n = x.nrows() / 2;
    CMat::from_fn(n, n, |i, j| {
        C64::new(
            0.5 * (x[(i, j)] + x[(i + n, j + n)]),
            0.5 * (x[(i + n, j)] - x[(i, j + n)]),
        )
    })
}

/// Real standard form: minimize `<C, X>` s.t. `<A_i, X> = b_i`, `X` block PSD.
struct StdForm {
    dims: Vec<usize>,
    a: Vec<Vec<Option<RMat>>>,
    c: Vec<RMat>,
    b: DVector<f64>,
}

struct RealSolution {
    x: Vec<RMat>,
    dobj: f64,
    pinf: f64,
    dinf: f64,
    gap: f64,
    converged: bool,
    iterations: usize,
}

fn inner(a: &RMat, b: &RMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn sym(a: &RMat) -> RMat {
    (a + a.transpose()) * 0.5
}

impl StdForm {
    fn m(&self) -> usize {
        self.b.len()
    }

    fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    fn apply(&self, x: &[RMat]) -> DVector<f64> {
        DVector::from_fn(self.m(), |i, _| {
            self.a[i]
                .iter()
                .zip(x)
                .filter_map(|(a, x)| a.as_ref().map(|a| inner(a, x)))
                .sum()
        })
    }

    fn adjoint(&self, y: &DVector<f64>) -> Vec<RMat> {
        let mut out: Vec<RMat> = self.dims.iter().map(|&d| RMat::zeros(d, d)).collect();
        for (i, row) in self.a.iter().enumerate() {
            for (blk, a) in row.iter().enumerate() {
                if let Some(a) = a {
                    out[blk] += a * y[i];
                }
            }
        }
        out
    }

    fn norm_c(&self) -> f64 {
        self.c.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt()
    }

    fn initial_point(&self) -> (Vec<RMat>, DVector<f64>, Vec<RMat>) {
        let mut xs = Vec::new();
        let mut zs = Vec::new();
        for (blk, &d) in self.dims.iter().enumerate() {
            let df = d as f64;
            let mut xi: f64 = 10.0_f64.max(df.sqrt());
            let mut eta: f64 = 10.0_f64.max(df.sqrt()).max(self.c[blk].norm());
            for i in 0..self.m() {
                if let Some(a) = &self.a[i][blk] {
                    let an = a.norm();
                    xi = xi.max(df * (1.0 + self.b[i].abs()) / (1.0 + an));
                    eta = eta.max(an);
                }
            }
            xs.push(RMat::identity(d, d) * xi);
            zs.push(RMat::identity(d, d) * eta);
        }
        (xs, DVector::zeros(self.m()), zs)
    }

    fn solve(&self) -> Result<RealSolution> {
        let m = self.m();
        let n_total = self.total_dim() as f64;
        let (mut x, mut y, mut z) = self.initial_point();
        let norm_b = self.b.norm();
        let norm_c = self.norm_c();
        let mut last = None;
        let mut stalls = 0;

        for iter in 0..MAX_ITER {
            let ax = self.apply(&x);
            let rp = &self.b - &ax;
            let aty = self.adjoint(&y);
            let rd: Vec<RMat> = (0..x.len()).map(|k| &self.c[k] - &aty[k] - &z[k]).collect();
            let pobj: f64 = self.c.iter().zip(&x).map(|(c, x)| inner(c, x)).sum();
            let dobj = self.b.dot(&y);
            let pinf = rp.norm() / (1.0 + norm_b);
            let dinf = rd.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt() / (1.0 + norm_c);
            let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
            let snapshot = RealSolution {
                x: x.clone(),
                dobj,
                pinf,
                dinf,
                gap,
                converged: pinf <= TOL && dinf <= TOL && gap <= TOL,
                iterations: iter,
            };
            if snapshot.converged {
                return Ok(snapshot);
            }
            last = Some(snapshot);

            let x_norm = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if x_norm > DIVERGENCE * (1.0 + norm_b) || y.norm() > DIVERGENCE * (1.0 + norm_c) {
                break;
            }

            let mu: f64 = x.iter().zip(&z).map(|(x, z)| inner(x, z)).sum::<f64>() / n_total;
            let zinv: Vec<RMat> = match z.iter().map(|z| z.clone().cholesky().map(|c| c.inverse())).collect() {
                Some(v) => v,
                None => break,
            };

            // Schur complement M_ij = sum_blk <A_i, X A_j Z^{-1}>
            let mut schur = RMat::zeros(m, m);
            for blk in 0..x.len() {
                for j in 0..m {
                    if let Some(aj) = &self.a[j][blk] {
                        let t = &x[blk] * aj * &zinv[blk];
                        for i in 0..m {
                            if let Some(ai) = &self.a[i][blk] {
                                schur[(i, j)] += inner(ai, &t);
                            }
                        }
                    }
                }
            }
            let schur = sym(&schur);
            let solver = SchurSolver::new(schur);
            let Some(solver) = solver else { break };

            let direction = |rc: &[RMat]| -> (Vec<RMat>, DVector<f64>, Vec<RMat>) {
                let mut rhs = rp.clone();
                let terms: Vec<RMat> = (0..x.len())
                    .map(|k| &rc[k] * &zinv[k] - &x[k] * &rd[k] * &zinv[k])
                    .collect();
                rhs -= self.apply(&terms);
                let dy = solver.solve(&rhs);
                let atdy = self.adjoint(&dy);
                let dz: Vec<RMat> = (0..x.len()).map(|k| &rd[k] - &atdy[k]).collect();
                let dx: Vec<RMat> = (0..x.len())
                    .map(|k| sym(&(&rc[k] * &zinv[k] - &x[k] * &dz[k] * &zinv[k])))
                    .collect();
                (dx, dy, dz)
            };

            let xz: Vec<RMat> = x.iter().zip(&z).map(|(x, z)| x * z).collect();
            let rc_pred: Vec<RMat> = xz.iter().map(|v| -v).collect();
            let (dx_a, _, dz_a) = direction(&rc_pred);
            let ap = max_step(&x, &dx_a).min(1.0);
            let ad = max_step(&z, &dz_a).min(1.0);
            let mu_aff: f64 = (0..x.len())
                .map(|k| inner(&(&x[k] + &dx_a[k] * ap), &(&z[k] + &dz_a[k] * ad)))
                .sum::<f64>()
                / n_total;
            let sigma = (mu_aff.max(0.0) / mu).powi(3).clamp(0.0, 1.0);

            let rc_corr: Vec<RMat> = (0..x.len())
                .map(|k| {
                    let d = x[k].nrows();
                    RMat::identity(d, d) * (sigma * mu) - &xz[k] - &dx_a[k] * &dz_a[k]
                })
                .collect();
            let (dx, dy, dz) = direction(&rc_corr);
            let ap = (STEP_FRACTION * max_step(&x, &dx)).min(1.0);
            let ad = (STEP_FRACTION * max_step(&z, &dz)).min(1.0);
            if !(ap.is_finite() && ad.is_finite()) {
                break;
            }
            for k in 0..x.len() {
                x[k] += &dx[k] * ap;
                z[k] += &dz[k] * ad;
                x[k] = sym(&x[k]);
                z[k] = sym(&z[k]);
            }
            y += dy * ad;

            if ap < 1e-8 && ad < 1e-8 {
                stalls += 1;
                if stalls >= 3 {
                    break;
                }
            } else {
                stalls = 0;
            }
        }
        last.map(|s| {
            let relaxed = s.pinf <= RELAXED_TOL && s.dinf <= RELAXED_TOL && s.gap <= RELAXED_TOL;
            RealSolution {
                converged: relaxed,
                ..s
            }
        })
        .ok_or_else(|| Error::IllConditioned("no interior-point iterate produced".into()))
    }
}

struct SchurSolver {
    chol: Option<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl SchurSolver {
    fn new(m: RMat) -> Option<Self> {
        if !m.iter().all(|v| v.is_finite()) {
            return None;
        }
        let chol = m.clone().cholesky();
        let lu = m.lu();
        if chol.is_none() && !lu.is_invertible() {
            return None;
        }
        Some(Self { chol, lu })
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        match &self.chol {
            Some(c) => c.solve(rhs),
            None => self.lu.solve(rhs).unwrap_or_else(|| DVector::zeros(rhs.len())),
        }
    }
}

/// Largest `alpha` with `X + alpha dX` PSD (infinite if unbounded).
fn max_step(x: &[RMat], dx: &[RMat]) -> f64 {
    let mut alpha = f64::INFINITY;
    for (x, dx) in x.iter().zip(dx) {
        if x.nrows() == 1 {
            if dx[(0, 0)] < 0.0 {
                alpha = alpha.min(-x[(0, 0)] / dx[(0, 0)]);
            }
            continue;
        }
        let Some(chol) = x.clone().cholesky() else {
            return 0.0;
        };
        let l = chol.l();
        let Some(t) = l.solve_lower_triangular(dx) else {
            return 0.0;
        };
        let Some(w) = l.solve_lower_triangular(&t.transpose()) else {
            return 0.0;
        };
        let lmin = sym(&w).symmetric_eigenvalues().min();
        if lmin < 0.0 {
            alpha = alpha.min(-1.0 / lmin);
        }
    }
    alpha
}

/// Normalized real rows of the problem: `(per-block matrices, slack coefficient, rhs)`.
struct Rows {
    rows: Vec<(Vec<Option<RMat>>, Option<f64>, f64)>,
    /// Zero-matrix rows whose right-hand side already violates the sense.
    trivially_infeasible: bool,
}

fn real_rows(problem: &SdpProblem) -> Rows {
    let mut rows = Vec::new();
    let mut trivially_infeasible = false;
    for c in &problem.constraints {
        let mats: Vec<Option<RMat>> = c.matrices.iter().map(|m| m.as_ref().map(|m| embed(m) * 0.5)).collect();
        let norm = mats.iter().flatten().map(|m| m.norm_squared()).sum::<f64>().sqrt();
        if norm == 0.0 {
            let ok = match c.sense {
                Sense::Le => 0.0 <= c.rhs,
                Sense::Ge => 0.0 >= c.rhs,
                Sense::Eq => c.rhs == 0.0,
            };
            trivially_infeasible |= !ok;
            continue;
        }
        let mats = mats.into_iter().map(|m| m.map(|m| m / norm)).collect();
        let slack = match c.sense {
            Sense::Le => Some(1.0),
            Sense::Ge => Some(-1.0),
            Sense::Eq => None,
        };
        rows.push((mats, slack, c.rhs / norm));
    }
    Rows {
        rows,
        trivially_infeasible,
    }
}

/// Builds a standard-form problem over the PSD blocks, one slack block per
/// inequality and, for phase 1, two artificial blocks per row.
fn build_std(problem: &SdpProblem, rows: &Rows, objective: &[RMat], phase1: bool) -> StdForm {
    let nb = problem.n_blocks;
    let d = 2 * problem.block_dim;
    let n_slack = rows.rows.iter().filter(|r| r.1.is_some()).count();
    let n_art = if phase1 { 2 * rows.rows.len() } else { 0 };
    let mut dims = vec![d; nb];
    dims.extend(std::iter::repeat_n(1, n_slack + n_art));

    let mut c: Vec<RMat> = objective.to_vec();
    c.extend(std::iter::repeat_n(RMat::zeros(1, 1), n_slack));
    c.extend(std::iter::repeat_n(RMat::from_element(1, 1, 1.0), n_art));

    let total = dims.len();
    let mut a = Vec::with_capacity(rows.rows.len());
    let mut b = Vec::with_capacity(rows.rows.len());
    let mut slack_idx = nb;
    for (i, (mats, slack, rhs)) in rows.rows.iter().enumerate() {
        let mut row: Vec<Option<RMat>> = vec![None; total];
        row[..nb].clone_from_slice(mats);
        if let Some(s) = slack {
            row[slack_idx] = Some(RMat::from_element(1, 1, *s));
            slack_idx += 1;
        }
        if phase1 {
            let base = nb + n_slack + 2 * i;
            row[base] = Some(RMat::from_element(1, 1, 1.0));
            row[base + 1] = Some(RMat::from_element(1, 1, -1.0));
        }
        a.push(row);
        b.push(*rhs);
    }
    StdForm {
        dims,
        a,
        c,
        b: DVector::from_vec(b),
    }
}

/// Solves the problem. Never panics on infeasible or ill-posed input; the
/// outcome is reported through `status`.
pub fn solve_sdp(problem: &SdpProblem) -> Result<SdpSolution> {
    problem.validate()?;
    let nb = problem.n_blocks;
    let rows = real_rows(problem);
    let zero_blocks = || vec![CMat::zeros(problem.block_dim, problem.block_dim); nb];
    if rows.trivially_infeasible {
        return Ok(SdpSolution {
            x_blocks: zero_blocks(),
            objective_value: f64::NAN,
            dual_bound: f64::NAN,
            gap: f64::NAN,
            primal_infeasibility: f64::INFINITY,
            dual_infeasibility: f64::NAN,
            status: SdpStatus::Infeasible,
            iterations: 0,
        });
    }

    let raw_obj: Vec<RMat> = problem.objective.iter().map(|a| embed(a) * -0.5).collect();
    let obj_norm = raw_obj.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt();
    let obj_scale = if obj_norm > 0.0 { obj_norm } else { 1.0 };
    let scaled: Vec<RMat> = raw_obj.iter().map(|m| m / obj_scale).collect();

    let main = build_std(problem, &rows, &scaled, false);
    let sol = main.solve()?;
    let x_blocks: Vec<CMat> = sol.x[..nb].iter().map(unembed).collect();
    let objective_value = problem.objective_at(&x_blocks);
    if sol.converged {
        return Ok(SdpSolution {
            x_blocks,
            objective_value,
            dual_bound: -sol.dobj * obj_scale,
            gap: sol.gap,
            primal_infeasibility: sol.pinf,
            dual_infeasibility: sol.dinf,
            status: SdpStatus::Optimal,
            iterations: sol.iterations,
        });
    }

    let d = 2 * problem.block_dim;
    let p1_obj: Vec<RMat> = (0..nb).map(|_| RMat::identity(d, d) * PHASE1_TRACE_WEIGHT).collect();
    let p1 = build_std(problem, &rows, &p1_obj, true);
    let p1_sol = p1.solve()?;
    let n_slack = rows.rows.iter().filter(|r| r.1.is_some()).count();
    let artificial: f64 = p1_sol.x[nb + n_slack..].iter().map(|v| v[(0, 0)]).sum();
    let status = if artificial > INFEASIBILITY_TOL {
        SdpStatus::Infeasible
    } else {
        SdpStatus::MaxIter
    };
    Ok(SdpSolution {
        x_blocks,
        objective_value,
        dual_bound: -sol.dobj * obj_scale,
        gap: sol.gap,
        primal_infeasibility: sol.pinf,
        dual_infeasibility: sol.dinf,
        status,
        iterations: sol.iterations + p1_sol.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cn_matrix, hermitian_eigenvalues, hermitian_part};
    use crate::random::master_rng;

    fn trace_le(n: usize, rhs: f64) -> SdpConstraint {
        SdpConstraint {
            matrices: vec![Some(CMat::identity(n, n))],
            sense: Sense::Le,
            rhs,
        }
    }

    #[test]
    fn embedding_round_trip() {
        let mut rng = master_rng(1);
        let a = hermitian_part(&cn_matrix(&mut rng, 3, 3, 1.0));
        let back = unembed(&embed(&a));
        assert!((back - &a).norm() < 1e-15);
        let b = hermitian_part(&cn_matrix(&mut rng, 3, 3, 1.0));
        let lhs = 0.5 * inner(&embed(&a), &embed(&b));
        assert!((lhs - trace_re(&a, &b)).abs() < 1e-12);
    }

    #[test]
    fn trace_bound_identity_objective() {
        let p = SdpProblem {
            block_dim: 3,
            n_blocks: 1,
            objective: vec![CMat::identity(3, 3)],
            constraints: vec![trace_le(3, 1.0)],
        };
        let s = solve_sdp(&p).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.objective_value - 1.0).abs() < 1e-7);
    }

    #[test]
    fn largest_eigenvalue() {
        let mut rng = master_rng(2);
        let c = hermitian_part(&cn_matrix(&mut rng, 4, 4, 1.0));
        let p = SdpProblem {
            block_dim: 4,
            n_blocks: 1,
            objective: vec![c.clone()],
            constraints: vec![trace_le(4, 1.0)],
        };
        let s = solve_sdp(&p).unwrap();
        let lmax = hermitian_eigenvalues(&c).unwrap()[0];
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.objective_value - lmax).abs() < 1e-6 * lmax.abs().max(1.0));
        assert!(s.objective_value <= s.dual_bound + 1e-8 * lmax.abs().max(1.0));
    }

    #[test]
    fn negative_trace_is_infeasible() {
        let p = SdpProblem {
            block_dim: 2,
            n_blocks: 1,
            objective: vec![CMat::identity(2, 2)],
            constraints: vec![trace_le(2, -1.0)],
        };
        assert_eq!(solve_sdp(&p).unwrap().status, SdpStatus::Infeasible);
    }

    #[test]
    fn conflicting_constraints_are_infeasible() {
        let ge = SdpConstraint {
            matrices: vec![Some(CMat::identity(2, 2))],
            sense: Sense::Ge,
            rhs: 2.0,
        };
        let p = SdpProblem {
            block_dim: 2,
            n_blocks: 1,
            objective: vec![CMat::identity(2, 2)],
            constraints: vec![trace_le(2, 1.0), ge],
        };
        assert_eq!(solve_sdp(&p).unwrap().status, SdpStatus::Infeasible);
    }

    #[test]
    fn equality_and_two_blocks() {
        // maximize tr(X1) - tr(X2) with tr(X1) + tr(X2) = 2, tr(X2) >= 0.5
        let n = 2;
        let i = CMat::identity(n, n);
        let p = SdpProblem {
            block_dim: n,
            n_blocks: 2,
            objective: vec![i.clone(), -i.clone()],
            constraints: vec![
                SdpConstraint {
                    matrices: vec![Some(i.clone()), Some(i.clone())],
                    sense: Sense::Eq,
                    rhs: 2.0,
                },
                SdpConstraint {
                    matrices: vec![None, Some(i.clone())],
                    sense: Sense::Ge,
                    rhs: 0.5,
                },
            ],
        };
        let s = solve_sdp(&p).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.objective_value - 1.0).abs() < 1e-7);
    }

    #[test]
    fn repeated_solves_agree() {
        let mut rng = master_rng(9);
        let c = hermitian_part(&cn_matrix(&mut rng, 5, 5, 1.0));
        let p = SdpProblem {
            block_dim: 5,
            n_blocks: 1,
            objective: vec![c],
            constraints: vec![trace_le(5, 2.0)],
        };
        let a = solve_sdp(&p).unwrap().objective_value;
        let b = solve_sdp(&p).unwrap().objective_value;
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut a = CMat::identity(2, 2);
        a[(0, 1)] = C64::new(1.0, 0.0);
        let p = SdpProblem {
            block_dim: 2,
            n_blocks: 1,
            objective: vec![a],
            constraints: vec![],
        };
        assert!(solve_sdp(&p).is_err());
    }
}
