use std::panic::{catch_unwind, AssertUnwindSafe};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::DMatrix;

use crate::error::Result;
use crate::program::{Constraint, ConicProgram, LinExpr, VarKind, VarValue};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tol_feas: f64,
    pub tol_gap_abs: f64,
    pub tol_gap_rel: f64,
    pub max_iter: u32,
    /// Relative violation accepted on an `Optimal` report.
    pub feasibility_tolerance: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol_feas: 1e-8,
            tol_gap_abs: 1e-8,
            tol_gap_rel: 1e-8,
            max_iter: 200,
            feasibility_tolerance: 1e-6,
        }
    }
}

impl SolverSettings {
    /// Settings for a second attempt after numerical trouble.
    pub fn relaxed(&self) -> Self {
        Self {
            tol_feas: self.tol_feas * 100.0,
            tol_gap_abs: self.tol_gap_abs * 100.0,
            tol_gap_rel: self.tol_gap_rel * 100.0,
            max_iter: self.max_iter * 2,
            feasibility_tolerance: self.feasibility_tolerance * 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// The backend stalled before meeting its optimality tolerances at a
    /// point that satisfies every constraint within the feasibility
    /// tolerance. Usable, but possibly suboptimal.
    Inaccurate,
    Infeasible,
    Unbounded,
    NumericalTrouble,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Objective of the maximization at the returned point (NaN when no
    /// point is available).
    pub objective_value: f64,
    pub values: Vec<VarValue>,
    pub solver_iterations: u32,
    pub max_constraint_violation: f64,
    pub diagnostics: String,
}

impl SolveReport {
    fn trouble(program: &ConicProgram, diagnostics: String) -> Self {
        Self {
            status: SolveStatus::NumericalTrouble,
            objective_value: f64::NAN,
            values: zero_values(program),
            solver_iterations: 0,
            max_constraint_violation: f64::INFINITY,
            diagnostics,
        }
    }
}

/// Anything that can solve linear objectives over PSD, SOC and linear cones.
pub trait ConicBackend {
    fn name(&self) -> &'static str;

    /// Errors are reserved for malformed programs; solver failures come back
    /// as a report with [`SolveStatus::NumericalTrouble`].
    fn solve(&self, program: &ConicProgram, settings: &SolverSettings) -> Result<SolveReport>;
}

/// Interior-point backend built on Clarabel.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClarabelBackend;

pub fn solve(program: &ConicProgram, settings: &SolverSettings) -> Result<SolveReport> {
    ClarabelBackend.solve(program, settings)
}

fn zero_values(program: &ConicProgram) -> Vec<VarValue> {
    program
        .variables()
        .iter()
        .map(|v| match v.kind {
            VarKind::Psd { dim } => VarValue::Matrix(DMatrix::zeros(dim, dim)),
            _ => VarValue::Scalar(0.0),
        })
        .collect()
}

/// Column layout of the stacked solver vector. PSD blocks use the scaled
/// upper-triangular column-major ordering, off-diagonals times sqrt(2).
struct Layout {
    offsets: Vec<usize>,
    total: usize,
}

impl Layout {
    fn new(program: &ConicProgram) -> Self {
        let mut offsets = Vec::with_capacity(program.variables().len());
        let mut total = 0;
        for v in program.variables() {
            offsets.push(total);
            total += v.kind.scalar_count();
        }
        Self { offsets, total }
    }

    /// Column and multiplier such that `Y[row, col] = mult * x[column]`.
    fn column(&self, var: usize, row: usize, col: usize) -> (usize, f64) {
        let idx = self.offsets[var] + col * (col + 1) / 2 + row;
        let mult = if row == col { 1.0 } else { std::f64::consts::FRAC_1_SQRT_2 };
        (idx, mult)
    }
}

#[derive(Default)]
struct Triplets {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    b: Vec<f64>,
}

impl Triplets {
    /// Appends one row `a' x + s = b`.
    fn push_row(&mut self, layout: &Layout, expr: &LinExpr, scale: f64, rhs: f64) {
        let r = self.b.len();
        for t in expr.terms() {
            let (c, mult) = layout.column(t.var.0, t.row, t.col);
            self.rows.push(r);
            self.cols.push(c);
            self.vals.push(scale * t.coef * mult);
        }
        self.b.push(rhs);
    }

    fn push_unit(&mut self, col: usize, val: f64) {
        let r = self.b.len();
        self.rows.push(r);
        self.cols.push(col);
        self.vals.push(val);
        self.b.push(0.0);
    }
}

impl ConicBackend for ClarabelBackend {
    fn name(&self) -> &'static str {
        "clarabel"
    }

    fn solve(&self, program: &ConicProgram, settings: &SolverSettings) -> Result<SolveReport> {
        program.validate()?;
        let layout = Layout::new(program);
        let n = layout.total;

        let mut q = vec![0.0; n];
        for t in program.objective().terms() {
            let (c, mult) = layout.column(t.var.0, t.row, t.col);
            q[c] -= t.coef * mult;
        }

        let mut trip = Triplets::default();
        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();

        // s = b - A x with s in the zero cone
        let mut eq_rows = 0;
        for c in program.constraints() {
            if let Constraint::Equal(e) = &c.constraint {
                trip.push_row(&layout, &e.linear, 1.0, -e.constant);
                eq_rows += 1;
            }
        }
        if eq_rows > 0 {
            cones.push(SupportedConeT::ZeroConeT(eq_rows));
        }

        let mut nn_rows = 0;
        for c in program.constraints() {
            if let Constraint::LessEqual(e) = &c.constraint {
                trip.push_row(&layout, &e.linear, 1.0, -e.constant);
                nn_rows += 1;
            }
        }
        for (i, v) in program.variables().iter().enumerate() {
            if v.kind == VarKind::NonNegative {
                trip.push_unit(layout.offsets[i], -1.0);
                nn_rows += 1;
            }
        }
        if nn_rows > 0 {
            cones.push(SupportedConeT::NonnegativeConeT(nn_rows));
        }

        for c in program.constraints() {
            if let Constraint::SecondOrderCone { bound, vector } = &c.constraint {
                trip.push_row(&layout, &bound.linear, -1.0, bound.constant);
                for v in vector {
                    trip.push_row(&layout, &v.linear, -1.0, v.constant);
                }
                cones.push(SupportedConeT::SecondOrderConeT(1 + vector.len()));
            }
        }

        for (i, v) in program.variables().iter().enumerate() {
            if let VarKind::Psd { dim } = v.kind {
                for k in 0..v.kind.scalar_count() {
                    trip.push_unit(layout.offsets[i] + k, -1.0);
                }
                cones.push(SupportedConeT::PSDTriangleConeT(dim));
            }
        }

        let m = trip.b.len();
        let a = CscMatrix::new_from_triplets(m, n, trip.rows, trip.cols, trip.vals);
        let p = CscMatrix::zeros((n, n));
        let clarabel_settings = match DefaultSettingsBuilder::default()
            .verbose(false)
            .tol_feas(settings.tol_feas)
            .tol_gap_abs(settings.tol_gap_abs)
            .tol_gap_rel(settings.tol_gap_rel)
            .max_iter(settings.max_iter)
            .max_threads(1)
            .direct_solve_method("faer".to_string())
            .build()
        {
            Ok(s) => s,
            Err(e) => return Ok(SolveReport::trouble(program, format!("settings: {e}"))),
        };

        let b = trip.b;
        let outcome = catch_unwind(AssertUnwindSafe(|| {
            let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, clarabel_settings)
                .map_err(|e| format!("{e:?}"))?;
            solver.solve();
            Ok::<_, String>((
                solver.solution.status,
                solver.solution.x.clone(),
                solver.solution.iterations,
                solver.solution.r_prim,
                solver.solution.r_dual,
            ))
        }));
        let (status, x, iterations, r_prim, r_dual) = match outcome {
            Ok(Ok(r)) => r,
            Ok(Err(msg)) => return Ok(SolveReport::trouble(program, msg)),
            Err(_) => return Ok(SolveReport::trouble(program, "backend panicked".into())),
        };

        let values: Vec<VarValue> = program
            .variables()
            .iter()
            .enumerate()
            .map(|(i, v)| match v.kind {
                VarKind::Psd { dim } => {
                    let mut y = DMatrix::zeros(dim, dim);
                    for col in 0..dim {
                        for row in 0..=col {
                            let (c, mult) = layout.column(i, row, col);
                            y[(row, col)] = x[c] * mult;
                            y[(col, row)] = x[c] * mult;
                        }
                    }
                    VarValue::Matrix(y)
                }
                _ => VarValue::Scalar(x[layout.offsets[i]]),
            })
            .collect();

        let violation = program.max_violation(&values);
        let diagnostics = format!(
            "clarabel status {status:?}, {iterations} iterations, r_prim {r_prim:.2e}, r_dual {r_dual:.2e}"
        );
        let status = match status {
            SolverStatus::Solved => SolveStatus::Optimal,
            SolverStatus::AlmostSolved if violation <= settings.feasibility_tolerance => {
                SolveStatus::Optimal
            }
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                SolveStatus::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                SolveStatus::Unbounded
            }
            SolverStatus::NumericalError
            | SolverStatus::InsufficientProgress
            | SolverStatus::MaxIterations
                if violation <= settings.feasibility_tolerance && violation.is_finite() =>
            {
                SolveStatus::Inaccurate
            }
            _ => SolveStatus::NumericalTrouble,
        };
        let objective_value = match status {
            SolveStatus::Optimal | SolveStatus::Inaccurate => program.objective_value(&values),
            _ => f64::NAN,
        };
        log::debug!("{}: {diagnostics}", program.name);
        Ok(SolveReport {
            status,
            objective_value,
            values,
            solver_iterations: iterations,
            max_constraint_violation: violation,
            diagnostics,
        })
    }
}
