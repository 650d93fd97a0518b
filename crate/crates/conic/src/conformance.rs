//! Backend conformance cases. Any [`ConicBackend`] adapter should pass all
//! of them; `run_all` returns the name and outcome of each case.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::hermitian::HermitianVar;
use crate::program::{AffineExpr, Constraint, ConicProgram, LinExpr};
use crate::solve::{ConicBackend, SolveStatus, SolverSettings};

pub type CaseResult = std::result::Result<(), String>;

fn expect_close(what: &str, got: f64, want: f64, tol: f64) -> CaseResult {
    if (got - want).abs() <= tol * (1.0 + want.abs()) {
        Ok(())
    } else {
        Err(format!("{what}: got {got}, want {want}"))
    }
}

fn solve_optimal(
    backend: &dyn ConicBackend,
    program: &ConicProgram,
) -> std::result::Result<crate::solve::SolveReport, String> {
    let settings = SolverSettings::default();
    let report = backend.solve(program, &settings).map_err(|e| e.to_string())?;
    if report.status != SolveStatus::Optimal {
        return Err(format!("{}: status {:?}", program.name, report.status));
    }
    if report.max_constraint_violation > 10.0 * settings.feasibility_tolerance {
        return Err(format!(
            "{}: violation {:.3e}",
            program.name, report.max_constraint_violation
        ));
    }
    Ok(report)
}

/// maximize tr(X) s.t. X PSD, tr(X) <= 1.
pub fn trace_bound(backend: &dyn ConicBackend) -> CaseResult {
    let mut p = ConicProgram::new("trace_bound");
    let x = p.add_psd("X", 3);
    let mut tr = LinExpr::new();
    for i in 0..3 {
        tr.add_entry(x, i, i, 1.0);
    }
    p.set_objective(tr.clone(), 0.0);
    p.add_constraint("budget", Constraint::LessEqual(AffineExpr::new(tr, -1.0)));
    let r = solve_optimal(backend, &p)?;
    expect_close("objective", r.objective_value, 1.0, 1e-6)
}

/// minimize t s.t. ||(3, 4)|| <= t, posed as maximizing -t.
pub fn euclidean_norm(backend: &dyn ConicBackend) -> CaseResult {
    let mut p = ConicProgram::new("euclidean_norm");
    let t = p.add_free("t");
    p.set_objective(LinExpr::scalar(t, -1.0), 0.0);
    p.add_constraint(
        "norm",
        Constraint::SecondOrderCone {
            bound: LinExpr::scalar(t, 1.0).into(),
            vector: vec![
                AffineExpr::new(LinExpr::new(), 3.0),
                AffineExpr::new(LinExpr::new(), 4.0),
            ],
        },
    );
    let r = solve_optimal(backend, &p)?;
    expect_close("t", r.values[t.0].as_scalar().unwrap_or(f64::NAN), 5.0, 1e-6)
}

/// x >= 1 and x <= 0.
pub fn infeasible(backend: &dyn ConicBackend) -> CaseResult {
    let mut p = ConicProgram::new("infeasible");
    let x = p.add_nonnegative("x");
    p.set_objective(LinExpr::scalar(x, 1.0), 0.0);
    p.add_constraint(
        "lower",
        Constraint::LessEqual(AffineExpr::new(LinExpr::scalar(x, -1.0), 1.0)),
    );
    p.add_constraint("upper", Constraint::LessEqual(LinExpr::scalar(x, 1.0).into()));
    let r = backend
        .solve(&p, &SolverSettings::default())
        .map_err(|e| e.to_string())?;
    match r.status {
        SolveStatus::Infeasible => Ok(()),
        s => Err(format!("expected Infeasible, got {s:?}")),
    }
}

/// maximize x with x free and unconstrained above.
pub fn unbounded(backend: &dyn ConicBackend) -> CaseResult {
    let mut p = ConicProgram::new("unbounded");
    let x = p.add_free("x");
    let y = p.add_nonnegative("y");
    p.set_objective(LinExpr::scalar(x, 1.0), 0.0);
    let mut e = LinExpr::scalar(x, 1.0);
    e.add_scalar(y, -1.0);
    p.add_constraint("link", Constraint::LessEqual(e.into()));
    let r = backend
        .solve(&p, &SolverSettings::default())
        .map_err(|e| e.to_string())?;
    match r.status {
        SolveStatus::Unbounded => Ok(()),
        s => Err(format!("expected Unbounded, got {s:?}")),
    }
}

/// maximize Re tr(C X) over Hermitian PSD X with tr(X) <= 1. The optimum is
/// the largest eigenvalue of C, which exercises the factor-of-two handling
/// of the real embedding.
pub fn hermitian_eigenvalue(backend: &dyn ConicBackend) -> CaseResult {
    let c = DMatrix::from_row_slice(
        3,
        3,
        &[
            Complex64::new(2.0, 0.0),
            Complex64::new(0.5, -1.0),
            Complex64::new(0.0, 0.3),
            Complex64::new(0.5, 1.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(-0.4, 0.2),
            Complex64::new(0.0, -0.3),
            Complex64::new(-0.4, -0.2),
            Complex64::new(-1.0, 0.0),
        ],
    );
    let lmax = c.clone().symmetric_eigen().eigenvalues.max();
    let mut p = ConicProgram::new("hermitian_eigenvalue");
    let x = HermitianVar::new(p.add_psd("X", 6), 3);
    p.set_objective(x.trace_with(&c), 0.0);
    p.add_constraint(
        "budget",
        Constraint::LessEqual(AffineExpr::new(x.trace(), -1.0)),
    );
    let r = solve_optimal(backend, &p)?;
    expect_close("objective", r.objective_value, lmax, 1e-6)?;
    let xv = x.value(r.values[x.var.0].as_matrix().ok_or("missing matrix")?);
    let direct = (&c * &xv).trace().re;
    expect_close("complex-domain objective", direct, lmax, 1e-6)
}

/// Equality-constrained Hermitian variable with a cone bound on `X v`:
/// X fixed to a known matrix, t >= ||X v|| minimized.
pub fn hermitian_equality_and_cone(backend: &dyn ConicBackend) -> CaseResult {
    let target = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(1.0, 0.0),
            Complex64::new(0.2, 0.4),
            Complex64::new(0.2, -0.4),
            Complex64::new(0.5, 0.0),
        ],
    );
    let v = DVector::from_vec(vec![Complex64::new(1.0, -1.0), Complex64::new(0.5, 2.0)]);
    let want = (&target * &v).norm();

    let mut p = ConicProgram::new("hermitian_equality_and_cone");
    let x = HermitianVar::new(p.add_psd("X", 4), 2);
    let t = p.add_nonnegative("t");
    for i in 0..2 {
        for j in i..2 {
            p.add_constraint(
                format!("re{i}{j}"),
                Constraint::Equal(AffineExpr::new(x.re(i, j), -target[(i, j)].re)),
            );
            if i != j {
                p.add_constraint(
                    format!("im{i}{j}"),
                    Constraint::Equal(AffineExpr::new(x.im(i, j), -target[(i, j)].im)),
                );
            }
        }
    }
    p.add_constraint(
        "norm",
        Constraint::SecondOrderCone {
            bound: LinExpr::scalar(t, 1.0).into(),
            vector: x.mat_vec(&v).into_iter().map(AffineExpr::from).collect(),
        },
    );
    p.set_objective(LinExpr::scalar(t, -1.0), 0.0);
    let r = solve_optimal(backend, &p)?;
    expect_close("t", r.values[t.0].as_scalar().unwrap_or(f64::NAN), want, 1e-6)
}

pub fn run_all(backend: &dyn ConicBackend) -> Vec<(&'static str, CaseResult)> {
    vec![
        ("trace_bound", trace_bound(backend)),
        ("euclidean_norm", euclidean_norm(backend)),
        ("infeasible", infeasible(backend)),
        ("unbounded", unbounded(backend)),
        ("hermitian_eigenvalue", hermitian_eigenvalue(backend)),
        ("hermitian_equality_and_cone", hermitian_equality_and_cone(backend)),
    ]
}
