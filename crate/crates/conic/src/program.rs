use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{ConicError, Result};

/// Index of a declared variable inside a [`ConicProgram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    /// Real symmetric positive semidefinite block of the given dimension.
    Psd { dim: usize },
    NonNegative,
    Free,
}

impl VarKind {
    /// Number of independent real scalars carried by the variable.
    pub fn scalar_count(&self) -> usize {
        match *self {
            VarKind::Psd { dim } => dim * (dim + 1) / 2,
            VarKind::NonNegative | VarKind::Free => 1,
        }
    }

    fn dim(&self) -> usize {
        match *self {
            VarKind::Psd { dim } => dim,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

/// `coef * Y[row, col]` for a PSD block `Y` (stored with `row <= col`), or
/// `coef * x` for a scalar variable (`row == col == 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub var: VarId,
    pub row: usize,
    pub col: usize,
    pub coef: f64,
}

/// Sparse linear functional over the program variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    terms: Vec<Term>,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn scalar(var: VarId, coef: f64) -> Self {
        let mut e = Self::new();
        e.add_scalar(var, coef);
        e
    }

    pub fn add_scalar(&mut self, var: VarId, coef: f64) {
        self.add_entry(var, 0, 0, coef);
    }

    /// Adds `coef * Y[row, col]`. Symmetric entries are folded onto the upper
    /// triangle, so `(i, j)` and `(j, i)` address the same scalar.
    pub fn add_entry(&mut self, var: VarId, row: usize, col: usize, coef: f64) {
        if coef == 0.0 {
            return;
        }
        let (row, col) = if row <= col { (row, col) } else { (col, row) };
        self.terms.push(Term {
            var,
            row,
            col,
            coef,
        });
    }

    pub fn add_expr(&mut self, other: &LinExpr, scale: f64) {
        if scale == 0.0 {
            return;
        }
        self.terms.extend(other.terms.iter().map(|t| Term {
            coef: t.coef * scale,
            ..*t
        }));
    }

    pub fn scaled(&self, scale: f64) -> LinExpr {
        let mut e = LinExpr::new();
        e.add_expr(self, scale);
        e
    }

    /// Merges duplicate coordinates and drops exact zeros. Ordering is by
    /// (variable, row, col) so the result is deterministic.
    pub fn compact(&mut self) {
        self.terms
            .sort_by(|a, b| (a.var, a.row, a.col).cmp(&(b.var, b.row, b.col)));
        let mut merged: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            match merged.last_mut() {
                Some(last) if last.var == t.var && last.row == t.row && last.col == t.col => {
                    last.coef += t.coef;
                }
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coef != 0.0);
        self.terms = merged;
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn evaluate(&self, values: &[VarValue]) -> f64 {
        self.terms.iter().map(|t| t.coef * values[t.var.0].entry(t.row, t.col)).sum()
    }

    /// Sum of `|coef * value|`, used to scale violations.
    fn magnitude(&self, values: &[VarValue]) -> f64 {
        self.terms
            .iter()
            .map(|t| (t.coef * values[t.var.0].entry(t.row, t.col)).abs())
            .sum()
    }
}

/// `linear + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineExpr {
    pub linear: LinExpr,
    pub constant: f64,
}

impl AffineExpr {
    pub fn new(linear: LinExpr, constant: f64) -> Self {
        Self { linear, constant }
    }

    pub fn evaluate(&self, values: &[VarValue]) -> f64 {
        self.linear.evaluate(values) + self.constant
    }

    fn magnitude(&self, values: &[VarValue]) -> f64 {
        self.linear.magnitude(values) + self.constant.abs()
    }
}

impl From<LinExpr> for AffineExpr {
    fn from(linear: LinExpr) -> Self {
        Self {
            linear,
            constant: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// `expr == 0`
    Equal(AffineExpr),
    /// `expr <= 0`
    LessEqual(AffineExpr),
    /// `||vector||_2 <= bound`
    SecondOrderCone {
        bound: AffineExpr,
        vector: Vec<AffineExpr>,
    },
}

impl Constraint {
    fn exprs(&self) -> Box<dyn Iterator<Item = &AffineExpr> + '_> {
        match self {
            Constraint::Equal(e) | Constraint::LessEqual(e) => Box::new(std::iter::once(e)),
            Constraint::SecondOrderCone { bound, vector } => {
                Box::new(std::iter::once(bound).chain(vector.iter()))
            }
        }
    }

    /// Violation relative to `1 + magnitude` of the participating terms.
    pub fn relative_violation(&self, values: &[VarValue]) -> f64 {
        match self {
            Constraint::Equal(e) => e.evaluate(values).abs() / (1.0 + e.magnitude(values)),
            Constraint::LessEqual(e) => e.evaluate(values).max(0.0) / (1.0 + e.magnitude(values)),
            Constraint::SecondOrderCone { bound, vector } => {
                let norm = vector
                    .iter()
                    .map(|v| v.evaluate(values).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let scale: f64 =
                    bound.magnitude(values) + vector.iter().map(|v| v.magnitude(values)).sum::<f64>();
                (norm - bound.evaluate(values)).max(0.0) / (1.0 + scale)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledConstraint {
    pub label: String,
    pub constraint: Constraint,
}

/// Numerical value of one variable in a solution.
#[derive(Debug, Clone, PartialEq)]
pub enum VarValue {
    Matrix(DMatrix<f64>),
    Scalar(f64),
}

impl VarValue {
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        match self {
            VarValue::Matrix(m) => m[(row, col)],
            VarValue::Scalar(x) => *x,
        }
    }

    pub fn as_matrix(&self) -> Option<&DMatrix<f64>> {
        match self {
            VarValue::Matrix(m) => Some(m),
            VarValue::Scalar(_) => None,
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            VarValue::Scalar(x) => Some(*x),
            VarValue::Matrix(_) => None,
        }
    }
}

/// Maximize a linear objective over real PSD blocks and scalars subject to
/// linear equalities, linear inequalities and second-order cones.
#[derive(Debug, Clone, Default)]
pub struct ConicProgram {
    pub name: String,
    variables: Vec<Variable>,
    index: BTreeMap<String, VarId>,
    objective: LinExpr,
    objective_constant: f64,
    constraints: Vec<LabeledConstraint>,
}

impl ConicProgram {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    fn declare(&mut self, name: impl Into<String>, kind: VarKind) -> VarId {
        let name = name.into();
        let id = VarId(self.variables.len());
        self.index.insert(name.clone(), id);
        self.variables.push(Variable { name, kind });
        id
    }

    pub fn add_psd(&mut self, name: impl Into<String>, dim: usize) -> VarId {
        self.declare(name, VarKind::Psd { dim })
    }

    pub fn add_nonnegative(&mut self, name: impl Into<String>) -> VarId {
        self.declare(name, VarKind::NonNegative)
    }

    pub fn add_free(&mut self, name: impl Into<String>) -> VarId {
        self.declare(name, VarKind::Free)
    }

    pub fn variable_id(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> Option<&Variable> {
        self.variables.get(id.0)
    }

    pub fn set_objective(&mut self, mut objective: LinExpr, constant: f64) {
        objective.compact();
        self.objective = objective;
        self.objective_constant = constant;
    }

    pub fn objective(&self) -> &LinExpr {
        &self.objective
    }

    pub fn objective_constant(&self) -> f64 {
        self.objective_constant
    }

    pub fn add_constraint(&mut self, label: impl Into<String>, mut constraint: Constraint) {
        match &mut constraint {
            Constraint::Equal(e) | Constraint::LessEqual(e) => e.linear.compact(),
            Constraint::SecondOrderCone { bound, vector } => {
                bound.linear.compact();
                vector.iter_mut().for_each(|v| v.linear.compact());
            }
        }
        self.constraints.push(LabeledConstraint {
            label: label.into(),
            constraint,
        });
    }

    /// Drops every constraint whose label starts with `prefix`; returns how
    /// many were removed.
    pub fn remove_constraints(&mut self, prefix: &str) -> usize {
        let before = self.constraints.len();
        self.constraints.retain(|c| !c.label.starts_with(prefix));
        before - self.constraints.len()
    }

    pub fn constraints(&self) -> &[LabeledConstraint] {
        &self.constraints
    }

    /// Total number of real scalars across all variables.
    pub fn scalar_count(&self) -> usize {
        self.variables.iter().map(|v| v.kind.scalar_count()).sum()
    }

    /// Checks that every term references a declared variable and an entry
    /// inside its block.
    pub fn validate(&self) -> Result<()> {
        let check = |e: &LinExpr| -> Result<()> {
            for t in e.terms() {
                let var = self
                    .variables
                    .get(t.var.0)
                    .ok_or(ConicError::UnknownVariable(t.var.0))?;
                let dim = var.kind.dim();
                if t.row > t.col || t.col >= dim {
                    return Err(ConicError::EntryOutOfRange {
                        name: var.name.clone(),
                        row: t.row,
                        col: t.col,
                        dim,
                    });
                }
            }
            Ok(())
        };
        check(&self.objective)?;
        for c in &self.constraints {
            for e in c.constraint.exprs() {
                check(&e.linear)?;
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, values: &[VarValue]) -> f64 {
        self.objective.evaluate(values) + self.objective_constant
    }

    /// Largest relative violation over all constraints and variable cones.
    /// PSD blocks contribute `max(0, -lambda_min) / (1 + ||Y||_max)`.
    pub fn max_violation(&self, values: &[VarValue]) -> f64 {
        let mut worst = self
            .constraints
            .iter()
            .map(|c| c.constraint.relative_violation(values))
            .fold(0.0_f64, f64::max);
        for (var, value) in self.variables.iter().zip(values) {
            let v = match (var.kind, value) {
                (VarKind::Psd { .. }, VarValue::Matrix(m)) => {
                    let lmin = m.clone().symmetric_eigenvalues().min();
                    (-lmin).max(0.0) / (1.0 + m.amax())
                }
                (VarKind::NonNegative, VarValue::Scalar(x)) => (-x).max(0.0),
                _ => 0.0,
            };
            worst = worst.max(v);
        }
        worst
    }
}
