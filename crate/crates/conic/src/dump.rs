//! Plain-text dump of a [`ConicProgram`] for cross-checking with external
//! solvers.
//!
//! ```text
//! program <name>
//! var <index> <name> psd <dim> | nonneg | free
//! objective <constant>
//! obj <block> <row> <col> <value>
//! con <index> <label> eq|le <constant>
//! con <index> <label> soc <len>  ; followed by `soc <index> <slot> const <c>`
//! a <con> <slot> <block> <row> <col> <value>
//! ```
//!
//! Every coefficient line reads `block, row, col, value` and multiplies the
//! upper-triangular entry `Y[row, col]` of the real block (scalars use
//! `0 0`). Slot 0 of a cone constraint is its bound, slots 1.. are the
//! vector components.

use std::io::{self, Write};

use crate::program::{AffineExpr, Constraint, ConicProgram, LinExpr, VarKind};

fn write_terms<W: Write>(out: &mut W, prefix: &str, e: &LinExpr) -> io::Result<()> {
    for t in e.terms() {
        writeln!(out, "{prefix} {} {} {} {:e}", t.var.0, t.row, t.col, t.coef)?;
    }
    Ok(())
}

fn write_slot<W: Write>(out: &mut W, con: usize, slot: usize, e: &AffineExpr) -> io::Result<()> {
    writeln!(out, "soc {con} {slot} const {:e}", e.constant)?;
    write_terms(out, &format!("a {con} {slot}"), &e.linear)
}

pub fn write_program<W: Write>(program: &ConicProgram, out: &mut W) -> io::Result<()> {
    writeln!(out, "program {}", program.name)?;
    for (i, v) in program.variables().iter().enumerate() {
        match v.kind {
            VarKind::Psd { dim } => writeln!(out, "var {i} {} psd {dim}", v.name)?,
            VarKind::NonNegative => writeln!(out, "var {i} {} nonneg", v.name)?,
            VarKind::Free => writeln!(out, "var {i} {} free", v.name)?,
        }
    }
    writeln!(out, "objective {:e}", program.objective_constant())?;
    write_terms(out, "obj", program.objective())?;
    for (i, c) in program.constraints().iter().enumerate() {
        match &c.constraint {
            Constraint::Equal(e) => {
                writeln!(out, "con {i} {} eq {:e}", c.label, e.constant)?;
                write_terms(out, &format!("a {i} 0"), &e.linear)?;
            }
            Constraint::LessEqual(e) => {
                writeln!(out, "con {i} {} le {:e}", c.label, e.constant)?;
                write_terms(out, &format!("a {i} 0"), &e.linear)?;
            }
            Constraint::SecondOrderCone { bound, vector } => {
                writeln!(out, "con {i} {} soc {}", c.label, vector.len() + 1)?;
                write_slot(out, i, 0, bound)?;
                for (s, v) in vector.iter().enumerate() {
                    write_slot(out, i, s + 1, v)?;
                }
            }
        }
    }
    Ok(())
}

pub fn program_to_string(program: &ConicProgram) -> String {
    let mut buf = Vec::new();
    write_program(program, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("dump is ASCII")
}
