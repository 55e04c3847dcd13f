//! CPLEX LP text format writer.

use std::fmt::Write as _;
use std::io;

use crate::model::{LpModel, Relation};

fn push_terms(out: &mut String, terms: impl Iterator<Item = (usize, f64)>) {
    let mut first = true;
    for (j, a) in terms {
        if first {
            if a < 0.0 {
                out.push_str(" -");
            }
            first = false;
        } else {
            out.push_str(if a < 0.0 { " -" } else { " +" });
        }
        let _ = write!(out, " {} x{}", a.abs(), j);
    }
    if first {
        out.push_str(" 0 x0");
    }
}

/// Renders `model` in CPLEX LP format. Variables are named `x<i>`, rows `c<i>`.
pub fn to_lp_string(model: &LpModel) -> String {
    let mut out = String::new();
    out.push_str("Minimize\n obj:");
    push_terms(
        &mut out,
        model
            .variables()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.cost != 0.0)
            .map(|(j, v)| (j, v.cost)),
    );
    out.push_str("\nSubject To\n");
    for (i, row) in model.constraints().iter().enumerate() {
        let _ = write!(out, " c{i}:");
        push_terms(&mut out, row.terms.iter().map(|&(v, a)| (v.index(), a)));
        let rel = match row.relation {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        };
        let _ = writeln!(out, " {rel} {}", row.rhs);
    }
    out.push_str("Bounds\n");
    for (j, v) in model.variables().iter().enumerate() {
        let (l, u) = (v.lower, v.upper);
        let _ = match (l.is_finite(), u.is_finite()) {
            _ if l == u => writeln!(out, " x{j} = {l}"),
            (true, true) => writeln!(out, " {l} <= x{j} <= {u}"),
            (true, false) => writeln!(out, " x{j} >= {l}"),
            (false, true) => writeln!(out, " -inf <= x{j} <= {u}"),
            (false, false) => writeln!(out, " x{j} free"),
        };
    }
    out.push_str("End\n");
    out
}

pub fn write_lp<W: io::Write>(model: &LpModel, mut w: W) -> io::Result<()> {
    w.write_all(to_lp_string(model).as_bytes())
}
