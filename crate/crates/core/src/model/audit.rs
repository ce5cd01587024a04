//! Static shape audit against the published layer table.

use std::fmt;

use super::arch::{ReferenceRow, DOCUMENTED_INPUT_NOTES, TABLE1_REFERENCE};
use super::net::AnomalyNet;
use crate::error::Result;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditRow {
    pub name: String,
    /// Extents without the batch axis.
    pub input: Vec<usize>,
    pub output: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Column {
    Input,
    Output,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Deviation {
    pub layer: String,
    pub column: Column,
    pub published: Vec<usize>,
    pub computed: Vec<usize>,
    /// Explanation when this is a known inconsistency in the reference.
    pub note: Option<&'static str>,
}

impl Deviation {
    pub fn documented(&self) -> bool {
        self.note.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShapeAudit {
    pub rows: Vec<AuditRow>,
}

/// Propagates `input = [T, H, W, C]` through the layer list without running
/// any arithmetic. The first row is the network input itself.
pub fn shape_audit<T: Scalar>(net: &AnomalyNet<T>, input: [usize; 4]) -> Result<ShapeAudit> {
    let mut dims = vec![1, input[0], input[1], input[2], input[3]];
    let mut rows = vec![AuditRow {
        name: "Input".into(),
        input: dims[1..].to_vec(),
        output: dims[1..].to_vec(),
    }];
    for layer in net.layers() {
        let out = layer.output_dims(&dims)?;
        rows.push(AuditRow {
            name: layer.name.clone(),
            input: dims[1..].to_vec(),
            output: out[1..].to_vec(),
        });
        dims = out;
    }
    Ok(ShapeAudit { rows })
}

impl ShapeAudit {
    pub fn row(&self, name: &str) -> Option<&AuditRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Reference rows with no counterpart in this audit.
    pub fn missing<'a>(&self, reference: &'a [ReferenceRow]) -> Vec<&'a str> {
        reference.iter().filter(|r| self.row(r.name).is_none()).map(|r| r.name).collect()
    }

    pub fn compare(&self, reference: &[ReferenceRow]) -> Vec<Deviation> {
        let mut out = Vec::new();
        for r in reference {
            let Some(row) = self.row(r.name) else { continue };
            let note = DOCUMENTED_INPUT_NOTES.iter().find(|(n, _)| *n == r.name).map(|(_, s)| *s);
            if row.input != r.input {
                out.push(Deviation {
                    layer: r.name.into(),
                    column: Column::Input,
                    published: r.input.to_vec(),
                    computed: row.input.clone(),
                    note,
                });
            }
            if row.output != r.output {
                out.push(Deviation {
                    layer: r.name.into(),
                    column: Column::Output,
                    published: r.output.to_vec(),
                    computed: row.output.clone(),
                    note: None,
                });
            }
        }
        out
    }

    pub fn compare_table1(&self) -> Vec<Deviation> {
        self.compare(TABLE1_REFERENCE)
    }

    /// True when `dev` is an Input-column entry whose computed value equals
    /// the published Output of the preceding reference row, i.e. the table
    /// contradicts itself there rather than disagreeing with the network.
    pub fn is_table_inconsistency(dev: &Deviation, reference: &[ReferenceRow]) -> bool {
        if dev.column != Column::Input {
            return false;
        }
        let Some(pos) = reference.iter().position(|r| r.name == dev.layer) else { return false };
        pos > 0 && reference[pos - 1].output == dev.computed.as_slice()
    }
}

fn dims(d: &[usize]) -> String {
    d.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("×")
}

impl fmt::Display for ShapeAudit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
        for r in &self.rows {
            writeln!(f, "{:<width$}  {:>16}  ->  {}", r.name, dims(&r.input), dims(&r.output))?;
        }
        Ok(())
    }
}

impl fmt::Display for Deviation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let col = match self.column {
            Column::Input => "input",
            Column::Output => "output",
        };
        write!(
            f,
            "{} {col}: published {}, computed {}",
            self.layer,
            dims(&self.published),
            dims(&self.computed)
        )?;
        match self.note {
            Some(n) => write!(f, " (documented: {n})"),
            None => write!(f, " (UNDOCUMENTED)"),
        }
    }
}
