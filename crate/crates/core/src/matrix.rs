//! Dense N×N real matrices over a roster: multiplex weights, profile
//! similarities and network distances.
//!
//! Undefined entries (for example a similarity involving a participant with
//! no profile) are stored as NaN and surface as `None` through [`WeightedMatrix::get`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::graph::{GraphError, Roster};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatrixKind {
    /// Entries in `{0, 1/M, ..., 1}`.
    MultiplexWeight { layers: usize },
    /// Entries in `[0, 1]` or undefined.
    Similarity,
    /// Entries in `[0, 1]`; 1 marks "no path".
    Distance,
}

impl MatrixKind {
    pub fn label(&self) -> &'static str {
        match self {
            MatrixKind::MultiplexWeight { .. } => "multiplex_weight",
            MatrixKind::Similarity => "similarity",
            MatrixKind::Distance => "distance",
        }
    }
}

#[derive(Debug, Clone)]
pub struct WeightedMatrix {
    kind: MatrixKind,
    roster: Arc<Roster>,
    values: Vec<f64>,
}

impl WeightedMatrix {
    /// Matrix filled with `fill`.
    pub fn filled(kind: MatrixKind, roster: Arc<Roster>, fill: f64) -> Self {
        let n = roster.len();
        WeightedMatrix {
            kind,
            roster,
            values: vec![fill; n * n],
        }
    }

    /// Builds from row-major values (NaN = undefined).
    pub fn from_values(kind: MatrixKind, roster: Arc<Roster>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), roster.len() * roster.len(), "values must be n*n");
        WeightedMatrix {
            kind,
            roster,
            values,
        }
    }

    /// Builds from nested rows; mostly for tests and fixtures.
    pub fn from_rows(kind: MatrixKind, rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let values = rows
            .iter()
            .flat_map(|r| {
                assert_eq!(r.len(), n, "matrix must be square");
                r.iter().copied()
            })
            .collect();
        WeightedMatrix::from_values(kind, Arc::new(Roster::numbered(n)), values)
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn roster(&self) -> &Arc<Roster> {
        &self.roster
    }

    pub fn len(&self) -> usize {
        self.roster.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roster.is_empty()
    }

    /// Raw entry, NaN when undefined.
    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let v = self.value(i, j);
        (!v.is_nan()).then_some(v)
    }

    pub fn is_defined(&self, i: usize, j: usize) -> bool {
        !self.value(i, j).is_nan()
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let n = self.len();
        self.values[i * n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Same shape and node ordering.
    pub fn aligned_with(&self, other: &WeightedMatrix) -> bool {
        self.roster == other.roster || *self.roster == *other.roster
    }

    /// Copy with rows and columns relabelled: `out[i][j] = self[p[i]][p[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> WeightedMatrix {
        let n = self.len();
        assert_eq!(perm.len(), n);
        let mut values = Vec::with_capacity(n * n);
        for &pi in perm {
            let row = self.row(pi);
            values.extend(perm.iter().map(|&pj| row[pj]));
        }
        WeightedMatrix {
            kind: self.kind,
            roster: Arc::clone(&self.roster),
            values,
        }
    }

    pub fn to_document(&self) -> MatrixDocument {
        let n = self.len();
        MatrixDocument {
            kind: self.kind,
            node_ids: self.roster.ids().to_vec(),
            values: (0..n)
                .map(|i| (0..n).map(|j| self.get(i, j)).collect())
                .collect(),
        }
    }

    pub fn from_document(doc: MatrixDocument) -> Result<Self, GraphError> {
        let roster = Arc::new(Roster::new(doc.node_ids)?);
        let n = roster.len();
        let mut values = Vec::with_capacity(n * n);
        if doc.values.len() != n {
            return Err(GraphError::NotSquare(format!(
                "{} rows for {n} nodes",
                doc.values.len()
            )));
        }
        for (i, row) in doc.values.iter().enumerate() {
            if row.len() != n {
                return Err(GraphError::NotSquare(format!(
                    "row {i} has {} entries for {n} nodes",
                    row.len()
                )));
            }
            values.extend(row.iter().map(|v| v.unwrap_or(f64::NAN)));
        }
        Ok(WeightedMatrix::from_values(doc.kind, roster, values))
    }

    /// CSV with a header of participant IDs; undefined cells are empty.
    pub fn to_csv(&self) -> String {
        let n = self.len();
        let mut out = String::from("id");
        for id in self.roster.ids() {
            out.push(',');
            out.push_str(id);
        }
        out.push('\n');
        for i in 0..n {
            out.push_str(self.roster.id(i));
            for j in 0..n {
                out.push(',');
                if let Some(v) = self.get(i, j) {
                    out.push_str(&v.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

impl PartialEq for WeightedMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && *self.roster == *other.roster
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits() || a == b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDocument {
    #[serde(flatten)]
    pub kind: MatrixKind,
    pub node_ids: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_relabels_rows_and_columns() {
        let m = WeightedMatrix::from_rows(
            MatrixKind::Similarity,
            &[
                vec![0.0, 0.1, 0.2],
                vec![0.1, 0.0, 0.3],
                vec![0.2, 0.3, 0.0],
            ],
        );
        let p = m.permuted(&[2, 0, 1]);
        assert_eq!(p.value(0, 1), 0.2);
        assert_eq!(p.value(1, 2), 0.1);
        assert_eq!(p.value(0, 2), 0.3);
    }

    #[test]
    fn undefined_entries_serialize_as_null() {
        let mut m = WeightedMatrix::filled(
            MatrixKind::Similarity,
            Arc::new(Roster::numbered(2)),
            0.5,
        );
        m.set(0, 0, f64::NAN);
        m.set(1, 1, f64::NAN);
        let json = serde_json::to_string(&m.to_document()).unwrap();
        assert_eq!(
            json,
            r#"{"kind":"similarity","node_ids":["0","1"],"values":[[null,0.5],[0.5,null]]}"#
        );
        let back =
            WeightedMatrix::from_document(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(m.to_csv(), "id,0,1\n0,,0.5\n1,0.5,\n");
    }
}
