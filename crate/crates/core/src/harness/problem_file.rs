//! JSON problem format.
//!
//! ```json
//! { "cone": [{"type": "psd", "size": 3}, {"type": "soc", "size": 4}],
//!   "form": "basis", "x0": [...], "s0": [...], "basis_L": [[...], ...] }
//! ```
//!
//! or, with `"form": "operator"`, the fields `A` (list of columns), `B`
//! (list of rows, possibly empty), `b`, `c` and `g`. Coordinates follow
//! the element storage convention: orthant entries, raw second-order
//! coordinates `(x0, x1)` with `size = dim x1 + 1`, and the scaled upper
//! triangle for PSD blocks.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jordan::{BlockKind, Cone, Element};
use crate::linalg::Matrix;
use crate::subspace::{ConicProblem, ConstraintForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockType {
    Orthant,
    Soc,
    Psd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    #[serde(rename = "type")]
    pub kind: BlockType,
    pub size: usize,
}

impl From<BlockKind> for BlockSpec {
    fn from(b: BlockKind) -> Self {
        match b {
            BlockKind::Orthant(k) => BlockSpec { kind: BlockType::Orthant, size: k },
            BlockKind::SecondOrder(m) => BlockSpec { kind: BlockType::Soc, size: m },
            BlockKind::Psd(k) => BlockSpec { kind: BlockType::Psd, size: k },
        }
    }
}

impl From<BlockSpec> for BlockKind {
    fn from(b: BlockSpec) -> Self {
        match b.kind {
            BlockType::Orthant => BlockKind::Orthant(b.size),
            BlockType::Soc => BlockKind::SecondOrder(b.size),
            BlockType::Psd => BlockKind::Psd(b.size),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum FormData {
    Basis {
        x0: Vec<f64>,
        s0: Vec<f64>,
        #[serde(rename = "basis_L")]
        basis_l: Vec<Vec<f64>>,
    },
    Operator {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        #[serde(rename = "B", default)]
        b_mat: Vec<Vec<f64>>,
        b: Vec<f64>,
        c: Vec<f64>,
        #[serde(default)]
        g: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub cone: Vec<BlockSpec>,
    #[serde(flatten)]
    pub data: FormData,
}

fn finite(name: &str, v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        None => Ok(()),
        Some(i) => Err(Error::Parse(format!("{name}[{i}] is not a finite number"))),
    }
}

fn element(cone: &Arc<Cone>, name: &str, v: &[f64]) -> Result<Element> {
    finite(name, v)?;
    if v.len() != cone.dim() {
        return Err(Error::Parse(format!("{name} has {} entries, cone dimension is {}", v.len(), cone.dim())));
    }
    Element::new(cone, v.to_vec())
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<ProblemFile> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ProblemFile> {
        ProblemFile::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn from_problem(problem: &ConicProblem) -> ProblemFile {
        let cone = problem.cone().blocks().iter().map(|b| BlockSpec::from(*b)).collect();
        let data = match problem.form() {
            ConstraintForm::Basis(bf) => FormData::Basis {
                x0: bf.x0.coords().to_vec(),
                s0: bf.s0.coords().to_vec(),
                basis_l: bf.basis_l.iter().map(|l| l.coords().to_vec()).collect(),
            },
            ConstraintForm::Operator(op) => FormData::Operator {
                a: op.a.iter().map(|a| a.coords().to_vec()).collect(),
                b_mat: (0..op.b_mat.rows()).map(|r| op.b_mat.row(r).to_vec()).collect(),
                b: op.b.clone(),
                c: op.c.coords().to_vec(),
                g: op.g.clone(),
            },
        };
        ProblemFile { cone, data }
    }

    pub fn to_cone(&self) -> Result<Arc<Cone>> {
        Cone::new(self.cone.iter().map(|b| BlockKind::from(*b)).collect())
    }

    pub fn to_problem(&self) -> Result<ConicProblem> {
        let cone = self.to_cone()?;
        match &self.data {
            FormData::Basis { x0, s0, basis_l } => {
                let basis = basis_l
                    .iter()
                    .enumerate()
                    .map(|(i, l)| element(&cone, &format!("basis_L[{i}]"), l))
                    .collect::<Result<Vec<_>>>()?;
                ConicProblem::basis(&cone, element(&cone, "x0", x0)?, element(&cone, "s0", s0)?, basis)
            }
            FormData::Operator { a, b_mat, b, c, g } => {
                let cols = a
                    .iter()
                    .enumerate()
                    .map(|(i, col)| element(&cone, &format!("A[{i}]"), col))
                    .collect::<Result<Vec<_>>>()?;
                let m = cols.len();
                finite("b", b)?;
                finite("g", g)?;
                let mut flat = Vec::with_capacity(b_mat.len() * m);
                for (r, row) in b_mat.iter().enumerate() {
                    finite(&format!("B[{r}]"), row)?;
                    if row.len() != m {
                        return Err(Error::Parse(format!("B[{r}] has {} entries, A has {m} columns", row.len())));
                    }
                    flat.extend_from_slice(row);
                }
                let bm = Matrix::from_row_major(b_mat.len(), m, flat)?;
                ConicProblem::operator(&cone, cols, bm, b.clone(), element(&cone, "c", c)?, g.clone())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIS: &str = r#"{
        "cone": [{"type": "orthant", "size": 2}, {"type": "soc", "size": 3}],
        "form": "basis",
        "x0": [1, 2, 3, 0.5, 0.5],
        "s0": [1, 1, 1, 0, 0],
        "basis_L": [[1, 0, 0, 0, 1]]
    }"#;

    #[test]
    fn parses_basis_form() {
        let f = ProblemFile::from_json(BASIS).unwrap();
        let p = f.to_problem().unwrap();
        assert_eq!(p.cone().rank(), 4);
        assert_eq!(ProblemFile::from_problem(&p), f);
    }

    #[test]
    fn round_trips_operator_form() {
        let text = r#"{
            "cone": [{"type": "psd", "size": 2}],
            "form": "operator",
            "A": [[1, 0, 0], [0, 1, 0]],
            "B": [[1, 1]],
            "b": [1, 0],
            "c": [1, 0, 1],
            "g": [0]
        }"#;
        let f = ProblemFile::from_json(text).unwrap();
        let p = f.to_problem().unwrap();
        let again = ProblemFile::from_json(&ProblemFile::from_problem(&p).to_json().unwrap()).unwrap();
        assert_eq!(again, f);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(ProblemFile::from_json("{"), Err(Error::Parse(_))));
        assert!(ProblemFile::from_json(&BASIS.replace("0.5, 0.5", "1e999, 0.5")).is_err());
        let short = ProblemFile::from_json(&BASIS.replace("[1, 2, 3, 0.5, 0.5]", "[1, 2]")).unwrap();
        assert!(matches!(short.to_problem(), Err(Error::Parse(_))));
        let unknown = BASIS.replace("\"orthant\"", "\"hermitian\"");
        assert!(ProblemFile::from_json(&unknown).is_err());
        let zero = ProblemFile::from_json(&BASIS.replace("\"size\": 2", "\"size\": 0")).unwrap();
        assert!(matches!(zero.to_problem(), Err(Error::InvalidCone(_))));
    }
}
