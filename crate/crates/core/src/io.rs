//! JSON forms of states, density operators and measurement menus.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::devices::MenuEntry;
use crate::error::{Error, Result};
use crate::quantum::{DensityOperator, PureState, C64};

/// A complex number written as `[re, im]` or as a bare real.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexJson {
    Pair([f64; 2]),
    Real(f64),
}

impl From<ComplexJson> for C64 {
    fn from(c: ComplexJson) -> C64 {
        match c {
            ComplexJson::Pair([re, im]) => C64::new(re, im),
            ComplexJson::Real(re) => C64::new(re, 0.0),
        }
    }
}

impl From<C64> for ComplexJson {
    fn from(c: C64) -> Self {
        ComplexJson::Pair([c.re, c.im])
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateJson {
    pub dims: Vec<usize>,
    pub amplitudes: Vec<ComplexJson>,
}

impl StateJson {
    pub fn into_state(self) -> Result<PureState> {
        PureState::new(self.dims, self.amplitudes.into_iter().map(C64::from).collect())
    }
}

impl From<&PureState> for StateJson {
    fn from(psi: &PureState) -> Self {
        StateJson {
            dims: psi.dims().to_vec(),
            amplitudes: psi.amplitudes().iter().map(|&a| a.into()).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityJson {
    pub dims: Vec<usize>,
    pub matrix: Vec<Vec<ComplexJson>>,
}

fn square_matrix(rows: Vec<Vec<ComplexJson>>) -> Result<DMatrix<C64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::domain("matrix must be square and nonempty"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j].into()))
}

impl DensityJson {
    pub fn into_density(self, tol: f64) -> Result<DensityOperator> {
        DensityOperator::new(self.dims, square_matrix(self.matrix)?, tol)
    }
}

impl From<&DensityOperator> for DensityJson {
    fn from(rho: &DensityOperator) -> Self {
        let m = rho.matrix();
        DensityJson {
            dims: rho.dims().to_vec(),
            matrix: (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)].into()).collect())
                .collect(),
        }
    }
}

/// A menu entry: a Pauli name (`"X"`, `"Y"`, `"Z"`) or a labelled matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MenuEntryJson {
    Named(String),
    Matrix {
        label: String,
        matrix: Vec<Vec<ComplexJson>>,
    },
}

/// `{"menus": [[entry, ...], ...]}`, one menu per site.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MenusJson {
    pub menus: Vec<Vec<MenuEntryJson>>,
}

impl MenusJson {
    pub fn into_menus(self) -> Result<Vec<Vec<MenuEntry>>> {
        self.menus
            .into_iter()
            .map(|menu| {
                menu.into_iter()
                    .map(|e| match e {
                        MenuEntryJson::Named(name) => {
                            let mut chars = name.chars();
                            match (chars.next(), chars.next()) {
                                (Some(c), None) => MenuEntry::pauli(c),
                                _ => Err(Error::domain(format!("unknown observable '{name}'"))),
                            }
                        }
                        MenuEntryJson::Matrix { label, matrix } => Ok(MenuEntry {
                            label,
                            matrix: square_matrix(matrix)?,
                        }),
                    })
                    .collect()
            })
            .collect()
    }
}
