//! Correlation and entanglement of density operators on subsets of sites,
//! the structures κ_corr and κ_S, and the total order of a pure state.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connective::{ConnectiveStructure, Subset};
use crate::disentangle::{analysis_subsets, disentanglement_structures, DisentanglementReport, PoolConfig};
use crate::error::{Error, Result};
use crate::quantum::{DensityOperator, PptVerdict, PureState};

/// Whether an entanglement verdict is a decision or only a necessary test.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VerdictQuality {
    Exact,
    PptNecessary,
}

fn check_subset(rho: &DensityOperator, j: Subset) -> Result<()> {
    if j.len() < 2 || !j.is_subset_of(rho.layout().all_sites()) {
        return Err(Error::domain("analysis subset must contain at least two sites"));
    }
    Ok(())
}

/// True when no bipartition `(J₁, J₂)` of `j` gives `ρ^J = ρ^{J₁} ⊗ ρ^{J₂}`.
pub fn is_completely_correlated_on(rho: &DensityOperator, j: Subset, tol: f64) -> Result<bool> {
    check_subset(rho, j)?;
    let r = rho.partial_trace(j)?;
    for (a, b) in Subset::full(j.len()).bipartitions() {
        if r.max_abs_diff(&r.split_product(a, b)?) <= tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True when `ρ^J` differs from the product of its single-site reductions.
pub fn is_partially_correlated_on(rho: &DensityOperator, j: Subset, tol: f64) -> Result<bool> {
    check_subset(rho, j)?;
    let r = rho.partial_trace(j)?;
    Ok(r.max_abs_diff(&r.product_of_marginals()?) > tol)
}

/// True when `ρ^J` is entangled across every bipartition of `j`.
///
/// A pure reduction is decided by Schmidt rank; otherwise the PPT test is
/// used, which only decides 2⊗2 and 2⊗3 cuts.
pub fn is_completely_entangled_on(
    rho: &DensityOperator,
    j: Subset,
    tol: f64,
) -> Result<(bool, VerdictQuality)> {
    check_subset(rho, j)?;
    let r = rho.partial_trace(j)?;
    let pure = r.is_pure(tol).then(|| r.top_eigenvector());
    let mut quality = VerdictQuality::Exact;
    for (a, b) in Subset::full(j.len()).bipartitions() {
        let verdict = match &pure {
            Some(psi) if psi.is_separable_bipartition(a, b, tol)? => PptVerdict::Separable,
            Some(_) => PptVerdict::Entangled,
            None => r.ppt_is_separable(a, b, tol)?,
        };
        match verdict {
            PptVerdict::Separable => return Ok((false, VerdictQuality::Exact)),
            PptVerdict::Entangled => {}
            PptVerdict::PptInconclusive => quality = VerdictQuality::PptNecessary,
        }
    }
    Ok((quality == VerdictQuality::Exact, quality))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubsetDensityFlags {
    pub subset: Subset,
    pub completely_correlated: bool,
    pub partially_correlated: bool,
    pub completely_entangled: bool,
    pub quality: VerdictQuality,
}

#[derive(Clone, Debug)]
pub struct DensityReport {
    pub subsets: Vec<SubsetDensityFlags>,
    pub corr: ConnectiveStructure,
    pub sugita: ConnectiveStructure,
}

impl DensityReport {
    /// Ω_f: the larger connective order of κ_corr and κ_S.
    pub fn order(&self) -> usize {
        self.corr.connective_order().max(self.sugita.connective_order())
    }

    pub fn flags_of(&self, j: Subset) -> Option<&SubsetDensityFlags> {
        self.subsets.iter().find(|f| f.subset == j)
    }

    /// True when every entanglement verdict was exact.
    pub fn all_exact(&self) -> bool {
        self.subsets.iter().all(|f| f.quality == VerdictQuality::Exact)
    }
}

pub fn density_structures(rho: &DensityOperator, tol: f64) -> Result<DensityReport> {
    let k = rho.num_sites();
    if k < 2 {
        return Err(Error::domain("density structures need at least two sites"));
    }
    let subsets: Vec<SubsetDensityFlags> = analysis_subsets(k)
        .into_par_iter()
        .map(|j| {
            let (completely_entangled, quality) = is_completely_entangled_on(rho, j, tol)?;
            Ok(SubsetDensityFlags {
                subset: j,
                completely_correlated: is_completely_correlated_on(rho, j, tol)?,
                partially_correlated: is_partially_correlated_on(rho, j, tol)?,
                completely_entangled,
                quality,
            })
        })
        .collect::<Result<_>>()?;
    let ground = rho.layout().ground();
    let corr = ConnectiveStructure::generate_integral(
        ground.clone(),
        subsets.iter().filter(|f| f.completely_correlated).map(|f| f.subset),
    )?;
    let sugita = ConnectiveStructure::generate_integral(
        ground,
        subsets.iter().filter(|f| f.completely_entangled).map(|f| f.subset),
    )?;
    Ok(DensityReport {
        subsets,
        corr,
        sugita,
    })
}

/// Orders of a pure state: Ω_c, Ω_f and Ω = max(Ω_c, Ω_f).
#[derive(Clone, Debug)]
pub struct TotalOrder {
    pub omega_c: usize,
    pub omega_f: usize,
    pub omega: usize,
    pub disentanglement: DisentanglementReport,
    pub density: DensityReport,
}

pub fn total_order(psi: &PureState, config: &PoolConfig) -> Result<TotalOrder> {
    let disentanglement = disentanglement_structures(psi, config)?;
    let density = density_structures(&psi.density(), config.tol)?;
    let omega_c = disentanglement.order();
    let omega_f = density.order();
    Ok(TotalOrder {
        omega_c,
        omega_f,
        omega: omega_c.max(omega_f),
        disentanglement,
        density,
    })
}
