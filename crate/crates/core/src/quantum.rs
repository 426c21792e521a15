//! Dense finite-dimensional quantum kernel.
//!
//! Amplitudes are stored row-major by site order: for dims `(d0, d1, .., dk-1)`
//! the basis vector `|i0 i1 .. ik-1⟩` sits at index `((i0·d1 + i1)·d2 + ..)`.
//! Sites are addressed by position and handled as [`Subset`] bitsets.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::connective::{GroundSet, Subset};
use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const DEFAULT_TOL: f64 = 1e-9;

/// Largest supported total Hilbert-space dimension.
pub const MAX_TOTAL_DIM: usize = 1 << 14;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Local dimensions of a composite system.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SiteLayout {
    dims: Vec<usize>,
}

impl SiteLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::domain("a state needs at least one site"));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::domain(format!(
                "local dimensions must be at least 2, got {d}"
            )));
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|&t| t <= MAX_TOTAL_DIM);
        match total {
            Some(_) => Ok(SiteLayout { dims }),
            None => Err(Error::Resource {
                what: "total Hilbert-space dimension".into(),
                required: dims.iter().map(|&d| d as u128).product(),
                cap: MAX_TOTAL_DIM as u128,
            }),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_sites(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn all_sites(&self) -> Subset {
        Subset::full(self.num_sites())
    }

    /// Sites labelled `1..=k`.
    pub fn ground(&self) -> GroundSet {
        GroundSet::numbered(self.num_sites(), 1).expect("layout has at least one site")
    }

    /// Dimension of the subsystem on `part`.
    pub fn dim_of(&self, part: Subset) -> usize {
        part.iter().map(|i| self.dims[i]).product()
    }

    pub fn restrict(&self, part: Subset) -> Result<SiteLayout> {
        SiteLayout::new(part.iter().map(|i| self.dims[i]).collect())
    }

    /// Digits of a flat index, one per site.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    /// Flat index of the digits of `part` (in site order) taken from `digits`.
    pub fn sub_index(&self, digits: &[usize], part: Subset) -> usize {
        part.iter().fold(0, |acc, i| acc * self.dims[i] + digits[i])
    }

    fn check_subset(&self, s: Subset) -> Result<()> {
        if s.is_subset_of(self.all_sites()) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "sites {:?} out of range for {} sites",
                s,
                self.num_sites()
            )))
        }
    }

    /// Checks that `(a, b)` is a bipartition of all sites.
    pub fn check_bipartition(&self, a: Subset, b: Subset) -> Result<()> {
        self.check_subset(a)?;
        self.check_subset(b)?;
        if a.is_empty() || b.is_empty() || a.intersects(b) || a.union(b) != self.all_sites() {
            return Err(Error::domain(format!(
                "{:?} | {:?} is not a bipartition of the {} sites",
                a,
                b,
                self.num_sites()
            )));
        }
        Ok(())
    }
}

/// A normalized pure state.
#[derive(Clone, Debug)]
pub struct PureState {
    layout: SiteLayout,
    amps: DVector<C64>,
}

impl PureState {
    /// Builds a state, normalizing the amplitudes.
    pub fn new(dims: Vec<usize>, amplitudes: Vec<C64>) -> Result<Self> {
        let layout = SiteLayout::new(dims)?;
        Self::with_layout(layout, DVector::from_vec(amplitudes))
    }

    pub fn from_real(dims: Vec<usize>, amplitudes: &[f64]) -> Result<Self> {
        Self::new(dims, amplitudes.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn with_layout(layout: SiteLayout, amps: DVector<C64>) -> Result<Self> {
        if amps.len() != layout.total_dim() {
            return Err(Error::domain(format!(
                "expected {} amplitudes, got {}",
                layout.total_dim(),
                amps.len()
            )));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::domain("amplitudes must be finite"));
        }
        let norm = amps.norm();
        if norm <= f64::EPSILON {
            return Err(Error::domain("the zero vector is not a state"));
        }
        Ok(PureState {
            layout,
            amps: amps / C64::new(norm, 0.0),
        })
    }

    /// Computational basis vector with the given digits.
    pub fn basis(dims: Vec<usize>, digits: &[usize]) -> Result<Self> {
        let layout = SiteLayout::new(dims)?;
        if digits.len() != layout.num_sites()
            || digits.iter().zip(layout.dims()).any(|(&x, &d)| x >= d)
        {
            return Err(Error::domain("basis digits do not match the layout"));
        }
        let mut amps = DVector::from_element(layout.total_dim(), ZERO);
        amps[layout.sub_index(digits, layout.all_sites())] = ONE;
        Ok(PureState { layout, amps })
    }

    pub fn layout(&self) -> &SiteLayout {
        &self.layout
    }

    pub fn dims(&self) -> &[usize] {
        self.layout.dims()
    }

    pub fn num_sites(&self) -> usize {
        self.layout.num_sites()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// Equality up to a global phase.
    pub fn same_ray(&self, other: &PureState, tol: f64) -> bool {
        self.layout == other.layout && self.inner(other).norm() > 1.0 - tol
    }

    /// Kronecker product; the sites of `b` follow those of `a`.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let mut dims = self.dims().to_vec();
        dims.extend_from_slice(other.dims());
        let layout = SiteLayout::new(dims)?;
        let amps = self.amps.kronecker(&other.amps);
        Ok(PureState { layout, amps })
    }

    /// Amplitudes reshaped with rows indexed by `rows` and columns by the rest.
    pub fn matricize(&self, rows: Subset) -> DMatrix<C64> {
        let cols = self.layout.all_sites().difference(rows);
        let (nr, nc) = (self.layout.dim_of(rows), self.layout.dim_of(cols));
        let mut m = DMatrix::from_element(nr, nc, ZERO);
        for (idx, &a) in self.amps.iter().enumerate() {
            let digits = self.layout.digits(idx);
            m[(
                self.layout.sub_index(&digits, rows),
                self.layout.sub_index(&digits, cols),
            )] = a;
        }
        m
    }

    /// Schmidt coefficients across `(part, complement)`, largest first.
    pub fn schmidt_coefficients(&self, part: Subset) -> Result<Vec<f64>> {
        let rest = self.layout.all_sites().difference(part);
        self.layout.check_bipartition(part, rest)?;
        let svd = self.matricize(part).svd(false, false);
        let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        Ok(s)
    }

    pub fn is_separable_bipartition(&self, a: Subset, b: Subset, tol: f64) -> Result<bool> {
        self.layout.check_bipartition(a, b)?;
        let s = self.schmidt_coefficients(a)?;
        Ok(s.get(1).is_none_or(|&x| x <= tol))
    }

    /// True when some bipartition of the sites factors the state.
    pub fn is_partially_separable(&self, tol: f64) -> bool {
        self.separating_bipartition(tol).is_some()
    }

    pub fn separating_bipartition(&self, tol: f64) -> Option<(Subset, Subset)> {
        self.layout.all_sites().bipartitions().find(|&(a, b)| {
            self.is_separable_bipartition(a, b, tol)
                .expect("bipartitions of all sites are valid")
        })
    }

    /// Contracts `⟨v_l|` into every site `l` of `vectors`.
    ///
    /// Returns the normalized state on the remaining sites and the outcome
    /// probability, or `None` when the contraction norm is at most `tol`.
    pub fn partial_contract(
        &self,
        vectors: &[(usize, DVector<C64>)],
        tol: f64,
    ) -> Result<Option<(PureState, f64)>> {
        let mut used = Subset::EMPTY;
        for (site, v) in vectors {
            if *site >= self.num_sites() || used.contains(*site) {
                return Err(Error::domain(format!("invalid or repeated site {site}")));
            }
            if v.len() != self.dims()[*site] {
                return Err(Error::domain(format!(
                    "vector of length {} for site {} of dimension {}",
                    v.len(),
                    site,
                    self.dims()[*site]
                )));
            }
            used = used.with(*site);
        }
        if used == self.layout.all_sites() {
            return Err(Error::domain("cannot contract every site of a state"));
        }
        let mut dims = self.dims().to_vec();
        let mut amps = self.amps.clone();
        // contract from the highest position so lower positions stay valid
        let mut order: Vec<&(usize, DVector<C64>)> = vectors.iter().collect();
        order.sort_by_key(|v| std::cmp::Reverse(v.0));
        for (site, v) in order {
            amps = contract_axis(&amps, &dims, *site, v);
            dims.remove(*site);
        }
        let norm = amps.norm();
        if norm <= tol {
            return Ok(None);
        }
        let layout = SiteLayout::new(dims)?;
        Ok(Some((
            PureState {
                layout,
                amps: amps / C64::new(norm, 0.0),
            },
            norm * norm,
        )))
    }

    /// Joint projective measurement of observables on distinct sites.
    pub fn measure_projective(
        &self,
        observables: &[Observable],
        tol: f64,
    ) -> Result<Vec<MeasurementOutcome>> {
        let mut used = Subset::EMPTY;
        for o in observables {
            if o.site >= self.num_sites() || used.contains(o.site) {
                return Err(Error::domain(format!(
                    "invalid or repeated observable site {}",
                    o.site
                )));
            }
            if o.dim() != self.dims()[o.site] {
                return Err(Error::domain(format!(
                    "observable of dimension {} on site {} of dimension {}",
                    o.dim(),
                    o.site,
                    self.dims()[o.site]
                )));
            }
            used = used.with(o.site);
        }
        let spectra: Vec<Vec<(f64, DMatrix<C64>)>> =
            observables.iter().map(|o| o.eigenspaces(tol)).collect();
        let mut out = Vec::new();
        let mut choice = vec![0usize; observables.len()];
        loop {
            let mut projected = self.amps.clone();
            let mut dims = self.dims().to_vec();
            for ((o, spec), &c) in observables.iter().zip(&spectra).zip(&choice) {
                projected = apply_on_axis(&projected, &mut dims, o.site, &spec[c].1);
            }
            let p = projected.norm_squared();
            if p > tol {
                let values = spectra.iter().zip(&choice).map(|(s, &c)| s[c].0).collect();
                let post_state = PureState::with_layout(self.layout.clone(), projected)?;
                out.push(MeasurementOutcome {
                    values,
                    probability: p,
                    post_state,
                });
            }
            // odometer over eigenspace choices
            let mut k = choice.len();
            loop {
                if k == 0 {
                    return Ok(out);
                }
                k -= 1;
                choice[k] += 1;
                if choice[k] < spectra[k].len() {
                    break;
                }
                choice[k] = 0;
            }
        }
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator {
            layout: self.layout.clone(),
            matrix: &self.amps * self.amps.adjoint(),
        }
    }
}

/// Contracts `⟨v|` into axis `axis` of a row-major tensor.
fn contract_axis(amps: &DVector<C64>, dims: &[usize], axis: usize, v: &DVector<C64>) -> DVector<C64> {
    let outer: usize = dims[..axis].iter().product();
    let d = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    let mut out = DVector::from_element(outer * inner, ZERO);
    for o in 0..outer {
        for a in 0..d {
            let c = v[a].conj();
            if c == ZERO {
                continue;
            }
            for r in 0..inner {
                out[o * inner + r] += c * amps[(o * d + a) * inner + r];
            }
        }
    }
    out
}

/// Applies a local operator on axis `axis` of a row-major tensor.
fn apply_on_axis(
    amps: &DVector<C64>,
    dims: &mut [usize],
    axis: usize,
    op: &DMatrix<C64>,
) -> DVector<C64> {
    let outer: usize = dims[..axis].iter().product();
    let d = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    let mut out = DVector::from_element(amps.len(), ZERO);
    for o in 0..outer {
        for a in 0..d {
            for b in 0..d {
                let m = op[(a, b)];
                if m == ZERO {
                    continue;
                }
                for r in 0..inner {
                    out[(o * d + a) * inner + r] += m * amps[(o * d + b) * inner + r];
                }
            }
        }
    }
    out
}

/// Eigenvalues (ascending) and matching orthonormal eigenvectors of a
/// Hermitian matrix.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn is_hermitian(m: &DMatrix<C64>, tol: f64) -> bool {
    m.is_square() && (m - m.adjoint()).iter().all(|x| x.norm() <= tol)
}

/// A Hermitian observable acting on one site.
#[derive(Clone, Debug)]
pub struct Observable {
    pub site: usize,
    pub matrix: DMatrix<C64>,
    pub nondegenerate: bool,
}

impl Observable {
    pub fn new(site: usize, matrix: DMatrix<C64>, nondegenerate: bool, tol: f64) -> Result<Self> {
        if !is_hermitian(&matrix, tol) {
            return Err(Error::domain(format!("observable on site {site} is not Hermitian")));
        }
        let o = Observable {
            site,
            matrix,
            nondegenerate,
        };
        if nondegenerate && o.eigenspaces(tol).len() != o.dim() {
            return Err(Error::domain(format!(
                "observable on site {site} has a degenerate eigenvalue"
            )));
        }
        Ok(o)
    }

    pub fn pauli_z(site: usize) -> Self {
        Observable {
            site,
            matrix: pauli_z(),
            nondegenerate: true,
        }
    }

    pub fn pauli_x(site: usize) -> Self {
        Observable {
            site,
            matrix: pauli_x(),
            nondegenerate: true,
        }
    }

    pub fn pauli_y(site: usize) -> Self {
        Observable {
            site,
            matrix: pauli_y(),
            nondegenerate: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Distinct eigenvalues (ascending) with their spectral projectors.
    pub fn eigenspaces(&self, tol: f64) -> Vec<(f64, DMatrix<C64>)> {
        let (values, vectors) = hermitian_eigen(&self.matrix);
        let mut out: Vec<(f64, DMatrix<C64>)> = Vec::new();
        for (i, &lambda) in values.iter().enumerate() {
            let v = vectors.column(i);
            let p = v * v.adjoint();
            match out.last_mut() {
                Some((last, proj)) if (lambda - *last).abs() <= tol.max(1e-12) => *proj += p,
                _ => out.push((lambda, p)),
            }
        }
        out
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self, tol: f64) -> Vec<f64> {
        self.eigenspaces(tol).into_iter().map(|(l, _)| l).collect()
    }
}

pub fn pauli_z() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

pub fn pauli_x() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> DMatrix<C64> {
    let i = C64::new(0.0, 1.0);
    DMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO])
}

/// One joint outcome of a projective measurement.
#[derive(Clone, Debug)]
pub struct MeasurementOutcome {
    /// Eigenvalue per measured observable, in the order given.
    pub values: Vec<f64>,
    pub probability: f64,
    pub post_state: PureState,
}

/// Outcome of the positive-partial-transpose test.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PptVerdict {
    Separable,
    Entangled,
    PptInconclusive,
}

/// A density operator with site metadata.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    layout: SiteLayout,
    matrix: DMatrix<C64>,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace and positivity within `tol`.
    pub fn new(dims: Vec<usize>, matrix: DMatrix<C64>, tol: f64) -> Result<Self> {
        let layout = SiteLayout::new(dims)?;
        let n = layout.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::domain(format!(
                "density matrix must be {n}x{n}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !is_hermitian(&matrix, tol) {
            return Err(Error::domain("density matrix is not Hermitian"));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > tol.max(1e-9) * n as f64 {
            return Err(Error::domain(format!("density matrix has trace {tr}, expected 1")));
        }
        let (values, _) = hermitian_eigen(&matrix);
        if values.first().is_some_and(|&l| l < -tol.max(1e-9) * n as f64) {
            return Err(Error::domain(format!(
                "density matrix has negative eigenvalue {}",
                values[0]
            )));
        }
        Ok(DensityOperator { layout, matrix })
    }

    pub fn layout(&self) -> &SiteLayout {
        &self.layout
    }

    pub fn dims(&self) -> &[usize] {
        self.layout.dims()
    }

    pub fn num_sites(&self) -> usize {
        self.layout.num_sites()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Kronecker product; the sites of `other` follow those of `self`.
    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        let mut dims = self.dims().to_vec();
        dims.extend_from_slice(other.dims());
        Ok(DensityOperator {
            layout: SiteLayout::new(dims)?,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    /// Reduction to the sites in `keep`.
    pub fn partial_trace(&self, keep: Subset) -> Result<DensityOperator> {
        if keep.is_empty() {
            return Err(Error::domain("partial trace must keep at least one site"));
        }
        self.layout.check_subset(keep)?;
        if keep == self.layout.all_sites() {
            return Ok(self.clone());
        }
        let traced = self.layout.all_sites().difference(keep);
        let nk = self.layout.dim_of(keep);
        let nt = self.layout.dim_of(traced);
        // groups[t] lists (full index, kept index) sharing traced index t
        let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::with_capacity(nk); nt];
        for idx in 0..self.layout.total_dim() {
            let digits = self.layout.digits(idx);
            groups[self.layout.sub_index(&digits, traced)]
                .push((idx, self.layout.sub_index(&digits, keep)));
        }
        let mut out = DMatrix::from_element(nk, nk, ZERO);
        for g in &groups {
            for &(fa, ka) in g {
                for &(fb, kb) in g {
                    out[(ka, kb)] += self.matrix[(fa, fb)];
                }
            }
        }
        Ok(DensityOperator {
            layout: self.layout.restrict(keep)?,
            matrix: out,
        })
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        (self.purity() - 1.0).abs() <= tol
    }

    /// Eigenvector of the largest eigenvalue, as a state.
    pub fn top_eigenvector(&self) -> PureState {
        let (_, vectors) = hermitian_eigen(&self.matrix);
        let v = vectors.column(vectors.ncols() - 1).into_owned();
        PureState::with_layout(self.layout.clone(), v).expect("eigenvectors are unit vectors")
    }

    /// Partial transpose over the sites in `part`.
    pub fn partial_transpose(&self, part: Subset) -> DMatrix<C64> {
        let n = self.layout.total_dim();
        let digits: Vec<Vec<usize>> = (0..n).map(|i| self.layout.digits(i)).collect();
        let all = self.layout.all_sites();
        let mut out = DMatrix::from_element(n, n, ZERO);
        for i in 0..n {
            for j in 0..n {
                let mut di = digits[i].clone();
                let mut dj = digits[j].clone();
                for s in part.iter() {
                    std::mem::swap(&mut di[s], &mut dj[s]);
                }
                out[(self.layout.sub_index(&di, all), self.layout.sub_index(&dj, all))] =
                    self.matrix[(i, j)];
            }
        }
        out
    }

    /// Smallest eigenvalue of the partial transpose over `b`.
    pub fn partial_transpose_min_eigenvalue(&self, a: Subset, b: Subset) -> Result<f64> {
        self.layout.check_bipartition(a, b)?;
        let (values, _) = hermitian_eigen(&self.partial_transpose(b));
        Ok(values[0])
    }

    /// PPT test across `(a, b)`; exact only for 2⊗2 and 2⊗3 splits.
    pub fn ppt_is_separable(&self, a: Subset, b: Subset, tol: f64) -> Result<PptVerdict> {
        let min = self.partial_transpose_min_eigenvalue(a, b)?;
        if min < -tol {
            return Ok(PptVerdict::Entangled);
        }
        let dims = (self.layout.dim_of(a), self.layout.dim_of(b));
        Ok(match dims {
            (2, 2) | (2, 3) | (3, 2) => PptVerdict::Separable,
            _ => PptVerdict::PptInconclusive,
        })
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &DensityOperator) -> f64 {
        if self.layout != other.layout {
            return f64::INFINITY;
        }
        (&self.matrix - &other.matrix)
            .iter()
            .map(|x| x.norm())
            .fold(0.0, f64::max)
    }

    /// `ρ^a ⊗ ρ^b` reordered into the site order of `self`.
    pub fn split_product(&self, a: Subset, b: Subset) -> Result<DensityOperator> {
        self.layout.check_bipartition(a, b)?;
        let ra = self.partial_trace(a)?;
        let rb = self.partial_trace(b)?;
        let n = self.layout.total_dim();
        let digits: Vec<Vec<usize>> = (0..n).map(|i| self.layout.digits(i)).collect();
        let matrix = DMatrix::from_fn(n, n, |i, j| {
            let (di, dj) = (&digits[i], &digits[j]);
            ra.matrix[(self.layout.sub_index(di, a), self.layout.sub_index(dj, a))]
                * rb.matrix[(self.layout.sub_index(di, b), self.layout.sub_index(dj, b))]
        });
        Ok(DensityOperator {
            layout: self.layout.clone(),
            matrix,
        })
    }

    /// `⊗_i ρ^{i}` over all single sites.
    pub fn product_of_marginals(&self) -> Result<DensityOperator> {
        let mut acc: Option<DensityOperator> = None;
        for i in 0..self.num_sites() {
            let r = self.partial_trace(Subset::singleton(i))?;
            acc = Some(match acc {
                None => r,
                Some(p) => p.tensor(&r)?,
            });
        }
        Ok(acc.expect("at least one site"))
    }
}

/// Haar-random unitary via QR of a complex Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<C64> {
    let g = DMatrix::from_fn(d, d, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    // fix the phase freedom so the distribution is Haar
    DMatrix::from_fn(d, d, |i, j| {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { ONE };
        q[(i, j)] * phase
    })
}

/// Haar-random pure state.
pub fn random_state<R: Rng + ?Sized>(dims: Vec<usize>, rng: &mut R) -> Result<PureState> {
    let layout = SiteLayout::new(dims)?;
    let amps = DVector::from_fn(layout.total_dim(), |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    PureState::with_layout(layout, amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn epr() -> PureState {
        PureState::from_real(vec![2, 2], &[1.0, 0.0, 0.0, 1.0]).unwrap()
    }

    fn ghz() -> PureState {
        let mut a = vec![0.0; 8];
        a[0] = 1.0;
        a[7] = 1.0;
        PureState::from_real(vec![2, 2, 2], &a).unwrap()
    }

    fn s(i: &[usize]) -> Subset {
        Subset::from_indices(i.iter().copied())
    }

    fn vec2(a: f64, b: f64) -> DVector<C64> {
        DVector::from_vec(vec![C64::new(a, 0.0), C64::new(b, 0.0)])
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn auto_normalization_and_zero_rejection() {
        let p = PureState::from_real(vec![2], &[3.0, 4.0]).unwrap();
        assert!(close(p.amplitudes()[0].re, 0.6));
        assert!(PureState::from_real(vec![2], &[0.0, 0.0]).is_err());
        assert!(PureState::from_real(vec![2, 2], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn dimension_cap_is_a_resource_error() {
        let err = SiteLayout::new(vec![2; 15]).unwrap_err();
        assert!(matches!(err, Error::Resource { .. }));
    }

    #[test]
    fn tensor_examples() {
        let zero = PureState::basis(vec![2], &[0]).unwrap();
        let t = zero.tensor(&zero).unwrap();
        assert_eq!(t.dims(), &[2, 2]);
        assert!(close(t.amplitudes()[0].re, 1.0));
        let plus = PureState::from_real(vec![2], &[1.0, 1.0]).unwrap();
        let t = plus.tensor(&zero).unwrap();
        let expected = PureState::from_real(vec![2, 2], &[1.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(t.same_ray(&expected, 1e-12));
    }

    #[test]
    fn schmidt_examples() {
        let c = epr().schmidt_coefficients(s(&[0])).unwrap();
        assert!(close(c[0], H) && close(c[1], H));
        let c = PureState::basis(vec![2, 2], &[0, 0])
            .unwrap()
            .schmidt_coefficients(s(&[0]))
            .unwrap();
        assert!(close(c[0], 1.0) && close(c[1], 0.0));
        let c = ghz().schmidt_coefficients(s(&[0])).unwrap();
        assert_eq!(c.len(), 2);
        assert!(close(c[0], H) && close(c[1], H));
        assert!(epr().schmidt_coefficients(Subset::EMPTY).is_err());
        assert!(epr().schmidt_coefficients(s(&[0, 1])).is_err());
    }

    #[test]
    fn separability_examples() {
        assert!(!epr().is_separable_bipartition(s(&[0]), s(&[1]), DEFAULT_TOL).unwrap());
        let p = PureState::basis(vec![2, 2], &[0, 0]).unwrap();
        assert!(p.is_separable_bipartition(s(&[0]), s(&[1]), DEFAULT_TOL).unwrap());
        assert!(!ghz().is_separable_bipartition(s(&[0]), s(&[1, 2]), DEFAULT_TOL).unwrap());
        assert!(epr().is_separable_bipartition(s(&[0]), s(&[0]), DEFAULT_TOL).is_err());
        // order of the parts does not matter
        assert!(!ghz().is_separable_bipartition(s(&[1, 2]), s(&[0]), DEFAULT_TOL).unwrap());
    }

    #[test]
    fn partial_contract_examples() {
        let (post, p) = ghz()
            .partial_contract(&[(0, vec2(1.0, 0.0))], DEFAULT_TOL)
            .unwrap()
            .unwrap();
        assert!(close(p, 0.5));
        assert!(post.same_ray(&PureState::basis(vec![2, 2], &[0, 0]).unwrap(), 1e-12));

        let (post, p) = ghz()
            .partial_contract(&[(0, vec2(H, H))], DEFAULT_TOL)
            .unwrap()
            .unwrap();
        assert!(close(p, 0.5));
        assert!(post.same_ray(&epr(), 1e-12));

        let s01 = PureState::basis(vec![2, 2], &[0, 1]).unwrap();
        assert!(s01
            .partial_contract(&[(0, vec2(0.0, 1.0))], DEFAULT_TOL)
            .unwrap()
            .is_none());
        assert!(s01
            .partial_contract(&[(0, vec2(1.0, 0.0)), (1, vec2(1.0, 0.0))], DEFAULT_TOL)
            .is_err());
        assert!(s01
            .partial_contract(&[(0, DVector::from_element(3, ONE))], DEFAULT_TOL)
            .is_err());
    }

    #[test]
    fn contract_on_middle_site() {
        // |0⟩|+⟩|1⟩ contracted on site 1 with ⟨+| leaves |01⟩
        let state = PureState::basis(vec![2], &[0])
            .unwrap()
            .tensor(&PureState::from_real(vec![2], &[1.0, 1.0]).unwrap())
            .unwrap()
            .tensor(&PureState::basis(vec![2], &[1]).unwrap())
            .unwrap();
        let (post, p) = state
            .partial_contract(&[(1, vec2(H, H))], DEFAULT_TOL)
            .unwrap()
            .unwrap();
        assert!(close(p, 1.0));
        assert!(post.same_ray(&PureState::basis(vec![2, 2], &[0, 1]).unwrap(), 1e-12));
    }

    #[test]
    fn measurement_examples() {
        let zero = PureState::basis(vec![2], &[0]).unwrap();
        let out = zero
            .measure_projective(&[Observable::pauli_z(0)], DEFAULT_TOL)
            .unwrap();
        assert_eq!(out.len(), 1);
        assert!(close(out[0].values[0], 1.0) && close(out[0].probability, 1.0));

        let out = epr()
            .measure_projective(&[Observable::pauli_z(0)], DEFAULT_TOL)
            .unwrap();
        assert_eq!(out.len(), 2);
        // ascending eigenvalues: -1 first
        assert!(close(out[0].values[0], -1.0) && close(out[0].probability, 0.5));
        assert!(out[0]
            .post_state
            .same_ray(&PureState::basis(vec![2, 2], &[1, 1]).unwrap(), 1e-12));
        assert!(out[1]
            .post_state
            .same_ray(&PureState::basis(vec![2, 2], &[0, 0]).unwrap(), 1e-12));

        let zs: Vec<Observable> = (0..3).map(Observable::pauli_z).collect();
        let out = ghz().measure_projective(&zs, DEFAULT_TOL).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].values, vec![-1.0, -1.0, -1.0]);
        assert_eq!(out[1].values, vec![1.0, 1.0, 1.0]);
        assert!(out.iter().all(|o| close(o.probability, 0.5)));
    }

    #[test]
    fn observables_are_validated() {
        let bad = DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(Observable::new(0, bad, false, DEFAULT_TOL).is_err());
        let id = DMatrix::<C64>::identity(2, 2);
        assert!(Observable::new(0, id.clone(), true, DEFAULT_TOL).is_err());
        let o = Observable::new(0, id, false, DEFAULT_TOL).unwrap();
        assert_eq!(o.eigenspaces(DEFAULT_TOL).len(), 1);
        assert_eq!(Observable::pauli_y(0).eigenvalues(DEFAULT_TOL).len(), 2);
    }

    #[test]
    fn partial_trace_examples() {
        let r = epr().density().partial_trace(s(&[0])).unwrap();
        let half = DMatrix::<C64>::identity(2, 2) * C64::new(0.5, 0.0);
        assert!((r.matrix() - &half).iter().all(|x| x.norm() < 1e-12));

        let a = PureState::from_real(vec![2], &[1.0, 2.0]).unwrap().density();
        let b = PureState::from_real(vec![2], &[1.0, -1.0]).unwrap().density();
        let ab = a.tensor(&b).unwrap();
        assert!(ab.partial_trace(s(&[0])).unwrap().max_abs_diff(&a) < 1e-12);
        assert!(ab.partial_trace(s(&[1])).unwrap().max_abs_diff(&b) < 1e-12);

        let r12 = ghz().density().partial_trace(s(&[0, 1])).unwrap();
        let mut expected = DMatrix::from_element(4, 4, ZERO);
        expected[(0, 0)] = C64::new(0.5, 0.0);
        expected[(3, 3)] = C64::new(0.5, 0.0);
        assert!((r12.matrix() - expected).iter().all(|x| x.norm() < 1e-12));
        assert!(close(r12.purity(), 0.5));
        assert!(ghz().density().partial_trace(Subset::EMPTY).is_err());
    }

    /// Independent oracle: trace out the last site of a 3-qubit state by
    /// explicit summation over its index.
    #[test]
    fn partial_trace_matches_explicit_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi = random_state(vec![2, 2, 2], &mut rng).unwrap();
        let rho = psi.density();
        let r = rho.partial_trace(s(&[0, 1])).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let mut sum = ZERO;
                for t in 0..2 {
                    sum += rho.matrix()[(2 * a + t, 2 * b + t)];
                }
                assert!((r.matrix()[(a, b)] - sum).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn purity_examples() {
        assert!(close(epr().density().purity(), 1.0));
        let half = DensityOperator::new(
            vec![2],
            DMatrix::<C64>::identity(2, 2) * C64::new(0.5, 0.0),
            DEFAULT_TOL,
        )
        .unwrap();
        assert!(close(half.purity(), 0.5));
        assert!(!half.is_pure(DEFAULT_TOL));
    }

    #[test]
    fn ppt_examples() {
        let rho = epr().density();
        assert_eq!(
            rho.ppt_is_separable(s(&[0]), s(&[1]), DEFAULT_TOL).unwrap(),
            PptVerdict::Entangled
        );
        assert!(close(
            rho.partial_transpose_min_eigenvalue(s(&[0]), s(&[1])).unwrap(),
            -0.5
        ));
        let r12 = ghz().density().partial_trace(s(&[0, 1])).unwrap();
        assert_eq!(
            r12.ppt_is_separable(s(&[0]), s(&[1]), DEFAULT_TOL).unwrap(),
            PptVerdict::Separable
        );
        let a = PureState::from_real(vec![2], &[1.0, 2.0]).unwrap().density();
        let prod = a.tensor(&a).unwrap();
        assert_eq!(
            prod.ppt_is_separable(s(&[0]), s(&[1]), DEFAULT_TOL).unwrap(),
            PptVerdict::Separable
        );
        let big = PureState::basis(vec![3, 3], &[0, 0]).unwrap().density();
        assert_eq!(
            big.ppt_is_separable(s(&[0]), s(&[1]), DEFAULT_TOL).unwrap(),
            PptVerdict::PptInconclusive
        );
    }

    #[test]
    fn density_validation() {
        let bad_trace = DMatrix::<C64>::identity(2, 2);
        assert!(DensityOperator::new(vec![2], bad_trace, DEFAULT_TOL).is_err());
        let negative = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(1.5, 0.0), ZERO, ZERO, C64::new(-0.5, 0.0)],
        );
        assert!(DensityOperator::new(vec![2], negative, DEFAULT_TOL).is_err());
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_unitary(3, &mut rng);
        let should_be_id = u.adjoint() * &u;
        assert!((should_be_id - DMatrix::<C64>::identity(3, 3))
            .iter()
            .all(|x| x.norm() < 1e-12));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn dims() -> impl Strategy<Value = Vec<usize>> {
            prop::collection::vec(2usize..4, 2..4)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(100))]

            #[test]
            fn measurement_probabilities_sum_to_one(seed in any::<u64>(), dims in dims()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let psi = random_state(dims.clone(), &mut rng).unwrap();
                let obs: Vec<Observable> = dims
                    .iter()
                    .enumerate()
                    .map(|(i, &d)| {
                        let u = random_unitary(d, &mut rng);
                        let diag = DMatrix::from_fn(d, d, |r, c| {
                            if r == c { C64::new(r as f64, 0.0) } else { ZERO }
                        });
                        Observable::new(i, &u * diag * u.adjoint(), true, 1e-9).unwrap()
                    })
                    .collect();
                let total: f64 = psi
                    .measure_projective(&obs, 1e-15)
                    .unwrap()
                    .iter()
                    .map(|o| o.probability)
                    .sum();
                prop_assert!((total - 1.0).abs() < 1e-9);
            }

            #[test]
            fn partial_trace_is_a_density(seed in any::<u64>(), dims in dims(), keep in 1u32..7) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let psi = random_state(dims.clone(), &mut rng).unwrap();
                let keep = Subset::from_bits(keep).intersection(psi.layout().all_sites());
                prop_assume!(!keep.is_empty());
                let r = psi.density().partial_trace(keep).unwrap();
                prop_assert!((r.matrix().trace().re - 1.0).abs() < 1e-9);
                let (values, _) = hermitian_eigen(r.matrix());
                prop_assert!(values[0] >= -1e-9);
            }

            #[test]
            fn schmidt_norm_and_symmetry(seed in any::<u64>(), dims in dims(), part in 1u32..7) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let psi = random_state(dims, &mut rng).unwrap();
                let all = psi.layout().all_sites();
                let a = Subset::from_bits(part).intersection(all);
                prop_assume!(!a.is_empty() && a != all);
                let sa = psi.schmidt_coefficients(a).unwrap();
                let sb = psi.schmidt_coefficients(all.difference(a)).unwrap();
                let norm: f64 = sa.iter().map(|x| x * x).sum();
                prop_assert!((norm - 1.0).abs() < 1e-9);
                for (x, y) in sa.iter().zip(&sb) {
                    prop_assert!((x - y).abs() < 1e-9);
                }
            }

            #[test]
            fn contraction_matches_measurement(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let psi = random_state(vec![2, 3, 2], &mut rng).unwrap();
                let u = random_unitary(3, &mut rng);
                let diag = DMatrix::from_fn(3, 3, |r, c| {
                    if r == c { C64::new(r as f64, 0.0) } else { ZERO }
                });
                let obs = Observable::new(1, &u * diag * u.adjoint(), true, 1e-9).unwrap();
                let outcomes = psi.measure_projective(std::slice::from_ref(&obs), 0.0).unwrap();
                let (_, vecs) = hermitian_eigen(&obs.matrix);
                for (k, o) in outcomes.iter().enumerate() {
                    let v = vecs.column(k).into_owned();
                    let (_, p) = psi.partial_contract(&[(1, v)], 0.0).unwrap().unwrap();
                    prop_assert!((p - o.probability).abs() < 1e-9);
                }
            }

            #[test]
            fn tensor_seam_is_separable(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_state(vec![2, 2], &mut rng).unwrap();
                let b = random_state(vec![3], &mut rng).unwrap();
                let ab = a.tensor(&b).unwrap();
                prop_assert!(ab
                    .is_separable_bipartition(Subset::full(2), Subset::singleton(2), 1e-9)
                    .unwrap());
            }
        }
    }
}
