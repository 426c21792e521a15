//! Determinant experiments, intrication classes on subsets, and the six
//! disentanglement structures of a pure state.
//!
//! A determinant experiment on a set of sites `L` is a joint nondegenerate
//! projective measurement; only its product eigenbasis matters. The set of
//! all such experiments is infinite, so quantifiers over it are evaluated on
//! a finite [`MeasurementPool`] of structured and seeded Haar-random bases.
//! Verdicts that could change with a larger pool are flagged
//! [`Confidence::PoolLimited`].

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connective::{ConnectiveStructure, Subset};
use crate::error::{Error, Result};
use crate::quantum::{random_unitary, PureState, SiteLayout, C64, DEFAULT_TOL};

/// Threshold on `1 - |⟨a|b⟩|` for identifying post-measurement states.
pub const SAME_STATE_TOL: f64 = 1e-9;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Provenance {
    Identity,
    Structured,
    Random,
}

/// Product eigenbasis of a determinant experiment on `sites`.
#[derive(Clone, Debug)]
pub struct DeterminantExperiment {
    pub sites: Subset,
    /// One unitary per site of `sites`, in increasing site order; its columns
    /// are the basis vectors.
    pub bases: Vec<DMatrix<C64>>,
    pub provenance: Provenance,
}

impl DeterminantExperiment {
    /// The experiment on no sites.
    pub fn identity() -> Self {
        DeterminantExperiment {
            sites: Subset::EMPTY,
            bases: Vec::new(),
            provenance: Provenance::Identity,
        }
    }

    /// Number of joint outcomes.
    pub fn outcome_count(&self) -> usize {
        self.bases.iter().map(|b| b.ncols()).product()
    }
}

#[derive(Clone, Debug)]
pub struct MeasurementPool {
    pub sites: Subset,
    pub experiments: Vec<DeterminantExperiment>,
}

/// Settings for pool construction and numeric decisions.
#[derive(Clone, Debug)]
pub struct PoolConfig {
    pub n_random: usize,
    pub seed: u64,
    pub tol: f64,
    /// Additional per-site bases as `(site, unitary)`.
    pub extra_bases: Vec<(usize, DMatrix<C64>)>,
}

impl Default for PoolConfig {
    fn default() -> Self {
        PoolConfig {
            n_random: 20,
            seed: 0,
            tol: DEFAULT_TOL,
            extra_bases: Vec::new(),
        }
    }
}

fn is_unitary(u: &DMatrix<C64>, tol: f64) -> bool {
    u.is_square()
        && (u.adjoint() * u - DMatrix::<C64>::identity(u.nrows(), u.nrows()))
            .iter()
            .all(|x| x.norm() <= tol.max(1e-9))
}

/// `(|0⟩+|1⟩)/√2, (|0⟩-|1⟩)/√2`, completed by the remaining computational vectors.
pub fn hadamard_basis(d: usize) -> DMatrix<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = DMatrix::<C64>::identity(d, d);
    m[(0, 0)] = C64::new(h, 0.0);
    m[(1, 0)] = C64::new(h, 0.0);
    m[(0, 1)] = C64::new(h, 0.0);
    m[(1, 1)] = C64::new(-h, 0.0);
    m
}

/// Discrete Fourier basis.
pub fn fourier_basis(d: usize) -> DMatrix<C64> {
    let norm = 1.0 / (d as f64).sqrt();
    DMatrix::from_fn(d, d, |j, k| {
        C64::from_polar(norm, 2.0 * std::f64::consts::PI * (j * k) as f64 / d as f64)
    })
}

/// Structured bases for one site: computational, Hadamard-type, Fourier
/// when `d > 2`, then caller extras.
fn structured_bases(site: usize, d: usize, config: &PoolConfig) -> Result<Vec<DMatrix<C64>>> {
    let mut out = vec![DMatrix::<C64>::identity(d, d), hadamard_basis(d)];
    if d > 2 {
        out.push(fourier_basis(d));
    }
    for (s, u) in &config.extra_bases {
        if *s != site {
            continue;
        }
        if u.nrows() != d || !is_unitary(u, config.tol) {
            return Err(Error::domain(format!(
                "extra basis for site {site} is not an orthonormal basis of dimension {d}"
            )));
        }
        out.push(u.clone());
    }
    Ok(out)
}

/// Finite surrogate for the determinant experiments on `sites`.
pub fn build_pool(layout: &SiteLayout, sites: Subset, config: &PoolConfig) -> Result<MeasurementPool> {
    if !sites.is_subset_of(layout.all_sites()) {
        return Err(Error::domain("pool sites outside the layout"));
    }
    if sites.is_empty() {
        return Ok(MeasurementPool {
            sites,
            experiments: vec![DeterminantExperiment::identity()],
        });
    }
    let per_site: Vec<Vec<DMatrix<C64>>> = sites
        .iter()
        .map(|s| structured_bases(s, layout.dims()[s], config))
        .collect::<Result<_>>()?;

    let mut experiments = Vec::new();
    let mut choice = vec![0usize; per_site.len()];
    'product: loop {
        experiments.push(DeterminantExperiment {
            sites,
            bases: per_site
                .iter()
                .zip(&choice)
                .map(|(b, &c)| b[c].clone())
                .collect(),
            provenance: Provenance::Structured,
        });
        for k in (0..choice.len()).rev() {
            choice[k] += 1;
            if choice[k] < per_site[k].len() {
                continue 'product;
            }
            choice[k] = 0;
        }
        break;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(u64::from(sites.bits()));
    for _ in 0..config.n_random {
        experiments.push(DeterminantExperiment {
            sites,
            bases: sites
                .iter()
                .map(|s| random_unitary(layout.dims()[s], &mut rng))
                .collect(),
            provenance: Provenance::Random,
        });
    }
    Ok(MeasurementPool { sites, experiments })
}

/// The distinct states on `j` reachable through `experiment`, up to phase.
pub fn post_states(
    psi: &PureState,
    j: Subset,
    experiment: &DeterminantExperiment,
    tol: f64,
) -> Result<Vec<PureState>> {
    let all = psi.layout().all_sites();
    if experiment.sites != all.difference(j) || j.is_empty() || !j.is_subset_of(all) {
        return Err(Error::domain("experiment must act on exactly the complement of J"));
    }
    if experiment.sites.is_empty() {
        return Ok(vec![psi.clone()]);
    }
    let sites: Vec<usize> = experiment.sites.iter().collect();
    let mut out: Vec<PureState> = Vec::new();
    let mut choice = vec![0usize; sites.len()];
    loop {
        let vectors: Vec<(usize, DVector<C64>)> = sites
            .iter()
            .zip(&experiment.bases)
            .zip(&choice)
            .map(|((&s, b), &c)| (s, b.column(c).into_owned()))
            .collect();
        if let Some((state, _)) = psi.partial_contract(&vectors, tol)? {
            if !out.iter().any(|o| o.same_ray(&state, SAME_STATE_TOL)) {
                out.push(state);
            }
        }
        let mut k = choice.len();
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            choice[k] += 1;
            if choice[k] < experiment.bases[k].ncols() {
                break;
            }
            choice[k] = 0;
        }
    }
}

/// The eight mutually exclusive intrication situations of a state on a subset.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IntricationClass {
    GloballyEntangled,
    TotallyMixed,
    WellEntangledOnly,
    WellSeparableOnly,
    WellEntangledAndSeparable,
    GloballySeparableOnly,
    ClearlySeparableOnly,
    TotallySeparated,
}

impl IntricationClass {
    pub const ALL: [IntricationClass; 8] = [
        IntricationClass::GloballyEntangled,
        IntricationClass::TotallyMixed,
        IntricationClass::WellEntangledOnly,
        IntricationClass::WellSeparableOnly,
        IntricationClass::WellEntangledAndSeparable,
        IntricationClass::GloballySeparableOnly,
        IntricationClass::ClearlySeparableOnly,
        IntricationClass::TotallySeparated,
    ];

    pub fn is_mixed(self) -> bool {
        use IntricationClass::*;
        matches!(
            self,
            TotallyMixed | WellEntangledOnly | WellSeparableOnly | WellEntangledAndSeparable
        )
    }

    pub fn is_well_entangled(self) -> bool {
        matches!(
            self,
            IntricationClass::WellEntangledOnly | IntricationClass::WellEntangledAndSeparable
        )
    }

    pub fn is_clearly_separable(self) -> bool {
        matches!(
            self,
            IntricationClass::ClearlySeparableOnly | IntricationClass::TotallySeparated
        )
    }

    pub fn name(self) -> &'static str {
        use IntricationClass::*;
        match self {
            GloballyEntangled => "GLOBALLY_ENTANGLED",
            TotallyMixed => "TOTALLY_MIXED",
            WellEntangledOnly => "WELL_ENTANGLED_ONLY",
            WellSeparableOnly => "WELL_SEPARABLE_ONLY",
            WellEntangledAndSeparable => "WELL_ENTANGLED_AND_SEPARABLE",
            GloballySeparableOnly => "GLOBALLY_SEPARABLE_ONLY",
            ClearlySeparableOnly => "CLEARLY_SEPARABLE_ONLY",
            TotallySeparated => "TOTALLY_SEPARATED",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Confidence {
    Certified,
    PoolLimited,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub subset: Subset,
    pub class: IntricationClass,
    pub confidence: Confidence,
    pub experiments: usize,
}

/// Per-experiment summary: does it produce entangled and/or separable states.
#[derive(Copy, Clone, Debug, Default)]
struct ExperimentVerdict {
    any_entangled: bool,
    any_separable: bool,
}

/// Classifies `psi` on the sites `j` (`|j| ≥ 2`).
pub fn classify_on_subset(psi: &PureState, j: Subset, config: &PoolConfig) -> Result<Classification> {
    let all = psi.layout().all_sites();
    if j.len() < 2 || !j.is_subset_of(all) {
        return Err(Error::domain("classification needs a subset of at least two sites"));
    }
    let rest = all.difference(j);
    let pool = build_pool(psi.layout(), rest, config)?;
    let local = Subset::full(j.len());
    let cuts: Vec<(Subset, Subset)> = local.bipartitions().collect();
    // cut_holds[c]: every state seen so far factors across cuts[c]
    let mut cut_holds = vec![true; cuts.len()];
    let mut verdicts = Vec::with_capacity(pool.experiments.len());
    for m in &pool.experiments {
        let mut v = ExperimentVerdict::default();
        for phi in post_states(psi, j, m, config.tol)? {
            let mut separable = false;
            for (c, &(a, b)) in cuts.iter().enumerate() {
                if phi.is_separable_bipartition(a, b, config.tol)? {
                    separable = true;
                } else {
                    cut_holds[c] = false;
                }
            }
            if separable {
                v.any_separable = true;
            } else {
                v.any_entangled = true;
            }
        }
        verdicts.push(v);
    }

    let all_ent = |v: &ExperimentVerdict| v.any_entangled && !v.any_separable;
    let all_sep = |v: &ExperimentVerdict| v.any_separable && !v.any_entangled;
    use IntricationClass::*;
    let class = if verdicts.iter().all(all_ent) {
        GloballyEntangled
    } else if verdicts.iter().all(all_sep) {
        if cut_holds.iter().all(|&h| h) {
            TotallySeparated
        } else if cut_holds.iter().any(|&h| h) {
            ClearlySeparableOnly
        } else {
            GloballySeparableOnly
        }
    } else {
        let we = verdicts.iter().any(all_ent);
        let ws = verdicts.iter().any(all_sep);
        match (we, ws) {
            (false, false) => TotallyMixed,
            (true, false) => WellEntangledOnly,
            (false, true) => WellSeparableOnly,
            (true, true) => WellEntangledAndSeparable,
        }
    };

    let factorizes = rest.is_empty() || psi.is_separable_bipartition(j, rest, config.tol)?;
    Ok(Classification {
        subset: j,
        class,
        confidence: if factorizes {
            Confidence::Certified
        } else {
            Confidence::PoolLimited
        },
        experiments: pool.experiments.len(),
    })
}

/// Names of the six disentanglement structures, in report order.
pub const STRUCTURE_NAMES: [&str; 6] = ["GI", "BIP", "MT", "IP", "ML", "NCS"];

fn in_family(name: &str, c: IntricationClass) -> bool {
    use IntricationClass::*;
    match name {
        "GI" => c == GloballyEntangled,
        "BIP" => c == GloballyEntangled || c.is_well_entangled(),
        "MT" => matches!(c, GloballyEntangled | TotallyMixed),
        "IP" => c == GloballyEntangled || c == TotallyMixed || c.is_well_entangled(),
        "ML" => c == GloballyEntangled || c.is_mixed(),
        "NCS" => !c.is_clearly_separable(),
        _ => unreachable!("unknown structure {name}"),
    }
}

#[derive(Clone, Debug)]
pub struct DisentanglementReport {
    /// One entry per subset of at least two sites, in canonical order.
    pub classes: Vec<Classification>,
    /// κ_GI, κ_BIP, κ_MT, κ_IP, κ_ML, κ_NCS in the order of [`STRUCTURE_NAMES`].
    pub structures: [ConnectiveStructure; 6],
}

impl DisentanglementReport {
    pub fn structure(&self, name: &str) -> Option<&ConnectiveStructure> {
        STRUCTURE_NAMES
            .iter()
            .position(|&n| n == name)
            .map(|i| &self.structures[i])
    }

    pub fn gi(&self) -> &ConnectiveStructure {
        &self.structures[0]
    }

    /// Maximum connective order over the six structures.
    pub fn order(&self) -> usize {
        self.structures
            .iter()
            .map(ConnectiveStructure::connective_order)
            .max()
            .unwrap_or(0)
    }

    pub fn class_of(&self, j: Subset) -> Option<&Classification> {
        self.classes.iter().find(|c| c.subset == j)
    }

    /// κ_GI ⊆ κ_BIP ⊆ κ_IP, κ_GI ⊆ κ_MT ⊆ κ_IP ⊆ κ_ML ⊆ κ_NCS.
    pub fn chains_hold(&self) -> bool {
        let [gi, bip, mt, ip, ml, ncs] = &self.structures;
        gi.is_finer_than(bip)
            && bip.is_finer_than(ip)
            && gi.is_finer_than(mt)
            && mt.is_finer_than(ip)
            && ip.is_finer_than(ml)
            && ml.is_finer_than(ncs)
    }
}

/// Subsets of at least two of the first `k` sites, in canonical order.
pub fn analysis_subsets(k: usize) -> Vec<Subset> {
    let mut v: Vec<Subset> = Subset::full(k).subsets().filter(|s| s.len() >= 2).collect();
    crate::connective::canonical_sort(&mut v);
    v
}

pub fn disentanglement_structures(psi: &PureState, config: &PoolConfig) -> Result<DisentanglementReport> {
    let k = psi.num_sites();
    if k < 2 {
        return Err(Error::domain("disentanglement structures need at least two sites"));
    }
    let classes: Vec<Classification> = analysis_subsets(k)
        .into_par_iter()
        .map(|j| classify_on_subset(psi, j, config))
        .collect::<Result<_>>()?;
    let ground = psi.layout().ground();
    let build = |name: &str| {
        ConnectiveStructure::generate_integral(
            ground.clone(),
            classes
                .iter()
                .filter(|c| in_family(name, c.class))
                .map(|c| c.subset),
        )
    };
    let structures = [
        build("GI")?,
        build("BIP")?,
        build("MT")?,
        build("IP")?,
        build("ML")?,
        build("NCS")?,
    ];
    Ok(DisentanglementReport {
        classes,
        structures,
    })
}

/// Ω_c: maximum connective order of the six disentanglement structures.
pub fn disentanglement_order(report: &DisentanglementReport) -> usize {
    report.order()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connective::GroundSet;
    use crate::quantum::random_state;

    fn s(i: &[usize]) -> Subset {
        Subset::from_indices(i.iter().copied())
    }

    fn ghz() -> PureState {
        let mut a = vec![0.0; 8];
        a[0] = 1.0;
        a[7] = 1.0;
        PureState::from_real(vec![2, 2, 2], &a).unwrap()
    }

    fn epr() -> PureState {
        PureState::from_real(vec![2, 2], &[1.0, 0.0, 0.0, 1.0]).unwrap()
    }

    fn o2() -> PureState {
        PureState::from_real(vec![2, 2, 2], &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, -0.5]).unwrap()
    }

    fn three() -> GroundSet {
        GroundSet::numbered(3, 1).unwrap()
    }

    fn no_random() -> PoolConfig {
        PoolConfig {
            n_random: 0,
            ..PoolConfig::default()
        }
    }

    #[test]
    fn pool_sizes() {
        let layout = SiteLayout::new(vec![2, 2, 3]).unwrap();
        let p = build_pool(&layout, Subset::EMPTY, &no_random()).unwrap();
        assert_eq!(p.experiments.len(), 1);
        assert_eq!(p.experiments[0].provenance, Provenance::Identity);
        assert_eq!(build_pool(&layout, s(&[0]), &no_random()).unwrap().experiments.len(), 2);
        assert_eq!(build_pool(&layout, s(&[0, 1]), &no_random()).unwrap().experiments.len(), 4);
        assert_eq!(build_pool(&layout, s(&[2]), &no_random()).unwrap().experiments.len(), 3);
        let with_random = build_pool(&layout, s(&[0, 1]), &PoolConfig::default()).unwrap();
        assert_eq!(with_random.experiments.len(), 24);
    }

    #[test]
    fn pool_is_deterministic_and_validates_extras() {
        let layout = SiteLayout::new(vec![2, 2]).unwrap();
        let a = build_pool(&layout, s(&[0]), &PoolConfig::default()).unwrap();
        let b = build_pool(&layout, s(&[0]), &PoolConfig::default()).unwrap();
        for (x, y) in a.experiments.iter().zip(&b.experiments) {
            assert_eq!(x.bases, y.bases);
        }
        let bad = PoolConfig {
            extra_bases: vec![(0, DMatrix::from_element(2, 2, C64::new(1.0, 0.0)))],
            ..PoolConfig::default()
        };
        assert!(build_pool(&layout, s(&[0]), &bad).is_err());
        let good = PoolConfig {
            n_random: 0,
            extra_bases: vec![(0, fourier_basis(2))],
            ..PoolConfig::default()
        };
        assert_eq!(build_pool(&layout, s(&[0]), &good).unwrap().experiments.len(), 3);
    }

    #[test]
    fn post_state_examples() {
        let psi = ghz();
        let pool = build_pool(psi.layout(), s(&[0]), &no_random()).unwrap();
        let z = post_states(&psi, s(&[1, 2]), &pool.experiments[0], DEFAULT_TOL).unwrap();
        assert_eq!(z.len(), 2);
        assert!(z[0].same_ray(&PureState::basis(vec![2, 2], &[0, 0]).unwrap(), 1e-12));
        assert!(z[1].same_ray(&PureState::basis(vec![2, 2], &[1, 1]).unwrap(), 1e-12));
        // the two X outcomes leave the Bell states (|00⟩ ± |11⟩)/√2, both entangled
        let x = post_states(&psi, s(&[1, 2]), &pool.experiments[1], DEFAULT_TOL).unwrap();
        assert_eq!(x.len(), 2);
        assert!(x[0].same_ray(&epr(), 1e-12));
        let bell_minus = PureState::from_real(vec![2, 2], &[1.0, 0.0, 0.0, -1.0]).unwrap();
        assert!(x[1].same_ray(&bell_minus, 1e-12));
        assert!(x.iter().all(|phi| !phi.is_partially_separable(DEFAULT_TOL)));

        let id = DeterminantExperiment::identity();
        let all = post_states(&psi, s(&[0, 1, 2]), &id, DEFAULT_TOL).unwrap();
        assert_eq!(all.len(), 1);
        assert!(all[0].same_ray(&psi, 1e-12));

        // product state: every experiment yields the J factor
        let prod = epr()
            .tensor(&PureState::from_real(vec![2], &[1.0, 2.0]).unwrap())
            .unwrap();
        let pool = build_pool(prod.layout(), s(&[2]), &PoolConfig::default()).unwrap();
        for m in &pool.experiments {
            let out = post_states(&prod, s(&[0, 1]), m, DEFAULT_TOL).unwrap();
            assert_eq!(out.len(), 1);
            assert!(out[0].same_ray(&epr(), 1e-9));
        }
    }

    #[test]
    fn ghz_classes() {
        let c = classify_on_subset(&ghz(), s(&[0, 1, 2]), &PoolConfig::default()).unwrap();
        assert_eq!(c.class, IntricationClass::GloballyEntangled);
        assert_eq!(c.confidence, Confidence::Certified);
        for j in [s(&[0, 1]), s(&[0, 2]), s(&[1, 2])] {
            let c = classify_on_subset(&ghz(), j, &PoolConfig::default()).unwrap();
            assert_eq!(c.class, IntricationClass::WellEntangledAndSeparable);
            assert_eq!(c.confidence, Confidence::PoolLimited);
        }
    }

    #[test]
    fn product_state_is_totally_separated() {
        let psi = PureState::basis(vec![2, 2, 2], &[0, 0, 0]).unwrap();
        for j in analysis_subsets(3) {
            let c = classify_on_subset(&psi, j, &PoolConfig::default()).unwrap();
            assert_eq!(c.class, IntricationClass::TotallySeparated);
            assert_eq!(c.confidence, Confidence::Certified);
        }
        assert!(classify_on_subset(&psi, s(&[0]), &PoolConfig::default()).is_err());
    }

    #[test]
    fn clear_and_global_separability() {
        // EPR on {1,2} times |0⟩ on 3: on J = I every state factors across {1,2}|{3} only
        let psi = epr().tensor(&PureState::basis(vec![2], &[0]).unwrap()).unwrap();
        let c = classify_on_subset(&psi, s(&[0, 1, 2]), &PoolConfig::default()).unwrap();
        assert_eq!(c.class, IntricationClass::ClearlySeparableOnly);
        assert_eq!(c.confidence, Confidence::Certified);
    }

    #[test]
    fn ghz_structures() {
        let r = disentanglement_structures(&ghz(), &PoolConfig::default()).unwrap();
        let b3 = ConnectiveStructure::brunnian_over(three());
        let p3 = ConnectiveStructure::indiscrete(three());
        assert_eq!(r.structure("GI").unwrap(), &b3);
        assert_eq!(r.structure("MT").unwrap(), &b3);
        for name in ["BIP", "IP", "ML", "NCS"] {
            assert_eq!(r.structure(name).unwrap(), &p3, "{name}");
        }
        assert_eq!(disentanglement_order(&r), 1);
    }

    #[test]
    fn epr_structures_are_full() {
        let r = disentanglement_structures(&epr(), &PoolConfig::default()).unwrap();
        let full = ConnectiveStructure::indiscrete(GroundSet::numbered(2, 1).unwrap());
        for st in &r.structures {
            assert_eq!(st, &full);
        }
        assert_eq!(r.order(), 1);
    }

    #[test]
    fn product_state_order_is_zero() {
        let psi = PureState::basis(vec![2, 2, 2], &[1, 0, 1]).unwrap();
        let r = disentanglement_structures(&psi, &PoolConfig::default()).unwrap();
        assert!(r.structures.iter().all(ConnectiveStructure::is_discrete));
        assert_eq!(r.order(), 0);
    }

    /// Measuring site 1 of O₂ in the basis (|0⟩ ± |1⟩)/√2 leaves sites 2,3 in
    /// the product |11⟩ for the minus outcome, so O₂ is not globally
    /// entangled on {2,3}.
    #[test]
    fn o2_pair_has_a_separable_post_state() {
        let psi = o2();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let minus = DVector::from_vec(vec![C64::new(h, 0.0), C64::new(-h, 0.0)]);
        let (post, p) = psi
            .partial_contract(&[(0, minus)], DEFAULT_TOL)
            .unwrap()
            .unwrap();
        assert!(post.same_ray(&PureState::basis(vec![2, 2], &[1, 1]).unwrap(), 1e-12));
        // (2/√13)² · (3/2 · 1/√2)² = 9/26
        assert!((p - 9.0 / 26.0).abs() < 1e-12);
        assert!(post.is_separable_bipartition(s(&[0]), s(&[1]), DEFAULT_TOL).unwrap());
    }

    #[test]
    fn o2_classes_and_structures() {
        let r = disentanglement_structures(&o2(), &PoolConfig::default()).unwrap();
        assert_eq!(
            r.class_of(s(&[1, 2])).unwrap().class,
            IntricationClass::WellEntangledOnly
        );
        for j in [s(&[0, 1]), s(&[0, 2])] {
            assert_eq!(
                r.class_of(j).unwrap().class,
                IntricationClass::WellEntangledAndSeparable
            );
        }
        assert_eq!(
            r.class_of(s(&[0, 1, 2])).unwrap().class,
            IntricationClass::GloballyEntangled
        );
        assert_eq!(r.gi(), &ConnectiveStructure::brunnian_over(three()));
        assert_eq!(r.order(), 1);
    }

    fn assert_chains(r: &DisentanglementReport) {
        let [gi, bip, mt, ip, ml, ncs] = &r.structures;
        assert!(gi.is_finer_than(bip));
        assert!(bip.is_finer_than(ip));
        assert!(gi.is_finer_than(mt));
        assert!(mt.is_finer_than(ip));
        assert!(ip.is_finer_than(ml));
        assert!(ml.is_finer_than(ncs));
        for st in &r.structures {
            assert!(st.satisfies_closure_axiom());
        }
    }

    #[test]
    fn chains_on_examples() {
        for psi in [ghz(), o2(), epr()] {
            assert_chains(&disentanglement_structures(&psi, &PoolConfig::default()).unwrap());
        }
    }

    #[test]
    fn determinism() {
        let a = disentanglement_structures(&o2(), &PoolConfig::default()).unwrap();
        let b = disentanglement_structures(&o2(), &PoolConfig::default()).unwrap();
        assert_eq!(a.classes, b.classes);
        assert_eq!(a.structures, b.structures);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn inclusion_chains_on_random_states(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let psi = random_state(vec![2, 2, 2], &mut rng).unwrap();
                let config = PoolConfig { n_random: 5, seed, ..PoolConfig::default() };
                assert_chains(&disentanglement_structures(&psi, &config).unwrap());
            }

            #[test]
            fn larger_pools_never_unmix(seed in any::<u64>(), j in 3u32..8) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let psi = random_state(vec![2, 2, 2], &mut rng).unwrap();
                let j = Subset::from_bits(j);
                prop_assume!(j.len() >= 2);
                let small = PoolConfig { n_random: 3, seed, ..PoolConfig::default() };
                let big = PoolConfig { n_random: 10, seed, ..PoolConfig::default() };
                let a = classify_on_subset(&psi, j, &small).unwrap().class;
                let b = classify_on_subset(&psi, j, &big).unwrap().class;
                let globally = |c: IntricationClass| !c.is_mixed();
                if globally(b) {
                    prop_assert!(globally(a));
                }
                if b == IntricationClass::GloballyEntangled {
                    prop_assert_eq!(a, b);
                }
            }

            #[test]
            fn factorized_states_are_certified(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_state(vec![2, 2], &mut rng).unwrap();
                let b = random_state(vec![2], &mut rng).unwrap();
                let psi = a.tensor(&b).unwrap();
                let c = classify_on_subset(&psi, s(&[0, 1]), &PoolConfig::default()).unwrap();
                prop_assert_eq!(c.confidence, Confidence::Certified);
                prop_assert_eq!(c.class, IntricationClass::GloballyEntangled);
            }
        }
    }
}
