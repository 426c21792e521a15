//! Finite multilocal devices.
//!
//! A device with `k` sites relates each question tuple `q ∈ Q₁×..×Q_k` to a
//! nonempty set of answer tuples in `R₁×..×R_k`. Tuples are stored as flat
//! row-major indices (site 0 most significant), so `D(q)` is a sorted list of
//! flat result indices.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::atomic::{AtomicBool, Ordering};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connective::{ConnectiveStructure, GroundSet, Subset};
use crate::disentangle::analysis_subsets;
use crate::error::{Error, Result};
use crate::quantum::{Observable, PureState, C64};

/// Default bound on enumerated realizations and local function tuples.
pub const DEFAULT_CAP: u128 = 1 << 20;

/// Bound on `|Q|·|R|` for a stored relation.
pub const MAX_RELATION_CELLS: usize = 1 << 24;

fn digits_of(mut idx: usize, radix: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radix.len()];
    for (slot, &r) in out.iter_mut().zip(radix).rev() {
        *slot = idx % r;
        idx /= r;
    }
    out
}

fn index_of(digits: &[usize], radix: &[usize]) -> usize {
    digits.iter().zip(radix).fold(0, |acc, (&d, &r)| acc * r + d)
}

fn side_index(digits: &[usize], radix: &[usize], side: Subset) -> usize {
    side.iter().fold(0, |acc, i| acc * radix[i] + digits[i])
}

fn side_size(radix: &[usize], side: Subset) -> usize {
    side.iter().map(|i| radix[i]).product()
}

/// `base^exp`, saturating at `u128::MAX`.
fn pow_sat(base: usize, exp: usize) -> u128 {
    (0..exp).fold(1u128, |acc, _| acc.saturating_mul(base as u128))
}

/// Per-site tables `question index -> result index`.
type LocalFunctions = Vec<Vec<usize>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Device {
    questions: Vec<Vec<String>>,
    results: Vec<Vec<String>>,
    relation: Vec<Vec<usize>>,
}

impl Device {
    /// Builds a device; `relation[q]` lists flat result indices for flat question `q`.
    pub fn new(
        questions: Vec<Vec<String>>,
        results: Vec<Vec<String>>,
        relation: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if questions.is_empty() || questions.len() != results.len() {
            return Err(Error::domain(
                "a device needs one question set and one result set per site",
            ));
        }
        for (kind, sets) in [("question", &questions), ("result", &results)] {
            for (i, labels) in sets.iter().enumerate() {
                let distinct: HashSet<&String> = labels.iter().collect();
                if labels.is_empty() || distinct.len() != labels.len() {
                    return Err(Error::domain(format!(
                        "{kind} labels of site {} must be nonempty and distinct",
                        i + 1
                    )));
                }
            }
        }
        let nq = questions.iter().try_fold(1usize, |a, l| a.checked_mul(l.len()));
        let nr = results.iter().try_fold(1usize, |a, l| a.checked_mul(l.len()));
        let (nq, nr) = match (nq, nr) {
            (Some(q), Some(r)) if q.checked_mul(r).is_some_and(|c| c <= MAX_RELATION_CELLS) => {
                (q, r)
            }
            _ => {
                return Err(Error::Resource {
                    what: "device relation size |Q|·|R|".into(),
                    required: questions
                        .iter()
                        .chain(&results)
                        .map(|l| l.len() as u128)
                        .product(),
                    cap: MAX_RELATION_CELLS as u128,
                })
            }
        };
        if relation.len() != nq {
            return Err(Error::domain(format!(
                "relation must list {nq} question tuples, got {}",
                relation.len()
            )));
        }
        let mut rel = Vec::with_capacity(nq);
        for (q, rs) in relation.into_iter().enumerate() {
            let set: BTreeSet<usize> = rs.into_iter().collect();
            if set.is_empty() {
                return Err(Error::domain(format!(
                    "device is not coherent: no answer for question {}",
                    digits_of(q, &questions.iter().map(Vec::len).collect::<Vec<_>>())
                        .iter()
                        .enumerate()
                        .map(|(i, &d)| questions[i][d].as_str())
                        .collect::<String>()
                )));
            }
            if set.iter().any(|&r| r >= nr) {
                return Err(Error::domain("result index out of range"));
            }
            rel.push(set.into_iter().collect());
        }
        Ok(Device {
            questions,
            results,
            relation: rel,
        })
    }

    /// Builds a device from a function of question digits to answer digit tuples.
    pub fn from_fn<F>(questions: Vec<Vec<String>>, results: Vec<Vec<String>>, f: F) -> Result<Self>
    where
        F: Fn(&[usize]) -> Vec<Vec<usize>>,
    {
        let q_radix: Vec<usize> = questions.iter().map(Vec::len).collect();
        let r_radix: Vec<usize> = results.iter().map(Vec::len).collect();
        let nq: usize = q_radix.iter().product();
        let mut relation = Vec::with_capacity(nq);
        for q in 0..nq {
            let rs = f(&digits_of(q, &q_radix))
                .into_iter()
                .map(|r| {
                    if r.len() != r_radix.len() || r.iter().zip(&r_radix).any(|(&x, &n)| x >= n) {
                        Err(Error::domain("answer tuple does not match the result sets"))
                    } else {
                        Ok(index_of(&r, &r_radix))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            relation.push(rs);
        }
        Device::new(questions, results, relation)
    }

    pub fn num_sites(&self) -> usize {
        self.questions.len()
    }

    pub fn questions(&self) -> &[Vec<String>] {
        &self.questions
    }

    pub fn results(&self) -> &[Vec<String>] {
        &self.results
    }

    pub fn relation(&self) -> &[Vec<usize>] {
        &self.relation
    }

    pub fn q_radix(&self) -> Vec<usize> {
        self.questions.iter().map(Vec::len).collect()
    }

    pub fn r_radix(&self) -> Vec<usize> {
        self.results.iter().map(Vec::len).collect()
    }

    pub fn num_questions(&self) -> usize {
        self.relation.len()
    }

    pub fn num_results(&self) -> usize {
        self.r_radix().iter().product()
    }

    /// Sites labelled `1..=k`.
    pub fn ground(&self) -> GroundSet {
        GroundSet::numbered(self.num_sites(), 1).expect("device has at least one site")
    }

    pub fn question_digits(&self, q: usize) -> Vec<usize> {
        digits_of(q, &self.q_radix())
    }

    pub fn result_digits(&self, r: usize) -> Vec<usize> {
        digits_of(r, &self.r_radix())
    }

    pub fn question_index(&self, digits: &[usize]) -> usize {
        index_of(digits, &self.q_radix())
    }

    pub fn result_index(&self, digits: &[usize]) -> usize {
        index_of(digits, &self.r_radix())
    }

    /// Concatenated labels of a question tuple.
    pub fn question_key(&self, q: usize) -> String {
        self.question_digits(q)
            .iter()
            .enumerate()
            .map(|(i, &d)| self.questions[i][d].as_str())
            .collect()
    }

    pub fn result_key(&self, r: usize) -> String {
        self.result_digits(r)
            .iter()
            .enumerate()
            .map(|(i, &d)| self.results[i][d].as_str())
            .collect()
    }

    /// `D(q)` for the question with the given concatenated key.
    pub fn answers(&self, key: &str) -> Option<Vec<String>> {
        (0..self.num_questions())
            .find(|&q| self.question_key(q) == key)
            .map(|q| self.relation[q].iter().map(|&r| self.result_key(r)).collect())
    }

    pub fn is_deterministic(&self) -> bool {
        self.relation.iter().all(|rs| rs.len() == 1)
    }

    fn membership(&self) -> Vec<bool> {
        let nr = self.num_results();
        let mut m = vec![false; self.num_questions() * nr];
        for (q, rs) in self.relation.iter().enumerate() {
            for &r in rs {
                m[q * nr + r] = true;
            }
        }
        m
    }

    /// Projection onto the sites in `j`.
    pub fn sub_device(&self, j: Subset) -> Result<Device> {
        if j.is_empty() || !j.is_subset_of(Subset::full(self.num_sites())) {
            return Err(Error::domain("sub-device needs a nonempty subset of the sites"));
        }
        let (qr, rr) = (self.q_radix(), self.r_radix());
        let mut rel: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); side_size(&qr, j)];
        for (q, rs) in self.relation.iter().enumerate() {
            let qj = side_index(&digits_of(q, &qr), &qr, j);
            for &r in rs {
                rel[qj].insert(side_index(&digits_of(r, &rr), &rr, j));
            }
        }
        Device::new(
            j.iter().map(|i| self.questions[i].clone()).collect(),
            j.iter().map(|i| self.results[i].clone()).collect(),
            rel.into_iter().map(|s| s.into_iter().collect()).collect(),
        )
    }

    /// Product device; the sites of `other` follow those of `self`.
    pub fn tensor(&self, other: &Device) -> Result<Device> {
        let nrb = other.num_results();
        let mut relation = Vec::with_capacity(self.num_questions() * other.num_questions());
        for ra in &self.relation {
            for rb in &other.relation {
                relation.push(
                    ra.iter()
                        .flat_map(|&a| rb.iter().map(move |&b| a * nrb + b))
                        .collect(),
                );
            }
        }
        Device::new(
            self.questions.iter().chain(&other.questions).cloned().collect(),
            self.results.iter().chain(&other.results).cloned().collect(),
            relation,
        )
    }

    /// Number of deterministic realizations, `∏_q |D(q)|`.
    pub fn realization_count(&self) -> u128 {
        self.relation
            .iter()
            .fold(1u128, |acc, rs| acc.saturating_mul(rs.len() as u128))
    }

    fn check_realization_cap(&self, cap: u128) -> Result<u128> {
        let n = self.realization_count();
        if n > cap {
            return Err(Error::Resource {
                what: "deterministic realizations".into(),
                required: n,
                cap,
            });
        }
        Ok(n)
    }

    /// The `n`-th realization, as one flat result index per question.
    pub fn realization_at(&self, mut n: u128) -> Vec<usize> {
        let mut f = vec![0; self.num_questions()];
        for (q, rs) in self.relation.iter().enumerate().rev() {
            let len = rs.len() as u128;
            f[q] = rs[(n % len) as usize];
            n /= len;
        }
        f
    }

    /// All deterministic realizations `f` with `f(q) ∈ D(q)`.
    pub fn deterministic_realizations(&self, cap: u128) -> Result<impl Iterator<Item = Vec<usize>> + '_> {
        let n = self.check_realization_cap(cap)?;
        Ok((0..n).map(move |i| self.realization_at(i)))
    }

    /// Calls `visit` on realizations `start..end` in order, reusing one buffer.
    fn for_realizations_in<F: FnMut(&[usize]) -> bool>(&self, start: u128, end: u128, mut visit: F) {
        if start >= end {
            return;
        }
        let mut pos: Vec<usize> = {
            let mut n = start;
            let mut p = vec![0; self.num_questions()];
            for (q, rs) in self.relation.iter().enumerate().rev() {
                let len = rs.len() as u128;
                p[q] = (n % len) as usize;
                n /= len;
            }
            p
        };
        let mut f: Vec<usize> = pos
            .iter()
            .zip(&self.relation)
            .map(|(&p, rs)| rs[p])
            .collect();
        let mut i = start;
        loop {
            if !visit(&f) {
                return;
            }
            i += 1;
            if i >= end {
                return;
            }
            for q in (0..pos.len()).rev() {
                pos[q] += 1;
                if pos[q] < self.relation[q].len() {
                    f[q] = self.relation[q][pos[q]];
                    break;
                }
                pos[q] = 0;
                f[q] = self.relation[q][0];
            }
        }
    }

    /// `do(f_i)` for every output site `i`: the input sites whose value can
    /// change output `i`, found by toggling one coordinate at a time.
    pub fn dependency_domains(&self, f: &[usize]) -> Vec<Subset> {
        let (qr, rr) = (self.q_radix(), self.r_radix());
        let k = self.num_sites();
        let rdigits: Vec<Vec<usize>> = f.iter().map(|&r| digits_of(r, &rr)).collect();
        let mut strides = vec![1usize; k];
        for j in (0..k.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * qr[j + 1];
        }
        let mut domains = vec![Subset::EMPTY; k];
        for (j, &stride) in strides.iter().enumerate() {
            for q in 0..f.len() {
                let dj = (q / stride) % qr[j];
                for v in dj + 1..qr[j] {
                    let q2 = q + (v - dj) * stride;
                    for (i, dom) in domains.iter_mut().enumerate() {
                        if !dom.contains(j) && rdigits[q][i] != rdigits[q2][i] {
                            *dom = dom.with(j);
                        }
                    }
                }
            }
        }
        domains
    }

    /// Whether `D(q) = D_[a](q_a) × D_[b](q_b)` for every `q`.
    fn factors_across(&self, a: Subset, b: Subset) -> Result<bool> {
        let qr = self.q_radix();
        let da = self.sub_device(a)?;
        let db = self.sub_device(b)?;
        Ok(self.relation.iter().enumerate().all(|(q, rs)| {
            let d = digits_of(q, &qr);
            rs.len()
                == da.relation[side_index(&d, &qr, a)].len()
                    * db.relation[side_index(&d, &qr, b)].len()
        }))
    }

    /// Pairs of `D` covered by deterministic realizations `f_a ⊗ f_b ⊆ D`,
    /// plus whether at least one such realization exists.
    fn separable_cover(&self, a: Subset, b: Subset, cap: u128) -> Result<(bool, Vec<bool>)> {
        // enumerate the side with the smaller function space
        let (qr, rr) = (self.q_radix(), self.r_radix());
        let space = |s: Subset| pow_sat(side_size(&rr, s), side_size(&qr, s));
        let (a, b) = if space(a) <= space(b) { (a, b) } else { (b, a) };
        let need = space(a);
        if need > cap {
            return Err(Error::Resource {
                what: "separable realization search".into(),
                required: need,
                cap,
            });
        }
        let (nqa, nqb) = (side_size(&qr, a), side_size(&qr, b));
        let (nra, nrb) = (side_size(&rr, a), side_size(&rr, b));
        let nr = self.num_results();
        let member = self.membership();
        // full flat indices from side indices
        let mut q_full = vec![0usize; nqa * nqb];
        for q in 0..self.num_questions() {
            let d = digits_of(q, &qr);
            q_full[side_index(&d, &qr, a) * nqb + side_index(&d, &qr, b)] = q;
        }
        let mut r_full = vec![0usize; nra * nrb];
        for r in 0..nr {
            let d = digits_of(r, &rr);
            r_full[side_index(&d, &rr, a) * nrb + side_index(&d, &rr, b)] = r;
        }
        let mut covered = vec![false; member.len()];
        let mut any = false;
        let mut g = vec![0usize; nqa];
        'search: loop {
            // allowed answers on side b for each q_b given g on side a
            let mut allowed: Vec<Vec<usize>> = Vec::with_capacity(nqb);
            let mut valid = true;
            for qb in 0..nqb {
                let options: Vec<usize> = (0..nrb)
                    .filter(|&rb| {
                        (0..nqa).all(|qa| {
                            member[q_full[qa * nqb + qb] * nr + r_full[g[qa] * nrb + rb]]
                        })
                    })
                    .collect();
                if options.is_empty() {
                    valid = false;
                    break;
                }
                allowed.push(options);
            }
            if valid {
                any = true;
                for (qb, options) in allowed.iter().enumerate() {
                    for qa in 0..nqa {
                        let q = q_full[qa * nqb + qb];
                        for &rb in options {
                            covered[q * nr + r_full[g[qa] * nrb + rb]] = true;
                        }
                    }
                }
            }
            for slot in (0..nqa).rev() {
                g[slot] += 1;
                if g[slot] < nra {
                    continue 'search;
                }
                g[slot] = 0;
            }
            break;
        }
        Ok((any, covered))
    }

    /// Local deterministic realizations `g₁ ⊗ .. ⊗ g_k ⊆ D`: the first one
    /// found and the set of pairs they cover.
    fn local_cover(&self, cap: u128) -> Result<(Option<LocalFunctions>, Vec<bool>)> {
        let (qr, rr) = (self.q_radix(), self.r_radix());
        let k = self.num_sites();
        let need = (0..k).fold(1u128, |acc, i| acc.saturating_mul(pow_sat(rr[i], qr[i])));
        if need > cap {
            return Err(Error::Resource {
                what: "local realization search".into(),
                required: need,
                cap,
            });
        }
        let nr = self.num_results();
        let member = self.membership();
        let qdigits: Vec<Vec<usize>> = (0..self.num_questions()).map(|q| digits_of(q, &qr)).collect();
        let mut g: Vec<Vec<usize>> = qr.iter().map(|&n| vec![0; n]).collect();
        let mut witness = None;
        let mut covered = vec![false; member.len()];
        let mut image = vec![0usize; self.num_questions()];
        'search: loop {
            let valid = qdigits.iter().enumerate().all(|(q, d)| {
                let r = (0..k).fold(0, |acc, i| acc * rr[i] + g[i][d[i]]);
                image[q] = r;
                member[q * nr + r]
            });
            if valid {
                if witness.is_none() {
                    witness = Some(g.clone());
                }
                for (q, &r) in image.iter().enumerate() {
                    covered[q * nr + r] = true;
                }
            }
            for i in (0..k).rev() {
                for slot in (0..qr[i]).rev() {
                    g[i][slot] += 1;
                    if g[i][slot] < rr[i] {
                        continue 'search;
                    }
                    g[i][slot] = 0;
                }
            }
            break;
        }
        Ok((witness, covered))
    }

    /// The seven locality predicates.
    pub fn locality_profile(&self, cap: u128) -> Result<LocalityProfile> {
        let k = self.num_sites();
        if k < 2 {
            return Err(Error::domain("locality is only defined for two or more sites"));
        }
        let member = self.membership();
        let covers_all = |cov: &[bool]| member.iter().zip(cov).all(|(&m, &c)| !m || c);

        let qr = self.q_radix();
        let singles: Vec<Device> = (0..k)
            .map(|i| self.sub_device(Subset::singleton(i)))
            .collect::<Result<_>>()?;
        let local = self.relation.iter().enumerate().all(|(q, rs)| {
            let d = digits_of(q, &qr);
            rs.len() == (0..k).map(|i| singles[i].relation[d[i]].len()).product::<usize>()
        });

        let mut separable_cut = None;
        let mut quasi_separable_cut = None;
        let mut partially_separable_cut = None;
        let mut union = vec![false; member.len()];
        for (a, b) in Subset::full(k).bipartitions() {
            if separable_cut.is_none() && self.factors_across(a, b)? {
                separable_cut = Some((a, b));
            }
            let (any, cov) = self.separable_cover(a, b, cap)?;
            if any && partially_separable_cut.is_none() {
                partially_separable_cut = Some((a, b));
            }
            if quasi_separable_cut.is_none() && covers_all(&cov) {
                quasi_separable_cut = Some((a, b));
            }
            for (u, c) in union.iter_mut().zip(cov) {
                *u |= c;
            }
        }
        let (local_witness, local_cov) = self.local_cover(cap)?;

        Ok(LocalityProfile {
            local,
            quasi_local: covers_all(&local_cov),
            partially_local: local_witness.is_some(),
            separable: separable_cut.is_some(),
            quasi_separable: quasi_separable_cut.is_some(),
            pseudo_separable: covers_all(&union),
            partially_separable: partially_separable_cut.is_some(),
            separable_cut,
            quasi_separable_cut,
            partially_separable_cut,
            local_witness,
        })
    }

    /// κ_NPS, κ_NOS, κ_NPL, κ_NQS, κ_NQL, κ_NS, κ_NL.
    pub fn tensorial_structures(&self, cap: u128) -> Result<TensorialStructures> {
        let k = self.num_sites();
        if k < 2 {
            return Err(Error::domain("tensorial structures need at least two sites"));
        }
        let profiles: Vec<(Subset, LocalityProfile)> = analysis_subsets(k)
            .into_par_iter()
            .map(|j| {
                let sub = if j == Subset::full(k) {
                    self.clone()
                } else {
                    self.sub_device(j)?
                };
                Ok((j, sub.locality_profile(cap)?))
            })
            .collect::<Result<_>>()?;
        let ground = self.ground();
        let mut structures = Vec::with_capacity(7);
        for (n, _) in TENSORIAL_NAMES.iter().enumerate() {
            structures.push(ConnectiveStructure::generate_integral(
                ground.clone(),
                profiles
                    .iter()
                    .filter(|(_, p)| !p.flags()[n].1)
                    .map(|(j, _)| *j),
            )?);
        }
        Ok(TensorialStructures {
            structures: structures.try_into().expect("seven structures"),
            profiles,
        })
    }

    /// κ_do and κ_dp, by meeting the domain structures of every realization.
    pub fn domanial_structures(&self, cap: u128) -> Result<DomanialStructures> {
        let n = self.check_realization_cap(cap)?;
        let ground = self.ground();
        let k = self.num_sites();
        let chunks = (rayon::current_num_threads() as u128 * 8).clamp(1, n.max(1));
        let both_discrete = AtomicBool::new(false);
        let partial: Vec<(ConnectiveStructure, ConnectiveStructure, u128)> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let start = n * c / chunks;
                let end = n * (c + 1) / chunks;
                let mut kdo = ConnectiveStructure::indiscrete(ground.clone());
                let mut kdp = ConnectiveStructure::indiscrete(ground.clone());
                let mut seen_do: HashSet<Vec<Subset>> = HashSet::new();
                let mut seen_dp: HashSet<Vec<Subset>> = HashSet::new();
                let mut visited = 0u128;
                self.for_realizations_in(start, end, |f| {
                    if both_discrete.load(Ordering::Relaxed) {
                        return false;
                    }
                    visited += 1;
                    let dom = self.dependency_domains(f);
                    let pointed: Vec<Subset> =
                        dom.iter().enumerate().map(|(i, d)| d.with(i)).collect();
                    if !kdo.is_discrete() && seen_do.insert(dom.clone()) {
                        let s = ConnectiveStructure::generate_integral(ground.clone(), dom)
                            .expect("domains lie in the ground set");
                        kdo.meet_in_place(&s).expect("same ground");
                    }
                    if !kdp.is_discrete() && seen_dp.insert(pointed.clone()) {
                        let s = ConnectiveStructure::generate_integral(ground.clone(), pointed)
                            .expect("domains lie in the ground set");
                        kdp.meet_in_place(&s).expect("same ground");
                    }
                    if kdo.is_discrete() && kdp.is_discrete() {
                        both_discrete.store(true, Ordering::Relaxed);
                        return false;
                    }
                    true
                });
                (kdo, kdp, visited)
            })
            .collect();
        let mut kdo = ConnectiveStructure::indiscrete(ground.clone());
        let mut kdp = ConnectiveStructure::indiscrete(ground.clone());
        let mut visited = 0;
        for (a, b, v) in &partial {
            kdo.meet_in_place(a)?;
            kdp.meet_in_place(b)?;
            visited += v;
        }
        if both_discrete.load(Ordering::Relaxed) {
            kdo = ConnectiveStructure::discrete(ground.clone());
            kdp = ConnectiveStructure::discrete(ground);
        }
        debug_assert!(k >= 1);
        Ok(DomanialStructures {
            domanial: kdo,
            pointed: kdp,
            realizations: n,
            visited,
        })
    }

    /// Tensorial, domanial and overall connective orders.
    pub fn device_order(&self, cap: u128) -> Result<DeviceOrder> {
        let t = self.tensorial_structures(cap)?;
        let d = self.domanial_structures(cap)?;
        Ok(DeviceOrder::from_structures(&t, &d))
    }

    /// Relabels question and result labels site by site.
    pub fn relabel(&self, questions: Vec<Vec<String>>, results: Vec<Vec<String>>) -> Result<Device> {
        if questions.iter().map(Vec::len).collect::<Vec<_>>() != self.q_radix()
            || results.iter().map(Vec::len).collect::<Vec<_>>() != self.r_radix()
        {
            return Err(Error::domain("relabelling must keep the label counts"));
        }
        Device::new(questions, results, self.relation.clone())
    }

    /// Permutes result values of each site: `perm[i][old] = new`.
    pub fn permute_results(&self, perm: &[Vec<usize>]) -> Result<Device> {
        let rr = self.r_radix();
        let relation = self
            .relation
            .iter()
            .map(|rs| {
                rs.iter()
                    .map(|&r| {
                        let d: Vec<usize> = digits_of(r, &rr)
                            .iter()
                            .enumerate()
                            .map(|(i, &x)| perm[i][x])
                            .collect();
                        index_of(&d, &rr)
                    })
                    .collect()
            })
            .collect();
        Device::new(self.questions.clone(), self.results.clone(), relation)
    }

    /// Permutes question values of each site: `perm[i][old] = new`.
    pub fn permute_questions(&self, perm: &[Vec<usize>]) -> Result<Device> {
        let qr = self.q_radix();
        let mut relation = vec![Vec::new(); self.num_questions()];
        for (q, rs) in self.relation.iter().enumerate() {
            let d: Vec<usize> = digits_of(q, &qr)
                .iter()
                .enumerate()
                .map(|(i, &x)| perm[i][x])
                .collect();
            relation[index_of(&d, &qr)] = rs.clone();
        }
        Device::new(self.questions.clone(), self.results.clone(), relation)
    }
}

pub const TENSORIAL_NAMES: [&str; 7] = ["NPS", "NOS", "NPL", "NQS", "NQL", "NS", "NL"];

#[derive(Clone, Debug, PartialEq)]
pub struct LocalityProfile {
    pub local: bool,
    pub quasi_local: bool,
    pub partially_local: bool,
    pub separable: bool,
    pub quasi_separable: bool,
    pub pseudo_separable: bool,
    pub partially_separable: bool,
    pub separable_cut: Option<(Subset, Subset)>,
    pub quasi_separable_cut: Option<(Subset, Subset)>,
    pub partially_separable_cut: Option<(Subset, Subset)>,
    /// Per-site functions `g_i`, as result index per question index.
    pub local_witness: Option<Vec<Vec<usize>>>,
}

impl LocalityProfile {
    /// Flags in the order matching [`TENSORIAL_NAMES`]: the structure named
    /// `N*` is generated by the subsets where the flag is false.
    pub fn flags(&self) -> [(&'static str, bool); 7] {
        [
            ("partially_separable", self.partially_separable),
            ("pseudo_separable", self.pseudo_separable),
            ("partially_local", self.partially_local),
            ("quasi_separable", self.quasi_separable),
            ("quasi_local", self.quasi_local),
            ("separable", self.separable),
            ("local", self.local),
        ]
    }

    /// Checks the implications between the locality notions.
    pub fn implications_hold(&self) -> bool {
        let imp = |a: bool, b: bool| !a || b;
        imp(self.local, self.quasi_local)
            && imp(self.quasi_local, self.partially_local)
            && imp(self.local, self.separable)
            && imp(self.quasi_local, self.quasi_separable)
            && imp(self.partially_local, self.partially_separable)
            && imp(self.separable, self.quasi_separable)
            && imp(self.quasi_separable, self.pseudo_separable)
            && imp(self.pseudo_separable, self.partially_separable)
    }
}

#[derive(Clone, Debug)]
pub struct TensorialStructures {
    /// In the order of [`TENSORIAL_NAMES`].
    pub structures: [ConnectiveStructure; 7],
    pub profiles: Vec<(Subset, LocalityProfile)>,
}

impl TensorialStructures {
    pub fn get(&self, name: &str) -> Option<&ConnectiveStructure> {
        TENSORIAL_NAMES
            .iter()
            .position(|&n| n == name)
            .map(|i| &self.structures[i])
    }

    pub fn order(&self) -> usize {
        self.structures
            .iter()
            .map(ConnectiveStructure::connective_order)
            .max()
            .unwrap_or(0)
    }

    /// The finesse chains between the seven structures.
    pub fn chains_hold(&self) -> bool {
        let g = |n: &str| self.get(n).expect("known name");
        let le = |a: &str, b: &str| g(a).is_finer_than(g(b));
        le("NPS", "NPL")
            && le("NPL", "NQL")
            && le("NQL", "NL")
            && le("NPS", "NOS")
            && le("NOS", "NQS")
            && le("NQS", "NS")
            && le("NS", "NL")
            && le("NQS", "NQL")
    }
}

#[derive(Clone, Debug)]
pub struct DomanialStructures {
    pub domanial: ConnectiveStructure,
    pub pointed: ConnectiveStructure,
    /// Total number of deterministic realizations.
    pub realizations: u128,
    /// Realizations actually visited before the early exit.
    pub visited: u128,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct DeviceOrder {
    pub tensorial: usize,
    pub domanial: usize,
    pub overall: usize,
}

impl DeviceOrder {
    pub fn from_structures(t: &TensorialStructures, d: &DomanialStructures) -> Self {
        let tensorial = t.order();
        let domanial = d
            .domanial
            .connective_order()
            .max(d.pointed.connective_order());
        DeviceOrder {
            tensorial,
            domanial,
            overall: tensorial.max(domanial),
        }
    }
}

/// One entry of a measurement menu.
#[derive(Clone, Debug)]
pub struct MenuEntry {
    pub label: String,
    pub matrix: DMatrix<C64>,
}

impl MenuEntry {
    pub fn pauli(name: char) -> Result<Self> {
        let matrix = match name {
            'X' => crate::quantum::pauli_x(),
            'Y' => crate::quantum::pauli_y(),
            'Z' => crate::quantum::pauli_z(),
            other => return Err(Error::domain(format!("unknown observable '{other}'"))),
        };
        Ok(MenuEntry {
            label: name.to_string(),
            matrix,
        })
    }
}

/// Builds `k` identical menus from a shorthand like `"ZX"`.
pub fn pauli_menus(spec: &str, k: usize) -> Result<Vec<Vec<MenuEntry>>> {
    let menu: Vec<MenuEntry> = spec.chars().map(MenuEntry::pauli).collect::<Result<_>>()?;
    if menu.is_empty() {
        return Err(Error::domain("menu shorthand is empty"));
    }
    Ok(vec![menu; k])
}

/// Labelling of derived devices.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Recode {
    /// Menu labels for questions, eigenvalues for results.
    Raw,
    /// Questions coded by menu position (`*` for a one-entry menu); results
    /// coded by ascending eigenvalue position, so `-1 ↦ 0` and `+1 ↦ 1`.
    Indexed,
}

/// Label for an eigenvalue: shortest decimal at 1e-9 resolution.
pub fn eigenvalue_label(x: f64) -> String {
    let r = (x * 1e9).round() / 1e9;
    let r = if r == 0.0 { 0.0 } else { r };
    let s = format!("{r}");
    if r > 0.0 {
        format!("+{s}")
    } else {
        s
    }
}

/// Device of joint outcomes of nondegenerate measurements on `psi`.
pub fn derive_device(
    psi: &PureState,
    menus: &[Vec<MenuEntry>],
    tol: f64,
    recode: Recode,
) -> Result<Device> {
    let k = psi.num_sites();
    if menus.len() != k {
        return Err(Error::domain(format!("expected {k} menus, got {}", menus.len())));
    }
    let mut observables: Vec<Vec<Observable>> = Vec::with_capacity(k);
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (site, menu) in menus.iter().enumerate() {
        if menu.is_empty() {
            return Err(Error::domain(format!("menu of site {} is empty", site + 1)));
        }
        let obs: Vec<Observable> = menu
            .iter()
            .map(|e| Observable::new(site, e.matrix.clone(), true, tol))
            .collect::<Result<_>>()?;
        let mut vals: Vec<f64> = obs.iter().flat_map(|o| o.eigenvalues(tol)).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup_by(|a, b| (*a - *b).abs() <= tol.max(1e-12));
        observables.push(obs);
        values.push(vals);
    }
    let questions: Vec<Vec<String>> = menus
        .iter()
        .map(|menu| match recode {
            Recode::Raw => menu.iter().map(|e| e.label.clone()).collect(),
            Recode::Indexed if menu.len() == 1 => vec!["*".to_string()],
            Recode::Indexed => (0..menu.len()).map(|i| i.to_string()).collect(),
        })
        .collect();
    let results: Vec<Vec<String>> = values
        .iter()
        .map(|vals| match recode {
            Recode::Raw => vals.iter().map(|&v| eigenvalue_label(v)).collect(),
            Recode::Indexed => (0..vals.len()).map(|i| i.to_string()).collect(),
        })
        .collect();
    let q_radix: Vec<usize> = menus.iter().map(Vec::len).collect();
    let r_radix: Vec<usize> = values.iter().map(Vec::len).collect();
    let nq: usize = q_radix.iter().product();
    let mut relation = Vec::with_capacity(nq);
    for q in 0..nq {
        let d = digits_of(q, &q_radix);
        let chosen: Vec<Observable> = d
            .iter()
            .enumerate()
            .map(|(i, &c)| observables[i][c].clone())
            .collect();
        let mut answers = Vec::new();
        for outcome in psi.measure_projective(&chosen, tol)? {
            let rd: Vec<usize> = outcome
                .values
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    values[i]
                        .iter()
                        .position(|&w| (w - v).abs() <= tol.max(1e-12))
                        .expect("eigenvalue listed for its site")
                })
                .collect();
            answers.push(index_of(&rd, &r_radix));
        }
        relation.push(answers);
    }
    Device::new(questions, results, relation)
}

/// JSON form with concatenated tuple labels as keys.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeviceJson {
    pub questions: Vec<Vec<String>>,
    pub results: Vec<Vec<String>>,
    pub relation: BTreeMap<String, Vec<String>>,
}

/// Splits a concatenated key into one label per site; fails unless exactly
/// one split exists.
pub(crate) fn split_key(key: &str, labels: &[Vec<String>]) -> Result<Vec<usize>> {
    fn go(rest: &str, site: usize, labels: &[Vec<String>], acc: &mut Vec<usize>, found: &mut Vec<Vec<usize>>) {
        if found.len() > 1 {
            return;
        }
        if site == labels.len() {
            if rest.is_empty() {
                found.push(acc.clone());
            }
            return;
        }
        for (i, l) in labels[site].iter().enumerate() {
            if let Some(tail) = rest.strip_prefix(l.as_str()) {
                acc.push(i);
                go(tail, site + 1, labels, acc, found);
                acc.pop();
            }
        }
    }
    let mut found = Vec::new();
    go(key, 0, labels, &mut Vec::new(), &mut found);
    match found.len() {
        1 => Ok(found.pop().expect("one split")),
        0 => Err(Error::parse(format!("'{key}' does not match the declared labels"))),
        _ => Err(Error::parse(format!("'{key}' splits into labels in more than one way"))),
    }
}

impl From<&Device> for DeviceJson {
    fn from(d: &Device) -> Self {
        DeviceJson {
            questions: d.questions.clone(),
            results: d.results.clone(),
            relation: (0..d.num_questions())
                .map(|q| {
                    (
                        d.question_key(q),
                        d.relation[q].iter().map(|&r| d.result_key(r)).collect(),
                    )
                })
                .collect(),
        }
    }
}

impl TryFrom<DeviceJson> for Device {
    type Error = Error;

    fn try_from(j: DeviceJson) -> Result<Device> {
        let q_radix: Vec<usize> = j.questions.iter().map(Vec::len).collect();
        let r_radix: Vec<usize> = j.results.iter().map(Vec::len).collect();
        if j.questions.len() != j.results.len() || q_radix.contains(&0) || r_radix.contains(&0) {
            return Err(Error::domain("questions and results must list nonempty labels per site"));
        }
        let nq = q_radix
            .iter()
            .try_fold(1usize, |a, &n| a.checked_mul(n))
            .filter(|&n| n <= MAX_RELATION_CELLS)
            .ok_or_else(|| Error::Resource {
                what: "number of question tuples".into(),
                required: q_radix.iter().map(|&n| n as u128).product(),
                cap: MAX_RELATION_CELLS as u128,
            })?;
        let mut relation = vec![Vec::new(); nq];
        let mut seen = vec![false; nq];
        for (key, answers) in &j.relation {
            let q = index_of(&split_key(key, &j.questions)?, &q_radix);
            if seen[q] {
                return Err(Error::parse(format!("question '{key}' listed twice")));
            }
            seen[q] = true;
            for a in answers {
                relation[q].push(index_of(&split_key(a, &j.results)?, &r_radix));
            }
        }
        Device::new(j.questions, j.results, relation)
    }
}

impl Serialize for Device {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DeviceJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Device {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = DeviceJson::deserialize(d)?;
        Device::try_from(j).map_err(serde::de::Error::custom)
    }
}
