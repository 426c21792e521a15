//! Finite integral connective spaces.
//!
//! A connective structure on a finite ground set is a family of "connected"
//! subsets closed under the union of any two members that share a point. All
//! structures handled here are *integral*: the empty set and every singleton
//! are connected. Subsets are bitsets over the ground order, so the ground set
//! is capped at [`MAX_GROUND_SIZE`] points.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported ground set.
pub const MAX_GROUND_SIZE: usize = 24;

/// A subset of a ground set, encoded as a bitset over ground positions.
#[derive(Copy, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subset(u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub const fn from_bits(bits: u32) -> Self {
        Subset(bits)
    }

    pub const fn bits(self) -> u32 {
        self.0
    }

    pub fn singleton(i: usize) -> Self {
        assert!(i < 32, "position {i} out of range");
        Subset(1 << i)
    }

    /// The subset `{0, .., k-1}`.
    pub fn full(k: usize) -> Self {
        assert!(k <= 32);
        if k == 32 {
            Subset(u32::MAX)
        } else {
            Subset((1u32 << k) - 1)
        }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        indices
            .into_iter()
            .fold(Subset::EMPTY, |acc, i| acc.with(i))
    }

    pub fn with(self, i: usize) -> Self {
        self.union(Subset::singleton(i))
    }

    pub fn contains(self, i: usize) -> bool {
        i < 32 && self.0 & (1 << i) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Subset) -> Subset {
        Subset(self.0 | other.0)
    }

    pub fn intersection(self, other: Subset) -> Subset {
        Subset(self.0 & other.0)
    }

    pub fn difference(self, other: Subset) -> Subset {
        Subset(self.0 & !other.0)
    }

    pub fn intersects(self, other: Subset) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    /// Lowest member, if any.
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// Members in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(i)
        })
    }

    /// All subsets of `self`, including the empty set and `self`.
    pub fn subsets(self) -> impl Iterator<Item = Subset> {
        let set = self.0;
        let mut current = 0u32;
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let out = current;
            current = current.wrapping_sub(set) & set;
            done = current == 0;
            Some(Subset(out))
        })
    }

    /// Unordered bipartitions `(A, B)` of `self` into two nonempty parts.
    ///
    /// Each bipartition is produced once, with the lowest member of `self`
    /// always in `A`.
    pub fn bipartitions(self) -> impl Iterator<Item = (Subset, Subset)> {
        let anchor = self.first().map(Subset::singleton).unwrap_or_default();
        let rest = self.difference(anchor);
        rest.subsets().filter_map(move |extra| {
            let a = anchor.union(extra);
            let b = self.difference(a);
            (!b.is_empty()).then_some((a, b))
        })
    }

    /// Canonical order: by size, then lexicographically on sorted members.
    pub fn canonical_cmp(&self, other: &Subset) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.iter().cmp(other.iter()))
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Sort subsets in canonical order.
pub fn canonical_sort(subsets: &mut [Subset]) {
    subsets.sort_by(Subset::canonical_cmp);
}

/// Ordered, labelled ground set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroundSet {
    labels: Vec<String>,
}

impl GroundSet {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::domain("ground set must have at least one element"));
        }
        if labels.len() > MAX_GROUND_SIZE {
            return Err(Error::domain(format!(
                "ground set has {} elements, the maximum is {MAX_GROUND_SIZE}",
                labels.len()
            )));
        }
        let distinct: HashSet<&str> = labels.iter().map(String::as_str).collect();
        if distinct.len() != labels.len() {
            return Err(Error::domain("ground set labels must be distinct"));
        }
        Ok(GroundSet { labels })
    }

    /// Ground set labelled `start, start+1, ..`.
    pub fn numbered(k: usize, start: usize) -> Result<Self> {
        Self::new((start..start + k).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn full(&self) -> Subset {
        Subset::full(self.len())
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn subset_of<S: AsRef<str>>(&self, labels: &[S]) -> Result<Subset> {
        labels.iter().try_fold(Subset::EMPTY, |acc, l| {
            let l = l.as_ref();
            self.index_of(l)
                .map(|i| acc.with(i))
                .ok_or_else(|| Error::domain(format!("'{l}' is not in the ground set")))
        })
    }

    pub fn labels_of(&self, s: Subset) -> Vec<String> {
        s.iter().map(|i| self.labels[i].clone()).collect()
    }

    pub fn contains_subset(&self, s: Subset) -> bool {
        s.is_subset_of(self.full())
    }

    /// The same ground restricted to the positions of `s`, in order.
    pub fn restrict(&self, s: Subset) -> Result<GroundSet> {
        GroundSet::new(self.labels_of(s))
    }
}

/// An integral connective structure on a finite ground set.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "StructureJson", try_from = "StructureJson")]
pub struct ConnectiveStructure {
    ground: GroundSet,
    connected: BTreeSet<Subset>,
}

/// Closes `family` under unions of intersecting pairs.
fn close_under_unions(family: &mut HashSet<Subset>) {
    let mut list: Vec<Subset> = family.iter().copied().filter(|s| !s.is_empty()).collect();
    let mut i = 0;
    while i < list.len() {
        let a = list[i];
        for j in 0..i {
            let b = list[j];
            if a.intersects(b) {
                let u = a.union(b);
                if family.insert(u) {
                    list.push(u);
                }
            }
        }
        i += 1;
    }
}

impl ConnectiveStructure {
    /// Smallest integral structure containing every generator.
    pub fn generate_integral<I>(ground: GroundSet, generators: I) -> Result<Self>
    where
        I: IntoIterator<Item = Subset>,
    {
        let full = ground.full();
        let mut family: HashSet<Subset> = HashSet::new();
        family.insert(Subset::EMPTY);
        for i in 0..ground.len() {
            family.insert(Subset::singleton(i));
        }
        for g in generators {
            if !g.is_subset_of(full) {
                return Err(Error::domain(format!(
                    "generator {:?} is not a subset of the ground set of size {}",
                    g,
                    ground.len()
                )));
            }
            family.insert(g);
        }
        close_under_unions(&mut family);
        Ok(ConnectiveStructure {
            ground,
            connected: family.into_iter().collect(),
        })
    }

    /// Builds a structure from an explicit family, checking integrality and
    /// the closure axiom.
    pub fn from_connected<I>(ground: GroundSet, connected: I) -> Result<Self>
    where
        I: IntoIterator<Item = Subset>,
    {
        let family: BTreeSet<Subset> = connected.into_iter().collect();
        let s = ConnectiveStructure {
            ground,
            connected: family,
        };
        let full = s.ground.full();
        if s.connected.iter().any(|k| !k.is_subset_of(full)) {
            return Err(Error::domain("connected set outside the ground set"));
        }
        if !s.connected.contains(&Subset::EMPTY)
            || (0..s.ground.len()).any(|i| !s.connected.contains(&Subset::singleton(i)))
        {
            return Err(Error::domain(
                "structure is not integral: the empty set and all singletons must be connected",
            ));
        }
        if let Some((a, b)) = s.closure_violation() {
            return Err(Error::domain(format!(
                "closure axiom violated: {:?} and {:?} intersect but their union is not connected",
                s.ground.labels_of(a),
                s.ground.labels_of(b)
            )));
        }
        Ok(s)
    }

    /// The finest integral structure: only ∅ and singletons.
    pub fn discrete(ground: GroundSet) -> Self {
        Self::generate_integral(ground, std::iter::empty()).expect("no generators")
    }

    /// The coarsest structure: every subset connected.
    pub fn indiscrete(ground: GroundSet) -> Self {
        let connected = ground.full().subsets().collect();
        ConnectiveStructure { ground, connected }
    }

    /// Brunnian structure on `{0, .., n-1}`: the full set is the only
    /// connected part with two or more points.
    pub fn brunnian(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("brunnian structure needs n >= 1"));
        }
        Ok(Self::brunnian_over(GroundSet::numbered(n, 0)?))
    }

    /// Brunnian structure on an arbitrary ground set.
    pub fn brunnian_over(ground: GroundSet) -> Self {
        let full = ground.full();
        Self::generate_integral(ground, [full]).expect("full set is within ground")
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn connected(&self) -> impl Iterator<Item = Subset> + '_ {
        self.connected.iter().copied()
    }

    /// Connected sets in canonical order.
    pub fn connected_canonical(&self) -> Vec<Subset> {
        let mut v: Vec<Subset> = self.connected.iter().copied().collect();
        canonical_sort(&mut v);
        v
    }

    /// Connected parts with at least two points.
    pub fn non_trivial(&self) -> impl Iterator<Item = Subset> + '_ {
        self.connected.iter().copied().filter(|s| s.len() >= 2)
    }

    pub fn len(&self) -> usize {
        self.connected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.connected.is_empty()
    }

    pub fn is_connected_set(&self, s: Subset) -> bool {
        self.connected.contains(&s)
    }

    pub fn is_discrete(&self) -> bool {
        self.non_trivial().next().is_none()
    }

    /// `self ⊆ other` as families (self is finer).
    pub fn is_finer_than(&self, other: &ConnectiveStructure) -> bool {
        self.connected.is_subset(&other.connected)
    }

    /// Equality of the connected families by ground position, ignoring labels.
    pub fn same_connectivity(&self, other: &ConnectiveStructure) -> bool {
        self.ground.len() == other.ground.len() && self.connected == other.connected
    }

    /// First pair violating the closure axiom, if any.
    pub fn closure_violation(&self) -> Option<(Subset, Subset)> {
        let members: Vec<Subset> = self.connected.iter().copied().collect();
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[..i] {
                if a.intersects(b) && !self.connected.contains(&a.union(b)) {
                    return Some((a, b));
                }
            }
        }
        None
    }

    pub fn satisfies_closure_axiom(&self) -> bool {
        self.closure_violation().is_none()
    }

    /// Connected parts not generated by the others (generic points).
    ///
    /// A union only grows, so `K` can only be regenerated from connected
    /// parts strictly inside it.
    pub fn irreducibles(&self) -> Vec<Subset> {
        let mut out: Vec<Subset> = self
            .non_trivial()
            .filter(|&k| {
                let mut inner: HashSet<Subset> = self
                    .connected
                    .iter()
                    .copied()
                    .filter(|&s| !s.is_empty() && s != k && s.is_subset_of(k))
                    .collect();
                close_under_unions(&mut inner);
                !inner.contains(&k)
            })
            .collect();
        canonical_sort(&mut out);
        out
    }

    /// Height of the inclusion order on irreducibles, counted in nodes.
    pub fn connective_order(&self) -> usize {
        let irr = self.irreducibles();
        // canonical order lists smaller sets first
        let mut height = vec![0usize; irr.len()];
        for i in 0..irr.len() {
            let below = (0..i)
                .filter(|&j| irr[j] != irr[i] && irr[j].is_subset_of(irr[i]))
                .map(|j| height[j])
                .max()
                .unwrap_or(0);
            height[i] = below + 1;
        }
        height.into_iter().max().unwrap_or(0)
    }

    /// Lattice meet: the intersection of the connected families.
    pub fn meet_structures(structures: &[ConnectiveStructure]) -> Result<Self> {
        let (first, rest) = structures
            .split_first()
            .ok_or_else(|| Error::domain("meet of an empty list of structures"))?;
        let mut out = first.clone();
        for s in rest {
            out.meet_in_place(s)?;
        }
        Ok(out)
    }

    pub fn meet_in_place(&mut self, other: &ConnectiveStructure) -> Result<()> {
        if self.ground != other.ground {
            return Err(Error::domain("cannot meet structures over different ground sets"));
        }
        self.connected.retain(|s| other.connected.contains(s));
        Ok(())
    }

    /// Every integral structure on `ground`, by generating from every family
    /// of subsets with at least two points. Limited to four points.
    pub fn all_integral(ground: GroundSet) -> Result<Vec<ConnectiveStructure>> {
        const MAX_POINTS: usize = 4;
        if ground.len() > MAX_POINTS {
            return Err(Error::Resource {
                what: "enumeration of integral structures".into(),
                required: ground.len() as u128,
                cap: MAX_POINTS as u128,
            });
        }
        let candidates: Vec<Subset> = ground.full().subsets().filter(|s| s.len() >= 2).collect();
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for mask in 0u64..(1 << candidates.len()) {
            let gens = (0..candidates.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| candidates[i]);
            let s = ConnectiveStructure::generate_integral(ground.clone(), gens)?;
            if seen.insert(s.connected.clone()) {
                out.push(s);
            }
        }
        Ok(out)
    }

    /// Same connected family over a new ground set of the same size.
    pub fn relabel(&self, ground: GroundSet) -> Result<Self> {
        if ground.len() != self.ground.len() {
            return Err(Error::domain("relabelling must preserve the ground size"));
        }
        Ok(ConnectiveStructure {
            ground,
            connected: self.connected.clone(),
        })
    }
}

impl fmt::Display for ConnectiveStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, s) in self.connected_canonical().into_iter().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            if s.is_empty() {
                write!(f, "∅")?;
            } else {
                write!(f, "{{{}}}", self.ground.labels_of(s).join(","))?;
            }
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for ConnectiveStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConnectiveStructure{self}")
    }
}

/// JSON form: `{"ground": [..], "connected": [[..], ..]}` in canonical order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StructureJson {
    pub ground: Vec<String>,
    pub connected: Vec<Vec<String>>,
}

impl From<ConnectiveStructure> for StructureJson {
    fn from(s: ConnectiveStructure) -> Self {
        StructureJson {
            ground: s.ground.labels().to_vec(),
            connected: s
                .connected_canonical()
                .into_iter()
                .map(|k| s.ground.labels_of(k))
                .collect(),
        }
    }
}

impl TryFrom<StructureJson> for ConnectiveStructure {
    type Error = Error;

    fn try_from(j: StructureJson) -> Result<Self> {
        let ground = GroundSet::new(j.ground)?;
        let sets = j
            .connected
            .iter()
            .map(|labels| ground.subset_of(labels))
            .collect::<Result<Vec<_>>>()?;
        ConnectiveStructure::from_connected(ground, sets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(k: usize) -> GroundSet {
        GroundSet::numbered(k, 1).unwrap()
    }

    fn set(s: &ConnectiveStructure, labels: &[&str]) -> Subset {
        s.ground().subset_of(labels).unwrap()
    }

    fn family(s: &ConnectiveStructure) -> Vec<Vec<String>> {
        s.connected_canonical()
            .into_iter()
            .map(|k| s.ground().labels_of(k))
            .collect()
    }

    /// Generation by brute force: every union of a sub-family whose
    /// intersection graph is connected.
    fn brute_generate(k: usize, gens: &[Subset]) -> BTreeSet<Subset> {
        let mut base: Vec<Subset> = gens.to_vec();
        base.extend((0..k).map(Subset::singleton));
        let mut out = BTreeSet::new();
        out.insert(Subset::EMPTY);
        for mask in 1u32..(1 << base.len()) {
            let chosen: Vec<Subset> = (0..base.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| base[i])
                .collect();
            // connectivity of the intersection graph
            let mut reached = vec![false; chosen.len()];
            reached[0] = true;
            let mut changed = true;
            while changed {
                changed = false;
                for a in 0..chosen.len() {
                    if !reached[a] {
                        continue;
                    }
                    for b in 0..chosen.len() {
                        if !reached[b] && chosen[a].intersects(chosen[b]) {
                            reached[b] = true;
                            changed = true;
                        }
                    }
                }
            }
            if reached.iter().all(|&r| r) {
                out.insert(chosen.iter().fold(Subset::EMPTY, |u, s| u.union(*s)));
            }
        }
        out
    }

    #[test]
    fn generate_two_overlapping_pairs() {
        let ground = g(3);
        let gens = [
            ground.subset_of(&["1", "2"]).unwrap(),
            ground.subset_of(&["2", "3"]).unwrap(),
        ];
        let s = ConnectiveStructure::generate_integral(ground, gens).unwrap();
        let expected: Vec<Vec<&str>> = vec![
            vec![],
            vec!["1"],
            vec!["2"],
            vec!["3"],
            vec!["1", "2"],
            vec!["2", "3"],
            vec!["1", "2", "3"],
        ];
        assert_eq!(family(&s), expected);
    }

    #[test]
    fn generate_matches_brute_force() {
        let k = 4;
        let all: Vec<Subset> = Subset::full(k).subsets().filter(|s| s.len() >= 2).collect();
        // every family of up to three generators
        for a in 0..all.len() {
            for b in a..all.len() {
                for c in b..all.len() {
                    let gens = [all[a], all[b], all[c]];
                    let s = ConnectiveStructure::generate_integral(g(k), gens).unwrap();
                    assert_eq!(s.connected, brute_generate(k, &gens), "{gens:?}");
                }
            }
        }
    }

    #[test]
    fn borromean_from_full_generator() {
        let ground = GroundSet::numbered(3, 0).unwrap();
        let s = ConnectiveStructure::generate_integral(ground, [Subset::full(3)]).unwrap();
        assert_eq!(s, ConnectiveStructure::brunnian(3).unwrap());
        assert!(!s.is_connected_set(set(&s, &["0", "1"])));
        assert!(s.is_connected_set(set(&s, &["0", "1", "2"])));
        assert_eq!(s.non_trivial().collect::<Vec<_>>(), vec![Subset::full(3)]);
    }

    #[test]
    fn empty_generators_give_discrete() {
        let s = ConnectiveStructure::generate_integral(g(2), []).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.is_discrete());
    }

    #[test]
    fn generator_outside_ground_is_rejected() {
        let err = ConnectiveStructure::generate_integral(g(2), [Subset::from_bits(0b100)]);
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn singletons_always_connected() {
        let s = ConnectiveStructure::brunnian(5).unwrap();
        for i in 0..5 {
            assert!(s.is_connected_set(Subset::singleton(i)));
        }
    }

    #[test]
    fn irreducibles_examples() {
        let b3 = ConnectiveStructure::brunnian(3).unwrap();
        assert_eq!(b3.irreducibles(), vec![Subset::full(3)]);

        let p = ConnectiveStructure::indiscrete(g(3));
        let pairs: Vec<Subset> = p.irreducibles();
        assert_eq!(
            pairs,
            vec![set(&p, &["1", "2"]), set(&p, &["1", "3"]), set(&p, &["2", "3"])]
        );

        let ground = g(3);
        let o2 = ConnectiveStructure::generate_integral(
            ground.clone(),
            [
                ground.subset_of(&["2", "3"]).unwrap(),
                ground.full(),
            ],
        )
        .unwrap();
        assert_eq!(
            o2.irreducibles(),
            vec![set(&o2, &["2", "3"]), set(&o2, &["1", "2", "3"])]
        );
    }

    /// Removal-and-regenerate oracle for irreducibility.
    fn brute_irreducibles(s: &ConnectiveStructure) -> BTreeSet<Subset> {
        s.non_trivial()
            .filter(|&k| {
                let others: Vec<Subset> = s.connected().filter(|&x| x != k).collect();
                let regen =
                    ConnectiveStructure::generate_integral(s.ground().clone(), others).unwrap();
                !regen.is_connected_set(k)
            })
            .collect()
    }

    #[test]
    fn irreducibles_match_oracle_on_all_four_point_structures() {
        for s in ConnectiveStructure::all_integral(g(4)).unwrap() {
            let fast: BTreeSet<Subset> = s.irreducibles().into_iter().collect();
            assert_eq!(fast, brute_irreducibles(&s), "{s}");
        }
    }

    #[test]
    fn connective_orders() {
        assert_eq!(ConnectiveStructure::discrete(g(3)).connective_order(), 0);
        assert_eq!(ConnectiveStructure::brunnian(3).unwrap().connective_order(), 1);
        assert_eq!(ConnectiveStructure::indiscrete(g(3)).connective_order(), 1);
        let ground = g(3);
        let o2 = ConnectiveStructure::generate_integral(
            ground.clone(),
            [ground.subset_of(&["2", "3"]).unwrap(), ground.full()],
        )
        .unwrap();
        assert_eq!(o2.connective_order(), 2);
        for n in 2..8 {
            assert_eq!(ConnectiveStructure::brunnian(n).unwrap().connective_order(), 1);
        }
    }

    #[test]
    fn meet_examples() {
        let b3 = ConnectiveStructure::brunnian(3).unwrap();
        assert_eq!(ConnectiveStructure::meet_structures(std::slice::from_ref(&b3)).unwrap(), b3);
        let p = ConnectiveStructure::indiscrete(GroundSet::numbered(3, 0).unwrap());
        assert_eq!(
            ConnectiveStructure::meet_structures(&[b3.clone(), p]).unwrap(),
            b3
        );
        let ground = g(3);
        let a = ConnectiveStructure::generate_integral(
            ground.clone(),
            [ground.subset_of(&["1", "2"]).unwrap()],
        )
        .unwrap();
        let b = ConnectiveStructure::generate_integral(
            ground.clone(),
            [ground.subset_of(&["2", "3"]).unwrap()],
        )
        .unwrap();
        let m = ConnectiveStructure::meet_structures(&[a, b]).unwrap();
        assert_eq!(m, ConnectiveStructure::discrete(ground));
    }

    #[test]
    fn meet_rejects_mismatched_grounds() {
        let a = ConnectiveStructure::discrete(g(3));
        let b = ConnectiveStructure::discrete(GroundSet::numbered(3, 0).unwrap());
        assert!(ConnectiveStructure::meet_structures(&[a, b]).is_err());
        assert!(ConnectiveStructure::meet_structures(&[]).is_err());
    }

    #[test]
    fn brunnian_examples() {
        assert!(ConnectiveStructure::brunnian(0).is_err());
        let b1 = ConnectiveStructure::brunnian(1).unwrap();
        assert_eq!(b1.len(), 2);
        let b4 = ConnectiveStructure::brunnian(4).unwrap();
        assert_eq!(b4.len(), 6);
        assert_eq!(b4.connective_order(), 1);
    }

    #[test]
    fn json_is_canonical_and_round_trips() {
        let ground = g(3);
        let o2 = ConnectiveStructure::generate_integral(
            ground.clone(),
            [ground.full(), ground.subset_of(&["2", "3"]).unwrap()],
        )
        .unwrap();
        let text = serde_json::to_string(&o2).unwrap();
        assert_eq!(
            text,
            r#"{"ground":["1","2","3"],"connected":[[],["1"],["2"],["3"],["2","3"],["1","2","3"]]}"#
        );
        let back: ConnectiveStructure = serde_json::from_str(&text).unwrap();
        assert_eq!(back, o2);
    }

    #[test]
    fn json_rejects_non_closed_family() {
        let text = r#"{"ground":["1","2","3"],"connected":[[],["1"],["2"],["3"],["1","2"],["2","3"]]}"#;
        assert!(serde_json::from_str::<ConnectiveStructure>(text).is_err());
        let not_integral = r#"{"ground":["1","2"],"connected":[[],["1"]]}"#;
        assert!(serde_json::from_str::<ConnectiveStructure>(not_integral).is_err());
    }

    #[test]
    fn bipartitions_are_unordered_and_complete() {
        let s = Subset::full(4);
        let parts: Vec<_> = s.bipartitions().collect();
        assert_eq!(parts.len(), 7);
        for (a, b) in parts {
            assert!(a.contains(0));
            assert!(!b.is_empty());
            assert_eq!(a.union(b), s);
            assert!(!a.intersects(b));
        }
        assert_eq!(Subset::singleton(2).bipartitions().count(), 0);
    }

    #[test]
    fn twelve_integral_structures_on_three_points() {
        assert_eq!(ConnectiveStructure::all_integral(g(3)).unwrap().len(), 12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn generators(k: usize) -> impl Strategy<Value = Vec<Subset>> {
            prop::collection::vec(1u32..(1 << k), 0..6)
                .prop_map(|v| v.into_iter().map(Subset::from_bits).collect())
        }

        proptest! {
            #[test]
            fn closure_axiom_holds(gens in generators(5)) {
                let s = ConnectiveStructure::generate_integral(g(5), gens).unwrap();
                prop_assert!(s.satisfies_closure_axiom());
            }

            #[test]
            fn generation_is_idempotent(gens in generators(5)) {
                let s = ConnectiveStructure::generate_integral(g(5), gens).unwrap();
                let again = ConnectiveStructure::generate_integral(g(5), s.connected()).unwrap();
                prop_assert_eq!(again, s);
            }

            #[test]
            fn generation_is_monotone(a in generators(5), extra in generators(5)) {
                let small = ConnectiveStructure::generate_integral(g(5), a.clone()).unwrap();
                let big = ConnectiveStructure::generate_integral(
                    g(5),
                    a.into_iter().chain(extra),
                )
                .unwrap();
                prop_assert!(small.is_finer_than(&big));
            }

            #[test]
            fn irreducibles_regenerate(gens in generators(5)) {
                let s = ConnectiveStructure::generate_integral(g(5), gens).unwrap();
                let regen = ConnectiveStructure::generate_integral(g(5), s.irreducibles()).unwrap();
                prop_assert_eq!(regen, s);
            }
        }
    }
}
