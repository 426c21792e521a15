//! Finite families of random variables and their connective structure.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::connective::{ConnectiveStructure, GroundSet, Subset};
use crate::devices::split_key;
use crate::error::{Error, Result};

/// Tolerance for floating probabilities.
pub const FLOAT_TOL: f64 = 1e-12;

/// Largest sample space built by [`realize_structure`], as a power of two.
pub const MAX_REALIZATION_BITS: usize = 20;

type Table<T> = BTreeMap<Vec<usize>, T>;

trait Weight: Clone + Send + Sync {
    fn zero() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn close(&self, other: &Self, tol: f64) -> bool;
}

impl Weight for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn close(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }
}

impl Weight for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn close(&self, other: &Self, tol: f64) -> bool {
        (self - other).abs() <= tol
    }
}

fn marginal<T: Weight>(table: &Table<T>, positions: &[usize]) -> Table<T> {
    let mut out: Table<T> = BTreeMap::new();
    for (key, p) in table {
        let k: Vec<usize> = positions.iter().map(|&i| key[i]).collect();
        let slot = out.entry(k).or_insert_with(T::zero);
        *slot = slot.add(p);
    }
    out
}

fn independent<T: Weight>(table: &Table<T>, a: &[usize], b: &[usize], tol: f64) -> bool {
    let ab: Vec<usize> = a.iter().chain(b).copied().collect();
    let joint = marginal(table, &ab);
    let ma = marginal(table, a);
    let mb = marginal(table, b);
    let zero = T::zero();
    ma.iter().all(|(ka, pa)| {
        mb.iter().all(|(kb, pb)| {
            let key: Vec<usize> = ka.iter().chain(kb).copied().collect();
            joint.get(&key).unwrap_or(&zero).close(&pa.mul(pb), tol)
        })
    })
}

/// Probabilities, exact when the input was rational and summed to one.
#[derive(Clone, Debug, PartialEq)]
pub enum Probabilities {
    Exact(Table<BigRational>),
    Approx(Table<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteJointDistribution {
    outcomes: Vec<Vec<String>>,
    probs: Probabilities,
}

impl FiniteJointDistribution {
    /// Exact distribution; zero entries are dropped.
    pub fn exact(outcomes: Vec<Vec<String>>, probs: Table<BigRational>) -> Result<Self> {
        check_outcomes(&outcomes, probs.keys())?;
        if probs.values().any(Signed::is_negative) {
            return Err(Error::domain("probabilities must be nonnegative"));
        }
        let total: BigRational = probs.values().sum();
        if !total.is_one() {
            return Err(Error::domain(format!("probabilities sum to {total}, not 1")));
        }
        let probs: Table<BigRational> = probs.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        Ok(FiniteJointDistribution {
            outcomes,
            probs: Probabilities::Exact(probs),
        })
    }

    /// Floating distribution; must sum to one within [`FLOAT_TOL`].
    pub fn approx(outcomes: Vec<Vec<String>>, probs: Table<f64>) -> Result<Self> {
        check_outcomes(&outcomes, probs.keys())?;
        if probs.values().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::domain("probabilities must be finite and nonnegative"));
        }
        let total: f64 = probs.values().sum();
        if (total - 1.0).abs() > FLOAT_TOL {
            return Err(Error::domain(format!("probabilities sum to {total}, not 1")));
        }
        let probs: Table<f64> = probs.into_iter().filter(|(_, p)| *p > 0.0).collect();
        Ok(FiniteJointDistribution {
            outcomes,
            probs: Probabilities::Approx(probs),
        })
    }

    /// Uniform distribution over the listed outcome tuples.
    pub fn uniform(outcomes: Vec<Vec<String>>, support: impl IntoIterator<Item = Vec<usize>>) -> Result<Self> {
        let support: BTreeSet<Vec<usize>> = support.into_iter().collect();
        let n = BigInt::from(support.len());
        if support.is_empty() {
            return Err(Error::domain("empty support"));
        }
        let p = BigRational::new(BigInt::one(), n);
        Self::exact(outcomes, support.into_iter().map(|k| (k, p.clone())).collect())
    }

    pub fn num_variables(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcomes(&self) -> &[Vec<String>] {
        &self.outcomes
    }

    pub fn probabilities(&self) -> &Probabilities {
        &self.probs
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.probs, Probabilities::Exact(_))
    }

    pub fn support_size(&self) -> usize {
        match &self.probs {
            Probabilities::Exact(t) => t.len(),
            Probabilities::Approx(t) => t.len(),
        }
    }

    /// Variables labelled `1..=k`.
    pub fn ground(&self) -> GroundSet {
        GroundSet::numbered(self.num_variables(), 1).expect("at least one variable")
    }

    /// Joint law of the variables in `j`, in index order.
    pub fn marginal(&self, j: Subset) -> Result<FiniteJointDistribution> {
        self.check_subset(j)?;
        let pos: Vec<usize> = j.iter().collect();
        let outcomes = pos.iter().map(|&i| self.outcomes[i].clone()).collect();
        let probs = match &self.probs {
            Probabilities::Exact(t) => Probabilities::Exact(marginal(t, &pos)),
            Probabilities::Approx(t) => Probabilities::Approx(marginal(t, &pos)),
        };
        Ok(FiniteJointDistribution { outcomes, probs })
    }

    fn check_subset(&self, j: Subset) -> Result<()> {
        if j.is_empty() || !j.is_subset_of(Subset::full(self.num_variables())) {
            return Err(Error::domain("expected a nonempty set of variable indices"));
        }
        Ok(())
    }

    /// Whether `(X_j)_{j∈J₁}` and `(X_j)_{j∈J₂}` are independent.
    pub fn is_separable_split(&self, j1: Subset, j2: Subset, tol: f64) -> Result<bool> {
        self.check_subset(j1)?;
        self.check_subset(j2)?;
        if j1.intersects(j2) {
            return Err(Error::domain("the two parts of a split must be disjoint"));
        }
        let a: Vec<usize> = j1.iter().collect();
        let b: Vec<usize> = j2.iter().collect();
        Ok(match &self.probs {
            Probabilities::Exact(t) => independent(t, &a, &b, tol),
            Probabilities::Approx(t) => independent(t, &a, &b, tol),
        })
    }

    /// Whether no split of `j` into two independent parts exists.
    pub fn is_non_separable(&self, j: Subset, tol: f64) -> Result<bool> {
        for (a, b) in j.bipartitions() {
            if self.is_separable_split(a, b, tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn check_outcomes<'a>(outcomes: &[Vec<String>], keys: impl Iterator<Item = &'a Vec<usize>>) -> Result<()> {
    if outcomes.is_empty() {
        return Err(Error::domain("a family needs at least one variable"));
    }
    for (i, labels) in outcomes.iter().enumerate() {
        let distinct: BTreeSet<&String> = labels.iter().collect();
        if labels.is_empty() || distinct.len() != labels.len() {
            return Err(Error::domain(format!(
                "outcomes of variable {} must be nonempty and distinct",
                i + 1
            )));
        }
    }
    let mut any = false;
    for key in keys {
        any = true;
        if key.len() != outcomes.len() || key.iter().zip(outcomes).any(|(&x, o)| x >= o.len()) {
            return Err(Error::domain("outcome tuple does not match the outcome sets"));
        }
    }
    if !any {
        return Err(Error::domain("empty support"));
    }
    Ok(())
}

/// Connective structure of a family, with the non-separable generators.
#[derive(Clone, Debug)]
pub struct RvStructure {
    pub structure: ConnectiveStructure,
    /// Subsets with at least two variables admitting no independent split.
    pub non_separable: Vec<Subset>,
    /// Whether `{∅} ∪ singletons ∪ non_separable` was already a structure.
    pub raw_closed: bool,
}

pub fn rv_structure(dist: &FiniteJointDistribution, tol: f64) -> Result<RvStructure> {
    let k = dist.num_variables();
    let candidates: Vec<Subset> = Subset::full(k).subsets().filter(|j| j.len() >= 2).collect();
    let flags: Vec<bool> = candidates
        .par_iter()
        .map(|&j| dist.is_non_separable(j, tol))
        .collect::<Result<_>>()?;
    let mut non_separable: Vec<Subset> = candidates
        .into_iter()
        .zip(flags)
        .filter_map(|(j, f)| f.then_some(j))
        .collect();
    crate::connective::canonical_sort(&mut non_separable);
    let ground = dist.ground();
    let structure = ConnectiveStructure::generate_integral(ground, non_separable.iter().copied())?;
    let raw: BTreeSet<Subset> = std::iter::once(Subset::EMPTY)
        .chain((0..k).map(Subset::singleton))
        .chain(non_separable.iter().copied())
        .collect();
    let raw_closed = structure.connected().collect::<BTreeSet<_>>() == raw;
    Ok(RvStructure {
        structure,
        non_separable,
        raw_closed,
    })
}

/// `k` independent uniform variables on `ℤ/n` followed by their sum mod `n`.
pub fn brunnian_family(k: usize, n: usize) -> Result<FiniteJointDistribution> {
    if k == 0 || n < 2 {
        return Err(Error::domain("brunnian family needs k ≥ 1 and n ≥ 2"));
    }
    let size = (n as u128).checked_pow(k as u32).filter(|&s| s <= 1 << MAX_REALIZATION_BITS);
    let size = size.ok_or_else(|| Error::Resource {
        what: "brunnian sample space".into(),
        required: (n as u128).saturating_pow(k as u32),
        cap: 1 << MAX_REALIZATION_BITS,
    })? as usize;
    let labels: Vec<String> = (0..n).map(|v| v.to_string()).collect();
    let support = (0..size).map(|mut w| {
        let mut key = vec![0; k + 1];
        for slot in key[..k].iter_mut().rev() {
            *slot = w % n;
            w /= n;
        }
        key[k] = key[..k].iter().sum::<usize>() % n;
        key
    });
    FiniteJointDistribution::uniform(vec![labels; k + 1], support)
}

/// A family whose connective structure is `kappa`: one independent
/// brunnian mod-2 family per irreducible part, each variable being the
/// vector of its components; variables in no irreducible part get a private
/// fair bit.
pub fn realize_structure(kappa: &ConnectiveStructure) -> Result<FiniteJointDistribution> {
    let k = kappa.ground().len();
    let irreducibles = kappa.irreducibles();
    // components[i] lists (free bit index or parity of a block) per variable
    enum Component {
        Bit(usize),
        Parity(Vec<usize>),
    }
    let mut components: Vec<Vec<Component>> = (0..k).map(|_| Vec::new()).collect();
    let mut bits = 0usize;
    for irr in &irreducibles {
        let members: Vec<usize> = irr.iter().collect();
        let (last, free) = members.split_last().expect("irreducible parts are nonempty");
        let block: Vec<usize> = (bits..bits + free.len()).collect();
        for (&m, &b) in free.iter().zip(&block) {
            components[m].push(Component::Bit(b));
        }
        components[*last].push(Component::Parity(block.clone()));
        bits += free.len();
    }
    for comps in components.iter_mut() {
        if comps.is_empty() {
            comps.push(Component::Bit(bits));
            bits += 1;
        }
    }
    if bits > MAX_REALIZATION_BITS {
        return Err(Error::Resource {
            what: "realization sample space (fair bits)".into(),
            required: 1u128 << bits.min(127),
            cap: 1 << MAX_REALIZATION_BITS,
        });
    }
    let outcomes: Vec<Vec<String>> = components
        .iter()
        .map(|c| {
            (0..1usize << c.len())
                .map(|v| format!("{v:0width$b}", width = c.len()))
                .collect()
        })
        .collect();
    let support = (0..1usize << bits).map(|w| {
        let bit = |b: usize| (w >> b) & 1;
        components
            .iter()
            .map(|comps| {
                comps.iter().fold(0usize, |acc, c| {
                    let v = match c {
                        Component::Bit(b) => bit(*b),
                        Component::Parity(block) => block.iter().map(|&b| bit(b)).sum::<usize>() % 2,
                    };
                    acc * 2 + v
                })
            })
            .collect::<Vec<usize>>()
    });
    FiniteJointDistribution::uniform(outcomes, support)
}

/// Exact value of a decimal or `p/q` string.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let t = text.trim();
    if let Some((num, den)) = t.split_once('/') {
        let n: BigInt = num.trim().parse().ok()?;
        let d: BigInt = den.trim().parse().ok()?;
        return (!d.is_zero()).then(|| BigRational::new(n, d));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if frac.chars().any(|c| !c.is_ascii_digit()) || (int.is_empty() && frac.is_empty()) {
        return None;
    }
    let digits = format!("{}{}", if int.is_empty() || int == "-" || int == "+" { format!("{int}0") } else { int.to_string() }, frac);
    let n: BigInt = digits.parse().ok()?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    Some(if scale >= 0 {
        BigRational::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(n, num_traits::pow(ten, (-scale) as usize))
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistributionJson {
    pub outcomes: Vec<Vec<String>>,
    pub prob: BTreeMap<String, Value>,
}

impl TryFrom<DistributionJson> for FiniteJointDistribution {
    type Error = Error;

    fn try_from(j: DistributionJson) -> Result<Self> {
        let mut exact: Table<BigRational> = BTreeMap::new();
        let mut approx: Table<f64> = BTreeMap::new();
        let mut all_rational = true;
        for (key, v) in &j.prob {
            let k = split_key(key, &j.outcomes)?;
            let text = match v {
                Value::String(s) => s.clone(),
                Value::Number(n) => n.to_string(),
                _ => return Err(Error::parse(format!("probability of '{key}' must be a number or string"))),
            };
            let q = parse_rational(&text);
            let f = match &q {
                Some(q) => q.to_f64().unwrap_or(f64::NAN),
                None => text
                    .parse::<f64>()
                    .map_err(|_| Error::parse(format!("cannot read probability '{text}'")))?,
            };
            if exact.contains_key(&k) {
                return Err(Error::parse(format!("outcome '{key}' listed twice")));
            }
            match q {
                Some(q) => {
                    exact.insert(k.clone(), q);
                }
                None => all_rational = false,
            }
            approx.insert(k, f);
        }
        let sums_to_one = all_rational && exact.values().sum::<BigRational>().is_one();
        if sums_to_one {
            FiniteJointDistribution::exact(j.outcomes, exact)
        } else {
            FiniteJointDistribution::approx(j.outcomes, approx)
        }
    }
}

impl From<&FiniteJointDistribution> for DistributionJson {
    fn from(d: &FiniteJointDistribution) -> Self {
        let key = |k: &Vec<usize>| -> String {
            k.iter().enumerate().map(|(i, &x)| d.outcomes[i][x].as_str()).collect()
        };
        let prob = match &d.probs {
            Probabilities::Exact(t) => t.iter().map(|(k, p)| (key(k), Value::String(p.to_string()))).collect(),
            Probabilities::Approx(t) => t.iter().map(|(k, p)| (key(k), Value::from(*p))).collect(),
        };
        DistributionJson {
            outcomes: d.outcomes.clone(),
            prob,
        }
    }
}

impl Serialize for FiniteJointDistribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DistributionJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteJointDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        FiniteJointDistribution::try_from(DistributionJson::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}
