//! Mode sets, multi-indices, truncations and the (α, β) index families.

use std::collections::{BTreeMap, HashMap};

use crate::error::{invalid, Error, Result};

pub type ModeId = u32;

/// Strictly increasing list of mode ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ModeSet(Vec<ModeId>);

impl ModeSet {
    pub fn new(mut ids: Vec<ModeId>) -> Result<Self> {
        let n = ids.len();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != n {
            return invalid("duplicate mode id");
        }
        Ok(ModeSet(ids))
    }

    /// Modes `0..n`.
    pub fn range(n: u32) -> Self {
        ModeSet((0..n).collect())
    }

    pub fn empty() -> Self {
        ModeSet(Vec::new())
    }

    pub fn ids(&self) -> &[ModeId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: ModeId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn position(&self, id: ModeId) -> Option<usize> {
        self.0.binary_search(&id).ok()
    }

    pub fn is_subset(&self, other: &ModeSet) -> bool {
        self.0.iter().all(|&j| other.contains(j))
    }

    pub fn union(&self, other: &ModeSet) -> ModeSet {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        v.sort_unstable();
        v.dedup();
        ModeSet(v)
    }

    pub fn intersection(&self, other: &ModeSet) -> ModeSet {
        ModeSet(self.0.iter().copied().filter(|&j| other.contains(j)).collect())
    }

    /// `self ∖ other`.
    pub fn minus(&self, other: &ModeSet) -> ModeSet {
        ModeSet(self.0.iter().copied().filter(|&j| !other.contains(j)).collect())
    }

    /// Complement inside an ambient set; errors when `self` is not contained in it.
    pub fn complement_in(&self, ambient: &ModeSet) -> Result<ModeSet> {
        if !self.is_subset(ambient) {
            return invalid("mode set is not contained in the ambient set");
        }
        Ok(ambient.minus(self))
    }

    /// All subsets, ordered by bitmask.
    pub fn subsets(&self) -> Vec<ModeSet> {
        let n = self.0.len();
        assert!(n < 20, "too many modes to list subsets");
        (0u32..(1 << n))
            .map(|mask| {
                ModeSet(
                    (0..n)
                        .filter(|&k| mask & (1 << k) != 0)
                        .map(|k| self.0[k])
                        .collect(),
                )
            })
            .collect()
    }
}

/// Finitely supported map from mode ids to nonnegative integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct MultiIndex(BTreeMap<ModeId, u32>);

impl MultiIndex {
    pub fn zero() -> Self {
        MultiIndex(BTreeMap::new())
    }

    pub fn from_pairs(pairs: &[(ModeId, u32)]) -> Self {
        let mut m = BTreeMap::new();
        for &(j, k) in pairs {
            if k > 0 {
                *m.entry(j).or_insert(0) += k;
            }
        }
        MultiIndex(m)
    }

    /// Builds from dense entries aligned with `modes`.
    pub fn from_dense(modes: &ModeSet, entries: &[u32]) -> Self {
        assert_eq!(modes.len(), entries.len());
        MultiIndex(
            modes
                .ids()
                .iter()
                .zip(entries)
                .filter(|(_, &k)| k > 0)
                .map(|(&j, &k)| (j, k))
                .collect(),
        )
    }

    pub fn unit(j: ModeId) -> Self {
        MultiIndex::from_pairs(&[(j, 1)])
    }

    pub fn get(&self, j: ModeId) -> u32 {
        self.0.get(&j).copied().unwrap_or(0)
    }

    pub fn support(&self) -> ModeSet {
        ModeSet(self.0.keys().copied().collect())
    }

    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn entries(&self) -> impl Iterator<Item = (ModeId, u32)> + '_ {
        self.0.iter().map(|(&j, &k)| (j, k))
    }

    pub fn dense(&self, modes: &ModeSet) -> Vec<u32> {
        modes.ids().iter().map(|&j| self.get(j)).collect()
    }

    /// α!; errors once the product leaves the finite f64 range.
    pub fn factorial(&self) -> Result<f64> {
        let mut p = 1.0;
        for (_, k) in self.entries() {
            p *= factorial(k)?;
        }
        if !p.is_finite() {
            return Err(Error::Overflow("multi-index factorial".into()));
        }
        Ok(p)
    }

    /// ln α!, usable when `factorial` overflows.
    pub fn ln_factorial(&self) -> f64 {
        self.entries().map(|(_, k)| ln_factorial(k)).sum()
    }

    /// c_α = (α!)^{-1/2}.
    pub fn normalizer(&self) -> f64 {
        (-0.5 * self.ln_factorial()).exp()
    }
}

pub fn factorial(n: u32) -> Result<f64> {
    if n > 170 {
        return Err(Error::Overflow(format!("{n}! is not representable")));
    }
    Ok((1..=n).fold(1.0, |p, k| p * k as f64))
}

pub fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Truncation of the multi-index set: per-mode cap and total-degree cap.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Truncation {
    pub modes: ModeSet,
    pub per_mode_cap: u32,
    pub total_degree_cap: u32,
}

impl Truncation {
    pub fn new(modes: ModeSet, per_mode_cap: u32, total_degree_cap: u32) -> Self {
        Truncation {
            modes,
            per_mode_cap,
            total_degree_cap,
        }
    }

    /// Box truncation: only the per-mode cap binds.
    pub fn boxed(modes: ModeSet, cap: u32) -> Self {
        let total = cap * modes.len() as u32;
        Truncation::new(modes, cap, total)
    }

    pub fn contains(&self, dense: &[u32]) -> bool {
        dense.iter().all(|&k| k <= self.per_mode_cap)
            && dense.iter().sum::<u32>() <= self.total_degree_cap
    }

    /// The same shape with every cap raised by `pad`.
    pub fn padded(&self, pad: u32) -> Truncation {
        Truncation::new(
            self.modes.clone(),
            self.per_mode_cap + pad,
            self.total_degree_cap + pad,
        )
    }

    pub fn basis(&self) -> Basis {
        Basis::new(self.clone())
    }
}

/// Graded order: total degree first, then larger entries on earlier modes first.
fn graded_cmp(a: &[u32], b: &[u32]) -> std::cmp::Ordering {
    let (da, db) = (a.iter().sum::<u32>(), b.iter().sum::<u32>());
    da.cmp(&db).then_with(|| b.cmp(a))
}

pub fn enumerate_multiindices(t: &Truncation) -> Vec<MultiIndex> {
    enumerate_dense(t)
        .iter()
        .map(|d| MultiIndex::from_dense(&t.modes, d))
        .collect()
}

fn enumerate_dense(t: &Truncation) -> Vec<Vec<u32>> {
    let n = t.modes.len();
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn rec(k: usize, left: u32, cap: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if k == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..=cap.min(left) {
            cur[k] = v;
            rec(k + 1, left - v, cap, cur, out);
        }
        cur[k] = 0;
    }
    rec(0, t.total_degree_cap, t.per_mode_cap, &mut cur, &mut out);
    out.sort_by(|a, b| graded_cmp(a, b));
    out
}

/// Enumerated truncation with dense indices and a reverse lookup.
#[derive(Debug, Clone)]
pub struct Basis {
    pub truncation: Truncation,
    dense: Vec<Vec<u32>>,
    lookup: HashMap<Vec<u32>, usize>,
}

impl Basis {
    pub fn new(truncation: Truncation) -> Self {
        let dense = enumerate_dense(&truncation);
        let lookup = dense
            .iter()
            .enumerate()
            .map(|(i, d)| (d.clone(), i))
            .collect();
        Basis {
            truncation,
            dense,
            lookup,
        }
    }

    pub fn len(&self) -> usize {
        self.dense.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dense.is_empty()
    }

    pub fn modes(&self) -> &ModeSet {
        &self.truncation.modes
    }

    pub fn dense(&self, i: usize) -> &[u32] {
        &self.dense[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.dense.iter().map(|d| d.as_slice())
    }

    pub fn index_of(&self, dense: &[u32]) -> Option<usize> {
        self.lookup.get(dense).copied()
    }

    pub fn index_of_multi(&self, alpha: &MultiIndex) -> Option<usize> {
        if !alpha.support().is_subset(self.modes()) {
            return None;
        }
        self.index_of(&alpha.dense(self.modes()))
    }

    pub fn multi(&self, i: usize) -> MultiIndex {
        MultiIndex::from_dense(self.modes(), &self.dense[i])
    }

    /// Index of α ± δ_k (k is a position in `modes`), if it stays in the truncation.
    pub fn shifted(&self, i: usize, k: usize, up: bool) -> Option<usize> {
        let mut d = self.dense[i].clone();
        if up {
            d[k] += 1;
        } else {
            if d[k] == 0 {
                return None;
            }
            d[k] -= 1;
        }
        self.index_of(&d)
    }
}

/// Which (α, β) family over a mode set E.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexFamily {
    /// I_m(E) = {0..m}^{2|E|}.
    Full(u32),
    /// α_j + β_j ≥ 1 for every j, entries ≤ 2.
    Tilde2,
    /// α_j + β_j ≥ 2 for every j, entries ≤ 4.
    Tilde4,
}

impl IndexFamily {
    pub fn full(m: u32) -> Result<Self> {
        match m {
            1 | 2 | 4 => Ok(IndexFamily::Full(m)),
            _ => Err(Error::Unsupported(format!("index family order {m}"))),
        }
    }

    pub fn tilde(m: u32) -> Result<Self> {
        match m {
            2 => Ok(IndexFamily::Tilde2),
            4 => Ok(IndexFamily::Tilde4),
            _ => Err(Error::Unsupported(format!("tilde index family order {m}"))),
        }
    }

    pub fn cap(&self) -> u32 {
        match *self {
            IndexFamily::Full(m) => m,
            IndexFamily::Tilde2 => 2,
            IndexFamily::Tilde4 => 4,
        }
    }

    fn lower(&self) -> u32 {
        match self {
            IndexFamily::Full(_) => 0,
            IndexFamily::Tilde2 => 1,
            IndexFamily::Tilde4 => 2,
        }
    }

    /// Dense (α, β) pairs over `n` modes, in lexicographic order.
    pub fn pairs(&self, n: usize) -> Vec<(Vec<u32>, Vec<u32>)> {
        let cap = self.cap();
        let lower = self.lower();
        let per_mode: Vec<(u32, u32)> = (0..=cap)
            .flat_map(|a| (0..=cap).map(move |b| (a, b)))
            .filter(|&(a, b)| a + b >= lower)
            .collect();
        let mut out = Vec::new();
        let mut choice = vec![0usize; n];
        loop {
            let alpha = choice.iter().map(|&c| per_mode[c].0).collect();
            let beta = choice.iter().map(|&c| per_mode[c].1).collect();
            out.push((alpha, beta));
            let mut k = n;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                choice[k] += 1;
                if choice[k] < per_mode.len() {
                    break;
                }
                choice[k] = 0;
            }
        }
    }
}

/// The index family over E, after checking the order.
pub fn index_families(e: &ModeSet, m: u32, tilde: bool) -> Result<Vec<(MultiIndex, MultiIndex)>> {
    let fam = if tilde {
        IndexFamily::tilde(m)?
    } else {
        IndexFamily::full(m)?
    };
    Ok(fam
        .pairs(e.len())
        .into_iter()
        .map(|(a, b)| (MultiIndex::from_dense(e, &a), MultiIndex::from_dense(e, &b)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_list(t: &Truncation) -> Vec<Vec<u32>> {
        t.basis().iter().map(|d| d.to_vec()).collect()
    }

    #[test]
    fn one_mode_enumeration() {
        let t = Truncation::new(ModeSet::range(1), 2, 2);
        assert_eq!(dense_list(&t), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn two_mode_enumeration_order() {
        let t = Truncation::new(ModeSet::range(2), 1, 2);
        assert_eq!(
            dense_list(&t),
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]
        );
    }

    #[test]
    fn graded_count_matches_brute_force() {
        let t = Truncation::new(ModeSet::range(2), 3, 2);
        let brute = (0..=3u32)
            .flat_map(|a| (0..=3u32).map(move |b| (a, b)))
            .filter(|(a, b)| a + b <= 2)
            .count();
        assert_eq!(t.basis().len(), brute);
        assert_eq!(brute, 6);
    }

    #[test]
    fn family_sizes() {
        let e = ModeSet::range(1);
        assert_eq!(index_families(&e, 2, false).unwrap().len(), 9);
        assert_eq!(index_families(&e, 2, true).unwrap().len(), 8);
        assert_eq!(index_families(&e, 4, true).unwrap().len(), 22);
        let brute = (0..=4)
            .flat_map(|a| (0..=4).map(move |b| a + b))
            .filter(|&s| s >= 2)
            .count();
        assert_eq!(brute, 22);
        for n in 1..=3u32 {
            for m in [1u32, 2, 4] {
                let e = ModeSet::range(n);
                let len = index_families(&e, m, false).unwrap().len();
                assert_eq!(len, ((m + 1) as usize).pow(2 * n));
            }
        }
        assert!(index_families(&e, 3, false).is_err());
        assert!(index_families(&e, 1, true).is_err());
    }

    #[test]
    fn multiindex_norms() {
        let a = MultiIndex::from_pairs(&[(0, 2), (3, 3)]);
        assert_eq!(a.degree(), 5);
        assert_eq!(a.factorial().unwrap(), 12.0);
        assert_eq!(a.support().ids(), &[0, 3]);
        assert!((a.normalizer() - 12f64.powf(-0.5)).abs() < 1e-15);
        assert!(MultiIndex::from_pairs(&[(0, 171)]).factorial().is_err());
    }

    #[test]
    fn mode_set_ops() {
        let g = ModeSet::range(4);
        let e = ModeSet::new(vec![2, 0]).unwrap();
        assert_eq!(e.ids(), &[0, 2]);
        assert_eq!(e.complement_in(&g).unwrap().ids(), &[1, 3]);
        assert!(ModeSet::new(vec![1, 1]).is_err());
        assert!(ModeSet::new(vec![7]).unwrap().complement_in(&g).is_err());
        assert_eq!(g.subsets().len(), 16);
    }
}
