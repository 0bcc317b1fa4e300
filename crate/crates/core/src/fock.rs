//! Occupation-number bases at fixed boson cap and total momentum.
//!
//! A state is a multiset of lattice modes, stored internally as its
//! nondecreasing sequence of mode indices. The impurity momentum of a state
//! is implicit: `P_total − Σ n_k k`.

use std::sync::Arc;

use fnv::FnvHashMap;

use crate::error::{Error, Result};
use crate::lattice::{iadd, isub, IVec3, MomentumLattice};

/// Default cap on the number of basis states.
pub const DEFAULT_DIM_CAP: usize = 3_000_000;

/// Public state representation: sorted `(mode index, count)` pairs with
/// every count at least one.
pub type Occupation = Vec<(usize, u32)>;

#[derive(Debug, Clone)]
pub struct SectorBasis {
    lattice: Arc<MomentumLattice>,
    n_max: usize,
    p_total: IVec3,
    modes: Vec<u32>,
    offsets: Vec<usize>,
    boson_momentum: Vec<IVec3>,
    shell_starts: Vec<usize>,
    index: FnvHashMap<Box<[u32]>, u32>,
}

/// Number of multisets of size at most `n_max` drawn from `m` modes.
pub fn sector_dimension(m: usize, n_max: usize) -> u128 {
    let mut total: u128 = 0;
    // C(m + j - 1, j), built incrementally.
    let mut c: u128 = 1;
    for j in 0..=n_max {
        if j > 0 {
            c = c * (m as u128 + j as u128 - 1) / j as u128;
        }
        total += c;
        if m == 0 {
            break;
        }
    }
    total
}

impl SectorBasis {
    pub fn enumerate(lattice: Arc<MomentumLattice>, n_max: usize, p_total: IVec3) -> Result<Self> {
        Self::enumerate_with_cap(lattice, n_max, p_total, DEFAULT_DIM_CAP)
    }

    pub fn enumerate_with_cap(
        lattice: Arc<MomentumLattice>,
        n_max: usize,
        p_total: IVec3,
        cap: usize,
    ) -> Result<Self> {
        let dim = sector_dimension(lattice.len(), n_max);
        if dim > cap as u128 {
            return Err(Error::capacity("sector basis states", dim, cap as u128));
        }
        Self::build(lattice, n_max, p_total, cap, &|_| true)
    }

    /// Enumerates only states whose implicit impurity momentum (integer
    /// units) satisfies `allowed`.
    pub fn enumerate_restricted(
        lattice: Arc<MomentumLattice>,
        n_max: usize,
        p_total: IVec3,
        allowed: &dyn Fn(IVec3) -> bool,
    ) -> Result<Self> {
        Self::build(lattice, n_max, p_total, DEFAULT_DIM_CAP, allowed)
    }

    fn build(
        lattice: Arc<MomentumLattice>,
        n_max: usize,
        p_total: IVec3,
        cap: usize,
        allowed: &dyn Fn(IVec3) -> bool,
    ) -> Result<Self> {
        let m = lattice.len();
        let mut basis = SectorBasis {
            lattice: lattice.clone(),
            n_max,
            p_total,
            modes: Vec::new(),
            offsets: vec![0],
            boson_momentum: Vec::new(),
            shell_starts: Vec::with_capacity(n_max + 2),
            index: FnvHashMap::default(),
        };
        let mut seq: Vec<u32> = Vec::with_capacity(n_max);
        for j in 0..=n_max {
            basis.shell_starts.push(basis.len());
            if j > 0 && m == 0 {
                continue;
            }
            // Nondecreasing sequences of length j in lexicographic order.
            seq.clear();
            seq.resize(j, 0);
            loop {
                let k = seq
                    .iter()
                    .fold([0, 0, 0], |acc, &i| iadd(acc, lattice.point(i as usize)));
                if allowed(isub(p_total, k)) {
                    if basis.len() >= cap {
                        return Err(Error::capacity("sector basis states", basis.len() as u128 + 1, cap as u128));
                    }
                    basis.push(&seq, k);
                }
                // Advance to the next nondecreasing sequence.
                let mut pos = j;
                while pos > 0 && seq[pos - 1] as usize == m - 1 {
                    pos -= 1;
                }
                if pos == 0 {
                    break;
                }
                let v = seq[pos - 1] + 1;
                for s in &mut seq[pos - 1..] {
                    *s = v;
                }
            }
        }
        basis.shell_starts.push(basis.len());
        Ok(basis)
    }

    fn push(&mut self, seq: &[u32], k: IVec3) {
        let id = self.boson_momentum.len() as u32;
        self.modes.extend_from_slice(seq);
        self.offsets.push(self.modes.len());
        self.boson_momentum.push(k);
        self.index.insert(seq.into(), id);
    }

    pub fn lattice(&self) -> &Arc<MomentumLattice> {
        &self.lattice
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn p_total(&self) -> IVec3 {
        self.p_total
    }

    pub fn len(&self) -> usize {
        self.boson_momentum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boson_momentum.is_empty()
    }

    /// Nondecreasing mode sequence of state `i`.
    pub fn modes_of(&self, i: usize) -> &[u32] {
        &self.modes[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn boson_count(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Σ n_k k in integer units.
    pub fn boson_momentum(&self, i: usize) -> IVec3 {
        self.boson_momentum[i]
    }

    /// Implicit impurity momentum in integer units.
    pub fn impurity_momentum(&self, i: usize) -> IVec3 {
        isub(self.p_total, self.boson_momentum[i])
    }

    /// Index range of the states holding exactly `j` bosons.
    pub fn shell(&self, j: usize) -> std::ops::Range<usize> {
        if j > self.n_max {
            return self.len()..self.len();
        }
        self.shell_starts[j]..self.shell_starts[j + 1]
    }

    pub fn state(&self, i: usize) -> Occupation {
        let mut out: Occupation = Vec::new();
        for &m in self.modes_of(i) {
            match out.last_mut() {
                Some((last, c)) if *last == m as usize => *c += 1,
                _ => out.push((m as usize, 1)),
            }
        }
        out
    }

    pub fn state_index(&self, state: &[(usize, u32)]) -> Result<usize> {
        let mut seq = Vec::new();
        let mut prev: Option<usize> = None;
        for &(m, c) in state {
            if m >= self.lattice.len() {
                return Err(Error::Lookup(format!("mode {m} is not on the lattice")));
            }
            if c == 0 || prev.is_some_and(|p| p >= m) {
                return Err(Error::Lookup("occupation must list modes in increasing order with counts >= 1".into()));
            }
            prev = Some(m);
            seq.extend(std::iter::repeat_n(m as u32, c as usize));
        }
        self.index_of_modes(&seq)
            .ok_or_else(|| Error::Lookup(format!("state {state:?} is not in the basis")))
    }

    /// Looks a state up by physical integer momenta instead of mode indices.
    pub fn state_index_by_momenta(&self, state: &[(IVec3, u32)]) -> Result<usize> {
        let mut occ = Vec::with_capacity(state.len());
        for &(n, c) in state {
            let m = self
                .lattice
                .index_of(n)
                .ok_or_else(|| Error::Lookup(format!("momentum {n:?} is off the lattice")))?;
            occ.push((m, c));
        }
        occ.sort_unstable();
        self.state_index(&occ)
    }

    /// Lookup by nondecreasing mode sequence.
    #[inline]
    pub fn index_of_modes(&self, seq: &[u32]) -> Option<usize> {
        self.index.get(seq).map(|&i| i as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::TWO_PI;
    use proptest::prelude::*;

    fn lat(r: f64) -> Arc<MomentumLattice> {
        Arc::new(MomentumLattice::build(TWO_PI * r).unwrap())
    }

    #[test]
    fn small_dimensions() {
        let l = lat(1.0);
        assert_eq!(SectorBasis::enumerate(l.clone(), 0, [0; 3]).unwrap().len(), 1);
        assert_eq!(SectorBasis::enumerate(l.clone(), 1, [0; 3]).unwrap().len(), 7);
        let b = SectorBasis::enumerate(l, 2, [0; 3]).unwrap();
        assert_eq!(b.len(), 28);
        assert_eq!(b.shell(2), 7..28);
        assert_eq!(b.state_index(&[]).unwrap(), 0);
    }

    #[test]
    fn brute_force_multisets() {
        // Independent count: occupation vectors over 6 modes with total <= 2.
        let mut count = 0;
        for a in 0..3u32 {
            for b in 0..3u32 {
                for c in 0..3u32 {
                    for d in 0..3u32 {
                        for e in 0..3u32 {
                            for f in 0..3u32 {
                                if a + b + c + d + e + f <= 2 {
                                    count += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
        assert_eq!(count, 28);
        assert_eq!(sector_dimension(6, 2), 28);
    }

    #[test]
    fn lookup_errors() {
        let b = SectorBasis::enumerate(lat(1.0), 2, [0; 3]).unwrap();
        assert!(matches!(b.state_index(&[(6, 1)]), Err(Error::Lookup(_))));
        assert!(matches!(b.state_index(&[(0, 3)]), Err(Error::Lookup(_))));
        assert!(matches!(b.state_index_by_momenta(&[([2, 0, 0], 1)]), Err(Error::Lookup(_))));
        assert_eq!(b.state_index_by_momenta(&[([1, 0, 0], 2)]).unwrap(), b.state_index(&[(b.lattice().index_of([1, 0, 0]).unwrap(), 2)]).unwrap());
    }

    #[test]
    fn capacity_reports_dimension() {
        match SectorBasis::enumerate_with_cap(lat(2.0), 3, [0; 3], 1000) {
            Err(Error::Capacity { requested, .. }) => assert_eq!(requested, sector_dimension(32, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn enumeration_is_deterministic() {
        let a = SectorBasis::enumerate(lat(1.5), 3, [1, 0, 0]).unwrap();
        let b = SectorBasis::enumerate(lat(1.5), 3, [1, 0, 0]).unwrap();
        assert_eq!(a.modes, b.modes);
        assert_eq!(a.boson_momentum, b.boson_momentum);
    }

    proptest! {
        #[test]
        fn stars_and_bars_and_roundtrip(r in 0.9f64..1.8, n_max in 0usize..4) {
            let l = lat(r);
            let b = SectorBasis::enumerate(l.clone(), n_max, [0; 3]).unwrap();
            prop_assert_eq!(b.len() as u128, sector_dimension(l.len(), n_max));
            for i in 0..b.len() {
                prop_assert!(b.boson_count(i) <= n_max);
                prop_assert_eq!(b.state_index(&b.state(i)).unwrap(), i);
                let k = b.modes_of(i).iter().fold([0, 0, 0], |a, &m| iadd(a, l.point(m as usize)));
                prop_assert_eq!(k, b.boson_momentum(i));
            }
            // Canonical order: by count, then lexicographic.
            for i in 1..b.len() {
                let (x, y) = (b.modes_of(i - 1), b.modes_of(i));
                prop_assert!(x.len() < y.len() || (x.len() == y.len() && x < y));
            }
        }
    }
}
