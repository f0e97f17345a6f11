//! Dynamic programs for the primitive family `H∘`, the dominant family `H•`
//! and the reversed (g-bounded) family `H▲`.
//!
//! Each member is a concatenation of two smaller members with the split
//! chosen to maximize the total step sum:
//!
//! ```text
//! h∘(n) = ConPP(h∘(k), h∘(n-k-1))
//! h•(n) = ConPD(h∘(k), h•(n-k-1))
//! h▲(n) = reverse(h•(n)) = ConGP(h▲(n-k-1), reverse(h∘(k)))
//! ```
//!
//! Tables store only sums and split indices. Schedules are kept as shared
//! construction trees and flattened on request, so a family of size `N`
//! costs O(N) memory.

use std::sync::Arc;

use log::debug;

use crate::error::{Error, Result};
use crate::par::{argmax_first, argmax_last, Execution};
use crate::schedule::{phi_unchecked, psi_unchecked, ConcatOp, ConstructionTree, Kind, Schedule};

/// Relative width of the tie set when choosing the split index.
pub const TIE_TOL: f64 = 1e-12;

/// Range over which the midpoint split is checked against the full DP.
pub const MIDPOINT_GATE: usize = 4096;

/// Relative tolerance of the midpoint gate.
pub const MIDPOINT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Primitive family `H∘`.
    Circ,
    /// Dominant family `H•`.
    Bullet,
    /// Reversed dominant family `H▲` (g-bounded). Shares sums with `Bullet`.
    Triangle,
}

impl Family {
    pub fn kind(self) -> Kind {
        match self {
            Family::Circ => Kind::Primitive,
            Family::Bullet => Kind::Dominant,
            Family::Triangle => Kind::GBounded,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Circ => "primitive",
            Family::Bullet => "dominant",
            Family::Triangle => "gbounded",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "primitive" | "circ" => Ok(Family::Circ),
            "dominant" | "bullet" => Ok(Family::Bullet),
            "gbounded" | "triangle" => Ok(Family::Triangle),
            other => Err(format!("unknown family `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableOrigin {
    FullDp,
    /// Built with the fixed midpoint split instead of a search over `k`.
    ConjectureAccelerated,
}

/// Sums `r[n] = 1'h(n)` for `n = 0..=N` with the split index that produced
/// each entry. `split[0]` is unused and set to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SumTable {
    family: Family,
    r: Vec<f64>,
    split: Vec<usize>,
    origin: TableOrigin,
}

impl SumTable {
    pub fn family(&self) -> Family {
        self.family
    }

    pub fn origin(&self) -> TableOrigin {
        self.origin
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn split(&self) -> &[usize] {
        &self.split
    }

    /// Largest `n` covered.
    pub fn max_n(&self) -> usize {
        self.r.len() - 1
    }

    pub fn get(&self, n: usize) -> Result<f64> {
        self.r.get(n).copied().ok_or(Error::Range {
            needed: n,
            available: self.max_n(),
        })
    }

    fn relabel(mut self, family: Family) -> Self {
        self.family = family;
        self
    }
}

/// `r∘` by full search. Ties within [`TIE_TOL`] go to the largest `k`.
///
/// The candidate sum is symmetric under `k <-> n-1-k` bit-for-bit, so only
/// the lower half is searched and the mirror of its first maximizer is taken.
fn circ_table(n_max: usize, exec: Execution) -> SumTable {
    let mut r = Vec::with_capacity(n_max + 1);
    let mut split = Vec::with_capacity(n_max + 1);
    r.push(0.0);
    split.push(0);
    for n in 1..=n_max {
        let prev = &r[..n];
        let half = n.div_ceil(2);
        let (k_first, val, _, ties) = argmax_first(half, TIE_TOL, exec, |k| {
            let (x, y) = (prev[k], prev[n - 1 - k]);
            (x + y) + phi_unchecked(x, y)
        });
        if ties > 1 {
            debug!("circ n={n}: {ties} near-maximal splits in the lower half");
        }
        r.push(val);
        split.push(n - 1 - k_first);
    }
    SumTable {
        family: Family::Circ,
        r,
        split,
        origin: TableOrigin::FullDp,
    }
}

fn bullet_table(circ: &SumTable, exec: Execution) -> SumTable {
    let n_max = circ.max_n();
    let rc = circ.r();
    let mut b = Vec::with_capacity(n_max + 1);
    let mut split = Vec::with_capacity(n_max + 1);
    b.push(0.0);
    split.push(0);
    for n in 1..=n_max {
        let prev = &b[..n];
        let (k, val, _, ties) = argmax_last(n, TIE_TOL, exec, |k| {
            let (x, y) = (rc[k], prev[n - 1 - k]);
            (x + y) + psi_unchecked(x, y)
        });
        if ties > 1 {
            debug!("bullet n={n}: {ties} near-maximal splits, taking k={k}");
        }
        b.push(val);
        split.push(k);
    }
    SumTable {
        family: Family::Bullet,
        r: b,
        split,
        origin: TableOrigin::FullDp,
    }
}

/// Sum-only recursion in O(N) memory.
pub fn sum_recursion(family: Family, n_max: usize) -> SumTable {
    sum_recursion_with(family, n_max, Execution::default())
}

pub fn sum_recursion_with(family: Family, n_max: usize, exec: Execution) -> SumTable {
    let circ = circ_table(n_max, exec);
    match family {
        Family::Circ => circ,
        Family::Bullet => bullet_table(&circ, exec),
        Family::Triangle => bullet_table(&circ, exec).relabel(Family::Triangle),
    }
}

/// `r∘` using the split `k = floor((n-1)/2)` at every `n`, in O(N) time.
///
/// The table is only returned after it agrees with the full DP to
/// [`MIDPOINT_TOL`] on `n <= min(N, 4096)`.
pub fn midpoint_recursion(n_max: usize) -> Result<SumTable> {
    let gate = sum_recursion(Family::Circ, n_max.min(MIDPOINT_GATE));
    midpoint_recursion_gated(n_max, &gate)
}

/// As [`midpoint_recursion`], checked against a caller-supplied full table
/// that must cover `min(N, 4096)`.
pub fn midpoint_recursion_gated(n_max: usize, full: &SumTable) -> Result<SumTable> {
    let needed = n_max.min(MIDPOINT_GATE);
    if full.family() != Family::Circ || full.origin() != TableOrigin::FullDp {
        return Err(Error::InternalConsistency {
            n: 0,
            detail: "midpoint gate needs a full-DP primitive table".into(),
        });
    }
    if full.max_n() < needed {
        return Err(Error::Range {
            needed,
            available: full.max_n(),
        });
    }
    let table = midpoint_unchecked(n_max);
    for n in 0..=needed {
        let (a, b) = (full.r()[n], table.r[n]);
        if (a - b).abs() > MIDPOINT_TOL * a.abs() {
            return Err(Error::ConjectureViolation {
                n,
                full: a,
                midpoint: b,
            });
        }
    }
    Ok(table)
}

fn midpoint_unchecked(n_max: usize) -> SumTable {
    let mut r = Vec::with_capacity(n_max + 1);
    let mut split = Vec::with_capacity(n_max + 1);
    r.push(0.0);
    split.push(0);
    for n in 1..=n_max {
        let k = (n - 1) / 2;
        let (x, y) = (r[k], r[n - 1 - k]);
        r.push((x + y) + phi_unchecked(x, y));
        split.push(k);
    }
    SumTable {
        family: Family::Circ,
        r,
        split,
        origin: TableOrigin::ConjectureAccelerated,
    }
}

/// A schedule family for `n = 0..=N`: its sum table plus one shared
/// construction tree per member.
#[derive(Debug, Clone)]
pub struct FamilyStore {
    family: Family,
    table: SumTable,
    trees: Vec<Arc<ConstructionTree>>,
}

impl FamilyStore {
    pub fn family(&self) -> Family {
        self.family
    }

    pub fn kind(&self) -> Kind {
        self.family.kind()
    }

    pub fn table(&self) -> &SumTable {
        &self.table
    }

    pub fn max_n(&self) -> usize {
        self.trees.len() - 1
    }

    pub fn tree(&self, n: usize) -> Result<&Arc<ConstructionTree>> {
        self.trees.get(n).ok_or(Error::Range {
            needed: n,
            available: self.max_n(),
        })
    }

    /// Materialized length-`n` member.
    pub fn schedule(&self, n: usize) -> Result<Schedule> {
        let tree = self.tree(n)?.clone();
        Ok(Schedule::from_tree(tree, self.kind()))
    }
}

fn circ_trees(table: &SumTable) -> Vec<Arc<ConstructionTree>> {
    let r = table.r();
    let mut trees = Vec::with_capacity(r.len());
    trees.push(ConstructionTree::leaf());
    for n in 1..r.len() {
        let k = table.split()[n];
        let j = n - 1 - k;
        let joint = phi_unchecked(r[k], r[j]);
        let t =
            ConstructionTree::concat(ConcatOp::ConPP, trees[k].clone(), joint, trees[j].clone());
        trees.push(t);
    }
    trees
}

/// Algorithm PriDP: the primitive family `h∘(0..=N)`.
pub fn pri_dp(n_max: usize) -> FamilyStore {
    pri_dp_with(n_max, Execution::default())
}

pub fn pri_dp_with(n_max: usize, exec: Execution) -> FamilyStore {
    let table = circ_table(n_max, exec);
    let trees = circ_trees(&table);
    FamilyStore {
        family: Family::Circ,
        table,
        trees,
    }
}

/// Both full-DP sum tables in one pass: `(r∘, r•)`.
pub fn dp_tables(n_max: usize, exec: Execution) -> (SumTable, SumTable) {
    let circ = circ_table(n_max, exec);
    let bullet = bullet_table(&circ, exec);
    (circ, bullet)
}

/// Algorithm DomPP: the dominant family `h•(0..=N)`.
pub fn dom_pp(n_max: usize) -> FamilyStore {
    dom_pp_with(n_max, Execution::default())
}

pub fn dom_pp_with(n_max: usize, exec: Execution) -> FamilyStore {
    let (circ, bullet) = dp_tables(n_max, exec);
    dom_pp_from_tables(&circ, bullet)
}

fn dom_pp_from_tables(circ: &SumTable, bullet: SumTable) -> FamilyStore {
    let prim = circ_trees(circ);
    let (rc, rb) = (circ.r(), bullet.r());
    let mut trees = Vec::with_capacity(rb.len());
    trees.push(ConstructionTree::leaf());
    for n in 1..rb.len() {
        let k = bullet.split()[n];
        let j = n - 1 - k;
        let joint = psi_unchecked(rc[k], rb[j]);
        trees.push(ConstructionTree::concat(
            ConcatOp::ConPD,
            prim[k].clone(),
            joint,
            trees[j].clone(),
        ));
    }
    FamilyStore {
        family: Family::Bullet,
        table: bullet,
        trees,
    }
}

/// The g-bounded family `h▲(n) = reverse(h•(n))`.
///
/// Built through the ConGP recursion and checked step-by-step against the
/// reversed dominant family to `1e-12`.
pub fn tri_family(n_max: usize) -> Result<FamilyStore> {
    tri_family_with(n_max, Execution::default())
}

pub fn tri_family_with(n_max: usize, exec: Execution) -> Result<FamilyStore> {
    let (circ, bullet) = dp_tables(n_max, exec);
    let dom = dom_pp_from_tables(&circ, bullet.clone());

    let (rc, rb) = (circ.r(), bullet.r());
    let mut rev_circ: Vec<Arc<ConstructionTree>> = Vec::with_capacity(rc.len());
    rev_circ.push(ConstructionTree::leaf());
    for n in 1..rc.len() {
        let k = circ.split()[n];
        let j = n - 1 - k;
        let joint = phi_unchecked(rc[k], rc[j]);
        let t = ConstructionTree::concat(
            ConcatOp::ConPP,
            rev_circ[j].clone(),
            joint,
            rev_circ[k].clone(),
        );
        rev_circ.push(t);
    }

    let mut trees: Vec<Arc<ConstructionTree>> = Vec::with_capacity(rb.len());
    trees.push(ConstructionTree::leaf());
    for n in 1..rb.len() {
        let k = bullet.split()[n];
        let j = n - 1 - k;
        let joint = psi_unchecked(rc[k], rb[j]);
        trees.push(ConstructionTree::concat(
            ConcatOp::ConGP,
            trees[j].clone(),
            joint,
            rev_circ[k].clone(),
        ));
    }

    for n in 0..=n_max {
        let by_recursion = trees[n].flatten();
        let mut by_reversal = dom.trees[n].flatten();
        by_reversal.reverse();
        if let Some((i, (a, b))) = by_recursion
            .iter()
            .zip(&by_reversal)
            .enumerate()
            .find(|(_, (a, b))| (*a - *b).abs() > 1e-12 * b.abs())
        {
            return Err(Error::InternalConsistency {
                n,
                detail: format!("step {i}: ConGP recursion gives {a}, reversal gives {b}"),
            });
        }
    }

    Ok(FamilyStore {
        family: Family::Triangle,
        table: bullet.relabel(Family::Triangle),
        trees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{certificate_dominant, con_pd, con_pp, reverse};

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn assert_close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-13 * y, "{a:?} vs {b:?}");
        }
    }

    fn rho() -> f64 {
        (1.0 + SQRT2).log2()
    }

    #[test]
    fn small_primitive_members() {
        let store = pri_dp(3);
        assert_eq!(store.schedule(0).unwrap().len(), 0);
        assert!((store.schedule(1).unwrap().steps()[0] - SQRT2).abs() < 1e-15);
        let r = store.table().r();
        assert!((r[2] - 3.015446).abs() < 1e-6);
        assert!((r[3] + 1.0 - (3.0 + 2.0 * SQRT2)).abs() < 1e-12);
    }

    #[test]
    fn small_dominant_members() {
        let store = dom_pp(4);
        assert_eq!(store.schedule(1).unwrap().steps(), &[1.5]);
        let h4 = store.schedule(4).unwrap();
        for (a, b) in h4.steps().iter().zip([1.414214, 1.601232, 3.005144, 1.5]) {
            assert!((a - b).abs() < 1e-6, "{:?}", h4.steps());
        }
        assert_eq!(h4.kind(), Kind::Dominant);
    }

    #[test]
    fn split_zero_on_trivial_sizes() {
        let t = sum_recursion(Family::Circ, 0);
        assert_eq!(t.r(), &[0.0]);
        assert_eq!(t.max_n(), 0);
        assert!(matches!(t.get(1), Err(Error::Range { .. })));
    }

    #[test]
    fn trees_match_table_sums() {
        let circ = pri_dp(200);
        let dom = dom_pp(200);
        let tri = tri_family(200).unwrap();
        for store in [&circ, &dom, &tri] {
            for n in 0..=200 {
                let s = store.schedule(n).unwrap();
                assert_eq!(s.len(), n);
                let r = store.table().r()[n];
                assert!((s.sum() - r).abs() <= 1e-10 * r.max(1.0));
            }
        }
    }

    #[test]
    fn stored_members_follow_their_splits() {
        let circ = pri_dp(40);
        let dom = dom_pp(40);
        for n in 1..=40 {
            let k = circ.table().split()[n];
            let expect = con_pp(
                &circ.schedule(k).unwrap(),
                &circ.schedule(n - 1 - k).unwrap(),
            )
            .unwrap();
            assert_close(circ.schedule(n).unwrap().steps(), expect.steps());

            let k = dom.table().split()[n];
            let expect = con_pd(
                &circ.schedule(k).unwrap(),
                &dom.schedule(n - 1 - k).unwrap(),
            )
            .unwrap();
            assert_close(dom.schedule(n).unwrap().steps(), expect.steps());
        }
    }

    #[test]
    fn triangle_is_reversed_bullet() {
        let dom = dom_pp(64);
        let tri = tri_family(64).unwrap();
        for n in 0..=64 {
            let a = reverse(&dom.schedule(n).unwrap());
            let b = tri.schedule(n).unwrap();
            assert_eq!(a.kind(), b.kind());
            for (x, y) in a.steps().iter().zip(b.steps()) {
                assert!((x - y).abs() <= 1e-12 * y);
            }
        }
        let h5 = tri.schedule(5).unwrap();
        for (a, b) in h5.steps().iter().zip([1.5, 3.557647, SQRT2, 2.0, SQRT2]) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn sequential_and_parallel_tables_identical() {
        for family in [Family::Circ, Family::Bullet] {
            let a = sum_recursion_with(family, 3000, Execution::Sequential);
            let b = sum_recursion_with(family, 3000, Execution::Parallel);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn midpoint_matches_full_dp() {
        let t = midpoint_recursion(2000).unwrap();
        assert_eq!(t.origin(), TableOrigin::ConjectureAccelerated);
        let full = sum_recursion(Family::Circ, 2000);
        assert!((t.r()[5] - full.r()[5]).abs() < 1e-12);
        assert_eq!(t.r()[0], 0.0);
        for l in 1..=10u32 {
            let n = (1usize << l) - 1;
            let target = ((1usize << l) as f64).powf(rho());
            assert!((t.r()[n] + 1.0 - target).abs() <= 1e-9 * target);
        }
    }

    #[test]
    fn midpoint_gate_rejects_short_or_wrong_tables() {
        let short = sum_recursion(Family::Circ, 10);
        assert!(matches!(
            midpoint_recursion_gated(20, &short),
            Err(Error::Range { .. })
        ));
        let bullet = sum_recursion(Family::Bullet, 30);
        assert!(midpoint_recursion_gated(20, &bullet).is_err());
        // a table built by a different rule must trip the gate
        let fake = SumTable {
            r: sum_recursion(Family::Bullet, 30).r().to_vec(),
            ..sum_recursion(Family::Circ, 30)
        };
        assert!(matches!(
            midpoint_recursion_gated(30, &fake),
            Err(Error::ConjectureViolation { n: 1, .. })
        ));
    }

    #[test]
    fn three_equal_sums_at_five() {
        let circ = pri_dp(5);
        let s = |k: usize| {
            con_pp(&circ.schedule(k).unwrap(), &circ.schedule(4 - k).unwrap())
                .unwrap()
                .sum()
        };
        let (a, b, c) = (s(3), s(2), s(1));
        assert!((a - b).abs() < 1e-10 * a && (b - c).abs() < 1e-10 * b);
    }

    #[test]
    fn bullet_certificates_build() {
        let dom = dom_pp(64);
        for n in 0..=64 {
            let c = certificate_dominant(dom.tree(n).unwrap()).unwrap();
            let r = dom.table().r()[n];
            assert!((c.total() - (2.0 * r + 1.0)).abs() <= 1e-10 * (2.0 * r + 1.0));
        }
    }
}
