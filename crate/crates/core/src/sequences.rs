//! Anytime stepsize sequences grown by repeated concatenation with a fixed
//! primitive block, and the literature schedules they reproduce.

use crate::error::{Error, Result};
use crate::schedule::{con_pd, con_pp, phi_unchecked, psi_unchecked, Kind, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DynamicVariant {
    /// `h(k) = ConPP(h(k-1), block)`; primitive.
    PP,
    /// `h(k) = ConGP(h(k-1), block)`; g-bounded.
    GP,
}

/// Incremental generator. Only the running sum and the block are needed to
/// produce the next joint step.
#[derive(Debug, Clone)]
pub struct DynamicSequence {
    variant: DynamicVariant,
    block: Vec<f64>,
    block_sum: f64,
    steps: Vec<f64>,
    sum: f64,
    base_len: usize,
    k: usize,
}

impl DynamicSequence {
    pub fn new(variant: DynamicVariant, base: &Schedule, block: &Schedule) -> Result<Self> {
        let (op, role) = match variant {
            DynamicVariant::PP => ("dynamic_pp", Kind::Primitive),
            DynamicVariant::GP => ("dynamic_gp", Kind::GBounded),
        };
        for (s, role) in [(base, role), (block, Kind::Primitive)] {
            if !s.admits(role) {
                return Err(Error::Classification {
                    op,
                    expected: role.as_str(),
                    found: s.kind(),
                });
            }
        }
        Ok(DynamicSequence {
            variant,
            block: block.steps().to_vec(),
            block_sum: block.sum(),
            steps: base.steps().to_vec(),
            sum: base.sum(),
            base_len: base.len(),
            k: 0,
        })
    }

    /// Appends one `[joint, block]` and returns the joint step.
    pub fn push_block(&mut self) -> f64 {
        let joint = match self.variant {
            DynamicVariant::PP => phi_unchecked(self.sum, self.block_sum),
            DynamicVariant::GP => psi_unchecked(self.block_sum, self.sum),
        };
        self.steps.push(joint);
        self.steps.extend_from_slice(&self.block);
        self.sum = (self.sum + self.block_sum) + joint;
        self.k += 1;
        joint
    }

    pub fn advance(&mut self, blocks: usize) {
        for _ in 0..blocks {
            self.push_block();
        }
    }

    pub fn variant(&self) -> DynamicVariant {
        self.variant
    }

    /// Completed concatenations.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Current length `n_k = n_0 + k (m + 1)`.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn block_len(&self) -> usize {
        self.block.len()
    }

    pub fn base_len(&self) -> usize {
        self.base_len
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    /// Running sum as accumulated by the generator.
    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn kind(&self) -> Kind {
        match self.variant {
            DynamicVariant::PP => Kind::Primitive,
            DynamicVariant::GP => Kind::GBounded,
        }
    }

    pub fn emitted(&self) -> Schedule {
        Schedule::from_parts(self.steps.clone(), self.kind(), None)
    }

    /// `(n_j, 1/(2 sum h(j) + 1))` for `j = 0..=k`.
    pub fn prefix_bounds(&self) -> Vec<(usize, f64)> {
        let stride = self.block.len() + 1;
        let mut out = Vec::with_capacity(self.k + 1);
        let mut s: f64 = self.steps[..self.base_len].iter().sum();
        out.push((self.base_len, 1.0 / (2.0 * s + 1.0)));
        for j in 0..self.k {
            let start = self.base_len + j * stride;
            s += self.steps[start..start + stride].iter().sum::<f64>();
            out.push((start + stride, 1.0 / (2.0 * s + 1.0)));
        }
        out
    }
}

pub fn dynamic_pp(base: &Schedule, block: &Schedule, blocks: usize) -> Result<DynamicSequence> {
    let mut seq = DynamicSequence::new(DynamicVariant::PP, base, block)?;
    seq.advance(blocks);
    Ok(seq)
}

pub fn dynamic_gp(base: &Schedule, block: &Schedule, blocks: usize) -> Result<DynamicSequence> {
    let mut seq = DynamicSequence::new(DynamicVariant::GP, base, block)?;
    seq.advance(blocks);
    Ok(seq)
}

/// `h_i = (-S + sqrt(S^2 + 8S + 8)) / 2` with `S` the sum so far, evaluated
/// as `4(S + 1) / (S + sqrt(S^2 + 8S + 8))`.
pub fn teboulle_vaisbourd(n: usize) -> Schedule {
    let mut steps = Vec::with_capacity(n);
    let mut s = 0.0_f64;
    for _ in 0..n {
        let h = 4.0 * (s + 1.0) / (s + (s * s + 8.0 * s + 8.0).sqrt());
        steps.push(h);
        s += h;
    }
    Schedule::from_parts(steps, Kind::Primitive, None)
}

/// `h_0 = 3/2`, `h_i = (3 - 2h + sqrt(9 - 4h)) / (2(2 - h))` with `h = h_{i-1}`,
/// evaluated as `2h / (sqrt(9 - 4h) + 2h - 3)` since `h -> 2`.
pub fn rotaru(n: usize) -> Schedule {
    let mut steps = Vec::with_capacity(n);
    let mut h = 1.5_f64;
    for i in 0..n {
        if i > 0 {
            h = 2.0 * h / ((9.0 - 4.0 * h).sqrt() + 2.0 * h - 3.0);
        }
        steps.push(h);
    }
    Schedule::from_parts(steps, Kind::GBounded, None)
}

/// Silver schedule of length `2^l - 1`: two copies of `silver(l-1)` joined
/// by ConPP.
pub fn silver(l: u32) -> Schedule {
    let mut h = Schedule::empty();
    for _ in 0..l {
        h = con_pp(&h, &h).expect("silver schedules are primitive");
    }
    h
}

/// Dominant schedule of length `2^l - 1`:
/// `g(l) = ConPD(silver(l-1), g(l-1))`, `g(0) = []`.
pub fn grimmer_recursion(l: u32) -> Schedule {
    let mut g = Schedule::empty();
    let mut s = Schedule::empty();
    for _ in 0..l {
        g = con_pd(&s, &g).expect("silver is primitive and g is dominant");
        s = con_pp(&s, &s).expect("silver schedules are primitive");
    }
    g
}

/// [`grimmer_recursion`] for lengths of the form `2^l - 1`; `None` elsewhere
/// since no such schedule exists.
pub fn grimmer_for_length(n: usize) -> Option<Schedule> {
    let m = n.checked_add(1)?;
    m.is_power_of_two()
        .then(|| grimmer_recursion(m.trailing_zeros()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{con_gp, reverse};

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn bound(h: &Schedule) -> f64 {
        1.0 / (2.0 * h.sum() + 1.0)
    }

    #[test]
    fn dynamic_pp_of_empties_starts_like_teboulle() {
        let e = Schedule::empty();
        let seq = dynamic_pp(&e, &e, 1).unwrap();
        assert_eq!(seq.len(), 1);
        assert!((seq.steps()[0] - SQRT2).abs() < 1e-15);
        let seq = dynamic_pp(&e, &e, 3).unwrap();
        assert!((seq.steps()[1] - 1.601232).abs() < 1e-6);
        assert_eq!(seq.len(), 3);
    }

    #[test]
    fn dynamic_gp_of_empties_starts_like_rotaru() {
        let e = Schedule::empty();
        let seq = dynamic_gp(&e, &e, 2).unwrap();
        assert_eq!(seq.steps()[0], 1.5);
        assert!((seq.steps()[1] - 3f64.sqrt()).abs() < 1e-15);
        assert!((rotaru(2).steps()[1] - seq.steps()[1]).abs() < 1e-15);
    }

    #[test]
    fn zero_blocks_returns_base() {
        let base = Schedule::new(vec![1.5, 3f64.sqrt()], Kind::GBounded).unwrap();
        let seq = dynamic_gp(&base, &Schedule::empty(), 0).unwrap();
        assert_eq!(seq.steps(), base.steps());
        assert_eq!(seq.prefix_bounds(), vec![(2, bound(&base))]);
    }

    #[test]
    fn generator_matches_repeated_concatenation() {
        let block = silver(2);
        let base = silver(1);
        let seq = dynamic_pp(&base, &block, 5).unwrap();
        let mut h = base.clone();
        for _ in 0..5 {
            h = con_pp(&h, &block).unwrap();
        }
        for (a, b) in seq.steps().iter().zip(h.steps()) {
            assert!((a - b).abs() <= 1e-13 * b);
        }

        let gbase = reverse(&grimmer_recursion(2));
        let seq = dynamic_gp(&gbase, &block, 5).unwrap();
        let mut h = gbase.clone();
        for _ in 0..5 {
            h = con_gp(&h, &block).unwrap();
        }
        for (a, b) in seq.steps().iter().zip(h.steps()) {
            assert!((a - b).abs() <= 1e-13 * b);
        }
        assert_eq!(seq.len(), 3 + 5 * 4);
    }

    #[test]
    fn wrong_tags_rejected() {
        let d = Schedule::new(vec![1.5], Kind::Dominant).unwrap();
        assert!(dynamic_pp(&d, &Schedule::empty(), 1).is_err());
        assert!(dynamic_gp(&Schedule::empty(), &d, 1).is_err());
        assert!(dynamic_gp(&d, &Schedule::empty(), 1).is_err());
    }

    #[test]
    fn prefix_bounds_follow_blocks() {
        let seq = dynamic_pp(&Schedule::empty(), &silver(1), 3).unwrap();
        let pb = seq.prefix_bounds();
        assert_eq!(pb.iter().map(|p| p.0).collect::<Vec<_>>(), vec![0, 2, 4, 6]);
        assert_eq!(pb[0].1, 1.0);
        assert!((pb[3].1 - bound(&seq.emitted())).abs() < 1e-15);
    }

    #[test]
    fn teboulle_bounds() {
        assert!((bound(&teboulle_vaisbourd(1)) - 0.261204).abs() < 1e-6);
        assert!((bound(&teboulle_vaisbourd(2)) - 0.142229).abs() < 1e-6);
        assert!((bound(&teboulle_vaisbourd(3)) - 0.095827).abs() < 1e-6);
    }

    #[test]
    fn rotaru_bounds() {
        assert_eq!(bound(&rotaru(1)), 0.25);
        assert!((bound(&rotaru(2)) - 0.133975).abs() < 1e-6);
    }

    #[test]
    fn silver_small() {
        assert!(silver(0).is_empty());
        assert!((silver(1).steps()[0] - SQRT2).abs() < 1e-15);
        let s2 = silver(2);
        assert!((s2.steps()[1] - 2.0).abs() < 1e-15);
        assert!((s2.sum() + 1.0 - (1.0 + SQRT2).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn grimmer_bounds() {
        assert!(grimmer_recursion(0).is_empty());
        assert_eq!(grimmer_recursion(1).steps(), &[1.5]);
        for (l, want) in [(3, 0.032768), (4, 0.013082), (5, 0.005327)] {
            let g = grimmer_recursion(l);
            assert_eq!(g.kind(), Kind::Dominant);
            assert_eq!(g.len(), (1 << l) - 1);
            assert!((bound(&g) - want).abs() < 1e-6);
        }
        assert!(grimmer_for_length(6).is_none());
        assert_eq!(grimmer_for_length(7).unwrap().len(), 7);
        assert!(grimmer_for_length(0).unwrap().is_empty());
    }
}
