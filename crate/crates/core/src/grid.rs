//! Multi-index arithmetic for the M-adic square hierarchy: index
//! classification into the three rings, the stopping ledger, and
//! coordinate-to-index conversion.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Demo,
    Strict,
}

/// Grid subdivision factor M and contraction factor r.
///
/// Demo mode permits any odd M >= 5 so exhaustive oracles stay cheap;
/// strict mode additionally requires M >= 78. In both modes r must
/// satisfy 0 < r < M^-3 exactly (rational comparison).
#[derive(Debug, Clone, PartialEq)]
pub struct GridParams {
    m: u32,
    r: BigRational,
    mode: Mode,
}

impl GridParams {
    pub fn new(m: u32, r: BigRational, mode: Mode) -> Result<Self> {
        if m < 5 || m % 2 == 0 {
            return Err(Error::InvalidParams(format!(
                "M must be an odd integer >= 5, got {m}"
            )));
        }
        if mode == Mode::Strict && m < 78 {
            return Err(Error::InvalidParams(format!(
                "strict mode requires M >= 78, got {m}"
            )));
        }
        if r <= BigRational::zero() {
            return Err(Error::InvalidParams("r must be positive".into()));
        }
        let m_cubed = BigInt::from(m).pow(3);
        if r.clone() * m_cubed >= BigRational::one() {
            return Err(Error::InvalidParams(format!(
                "r must be < M^-3 exactly (r = {r}, M = {m})"
            )));
        }
        Ok(GridParams { m, r, mode })
    }

    /// Demo defaults: M = 5, r = 1/126.
    pub fn demo() -> Self {
        GridParams::new(5, BigRational::new(1.into(), 126.into()), Mode::Demo).unwrap()
    }

    /// Strict defaults: M = 79, r = M^-3 / 2.
    pub fn strict() -> Self {
        let m: i64 = 79;
        let r = BigRational::new(1.into(), (2 * m * m * m).into());
        GridParams::new(m as u32, r, Mode::Strict).unwrap()
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn r(&self) -> &BigRational {
        &self.r
    }

    pub fn r_f64(&self) -> f64 {
        self.r.to_f64().unwrap()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }
}

/// The three index rings partitioning {1,...,M}^2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IndexClass {
    Ring1,
    Ring2,
    Center,
}

impl IndexClass {
    pub fn as_str(self) -> &'static str {
        match self {
            IndexClass::Ring1 => "ring1",
            IndexClass::Ring2 => "ring2",
            IndexClass::Center => "center",
        }
    }
}

/// Classifies a 1-based coordinate pair within the M x M grid.
pub fn classify(i: u32, j: u32, m: u32) -> Result<IndexClass> {
    if i < 1 || i > m || j < 1 || j > m {
        return Err(Error::OutOfRange(format!(
            "coordinates ({i},{j}) outside 1..={m}"
        )));
    }
    let edge = |k: u32| k == 1 || k == m;
    let inner_edge = |k: u32| k == 2 || k == m - 1;
    if edge(i) || edge(j) {
        Ok(IndexClass::Ring1)
    } else if inner_edge(i) || inner_edge(j) {
        Ok(IndexClass::Ring2)
    } else {
        Ok(IndexClass::Center)
    }
}

/// J-value of a class: 1 for either ring, 0 for the center.
pub fn j_value(class: IndexClass) -> u32 {
    match class {
        IndexClass::Ring1 | IndexClass::Ring2 => 1,
        IndexClass::Center => 0,
    }
}

/// 0-based digit test equivalent to `j_value(classify(..)) == 1` on one axis:
/// a digit is "ring" when it lies within two cells of either edge.
#[inline]
pub fn digit_is_ring(d: u32, m: u32) -> bool {
    d <= 1 || d >= m - 2
}

/// A level-m address (i_1, j_1, ..., i_m, j_m), 1-based coordinates.
/// The empty address is the unit square.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex {
    pairs: Vec<(u32, u32)>,
}

impl MultiIndex {
    pub fn new(pairs: Vec<(u32, u32)>, m: u32) -> Result<Self> {
        for &(i, j) in &pairs {
            if i < 1 || i > m || j < 1 || j > m {
                return Err(Error::OutOfRange(format!(
                    "index pair ({i},{j}) outside 1..={m}"
                )));
            }
        }
        Ok(MultiIndex { pairs })
    }

    pub fn root() -> Self {
        MultiIndex { pairs: Vec::new() }
    }

    /// Builds a representative index realizing the given class sequence.
    pub fn from_classes(classes: &[IndexClass], m: u32) -> Self {
        let c = (m + 1) / 2;
        let pairs = classes
            .iter()
            .map(|&cl| match cl {
                IndexClass::Ring1 => (1, c),
                IndexClass::Ring2 => (2, c),
                IndexClass::Center => (c, c),
            })
            .collect();
        MultiIndex { pairs }
    }

    pub fn level(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    pub fn child(&self, i: u32, j: u32) -> Self {
        let mut pairs = self.pairs.clone();
        pairs.push((i, j));
        MultiIndex { pairs }
    }

    pub fn classes(&self, m: u32) -> Vec<IndexClass> {
        self.pairs
            .iter()
            .map(|&(i, j)| classify(i, j, m).expect("validated on construction"))
            .collect()
    }

    pub fn extends(&self, prefix: &MultiIndex) -> bool {
        self.pairs.len() >= prefix.pairs.len()
            && self.pairs[..prefix.pairs.len()] == prefix.pairs[..]
    }

    /// Compact rendering like "(3,3);(1,2)" for reports.
    pub fn label(&self) -> String {
        if self.pairs.is_empty() {
            return "root".into();
        }
        self.pairs
            .iter()
            .map(|(i, j)| format!("({i},{j})"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Partial sums of the J-values along an address and the first level
/// (if any) where the sum exceeds a third of the level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoppingLedger {
    pub partial_sums: Vec<u32>,
    pub stopped_at: Option<usize>,
}

impl StoppingLedger {
    pub fn is_stopped(&self) -> bool {
        self.stopped_at.is_some()
    }
}

/// Runs the stopping rule over an address: stop at the first level m
/// with s_m > m/3 (strict inequality, exact integer arithmetic).
pub fn stopping_state(idx: &MultiIndex, m: u32) -> StoppingLedger {
    stopping_from_classes(&idx.classes(m))
}

pub fn stopping_from_classes(classes: &[IndexClass]) -> StoppingLedger {
    let mut sums = Vec::with_capacity(classes.len());
    let mut s = 0u32;
    let mut stopped_at = None;
    for (k, &cl) in classes.iter().enumerate() {
        s += j_value(cl);
        sums.push(s);
        // s > (k+1)/3 without rationals
        if stopped_at.is_none() && 3 * s > (k + 1) as u32 {
            stopped_at = Some(k + 1);
        }
    }
    StoppingLedger {
        partial_sums: sums,
        stopped_at,
    }
}

fn floor_scaled(x: &BigRational, scale: &BigInt) -> BigInt {
    let v = x * BigRational::from_integer(scale.clone());
    v.floor().to_integer()
}

/// 1-based digit chain of a coordinate in [0,1]: half-open cells with the
/// top cell closed, so the map is total and consistent across levels.
pub fn axis_digits(x: &BigRational, level: usize, m: u32) -> Result<Vec<u32>> {
    if x.is_negative() || *x > BigRational::one() {
        return Err(Error::OutOfRange(format!("coordinate {x} outside [0,1]")));
    }
    let mut digits = Vec::with_capacity(level);
    let mut prev = BigInt::zero();
    let mut scale = BigInt::one();
    for _ in 0..level {
        scale *= m;
        let mut c = floor_scaled(x, &scale);
        let top = &scale - 1;
        if c > top {
            c = top;
        }
        let d = &c - &prev * BigInt::from(m);
        digits.push(d.to_u32().expect("digit in range") + 1);
        prev = c;
    }
    Ok(digits)
}

/// The level-m index of the square containing a point of the unit square.
pub fn locate_point(x: &BigRational, y: &BigRational, level: usize, m: u32) -> Result<MultiIndex> {
    let dx = axis_digits(x, level, m)?;
    let dy = axis_digits(y, level, m)?;
    let pairs = dx.into_iter().zip(dy).collect();
    Ok(MultiIndex { pairs })
}

/// Cardinalities of the three classes: (4M-4, 4M-12, (M-4)^2).
pub fn class_counts(m: u32) -> (u64, u64, u64) {
    let m = m as u64;
    (4 * m - 4, 4 * m - 12, (m - 4) * (m - 4))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(1, 5, 9).unwrap(), IndexClass::Ring1);
        assert_eq!(classify(2, 5, 9).unwrap(), IndexClass::Ring2);
        assert_eq!(classify(5, 5, 9).unwrap(), IndexClass::Center);
        assert!(classify(0, 3, 9).is_err());
        assert!(classify(3, 10, 9).is_err());
    }

    #[test]
    fn j_values() {
        assert_eq!(j_value(IndexClass::Ring1), 1);
        assert_eq!(j_value(IndexClass::Ring2), 1);
        assert_eq!(j_value(IndexClass::Center), 0);
    }

    #[test]
    fn classes_partition_grid() {
        for m in [5u32, 9, 13] {
            let (mut r1, mut r2, mut c) = (0u64, 0u64, 0u64);
            for i in 1..=m {
                for j in 1..=m {
                    match classify(i, j, m).unwrap() {
                        IndexClass::Ring1 => r1 += 1,
                        IndexClass::Ring2 => r2 += 1,
                        IndexClass::Center => c += 1,
                    }
                }
            }
            let (e1, e2, ec) = class_counts(m);
            assert_eq!((r1, r2, c), (e1, e2, ec), "M={m}");
            assert_eq!(r1 + r2 + c, (m as u64) * (m as u64));
        }
    }

    #[test]
    fn center_mass_fraction() {
        // |Center| / M^2 = (M-4)^2 / M^2, the step-down probability seen later.
        let (_, _, c) = class_counts(79);
        assert_eq!(c, 75 * 75);
    }

    #[test]
    fn stopping_level_one_ring() {
        let led = stopping_from_classes(&[IndexClass::Ring1]);
        assert_eq!(led.stopped_at, Some(1));
        assert_eq!(led.partial_sums, vec![1]);
    }

    #[test]
    fn stopping_strictness_at_level_three() {
        // s_3 = 1 and 1 > 3/3 is false, so (C,C,Ring2) never stops.
        let led = stopping_from_classes(&[
            IndexClass::Center,
            IndexClass::Center,
            IndexClass::Ring2,
        ]);
        assert_eq!(led.partial_sums, vec![0, 0, 1]);
        assert_eq!(led.stopped_at, None);
    }

    #[test]
    fn stopping_first_crossing_wins() {
        // (C,R2,R2): s_2 = 1 > 2/3 already, so the ledger stops at level 2,
        // not at the later level where s_3 = 2 > 1.
        let led = stopping_from_classes(&[
            IndexClass::Center,
            IndexClass::Ring2,
            IndexClass::Ring2,
        ]);
        assert_eq!(led.partial_sums, vec![0, 1, 2]);
        assert_eq!(led.stopped_at, Some(2));
    }

    #[test]
    fn stopping_monotone_under_extension() {
        let base = &[IndexClass::Center, IndexClass::Ring2, IndexClass::Ring2];
        let stopped = stopping_from_classes(base).stopped_at;
        for extra in [IndexClass::Ring1, IndexClass::Center] {
            let mut ext = base.to_vec();
            ext.push(extra);
            assert_eq!(stopping_from_classes(&ext).stopped_at, stopped);
        }
    }

    #[test]
    fn locate_origin() {
        let idx = locate_point(&rat(0, 1), &rat(0, 1), 2, 5).unwrap();
        assert_eq!(idx.pairs(), &[(1, 1), (1, 1)]);
    }

    #[test]
    fn locate_top_corner_closed() {
        let idx = locate_point(&rat(1, 1), &rat(1, 1), 1, 5).unwrap();
        assert_eq!(idx.pairs(), &[(5, 5)]);
    }

    #[test]
    fn locate_half_open_midpoint() {
        // 0.5 lies in [2/5, 3/5), the third cell.
        let idx = locate_point(&rat(1, 2), &rat(1, 2), 1, 5).unwrap();
        assert_eq!(idx.pairs(), &[(3, 3)]);
    }

    #[test]
    fn locate_levels_nest() {
        let x = rat(7, 30);
        let y = rat(19, 23);
        let coarse = locate_point(&x, &y, 2, 5).unwrap();
        let fine = locate_point(&x, &y, 4, 5).unwrap();
        assert!(fine.extends(&coarse));
    }

    #[test]
    fn params_validation() {
        assert!(GridParams::new(6, rat(1, 300), Mode::Demo).is_err());
        assert!(GridParams::new(3, rat(1, 300), Mode::Demo).is_err());
        assert!(GridParams::new(5, rat(1, 125), Mode::Demo).is_err()); // r = M^-3 not allowed
        assert!(GridParams::new(5, rat(1, 126), Mode::Demo).is_ok());
        assert!(GridParams::new(9, rat(1, 126), Mode::Strict).is_err());
        assert!(GridParams::strict().m() == 79);
    }
}
