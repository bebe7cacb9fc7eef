//! Weight hierarchies over the square grid: the plain weights, the stopped
//! weights frozen by the stopping rule, survivor sets, and the exact
//! inequalities they satisfy.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::grid::{
    locate_point, stopping_from_classes, GridParams, IndexClass, MultiIndex,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoVariant {
    /// Full product over the whole prefix.
    Plain,
    /// Frozen at level stopped_at - 1 once the ledger trips.
    Stopped,
}

/// Per-level multiplicative factor of a class: 1, M-3, or r.
pub fn class_factor(class: IndexClass, m: u32, r: &BigRational) -> BigRational {
    match class {
        IndexClass::Ring1 => BigRational::one(),
        IndexClass::Ring2 => BigRational::from_integer(BigInt::from(m - 3)),
        IndexClass::Center => r.clone(),
    }
}

/// Exponent pair (a, b) of the weight (M-3)^a r^b over the effective prefix.
pub fn rho_exponents(classes: &[IndexClass], variant: RhoVariant) -> (u32, u32) {
    let effective = match variant {
        RhoVariant::Plain => classes.len(),
        RhoVariant::Stopped => match stopping_from_classes(classes).stopped_at {
            Some(t) => t - 1,
            None => classes.len(),
        },
    };
    let mut a = 0;
    let mut b = 0;
    for &cl in &classes[..effective] {
        match cl {
            IndexClass::Ring2 => a += 1,
            IndexClass::Center => b += 1,
            IndexClass::Ring1 => {}
        }
    }
    (a, b)
}

/// Exact weight value (M-3)^a r^b for a class sequence.
pub fn rho_from_classes(
    classes: &[IndexClass],
    m: u32,
    r: &BigRational,
    variant: RhoVariant,
) -> BigRational {
    let (a, b) = rho_exponents(classes, variant);
    let base = BigRational::from_integer(BigInt::from(m - 3));
    pow_u32(&base, a) * pow_u32(r, b)
}

pub fn pow_u32(x: &BigRational, e: u32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..e {
        acc *= x;
    }
    acc
}

/// Lazily evaluated weights for a fixed parameter set.
#[derive(Debug, Clone)]
pub struct WeightHierarchy {
    params: GridParams,
}

impl WeightHierarchy {
    pub fn new(params: GridParams) -> Self {
        WeightHierarchy { params }
    }

    pub fn params(&self) -> &GridParams {
        &self.params
    }

    pub fn rho(&self, idx: &MultiIndex, variant: RhoVariant) -> BigRational {
        rho_from_classes(
            &idx.classes(self.params.m()),
            self.params.m(),
            self.params.r(),
            variant,
        )
    }

    pub fn rho_f64(&self, idx: &MultiIndex, variant: RhoVariant) -> f64 {
        let (a, b) = rho_exponents(&idx.classes(self.params.m()), variant);
        let m3 = (self.params.m() - 3) as f64;
        m3.powi(a as i32) * self.params.r_f64().powi(b as i32)
    }
}

/// The unstopped level-m indices, i.e. the squares making up the m-th
/// survivor set, with a membership test for points.
#[derive(Debug, Clone)]
pub struct SurvivorSet {
    pub level: usize,
    indices: Vec<MultiIndex>,
    m: u32,
}

impl SurvivorSet {
    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains_index(&self, idx: &MultiIndex) -> bool {
        self.indices.binary_search(idx).is_ok()
    }

    pub fn contains_point(&self, x: &BigRational, y: &BigRational) -> Result<bool> {
        let idx = locate_point(x, y, self.level, self.m)?;
        Ok(self.contains_index(&idx))
    }
}

/// Enumerates all unstopped level-m indices by depth-first search over the
/// square tree, pruning stopped branches.
pub fn survivor_set(params: &GridParams, level: usize, budget: u64) -> Result<SurvivorSet> {
    let m = params.m() as u64;
    let total = m.checked_pow(2 * level as u32).ok_or_else(|| {
        Error::Budget(format!("M^(2m) overflows at M={m}, m={level}"))
    })?;
    if total > budget {
        return Err(Error::Budget(format!(
            "survivor enumeration needs {total} squares, budget {budget}"
        )));
    }
    let mut out = Vec::new();
    let mut stack: Vec<(MultiIndex, u32)> = vec![(MultiIndex::root(), 0)];
    // (index, running J-sum); stopped branches are never pushed
    while let Some((idx, s)) = stack.pop() {
        if idx.level() == level {
            out.push(idx);
            continue;
        }
        let t = idx.level() as u32 + 1;
        for i in 1..=params.m() {
            for j in 1..=params.m() {
                let cls = crate::grid::classify(i, j, params.m()).unwrap();
                let s2 = s + crate::grid::j_value(cls);
                if 3 * s2 > t {
                    continue;
                }
                stack.push((idx.child(i, j), s2));
            }
        }
    }
    out.sort();
    Ok(SurvivorSet {
        level,
        indices: out,
        m: params.m(),
    })
}

#[derive(Debug, Clone)]
pub struct WeightBoundReport {
    pub level: usize,
    pub checked: usize,
    /// max over the sample of rho_m / r^(m/3), computed in floats for the
    /// report; the pass/fail comparison itself is exact.
    pub max_ratio: f64,
}

/// Checks rho_m(I_m) <= r^(m/3) for a sample of unstopped level-m indices.
/// Both sides are positive so the comparison is cubed to stay rational:
/// rho^3 <= r^m.
pub fn survivor_weight_bound_check(
    params: &GridParams,
    level: usize,
    sample: &[MultiIndex],
) -> Result<WeightBoundReport> {
    let hierarchy = WeightHierarchy::new(params.clone());
    let r_m = pow_u32(params.r(), level as u32);
    let r_third_f = params.r_f64().powf(level as f64 / 3.0);
    let mut max_ratio = 0.0f64;
    for idx in sample {
        if idx.level() != level {
            return Err(Error::OutOfRange(format!(
                "sample index {} has level {}, expected {level}",
                idx.label(),
                idx.level()
            )));
        }
        let ledger = crate::grid::stopping_state(idx, params.m());
        if ledger.is_stopped() {
            return Err(Error::OutOfRange(format!(
                "sample index {} is stopped at level {:?}",
                idx.label(),
                ledger.stopped_at
            )));
        }
        let rho = hierarchy.rho(idx, RhoVariant::Stopped);
        let cube = pow_u32(&rho, 3);
        if cube > r_m {
            return Err(Error::CheckFailed(format!(
                "weight bound violated at {}: rho^3 = {cube} > r^m = {r_m}",
                idx.label()
            )));
        }
        let ratio = hierarchy.rho_f64(idx, RhoVariant::Stopped) / r_third_f;
        if ratio > max_ratio {
            max_ratio = ratio;
        }
    }
    Ok(WeightBoundReport {
        level,
        checked: sample.len(),
        max_ratio,
    })
}

/// Cube of the ratio between consecutive terms of the content bound
/// sequence: (r^(1/3) M)^3 = r M^3. Strict decay holds iff this is < 1.
pub fn content_ratio_cubed(params: &GridParams) -> BigRational {
    let m3 = BigInt::from(params.m()).pow(3);
    params.r() * BigRational::from_integer(m3)
}

/// Exact test that the content bound sequence strictly decreases.
pub fn content_decreasing_exact(params: &GridParams) -> bool {
    content_ratio_cubed(params) < BigRational::one()
}

/// The content bound C_1 (r^(1/3) M)^m at level m; m = 0 gives C_1.
pub fn hausdorff_content_upper(params: &GridParams, c1: f64, m: u32) -> f64 {
    let ratio = (params.r_f64().cbrt()) * params.m() as f64;
    c1 * ratio.powi(m as i32)
}

pub fn content_sequence(params: &GridParams, c1: f64, upto: u32) -> Vec<f64> {
    (0..=upto)
        .map(|m| hausdorff_content_upper(params, c1, m))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Mode;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn ring2_factor_is_m_minus_3() {
        // The level-1 weight of a Ring2 cell at M = 78 is 75. The factor
        // arithmetic is independent of the odd-M carpet constraint.
        let v = rho_from_classes(&[IndexClass::Ring2], 78, &rat(1, 500000), RhoVariant::Plain);
        assert_eq!(v, BigRational::from_integer(75.into()));
    }

    #[test]
    fn center_squares_multiply_r() {
        let r = rat(1, 126);
        let v = rho_from_classes(
            &[IndexClass::Center, IndexClass::Center],
            5,
            &r,
            RhoVariant::Plain,
        );
        assert_eq!(v, rat(1, 126 * 126));
    }

    #[test]
    fn stopped_weight_freezes_before_the_stop() {
        // (Ring1, Center) stops at level 1, so the stopped weight is the
        // level-0 value 1.
        let r = rat(1, 126);
        let v = rho_from_classes(
            &[IndexClass::Ring1, IndexClass::Center],
            5,
            &r,
            RhoVariant::Stopped,
        );
        assert_eq!(v, BigRational::one());
        let plain = rho_from_classes(
            &[IndexClass::Ring1, IndexClass::Center],
            5,
            &r,
            RhoVariant::Plain,
        );
        assert_eq!(plain, r);
    }

    #[test]
    fn plain_equals_stopped_on_unstopped() {
        let classes = [IndexClass::Center, IndexClass::Center, IndexClass::Ring2];
        assert_eq!(
            rho_exponents(&classes, RhoVariant::Plain),
            rho_exponents(&classes, RhoVariant::Stopped)
        );
    }

    #[test]
    fn bound_check_all_center() {
        let params = GridParams::demo();
        let sample = vec![MultiIndex::from_classes(
            &[IndexClass::Center, IndexClass::Center, IndexClass::Center],
            5,
        )];
        let rep = survivor_weight_bound_check(&params, 3, &sample).unwrap();
        assert!(rep.max_ratio <= 1.0);
    }

    #[test]
    fn bound_check_mixed() {
        // (C,C,Ring2): rho = (M-3) r^2 and the exact cube comparison
        // (M-3)^3 r^6 <= r^3 reduces to 8 r^3 <= 1 at M = 5.
        let params = GridParams::demo();
        let sample = vec![MultiIndex::from_classes(
            &[IndexClass::Center, IndexClass::Center, IndexClass::Ring2],
            5,
        )];
        let rep = survivor_weight_bound_check(&params, 3, &sample).unwrap();
        assert!(rep.max_ratio <= 1.0);
    }

    #[test]
    fn bound_check_rejects_stopped() {
        let params = GridParams::demo();
        let sample = vec![MultiIndex::from_classes(&[IndexClass::Ring1], 5)];
        assert!(survivor_weight_bound_check(&params, 1, &sample).is_err());
    }

    #[test]
    fn survivor_sets_nest_and_shrink() {
        let params = GridParams::demo();
        let e1 = survivor_set(&params, 1, 1 << 20).unwrap();
        let e2 = survivor_set(&params, 2, 1 << 20).unwrap();
        let e3 = survivor_set(&params, 3, 1 << 20).unwrap();
        // At M = 5 only the center survives level 1, and only the center of
        // the center survives level 2; level 3 allows one ring step again.
        assert_eq!(e1.len(), 1);
        assert_eq!(e2.len(), 1);
        assert_eq!(e3.len(), 25);
        for idx in e3.indices() {
            let parent = MultiIndex::new(idx.pairs()[..2].to_vec(), 5).unwrap();
            assert!(e2.contains_index(&parent));
        }
    }

    #[test]
    fn survivor_budget_enforced() {
        let params = GridParams::demo();
        assert!(matches!(
            survivor_set(&params, 10, 1000),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn content_ratio_demo() {
        let params = GridParams::demo();
        // ratio^3 = r M^3 = 125/126 exactly; ratio ~ 0.99735
        assert_eq!(content_ratio_cubed(&params), rat(125, 126));
        assert!(content_decreasing_exact(&params));
        let ratio = hausdorff_content_upper(&params, 1.0, 2) / hausdorff_content_upper(&params, 1.0, 1);
        assert!((ratio - 0.997348).abs() < 1e-5);
    }

    #[test]
    fn content_level_zero_is_c1() {
        let params = GridParams::demo();
        assert_eq!(hausdorff_content_upper(&params, 2.5, 0), 2.5);
    }

    #[test]
    fn content_decay_strict_mode() {
        let params = GridParams::strict();
        assert!(content_decreasing_exact(&params));
        let seq = content_sequence(&params, 2.0, 20);
        for w in seq.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn inadmissible_r_rejected_not_decaying() {
        // r = M^-3 exactly is rejected by GridParams, the boundary of decay.
        assert!(GridParams::new(5, rat(1, 125), Mode::Demo).is_err());
    }
}
