//! Sawtooth carpet functions and their stopped modifications.
//!
//! The unit square is subdivided into M^n columns by M rows per level. The
//! sawtooth pattern fills one rectangle per column, ascending and descending
//! in runs of M so that consecutive stages stay connected; iterating it (and
//! its vertical reflection inside descending cells) produces the graph of a
//! continuous function. The stopped variant runs the grid stopping ledger
//! along each rectangle's square ancestry and switches to the diagonal
//! pattern once the ledger trips, which makes the function affine across the
//! stopped rectangle.
//!
//! All engines (point evaluation, box counting, census, fiber measures)
//! share one transition function, `CarpetParams::step`, so the pattern and
//! ledger rules live in exactly one place.

use std::collections::VecDeque;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{digit_is_ring, GridParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Ascending,
    Descending,
}

impl Orientation {
    pub fn flip(self) -> Self {
        match self {
            Orientation::Ascending => Orientation::Descending,
            Orientation::Descending => Orientation::Ascending,
        }
    }
}

/// Which construction a descent follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CarpetKind {
    /// The pure sawtooth construction. The stopping ledger is tracked (it
    /// identifies the surviving rectangles) but never changes the pattern.
    Sawtooth,
    /// Sawtooth until the ledger trips, diagonal afterwards.
    Stopped,
    /// Diagonal from the very first level; the limit is the straight
    /// diagonal of the unit square.
    LinearLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarpetParams {
    grid: GridParams,
    n: u32,
}

impl CarpetParams {
    pub fn new(grid: GridParams, n: u32) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParams("carpet exponent n must be >= 1".into()));
        }
        let m = grid.m() as u64;
        if m.checked_pow(n).is_none() {
            return Err(Error::InvalidParams(format!(
                "M^n = {m}^{n} overflows the column index range"
            )));
        }
        Ok(CarpetParams { grid, n })
    }

    pub fn grid(&self) -> &GridParams {
        &self.grid
    }

    pub fn m(&self) -> u32 {
        self.grid.m()
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Columns per subdivision of the sawtooth pattern: M^n.
    pub fn columns(&self) -> u64 {
        (self.m() as u64).pow(self.n)
    }

    /// Rows per subdivision: M.
    pub fn rows(&self) -> u32 {
        self.m()
    }

    pub fn root_state(&self, kind: CarpetKind) -> DescentState {
        DescentState {
            kind,
            level: 0,
            orient: Orientation::Ascending,
            stopped_at: match kind {
                CarpetKind::LinearLimit => Some(0),
                _ => None,
            },
            j_sum: 0,
            pending: VecDeque::new(),
        }
    }

    /// One construction step: choose child column `c` of the cell described
    /// by `state`, returning the child's row and state. `c` ranges over
    /// `state.arity(self)`.
    pub fn step(&self, state: &DescentState, c: u64) -> StepOutcome {
        let m = self.m();
        let mut next = state.clone();
        next.level = state.level + 1;
        let row;
        if state.pattern_is_linear() {
            debug_assert!(c < m as u64);
            let (r, o) = linear_row(c as u32, m, state.orient);
            row = r;
            next.orient = o;
        } else {
            debug_assert!(c < self.columns());
            let (r, o) = sawtooth_row(c, m, state.orient);
            row = r;
            next.orient = o;
            if state.kind != CarpetKind::LinearLimit && state.stopped_at.is_none() {
                // feed the n base-M digits of c into the pending x-digit
                // queue, consume one square digit, and update the ledger
                let mut digits = [0u32; 64];
                let mut v = c;
                for slot in (0..self.n as usize).rev() {
                    digits[slot] = (v % m as u64) as u32;
                    v /= m as u64;
                }
                for &d in &digits[..self.n as usize] {
                    next.pending.push_back(d as u8);
                }
                let i_digit = next.pending.pop_front().expect("n >= 1") as u32;
                let t = next.level;
                if digit_is_ring(i_digit, m) || digit_is_ring(row, m) {
                    next.j_sum += 1;
                }
                if 3 * next.j_sum > t {
                    next.stopped_at = Some(t);
                    next.pending.clear();
                }
            }
        }
        StepOutcome { row, state: next }
    }

    /// The row a child column would get, without advancing the state.
    pub fn peek_row(&self, state: &DescentState, c: u64) -> u32 {
        if state.pattern_is_linear() {
            linear_row(c as u32, self.m(), state.orient).0
        } else {
            sawtooth_row(c, self.m(), state.orient).0
        }
    }

    /// The unique column in group `g` whose sawtooth row equals `l` under
    /// the given orientation. Every row has exactly M^(n-1) preimage
    /// columns, one per group.
    pub fn column_for_row(&self, l: u32, g: u64, orient: Orientation) -> u64 {
        let m = self.m();
        let base_l = match orient {
            Orientation::Ascending => l,
            Orientation::Descending => m - 1 - l,
        };
        let o = if g % 2 == 0 { base_l } else { m - 1 - base_l };
        g * m as u64 + o as u64
    }

    pub fn groups(&self) -> u64 {
        (self.m() as u64).pow(self.n - 1)
    }
}

/// Row and child orientation of sawtooth column `c` (0-based): within group
/// g = c / M the pattern ascends on even groups and descends on odd ones;
/// a descending parent sees the vertical reflection.
pub fn sawtooth_row(c: u64, m: u32, orient: Orientation) -> (u32, Orientation) {
    let g = c / m as u64;
    let o = (c % m as u64) as u32;
    let (row_base, orient_base) = if g % 2 == 0 {
        (o, Orientation::Ascending)
    } else {
        (m - 1 - o, Orientation::Descending)
    };
    match orient {
        Orientation::Ascending => (row_base, orient_base),
        Orientation::Descending => (m - 1 - row_base, orient_base.flip()),
    }
}

/// Diagonal pattern used after stopping: row = column, reflected for
/// descending cells; orientation is preserved.
pub fn linear_row(c: u32, m: u32, orient: Orientation) -> (u32, Orientation) {
    match orient {
        Orientation::Ascending => (c, orient),
        Orientation::Descending => (m - 1 - c, orient),
    }
}

/// State of one cell in a descent: pattern orientation, stopping ledger,
/// and the x-digits produced but not yet consumed by square levels.
#[derive(Debug, Clone)]
pub struct DescentState {
    kind: CarpetKind,
    level: u32,
    orient: Orientation,
    stopped_at: Option<u32>,
    j_sum: u32,
    pending: VecDeque<u8>,
}

impl DescentState {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn orient(&self) -> Orientation {
        self.orient
    }

    pub fn kind(&self) -> CarpetKind {
        self.kind
    }

    /// Level at which the ledger tripped, if it has.
    pub fn stopped_at(&self) -> Option<u32> {
        self.stopped_at
    }

    pub fn is_ledger_stopped(&self) -> bool {
        self.stopped_at.is_some()
    }

    /// Whether children of this cell follow the diagonal pattern.
    pub fn pattern_is_linear(&self) -> bool {
        match self.kind {
            CarpetKind::Sawtooth => false,
            CarpetKind::LinearLimit => true,
            CarpetKind::Stopped => self.stopped_at.is_some(),
        }
    }

    /// Child count of the subdivision below this cell.
    pub fn arity(&self, params: &CarpetParams) -> u64 {
        if self.pattern_is_linear() {
            params.m() as u64
        } else {
            params.columns()
        }
    }
}

pub struct StepOutcome {
    pub row: u32,
    pub state: DescentState,
}

/// Fully resolved address of one rectangle chain.
#[derive(Debug, Clone)]
pub struct RectAddress {
    pub columns: Vec<u64>,
    pub rows: Vec<u32>,
    pub orients: Vec<Orientation>,
    pub stopped_at: Option<u32>,
    /// Base-M digits of the x corner, one per square level, as far as the
    /// chain provides them (n per sawtooth level, 1 per diagonal level).
    pub x_digits: Vec<u8>,
}

pub fn rect_address(params: &CarpetParams, columns: &[u64], kind: CarpetKind) -> RectAddress {
    let m = params.m() as u64;
    let mut state = params.root_state(kind);
    let mut rows = Vec::with_capacity(columns.len());
    let mut orients = Vec::with_capacity(columns.len());
    let mut x_digits = Vec::new();
    for &c in columns {
        if state.pattern_is_linear() {
            x_digits.push(c as u8);
        } else {
            let mut v = c;
            let mut tmp = [0u8; 64];
            for slot in (0..params.n() as usize).rev() {
                tmp[slot] = (v % m) as u8;
                v /= m;
            }
            x_digits.extend_from_slice(&tmp[..params.n() as usize]);
        }
        let out = params.step(&state, c);
        rows.push(out.row);
        orients.push(out.state.orient());
        state = out.state;
    }
    RectAddress {
        columns: columns.to_vec(),
        rows,
        orients,
        stopped_at: state.stopped_at(),
        x_digits,
    }
}

/// Evaluator for one carpet function at fixed parameters.
#[derive(Debug, Clone)]
pub struct CarpetFunction {
    params: CarpetParams,
    kind: CarpetKind,
}

impl CarpetFunction {
    /// The uniform-fiber sawtooth function.
    pub fn sawtooth(params: CarpetParams) -> Self {
        CarpetFunction {
            params,
            kind: CarpetKind::Sawtooth,
        }
    }

    /// The stopped modification.
    pub fn stopped(params: CarpetParams) -> Self {
        CarpetFunction {
            params,
            kind: CarpetKind::Stopped,
        }
    }

    /// The pure diagonal iteration; its limit is the identity function.
    pub fn linear_limit(params: CarpetParams) -> Self {
        CarpetFunction {
            params,
            kind: CarpetKind::LinearLimit,
        }
    }

    pub fn params(&self) -> &CarpetParams {
        &self.params
    }

    pub fn kind(&self) -> CarpetKind {
        self.kind
    }

    fn check_domain(x: &BigRational) -> Result<()> {
        if x.is_negative() || *x > BigRational::one() {
            return Err(Error::OutOfRange(format!("x = {x} outside [0,1]")));
        }
        Ok(())
    }

    /// The vertical extent of the depth-m cell over x, an interval of width
    /// M^-m. Columns are half-open with the last one closed, so intervals
    /// nest across depths.
    pub fn eval_interval(&self, x: &BigRational, depth: u32) -> Result<(BigRational, BigRational)> {
        Self::check_domain(x)?;
        let m = BigInt::from(self.params.m());
        let mut state = self.params.root_state(self.kind);
        let mut x_local = x.clone();
        let mut y_num = BigInt::zero();
        for _ in 0..depth {
            let arity = state.arity(&self.params);
            let scaled = &x_local * BigRational::from_integer(BigInt::from(arity));
            let mut c = scaled.floor().to_integer();
            if c >= BigInt::from(arity) {
                c = BigInt::from(arity - 1);
            }
            x_local = scaled - BigRational::from_integer(c.clone());
            let c = c.to_u64().expect("column index fits u64");
            let out = self.params.step(&state, c);
            y_num = y_num * &m + BigInt::from(out.row);
            state = out.state;
        }
        let denom = m.pow(depth);
        let lo = BigRational::new(y_num.clone(), denom.clone());
        let hi = BigRational::new(y_num + 1, denom);
        Ok((lo, hi))
    }

    /// Exact value at x when x is a cell edge within `max_depth` levels
    /// (always the case for x with denominator dividing a power of M).
    /// Returns None for x that never hits an edge that deep.
    pub fn eval_exact(&self, x: &BigRational, max_depth: u32) -> Result<Option<BigRational>> {
        Self::check_domain(x)?;
        let m = BigInt::from(self.params.m());
        let mut state = self.params.root_state(self.kind);
        let mut x_local = x.clone();
        let mut y_num = BigInt::zero();
        let mut depth = 0u32;
        loop {
            let denom = m.pow(depth);
            if x_local.is_zero() {
                // entry corner of the current cell
                let num = match state.orient() {
                    Orientation::Ascending => y_num,
                    Orientation::Descending => y_num + 1,
                };
                return Ok(Some(BigRational::new(num, denom)));
            }
            if x_local.is_one() {
                let num = match state.orient() {
                    Orientation::Ascending => y_num + 1,
                    Orientation::Descending => y_num,
                };
                return Ok(Some(BigRational::new(num, denom)));
            }
            if depth >= max_depth {
                return Ok(None);
            }
            let arity = state.arity(&self.params);
            let scaled = &x_local * BigRational::from_integer(BigInt::from(arity));
            let c = scaled.floor().to_integer();
            x_local = scaled - BigRational::from_integer(c.clone());
            let c = c.to_u64().expect("column index fits u64");
            let out = self.params.step(&state, c);
            y_num = y_num * &m + BigInt::from(out.row);
            state = out.state;
            depth += 1;
        }
    }

    pub fn value_f64(&self, x: &BigRational, depth: u32) -> Result<f64> {
        let (lo, hi) = self.eval_interval(x, depth)?;
        Ok(((lo + hi) / BigRational::from_integer(2.into()))
            .to_f64()
            .unwrap())
    }
}

/// The function glued from rescaled stopped carpets on dyadic blocks:
/// on [2^-n, 2^-n+1] the block-n function scaled by 2^-n, and 0 at 0.
#[derive(Debug, Clone)]
pub struct GluedFunction {
    grid: GridParams,
}

impl GluedFunction {
    pub fn new(grid: GridParams) -> Self {
        GluedFunction { grid }
    }

    pub fn grid(&self) -> &GridParams {
        &self.grid
    }

    /// The dyadic block containing x: smallest n with x >= 2^-n.
    /// None for x = 0.
    pub fn block_of(&self, x: &BigRational) -> Result<Option<u32>> {
        if x.is_negative() || *x > BigRational::one() {
            return Err(Error::OutOfRange(format!("x = {x} outside [0,1]")));
        }
        if x.is_zero() {
            return Ok(None);
        }
        let mut n = 1u32;
        let mut thresh = BigRational::new(1.into(), 2.into());
        while *x < thresh {
            thresh /= BigRational::from_integer(BigInt::from(2));
            n += 1;
            if n > 512 {
                return Err(Error::Budget("x too close to 0 to locate its block".into()));
            }
        }
        Ok(Some(n))
    }

    fn block_fn(&self, n: u32) -> Result<CarpetFunction> {
        let params = CarpetParams::new(self.grid.clone(), n)?;
        Ok(CarpetFunction::stopped(params))
    }

    fn pow2(n: u32) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::from(2).pow(n))
    }

    pub fn eval_interval(&self, x: &BigRational, depth: u32) -> Result<(BigRational, BigRational)> {
        match self.block_of(x)? {
            None => Ok((BigRational::zero(), BigRational::zero())),
            Some(n) => {
                let scale = Self::pow2(n);
                let inner = x / &scale - BigRational::one();
                let f = self.block_fn(n)?;
                let (lo, hi) = f.eval_interval(&inner, depth)?;
                Ok((
                    &scale * (BigRational::one() + lo),
                    &scale * (BigRational::one() + hi),
                ))
            }
        }
    }

    pub fn eval_exact(&self, x: &BigRational, max_depth: u32) -> Result<Option<BigRational>> {
        match self.block_of(x)? {
            None => Ok(Some(BigRational::zero())),
            Some(n) => {
                let scale = Self::pow2(n);
                let inner = x / &scale - BigRational::one();
                let f = self.block_fn(n)?;
                Ok(f.eval_exact(&inner, max_depth)?
                    .map(|v| &scale * (BigRational::one() + v)))
            }
        }
    }
}

/// Exact per-fiber counts of the level-m rectangle collection: totals are
/// M^(m(n-1)) per row by uniform fibers, survivors are the rectangles whose
/// ledger never tripped.
#[derive(Debug, Clone)]
pub struct FiberCensus {
    pub level: u32,
    pub per_row_total: u64,
    pub survivors_per_row: Vec<u64>,
    pub total: u64,
    pub survivors: u64,
    /// Rows with at least a quarter of their rectangles surviving.
    pub certified_rows: u64,
}

impl FiberCensus {
    pub fn row_count(&self) -> usize {
        self.survivors_per_row.len()
    }

    pub fn survivor_fraction(&self) -> f64 {
        self.survivors as f64 / self.total as f64
    }

    /// Lebesgue measure of the union of certified row intervals.
    pub fn certified_measure(&self) -> f64 {
        self.certified_rows as f64 / self.row_count() as f64
    }

    pub fn is_certified(&self, row_index: usize) -> bool {
        4 * self.survivors_per_row[row_index] >= self.per_row_total
    }
}

/// Exhaustive census over all M^(nm) rectangles. Demo scale only.
pub fn fiber_census_exhaustive(
    params: &CarpetParams,
    level: u32,
    budget: u64,
) -> Result<FiberCensus> {
    let m = params.m() as u64;
    let total = m
        .checked_pow(params.n() * level)
        .filter(|&t| t <= budget)
        .ok_or_else(|| {
            Error::Budget(format!(
                "census needs M^(nm) = {m}^{} rectangles, budget {budget}",
                params.n() * level
            ))
        })?;
    let rows = m.pow(level);
    if rows > 1 << 24 {
        return Err(Error::Budget(format!(
            "{rows} fiber rows exceed the table budget"
        )));
    }
    let mut survivors_per_row = vec![0u64; rows as usize];
    let mut survivors = 0u64;

    // DFS over column choices; frames carry (state, row-digit accumulator)
    struct Frame {
        state: DescentState,
        j_acc: u64,
        next_c: u64,
    }
    let mut stack = vec![Frame {
        state: params.root_state(CarpetKind::Sawtooth),
        j_acc: 0,
        next_c: 0,
    }];
    let cols = params.columns();
    while let Some(top) = stack.last_mut() {
        if top.next_c == cols {
            stack.pop();
            continue;
        }
        let c = top.next_c;
        top.next_c += 1;
        let out = params.step(&top.state, c);
        let j_acc = top.j_acc * m + out.row as u64;
        if out.state.level() == level {
            if !out.state.is_ledger_stopped() {
                survivors_per_row[j_acc as usize] += 1;
                survivors += 1;
            }
            continue;
        }
        stack.push(Frame {
            state: out.state,
            j_acc,
            next_c: 0,
        });
    }

    let per_row_total = m.pow((params.n() - 1) * level);
    let census = FiberCensus {
        level,
        per_row_total,
        certified_rows: survivors_per_row
            .iter()
            .filter(|&&s| 4 * s >= per_row_total)
            .count() as u64,
        survivors_per_row,
        total,
        survivors,
    };
    Ok(census)
}

/// Monte Carlo census for parameter sets too large to enumerate: a global
/// survivor-fraction estimate plus a per-fiber survey estimating the
/// measure of the certified rows. Deterministic for a fixed seed.
#[derive(Debug, Clone)]
pub struct FiberCensusMc {
    pub level: u32,
    pub global_samples: u64,
    pub survivor_fraction: f64,
    pub survivor_sigma: f64,
    pub fibers: u64,
    pub samples_per_fiber: u64,
    pub certified_fraction: f64,
    pub certified_sigma: f64,
}

pub fn fiber_census_mc(
    params: &CarpetParams,
    level: u32,
    global_samples: u64,
    fibers: u64,
    samples_per_fiber: u64,
    seed: u64,
) -> FiberCensusMc {
    let m = params.m() as u64;
    let cols = params.columns();

    // global: uniform rectangles are uniform column strings
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut surv = 0u64;
    for _ in 0..global_samples {
        let mut state = params.root_state(CarpetKind::Sawtooth);
        for _ in 0..level {
            let c = rng.random_range(0..cols);
            state = params.step(&state, c).state;
            if state.is_ledger_stopped() {
                break;
            }
        }
        if !state.is_ledger_stopped() {
            surv += 1;
        }
    }
    let p_hat = surv as f64 / global_samples as f64;
    let sigma = (p_hat * (1.0 - p_hat) / global_samples as f64).sqrt();

    // per-fiber: sample a row-digit string, then rectangles conditioned on
    // it by picking the group freely at every level
    let mut certified = 0u64;
    let mut fiber_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    for _ in 0..fibers {
        let row_digits: Vec<u32> = (0..level)
            .map(|_| fiber_rng.random_range(0..m) as u32)
            .collect();
        let mut fiber_surv = 0u64;
        for _ in 0..samples_per_fiber {
            let mut state = params.root_state(CarpetKind::Sawtooth);
            for &l in &row_digits {
                let g = fiber_rng.random_range(0..params.groups());
                let c = params.column_for_row(l, g, state.orient());
                let out = params.step(&state, c);
                debug_assert_eq!(out.row, l);
                state = out.state;
                if state.is_ledger_stopped() {
                    break;
                }
            }
            if !state.is_ledger_stopped() {
                fiber_surv += 1;
            }
        }
        if 4 * fiber_surv >= samples_per_fiber {
            certified += 1;
        }
    }
    let c_hat = certified as f64 / fibers as f64;
    let c_sigma = (c_hat * (1.0 - c_hat) / fibers as f64).sqrt();

    FiberCensusMc {
        level,
        global_samples,
        survivor_fraction: p_hat,
        survivor_sigma: sigma,
        fibers,
        samples_per_fiber,
        certified_fraction: c_hat,
        certified_sigma: c_sigma,
    }
}
