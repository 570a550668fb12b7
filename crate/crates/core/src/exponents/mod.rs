//! Exact rational bookkeeping of Strichartz and embedding exponents.
//!
//! Every verdict is decided over `BigRational` with `+∞` as a symbolic
//! sentinel; no floating point enters a comparison.

mod rational;

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

pub use rational::{fmt_rat, int, parse_rational, rat, ExtRat};

use crate::error::{invalid, Error, Result};

/// Denominator bound of the witness scan over `b`.
pub const WITNESS_DENOMINATOR_BOUND: u64 = 64;

fn ser_rat<S: Serializer>(x: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_rat(x))
}

fn ser_opt_rat<S: Serializer>(x: &Option<BigRational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(x) => s.serialize_some(&fmt_rat(x)),
        None => s.serialize_none(),
    }
}

/// Outcome of an exponent condition, naming the clause that failed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub holds: bool,
    pub violated: Option<String>,
}

impl Verdict {
    fn ok() -> Self {
        Self {
            holds: true,
            violated: None,
        }
    }

    fn fail(clause: impl Into<String>) -> Self {
        Self {
            holds: false,
            violated: Some(clause.into()),
        }
    }
}

fn two() -> BigRational {
    int(2)
}

/// Lower end `2dq/(dq−4)` of the product pair range; `+∞` when `dq ≤ 4`,
/// `2` in the limit `q = ∞`.
pub fn product_lower_bound(q: &ExtRat, d: u32) -> ExtRat {
    let d = int(d as i64);
    match q {
        ExtRat::Infinity => ExtRat::Finite(two()),
        ExtRat::Finite(q) => ExtRat::quotient_or_infinity(two() * &d * q, &d * q - int(4)),
    }
}

/// Upper end `2q(d+1)/(q(d−1)−2)` for `d ≥ 2`; `+∞` when the denominator
/// vanishes, `2(d+1)/(d−1)` in the limit `q = ∞`.
pub fn product_upper_bound(q: &ExtRat, d: u32) -> ExtRat {
    let d = int(d as i64);
    let one = BigRational::one();
    match q {
        ExtRat::Infinity => ExtRat::Finite(two() * (&d + &one) / (&d - &one)),
        ExtRat::Finite(q) => ExtRat::quotient_or_infinity(two() * q * (&d + &one), q * (&d - &one) - two()),
    }
}

/// Strichartz pair condition on the waveguide:
/// `q ≥ 4, 2q/(q−4) ≤ r` for `d = 1`, and
/// `2dq/(dq−4) ≤ r ≤ 2q(d+1)/(q(d−1)−2)` with `q > 2` (`d = 2`) or `q ≥ 2` (`d ≥ 3`).
pub fn is_admissible_product(q: &ExtRat, r: &ExtRat, d: u32) -> Verdict {
    if d == 0 {
        return Verdict::fail("d >= 1");
    }
    let one = BigRational::one();
    if *q < one || *r < one {
        return Verdict::fail("q, r >= 1");
    }
    match d {
        1 if *q < int(4) => return Verdict::fail("q >= 4"),
        2 if *q <= two() => return Verdict::fail("q > 2"),
        _ if d >= 3 && *q < two() => return Verdict::fail("q >= 2"),
        _ => {}
    }
    let lower = product_lower_bound(q, d);
    if *r < lower {
        let clause = if d == 1 { "2q/(q-4) <= r" } else { "2dq/(dq-4) <= r" };
        return Verdict::fail(format!("{clause} (bound {lower}, r = {r})"));
    }
    if d >= 2 {
        let upper = product_upper_bound(q, d);
        if *r > upper {
            return Verdict::fail(format!("r <= 2q(d+1)/(q(d-1)-2) (bound {upper}, r = {r})"));
        }
    }
    Verdict::ok()
}

/// Value of `s(r, d)` with its range flag.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SValue {
    #[serde(serialize_with = "ser_rat")]
    pub s: BigRational,
    pub in_unit_interval: bool,
}

/// `s = 1 − ½(d/2 + 1)(1/r′ − 1/r)`, where `1/r′ − 1/r = 1 − 2/r`.
pub fn s_of(r: &ExtRat, d: u32) -> Result<SValue> {
    if *r < two() {
        return Err(invalid("r", format!("s(r, d) needs r >= 2, got {r}")));
    }
    let inv = r.recip().expect("r >= 2");
    let gap = BigRational::one() - two() * inv;
    let s = BigRational::one() - rat(1, 2) * (int(d as i64) / two() + BigRational::one()) * gap;
    let in_unit_interval = !s.is_negative() && s <= BigRational::one();
    Ok(SValue { s, in_unit_interval })
}

/// Euclidean admissibility: `2/q = d(1/2 − 1/ρ)` for `d ≥ 3`, `q > 2` for
/// `d = 2`, `q ≥ 4` for `d = 1`.
pub fn is_admissible_euclidean(q: &ExtRat, rho: &ExtRat, d: u32) -> Verdict {
    if d == 0 {
        return Verdict::fail("d >= 1");
    }
    if *q < BigRational::one() || *rho < BigRational::one() {
        return Verdict::fail("q, rho >= 1");
    }
    match d {
        1 => {
            if *q < int(4) {
                Verdict::fail("q >= 4")
            } else {
                Verdict::ok()
            }
        }
        2 => {
            if *q <= two() {
                Verdict::fail("q > 2")
            } else {
                Verdict::ok()
            }
        }
        _ => {
            let lhs = two() * q.recip().expect("q >= 1");
            let rhs = int(d as i64) * (rat(1, 2) - rho.recip().expect("rho >= 1"));
            if lhs == rhs {
                Verdict::ok()
            } else {
                Verdict::fail(format!("2/q = d(1/2 - 1/rho) ({} != {})", fmt_rat(&lhs), fmt_rat(&rhs)))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GammaValue {
    #[serde(serialize_with = "ser_rat")]
    pub gamma: BigRational,
    pub nonneg: bool,
    /// `γ > 1/2`, reported for `d = 1` only.
    pub above_half: Option<bool>,
}

/// `γ = d/r + 1/q + 1 − d/2`, the torus regularity gained by the pair.
pub fn gamma_of(q: &ExtRat, r: &ExtRat, d: u32) -> Result<GammaValue> {
    let one = BigRational::one();
    if *q < one || *r < one {
        return Err(invalid("q, r", "gamma needs q, r >= 1"));
    }
    let dq = int(d as i64);
    let gamma = &dq * r.recip().expect("r >= 1") + q.recip().expect("q >= 1") + &one - &dq / two();
    Ok(GammaValue {
        nonneg: !gamma.is_negative(),
        above_half: (d == 1).then(|| gamma > rat(1, 2)),
        gamma,
    })
}

/// Torus Sobolev condition: `2/(1−2γ) ≥ r` when `2γ < 1`, `r ≥ 2` otherwise.
pub fn sobolev_condition(gamma: &BigRational, r: &ExtRat) -> Verdict {
    if gamma.is_negative() {
        return Verdict::fail("gamma >= 0");
    }
    let twice = two() * gamma;
    if twice < BigRational::one() {
        let bound = ExtRat::Finite(two() / (BigRational::one() - twice));
        if *r > bound {
            return Verdict::fail(format!("2/(1-2gamma) >= r (bound {bound}, r = {r})"));
        }
    } else if *r < two() {
        return Verdict::fail("r >= 2");
    }
    Verdict::ok()
}

/// `ρ* = dρ/(d − sρ)`, or `+∞` when `d ≤ sρ`.
pub fn rho_star(rho: &ExtRat, s: &BigRational, d: u32) -> Result<ExtRat> {
    if *rho < two() {
        return Err(invalid("rho", format!("needs rho >= 2, got {rho}")));
    }
    if s.is_negative() || *s > BigRational::one() {
        return Err(invalid("s", format!("needs s in [0, 1], got {}", fmt_rat(s))));
    }
    let dd = int(d as i64);
    match rho {
        ExtRat::Infinity => Ok(ExtRat::Infinity),
        ExtRat::Finite(rho) => {
            let den = &dd - s * rho;
            if den.is_positive() {
                Ok(ExtRat::Finite(dd * rho / den))
            } else {
                Ok(ExtRat::Infinity)
            }
        }
    }
}

/// The euclidean `ρ` paired with `q` by `2/q = d(1/2 − 1/ρ)`, for `d ≥ 3`.
pub fn euclidean_rho(q: &BigRational, d: u32) -> Result<ExtRat> {
    if d < 3 || *q < two() {
        return Err(invalid("q", "needs d >= 3 and q >= 2"));
    }
    let inv = rat(1, 2) - two() / (int(d as i64) * q);
    if inv.is_zero() {
        Ok(ExtRat::Infinity)
    } else {
        Ok(ExtRat::Finite(inv.recip()))
    }
}

/// Upper bound `2d²q/(d²q − 2d − 2dq + 4)` produced by the embedding for `d ≥ 3`.
pub fn embedding_upper_bound(q: &BigRational, d: u32) -> ExtRat {
    let d = int(d as i64);
    ExtRat::quotient_or_infinity(two() * &d * &d * q, &d * &d * q - two() * &d - two() * &d * q + int(4))
}

/// Largest `r` with `γ ≥ 0` for `d ≥ 3`: `2dq/(dq − 2q − 2)`.
pub fn gamma_upper_bound(q: &BigRational, d: u32) -> ExtRat {
    let d = int(d as i64);
    ExtRat::quotient_or_infinity(two() * &d * q, &d * q - two() * q - two())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SmallDataExponents {
    #[serde(serialize_with = "ser_rat")]
    pub e: BigRational,
    #[serde(serialize_with = "ser_rat")]
    pub beta: BigRational,
}

/// Upper end of the legal `L^∞L^{2q}` window, `(d+1)/(d−1)`, as a bound on `q`.
fn sobolev_half_exponent(d: u32) -> ExtRat {
    if d == 1 {
        ExtRat::Infinity
    } else {
        ExtRat::Finite(int(d as i64 + 1) / int(d as i64 - 1))
    }
}

/// `e = (q−1)/(3−5q) · (q(d−1) − (d+1))/q` and `β = 2(q−1)/(3−5q)` for
/// `2q ∈ (2, 2*)`.
pub fn small_data_exponents(q: &BigRational, d: u32) -> Result<SmallDataExponents> {
    if d == 0 {
        return Err(invalid("d", "must be >= 1"));
    }
    let one = BigRational::one();
    let top = sobolev_half_exponent(d);
    if *q <= one || ExtRat::Finite(q.clone()) >= top {
        return Err(invalid("q", format!("needs 1 < q < {top}, got {}", fmt_rat(q))));
    }
    let dd = int(d as i64);
    let lead = (q - &one) / (int(3) - int(5) * q);
    let e = &lead * (q * (&dd - &one) - (&dd + &one)) / q;
    let beta = two() * lead;
    debug_assert!(e.is_positive() && beta.is_negative());
    Ok(SmallDataExponents { e, beta })
}

/// An interval of exponents with open or closed ends.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Interval {
    #[serde(serialize_with = "ser_rat")]
    pub lo: BigRational,
    pub hi: ExtRat,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn contains(&self, x: &BigRational) -> bool {
        let above = if self.lo_closed { *x >= self.lo } else { *x > self.lo };
        let xe = ExtRat::Finite(x.clone());
        let below = if self.hi_closed { xe <= self.hi } else { xe < self.hi };
        above && below
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            fmt_rat(&self.lo),
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

/// Scattering exponents: the strict range of the large-data result and the
/// closed range of the small-data result.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AlphaRange {
    pub d: u32,
    pub strict: Interval,
    pub closed: Interval,
}

/// `α > 4` for `d = 1`, `4/d < α < 4/(d−1)` for `2 ≤ d ≤ 4`, with closures.
pub fn alpha_range(d: u32) -> Result<AlphaRange> {
    let (lo, hi) = match d {
        1 => (int(4), ExtRat::Infinity),
        2..=4 => (rat(4, d as i64), ExtRat::Finite(rat(4, d as i64 - 1))),
        _ => return Err(invalid("d", format!("alpha range defined for d in 1..=4, got {d}"))),
    };
    let finite_hi = !hi.is_infinite();
    Ok(AlphaRange {
        d,
        strict: Interval {
            lo: lo.clone(),
            hi: hi.clone(),
            lo_closed: false,
            hi_closed: false,
        },
        closed: Interval {
            lo,
            hi,
            lo_closed: true,
            hi_closed: finite_hi,
        },
    })
}

/// A representative interior exponent: the midpoint for `d ≥ 2`, and `α = 5`
/// on the unbounded `d = 1` range.
pub fn alpha_midpoint(d: u32) -> Result<BigRational> {
    let range = alpha_range(d)?;
    Ok(match &range.strict.hi {
        ExtRat::Infinity => range.strict.lo + BigRational::one(),
        ExtRat::Finite(hi) => (range.strict.lo + hi) / two(),
    })
}

/// A tuple satisfying `a + b = 2α+2`, `r = q/a > 1`, `s = r/(r−1)` with
/// `(b/2, bs)` a product Strichartz pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    #[serde(serialize_with = "ser_rat")]
    pub a: BigRational,
    #[serde(serialize_with = "ser_rat")]
    pub b: BigRational,
    #[serde(serialize_with = "ser_rat")]
    pub r: BigRational,
    #[serde(serialize_with = "ser_rat")]
    pub s: BigRational,
    /// `(b/2, bs)`.
    pub pair: (ExtRat, ExtRat),
    /// Lower bound on `q` implied by the pair condition at this `b`.
    pub q_lower_bound: ExtRat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum WitnessOutcome {
    Found(Witness),
    Infeasible {
        b_interval: Interval,
        /// One entry per scanned `b`, naming the first failed condition.
        failures: Vec<String>,
    },
}

impl WitnessOutcome {
    pub fn witness(&self) -> Option<&Witness> {
        match self {
            WitnessOutcome::Found(w) => Some(w),
            WitnessOutcome::Infeasible { .. } => None,
        }
    }
}

/// Open interval of `b` in which the scan runs:
/// `max(10, 2α+2−q) < b < 2α+2` for `d = 1` and
/// `max{(8+2d)/d, 2α+2−q, α(d+1)−2} < b < 2α+2` for `d ≥ 2`.
pub fn witness_b_interval(alpha: &BigRational, d: u32, q: &BigRational) -> Interval {
    let top = two() * alpha + two();
    let mut lo = &top - q;
    let extra = if d == 1 {
        vec![int(10)]
    } else {
        vec![int(8 + 2 * d as i64) / int(d as i64), alpha * int(d as i64 + 1) - two()]
    };
    for x in extra {
        if x > lo {
            lo = x;
        }
    }
    Interval {
        lo,
        hi: ExtRat::Finite(top),
        lo_closed: false,
        hi_closed: false,
    }
}

/// The side bound on `q` at a given `b`: `(2b−4α−4)/(b−10)` for `d = 1`,
/// `2(d+1)(2α+2−b)/(6+2d−b(d−1))` for `d ≥ 2`; `+∞` when the denominator is
/// not positive.
pub fn witness_q_lower_bound(alpha: &BigRational, d: u32, b: &BigRational) -> ExtRat {
    if d == 1 {
        ExtRat::quotient_or_infinity(two() * b - int(4) * alpha - int(4), b - int(10))
    } else {
        let dd = int(d as i64);
        ExtRat::quotient_or_infinity(
            two() * (&dd + BigRational::one()) * (two() * alpha + two() - b),
            int(6) + two() * &dd - b * (&dd - BigRational::one()),
        )
    }
}

fn check_b(alpha: &BigRational, d: u32, q: &BigRational, b: &BigRational) -> std::result::Result<Witness, String> {
    let a = two() * alpha + two() - b;
    if !a.is_positive() || !b.is_positive() {
        return Err("a + b = 2alpha+2 with a, b > 0".into());
    }
    let r = q / &a;
    if r <= BigRational::one() {
        return Err(format!("r = q/a > 1 (r = {})", fmt_rat(&r)));
    }
    let s = &r / (&r - BigRational::one());
    let pair = (ExtRat::Finite(b / two()), ExtRat::Finite(b * &s));
    let v = is_admissible_product(&pair.0, &pair.1, d);
    if !v.holds {
        return Err(format!(
            "(b/2, bs) = ({}, {}) is a Strichartz pair: {}",
            pair.0,
            pair.1,
            v.violated.unwrap_or_default()
        ));
    }
    let q_lower_bound = witness_q_lower_bound(alpha, d, b);
    if ExtRat::Finite(q.clone()) < q_lower_bound {
        return Err(format!("q >= {q_lower_bound}"));
    }
    Ok(Witness {
        a,
        b: b.clone(),
        r,
        s,
        pair,
        q_lower_bound,
    })
}

/// Scans `b = n/k` (`k = 1..=denominator_bound`, `n` increasing, reduced
/// fractions only) over the open interval of [`witness_b_interval`] and returns
/// the first exactly verified witness.
pub fn interpolation_witness(
    alpha: &BigRational,
    d: u32,
    q: &BigRational,
    denominator_bound: u64,
) -> Result<WitnessOutcome> {
    let range = alpha_range(d)?;
    if !range.closed.contains(alpha) {
        return Err(invalid(
            "alpha",
            format!("{} outside {} for d = {d}", fmt_rat(alpha), range.closed),
        ));
    }
    let top = sobolev_half_exponent(d);
    let q_top = match top {
        ExtRat::Infinity => ExtRat::Infinity,
        ExtRat::Finite(x) => ExtRat::Finite(two() * x),
    };
    if *q <= two() || ExtRat::Finite(q.clone()) >= q_top {
        return Err(invalid("q", format!("needs 2 < q < {q_top}, got {}", fmt_rat(q))));
    }
    if denominator_bound == 0 {
        return Err(invalid("denominator_bound", "must be >= 1"));
    }
    let interval = witness_b_interval(alpha, d, q);
    let hi = interval.hi.as_finite().expect("finite upper end").clone();
    let mut failures = Vec::new();
    if interval.lo >= hi {
        failures.push(format!("empty b interval {interval}"));
    }
    for k in 1..=denominator_bound {
        let kk = num_bigint::BigInt::from(k);
        let mut n: num_bigint::BigInt = (&interval.lo * BigRational::from_integer(kk.clone()))
            .floor()
            .to_integer()
            + num_bigint::BigInt::one();
        loop {
            let b = BigRational::new(n.clone(), kk.clone());
            if b >= hi {
                break;
            }
            if n.gcd(&kk).is_one() {
                match check_b(alpha, d, q, &b) {
                    Ok(w) => return Ok(WitnessOutcome::Found(w)),
                    Err(why) => failures.push(format!("b = {}: {why}", fmt_rat(&b))),
                }
            }
            n += 1;
        }
    }
    Ok(WitnessOutcome::Infeasible {
        b_interval: interval,
        failures,
    })
}

/// One batch line: `d alpha q r [rho]`; `rho` defaults to `r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExponentQuery {
    pub d: u32,
    pub alpha: BigRational,
    pub q: ExtRat,
    pub r: ExtRat,
    pub rho: ExtRat,
}

impl Serialize for ExponentQuery {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ExponentQuery", 5)?;
        st.serialize_field("d", &self.d)?;
        st.serialize_field("alpha", &fmt_rat(&self.alpha))?;
        st.serialize_field("q", &self.q)?;
        st.serialize_field("r", &self.r)?;
        st.serialize_field("rho", &self.rho)?;
        st.end()
    }
}

impl ExponentQuery {
    pub fn parse_line(line: &str) -> Result<Option<Self>> {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            return Ok(None);
        }
        let tokens: Vec<&str> = body.split_whitespace().collect();
        if !(4..=5).contains(&tokens.len()) {
            return Err(invalid(
                "query",
                format!("expected `d alpha q r [rho]`, got {} fields", tokens.len()),
            ));
        }
        let d: u32 = tokens[0]
            .parse()
            .map_err(|_| invalid("d", format!("not a positive integer: {}", tokens[0])))?;
        if d == 0 {
            return Err(invalid("d", "must be >= 1"));
        }
        let alpha = parse_rational(tokens[1])?;
        let q: ExtRat = tokens[2].parse()?;
        let r: ExtRat = tokens[3].parse()?;
        let rho = match tokens.get(4) {
            Some(t) => t.parse()?,
            None => r.clone(),
        };
        Ok(Some(Self { d, alpha, q, r, rho }))
    }
}

/// Parses a whole batch, collecting every bad line.
pub fn parse_batch(text: &str) -> Result<Vec<ExponentQuery>> {
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        match ExponentQuery::parse_line(line) {
            Ok(Some(q)) => out.push(q),
            Ok(None) => {}
            Err(e) => errors.push(format!("line {}: {e}", i + 1)),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(Error::InvalidParameter {
            name: "batch",
            reason: errors.join("; "),
        })
    }
}

/// Every verdict and derived exponent for one query; entries whose
/// preconditions fail carry the reason instead of a value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExponentReport {
    pub query: ExponentQuery,
    pub alpha_in_strict_range: Option<bool>,
    pub alpha_in_closed_range: Option<bool>,
    pub admissible_product: Verdict,
    pub admissible_euclidean: Verdict,
    pub s: Option<SValue>,
    pub gamma: Option<GammaValue>,
    pub gamma_nonneg: bool,
    pub sobolev_condition: Verdict,
    pub rho_star: Option<ExtRat>,
    #[serde(serialize_with = "ser_opt_rat")]
    pub e: Option<BigRational>,
    #[serde(serialize_with = "ser_opt_rat")]
    pub beta: Option<BigRational>,
    pub witness: Option<WitnessOutcome>,
    pub notes: Vec<String>,
}

pub fn report(query: &ExponentQuery) -> ExponentReport {
    let ExponentQuery { d, alpha, q, r, rho } = query;
    let d = *d;
    let mut notes = Vec::new();
    let range = alpha_range(d).ok();
    let s = match s_of(rho, d) {
        Ok(s) => Some(s),
        Err(e) => {
            notes.push(format!("s: {e}"));
            None
        }
    };
    let gamma = match gamma_of(q, r, d) {
        Ok(g) => Some(g),
        Err(e) => {
            notes.push(format!("gamma: {e}"));
            None
        }
    };
    let sobolev = match &gamma {
        Some(g) => sobolev_condition(&g.gamma, r),
        None => Verdict::fail("gamma undefined"),
    };
    let rho_star = s.as_ref().and_then(|s| match rho_star(rho, &s.s, d) {
        Ok(x) => Some(x),
        Err(e) => {
            notes.push(format!("rho*: {e}"));
            None
        }
    });
    let (e, beta) = match q.as_finite().map(|q| small_data_exponents(q, d)) {
        Some(Ok(x)) => (Some(x.e), Some(x.beta)),
        Some(Err(e)) => {
            notes.push(format!("e, beta: {e}"));
            (None, None)
        }
        None => {
            notes.push("e, beta: q must be finite".into());
            (None, None)
        }
    };
    let witness = match q
        .as_finite()
        .map(|q| interpolation_witness(alpha, d, q, WITNESS_DENOMINATOR_BOUND))
    {
        Some(Ok(w)) => Some(w),
        Some(Err(e)) => {
            notes.push(format!("witness: {e}"));
            None
        }
        None => {
            notes.push("witness: q must be finite".into());
            None
        }
    };
    ExponentReport {
        query: query.clone(),
        alpha_in_strict_range: range.as_ref().map(|r| r.strict.contains(alpha)),
        alpha_in_closed_range: range.as_ref().map(|r| r.closed.contains(alpha)),
        admissible_product: is_admissible_product(q, r, d),
        admissible_euclidean: is_admissible_euclidean(q, rho, d),
        gamma_nonneg: gamma.as_ref().is_some_and(|g| g.nonneg),
        s,
        gamma,
        sobolev_condition: sobolev,
        rho_star,
        e,
        beta,
        witness,
        notes,
    }
}

/// Rationals `n/k` with `k ≤ max_den` in `[lo, hi]`, ascending and deduplicated.
pub fn rational_grid(lo: &BigRational, hi: &BigRational, max_den: u64) -> Vec<BigRational> {
    let mut out = Vec::new();
    for k in 1..=max_den {
        let kk = BigRational::from_integer(num_bigint::BigInt::from(k));
        let start = (lo * &kk).ceil().to_integer();
        let stop = (hi * &kk).floor().to_integer();
        let mut n = start;
        while n <= stop {
            out.push(BigRational::new(n.clone(), kk.to_integer()));
            n += 1;
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Approximate value of an exact rational, for display and plotting only.
pub fn approx(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
