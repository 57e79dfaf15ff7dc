//! Network instances, cache points, cache-state indices and split ratios.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num::{BigInt, BigRational, One, Signed, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("need at least 2 transmitters and 2 receivers, got {n_tx}x{n_rx}")]
    TooFewNodes { n_tx: usize, n_rx: usize },
    #[error("library of {n_files} files is smaller than the {n_rx} receivers")]
    SmallLibrary { n_files: usize, n_rx: usize },
    #[error("normalized cache size {0} is outside [0, 1]")]
    CacheSizeRange(Rational),
    #[error("cache point (mu_r={mu_r}, mu_t={mu_t}) violates mu_r + {n_tx}*mu_t >= 1")]
    Infeasible {
        mu_r: Rational,
        mu_t: Rational,
        n_tx: usize,
    },
    #[error("split ratio {value} for {index} is outside [0, 1]")]
    RatioRange { index: CacheStateIndex, value: Rational },
    #[error("cannot parse {0:?} as a rational number")]
    Parse(String),
    #[error("grid step {0} is outside (0, 1/2]")]
    GridStep(Rational),
}

/// An `n_tx` x `n_rx` interference network serving a library of `n_files`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NetworkConfig {
    n_tx: usize,
    n_rx: usize,
    n_files: usize,
}

impl NetworkConfig {
    pub fn new(n_tx: usize, n_rx: usize, n_files: usize) -> Result<Self, ModelError> {
        if n_tx < 2 || n_rx < 2 {
            return Err(ModelError::TooFewNodes { n_tx, n_rx });
        }
        if n_files < n_rx {
            return Err(ModelError::SmallLibrary { n_files, n_rx });
        }
        Ok(Self {
            n_tx,
            n_rx,
            n_files,
        })
    }

    /// Square-library shorthand: `n_files = max(n_tx, n_rx)`.
    pub fn square(n_tx: usize, n_rx: usize) -> Result<Self, ModelError> {
        Self::new(n_tx, n_rx, n_tx.max(n_rx))
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_files(&self) -> usize {
        self.n_files
    }
}

impl fmt::Display for NetworkConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{} (L={})", self.n_tx, self.n_rx, self.n_files)
    }
}

/// Normalized receiver and transmitter cache sizes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CachePoint {
    mu_r: Rational,
    mu_t: Rational,
}

impl CachePoint {
    pub fn new(mu_r: Rational, mu_t: Rational) -> Result<Self, ModelError> {
        for mu in [&mu_r, &mu_t] {
            if mu.is_negative() || *mu > Rational::one() {
                return Err(ModelError::CacheSizeRange(mu.clone()));
            }
        }
        Ok(Self { mu_r, mu_t })
    }

    /// Builds a point from small fractions, e.g. `CachePoint::frac((1, 3), (2, 3))`.
    pub fn frac(mu_r: (i64, i64), mu_t: (i64, i64)) -> Result<Self, ModelError> {
        Self::new(ratio(mu_r.0, mu_r.1), ratio(mu_t.0, mu_t.1))
    }

    pub fn parse(mu_r: &str, mu_t: &str) -> Result<Self, ModelError> {
        Self::new(parse_rational(mu_r)?, parse_rational(mu_t)?)
    }

    pub fn mu_r(&self) -> &Rational {
        &self.mu_r
    }

    pub fn mu_t(&self) -> &Rational {
        &self.mu_t
    }

    /// Fails with [`ModelError::Infeasible`] unless the point is feasible for `cfg`.
    pub fn require_feasible(&self, cfg: &NetworkConfig) -> Result<(), ModelError> {
        if feasible_cache_point(cfg, self) {
            Ok(())
        } else {
            Err(ModelError::Infeasible {
                mu_r: self.mu_r.clone(),
                mu_t: self.mu_t.clone(),
                n_tx: cfg.n_tx,
            })
        }
    }
}

impl fmt::Display for CachePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.mu_r, self.mu_t)
    }
}

/// Cache state of a subfile: stored at `r` receivers and `t` transmitters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheStateIndex {
    pub r: usize,
    pub t: usize,
}

impl CacheStateIndex {
    pub fn new(r: usize, t: usize) -> Self {
        Self { r, t }
    }

    /// Membership in the admissible set: every bit missing at some receiver
    /// must be held by at least one transmitter.
    pub fn admissible(&self, cfg: &NetworkConfig) -> bool {
        self.r <= cfg.n_rx && self.t <= cfg.n_tx && self.r + cfg.n_rx * self.t >= cfg.n_rx
    }
}

impl fmt::Display for CacheStateIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.r, self.t)
    }
}

impl FromStr for CacheStateIndex {
    type Err = ModelError;

    /// Parses `"r,t"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::Parse(s.to_string());
        let (r, t) = s.split_once(',').ok_or_else(bad)?;
        Ok(Self {
            r: r.trim().parse().map_err(|_| bad())?,
            t: t.trim().parse().map_err(|_| bad())?,
        })
    }
}

/// Fraction of every file cached in each cache state. Missing keys are zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitRatios {
    ratios: BTreeMap<CacheStateIndex, Rational>,
}

impl SplitRatios {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `a_{r,t}`; zero values are dropped so the map stays sparse.
    pub fn set(&mut self, index: CacheStateIndex, value: Rational) -> Result<(), ModelError> {
        if value.is_negative() || value > Rational::one() {
            return Err(ModelError::RatioRange { index, value });
        }
        if value.is_zero() {
            self.ratios.remove(&index);
        } else {
            self.ratios.insert(index, value);
        }
        Ok(())
    }

    pub fn with(mut self, r: usize, t: usize, value: Rational) -> Result<Self, ModelError> {
        self.set(CacheStateIndex::new(r, t), value)?;
        Ok(self)
    }

    pub fn get(&self, index: CacheStateIndex) -> Rational {
        self.ratios.get(&index).cloned().unwrap_or_else(Rational::zero)
    }

    /// Nonzero entries in lexicographic index order.
    pub fn iter(&self) -> impl Iterator<Item = (CacheStateIndex, &Rational)> {
        self.ratios.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratios.is_empty()
    }
}

/// Which of the three file-size constraints a split violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitConstraint {
    /// Subfiles of a file add up to the whole file.
    TotalSize,
    /// Receiver cache budget.
    ReceiverCache,
    /// Transmitter cache budget.
    TransmitterCache,
    /// A key outside the admissible index set.
    Admissible,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub constraint: SplitConstraint,
    pub lhs: Rational,
    pub rhs: Rational,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("split ratios violate {} constraint(s): {0:?}", .0.len())]
pub struct SplitViolations(pub Vec<Violation>);

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `C(n, k)`, zero when `k < 0` or `k > n`.
pub fn binomial(n: u64, k: i64) -> u64 {
    if k < 0 || k as u64 > n {
        return 0;
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    u64::try_from(acc).expect("binomial overflow")
}

/// Binomial with a possibly negative top argument folded to zero.
pub(crate) fn choose(n: i64, k: i64) -> u64 {
    if n < 0 {
        0
    } else {
        binomial(n as u64, k)
    }
}

/// All `k`-subsets of `0..n` as sorted vectors, in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..n {
            if n - j < k - cur.len() {
                break;
            }
            cur.push(j);
            go(j + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        go(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

pub fn feasible_cache_point(cfg: &NetworkConfig, pt: &CachePoint) -> bool {
    let unit = Rational::one();
    let in_range = |mu: &Rational| !mu.is_negative() && *mu <= unit;
    in_range(&pt.mu_r) && in_range(&pt.mu_t) && &pt.mu_r + &pt.mu_t * int(cfg.n_tx as u64) >= unit
}

/// Feasible points of the lattice `{0, step, 2 step, ..} ∩ [0, 1]` squared,
/// ordered by `mu_r` then `mu_t`.
pub fn feasible_grid(cfg: &NetworkConfig, step: &Rational) -> Result<Vec<CachePoint>, ModelError> {
    if !step.is_positive() || *step > ratio(1, 2) {
        return Err(ModelError::GridStep(step.clone()));
    }
    let mut axis = Vec::new();
    let mut v = Rational::zero();
    while v <= Rational::one() {
        axis.push(v.clone());
        v += step;
    }
    let mut out = Vec::new();
    for mu_r in &axis {
        for mu_t in &axis {
            let pt = CachePoint::new(mu_r.clone(), mu_t.clone())?;
            if feasible_cache_point(cfg, &pt) {
                out.push(pt);
            }
        }
    }
    Ok(out)
}

/// The admissible cache states in lexicographic `(r, t)` order.
pub fn index_set(cfg: &NetworkConfig) -> Vec<CacheStateIndex> {
    let mut out = Vec::with_capacity((cfg.n_rx + 1) * cfg.n_tx + 1);
    for r in 0..=cfg.n_rx {
        for t in 0..=cfg.n_tx {
            let idx = CacheStateIndex::new(r, t);
            if idx.admissible(cfg) {
                out.push(idx);
            }
        }
    }
    out
}

/// Number of subfiles per file in cache state `idx`.
pub fn subfiles_per_file(cfg: &NetworkConfig, idx: CacheStateIndex) -> u64 {
    binomial(cfg.n_rx as u64, idx.r as i64) * binomial(cfg.n_tx as u64, idx.t as i64)
}

/// Subfiles per file in state `idx` that a fixed receiver caches.
pub fn receiver_share(cfg: &NetworkConfig, idx: CacheStateIndex) -> u64 {
    choose(cfg.n_rx as i64 - 1, idx.r as i64 - 1) * binomial(cfg.n_tx as u64, idx.t as i64)
}

/// Subfiles per file in state `idx` that a fixed transmitter caches.
pub fn transmitter_share(cfg: &NetworkConfig, idx: CacheStateIndex) -> u64 {
    binomial(cfg.n_rx as u64, idx.r as i64) * choose(cfg.n_tx as i64 - 1, idx.t as i64 - 1)
}

/// Checks admissibility, total size (equality) and both cache budgets exactly.
pub fn validate_split(
    cfg: &NetworkConfig,
    pt: &CachePoint,
    s: &SplitRatios,
) -> Result<(), SplitViolations> {
    let mut violations = Vec::new();
    let mut total = Rational::zero();
    let mut rx_load = Rational::zero();
    let mut tx_load = Rational::zero();
    for (idx, a) in s.iter() {
        if !idx.admissible(cfg) {
            violations.push(Violation {
                constraint: SplitConstraint::Admissible,
                lhs: int(idx.r as u64) + int((cfg.n_rx * idx.t) as u64),
                rhs: int(cfg.n_rx as u64),
            });
            continue;
        }
        total += a * int(subfiles_per_file(cfg, idx));
        rx_load += a * int(receiver_share(cfg, idx));
        tx_load += a * int(transmitter_share(cfg, idx));
    }
    if total != Rational::one() {
        violations.push(Violation {
            constraint: SplitConstraint::TotalSize,
            lhs: total,
            rhs: Rational::one(),
        });
    }
    if rx_load > pt.mu_r {
        violations.push(Violation {
            constraint: SplitConstraint::ReceiverCache,
            lhs: rx_load,
            rhs: pt.mu_r.clone(),
        });
    }
    if tx_load > pt.mu_t {
        violations.push(Violation {
            constraint: SplitConstraint::TransmitterCache,
            lhs: tx_load,
            rhs: pt.mu_t.clone(),
        });
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(SplitViolations(violations))
    }
}

/// Parses `p/q`, an integer, or a plain decimal such as `0.125` exactly.
pub fn parse_rational(s: &str) -> Result<Rational, ModelError> {
    let bad = || ModelError::Parse(s.to_string());
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{whole}{frac}");
    let numer: BigInt = digits.parse().map_err(|_| bad())?;
    let denom = num::pow(BigInt::from(10), frac.len());
    let value = Rational::new(numer, denom);
    Ok(if negative { -value } else { value })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(nt: usize, nr: usize, l: usize) -> NetworkConfig {
        NetworkConfig::new(nt, nr, l).unwrap()
    }

    #[test]
    fn feasibility_examples() {
        let c = cfg(3, 3, 3);
        assert!(feasible_cache_point(&c, &CachePoint::frac((0, 1), (1, 3)).unwrap()));
        assert!(feasible_cache_point(&c, &CachePoint::frac((1, 1), (0, 1)).unwrap()));
        assert!(!feasible_cache_point(&c, &CachePoint::frac((0, 1), (1, 4)).unwrap()));
    }

    #[test]
    fn index_set_2x2_order() {
        let got: Vec<(usize, usize)> = index_set(&cfg(2, 2, 2)).iter().map(|i| (i.r, i.t)).collect();
        assert_eq!(got, vec![(0, 1), (0, 2), (1, 1), (1, 2), (2, 0), (2, 1), (2, 2)]);
    }

    #[test]
    fn index_set_3x3_has_13() {
        let set = index_set(&cfg(3, 3, 3));
        assert_eq!(set.len(), 13);
        assert!(set.contains(&CacheStateIndex::new(3, 0)));
    }

    #[test]
    fn index_set_cardinality() {
        for nt in 2..=6 {
            for nr in 2..=6 {
                let c = cfg(nt, nr, nr);
                assert_eq!(index_set(&c).len(), (nr + 1) * nt + 1);
            }
        }
    }

    #[test]
    fn binomial_examples() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(3, 0), 1);
        assert_eq!(binomial(2, 3), 0);
        assert_eq!(binomial(2, -1), 0);
        assert_eq!(binomial(30, 15), 155_117_520);
    }

    #[test]
    fn grid_counts() {
        let c = cfg(3, 3, 3);
        assert_eq!(feasible_grid(&c, &ratio(1, 3)).unwrap().len(), 13);
        assert_eq!(feasible_grid(&c, &ratio(1, 2)).unwrap().len(), 7);
        let g = feasible_grid(&c, &ratio(1, 24)).unwrap();
        assert!(g.iter().all(|p| feasible_cache_point(&c, p)));
        assert_eq!(g[0], CachePoint::frac((0, 1), (1, 3)).unwrap());
        assert!(feasible_grid(&c, &ratio(0, 1)).is_err());
        assert!(feasible_grid(&c, &ratio(2, 3)).is_err());
    }

    #[test]
    fn subsets_lexicographic() {
        assert_eq!(subsets(4, 2).len(), 6);
        assert_eq!(subsets(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(subsets(3, 0), vec![Vec::<usize>::new()]);
        assert!(subsets(2, 3).is_empty());
    }

    #[test]
    fn validate_split_examples() {
        let c = cfg(3, 3, 3);
        let pt = CachePoint::frac((1, 3), (2, 3)).unwrap();
        let two_parts = SplitRatios::new()
            .with(0, 3, ratio(2, 3))
            .unwrap()
            .with(3, 0, ratio(1, 3))
            .unwrap();
        assert!(validate_split(&c, &pt, &two_parts).is_ok());
        let nine_parts = SplitRatios::new().with(1, 2, ratio(1, 9)).unwrap();
        assert!(validate_split(&c, &pt, &nine_parts).is_ok());

        let c2 = cfg(2, 2, 2);
        let pt2 = CachePoint::frac((0, 1), (1, 2)).unwrap();
        let short = SplitRatios::new().with(0, 1, ratio(1, 4)).unwrap();
        let err = validate_split(&c2, &pt2, &short).unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert_eq!(err.0[0].constraint, SplitConstraint::TotalSize);
        assert_eq!(err.0[0].lhs, ratio(1, 2));
    }

    #[test]
    fn validate_split_reports_budgets() {
        let c = cfg(3, 3, 3);
        let pt = CachePoint::frac((0, 1), (1, 3)).unwrap();
        let all_rx = SplitRatios::new().with(3, 0, ratio(1, 1)).unwrap();
        let err = validate_split(&c, &pt, &all_rx).unwrap_err();
        assert_eq!(err.0[0].constraint, SplitConstraint::ReceiverCache);
        assert_eq!(err.0[0].lhs, ratio(1, 1));
    }

    #[test]
    fn inadmissible_key_is_reported() {
        let c = cfg(2, 2, 2);
        let pt = CachePoint::frac((1, 1), (1, 1)).unwrap();
        let s = SplitRatios::new().with(1, 0, ratio(1, 2)).unwrap();
        let err = validate_split(&c, &pt, &s).unwrap_err();
        assert!(err.0.iter().any(|v| v.constraint == SplitConstraint::Admissible));
    }

    #[test]
    fn config_guards() {
        assert!(matches!(NetworkConfig::new(1, 3, 3), Err(ModelError::TooFewNodes { .. })));
        assert!(matches!(NetworkConfig::new(3, 3, 2), Err(ModelError::SmallLibrary { .. })));
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("1/3").unwrap(), ratio(1, 3));
        assert_eq!(parse_rational("0.125").unwrap(), ratio(1, 8));
        assert_eq!(parse_rational("2").unwrap(), ratio(2, 1));
        assert_eq!(parse_rational("-.5").unwrap(), ratio(-1, 2));
        assert_eq!(parse_rational(" 4/6 ").unwrap(), ratio(2, 3));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational(".").is_err());
        assert!(parse_rational("1e3").is_err());
    }

    #[test]
    fn cache_point_range() {
        assert!(CachePoint::frac((3, 2), (0, 1)).is_err());
        assert!(CachePoint::frac((-1, 2), (0, 1)).is_err());
    }

    #[test]
    fn index_parses() {
        assert_eq!("1,2".parse::<CacheStateIndex>().unwrap(), CacheStateIndex::new(1, 2));
        assert!("1;2".parse::<CacheStateIndex>().is_err());
    }
}
