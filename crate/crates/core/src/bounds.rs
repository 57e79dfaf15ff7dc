//! Upper bound (file-splitting LP), genie-aided lower bounds, optimality
//! cases and multiplicative gaps of the normalized delivery time.

use num::{One, Signed, Zero};
use thiserror::Error;

use crate::dof::per_user_dof;
use crate::lp::{self, LinearProgram, LpError, LpSolution, Row};
use crate::model::{
    binomial, index_set, int, receiver_share, subfiles_per_file, transmitter_share,
    validate_split, CacheStateIndex, CachePoint, ModelError, NetworkConfig, Rational,
    SplitRatios, SplitViolations,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoundsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("invalid split ratios: {0}")]
    Ratios(#[from] SplitViolations),
    #[error("the delivery-time LP returned {0:?} at a feasible cache point")]
    Solver(String),
}

/// Maximizer `(l, s1, s2)` of the lower-bound expression.
pub type LowerArgmax = (usize, usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerBound {
    pub tau: Rational,
    pub argmax: LowerArgmax,
}

/// The four cache regimes where the upper bound is known to be optimal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptimalityCase {
    /// `N_R mu_R + N_T mu_T >= N_R`.
    LargeCaches = 1,
    /// Every transmitter caches the whole library, receivers cache nothing.
    FullTransmitterCache = 2,
    /// Receivers cache nothing, transmitters jointly hold exactly one library.
    MinimalTransmitterCache = 3,
    /// On `mu_R + N_T mu_T = 1` when placement is uncoded within files.
    UncodedBoundary = 4,
}

impl OptimalityCase {
    pub fn id(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Optimality {
    pub case: OptimalityCase,
    pub tau_star: Rational,
}

/// Worst-case ratio guaranteed between the upper and coded lower bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GapBoundClass {
    /// `N_T >= N_R`.
    Two,
    /// `N_T < N_R` and `mu_T >= 1/N_T`.
    Twelve,
    /// `N_T < N_R` and `mu_T < 1/N_T`; holds `(N_T+N_R-1)/N_T`.
    XChannel(Rational),
}

impl GapBoundClass {
    pub fn bound(&self) -> Rational {
        match self {
            GapBoundClass::Two => int(2),
            GapBoundClass::Twelve => int(12),
            GapBoundClass::XChannel(v) => v.clone(),
        }
    }
}

/// `tau_upper / tau_lower`; both bounds vanish only at `mu_R = 1`, where the
/// gap is reported as 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gap {
    pub value: Rational,
    pub both_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NdtReport {
    pub tau_upper: Rational,
    pub ratios: SplitRatios,
    pub tau_lower_coded: Rational,
    pub tau_lower_uncoded: Rational,
    pub lower_argmax: LowerArgmax,
    pub optimality: Option<Optimality>,
    pub gap: Gap,
    pub gap_bound_class: GapBoundClass,
}

/// Delivery-time weight of state `(r, t)`: messages per receiver over DoF.
/// Zero for states cached at every receiver.
pub fn objective_weight(cfg: &NetworkConfig, idx: CacheStateIndex) -> Rational {
    if idx.r >= cfg.n_rx() || idx.t == 0 {
        return Rational::zero();
    }
    let messages = binomial(cfg.n_rx() as u64 - 1, idx.r as i64) * binomial(cfg.n_tx() as u64, idx.t as i64);
    let d = per_user_dof(cfg, idx.r, idx.t).expect("admissible index").per_user;
    int(messages) / d
}

/// The LP over split ratios; variable `k` is `index_set(cfg)[k]`.
pub fn assemble_ndt_lp(cfg: &NetworkConfig, pt: &CachePoint) -> Result<LinearProgram, BoundsError> {
    pt.require_feasible(cfg)?;
    let states = index_set(cfg);
    let column = |f: &dyn Fn(CacheStateIndex) -> u64| -> Vec<Rational> {
        states.iter().map(|&s| int(f(s))).collect()
    };
    let mut lp = LinearProgram::unit_box(states.iter().map(|&s| objective_weight(cfg, s)).collect());
    lp.eq_rows.push(Row::new(
        column(&|s| subfiles_per_file(cfg, s)),
        Rational::one(),
    ));
    lp.le_rows.push(Row::new(
        column(&|s| receiver_share(cfg, s)),
        pt.mu_r().clone(),
    ));
    lp.le_rows.push(Row::new(
        column(&|s| transmitter_share(cfg, s)),
        pt.mu_t().clone(),
    ));
    Ok(lp)
}

/// Minimum achievable delivery time and one optimal vertex.
pub fn ndt_upper(cfg: &NetworkConfig, pt: &CachePoint) -> Result<(Rational, SplitRatios), BoundsError> {
    let lp = assemble_ndt_lp(cfg, pt)?;
    match lp::solve(&lp)? {
        LpSolution::Optimal { value, point } => {
            let mut ratios = SplitRatios::new();
            for (idx, a) in index_set(cfg).into_iter().zip(point) {
                ratios.set(idx, a)?;
            }
            Ok((value, ratios))
        }
        other => Err(BoundsError::Solver(format!("{other:?}"))),
    }
}

/// Delivery time of a given split (admissible keys, total size one).
pub fn ndt_from_ratios(cfg: &NetworkConfig, s: &SplitRatios) -> Result<Rational, BoundsError> {
    // Budgets are irrelevant here, so check against the full cache point.
    let full = CachePoint::new(Rational::one(), Rational::one())?;
    validate_split(cfg, &full, s)?;
    Ok(s.iter()
        .fold(Rational::zero(), |acc, (idx, a)| acc + objective_weight(cfg, idx) * a))
}

fn lower_bound(cfg: &NetworkConfig, pt: &CachePoint, uncoded: bool) -> LowerBound {
    let (nt, nr) = (cfg.n_tx(), cfg.n_rx());
    let (mu_r, mu_t) = (pt.mu_r(), pt.mu_t());
    let deficit = Rational::one() - mu_t * int(nt as u64);
    let deficit = if uncoded && deficit.is_positive() {
        deficit
    } else {
        Rational::zero()
    };
    let half = Rational::new(1.into(), 2.into());
    let mut best = LowerBound {
        tau: Rational::zero(),
        argmax: (1, 0, 0),
    };
    for l in 1..=nt.min(nr) {
        for s1 in 0..=l {
            for s2 in 0..=nr - l {
                let (s1q, s2q) = (int(s1 as u64), int(s2 as u64));
                let mut inner = &s1q + &s2q
                    - int(((nt - l) * s2) as u64) * mu_t
                    - ((int(2 * s2 as u64 + s1 as u64 + 1) * &half) * &s1q + &s2q * &s2q) * mu_r;
                if !deficit.is_zero() {
                    let extra = (int(2 * s2 as u64 + s1 as u64) * &half)
                        * (&s1q - Rational::one())
                        + &s2q * &s2q;
                    inner += extra * &deficit;
                }
                let value = inner / int(l as u64);
                if value > best.tau {
                    best = LowerBound {
                        tau: value,
                        argmax: (l, s1, s2),
                    };
                }
            }
        }
    }
    best
}

/// Lower bound valid for any scheme, including intra-file coding.
pub fn ndt_lower_coded(cfg: &NetworkConfig, pt: &CachePoint) -> LowerBound {
    lower_bound(cfg, pt, false)
}

/// Lower bound for schemes without intra-file coding in the caches.
pub fn ndt_lower_uncoded(cfg: &NetworkConfig, pt: &CachePoint) -> LowerBound {
    lower_bound(cfg, pt, true)
}

/// First matching optimality regime (lowest id), if any.
pub fn optimality_check(
    cfg: &NetworkConfig,
    pt: &CachePoint,
    intra_file_coding: bool,
) -> Option<Optimality> {
    let (nt, nr) = (int(cfg.n_tx() as u64), int(cfg.n_rx() as u64));
    let (mu_r, mu_t) = (pt.mu_r(), pt.mu_t());
    let one = Rational::one();
    let mut matches = Vec::new();
    if &nr * mu_r + &nt * mu_t >= nr {
        matches.push(Optimality {
            case: OptimalityCase::LargeCaches,
            tau_star: &one - mu_r,
        });
    }
    if mu_r.is_zero() && mu_t.is_one() {
        matches.push(Optimality {
            case: OptimalityCase::FullTransmitterCache,
            tau_star: &nr / int(cfg.n_tx().min(cfg.n_rx()) as u64),
        });
    }
    let x_channel = (&nt + &nr - &one) / &nt;
    if mu_r.is_zero() && *mu_t == &one / &nt {
        matches.push(Optimality {
            case: OptimalityCase::MinimalTransmitterCache,
            tau_star: x_channel.clone(),
        });
    }
    if !intra_file_coding && mu_r + &nt * mu_t == one {
        matches.push(Optimality {
            case: OptimalityCase::UncodedBoundary,
            tau_star: &x_channel * (&one - mu_r),
        });
    }
    if let Some(first) = matches.first() {
        assert!(
            matches.iter().all(|m| m.tau_star == first.tau_star),
            "overlapping optimality cases disagree at {pt}: {matches:?}"
        );
    }
    matches.into_iter().next()
}

pub fn gap_bound_class(cfg: &NetworkConfig, pt: &CachePoint) -> GapBoundClass {
    let (nt, nr) = (cfg.n_tx(), cfg.n_rx());
    if nt >= nr {
        GapBoundClass::Two
    } else if pt.mu_t() * int(nt as u64) >= Rational::one() {
        GapBoundClass::Twelve
    } else {
        GapBoundClass::XChannel(int((nt + nr - 1) as u64) / int(nt as u64))
    }
}

fn gap_of(upper: &Rational, lower: &Rational) -> Gap {
    if lower.is_zero() {
        assert!(upper.is_zero(), "positive upper bound over a zero lower bound");
        Gap {
            value: Rational::one(),
            both_zero: true,
        }
    } else {
        Gap {
            value: upper / lower,
            both_zero: false,
        }
    }
}

pub fn gap(cfg: &NetworkConfig, pt: &CachePoint) -> Result<(Gap, GapBoundClass), BoundsError> {
    let (upper, _) = ndt_upper(cfg, pt)?;
    let lower = ndt_lower_coded(cfg, pt);
    Ok((gap_of(&upper, &lower.tau), gap_bound_class(cfg, pt)))
}

/// Upper and lower bounds, optimality regime and gap at one cache point.
pub fn ndt_report(
    cfg: &NetworkConfig,
    pt: &CachePoint,
    intra_file_coding: bool,
) -> Result<NdtReport, BoundsError> {
    let (tau_upper, ratios) = ndt_upper(cfg, pt)?;
    let coded = ndt_lower_coded(cfg, pt);
    let uncoded = ndt_lower_uncoded(cfg, pt);
    Ok(NdtReport {
        gap: gap_of(&tau_upper, &coded.tau),
        gap_bound_class: gap_bound_class(cfg, pt),
        optimality: optimality_check(cfg, pt, intra_file_coding),
        tau_upper,
        ratios,
        tau_lower_coded: coded.tau,
        tau_lower_uncoded: uncoded.tau,
        lower_argmax: coded.argmax,
    })
}

/// Split placing each file at all transmitters and exactly `m` receivers.
pub fn full_transmitter_cache_ratios(cfg: &NetworkConfig, m: usize) -> SplitRatios {
    let mut s = SplitRatios::new();
    s.set(
        CacheStateIndex::new(m, cfg.n_tx()),
        Rational::new(1.into(), binomial(cfg.n_rx() as u64, m as i64).into()),
    )
    .expect("unit fraction");
    s
}

/// Closed-form delivery time of [`full_transmitter_cache_ratios`] when
/// `N_T < N_R`, with `mu_R = m / N_R`.
pub fn full_transmitter_cache_ndt(cfg: &NetworkConfig, m: usize) -> Rational {
    let (nt, nr) = (cfg.n_tx(), cfg.n_rx());
    let mu_r = int(m as u64) / int(nr as u64);
    let rest = Rational::one() - &mu_r;
    if m + nt >= nr {
        rest
    } else if m + nt + 1 == nr {
        rest + Rational::one() / int(nt as u64 * binomial(nr as u64, m as i64))
    } else {
        int(nr as u64) * rest / int((nt + m) as u64)
    }
}
