//! Numerical instantiation of the neutralization and alignment schemes behind
//! the achievable DoF, plus their finite-extension bookkeeping.

mod channel;
mod scheme;
mod verify;

use std::fmt;

use num::{BigInt, One, Zero};
use thiserror::Error;

use crate::dof::{per_user_dof, DofCase};
use crate::model::{binomial, subsets, NetworkConfig, Rational};

pub use channel::{cofactor_precoder, sample_channel, ChannelRealization, C64};
pub use scheme::{
    build_case_a, build_case_b, build_case_c_full, build_case_c_partial, build_scheme, check_alignment,
    exponent_grid, Column, Factor, PrecoderScheme, SchemeSymbol,
};
pub use verify::{verify_over_seeds, verify_scheme, Verification};

/// Largest symbol-extension order accepted by the builders.
pub const MAX_N: u32 = 2;
/// Largest extension length `S` accepted by the builders.
pub const MAX_EXTENSION: usize = 4096;
pub const NEUTRALIZATION_TOL: f64 = 1e-9;
pub const RANK_TOL: f64 = 1e-9;
pub const DECODE_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PhyError {
    #[error("a channel needs at least one slot")]
    NoSlots,
    #[error("bordered matrix needs one more transmitter than neutralized receivers, got {tx} and {neutralize}")]
    BorderShape { tx: usize, neutralize: usize },
    #[error("all cofactors vanish in slot {slot}")]
    DegenerateCofactor { slot: usize },
    #[error("case {case} does not apply to (r, t) = ({r}, {t}): {reason}")]
    InvalidCase {
        case: SchemeCase,
        r: usize,
        t: usize,
        reason: &'static str,
    },
    #[error("extension order N = {n} is outside 1..={MAX_N}")]
    ExtensionOrder { n: u32 },
    #[error("extension of {slots} slots exceeds {MAX_EXTENSION}")]
    ExtensionTooLong { slots: BigInt },
    #[error("symbol {symbol} does not land in an interference column at receiver {receiver}")]
    Misaligned { symbol: usize, receiver: usize },
    #[error("(r, t') = ({r}, {t_prime}) cannot wrap into groups of {t}")]
    Wrap { r: usize, t: usize, t_prime: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeCase {
    /// `r + t >= N_R`: neutralization only.
    A,
    /// `r + t = N_R - 1`: neutralization plus alignment.
    B,
    /// `r + t <= N_R - 2`, `t < N_T`: neutralization plus partial alignment.
    CPartial,
    /// `r + t <= N_R - 2`, `t = N_T`: neutralization without alignment.
    CFull,
}

impl fmt::Display for SchemeCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeCase::A => "A",
            SchemeCase::B => "B",
            SchemeCase::CPartial => "C (t < N_T)",
            SchemeCase::CFull => "C (t = N_T)",
        })
    }
}

impl SchemeCase {
    /// Case C variant for the given group size.
    pub fn c_for(cfg: &NetworkConfig, t: usize) -> Self {
        if t < cfg.n_tx() {
            SchemeCase::CPartial
        } else {
            SchemeCase::CFull
        }
    }
}

fn big(n: u64) -> BigInt {
    BigInt::from(n)
}

/// Finite-extension DoF `A N^K / (A N^K + B (N+1)^K)` of one scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteDof {
    pub desired_weight: BigInt,
    pub interference_weight: BigInt,
    pub exponent: u32,
}

impl FiniteDof {
    pub fn new(cfg: &NetworkConfig, case: SchemeCase, r: usize, t: usize) -> Result<Self, PhyError> {
        let (nt, nr) = (cfg.n_tx() as u64, cfg.n_rx() as u64);
        let invalid = |reason| PhyError::InvalidCase { case, r, t, reason };
        if r as u64 >= nr {
            return Err(invalid("r must be below N_R"));
        }
        if t == 0 || t as u64 > nt {
            return Err(invalid("t must lie in 1..=N_T"));
        }
        let (r64, t64) = (r as u64, t as u64);
        let (ri, ti) = (r as i64, t as i64);
        match case {
            SchemeCase::A => {
                if r64 + t64 < nr {
                    return Err(invalid("needs r + t >= N_R"));
                }
                Ok(Self {
                    desired_weight: big(binomial(nr - 1, ri)),
                    interference_weight: BigInt::zero(),
                    exponent: 0,
                })
            }
            SchemeCase::B => {
                if r64 + t64 + 1 != nr {
                    return Err(invalid("needs r + t = N_R - 1"));
                }
                let k = binomial(nr - 1, ri + 1) * binomial(nt, ti);
                Ok(Self {
                    desired_weight: big(binomial(nr - 1, ri) * binomial(nt, ti) * t64),
                    interference_weight: BigInt::one(),
                    exponent: k as u32,
                })
            }
            SchemeCase::CPartial | SchemeCase::CFull => {
                if r64 + t64 + 2 > nr {
                    return Err(invalid("needs r + t <= N_R - 2"));
                }
                if case == SchemeCase::CPartial && t64 == nt {
                    return Err(invalid("needs t < N_T"));
                }
                if case == SchemeCase::CFull && t64 != nt {
                    return Err(invalid("needs t = N_T"));
                }
                if case == SchemeCase::CFull {
                    return Ok(Self {
                        desired_weight: big(binomial(nr - 1, ri) * binomial(nr - r64 - 1, ti - 1)),
                        interference_weight: big(binomial(nr - 1, ri + 1) * binomial(nr - r64 - 2, ti - 1)),
                        exponent: 0,
                    });
                }
                let desired = binomial(nr - 1, ri) * binomial(nt, ti) * binomial(nr - r64 - 1, ti - 1) * t64;
                let interference =
                    binomial(nr - 1, ri + 1) * binomial(nr - r64 - 2, ti - 1) * binomial(nt, ti - 1);
                Ok(Self {
                    desired_weight: big(desired),
                    interference_weight: big(interference),
                    exponent: ((nr - r64 - t64) * (nt - t64 + 1)) as u32,
                })
            }
        }
    }

    /// Symbols decoded per receiver, `S_0`.
    pub fn desired(&self, n: u32) -> BigInt {
        &self.desired_weight * num::pow(BigInt::from(n), self.exponent as usize)
    }

    /// Extension length `S`.
    pub fn extension(&self, n: u32) -> BigInt {
        self.desired(n) + &self.interference_weight * num::pow(BigInt::from(n + 1), self.exponent as usize)
    }

    pub fn at(&self, n: u32) -> Rational {
        Rational::new(self.desired(n), self.extension(n))
    }

    /// Ratio of leading terms as `N` grows.
    pub fn limit(&self) -> Rational {
        Rational::new(
            self.desired_weight.clone(),
            &self.desired_weight + &self.interference_weight,
        )
    }
}

/// Exact `S_0 / S` of `case` at extension order `n`.
pub fn finite_n_dof(cfg: &NetworkConfig, r: usize, t: usize, n: u32, case: SchemeCase) -> Result<Rational, PhyError> {
    if n == 0 {
        return Err(PhyError::ExtensionOrder { n });
    }
    Ok(FiniteDof::new(cfg, case, r, t)?.at(n))
}

/// How a delivered cache state reaches its per-user DoF.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeliveryPlan {
    Direct(SchemeCase),
    /// Time-share over receiver sets of size `r + t`, each served by case A.
    ReceiverSetSplit,
    /// Messages re-wrapped into groups of `t_prime` transmitters.
    Reduced { t_prime: usize, case: SchemeCase },
}

/// Scheme achieving `per_user_dof(cfg, r, t)` and its DoF.
pub fn delivery_plan(cfg: &NetworkConfig, r: usize, t: usize) -> Result<(DeliveryPlan, Rational), PhyError> {
    let entry = per_user_dof(cfg, r, t).map_err(|_| PhyError::InvalidCase {
        case: SchemeCase::A,
        r,
        t,
        reason: "state is not delivered",
    })?;
    Ok(match entry.case {
        DofCase::Full => (DeliveryPlan::Direct(SchemeCase::A), FiniteDof::new(cfg, SchemeCase::A, r, t)?.limit()),
        DofCase::OneResidual => (DeliveryPlan::Direct(SchemeCase::B), FiniteDof::new(cfg, SchemeCase::B, r, t)?.limit()),
        DofCase::SplitOrAlign => {
            let t_prime = entry.best_t_prime.expect("alignment candidate");
            let case = SchemeCase::c_for(cfg, t_prime);
            let aligned = FiniteDof::new(cfg, case, r, t_prime)?.limit();
            let split = receiver_set_split_dof(cfg, r, t);
            if aligned > split {
                let plan = if t_prime == t {
                    DeliveryPlan::Direct(case)
                } else {
                    DeliveryPlan::Reduced { t_prime, case }
                };
                (plan, aligned)
            } else {
                (DeliveryPlan::ReceiverSetSplit, split)
            }
        }
    })
}

/// `C(N_R-1, r+t-1) / C(N_R, r+t)`: share of receiver sets containing a given receiver.
pub fn receiver_set_split_dof(cfg: &NetworkConfig, r: usize, t: usize) -> Rational {
    let nr = cfg.n_rx() as u64;
    let k = (r + t) as i64;
    Rational::new(big(binomial(nr - 1, k - 1)), big(binomial(nr, k)))
}

/// A message of the smaller-group channel built from pieces of larger-group messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperMessage {
    pub rx_group: Vec<usize>,
    pub tx_group: Vec<usize>,
    /// Original transmitter groups contributing one piece each.
    pub sources: Vec<Vec<usize>>,
}

/// Splits every message `W_{R,T}`, `|T| = t`, into one piece per
/// `T' ⊂ T` with `|T'| = t'`, and bundles the pieces by `(R, T')`.
pub fn wrap_smaller_groups(
    cfg: &NetworkConfig,
    r: usize,
    t: usize,
    t_prime: usize,
) -> Result<Vec<SuperMessage>, PhyError> {
    if t_prime == 0 || t_prime > t || t > cfg.n_tx() || r >= cfg.n_rx() {
        return Err(PhyError::Wrap { r, t, t_prime });
    }
    let mut out = Vec::new();
    for rx_group in subsets(cfg.n_rx(), r + 1) {
        for tx_group in subsets(cfg.n_tx(), t_prime) {
            let sources = subsets(cfg.n_tx(), t)
                .into_iter()
                .filter(|big| tx_group.iter().all(|p| big.contains(p)))
                .collect();
            out.push(SuperMessage {
                rx_group: rx_group.clone(),
                tx_group,
                sources,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dof::alignment_dof;
    use crate::model::ratio;

    fn cfg(nt: usize, nr: usize) -> NetworkConfig {
        NetworkConfig::square(nt, nr).unwrap()
    }

    #[test]
    fn finite_values() {
        let c = cfg(3, 3);
        assert_eq!(finite_n_dof(&c, 0, 2, 1, SchemeCase::B).unwrap(), ratio(6, 70));
        assert_eq!(FiniteDof::new(&c, SchemeCase::B, 0, 2).unwrap().limit(), ratio(6, 7));
        assert_eq!(finite_n_dof(&c, 1, 1, 1, SchemeCase::B).unwrap(), ratio(3, 7));
        assert_eq!(FiniteDof::new(&c, SchemeCase::B, 1, 1).unwrap().limit(), ratio(6, 7));
        assert_eq!(finite_n_dof(&c, 0, 1, 1, SchemeCase::CPartial).unwrap(), ratio(3, 131));
        assert_eq!(FiniteDof::new(&c, SchemeCase::CPartial, 0, 1).unwrap().limit(), ratio(3, 5));
        let c24 = NetworkConfig::new(2, 4, 4).unwrap();
        let full = FiniteDof::new(&c24, SchemeCase::CFull, 0, 2).unwrap();
        assert_eq!((full.desired(1), full.extension(1)), (big(3), big(9)));
        assert_eq!(finite_n_dof(&c24, 0, 2, 2, SchemeCase::CFull).unwrap(), ratio(1, 3));
    }

    #[test]
    fn case_a_is_one_for_any_n() {
        for n in 1..=5 {
            assert_eq!(finite_n_dof(&cfg(3, 3), 1, 2, n, SchemeCase::A).unwrap(), ratio(1, 1));
        }
    }

    #[test]
    fn finite_values_increase_toward_limit() {
        let m = FiniteDof::new(&cfg(3, 3), SchemeCase::B, 1, 1).unwrap();
        let mut prev = ratio(0, 1);
        for n in 1..=40 {
            let d = m.at(n);
            assert!(d > prev && d < m.limit());
            prev = d;
        }
    }

    #[test]
    fn invalid_parameters() {
        let c = cfg(3, 3);
        assert!(FiniteDof::new(&c, SchemeCase::A, 0, 2).is_err());
        assert!(FiniteDof::new(&c, SchemeCase::B, 0, 1).is_err());
        assert!(FiniteDof::new(&c, SchemeCase::CPartial, 0, 2).is_err());
        assert!(FiniteDof::new(&c, SchemeCase::CFull, 0, 1).is_err());
        assert!(FiniteDof::new(&c, SchemeCase::A, 3, 1).is_err());
        assert!(finite_n_dof(&c, 1, 2, 0, SchemeCase::A).is_err());
    }

    #[test]
    fn partial_limit_is_alignment_term() {
        for nt in 2..=5 {
            for nr in 2..=6 {
                let c = cfg(nt, nr);
                for r in 0..nr {
                    for t in 1..=nt {
                        if r + t + 2 > nr {
                            continue;
                        }
                        let case = SchemeCase::c_for(&c, t);
                        let lim = FiniteDof::new(&c, case, r, t).unwrap().limit();
                        assert_eq!(lim, alignment_dof(&c, r, t), "{nt}x{nr} ({r},{t})");
                    }
                }
            }
        }
    }

    #[test]
    fn plans_reach_per_user_dof() {
        for nt in 1..=4 {
            for nr in 1..=4 {
                let Ok(c) = NetworkConfig::square(nt, nr) else {
                    continue;
                };
                for r in 0..nr {
                    for t in 1..=nt {
                        let (_, d) = delivery_plan(&c, r, t).unwrap();
                        assert_eq!(d, per_user_dof(&c, r, t).unwrap().per_user, "{nt}x{nr} ({r},{t})");
                    }
                }
            }
        }
        let c24 = NetworkConfig::new(2, 4, 4).unwrap();
        assert_eq!(delivery_plan(&c24, 0, 2).unwrap(), (DeliveryPlan::ReceiverSetSplit, ratio(1, 2)));
        assert_eq!(
            delivery_plan(&cfg(3, 3), 0, 1).unwrap(),
            (DeliveryPlan::Direct(SchemeCase::CPartial), ratio(3, 5))
        );
    }

    #[test]
    fn wrapping_covers_every_piece_once() {
        let c = NetworkConfig::new(4, 4, 4).unwrap();
        let (r, t, tp) = (0, 3, 2);
        let wrapped = wrap_smaller_groups(&c, r, t, tp).unwrap();
        assert_eq!(wrapped.len() as u64, binomial(4, 1) * binomial(4, 2));
        let mut pieces = std::collections::BTreeSet::new();
        for m in &wrapped {
            assert_eq!(m.sources.len() as u64, binomial(4 - 2, 1));
            for src in &m.sources {
                assert!(m.tx_group.iter().all(|p| src.contains(p)));
                assert!(pieces.insert((m.rx_group.clone(), src.clone(), m.tx_group.clone())));
            }
        }
        assert_eq!(pieces.len() as u64, binomial(4, 1) * binomial(4, 3) * binomial(3, 2));
        assert!(wrap_smaller_groups(&c, 0, 2, 3).is_err());
    }
}
