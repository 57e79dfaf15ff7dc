//! Achievable per-user DoF of the cooperative X-multicast channel formed by
//! all size-`t` transmitter groups and size-`r+1` receiver groups.

use num::Zero;
use thiserror::Error;

use crate::model::{binomial, choose, int, NetworkConfig, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("(r, t) = ({r}, {t}) is outside 0 <= r < {n_rx}, 1 <= t <= {n_tx}")]
pub struct DofRangeError {
    pub r: usize,
    pub t: usize,
    pub n_rx: usize,
    pub n_tx: usize,
}

/// Which construction achieves the DoF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DofCase {
    /// `r + t >= N_R`: neutralize every undesired receiver, DoF 1.
    Full,
    /// `r + t = N_R - 1`: one residual receiver per symbol, handled by alignment.
    OneResidual,
    /// `r + t <= N_R - 2`: best of message splitting and neutralize-then-align.
    SplitOrAlign,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofEntry {
    pub r: usize,
    pub t: usize,
    pub per_user: Rational,
    pub case: DofCase,
    /// Group size maximizing the alignment term (smallest on ties).
    pub best_t_prime: Option<usize>,
}

fn check(cfg: &NetworkConfig, r: usize, t: usize) -> Result<(), DofRangeError> {
    if r < cfg.n_rx() && (1..=cfg.n_tx()).contains(&t) {
        Ok(())
    } else {
        Err(DofRangeError {
            r,
            t,
            n_rx: cfg.n_rx(),
            n_tx: cfg.n_tx(),
        })
    }
}

pub fn classify(cfg: &NetworkConfig, r: usize, t: usize) -> DofCase {
    let nr = cfg.n_rx();
    if r + t >= nr {
        DofCase::Full
    } else if r + t + 1 == nr {
        DofCase::OneResidual
    } else {
        DofCase::SplitOrAlign
    }
}

/// Desired and interference weights `(a, b)` of the neutralize-then-align
/// scheme with group size `t'`; its DoF is `a / (a + b)`.
pub fn alignment_weights(cfg: &NetworkConfig, r: usize, t_prime: usize) -> (u64, u64) {
    let (nt, nr) = (cfg.n_tx() as i64, cfg.n_rx() as i64);
    let (r, tp) = (r as i64, t_prime as i64);
    let desired =
        choose(nr - 1, r) * choose(nt, tp) * choose(nr - r - 1, tp - 1) * t_prime as u64;
    let interference = choose(nr - 1, r + 1) * choose(nr - r - 2, tp - 1) * choose(nt, tp - 1);
    (desired, interference)
}

/// DoF of neutralize-then-align with group size `t'`.
pub fn alignment_dof(cfg: &NetworkConfig, r: usize, t_prime: usize) -> Rational {
    let (a, b) = alignment_weights(cfg, r, t_prime);
    Rational::new(a.into(), (a + b).into())
}

/// DoF of the one-residual-receiver case, `X / (X + 1)`.
pub fn one_residual_dof(cfg: &NetworkConfig, r: usize, t: usize) -> Rational {
    let x = binomial(cfg.n_rx() as u64 - 1, r as i64) * binomial(cfg.n_tx() as u64, t as i64) * t as u64;
    Rational::new(x.into(), (x + 1).into())
}

pub fn per_user_dof(cfg: &NetworkConfig, r: usize, t: usize) -> Result<DofEntry, DofRangeError> {
    check(cfg, r, t)?;
    let case = classify(cfg, r, t);
    let (per_user, best_t_prime) = match case {
        DofCase::Full => (Rational::from_integer(1.into()), None),
        DofCase::OneResidual => (one_residual_dof(cfg, r, t), None),
        DofCase::SplitOrAlign => {
            let mut best = (Rational::zero(), 1);
            for tp in 1..=t {
                let d = alignment_dof(cfg, r, tp);
                if d > best.0 {
                    best = (d, tp);
                }
            }
            let split = Rational::new(((r + t) as u64).into(), (cfg.n_rx() as u64).into());
            (best.0.max(split), Some(best.1))
        }
    };
    Ok(DofEntry {
        r,
        t,
        per_user,
        case,
        best_t_prime,
    })
}

/// Sum DoF over the `N_R / (r+1)` receivers served per message in parallel.
pub fn sum_dof(cfg: &NetworkConfig, r: usize, t: usize) -> Result<Rational, DofRangeError> {
    let d = per_user_dof(cfg, r, t)?.per_user;
    Ok(d * int(cfg.n_rx() as u64) / int(r as u64 + 1))
}

/// Entries for `r` in `0..N_R`, `t` in `1..=N_T`, lexicographic.
pub fn dof_table(cfg: &NetworkConfig) -> Vec<DofEntry> {
    (0..cfg.n_rx())
        .flat_map(|r| (1..=cfg.n_tx()).map(move |t| (r, t)))
        .map(|(r, t)| per_user_dof(cfg, r, t).expect("in range by construction"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ratio;

    fn cfg(nt: usize, nr: usize) -> NetworkConfig {
        NetworkConfig::square(nt, nr).unwrap()
    }

    #[test]
    fn three_by_three_values() {
        let c = cfg(3, 3);
        let d = |r, t| per_user_dof(&c, r, t).unwrap().per_user;
        assert_eq!(d(0, 2), ratio(6, 7));
        assert_eq!(d(1, 2), ratio(1, 1));
        assert_eq!(d(0, 1), ratio(3, 5));
        assert_eq!(d(1, 1), ratio(6, 7));
        assert_eq!(d(0, 3), ratio(1, 1));
    }

    #[test]
    fn miso_broadcast() {
        assert_eq!(per_user_dof(&cfg(2, 2), 0, 2).unwrap().per_user, ratio(1, 1));
    }

    #[test]
    fn sums() {
        let c = cfg(3, 3);
        assert_eq!(sum_dof(&c, 1, 2).unwrap(), ratio(3, 2));
        assert_eq!(sum_dof(&c, 0, 1).unwrap(), ratio(9, 5));
        assert_eq!(sum_dof(&cfg(2, 2), 1, 1).unwrap(), ratio(1, 1));
    }

    #[test]
    fn table_shapes() {
        assert_eq!(dof_table(&cfg(2, 2)).len(), 4);
        let t33 = dof_table(&cfg(3, 3));
        assert_eq!(t33.len(), 9);
        assert_eq!(t33.iter().find(|e| e.r == 1 && e.t == 1).unwrap().per_user, ratio(6, 7));
        let c32 = cfg(3, 2);
        for e in dof_table(&c32) {
            if e.r + e.t >= 2 {
                assert_eq!(e.per_user, ratio(1, 1));
            }
        }
    }

    #[test]
    fn out_of_range() {
        let c = cfg(3, 3);
        assert!(per_user_dof(&c, 3, 1).is_err());
        assert!(per_user_dof(&c, 0, 0).is_err());
        assert!(per_user_dof(&c, 0, 4).is_err());
    }

    #[test]
    fn cases_and_argmax() {
        let c = cfg(2, 4);
        let e = per_user_dof(&c, 0, 2).unwrap();
        assert_eq!(e.case, DofCase::SplitOrAlign);
        // alignment gives 1/3 at t'=2 and 2/5 at t'=1, splitting gives 1/2
        assert_eq!(alignment_dof(&c, 0, 2), ratio(1, 3));
        assert_eq!(e.best_t_prime, Some(1));
        assert_eq!(e.per_user, ratio(1, 2));
        assert_eq!(classify(&c, 1, 2), DofCase::OneResidual);
        assert_eq!(classify(&c, 2, 2), DofCase::Full);
    }
}
