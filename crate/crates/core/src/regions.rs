//! Closed-form delivery time and optimal splits for the 2x2 and 3x3
//! networks, used as exact oracles for the LP.

use std::fmt;

use num::{One, Zero};
use thiserror::Error;

use crate::model::{feasible_cache_point, int, ratio, CachePoint, NetworkConfig, Rational, SplitRatios};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegionError {
    #[error("cache point {pt} is infeasible for the {network} network")]
    Infeasible { pt: CachePoint, network: Network },
    #[error("cache point {0} matched no region")]
    Unclassified(CachePoint),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Network {
    TwoByTwo,
    ThreeByThree,
}

impl Network {
    pub fn size(self) -> usize {
        match self {
            Network::TwoByTwo => 2,
            Network::ThreeByThree => 3,
        }
    }

    pub fn config(self) -> NetworkConfig {
        NetworkConfig::square(self.size(), self.size()).expect("valid square network")
    }

    /// The closed forms exist only for the square 2x2 and 3x3 networks.
    pub fn of(cfg: &NetworkConfig) -> Option<Network> {
        match (cfg.n_tx(), cfg.n_rx()) {
            (2, 2) => Some(Network::TwoByTwo),
            (3, 3) => Some(Network::ThreeByThree),
            _ => None,
        }
    }
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.size();
        write!(f, "{n}x{n}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RegionId {
    pub network: Network,
    pub index: u8,
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}", self.index)
    }
}

fn require(network: Network, pt: &CachePoint) -> Result<(), RegionError> {
    if feasible_cache_point(&network.config(), pt) {
        Ok(())
    } else {
        Err(RegionError::Infeasible {
            pt: pt.clone(),
            network,
        })
    }
}

/// Linear form `c0 + cr * mu_r + ct * mu_t`.
fn lin(pt: &CachePoint, c0: Rational, cr: Rational, ct: Rational) -> Rational {
    c0 + cr * pt.mu_r() + ct * pt.mu_t()
}

fn q(n: i64, d: i64) -> Rational {
    ratio(n, d)
}

pub fn classify_2x2(pt: &CachePoint) -> Result<RegionId, RegionError> {
    require(Network::TwoByTwo, pt)?;
    let index = if pt.mu_r() + pt.mu_t() >= Rational::one() { 1 } else { 2 };
    Ok(RegionId {
        network: Network::TwoByTwo,
        index,
    })
}

pub fn closed_form_2x2(pt: &CachePoint) -> Result<Rational, RegionError> {
    Ok(value_2x2(classify_2x2(pt)?.index, pt))
}

fn value_2x2(index: u8, pt: &CachePoint) -> Rational {
    match index {
        1 => lin(pt, q(1, 1), q(-1, 1), q(0, 1)),
        _ => lin(pt, q(2, 1), q(-2, 1), q(-1, 1)),
    }
}

pub fn optimal_ratios_2x2(pt: &CachePoint) -> Result<SplitRatios, RegionError> {
    let region = classify_2x2(pt)?;
    let mut s = SplitRatios::new();
    let mut put = |r, t, v: Rational| s.set(crate::model::CacheStateIndex::new(r, t), v).expect("ratio in [0,1]");
    match region.index {
        1 => {
            put(2, 0, pt.mu_r().clone());
            put(0, 2, Rational::one() - pt.mu_r());
        }
        _ => {
            put(0, 1, lin(pt, q(1, 1), q(-1, 1), q(-1, 1)));
            put(2, 0, pt.mu_r().clone());
            put(0, 2, lin(pt, q(-1, 1), q(1, 1), q(2, 1)));
        }
    }
    Ok(s)
}

/// Region predicates in order, each exactly as a conjunction of half-planes.
fn region_predicates_3x3(pt: &CachePoint) -> [bool; 5] {
    let zero = Rational::zero();
    let one = Rational::one();
    let (r, t) = (pt.mu_r(), pt.mu_t());
    let two_thirds = q(2, 3);
    let s = r + t;
    let a = int(2) * r + t;
    let b = r + int(2) * t;
    let c = r + int(3) * t;
    let three_t = int(3) * t;
    [
        s >= one,
        s < one && a >= one && b > one,
        s >= two_thirds && a < one && *r >= zero,
        s < two_thirds && *r >= zero && three_t > one,
        three_t <= one && b <= one && c >= one,
    ]
}

pub fn classify_3x3(pt: &CachePoint) -> Result<RegionId, RegionError> {
    require(Network::ThreeByThree, pt)?;
    let preds = region_predicates_3x3(pt);
    let index = preds
        .iter()
        .position(|&p| p)
        .ok_or_else(|| RegionError::Unclassified(pt.clone()))?;
    Ok(RegionId {
        network: Network::ThreeByThree,
        index: index as u8 + 1,
    })
}

/// Regions whose predicate holds at `pt` (several on shared boundaries).
pub fn matching_regions_3x3(pt: &CachePoint) -> Vec<u8> {
    region_predicates_3x3(pt)
        .iter()
        .enumerate()
        .filter(|(_, &p)| p)
        .map(|(i, _)| i as u8 + 1)
        .collect()
}

/// The affine delivery-time formula of region `index` of the 3x3 network.
pub fn region_formula_3x3(index: u8, pt: &CachePoint) -> Rational {
    match index {
        1 => lin(pt, q(1, 1), q(-1, 1), q(0, 1)),
        2 => lin(pt, q(4, 3), q(-4, 3), q(-1, 3)),
        3 => lin(pt, q(3, 2), q(-5, 3), q(-1, 2)),
        4 => lin(pt, q(13, 6), q(-8, 3), q(-3, 2)),
        5 => lin(pt, q(8, 3), q(-8, 3), q(-3, 1)),
        _ => panic!("3x3 region index {index} out of range"),
    }
}

/// The affine delivery-time formula of region `index` of the 2x2 network.
pub fn region_formula_2x2(index: u8, pt: &CachePoint) -> Rational {
    assert!((1..=2).contains(&index), "2x2 region index {index} out of range");
    value_2x2(index, pt)
}

pub fn closed_form_3x3(pt: &CachePoint) -> Result<Rational, RegionError> {
    Ok(region_formula_3x3(classify_3x3(pt)?.index, pt))
}

pub fn optimal_ratios_3x3(pt: &CachePoint) -> Result<SplitRatios, RegionError> {
    let region = classify_3x3(pt)?;
    let mut s = SplitRatios::new();
    let mut put = |r, t, v: Rational| s.set(crate::model::CacheStateIndex::new(r, t), v).expect("ratio in [0,1]");
    let mu_r = pt.mu_r().clone();
    match region.index {
        1 => {
            put(3, 0, mu_r.clone());
            put(0, 3, Rational::one() - mu_r);
        }
        2 => {
            put(1, 1, lin(pt, q(1, 3), q(-1, 3), q(-1, 3)));
            put(3, 0, lin(pt, q(-1, 1), q(2, 1), q(1, 1)));
            put(0, 3, lin(pt, q(-1, 1), q(1, 1), q(2, 1)));
        }
        3 => {
            put(1, 1, mu_r / int(3));
            put(0, 2, lin(pt, q(1, 1), q(-2, 1), q(-1, 1)));
            put(0, 3, lin(pt, q(-2, 1), q(3, 1), q(3, 1)));
        }
        4 => {
            put(1, 1, mu_r / int(3));
            put(0, 1, lin(pt, q(2, 3), q(-1, 1), q(-1, 1)));
            put(0, 2, lin(pt, q(-1, 3), q(0, 1), q(1, 1)));
        }
        _ => {
            put(1, 1, lin(pt, q(-1, 3), q(1, 3), q(1, 1)));
            put(0, 1, lin(pt, q(1, 1), q(-1, 1), q(-2, 1)));
            put(3, 0, lin(pt, q(1, 1), q(0, 1), q(-3, 1)));
        }
    }
    Ok(s)
}
