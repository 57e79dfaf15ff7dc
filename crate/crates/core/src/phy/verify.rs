use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::channel::{cofactor_precoder, effective_gain, sample_channel, ChannelRealization, ComplexNormal, C64};
use super::scheme::{check_alignment, Column, PrecoderScheme};
use super::{PhyError, DECODE_TOL, NEUTRALIZATION_TOL, RANK_TOL};
use crate::model::NetworkConfig;

/// Numerical checks of one scheme on one channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub seed: u64,
    pub extension: usize,
    pub desired_per_receiver: usize,
    /// Largest `|gain at a neutralized receiver| / |largest desired gain|`.
    pub max_neutralization_residual: f64,
    /// Largest relative gap between a leaked gain and its interference column.
    pub max_alignment_error: f64,
    pub alignment_membership: bool,
    /// Per receiver, smallest over largest singular value after equilibration.
    pub singular_ratios: Vec<f64>,
    pub max_decode_error: f64,
}

impl Verification {
    pub fn min_singular_ratio(&self) -> f64 {
        self.singular_ratios.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn neutralization_ok(&self) -> bool {
        self.max_neutralization_residual < NEUTRALIZATION_TOL && self.max_alignment_error < NEUTRALIZATION_TOL
    }

    pub fn rank_ok(&self) -> bool {
        self.min_singular_ratio() > RANK_TOL
    }

    pub fn decode_ok(&self) -> bool {
        self.max_decode_error < DECODE_TOL
    }

    pub fn passed(&self) -> bool {
        self.alignment_membership && self.neutralization_ok() && self.rank_ok() && self.decode_ok()
    }
}

type GroupKey = (Vec<usize>, Vec<usize>);

/// Per-slot cofactor vectors for every `(tx, neutralize)` pair in use.
struct Precoders<'a> {
    channel: &'a ChannelRealization,
    cofactors: BTreeMap<GroupKey, Vec<Vec<C64>>>,
}

impl<'a> Precoders<'a> {
    fn new(channel: &'a ChannelRealization, scheme: &PrecoderScheme) -> Result<Self, PhyError> {
        let mut cofactors = BTreeMap::new();
        let pairs = scheme
            .symbols
            .iter()
            .map(|s| (s.tx.clone(), s.neutralize.clone()))
            .chain(scheme.families.iter().flatten().map(|f| (f.tx.clone(), f.neutralize.clone())));
        for key in pairs {
            if cofactors.contains_key(&key) {
                continue;
            }
            let per_slot = (0..channel.slots())
                .map(|u| cofactor_precoder(channel, u, &key.1, &key.0))
                .collect::<Result<Vec<_>, _>>()?;
            cofactors.insert(key, per_slot);
        }
        Ok(Self { channel, cofactors })
    }

    /// `htilde_{q, tx}^{neutralize}(u)`.
    fn gain(&self, u: usize, q: usize, tx: &[usize], neutralize: &[usize]) -> C64 {
        let c = &self.cofactors[&(tx.to_vec(), neutralize.to_vec())][u];
        effective_gain(self.channel, u, q, tx, c)
    }
}

fn equilibrate(m: &mut DMatrix<C64>) -> (Vec<f64>, Vec<f64>) {
    let (rows, cols) = m.shape();
    let mut row_scale = vec![1.0; rows];
    let mut col_scale = vec![1.0; cols];
    for _ in 0..4 {
        for j in 0..cols {
            let norm = m.column(j).norm();
            if norm > 0.0 {
                m.column_mut(j).scale_mut(1.0 / norm);
                col_scale[j] /= norm;
            }
        }
        for i in 0..rows {
            let norm = m.row(i).norm();
            if norm > 0.0 {
                m.row_mut(i).scale_mut(1.0 / norm);
                row_scale[i] /= norm;
            }
        }
    }
    (row_scale, col_scale)
}

/// Instantiates `scheme` on a seeded channel of `S` slots, with seeded alpha
/// factors and unit-modulus test symbols, and checks neutralization,
/// alignment, rank and least-squares decoding at every receiver.
pub fn verify_scheme(cfg: &NetworkConfig, scheme: &PrecoderScheme, seed: u64) -> Result<Verification, PhyError> {
    let membership = check_alignment(scheme).is_ok();
    let slots = scheme.extension;
    let channel = sample_channel(cfg, slots, seed)?;
    let mut alpha_draw = ComplexNormal::new(seed, 1);
    let alphas: Vec<Vec<C64>> = (0..scheme.alpha_count)
        .map(|_| (0..slots).map(|_| alpha_draw.sample()).collect())
        .collect();
    let mut symbol_draw = ComplexNormal::new(seed, 2);
    let sent: Vec<C64> = scheme
        .symbols
        .iter()
        .map(|_| {
            let z = symbol_draw.sample();
            z / z.norm()
        })
        .collect();
    let pre = Precoders::new(&channel, scheme)?;

    // factor_values[family][k][u]
    let factor_values: Vec<Vec<Vec<C64>>> = scheme
        .families
        .iter()
        .map(|fam| {
            fam.iter()
                .map(|f| {
                    (0..slots)
                        .map(|u| alphas[f.alpha][u] * pre.gain(u, f.rx, &f.tx, &f.neutralize))
                        .collect()
                })
                .collect()
        })
        .collect();
    let monomial = |family: usize, exps: &[u32], u: usize| -> C64 {
        exps.iter()
            .enumerate()
            .map(|(k, &e)| factor_values[family][k][u].powu(e))
            .product()
    };
    // Scalar common to every transmitter: alpha(u) * z(u).
    let scalar: Vec<Vec<C64>> = scheme
        .symbols
        .iter()
        .map(|s| {
            (0..slots)
                .map(|u| {
                    let a = s.alpha.map_or(C64::new(1.0, 0.0), |i| alphas[i][u]);
                    let z = s
                        .monomial
                        .as_ref()
                        .map_or(C64::new(1.0, 0.0), |(fam, e)| monomial(*fam, e, u));
                    a * z
                })
                .collect()
        })
        .collect();
    let coefficient = |i: usize, q: usize, u: usize| -> C64 {
        let s = &scheme.symbols[i];
        scalar[i][u] * pre.gain(u, q, &s.tx, &s.neutralize)
    };

    let mut max_residual: f64 = 0.0;
    let mut max_alignment: f64 = 0.0;
    for (i, s) in scheme.symbols.iter().enumerate() {
        let leaks = s.leaks(cfg.n_rx());
        for u in 0..slots {
            let desired = s
                .rx_group
                .iter()
                .map(|&q| pre.gain(u, q, &s.tx, &s.neutralize).norm())
                .fold(0.0, f64::max);
            for &q in &s.neutralize {
                max_residual = max_residual.max(pre.gain(u, q, &s.tx, &s.neutralize).norm() / desired);
            }
            if let Some((family, exps)) = &s.monomial {
                for &q in &leaks {
                    let k = scheme.families[*family]
                        .iter()
                        .position(|f| f.rx == q && f.tx == s.tx && f.neutralize == s.neutralize && Some(f.alpha) == s.alpha);
                    let Some(k) = k else { continue };
                    let mut received = exps.clone();
                    received[k] += 1;
                    let expected = monomial(*family, &received, u);
                    let got = coefficient(i, q, u);
                    max_alignment = max_alignment.max((got - expected).norm() / expected.norm());
                }
            }
        }
    }

    let per_receiver: Vec<(f64, f64)> = (0..cfg.n_rx())
        .map(|q| {
            let cols = &scheme.columns[q];
            let mut m = DMatrix::from_fn(slots, cols.len(), |u, j| match &cols[j] {
                Column::Desired(i) | Column::Interference(i) => coefficient(*i, q, u),
                Column::Monomial { family, exponents } => monomial(*family, exponents, u),
            });
            let y = DVector::from_fn(slots, |u, _| {
                (0..scheme.symbols.len()).map(|i| coefficient(i, q, u) * sent[i]).sum::<C64>()
            });
            let (row_scale, col_scale) = equilibrate(&mut m);
            let sv = m.clone().svd(false, false).singular_values;
            let ratio = sv.min() / sv.max();
            let rhs = DVector::from_fn(slots, |u, _| y[u] * row_scale[u]);
            let decode_error = match m.full_piv_lu().solve(&rhs) {
                Some(w) => {
                    let (mut err, mut norm) = (0.0, 0.0);
                    for (j, col) in cols.iter().enumerate() {
                        if let Column::Desired(i) = col {
                            err += (w[j] * col_scale[j] - sent[*i]).norm_sqr();
                            norm += sent[*i].norm_sqr();
                        }
                    }
                    (err / norm).sqrt()
                }
                None => f64::INFINITY,
            };
            (ratio, decode_error)
        })
        .collect();

    Ok(Verification {
        seed,
        extension: slots,
        desired_per_receiver: scheme.desired_per_receiver,
        max_neutralization_residual: max_residual,
        max_alignment_error: max_alignment,
        alignment_membership: membership,
        singular_ratios: per_receiver.iter().map(|p| p.0).collect(),
        max_decode_error: per_receiver.iter().map(|p| p.1).fold(0.0, f64::max),
    })
}

/// [`verify_scheme`] over `seeds`, in parallel.
pub fn verify_over_seeds(
    cfg: &NetworkConfig,
    scheme: &PrecoderScheme,
    seeds: impl IntoParallelIterator<Item = u64>,
) -> Result<Vec<Verification>, PhyError> {
    seeds
        .into_par_iter()
        .map(|seed| verify_scheme(cfg, scheme, seed))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::{build_case_a, build_case_b, build_case_c_full, build_case_c_partial};

    fn cfg(nt: usize, nr: usize) -> NetworkConfig {
        NetworkConfig::square(nt, nr).unwrap()
    }

    fn assert_all_pass(c: &NetworkConfig, s: &PrecoderScheme, seeds: std::ops::Range<u64>) {
        for v in verify_over_seeds(c, s, seeds).unwrap() {
            assert!(v.passed(), "{v:?}");
        }
    }

    #[test]
    fn case_a_instances() {
        let c = cfg(3, 3);
        assert_all_pass(&c, &build_case_a(&c, 1, 2).unwrap(), 0..20);
        let c = cfg(2, 2);
        assert_all_pass(&c, &build_case_a(&c, 0, 2).unwrap(), 0..20);
        let c = NetworkConfig::new(3, 2, 3).unwrap();
        assert_all_pass(&c, &build_case_a(&c, 0, 2).unwrap(), 0..20);
    }

    #[test]
    fn case_b_small() {
        let c = cfg(3, 3);
        assert_all_pass(&c, &build_case_b(&c, 1, 1, 1).unwrap(), 0..5);
    }

    #[test]
    fn case_c_full_small() {
        let c = NetworkConfig::new(2, 4, 4).unwrap();
        assert_all_pass(&c, &build_case_c_full(&c, 0).unwrap(), 0..10);
    }

    #[test]
    fn case_c_partial_small() {
        let c = cfg(3, 3);
        let s = build_case_c_partial(&c, 0, 1, 1).unwrap();
        let v = verify_scheme(&c, &s, 1).unwrap();
        assert!(v.alignment_membership && v.neutralization_ok(), "{v:?}");
    }

    #[test]
    fn dropping_a_column_breaks_decoding() {
        let c = cfg(3, 3);
        let mut s = build_case_b(&c, 1, 1, 1).unwrap();
        // Replace one interference direction with a duplicate of another.
        let last = s.columns[0].len() - 1;
        s.columns[0][last] = s.columns[0][last - 1].clone();
        let v = verify_scheme(&c, &s, 3).unwrap();
        assert!(!v.rank_ok());
    }
}
