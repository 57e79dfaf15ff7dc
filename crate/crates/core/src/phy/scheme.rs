use std::collections::BTreeMap;

use super::{FiniteDof, PhyError, SchemeCase, MAX_EXTENSION, MAX_N};
use crate::model::{subsets, NetworkConfig};

/// `(receivers, transmitters, neutralized receivers)`.
type NodeSets = (Vec<usize>, Vec<usize>, Vec<usize>);

/// One term `alpha * htilde_{rx, tx}^{neutralize}` of a monomial family.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Factor {
    pub alpha: usize,
    pub tx: Vec<usize>,
    pub neutralize: Vec<usize>,
    pub rx: usize,
}

/// A transmitted scalar symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeSymbol {
    pub rx_group: Vec<usize>,
    /// Transmitters carrying the symbol; also the bordered-matrix columns.
    pub tx: Vec<usize>,
    pub neutralize: Vec<usize>,
    pub alpha: Option<usize>,
    /// Monomial family and exponents of the `z` factor.
    pub monomial: Option<(usize, Vec<u32>)>,
}

impl SchemeSymbol {
    /// Receivers outside the desired group that are not neutralized.
    pub fn leaks(&self, n_rx: usize) -> Vec<usize> {
        (0..n_rx)
            .filter(|q| !self.rx_group.contains(q) && !self.neutralize.contains(q))
            .collect()
    }
}

/// A column of a receiver's `S x S` received matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Desired(usize),
    /// Aligned interference subspace direction.
    Monomial { family: usize, exponents: Vec<u32> },
    /// Unaligned interference from a single symbol.
    Interference(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrecoderScheme {
    pub case: SchemeCase,
    pub r: usize,
    pub t: usize,
    pub n: u32,
    pub n_rx: usize,
    pub extension: usize,
    pub desired_per_receiver: usize,
    pub alpha_count: usize,
    pub families: Vec<Vec<Factor>>,
    pub symbols: Vec<SchemeSymbol>,
    pub columns: Vec<Vec<Column>>,
}

fn complement(n: usize, set: &[usize]) -> Vec<usize> {
    (0..n).filter(|x| !set.contains(x)).collect()
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = a.iter().chain(b).copied().collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// All exponent vectors in `[1, n]^k`, lexicographic.
pub fn exponent_grid(k: usize, n: u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::with_capacity(k)];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (1..=n).map(move |e| {
                    let mut v = prefix.clone();
                    v.push(e);
                    v
                })
            })
            .collect();
    }
    out
}

fn guard(cfg: &NetworkConfig, case: SchemeCase, r: usize, t: usize, n: u32) -> Result<FiniteDof, PhyError> {
    if n == 0 || n > MAX_N {
        return Err(PhyError::ExtensionOrder { n });
    }
    let model = FiniteDof::new(cfg, case, r, t)?;
    let slots = model.extension(n);
    if slots > num::BigInt::from(MAX_EXTENSION) {
        return Err(PhyError::ExtensionTooLong { slots });
    }
    Ok(model)
}

struct Builder {
    alphas: BTreeMap<NodeSets, usize>,
    families: Vec<Vec<Factor>>,
    symbols: Vec<SchemeSymbol>,
}

impl Builder {
    fn new() -> Self {
        Self {
            alphas: BTreeMap::new(),
            families: Vec::new(),
            symbols: Vec::new(),
        }
    }

    /// Alpha index for `(rx_group, tx, neutralize)`.
    fn alpha(&mut self, rx_group: &[usize], tx: &[usize], neutralize: &[usize]) -> usize {
        let next = self.alphas.len();
        *self
            .alphas
            .entry((rx_group.to_vec(), tx.to_vec(), neutralize.to_vec()))
            .or_insert(next)
    }

    fn finish(
        self,
        cfg: &NetworkConfig,
        case: SchemeCase,
        r: usize,
        t: usize,
        n: u32,
        interference: impl Fn(usize, &[SchemeSymbol], &[Vec<Factor>]) -> Vec<Column>,
        model: &FiniteDof,
    ) -> PrecoderScheme {
        let n_rx = cfg.n_rx();
        let columns: Vec<Vec<Column>> = (0..n_rx)
            .map(|q| {
                let mut cols: Vec<Column> = self
                    .symbols
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.rx_group.contains(&q))
                    .map(|(i, _)| Column::Desired(i))
                    .collect();
                cols.extend(interference(q, &self.symbols, &self.families));
                cols
            })
            .collect();
        let desired = columns[0].iter().filter(|c| matches!(c, Column::Desired(_))).count();
        let extension = columns[0].len();
        debug_assert!(columns.iter().all(|c| c.len() == extension));
        debug_assert_eq!(num::BigInt::from(extension), model.extension(n));
        debug_assert_eq!(num::BigInt::from(desired), model.desired(n));
        PrecoderScheme {
            case,
            r,
            t,
            n,
            n_rx,
            extension,
            desired_per_receiver: desired,
            alpha_count: self.alphas.len(),
            families: self.families,
            symbols: self.symbols,
            columns,
        }
    }
}

/// Neutralization only, over the first transmitter group `{0, .., t-1}`.
pub fn build_case_a(cfg: &NetworkConfig, r: usize, t: usize) -> Result<PrecoderScheme, PhyError> {
    let model = guard(cfg, SchemeCase::A, r, t, 1)?;
    let nr = cfg.n_rx();
    let active: Vec<usize> = (0..nr - r).collect();
    let mut b = Builder::new();
    for rx_group in subsets(nr, r + 1) {
        let neutralize = complement(nr, &rx_group);
        b.symbols.push(SchemeSymbol {
            rx_group,
            tx: active.clone(),
            neutralize,
            alpha: None,
            monomial: None,
        });
    }
    Ok(b.finish(cfg, SchemeCase::A, r, t, 1, |_, _, _| Vec::new(), &model))
}

/// Neutralization at all but one undesired receiver, then alignment of the
/// residual interference at each receiver into a single monomial family.
pub fn build_case_b(cfg: &NetworkConfig, r: usize, t: usize, n: u32) -> Result<PrecoderScheme, PhyError> {
    let model = guard(cfg, SchemeCase::B, r, t, n)?;
    let (nt, nr) = (cfg.n_tx(), cfg.n_rx());
    let mut b = Builder::new();
    // Family q collects the factors of every sub-vector leaking at q.
    b.families = vec![Vec::new(); nr];
    let mut parts = Vec::new();
    for rx_group in subsets(nr, r + 1) {
        let undesired = complement(nr, &rx_group);
        for tx in subsets(nt, t) {
            for &leak in &undesired {
                let neutralize: Vec<usize> = undesired.iter().copied().filter(|&x| x != leak).collect();
                let alpha = b.alpha(&rx_group, &tx, &neutralize);
                b.families[leak].push(Factor {
                    alpha,
                    tx: tx.clone(),
                    neutralize: neutralize.clone(),
                    rx: leak,
                });
                parts.push((rx_group.clone(), tx.clone(), neutralize, alpha, leak));
            }
        }
    }
    let k = b.families[0].len();
    let grid = exponent_grid(k, n);
    for (rx_group, tx, neutralize, alpha, leak) in parts {
        for e in &grid {
            b.symbols.push(SchemeSymbol {
                rx_group: rx_group.clone(),
                tx: tx.clone(),
                neutralize: neutralize.clone(),
                alpha: Some(alpha),
                monomial: Some((leak, e.clone())),
            });
        }
    }
    let wide = exponent_grid(k, n + 1);
    Ok(b.finish(
        cfg,
        SchemeCase::B,
        r,
        t,
        n,
        |q, _, _| {
            wide.iter()
                .map(|e| Column::Monomial {
                    family: q,
                    exponents: e.clone(),
                })
                .collect()
        },
        &model,
    ))
}

/// Neutralization at `t-1` receivers and alignment among symbols sharing the
/// receiver group, the neutralized set and all but one transmitter.
pub fn build_case_c_partial(cfg: &NetworkConfig, r: usize, t: usize, n: u32) -> Result<PrecoderScheme, PhyError> {
    let model = guard(cfg, SchemeCase::CPartial, r, t, n)?;
    let (nt, nr) = (cfg.n_tx(), cfg.n_rx());
    let mut b = Builder::new();
    // Families keyed by (rx_group, neutralize, tx_core).
    let mut family_of: BTreeMap<NodeSets, usize> = BTreeMap::new();
    let mut owners: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for rx_group in subsets(nr, r + 1) {
        let undesired = complement(nr, &rx_group);
        for pick in subsets(undesired.len(), t - 1) {
            let neutralize: Vec<usize> = pick.iter().map(|&i| undesired[i]).collect();
            let leaks = complement(nr, &union(&rx_group, &neutralize));
            for core in subsets(nt, t - 1) {
                let mut factors = Vec::new();
                for p in complement(nt, &core) {
                    let tx = union(&core, &[p]);
                    let alpha = b.alpha(&rx_group, &tx, &neutralize);
                    for &q in &leaks {
                        factors.push(Factor {
                            alpha,
                            tx: tx.clone(),
                            neutralize: neutralize.clone(),
                            rx: q,
                        });
                    }
                }
                family_of.insert((rx_group.clone(), neutralize.clone(), core.clone()), b.families.len());
                b.families.push(factors);
                owners.push((rx_group.clone(), neutralize.clone()));
            }
        }
    }
    let k = b.families.first().map_or(0, Vec::len);
    let grid = exponent_grid(k, n);
    for rx_group in subsets(nr, r + 1) {
        let undesired = complement(nr, &rx_group);
        for tx in subsets(nt, t) {
            for pick in subsets(undesired.len(), t - 1) {
                let neutralize: Vec<usize> = pick.iter().map(|&i| undesired[i]).collect();
                let alpha = b.alpha(&rx_group, &tx, &neutralize);
                for drop in &tx {
                    let core: Vec<usize> = tx.iter().copied().filter(|p| p != drop).collect();
                    let family = family_of[&(rx_group.clone(), neutralize.clone(), core)];
                    for e in &grid {
                        b.symbols.push(SchemeSymbol {
                            rx_group: rx_group.clone(),
                            tx: tx.clone(),
                            neutralize: neutralize.clone(),
                            alpha: Some(alpha),
                            monomial: Some((family, e.clone())),
                        });
                    }
                }
            }
        }
    }
    let wide = exponent_grid(k, n + 1);
    Ok(b.finish(
        cfg,
        SchemeCase::CPartial,
        r,
        t,
        n,
        |q, _, _| {
            owners
                .iter()
                .enumerate()
                .filter(|(_, (rx_group, neutralize))| !rx_group.contains(&q) && !neutralize.contains(&q))
                .flat_map(|(family, _)| {
                    wide.iter().map(move |e| Column::Monomial {
                        family,
                        exponents: e.clone(),
                    })
                })
                .collect()
        },
        &model,
    ))
}

/// All transmitters cooperate; each sub-symbol is neutralized at a distinct
/// set of `N_T - 1` undesired receivers and leftover interference is not aligned.
pub fn build_case_c_full(cfg: &NetworkConfig, r: usize) -> Result<PrecoderScheme, PhyError> {
    let (nt, nr) = (cfg.n_tx(), cfg.n_rx());
    let model = guard(cfg, SchemeCase::CFull, r, nt, 1)?;
    let all: Vec<usize> = (0..nt).collect();
    let mut b = Builder::new();
    for rx_group in subsets(nr, r + 1) {
        let undesired = complement(nr, &rx_group);
        for pick in subsets(undesired.len(), nt - 1) {
            let neutralize: Vec<usize> = pick.iter().map(|&i| undesired[i]).collect();
            let alpha = b.alpha(&rx_group, &all, &neutralize);
            b.symbols.push(SchemeSymbol {
                rx_group: rx_group.clone(),
                tx: all.clone(),
                neutralize,
                alpha: Some(alpha),
                monomial: None,
            });
        }
    }
    Ok(b.finish(
        cfg,
        SchemeCase::CFull,
        r,
        nt,
        1,
        |q, symbols, _| {
            symbols
                .iter()
                .enumerate()
                .filter(|(_, s)| s.leaks(nr).contains(&q))
                .map(|(i, _)| Column::Interference(i))
                .collect()
        },
        &model,
    ))
}

/// Builds the scheme for `case`; `CPartial` and `CFull` require `t < N_T`
/// and `t = N_T` respectively.
pub fn build_scheme(cfg: &NetworkConfig, case: SchemeCase, r: usize, t: usize, n: u32) -> Result<PrecoderScheme, PhyError> {
    match case {
        SchemeCase::A => build_case_a(cfg, r, t),
        SchemeCase::B => build_case_b(cfg, r, t, n),
        SchemeCase::CPartial => build_case_c_partial(cfg, r, t, n),
        SchemeCase::CFull => {
            FiniteDof::new(cfg, case, r, t)?;
            build_case_c_full(cfg, r)
        }
    }
}

/// Symbolic alignment check: every leaked symbol's received factor is a
/// column of the leak receiver's matrix, with exponents in `[1, N+1]`.
pub fn check_alignment(scheme: &PrecoderScheme) -> Result<(), PhyError> {
    for (i, s) in scheme.symbols.iter().enumerate() {
        for q in s.leaks(scheme.n_rx) {
            let landed = match &s.monomial {
                Some((family, exps)) => {
                    let factor = Factor {
                        alpha: s.alpha.expect("aligned symbols carry alpha"),
                        tx: s.tx.clone(),
                        neutralize: s.neutralize.clone(),
                        rx: q,
                    };
                    let Some(k) = scheme.families[*family].iter().position(|f| *f == factor) else {
                        return Err(PhyError::Misaligned { symbol: i, receiver: q });
                    };
                    let mut received = exps.clone();
                    received[k] += 1;
                    let in_range = received.iter().all(|&e| (1..=scheme.n + 1).contains(&e));
                    in_range
                        && scheme.columns[q].contains(&Column::Monomial {
                            family: *family,
                            exponents: received,
                        })
                }
                None => scheme.columns[q].contains(&Column::Interference(i)),
            };
            if !landed {
                return Err(PhyError::Misaligned { symbol: i, receiver: q });
            }
        }
    }
    Ok(())
}
