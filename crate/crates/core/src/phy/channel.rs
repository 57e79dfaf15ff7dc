use nalgebra::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::PhyError;
use crate::model::NetworkConfig;

pub type C64 = Complex<f64>;

/// Draws standard complex normal values, `E|z|^2 = 1`, never exactly zero.
pub(crate) struct ComplexNormal {
    rng: ChaCha8Rng,
}

impl ComplexNormal {
    pub(crate) fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    pub(crate) fn sample(&mut self) -> C64 {
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        loop {
            let re: f64 = StandardNormal.sample(&mut self.rng);
            let im: f64 = StandardNormal.sample(&mut self.rng);
            let z = C64::new(re * scale, im * scale);
            if z != C64::new(0.0, 0.0) {
                return z;
            }
        }
    }
}

/// Coefficients `h_{qp}(u)` for receiver `q`, transmitter `p`, slot `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    slots: usize,
    n_rx: usize,
    n_tx: usize,
    coeffs: Vec<C64>,
}

impl ChannelRealization {
    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn h(&self, u: usize, q: usize, p: usize) -> C64 {
        self.coeffs[(u * self.n_rx + q) * self.n_tx + p]
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }
}

pub fn sample_channel(cfg: &NetworkConfig, slots: usize, seed: u64) -> Result<ChannelRealization, PhyError> {
    if slots == 0 {
        return Err(PhyError::NoSlots);
    }
    let mut draw = ComplexNormal::new(seed, 0);
    let coeffs = (0..slots * cfg.n_rx() * cfg.n_tx()).map(|_| draw.sample()).collect();
    Ok(ChannelRealization {
        slots,
        n_rx: cfg.n_rx(),
        n_tx: cfg.n_tx(),
        coeffs,
    })
}

/// Determinant by cofactor expansion along the first row; `a` is row-major `k x k`.
pub(crate) fn laplace_det(a: &[C64], k: usize) -> C64 {
    match k {
        0 => C64::new(1.0, 0.0),
        1 => a[0],
        2 => a[0] * a[3] - a[1] * a[2],
        _ => {
            let mut total = C64::new(0.0, 0.0);
            let mut minor = Vec::with_capacity((k - 1) * (k - 1));
            for j in 0..k {
                minor.clear();
                for i in 1..k {
                    for c in (0..k).filter(|&c| c != j) {
                        minor.push(a[i * k + c]);
                    }
                }
                let term = a[j] * laplace_det(&minor, k - 1);
                if j % 2 == 0 {
                    total += term;
                } else {
                    total -= term;
                }
            }
            total
        }
    }
}

/// Cofactors `c_p` of the free bottom row of the bordered matrix whose upper
/// rows are `h_{q, tx}` for `q` in `neutralize`.
///
/// `sum_p h_{qp} c_p` vanishes for every neutralized `q` and equals the
/// bordered determinant with row `q` appended otherwise.
pub fn cofactor_precoder(
    channel: &ChannelRealization,
    slot: usize,
    neutralize: &[usize],
    tx: &[usize],
) -> Result<Vec<C64>, PhyError> {
    let k = tx.len();
    if k != neutralize.len() + 1 {
        return Err(PhyError::BorderShape {
            tx: k,
            neutralize: neutralize.len(),
        });
    }
    let mut minor = Vec::with_capacity((k - 1) * (k - 1));
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        minor.clear();
        for &q in neutralize {
            for (c, &p) in tx.iter().enumerate() {
                if c != j {
                    minor.push(channel.h(slot, q, p));
                }
            }
        }
        let d = laplace_det(&minor, k - 1);
        out.push(if (k - 1 + j).is_multiple_of(2) { d } else { -d });
    }
    if out.iter().all(|c| c.norm() == 0.0) {
        return Err(PhyError::DegenerateCofactor { slot });
    }
    Ok(out)
}

/// `sum_{p in tx} h_{qp}(u) w_p`.
pub(crate) fn effective_gain(channel: &ChannelRealization, slot: usize, q: usize, tx: &[usize], w: &[C64]) -> C64 {
    tx.iter().zip(w).map(|(&p, c)| channel.h(slot, q, p) * c).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn cfg(nt: usize, nr: usize) -> NetworkConfig {
        NetworkConfig::square(nt, nr).unwrap()
    }

    #[test]
    fn deterministic_per_seed() {
        let a = sample_channel(&cfg(3, 3), 3, 1).unwrap();
        let b = sample_channel(&cfg(3, 3), 3, 1).unwrap();
        let c = sample_channel(&cfg(3, 3), 3, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.coeffs().len(), 27);
        assert!(matches!(sample_channel(&cfg(3, 3), 0, 1), Err(PhyError::NoSlots)));
    }

    #[test]
    fn entries_have_zero_mean_unit_power() {
        let ch = sample_channel(&cfg(2, 2), 2500, 9).unwrap();
        let n = ch.coeffs().len() as f64;
        let mean: C64 = ch.coeffs().iter().sum::<C64>() / n;
        let power = ch.coeffs().iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
        // Each component has variance 1/2, so the mean's std is sqrt(1/(2n)).
        let sigma = (0.5 / n).sqrt();
        assert!(mean.re.abs() < 5.0 * sigma && mean.im.abs() < 5.0 * sigma, "{mean}");
        assert!((power - 1.0).abs() < 0.1, "{power}");
    }

    #[test]
    fn laplace_matches_lu() {
        let ch = sample_channel(&cfg(4, 4), 1, 3).unwrap();
        let a: Vec<C64> = ch.coeffs().to_vec();
        let m = DMatrix::from_row_slice(4, 4, &a);
        assert!((laplace_det(&a, 4) - m.determinant()).norm() < 1e-12);
    }

    #[test]
    fn neutralizes_and_matches_bordered_determinant() {
        let c = cfg(3, 3);
        for seed in 0..20 {
            let ch = sample_channel(&c, 1, seed).unwrap();
            let tx = [0, 1, 2];
            let neutralize = [1, 2];
            let w = cofactor_precoder(&ch, 0, &neutralize, &tx).unwrap();
            let scale = w.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for &q in &neutralize {
                assert!(effective_gain(&ch, 0, q, &tx, &w).norm() < 1e-9 * scale);
            }
            let gain = effective_gain(&ch, 0, 0, &tx, &w);
            let rows: Vec<C64> = [1, 2, 0]
                .iter()
                .flat_map(|&q| tx.iter().map(move |&p| (q, p)))
                .map(|(q, p)| ch.h(0, q, p))
                .collect();
            let bordered = DMatrix::from_row_slice(3, 3, &rows).determinant();
            assert!((gain - bordered).norm() < 1e-9 * bordered.norm().max(1.0));
        }
    }

    #[test]
    fn single_transmitter_is_identity() {
        let ch = sample_channel(&cfg(3, 3), 1, 4).unwrap();
        assert_eq!(cofactor_precoder(&ch, 0, &[], &[2]).unwrap(), vec![C64::new(1.0, 0.0)]);
        assert!(matches!(
            cofactor_precoder(&ch, 0, &[0, 1], &[2]),
            Err(PhyError::BorderShape { .. })
        ));
    }
}
