//! Goodness-of-fit and binomial bounds for comparing samplers to exact
//! distributions.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Bins with an expected count below this are pooled.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Clone, Debug)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    /// Number of cells after pooling.
    pub cells: usize,
    /// Observed counts that fell on atoms of zero expected probability.
    pub impossible: u64,
}

impl ChiSquareResult {
    pub fn passes(&self, significance: f64) -> bool {
        self.impossible == 0 && self.p_value >= significance
    }
}

/// Pearson's test of `observed` counts against `expected` probabilities.
///
/// Atoms are sorted by expected count and the small ones merged into a
/// single cell until it reaches [`MIN_EXPECTED`]; a remainder below the
/// threshold is folded into the smallest regular cell.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> Result<ChiSquareResult> {
    if observed.len() != expected.len() {
        return Err(Error::Precondition("observed and expected have different lengths".into()));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::Precondition("no observations".into()));
    }
    let n = total as f64;
    let mass: f64 = expected.iter().sum();
    if (mass - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!("expected probabilities sum to {mass}")));
    }

    let mut impossible = 0;
    let mut atoms: Vec<(f64, u64)> = Vec::new();
    for (&o, &p) in observed.iter().zip(expected) {
        if p <= 0.0 {
            impossible += o;
        } else {
            atoms.push((p * n, o));
        }
    }
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut cells: Vec<(f64, u64)> = Vec::new();
    let mut pool = (0.0, 0u64);
    for (e, o) in atoms {
        if e >= MIN_EXPECTED && pool.0 == 0.0 {
            cells.push((e, o));
            continue;
        }
        pool.0 += e;
        pool.1 += o;
        if pool.0 >= MIN_EXPECTED {
            cells.push(pool);
            pool = (0.0, 0);
        }
    }
    if pool.0 > 0.0 {
        match cells.first_mut() {
            Some(first) => {
                first.0 += pool.0;
                first.1 += pool.1;
            }
            None => cells.push(pool),
        }
    }

    let statistic: f64 = cells.iter().map(|&(e, o)| (o as f64 - e).powi(2) / e).sum();
    let degrees_of_freedom = cells.len().saturating_sub(1);
    let p_value = if degrees_of_freedom == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(degrees_of_freedom as f64).map_err(|e| Error::Precondition(e.to_string()))?;
        1.0 - dist.cdf(statistic)
    };
    Ok(ChiSquareResult {
        statistic,
        degrees_of_freedom,
        p_value,
        cells: cells.len(),
        impossible,
    })
}

/// Standard error of a proportion `p` over `n` trials.
pub fn proportion_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Pearson correlation of paired binary samples; 0 when either side is
/// constant.
pub fn binary_correlation(pairs: &[(u8, u8)]) -> f64 {
    let n = pairs.len() as f64;
    if pairs.is_empty() {
        return 0.0;
    }
    let mx = pairs.iter().map(|p| p.0 as f64).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1 as f64).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for &(x, y) in pairs {
        let (dx, dy) = (x as f64 - mx, y as f64 - my);
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

/// Total-variation distance between two distributions on the same atoms.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_counts_pass() {
        let r = chi_square_gof(&[250, 250, 250, 250], &[0.25; 4]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.degrees_of_freedom, 3);
        assert!(r.passes(1e-3));
    }

    #[test]
    fn wrong_distribution_fails() {
        let r = chi_square_gof(&[400, 200, 200, 200], &[0.25; 4]).unwrap();
        assert!(!r.passes(1e-3));
        let impossible = chi_square_gof(&[500, 499, 1], &[0.5, 0.5, 0.0]).unwrap();
        assert_eq!(impossible.impossible, 1);
        assert!(!impossible.passes(1e-3));
    }

    #[test]
    fn pools_small_cells() {
        let mut expected = vec![0.0001; 10];
        expected.push(1.0 - 0.001);
        let mut observed = vec![0u64; 10];
        observed.push(1000);
        let r = chi_square_gof(&observed, &expected).unwrap();
        assert_eq!(r.cells, 1);
        assert_eq!(r.degrees_of_freedom, 0);
    }

    #[test]
    fn sampled_counts_usually_pass() {
        let probs = [0.5, 0.3, 0.15, 0.05];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut rejections = 0;
        for _ in 0..200 {
            let mut counts = [0u64; 4];
            for _ in 0..2000 {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let k = probs.iter().position(|p| {
                    acc += p;
                    u < acc
                });
                counts[k.unwrap_or(3)] += 1;
            }
            if !chi_square_gof(&counts, &probs).unwrap().passes(0.01) {
                rejections += 1;
            }
        }
        // about 2 expected
        assert!(rejections <= 10, "{rejections}");
    }

    #[test]
    fn correlation_and_tv() {
        assert!((binary_correlation(&[(0, 0), (1, 1), (0, 0), (1, 1)]) - 1.0).abs() < 1e-15);
        assert!((binary_correlation(&[(0, 1), (1, 0)]) + 1.0).abs() < 1e-15);
        assert_eq!(binary_correlation(&[(1, 0), (1, 1)]), 0.0);
        assert_eq!(total_variation(&[0.5, 0.5], &[1.0, 0.0]), 0.5);
    }
}
