use crate::error::{domain, Result};

/// The `τ` solving `Σ p_i^q r_i^{-τ} = 1`, by bisection to `1e-12`.
///
/// This is the `L^q` spectrum of a self-similar measure whose maps are
/// well separated; the caller is responsible for that hypothesis.
pub fn moran_tau(probs: &[f64], ratios: &[f64], q: f64) -> Result<f64> {
    if probs.is_empty() || probs.len() != ratios.len() {
        return domain("need one ratio per probability");
    }
    if probs.iter().any(|p| !(*p > 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return domain("probabilities must be positive and sum to 1");
    }
    if ratios.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        return domain("ratios must lie in (0, 1)");
    }
    // Strictly increasing in τ.
    let f = |tau: f64| -> f64 {
        probs
            .iter()
            .zip(ratios)
            .map(|(p, r)| p.powf(q) * r.powf(-tau))
            .sum::<f64>()
            - 1.0
    };
    let (mut lo, mut hi) = (-1.0, 1.0);
    while f(lo) > 0.0 {
        lo *= 2.0;
        if lo < -1e6 {
            return domain("no root below -1e6");
        }
    }
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return domain("no root above 1e6");
        }
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Whether `(Σ a_i)^q <= max{k^{q-1}, 1} · Σ a_i^q` for the `k` values,
/// up to a relative rounding allowance of `1e-12`.
pub fn lemma_powersum_check(values: &[f64], q: f64) -> Result<bool> {
    if !(q > 0.0) {
        return domain(format!("q must be positive, got {q}"));
    }
    if let Some(i) = values.iter().position(|v| !(*v >= 0.0)) {
        return domain(format!("entry {i} is negative: {}", values[i]));
    }
    let k = values.len() as f64;
    if values.is_empty() {
        return Ok(true);
    }
    let a0 = k.powf(q - 1.0).max(1.0);
    let lhs = values.iter().sum::<f64>().powf(q);
    let rhs = a0 * values.iter().map(|v| v.powf(q)).sum::<f64>();
    Ok(lhs <= rhs * (1.0 + 1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const LOG2_LOG3: f64 = 0.6309297535714574;

    // Σ over words of length k of p_u^q computed by expanding the products.
    fn cylinder_sum(probs: &[f64], q: f64, k: u32) -> f64 {
        let mut level = vec![1.0f64];
        for _ in 0..k {
            level = level.iter().flat_map(|w| probs.iter().map(move |p| w * p)).collect();
        }
        level.iter().map(|w| w.powf(q)).sum()
    }

    #[test]
    fn fair_cantor_values() {
        let r = [1.0 / 3.0; 2];
        assert!((moran_tau(&[0.5, 0.5], &r, 2.0).unwrap() - LOG2_LOG3).abs() < 1e-11);
        assert!((moran_tau(&[0.5, 0.5], &r, 0.0).unwrap() + LOG2_LOG3).abs() < 1e-11);
        assert!(moran_tau(&[0.3, 0.7], &[0.2, 0.5], 1.0).unwrap().abs() < 1e-11);
    }

    #[test]
    fn matches_cylinder_slopes_at_depth_12() {
        let r = 1.0f64 / 3.0;
        for probs in [[0.5, 0.5], [0.25, 0.75]] {
            for q in [0.5, 2.0, 3.0] {
                let slope = cylinder_sum(&probs, q, 12).ln() / (12.0 * r.ln());
                let tau = moran_tau(&probs, &[r, r], q).unwrap();
                assert!((slope - tau).abs() < 1e-9, "{probs:?} q={q}: {slope} vs {tau}");
            }
        }
    }

    #[test]
    fn unequal_ratios_balance_at_every_depth() {
        let (p, r, q) = ([0.3, 0.7], [0.5, 0.25], 2.0);
        let tau = moran_tau(&p, &r, q).unwrap();
        let mut level = vec![(1.0f64, 1.0f64)];
        for _ in 0..12 {
            level = level
                .iter()
                .flat_map(|&(w, s)| p.iter().zip(&r).map(move |(pi, ri)| (w * pi, s * ri)))
                .collect();
        }
        let total: f64 = level.iter().map(|(w, s)| w.powf(q) * s.powf(-tau)).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn biased_cantor_values() {
        let r = [1.0 / 3.0; 2];
        let tau2 = moran_tau(&[0.25, 0.75], &r, 2.0).unwrap();
        assert!((tau2 - 0.4278).abs() < 1e-4);
        let tau_half = moran_tau(&[0.25, 0.75], &r, 0.5).unwrap();
        assert!((tau_half + 0.2840).abs() < 1e-4, "{tau_half}");
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(moran_tau(&[0.5, 0.6], &[0.3, 0.3], 2.0).is_err());
        assert!(moran_tau(&[0.5, 0.5], &[1.3, 0.3], 2.0).is_err());
        assert!(lemma_powersum_check(&[1.0, -1.0], 2.0).is_err());
    }

    #[test]
    fn power_sum_cases() {
        assert!(lemma_powersum_check(&[1.0, 1.0], 2.0).unwrap());
        assert!(lemma_powersum_check(&[0.37], 2.7).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let k = rng.gen_range(1..=16);
            let v: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.0)).collect();
            let q = rng.gen_range(1e-6..=4.0);
            assert!(lemma_powersum_check(&v, q).unwrap(), "{v:?} {q}");
        }
    }
}
