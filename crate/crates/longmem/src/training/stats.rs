//! Welch's two-sample t-test and the special functions behind the Student-t
//! CDF. The CDF goes through the regularized incomplete beta function
//! (continued fraction, modified Lentz), which is accurate for every df this
//! crate meets, so no large-df normal approximation is needed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ln Gamma(x) for x > 0 (Lanczos approximation).
pub fn ln_gamma(x: f64) -> f64 {
    const C: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    debug_assert!(x > 0.0);
    let mut sum = 1.000000000190015;
    for (i, c) in C.iter().enumerate() {
        sum += c / (x + i as f64 + 1.0);
    }
    let tmp = x + 5.5;
    (x + 0.5) * tmp.ln() - tmp + (2.5066282746310005 * sum / x).ln()
}

/// Regularized incomplete beta I_x(a, b) by continued fraction.
pub fn inc_beta(x: f64, a: f64, b: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "shape parameters must be positive");
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    // Converges fastest below the pivot; mirror otherwise.
    if x > (a + 1.0) / (a + b + 2.0) {
        return 1.0 - inc_beta(1.0 - x, b, a);
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b));
    let front = ln_front.exp();
    // Modified Lentz evaluation of the standard continued fraction.
    let tiny = 1e-300;
    let mut c = 1.0f64;
    let mut d = 0.0f64;
    let mut f = 1.0f64;
    for m in 0..400 {
        let m_f = m as f64;
        let numerator = if m == 0 {
            1.0
        } else if m % 2 == 0 {
            let k = m_f / 2.0;
            k * (b - k) * x / ((a + 2.0 * k - 1.0) * (a + 2.0 * k))
        } else {
            let k = (m_f - 1.0) / 2.0;
            -(a + k) * (a + b + k) * x / ((a + 2.0 * k) * (a + 2.0 * k + 1.0))
        };
        d = 1.0 + numerator * d;
        if d.abs() < tiny {
            d = tiny;
        }
        d = 1.0 / d;
        c = 1.0 + numerator / c;
        if c.abs() < tiny {
            c = tiny;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-15 {
            break;
        }
    }
    front * (f - 1.0) / a
}

/// P(T <= t) for Student's t with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    assert!(df > 0.0, "degrees of freedom must be positive");
    let x = df / (df + t * t);
    let half_tail = 0.5 * inc_beta(x, 0.5 * df, 0.5);
    if t <= 0.0 {
        half_tail
    } else {
        1.0 - half_tail
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    /// One-sided p-value for the alternative mean(a) < mean(b).
    pub p_one_sided: f64,
    pub mean_a: f64,
    pub mean_b: f64,
}

fn mean_and_var(sample: &[f64]) -> (f64, f64) {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let var = sample.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch's two-sample t statistic with Welch-Satterthwaite degrees of
/// freedom; unequal variances, unequal sample sizes.
pub fn welch_ttest(sample_a: &[f64], sample_b: &[f64]) -> Result<WelchTest> {
    if sample_a.len() < 2 || sample_b.len() < 2 {
        return Err(Error::Data("each sample needs at least 2 observations".into()));
    }
    let (mean_a, var_a) = mean_and_var(sample_a);
    let (mean_b, var_b) = mean_and_var(sample_b);
    if var_a == 0.0 && var_b == 0.0 {
        return Err(Error::Data("both samples are degenerate (zero variance)".into()));
    }
    let na = sample_a.len() as f64;
    let nb = sample_b.len() as f64;
    let se2_a = var_a / na;
    let se2_b = var_b / nb;
    let se = (se2_a + se2_b).sqrt();
    let t = (mean_a - mean_b) / se;
    let df = (se2_a + se2_b).powi(2) / (se2_a * se2_a / (na - 1.0) + se2_b * se2_b / (nb - 1.0));
    let p_one_sided = student_t_cdf(t, df);
    Ok(WelchTest { t, df, p_one_sided, mean_a, mean_b })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(5.0) - 24.0f64.ln()).abs() < 1e-10);
        assert!((ln_gamma(1.0)).abs() < 1e-12);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-10);
    }

    #[test]
    fn t_cdf_symmetry_and_center() {
        assert!((student_t_cdf(0.0, 7.0) - 0.5).abs() < 1e-14);
        for &t in &[0.3, 1.2, 2.7] {
            let s = student_t_cdf(t, 11.0) + student_t_cdf(-t, 11.0);
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn t_cdf_with_one_df_is_cauchy() {
        // F(t) = 1/2 + atan(t)/pi.
        for &t in &[-3.0f64, -0.7, 0.4, 2.5] {
            let oracle = 0.5 + t.atan() / std::f64::consts::PI;
            assert!((student_t_cdf(t, 1.0) - oracle).abs() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn identical_samples_give_centered_p() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let res = welch_ttest(&a, &a).unwrap();
        assert_eq!(res.t, 0.0);
        assert!((res.p_one_sided - 0.5).abs() < 1e-12);
    }

    #[test]
    fn shifted_samples_are_detected() {
        // Pseudo-normal draws; the +10 shift dominates any sampling noise.
        let mut a = Vec::new();
        let mut rng = crate::rng::Rng64::from_seed(5);
        for _ in 0..100 {
            a.push(rng.normal());
        }
        let b: Vec<f64> = a.iter().map(|x| x + 10.0).collect();
        let res = welch_ttest(&a, &b).unwrap();
        assert!(res.p_one_sided < 1e-10, "p = {}", res.p_one_sided);
        assert!(res.t < 0.0);
    }

    #[test]
    fn degenerate_samples_are_rejected() {
        assert!(welch_ttest(&[1.0], &[1.0, 2.0]).is_err());
        assert!(welch_ttest(&[2.0, 2.0], &[3.0, 3.0]).is_err());
        // One degenerate sample is fine.
        assert!(welch_ttest(&[2.0, 2.0], &[3.0, 4.0]).is_ok());
    }

    // Fixture pairs with reference values computed in advance with an
    // independent statistics library (scipy.stats 1.15: ttest_ind with
    // equal_var=False, alternative='less').
    #[test]
    fn fixture_pairs_match_reference_library() {
        let a1 = [
            27.5, 21.0, 19.0, 23.6, 17.0, 17.9, 16.9, 20.1, 21.9, 22.6, 23.1, 19.6, 19.0, 21.7,
            21.4,
        ];
        let b1 = [
            27.1, 22.0, 20.8, 23.4, 23.4, 23.5, 25.8, 22.0, 24.8, 20.2, 21.9, 22.1, 22.9, 30.6,
        ];
        let a2 = [3.2, 4.1, 3.8, 4.4, 5.0, 3.6, 4.9, 4.2];
        let b2 = [4.5, 5.1, 6.2, 5.8, 4.9, 6.0];
        let a3 = [12.1, 11.4, 13.2, 12.8, 11.9, 12.5, 13.0, 12.2, 11.7, 12.9, 12.4, 12.0];
        let b3 = [12.3, 11.8, 12.7, 12.1, 12.6];
        let cases: [(&[f64], &[f64], f64, f64, f64); 3] = [
            (&a1, &b1, -2.704958, 26.935245, 0.0058485682),
            (&a2, &b2, -3.585521, 10.306149, 0.0023674761),
            (&a3, &b3, 0.181285, 11.489560, 0.5703485842),
        ];
        for (i, (a, b, t_ref, df_ref, p_ref)) in cases.into_iter().enumerate() {
            let res = welch_ttest(a, b).unwrap();
            assert!((res.t - t_ref).abs() < 0.005, "pair {i}: t {} vs {t_ref}", res.t);
            assert!((res.df - df_ref).abs() < 0.005, "pair {i}: df {} vs {df_ref}", res.df);
            assert!((res.p_one_sided - p_ref).abs() < 1e-7, "pair {i}: p {} vs {p_ref}", res.p_one_sided);
        }
    }
}
