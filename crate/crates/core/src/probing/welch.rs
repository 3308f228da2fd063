use serde::{Deserialize, Serialize};

use super::ProbeError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Welch {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Two-sided Welch's unequal-variances t-test of `xs` against `ys`.
pub fn welch_t(xs: &[f64], ys: &[f64]) -> Result<Welch, ProbeError> {
    if xs.len() < 2 || ys.len() < 2 {
        return Err(ProbeError::Degenerate("each sample needs at least two values".into()));
    }
    let (mx, vx) = mean_var(xs);
    let (my, vy) = mean_var(ys);
    if vx == 0.0 || vy == 0.0 {
        return Err(ProbeError::Degenerate("a sample has zero variance".into()));
    }
    let a = vx / xs.len() as f64;
    let b = vy / ys.len() as f64;
    let t = (mx - my) / libm::sqrt(a + b);
    let df = (a + b) * (a + b) / (a * a / (xs.len() - 1) as f64 + b * b / (ys.len() - 1) as f64);
    Ok(Welch { t, df, p: student_t_two_sided(t, df) })
}

/// `P(|T| ≥ |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    inc_beta(df / (df + t * t), df / 2.0, 0.5)
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn inc_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b) + a * libm::log(x) + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(x, a, b) / a
    } else {
        1.0 - front * beta_cf(1.0 - x, b, a) / b
    }
}

/// Continued fraction for the incomplete beta, modified Lentz evaluation.
fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..1000 {
        let m = f64::from(m);
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Reference values computed with an independent statistics package.
    #[test]
    fn welch_reference_values() {
        let cases: [(&[f64], &[f64], f64, f64, f64); 3] = [
            (&[1.0, 2.0, 3.0, 4.0], &[2.0, 3.0, 4.0, 5.0], -1.095_445_115_010_332_4, 6.0, 0.315_333_596_201_229_6),
            (
                &[0.2, 1.7, 3.1, 2.2, 0.9],
                &[5.5, 4.1, 6.3, 5.0, 7.9, 4.4, 6.0],
                -5.677_059_092_687_722,
                9.472_824_269_192_834,
                0.000_250_560_754_964_767_3,
            ),
            (
                &[1.0, 1.1, 0.9, 1.05],
                &[1.0, 3.0, -2.0, 8.5, 4.0, 0.5],
                -1.010_132_406_808_264,
                5.008_411_092_070_786,
                0.358_714_684_731_646_75,
            ),
        ];
        for (xs, ys, t, df, p) in cases {
            let w = welch_t(xs, ys).unwrap();
            assert!(rel(w.t, t) < 1e-9, "{w:?}");
            assert!(rel(w.df, df) < 1e-9, "{w:?}");
            assert!(rel(w.p, p) < 1e-8, "{w:?}");
        }
    }

    #[test]
    fn t_distribution_reference_values() {
        let cases = [
            (0.5, 3.0, 0.651_447_964_848_151),
            (2.0, 10.0, 0.073_388_034_770_740_39),
            (-1.3, 2.5, 0.300_486_789_270_707_93),
            (4.0, 1.0, 0.155_958_260_754_738_65),
            (1e-3, 50.0, 0.999_206_094_775_501_7),
            (8.0, 120.0, 8.833_425_662_830_026e-13),
        ];
        for (t, df, p) in cases {
            let got = student_t_two_sided(t, df);
            assert!(rel(got, p) < 1e-8, "t={t} df={df}: {got} vs {p}");
        }
    }

    #[test]
    fn identical_samples() {
        let w = welch_t(&[1.0, 2.0, 4.0], &[4.0, 1.0, 2.0]).unwrap();
        assert_eq!(w.t, 0.0);
        assert_eq!(w.p, 1.0);
    }

    #[test]
    fn degenerate_samples() {
        assert!(welch_t(&[1.0], &[1.0, 2.0]).is_err());
        assert!(welch_t(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }
}
