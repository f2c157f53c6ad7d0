//! One-sample Kolmogorov–Smirnov test against Uniform(0, 1).

/// Largest vertical distance between the sample ECDF and the uniform CDF.
pub fn ks_uniform_statistic(values: &[f64]) -> f64 {
    let mut u: Vec<f64> = values.to_vec();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    u.iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            let above = (i + 1) as f64 / n - x;
            let below = x - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// p-value of the uniformity test: exact distribution for n <= 35,
/// asymptotic Kolmogorov distribution beyond that.
pub fn ks_uniform_pvalue(values: &[f64]) -> f64 {
    let n = values.len();
    if n == 0 {
        return 1.0;
    }
    let d = ks_uniform_statistic(values);
    if n <= 35 {
        (1.0 - exact_cdf(n, d)).clamp(0.0, 1.0)
    } else {
        let rn = (n as f64).sqrt();
        kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d)
    }
}

/// Survival function of the limiting Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// P(D_n < d) by the Marsaglia–Tsang–Wang matrix recursion.
fn exact_cdf(n: usize, d: f64) -> f64 {
    let nd = n as f64 * d;
    if d <= 0.0 {
        return 0.0;
    }
    if d >= 1.0 {
        return 1.0;
    }
    let k = nd.floor() as usize + 1;
    let m = 2 * k - 1;
    let h = k as f64 - nd;

    let mut hm = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            if i + 1 >= j {
                hm[i * m + j] = 1.0;
            }
        }
    }
    for i in 0..m {
        hm[i * m] -= h.powi(i as i32 + 1);
        hm[(m - 1) * m + i] -= h.powi((m - i) as i32);
    }
    if 2.0 * h - 1.0 > 0.0 {
        hm[(m - 1) * m] += (2.0 * h - 1.0).powi(m as i32);
    }
    for i in 0..m {
        for j in 0..m {
            if i + 1 > j {
                for g in 1..=(i + 1 - j) {
                    hm[i * m + j] /= g as f64;
                }
            }
        }
    }

    let q = matrix_power(&hm, m, n);
    let mut s = q[(k - 1) * m + (k - 1)];
    for i in 1..=n {
        s *= i as f64 / n as f64;
    }
    s
}

fn matrix_power(a: &[f64], m: usize, mut e: usize) -> Vec<f64> {
    let mut result = vec![0.0; m * m];
    for i in 0..m {
        result[i * m + i] = 1.0;
    }
    let mut base = a.to_vec();
    while e > 0 {
        if e & 1 == 1 {
            result = matmul(&result, &base, m);
        }
        base = matmul(&base, &base, m);
        e >>= 1;
    }
    result
}

fn matmul(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * m];
    for i in 0..m {
        for l in 0..m {
            let ail = a[i * m + l];
            if ail == 0.0 {
                continue;
            }
            for j in 0..m {
                c[i * m + j] += ail * b[l * m + j];
            }
        }
    }
    c
}
