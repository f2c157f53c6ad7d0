//! Two-sample Anderson–Darling statistic (midrank form for ties) with an
//! asymptotic p-value from the limiting Anderson–Darling distribution.

/// Scholz–Stephens midrank statistic `A²_akN` for two samples.
pub fn ad_two_sample_statistic(first: &[f64], second: &[f64]) -> f64 {
    let samples = [first, second];
    let n_total = (first.len() + second.len()) as f64;

    let mut pooled: Vec<f64> = first.iter().chain(second).copied().collect();
    pooled.sort_by(f64::total_cmp);
    pooled.dedup();

    let sorted: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            let mut v = s.to_vec();
            v.sort_by(f64::total_cmp);
            v
        })
        .collect();

    let mut total = 0.0;
    for (i, sample) in sorted.iter().enumerate() {
        let n_i = samples[i].len() as f64;
        let mut inner = 0.0;
        let mut cumulative = 0.0;
        for &z in &pooled {
            let le_first = sorted[0].partition_point(|&v| v <= z);
            let lt_first = sorted[0].partition_point(|&v| v < z);
            let le_second = sorted[1].partition_point(|&v| v <= z);
            let lt_second = sorted[1].partition_point(|&v| v < z);
            let l_j = ((le_first - lt_first) + (le_second - lt_second)) as f64;
            cumulative += l_j;
            let b_a = cumulative - l_j / 2.0;

            let le = sample.partition_point(|&v| v <= z) as f64;
            let lt = sample.partition_point(|&v| v < z) as f64;
            let m_a = le - (le - lt) / 2.0;

            let denom = b_a * (n_total - b_a) - n_total * l_j / 4.0;
            if denom <= 0.0 {
                continue;
            }
            inner += l_j * (n_total * m_a - n_i * b_a).powi(2) / denom;
        }
        total += inner / n_i;
    }
    total * (n_total - 1.0) / (n_total * n_total)
}

/// Upper tail of the limiting Anderson–Darling distribution,
/// using the Marsaglia & Marsaglia (2004) approximation of its CDF.
pub fn ad_asymptotic_sf(z: f64) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    if z < 2.0 {
        let poly = 2.00012
            + (0.247105 - (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) * z) * z;
        let cdf = (-1.2337141 / z).exp() / z.sqrt() * poly;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let g = 1.0776
            - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) * z;
        // 1 - exp(-exp(g)) without cancellation
        (-(-g.exp()).exp_m1()).clamp(0.0, 1.0)
    }
}
