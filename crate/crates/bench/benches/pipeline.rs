use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use seaxtreme::exi::exi_grid;
use seaxtreme::ingest::compute_thresholds;
use seaxtreme::maxima::{Period, Variant};
use seaxtreme::pipeline::{fit_pipeline, surge_series, FitSpec};
use seaxtreme::surge::{fit_tail, Exceedance, TailVariant};
use seaxtreme::uncertainty::stationary_bootstrap;
use seaxtreme::{simulate, SimulationConfig};

fn records(years: u32) -> Vec<seaxtreme::TidalCycleRecord> {
    simulate(&SimulationConfig {
        years,
        seed: 1,
        ..SimulationConfig::heysham_like()
    })
    .unwrap()
}

fn surge_fits(c: &mut Criterion) {
    let recs = records(25);
    let th = compute_thresholds(&recs, 0.95).unwrap();
    let data: Vec<Exceedance> = recs
        .iter()
        .filter_map(|r| {
            let (y, _) = r.observation()?;
            let u = th.get(r.month);
            (y > u).then_some(Exceedance {
                excess: y - u,
                ctx: r.context()?,
            })
        })
        .collect();
    c.bench_function("fit_tail_s2_25y", |b| {
        b.iter(|| fit_tail(TailVariant::S2, black_box(&data), None).unwrap())
    });
}

fn maxima(c: &mut Criterion) {
    let recs = records(20);
    let fit = fit_pipeline(&recs, &FitSpec::full(0.95, 19, 2)).unwrap();
    let mut group = c.benchmark_group("return_level_1e-4");
    group.sample_size(10);
    for variant in [
        Variant::Baseline,
        Variant::FullSeasonal,
        Variant::TemporalDependence,
    ] {
        let spec = fit.variant(variant).unwrap();
        group.bench_function(variant.name(), |b| {
            b.iter(|| spec.return_level(black_box(1e-4), Period::Annual).unwrap())
        });
    }
    group.finish();
}

fn resampling(c: &mut Criterion) {
    let recs = records(20);
    let series = surge_series(&recs);
    let v = seaxtreme::stats::quantile(&series, 0.99);
    c.bench_function("stationary_bootstrap_20y", |b| {
        b.iter(|| stationary_bootstrap(black_box(series.len()), 10.0, 7).unwrap())
    });
    c.bench_function("exi_grid_20y", |b| {
        b.iter(|| exi_grid(black_box(&series), 2, v, 200).unwrap())
    });
}

criterion_group!(benches, surge_fits, maxima, resampling);
criterion_main!(benches);
