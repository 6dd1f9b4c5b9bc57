use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use fraclab::constructions::make_u_lambda;
use fraclab::harness::{verify_thm13, ExperimentConfig, Suite};
use fraclab::limits::{tail_table, FunctionSequence, DEFAULT_INDEX_GRID, DEFAULT_RADIUS_GRID};
use fraclab::quadrature::TailDescriptor;
use fraclab::{exec, fraclap_pv, Execution, FracParams, QuadConfig, ScalarField};

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn pv_grid(c: &mut Criterion) {
    let p = FracParams::new(2, 0.5).unwrap();
    let u = ScalarField::radial(
        2,
        |r| 1.0 / (1.0 + r * r),
        TailDescriptor::PowerLaw { coefficient: 1.0, exponent: 2.0, onset: 1.0, exact: false },
    );
    let pts: Vec<Vec<f64>> = (0..32).map(|k| vec![0.1 * k as f64, 0.05 * k as f64 - 0.8]).collect();
    let mut g = c.benchmark_group("pv_grid_n2");
    for (name, mode) in MODES {
        let cfg = QuadConfig::default().with_execution(mode);
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| exec::try_map(mode, &pts, |x| fraclap_pv(&u, x, &p, &cfg).map(|e| e.value)).unwrap())
        });
    }
    g.finish();
}

fn pv_single(c: &mut Criterion) {
    let p = FracParams::new(2, 0.5).unwrap();
    let fam = make_u_lambda(&p, 3.0, 1.0, 10.0).unwrap();
    let x = [3.5, 0.5];
    let mut g = c.benchmark_group("pv_u_lambda_n2");
    for (name, mode) in MODES {
        let cfg = QuadConfig::default().with_execution(mode);
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| fraclap_pv(&fam.u_lambda, black_box(&x), &p, &cfg).unwrap())
        });
    }
    g.finish();
}

fn tail_tables(c: &mut Criterion) {
    let p = FracParams::new(2, 0.5).unwrap();
    let seq = FunctionSequence::mollified(&p, &QuadConfig::default()).unwrap();
    let mut g = c.benchmark_group("tail_table_n2");
    for (name, mode) in MODES {
        let cfg = QuadConfig::default().with_execution(mode);
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| tail_table(&seq, &DEFAULT_INDEX_GRID, &DEFAULT_RADIUS_GRID, &[1.0, 0.0], &p, &cfg).unwrap())
        });
    }
    g.finish();
}

fn blowup_suite(c: &mut Criterion) {
    let mut g = c.benchmark_group("thm13_suite_n2");
    g.sample_size(10);
    for (name, mode) in MODES {
        let mut cfg = ExperimentConfig { n: 2, ..ExperimentConfig::for_suite(Suite::Thm13) };
        cfg.quad.execution = mode;
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| assert!(verify_thm13(&cfg).pass)));
    }
    g.finish();
}

criterion_group!(benches, pv_grid, pv_single, tail_tables, blowup_suite);
criterion_main!(benches);
