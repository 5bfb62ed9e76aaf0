//! Criterion benches comparing the rayon data-parallel core against the
//! sequential fallback on three representative workloads. Results are
//! identical between modes; only timing differs.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use towerlab::amdim::{build_simplex_map, equivariance_defect};
use towerlab::cantor::CantorSystem;
use towerlab::comparison::find_witness;
use towerlab::group::FiniteGroupSet;
use towerlab::par;
use towerlab::towers::{double_castle, verify_castle, Castle, Tower};

fn doubled_collection(depth: usize, shift: i64) -> towerlab::towers::TowerCollection {
    let sys = CantorSystem::z_odometer(2, depth).unwrap();
    let base = sys.cells(depth as u32, [0]).unwrap();
    let len = (1i64 << depth) - 1;
    let castle = Castle { towers: vec![Tower::new(base, FiniteGroupSet::z_interval(0, len))] };
    double_castle(&castle, shift).unwrap()
}

fn bench_simplex_map(c: &mut Criterion) {
    let ts = doubled_collection(9, 256);
    let f = FiniteGroupSet::z_interval(-1, 1);
    let mut group = c.benchmark_group("simplex_map_defect");
    for (label, sequential) in [("parallel", false), ("sequential", true)] {
        group.bench_function(BenchmarkId::from_parameter(label), |b| {
            par::force_sequential(sequential);
            b.iter(|| {
                let map = build_simplex_map(&ts, &f, 31).unwrap();
                equivariance_defect(&map, &f).unwrap()
            });
            par::force_sequential(false);
        });
    }
    group.finish();
}

fn bench_castle_verification(c: &mut Criterion) {
    let sys = CantorSystem::z_odometer(2, 9).unwrap();
    let base = sys.cells(9, [0]).unwrap();
    let castle = Castle { towers: vec![Tower::new(base, FiniteGroupSet::z_interval(0, 511))] };
    let mut group = c.benchmark_group("castle_verification");
    for (label, sequential) in [("parallel", false), ("sequential", true)] {
        group.bench_function(BenchmarkId::from_parameter(label), |b| {
            par::force_sequential(sequential);
            b.iter(|| verify_castle(&castle).unwrap());
            par::force_sequential(false);
        });
    }
    group.finish();
}

fn bench_comparison_sweep(c: &mut Criterion) {
    let sys = CantorSystem::z_odometer(2, 3).unwrap();
    let pairs: Vec<(u32, u32)> = (0u32..64)
        .flat_map(|a| (0u32..64).map(move |b| (a * 4 + 1, b * 4 + 2)))
        .collect();
    let run_pair = |&(ma, mb): &(u32, u32)| {
        let a = sys.cells(3, (0..8).filter(|i| ma >> i & 1 == 1)).unwrap();
        let b = sys.cells(3, (0..8).filter(|i| mb >> i & 1 == 1)).unwrap();
        find_witness(&a, &b, 0, 8, 3).unwrap().witness().is_some()
    };
    let mut group = c.benchmark_group("comparison_sweep_4096_pairs");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| par::map_par(&pairs, run_pair).iter().filter(|&&x| x).count())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| par::map_seq(&pairs, run_pair).iter().filter(|&&x| x).count())
    });
    group.finish();
}

criterion_group!(benches, bench_simplex_map, bench_castle_verification, bench_comparison_sweep);
criterion_main!(benches);
