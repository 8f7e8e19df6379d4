use criterion::{black_box, criterion_group, criterion_main, Criterion};

use structdiag_bench::ladder;
use structdiag_core::{
    brute_force_rg, dm_decompose, find_msos, find_rg, maximum_matching, parse_model,
    BackSubstitution, BipartiteStructure, LowIndex, Plus,
};

const EQ2_JSON: &str = include_str!("../../../models/eq2.json");
const EQ4_JSON: &str = include_str!("../../../models/eq4.json");

fn bench_matching_and_dm(c: &mut Criterion) {
    let dae = parse_model(EQ4_JSON).unwrap();
    let chain = ladder(30, 8);

    c.bench_function("matching/ladder-30-8", |b| {
        let g = BipartiteStructure::from_model(&chain, &chain.all_equations()).unwrap();
        b.iter(|| black_box(maximum_matching(&g).size()))
    });
    c.bench_function("dm/dae-example", |b| {
        b.iter(|| black_box(dm_decompose(&dae, &dae.all_equations()).unwrap()))
    });
    c.bench_function("dm/ladder-30-8", |b| {
        b.iter(|| black_box(dm_decompose(&chain, &chain.all_equations()).unwrap()))
    });
}

fn bench_enumeration(c: &mut Criterion) {
    let static_model = parse_model(EQ2_JSON).unwrap();
    let dae = parse_model(EQ4_JSON).unwrap();
    let chain = ladder(12, 5);

    c.bench_function("msos/static-example", |b| {
        b.iter(|| black_box(find_msos(&static_model, &static_model.all_equations()).unwrap()))
    });
    c.bench_function("msos/ladder-12-5", |b| {
        b.iter(|| black_box(find_msos(&chain, &chain.all_equations()).unwrap()))
    });
    c.bench_function("rg/dae-lowindex", |b| {
        b.iter(|| black_box(find_rg(&dae, &LowIndex).unwrap()))
    });
    c.bench_function("rg/static-backsub", |b| {
        b.iter(|| black_box(find_rg(&static_model, &BackSubstitution).unwrap()))
    });
    c.bench_function("rg/ladder-12-5-plus", |b| {
        b.iter(|| black_box(find_rg(&chain, &Plus).unwrap()))
    });
}

fn bench_oracles(c: &mut Criterion) {
    let dae = parse_model(EQ4_JSON).unwrap();
    c.bench_function("oracle/brute-force-rg-dae", |b| {
        b.iter(|| black_box(brute_force_rg(&dae, &LowIndex, 16).unwrap()))
    });
}

criterion_group!(benches, bench_matching_and_dm, bench_enumeration, bench_oracles);
criterion_main!(benches);
