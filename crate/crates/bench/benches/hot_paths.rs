use std::collections::HashSet;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use srl_bench::{sentence, tuples};
use srl_core::evaluation::{evaluate, micro_prf};
use srl_core::extraction::parse_argument_json;
use srl_core::framebank::RoleMap;
use srl_core::matcher::{best_match, ratio, MatchParams};
use srl_core::RoleLabel;

fn similarity(c: &mut Criterion) {
    let mut group = c.benchmark_group("ratio");
    for n in [8, 32, 128] {
        let a = sentence(n);
        let b = sentence(n + 3).replace("profit", "profits");
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, _| {
            bench.iter(|| ratio(black_box(&a), black_box(&b)))
        });
    }
    group.finish();
}

fn matching(c: &mut Criterion) {
    let mut group = c.benchmark_group("best_match");
    let query = "quarterly profit rose";
    for n in [16, 64, 256] {
        let corpus = sentence(n);
        for step in [1, 4] {
            let params = MatchParams { step, ..MatchParams::default() };
            group.bench_with_input(BenchmarkId::new(format!("step{step}"), n), &n, |bench, _| {
                bench.iter(|| best_match(black_box(query), black_box(&corpus), &params))
            });
        }
    }
    group.finish();
}

fn extraction(c: &mut Criterion) {
    let known: HashSet<RoleLabel> = (0..5).map(RoleLabel::core).collect();
    let descriptions: RoleMap = [(RoleLabel::core(0), "seller"), (RoleLabel::core(1), "thing sold")]
        .into_iter()
        .map(|(l, d)| (l, d.to_string()))
        .collect();
    let response = r#"Sure. Here is the answer in the required format:
{sold: {role: argument}}
{"sold": {"A0": "the company", "thing sold": "two divisions", "TMP": "last year", "extra": "noise"}}"#;
    c.bench_function("parse_argument_json", |bench| {
        bench.iter(|| parse_argument_json(black_box(response), &known, &descriptions))
    });
}

fn scoring(c: &mut Criterion) {
    let mut group = c.benchmark_group("scoring");
    for n in [100, 1000] {
        let (gold, pred) = tuples(n);
        group.bench_with_input(BenchmarkId::new("micro_prf", n), &n, |bench, _| {
            bench.iter(|| micro_prf(black_box(&pred), black_box(&gold)))
        });
        group.bench_with_input(BenchmarkId::new("evaluate", n), &n, |bench, _| {
            bench.iter(|| evaluate(black_box(&pred), black_box(&gold)))
        });
    }
    group.finish();
}

criterion_group!(benches, similarity, matching, extraction, scoring);
criterion_main!(benches);
