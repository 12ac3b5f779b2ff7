use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use pbcplus_core::lpmln::EnumOptions;
use pbcplus_core::mvpp::translate_mvpp;
use pbcplus_core::parser::{parse_description, parse_query};
use pbcplus_core::pbc::ActionDescription;
use pbcplus_core::query::{answer, QueryOptions};
use pbcplus_core::transition::{TransitionAnalysis, TransitionOptions};
use pbcplus_core::translator::translate;

fn corpus(name: &str) -> ActionDescription {
    let path = format!("{}/../../corpus/{name}", env!("CARGO_MANIFEST_DIR"));
    let src = std::fs::read_to_string(&path).unwrap();
    parse_description(&src).unwrap()
}

fn bench_parse(c: &mut Criterion) {
    let path = format!("{}/../../corpus/yale.pbc", env!("CARGO_MANIFEST_DIR"));
    let src = std::fs::read_to_string(path).unwrap();
    c.bench_function("parse_yale", |b| b.iter(|| parse_description(&src).unwrap()));
}

fn bench_translate(c: &mut Criterion) {
    let d = corpus("yale.pbc");
    c.bench_function("translate_yale_m2", |b| b.iter(|| translate(&d, 2).unwrap()));
}

fn bench_enumerate(c: &mut Criterion) {
    let d = corpus("psd.pbc");
    let program = translate_mvpp(&translate(&d, 2).unwrap().program).unwrap();
    c.bench_function("enumerate_psd_m2", |b| {
        b.iter(|| {
            program
                .enumerate_stable_models(None, &EnumOptions::default())
                .unwrap()
        })
    });
}

fn bench_transition_system(c: &mut Criterion) {
    let d = corpus("yale.pbc");
    c.bench_function("transition_system_yale", |b| {
        b.iter_batched(
            || d.clone(),
            |d| {
                let ta = TransitionAnalysis::new(&d, TransitionOptions::default()).unwrap();
                ta.transition_system()
            },
            BatchSize::SmallInput,
        )
    });
}

fn bench_queries(c: &mut Criterion) {
    let cases = [
        ("query_psd_path", "psd.pbc", "path024.pq"),
        ("query_yale_prediction", "yale.pbc", "pred.pq"),
        ("query_yale_plan", "yale.pbc", "plan.pq"),
        ("query_robot_diagnosis", "robot.pbc", "diag1.pq"),
    ];
    for (name, desc, query) in cases {
        let d = corpus(desc);
        let qpath = format!("{}/../../corpus/{query}", env!("CARGO_MANIFEST_DIR"));
        let qsrc = std::fs::read_to_string(qpath).unwrap();
        let spec = parse_query(&qsrc, &d).unwrap();
        c.bench_function(name, |b| {
            b.iter(|| answer(&d, &spec, &QueryOptions::default()).unwrap())
        });
    }
}

criterion_group!(
    benches,
    bench_parse,
    bench_translate,
    bench_enumerate,
    bench_transition_system,
    bench_queries
);
criterion_main!(benches);
