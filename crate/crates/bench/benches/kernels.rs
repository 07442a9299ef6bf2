use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use scmi_core::bandit::{exact_reports, BanditEnv, Behavior, Ensemble, Schedule};
use scmi_core::bounds::{shifted_rademacher_bound, slow_rate_bound};
use scmi_core::info::conditional_mutual_information;
use scmi_core::supersample::random::{random_instance, Family, GenOptions};
use scmi_core::supersample::{enumerate_joint, names, EnumOptions};
use scmi_core::DiscreteJoint;

fn exchangeable_instance() -> scmi_core::supersample::random::Instance {
    let opts = GenOptions { max_n: 4, family: Family::Exchangeable, ..GenOptions::default() };
    random_instance(11, 0, &opts)
}

fn enumeration(c: &mut Criterion) {
    let inst = exchangeable_instance();
    c.bench_function("enumerate_joint/f64", |b| {
        b.iter(|| {
            let j: DiscreteJoint<f64> =
                enumerate_joint(&inst.world, &inst.learner, inst.n, &EnumOptions::default()).unwrap();
            black_box(j.len())
        })
    });
}

fn cmi(c: &mut Criterion) {
    let inst = exchangeable_instance();
    let j: DiscreteJoint<f64> = enumerate_joint(&inst.world, &inst.learner, inst.n, &EnumOptions::default()).unwrap();
    let t = inst.n;
    let ctx = names::context(t);
    let ctx: Vec<&str> = ctx.iter().map(String::as_str).collect();
    c.bench_function("cmi/last_round", |b| {
        b.iter(|| conditional_mutual_information(&j, &[&names::lplus(t)], &[&names::u(t)], &ctx).unwrap())
    });
    c.bench_function("bounds/slow_and_shifted", |b| {
        b.iter(|| {
            let mut r = slow_rate_bound(&j).unwrap();
            r.extend(shifted_rademacher_bound(&j, 1.0, 0.125).unwrap());
            black_box(r.len())
        })
    });
}

fn bandit(c: &mut Criterion) {
    let env = BanditEnv::bernoulli(&[0.9, 0.5]).unwrap();
    let sched = Schedule::tuned(&env);
    let mut g = c.benchmark_group("bandit");
    g.sample_size(10);
    for horizon in [1_000, 10_000] {
        g.bench_with_input(BenchmarkId::new("ensemble_64_seeds", horizon), &horizon, |b, &h| {
            b.iter(|| Ensemble::simulate(&env, &sched, &Behavior::Smoothed, h, 64, 1).unwrap())
        });
    }
    g.bench_function("exact_reports_t2", |b| {
        b.iter(|| exact_reports(&env, &sched, &Behavior::Smoothed, 2, 1 << 21).unwrap())
    });
    g.finish();
}

criterion_group!(benches, enumeration, cmi, bandit);
criterion_main!(benches);
