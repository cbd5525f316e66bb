//! Sequential against rayon execution for the data-parallel kernels.
//!
//! Without the `parallel` feature both variants run the same loop, which is a
//! useful baseline for the scheduling overhead.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use uctk_core::hugoniot::{rh_points_at_speed_with, trace_hugoniot_with, TraceOptions};
use uctk_core::uc_identity::build_surface_identity_with;
use uctk_core::{Execution, FluidParams, InvariantLine, State, Vertex};

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn params() -> FluidParams {
    FluidParams::new(1.0, 2.0, 0.75, 1.0, 1.0).unwrap()
}

fn hugoniot_trace(c: &mut Criterion) {
    let p = params();
    let um = State { sw: 0.3, so: 0.3 };
    let mut group = c.benchmark_group("trace_hugoniot");
    for (name, exec) in POLICIES {
        let opts = TraceOptions { resolution: 200, umbilic_refinement: 8, exec };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| trace_hugoniot_with(black_box(um), &p, *opts))
        });
    }
    group.finish();
}

fn rh_points(c: &mut Criterion) {
    let p = params();
    let um = State { sw: 0.2, so: 0.35 };
    let mut group = c.benchmark_group("rh_points_at_speed");
    for (name, exec) in POLICIES {
        group.bench_function(name, |b| b.iter(|| rh_points_at_speed_with(black_box(um), 1.7, &p, 80, exec)));
    }
    group.finish();
}

fn identity_surface(c: &mut Criterion) {
    let line = InvariantLine::new(Vertex::G, params());
    let mut group = c.benchmark_group("build_surface_identity");
    for (name, exec) in POLICIES {
        group.bench_function(name, |b| b.iter(|| build_surface_identity_with(black_box(&line), 400, exec)));
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = hugoniot_trace, rh_points, identity_surface
}
criterion_main!(benches);
