use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use teachable_core::corpus::{self, CorpusSpec, Renderer};
use teachable_core::teach::{train_softmax, SoftmaxParams, TrainingSet};
use teachable_core::tracking::{chroma, default_scales, locate_template, track_blob, ColorTracker};
use teachable_core::vision::{embed, EMBEDDING_DIM};

fn samples(renderer: Renderer, classes: usize, per_class: usize) -> Vec<corpus::LabeledFrame> {
    corpus::generate(&CorpusSpec::new(renderer, classes, per_class, 7)).unwrap()
}

fn bench_embed(c: &mut Criterion) {
    let frame = samples(Renderer::ColoredShape, 1, 1).remove(0).frame;
    c.bench_function("embed 128x96", |b| b.iter(|| embed(black_box(&frame))));
}

fn bench_train(c: &mut Criterion) {
    let data = samples(Renderer::ColoredShape, 5, 100);
    let mut set = TrainingSet::new(EMBEDDING_DIM);
    for s in &data {
        if set.class_index(&s.state_id).is_none() {
            set.add_class(s.state_id.clone(), s.state_id.as_str()).unwrap();
        }
        set.add_sample(&s.state_id, embed(&s.frame)).unwrap();
    }
    let mut group = c.benchmark_group("train_softmax");
    group.sample_size(10);
    group.bench_function("5x100 default", |b| {
        b.iter_batched(|| set.clone(), |set| train_softmax(&set, &SoftmaxParams::default()).unwrap(), BatchSize::LargeInput)
    });
    group.bench_function("5x100 auto", |b| b.iter(|| train_softmax(black_box(&set), &SoftmaxParams::AUTO).unwrap()));
    group.finish();
}

fn bench_tracking(c: &mut Criterion) {
    let slider = samples(Renderer::SliderPosition, 4, 1);
    let frame = &slider[2].frame;
    let tracker = ColorTracker::new("handle", chroma(corpus::HANDLE_COLOR.map(f64::from)));
    c.bench_function("track_blob 128x96", |b| b.iter(|| track_blob(black_box(frame), &tracker)));

    let template = frame.crop(40, 30, 24, 20).unwrap();
    let scales = default_scales();
    c.bench_function("locate_template 7 scales", |b| {
        b.iter(|| locate_template(black_box(frame), &template, &scales).unwrap())
    });
}

criterion_group!(benches, bench_embed, bench_train, bench_tracking);
criterion_main!(benches);
