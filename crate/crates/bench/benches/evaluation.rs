use std::hint::black_box;

use bgmix_core::{
    average_precision, evaluate, match_predictions, Annotation, BoundBox, Category, DatasetManifest, DetectionRecord,
    EvalConfig, ImageEntry,
};
use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_box(rng: &mut ChaCha8Rng) -> BoundBox {
    let (x, y) = (rng.random_range(0.0..560.0), rng.random_range(0.0..400.0));
    BoundBox::new(x, y, rng.random_range(8.0..80.0), rng.random_range(8.0..80.0)).unwrap()
}

/// 500 images, about 4 ground truths and 10 predictions each.
fn workload() -> (DatasetManifest, Vec<DetectionRecord>) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut m = DatasetManifest {
        images: Vec::new(),
        annotations: Vec::new(),
        categories: Category::canonical(),
    };
    let mut preds = Vec::new();
    for id in 1..=500u64 {
        m.images.push(ImageEntry {
            id,
            file_name: format!("{id}.png"),
            width: 640,
            height: 480,
        });
        for _ in 0..4 {
            let bbox = random_box(&mut rng);
            let category_id = rng.random_range(1..=2);
            m.annotations.push(Annotation {
                id: m.annotations.len() as u64 + 1,
                image_id: id,
                category_id,
                bbox,
            });
            preds.push(DetectionRecord {
                image_id: id,
                category_id,
                bbox: bbox.translated(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)).unwrap(),
                score: rng.random(),
            });
        }
        for _ in 0..6 {
            preds.push(DetectionRecord {
                image_id: id,
                category_id: rng.random_range(1..=2),
                bbox: random_box(&mut rng),
                score: rng.random(),
            });
        }
    }
    (m, preds)
}

fn bench(c: &mut Criterion) {
    let (gt, preds) = workload();
    let matched = match_predictions(&preds, &gt, 1, 0.5);
    c.bench_function("match_predictions", |b| b.iter(|| match_predictions(black_box(&preds), &gt, 1, 0.5)));
    c.bench_function("average_precision", |b| b.iter(|| average_precision(black_box(&matched))));
    c.bench_function("evaluate", |b| b.iter(|| evaluate(black_box(&preds), &gt, &EvalConfig::default()).unwrap()));
}

criterion_group!(benches, bench);
criterion_main!(benches);
