use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use gaitlab_core::evolution::{random_genome, Breeder, EvolutionConfig};
use gaitlab_core::kinematics::inverse_kinematics;
use gaitlab_core::{evaluate_gait, GaitGenome, Morphology, MorphologyKind, PlanarPoint, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bench_kinematics(c: &mut Criterion) {
    let geom = Morphology::new(MorphologyKind::NoFoot).geometry;
    c.bench_function("inverse_kinematics", |b| {
        b.iter(|| inverse_kinematics(black_box(PlanarPoint::new(117.5, 325.0)), &geom))
    });
}

fn bench_evaluate(c: &mut Criterion) {
    let sim = SimConfig::default();
    let mut group = c.benchmark_group("evaluate_gait");
    for kind in MorphologyKind::ALL {
        let genome = GaitGenome::uniform(0.5, kind.genome_len());
        let morphology = Morphology::new(kind);
        group.bench_function(kind.as_str(), |b| {
            b.iter(|| evaluate_gait(black_box(&genome), &morphology, &sim, 0))
        });
    }
    group.finish();
}

fn bench_next_generation(c: &mut Criterion) {
    let config = EvolutionConfig::new(9, 0.5, 42);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut breeder = Breeder::new(config).unwrap();
    let mut population = breeder.init_population();
    for ind in &mut population {
        ind.genome = random_genome(9, &mut rng);
        ind.fitness = Some(-ind.genome.genes().iter().map(|g| (g - 0.7).powi(2)).sum::<f64>());
    }
    c.bench_function("next_generation_256", |b| {
        b.iter(|| breeder.next_generation(black_box(&population)).unwrap())
    });
}

criterion_group!(benches, bench_kinematics, bench_evaluate, bench_next_generation);
criterion_main!(benches);
