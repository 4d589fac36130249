//! Compares the analytic gradient of a small singleton classifier with
//! central finite differences on a sample of parameters.
//!
//! Biases start at zero, which can leave ReLU units exactly at their kink
//! where finite differences are meaningless, so they are nudged first.
//!
//! Usage: cargo run --release --example gradient_check [samples]

use std::collections::BTreeSet;

use mpcoref::classifiers::{FeatureGroupSelection, HyperConfig, SingletonModel};
use mpcoref::corpus::generate_synthetic_corpus;
use mpcoref::embeddings::random_table;
use mpcoref::nn::{backward, batch_loss, Parameters};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn shift(model: &mut SingletonModel, block: usize, offset: usize, delta: f64) {
    let mut s = Vec::new();
    model.slices_mut(&mut s);
    s[block][offset] += delta;
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let samples: usize = std::env::args().nth(1).map_or(Ok(2000), |a| a.parse())?;
    let docs = generate_synthetic_corpus(3, 2)?;
    let vocab: BTreeSet<&str> = docs.iter().flat_map(|d| d.sentences.iter().flatten()).map(String::as_str).collect();
    let vocab: Vec<&str> = vocab.into_iter().collect();
    let table = random_table(3, &vocab, 8)?;

    let mut config = HyperConfig::proposed().with_seed(3);
    config.conv.filters = 6;
    let mut model = SingletonModel::new(&config, FeatureGroupSelection::ALL, table.dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let names: Vec<String> = model.to_model_params().blocks.into_iter().map(|b| b.name).collect();
    let mut slices = Vec::new();
    model.slices_mut(&mut slices);
    for (name, slice) in names.iter().zip(slices) {
        if name.ends_with(".bias") {
            slice.iter_mut().for_each(|v| *v += rng.gen_range(-0.1..0.1));
        }
    }

    let (inputs, labels) = model.training_data(&docs[..1], &table)?;
    let refs: Vec<_> = inputs.iter().take(4).collect();
    let labels = &labels[..refs.len()];
    let (_, grad) = backward(&model, &refs, labels)?;
    let mut analytic = Vec::new();
    grad.slices(&mut analytic);
    let analytic: Vec<Vec<f64>> = analytic.into_iter().map(<[f64]>::to_vec).collect();

    let h = 1e-5;
    let mut errors = Vec::with_capacity(samples);
    for _ in 0..samples {
        let b = rng.gen_range(0..analytic.len());
        let i = rng.gen_range(0..analytic[b].len());
        shift(&mut model, b, i, h);
        let up = batch_loss(&model, &refs, labels)?;
        shift(&mut model, b, i, -2.0 * h);
        let down = batch_loss(&model, &refs, labels)?;
        shift(&mut model, b, i, h);
        let numeric = (up - down) / (2.0 * h);
        let a = analytic[b][i];
        errors.push((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6));
    }
    errors.sort_by(f64::total_cmp);
    println!(
        "{} parameters, {samples} sampled: median relative error {:.1e}, 99th percentile {:.1e}, max {:.1e}",
        model.param_count(),
        errors[samples / 2],
        errors[samples * 99 / 100],
        errors[samples - 1]
    );
    Ok(())
}
