//! Helpers shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use mpcoref::classifiers::{CorefInput, HyperConfig, MentionInput};
use mpcoref::corpus::CorpusDocument;
use mpcoref::embeddings::{random_table, EmbeddingTable};
use mpcoref::features::{MENTION_FEATURES, PAIR_FEATURES};
use mpcoref::nn::{bce_loss, Matrix, Network};
use rand::Rng;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-4;
/// Gradients smaller than this are compared absolutely rather than
/// relatively; below it the finite-difference truncation error dominates.
pub const FD_FLOOR: f64 = 1e-6;

pub struct GradientCheck {
    pub params: usize,
    pub max_relative_error: f64,
    /// Parameters whose loss has a ReLU or max-pool switch within one step,
    /// checked with a smaller step instead.
    pub shrunk_steps: usize,
    /// (block index, offset, analytic, numeric) of the worst parameter.
    pub worst: (usize, usize, f64, f64),
}

fn flatten<N: Network>(net: &N) -> Vec<Vec<f64>> {
    let mut slices = Vec::new();
    net.slices(&mut slices);
    slices.into_iter().map(<[f64]>::to_vec).collect()
}

fn set_param<N: Network>(net: &mut N, block: usize, offset: usize, value: f64) {
    let mut slices = Vec::new();
    net.slices_mut(&mut slices);
    slices[block][offset] = value;
}

/// Moves every bias off its zero initialization so that no unit sits
/// exactly on a ReLU kink.
pub fn jitter_biases<N: Network, R: Rng>(net: &mut N, rng: &mut R) {
    let names: Vec<String> = net.to_model_params().blocks.into_iter().map(|b| b.name).collect();
    let mut slices = Vec::new();
    net.slices_mut(&mut slices);
    for (name, slice) in names.iter().zip(slices) {
        if name.ends_with(".bias") {
            for v in slice {
                *v += rng.gen_range(-0.1..0.1);
            }
        }
    }
}

/// Loss at θ − s, θ and θ + s for one parameter; `base` is the loss at θ.
#[allow(clippy::too_many_arguments)]
fn probe_loss<N: Network>(
    probe: &mut N,
    input: &N::Input,
    label: f64,
    base: f64,
    (b, i): (usize, usize),
    theta: f64,
    s: f64,
) -> [f64; 3] {
    let mut at = |v: f64| {
        set_param(probe, b, i, v);
        bce_loss(probe.predict(input).unwrap(), label)
    };
    let out = [at(theta - s), base, at(theta + s)];
    set_param(probe, b, i, theta);
    out
}

/// Gap between the forward and backward one-sided differences. On a smooth
/// stretch it is `s·f''` and shrinks with `s`; a kink inside the stencil
/// leaves a gap that does not.
fn one_sided_gap(l: [f64; 3], s: f64) -> f64 {
    ((l[2] - l[1]) - (l[1] - l[0])) / s
}

/// Compares the analytic gradient of the BCE loss on one example with
/// central finite differences over every parameter. The step is `FD_STEP`
/// unless a non-differentiable point lies within it, in which case it is
/// divided by ten until the stencil is smooth.
pub fn gradient_check<N: Network>(net: &N, input: &N::Input, label: f64) -> GradientCheck {
    let mut grad = net.zeros_like();
    net.accumulate_gradient(input, label, 1.0, &mut grad).unwrap();
    let analytic = flatten(&grad);
    let original = flatten(net);

    let base = bce_loss(net.predict(input).unwrap(), label);
    let mut probe = net.clone();
    let mut check = GradientCheck {
        params: 0,
        max_relative_error: 0.0,
        shrunk_steps: 0,
        worst: (0, 0, 0.0, 0.0),
    };
    for (b, block) in original.iter().enumerate() {
        for (i, &theta) in block.iter().enumerate() {
            let mut step = FD_STEP;
            let mut losses = probe_loss(&mut probe, input, label, base, (b, i), theta, step);
            while step > 1e-7 {
                let finer = probe_loss(&mut probe, input, label, base, (b, i), theta, step / 10.0);
                let (coarse_gap, fine_gap) = (one_sided_gap(losses, step), one_sided_gap(finer, step / 10.0));
                if coarse_gap.abs() <= 20.0 * fine_gap.abs() + 1e-8 {
                    break;
                }
                step /= 10.0;
                losses = finer;
            }
            if step < FD_STEP {
                check.shrunk_steps += 1;
            }

            let numeric = (losses[2] - losses[0]) / (2.0 * step);
            let a = analytic[b][i];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FD_FLOOR);
            if err > check.max_relative_error {
                check.max_relative_error = err;
                check.worst = (b, i, a, numeric);
            }
            check.params += 1;
        }
    }
    check
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

pub fn random_mention<R: Rng>(rng: &mut R, dim: usize, word_rows: usize, context_rows: usize) -> MentionInput {
    let mut feats = [0.0; MENTION_FEATURES];
    for f in &mut feats {
        *f = f64::from(rng.gen_bool(0.5) as u8);
    }
    MentionInput {
        words: random_matrix(rng, word_rows, dim),
        context: random_matrix(rng, context_rows, dim),
        feats,
    }
}

pub fn random_pair<R: Rng>(rng: &mut R, dim: usize, word_rows: usize, context_rows: usize) -> CorefInput {
    let mut relation = [0.0; PAIR_FEATURES];
    for r in &mut relation {
        *r = rng.gen_range(0.0..1.0);
    }
    CorefInput {
        antecedent: Arc::new(random_mention(rng, dim, word_rows, context_rows)),
        anaphor: Arc::new(random_mention(rng, dim, word_rows, context_rows)),
        relation,
    }
}

/// The deep preset shrunk for finite differences: two stacked convolutions
/// and every layer 8 wide, keeping its layer counts.
pub fn wu_ma_reduced() -> HyperConfig {
    let mut c = HyperConfig::wu_ma();
    c.conv.depth = 2;
    c.conv.filters = 8;
    c.input_fcn = vec![8; c.input_fcn.len()];
    c.post_concat_fcn = vec![8; c.post_concat_fcn.len()];
    c.final_fcn = vec![8; c.final_fcn.len()];
    c
}

/// Random embeddings over every token of `docs`.
pub fn corpus_table(docs: &[CorpusDocument], seed: u64, dim: usize) -> EmbeddingTable {
    let vocab: BTreeSet<&str> = docs
        .iter()
        .flat_map(|d| d.sentences.iter().flatten())
        .map(String::as_str)
        .collect();
    let vocab: Vec<&str> = vocab.into_iter().collect();
    random_table(seed, &vocab, dim).unwrap()
}
