//! Verify the hand-written LSTM backward pass against central finite
//! differences on a small random instance.
//!
//! Run with: `cargo run --example gradient_check`

use enercast::features::SequenceSample;
use enercast::models::{lstm_backward, lstm_forward, LstmConfig, LstmModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let config = LstmConfig::new(4, 3, 3);
    let model = LstmModel::init(config, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let samples: Vec<SequenceSample> = (0..2)
        .map(|i| SequenceSample {
            target_row: i,
            sequence: (0..3)
                .map(|_| {
                    let mut s = [0.0; 5];
                    for v in s.iter_mut() {
                        *v = rng.gen_range(-1.0..1.0);
                    }
                    s
                })
                .collect(),
            target: rng.gen_range(0.0..1.0),
        })
        .collect();

    // Objective: sum of the batch predictions.
    let objective = |m: &LstmModel| -> f64 { lstm_forward(m, &samples).unwrap().0.iter().sum() };
    let (_, caches) = lstm_forward(&model, &samples).unwrap();
    let analytic = lstm_backward(&model, &caches, &[1.0, 1.0]).unwrap();

    let step = 1e-5;
    let mut worst = 0.0f64;
    for p in 0..model.params.len() {
        let mut plus = model.clone();
        plus.params[p] += step;
        let mut minus = model.clone();
        minus.params[p] -= step;
        let numeric = (objective(&plus) - objective(&minus)) / (2.0 * step);
        let denom = analytic[p].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic[p] - numeric).abs() / denom);
    }
    println!(
        "{} parameters checked, worst relative error {:.3e} (tolerance 1e-4)",
        model.params.len(),
        worst
    );
    assert!(worst < 1e-4);
    println!("analytic gradient matches finite differences");
}
