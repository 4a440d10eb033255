//! Train each model family on the same synthetic building and compare test
//! metrics, then print the start of the actual-vs-predicted overlay for the
//! best one.
//!
//! Run with: `cargo run --example train_and_evaluate`

use enercast::datagen::{synth_fused, BuildingKind, BuildingProfile};
use enercast::eval::{evaluate_range, forecast_overlay};
use enercast::pipeline::{train_pipeline, ModelSpec, PipelineConfig};

fn main() {
    let data = synth_fused(&BuildingProfile::new(BuildingKind::Academic, 0.05), 30, 42);
    println!("fused rows: {}", data.rows.len());

    let specs = [
        ModelSpec::Ridge { alpha: 1.0 },
        ModelSpec::Tree { max_depth: 14, min_samples_split: 20 },
        ModelSpec::Forest { n_estimators: 100, max_depth: 14, min_samples_split: 20 },
        ModelSpec::Lstm { hidden: 32, dense: 5, batch_size: 64, epochs: 5, learning_rate: 0.001 },
    ];

    println!("\n{:<8} {:>8} {:>10} {:>10}", "model", "r2", "mae_norm", "mae_wh");
    let mut best = None;
    for spec in specs {
        let cfg = PipelineConfig::new(spec.clone(), 42);
        let (artifact, split) = train_pipeline(&data, &cfg).expect("training succeeds");
        let entry = evaluate_range(&artifact, &data, split.test.clone(), spec.kind_name())
            .expect("evaluation succeeds");
        println!(
            "{:<8} {:>8.4} {:>10.4} {:>10.2}",
            entry.label, entry.r2, entry.mae_norm, entry.mae_wh
        );
        if best.as_ref().map_or(true, |(r2, _, _, _)| entry.r2 > *r2) {
            best = Some((entry.r2, spec.kind_name(), artifact, split.test));
        }
    }

    let (_, name, artifact, test) = best.unwrap();
    let overlay = forecast_overlay(&artifact, &data, test, 6).expect("overlay");
    println!("\noverlay head for the best model ({name}):");
    for p in &overlay {
        println!(
            "  t={} actual={:8.1} Wh predicted={:8.1} Wh",
            p.timestamp, p.actual_wh, p.predicted_wh
        );
    }
}
