//! Univariate feature analysis across building kinds: Pearson correlation of
//! each input channel with energy, and the F-statistic ranking.
//!
//! Run with: `cargo run --example feature_analysis`

use enercast::datagen::{synth_fused, BuildingKind, BuildingProfile};
use enercast::features::{correlations, feature_scores};

fn main() {
    for kind in [
        BuildingKind::Academic,
        BuildingKind::Hostel,
        BuildingKind::Dining,
        BuildingKind::Facilities,
    ] {
        let data = synth_fused(&BuildingProfile::new(kind, 0.05), 28, 3);
        let corr = correlations(&data).expect("non-degenerate channels");
        let scores = feature_scores(&data).expect("non-degenerate target");
        println!("{kind:?}:");
        print!("  r(energy, .): ");
        for (name, r) in &corr {
            print!("{name}={r:+.3} ");
        }
        println!();
        println!(
            "  F ranking: {}",
            scores
                .iter()
                .map(|(n, s)| format!("{n} ({s:.0})"))
                .collect::<Vec<_>>()
                .join(" > ")
        );
    }
}
