//! Two-stage hyperparameter search for the decision tree: randomized
//! exploration over the default ranges, then grid refinement around the best
//! random trial.
//!
//! Run with: `cargo run --example hyperparameter_search`

use enercast::datagen::{synth_fused, BuildingKind, BuildingProfile};
use enercast::tune::{grid_search, random_search, refine_grid, SearchSpace, TuneOptions};

fn main() {
    let data = synth_fused(&BuildingProfile::new(BuildingKind::Academic, 0.05), 21, 9);
    let space = SearchSpace::default_for("tree").expect("known model kind");
    let opts = TuneOptions::default();

    let random = random_search(&space, 8, &data, &opts).expect("random stage");
    println!("random stage ({} trials):", random.len());
    for t in &random {
        println!("  val_mae {:.5}  {:?}", t.val_mae, t.config);
    }

    let grid = refine_grid(&space, &random[0].config, 1);
    println!("\nrefinement grid: {} points around the best random trial", grid.len());
    let (best, table) = grid_search(&grid, "tree", &data, &opts).expect("grid stage");
    for t in table.iter().take(5) {
        println!("  val_mae {:.5}  {:?}", t.val_mae, t.config);
    }
    println!("\nwinner: val_mae {:.5}  {:?}", best.val_mae, best.config);
}
