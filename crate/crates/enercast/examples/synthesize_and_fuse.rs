//! Generate one synthetic academic building and fuse its five multi-rate
//! channels onto the common 10-minute grid.
//!
//! Run with: `cargo run --example synthesize_and_fuse`

use enercast::align::fuse;
use enercast::datagen::{synth_building, BuildingKind, BuildingProfile};
use enercast::ingest::{validate_series, Channel};

fn main() {
    let profile = BuildingProfile::new(BuildingKind::Academic, 0.05);
    let channels = synth_building(&profile, 14, 42).expect("valid profile");

    println!("native channel rates:");
    for ch in Channel::all() {
        let s = validate_series(&channels[&ch]).expect("generator invariants");
        println!(
            "  {:<12} {:>6} points, every {:>6} s, unit {}",
            ch.name(),
            s.points.len(),
            s.interval_native,
            s.unit
        );
    }

    let validated = channels
        .iter()
        .map(|(&ch, s)| (ch, validate_series(s).unwrap()))
        .collect();
    let fused = fuse(&validated, 600).expect("spans overlap");
    println!("\nfused: {} rows at {} s", fused.rows.len(), fused.grid_interval);
    println!("first rows of the fused table:");
    for r in &fused.rows[..5] {
        println!(
            "  t={} energy={:8.1} Wh occ={:5.0} temp={:5.2} C hum={:5.1} cal={}",
            r.timestamp, r.energy, r.occupancy, r.temperature, r.humidity, r.calendar
        );
    }

    let (lo, hi) = fused
        .rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r.energy), hi.max(r.energy))
        });
    println!("\nenergy range over the fused span: {lo:.1} .. {hi:.1} Wh");
}
