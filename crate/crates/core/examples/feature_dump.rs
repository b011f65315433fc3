//! Prints the feature frame of one synthetic ticker as CSV: blank cells mark
//! undefined values during the warm-up.
//!
//! ```text
//! cargo run --release --example feature_dump -- [rows]
//! ```

use momentum_lab::features::{build_aligned_frame, FEATURE_NAMES, WARM_UP};
use momentum_lab::market_data::{generate_synthetic_universe, SyntheticSpec};

fn main() -> momentum_lab::Result<()> {
    let rows: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(30);
    let universe = generate_synthetic_universe(&SyntheticSpec::default())?.universe;
    let ticker = universe.tickers().next().expect("non-empty universe").to_string();
    let frame = build_aligned_frame(&universe, &ticker).expect("ticker present");

    eprintln!("{ticker}: {} rows, first fully defined row {:?} (warm-up {WARM_UP})", frame.len(), frame.first_defined_index);
    eprintln!("features: {}", FEATURE_NAMES.join(", "));
    for line in frame.to_csv().lines().take(rows + 1) {
        println!("{line}");
    }
    Ok(())
}
