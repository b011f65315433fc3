//! Compares backpropagation-through-time gradients with central finite
//! differences, block by block, for a few random small networks.
//!
//! ```text
//! cargo run --release --example gradient_check
//! ```

use momentum_lab::dataset::Window;
use momentum_lab::features::NUM_FEATURES;
use momentum_lab::predictor::{init_params, lstm_forward, lstm_grad, LstmParams, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const STEP: f64 = 1e-5;

fn loss(params: &LstmParams, batch: &[(Window, f64)]) -> f64 {
    batch.iter().map(|(w, y)| (lstm_forward(params, w).unwrap().0 - y).powi(2)).sum::<f64>() / batch.len() as f64
}

fn main() -> momentum_lab::Result<()> {
    for (seed, hidden) in [(1u64, 1usize), (2, 2), (3, 4), (4, 8)] {
        let params = init_params(NUM_FEATURES, &TrainConfig { hidden_dim: hidden, seed, init_scale: 0.5, ..Default::default() });
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let batch: Vec<(Window, f64)> = (0..3)
            .map(|_| {
                let rows = (0..10).map(|_| std::array::from_fn(|_| StandardNormal.sample(&mut rng))).collect();
                (Window { rows }, StandardNormal.sample(&mut rng))
            })
            .collect();
        let refs: Vec<(&Window, f64)> = batch.iter().map(|(w, y)| (w, *y)).collect();
        let (_, grad) = lstm_grad(&params, &refs)?;

        let sizes = [
            ("w_x", grad.w_x.len()),
            ("w_h", grad.w_h.len()),
            ("bias", grad.bias.len()),
            ("w_out", grad.w_out.len()),
            ("b_out", 1),
        ];
        let analytic: Vec<f64> = grad.iter().collect();
        let mut k = 0;
        print!("hidden {hidden}:");
        for (name, len) in sizes {
            let mut worst = 0.0f64;
            for _ in 0..len {
                let (mut plus, mut minus) = (params.clone(), params.clone());
                *plus.coord_mut(k) += STEP;
                *minus.coord_mut(k) -= STEP;
                let numeric = (loss(&plus, &batch) - loss(&minus, &batch)) / (2.0 * STEP);
                let a = analytic[k];
                worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8));
                k += 1;
            }
            print!("  {name} {worst:.1e}");
        }
        println!();
    }
    Ok(())
}
