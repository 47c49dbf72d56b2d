use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{replicate_key, CounterRng, Purpose};
use crate::sim::engine::normal;
use crate::stats::Estimate;

/// `3 e^{t/2 − k/(4δ)}`.
pub fn occupation_bound(t: f64, delta: f64, k: f64) -> f64 {
    3.0 * (0.5 * t - k / (4.0 * delta)).exp()
}

/// `P(∫₀ᵗ 1{|B_s| < δ} ds > k)` for a standard Brownian motion from 0, with the
/// occupation time summed on a grid of step `dt`.
pub fn occupation_tail(t: f64, delta: f64, k: f64, dt: f64, replicates: u64, seed: u64) -> Result<Estimate> {
    if !(t > 0.0 && delta > 0.0 && dt > 0.0) || replicates == 0 {
        return Err(Error::Input("occupation tail needs t, delta, dt > 0 and replicates ≥ 1".into()));
    }
    let steps = (t / dt).round().max(1.0) as usize;
    let h = t / steps as f64;
    let sd = h.sqrt();
    let hits = (0..replicates)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = CounterRng::new(replicate_key(seed, Purpose::Occupation, i));
            let (mut b, mut occ) = (0.0f64, 0.0);
            let mut inside_prev = true;
            for _ in 0..steps {
                b += sd * normal(&mut rng);
                let inside = b.abs() < delta;
                occ += 0.5 * h * (inside_prev as u8 + inside as u8) as f64;
                inside_prev = inside;
            }
            occ > k
        })
        .count() as u64;
    Ok(Estimate::proportion(hits, replicates))
}
