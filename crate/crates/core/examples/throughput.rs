use hrtri_core::sim::{count_replications, default_grid, ArrayConfig, MaximaSampler};
use hrtri_core::CorrelationProfile;
use std::time::Instant;

fn main() {
    let config = ArrayConfig::new(5000, CorrelationProfile::linear(1.0, 1.0).unwrap(), 1).unwrap();
    let sampler = MaximaSampler::new(&config).unwrap();
    let start = Instant::now();
    let counts = count_replications(&sampler, &default_grid(), 0..2000);
    let secs = start.elapsed().as_secs_f64();
    println!("{:.2} ns/row, hits[0] = {}", secs * 1e9 / (2000.0 * 5000.0), counts.hits[0]);
}
