// Scratch harness for exploring curriculum-vs-baseline configurations.
// Not part of the test suite.

use sttcl::curriculum::CurriculumConfig;
use sttcl::model::ModelConfig;
use sttcl::signal::{extract_features, PreprocessConfig};
use sttcl::synth::{generate_synthetic, SyntheticSpec};
use sttcl::train::{train_run, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let get = |name: &str, default: f64| -> f64 {
        args.iter()
            .position(|a| a == name)
            .and_then(|i| args.get(i + 1))
            .and_then(|v| v.parse().ok())
            .unwrap_or(default)
    };
    let noise = get("--noise", 1.5);
    let low = get("--low", 0.3);
    let epochs = get("--epochs", 30.0) as usize;
    let batch = get("--batch", 16.0) as usize;
    let tpc = get("--tpc", 6.0) as usize;
    let layers = get("--layers", 3.0) as usize;
    let dim = get("--dim", 4.0) as usize;
    let seeds = get("--seeds", 5.0) as u64;
    let alpha0 = get("--alpha0", 0.3);
    let beta = get("--beta", 1.0);
    let lr = get("--lr", 1e-3) as f32;

    let mid = get("--mid", 0.6);
    let trial_seconds = get("--trial-seconds", 6.0);
    let spec = SyntheticSpec {
        intensities: vec![low as f32, mid as f32, 0.9],
        trials_per_class: tpc,
        trial_seconds,
        noise_std: noise as f32,
        seed: 42,
        ..SyntheticSpec::default()
    };
    let mut segments = Vec::new();
    for rec in generate_synthetic(&spec).unwrap() {
        segments.extend(extract_features(&rec, &PreprocessConfig::default()).unwrap().segments);
    }
    let mc = ModelConfig {
        spatial_dim: dim,
        temporal_dim: dim,
        hidden_dim: 4 * dim,
        spatial_heads: 2,
        temporal_heads: 2,
        encoder_layers: layers,
        ..ModelConfig::new(8, 6, 5, 3)
    };
    let cc = CurriculumConfig { total_epochs: epochs, alpha0, beta, ..CurriculumConfig::default() };

    println!(
        "noise={noise} low={low} epochs={epochs} batch={batch} tpc={tpc} layers={layers} dim={dim} alpha0={alpha0} beta={beta} lr={lr} segments={}",
        segments.len()
    );
    let mut with = Vec::new();
    let mut without = Vec::new();
    for seed in 1..=seeds {
        for curriculum in [true, false] {
            let tc = TrainConfig {
                total_epochs: epochs,
                batch_size: batch,
                seed,
                learning_rate: lr,
                curriculum_enabled: curriculum,
                ..TrainConfig::default()
            };
            let t0 = std::time::Instant::now();
            let r = train_run(&segments, &mc, &tc, &cc).unwrap();
            println!(
                "  seed {seed} curriculum={} acc {:.4}±{:.4} f1 {:.4} ({:.1}s)",
                if curriculum { "on " } else { "off" },
                r.mean_accuracy,
                r.std_accuracy,
                r.mean_macro_f1,
                t0.elapsed().as_secs_f64()
            );
            if curriculum {
                with.push(r.mean_accuracy);
            } else {
                without.push(r.mean_accuracy);
            }
        }
    }
    let mw: f64 = with.iter().sum::<f64>() / with.len() as f64;
    let mo: f64 = without.iter().sum::<f64>() / without.len() as f64;
    println!("curriculum {mw:.4} baseline {mo:.4} gap {:+.4}", mw - mo);
}
