//! scratch probe for scan presets (deleted before release)
use reservoir_gates::gates::{embed_target, gate_x, EmbedMode};
use reservoir_gates::random::{haar_unitary, streams, RandomSource};
use reservoir_gates::scan::{aggregate, preset, run_scan};
use reservoir_gates::trainer::{generate_dataset, train, TrainConfig};

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>();
    let vx = xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
    let vy = ys.iter().map(|y| (y - my) * (y - my)).sum::<f64>();
    cov / (vx.sqrt() * vy.sqrt())
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "3c".into());
    match which.as_str() {
        "3c" => {
            for set in 0..3u64 {
                let seeds: Vec<u64> = (1 + set * 5..=5 + set * 5).collect();
                let mut config = preset("fig3c", None).unwrap();
                config.seeds = seeds.clone();
                let t0 = std::time::Instant::now();
                let agg = aggregate(&run_scan(&config).unwrap()).unwrap();
                let ms: Vec<f64> = agg.iter().map(|a| a.m as f64).collect();
                let means: Vec<f64> = agg.iter().map(|a| a.mean).collect();
                let inversions = means.windows(2).filter(|w| w[1] < w[0]).count();
                let r = pearson(&ms, &means);
                println!(
                    "seeds {seeds:?}: means={:?} r={r:.4} inversions={inversions} wall={:.1}s",
                    means.iter().map(|v| format!("{v:.1}")).collect::<Vec<_>>(),
                    t0.elapsed().as_secs_f64()
                );
            }
        }
        "c4" => {
            // reference configuration over 20 seeds, lr grid
            for &lr in &[1.0, 2.0, 4.0] {
                let mut epochs = vec![];
                let mut fails = 0;
                for seed in 1..=20u64 {
                    let gate = gate_x(3).unwrap();
                    let src = RandomSource::new(seed);
                    let u = haar_unitary(5, src.with_stream(streams::RESERVOIR)).unwrap();
                    let emb = embed_target(&gate, 5, EmbedMode::Unitary, src.with_stream(streams::COMPLEMENT)).unwrap();
                    let ds = generate_dataset(emb.target(), 5, 100, 50, src.with_stream(streams::DATASET)).unwrap();
                    let config = TrainConfig {
                        learning_rate: lr,
                        max_epochs: 50,
                        valid_threshold: 1e-3,
                        seed,
                        ..Default::default()
                    };
                    let run = train(&u, &ds, &config).unwrap();
                    if run.converged {
                        epochs.push(run.epochs_used);
                    } else {
                        fails += 1;
                    }
                }
                println!(
                    "lr={lr}: converged {}/20 within 50 epochs, epochs used: {:?}{}",
                    20 - fails,
                    epochs,
                    if fails > 0 { format!(" FAILURES={fails}") } else { String::new() }
                );
            }
        }
        _ => eprintln!("3c|c4"),
    }
}
