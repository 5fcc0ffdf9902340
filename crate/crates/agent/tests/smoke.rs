//! 500-episode training runs on map type 1 with 0.04 J sensors (episodes of
//! roughly 5 to 20 rounds). Exploration reaches its floor after 300 episodes.

use std::sync::Arc;

use hgff_agent::{TrainConfig, Trainer};
use hgff_core::env::generate_map;
use hgff_core::WsnInstance;

fn instances() -> Vec<Arc<WsnInstance>> {
    (0..5)
        .map(|s| {
            let mut inst = generate_map(1, s).unwrap();
            inst.energy.e_init = 0.04;
            Arc::new(inst)
        })
        .collect()
}

fn mean(xs: &[u64]) -> f64 {
    xs.iter().sum::<u64>() as f64 / xs.len() as f64
}

#[test]
fn episodes_get_longer_over_500_episodes() {
    let insts = instances();
    let mut improved = 0;
    let mut report = Vec::new();
    for seed in 0..5 {
        let config = TrainConfig {
            episodes: 500,
            batch_size: 16,
            lr: 5e-4,
            eps_decay: 0.98 / 300.0,
            target_sync: 500,
            train_every: 1,
            seed,
            ..TrainConfig::default()
        };
        let mut trainer = Trainer::new(config, insts.clone()).unwrap();
        trainer.train(|_| {}).unwrap();
        let lengths: Vec<u64> = trainer.log().iter().map(|r| r.lifetime_rounds).collect();
        let (first, last) = (mean(&lengths[..50]), mean(&lengths[450..]));
        if last > first {
            improved += 1;
        }
        report.push(format!("seed {seed}: {first:.2} -> {last:.2}"));
    }
    assert!(improved >= 3, "{}", report.join("; "));
    println!("{}", report.join("; "));
}
