use hgff_nn::gradcheck::{check_gradients, random_small_graph, small_config};
use hgff_nn::{NetConfig, QNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn check(config: NetConfig, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = QNetwork::new(config, &mut rng).unwrap();
    let g = random_small_graph(&mut rng).unwrap();
    let targets: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (mut entries, mut skipped) = (0, 0);
    for t in check_gradients(&net, &g, &targets).unwrap() {
        assert!(
            t.max_rel_err < 1e-4,
            "{config:?} seed {seed}: {} rel err {:e}",
            t.name,
            t.max_rel_err
        );
        entries += t.entries;
        skipped += t.skipped;
    }
    assert!(
        skipped * 100 < entries,
        "{skipped} of {entries} entries sat on a ReLU kink"
    );
}

#[test]
fn every_tensor_passes_finite_differences() {
    for (te, ff) in [(true, true), (false, true), (true, false), (false, false)] {
        for seed in 0..3 {
            check(small_config(te, ff), seed);
        }
    }
}

#[test]
fn full_width_network_passes() {
    check(NetConfig::default(), 42);
}

#[test]
fn unused_site_outputs_do_not_reach_the_head() {
    // Loss on site 0 only: the output layer gradient is site 0's hidden
    // activation times its upstream gradient, nothing from site 1.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let net = QNetwork::new(small_config(true, true), &mut rng).unwrap();
    let g = random_small_graph(&mut rng).unwrap();
    let (_, cache) = net.forward(&g).unwrap();
    let mut grads = net.params.zeros_like();
    net.backward(&g, &cache, &[0.7, 0.0], &mut grads).unwrap();
    let hidden0 = (cache.head_input().row(0).dot(&net.params.head_w1) + net.params.head_b1.row(0))
        .mapv(|v| v.max(0.0));
    for (k, &h) in hidden0.iter().enumerate() {
        assert!((grads.head_w2[[k, 0]] - 0.7 * h).abs() < 1e-15);
    }
    assert_eq!(grads.head_b2[[0, 0]], 0.7);
}
