mod common;

use tbm_forecast::neural::{
    compute_gradients, Activation, CellKind, FnnConfig, FnnParams, Network, Parameters, RecurrentConfig,
    RecurrentParams,
};
use tbm_forecast::optim::{sgd_step, train, Budget, OptimizerState, TrainConfig};

#[test]
fn analytic_gradients_match_finite_differences() {
    for seed in 0..3 {
        let mut r = common::rng(100 + seed);
        let samples = common::random_samples(3, 3, 3, 2, &mut r);
        for net in common::small_networks(3, 4, 3, 2, seed) {
            let err = common::max_gradient_error(&net, &samples, 1e-5);
            assert!(err < 1e-4, "{} seed {seed}: {err:e}", net.kind_name());
        }
    }
}

#[test]
fn sigmoid_output_without_bias_matches_finite_differences() {
    let mut r = common::rng(7);
    let samples = common::random_samples(2, 4, 2, 3, &mut r);
    for kind in [CellKind::Rnn, CellKind::Lstm, CellKind::Gru] {
        let mut cfg = RecurrentConfig::standard(kind, 2, 3, false);
        cfg.hidden = 3;
        cfg.head = vec![3];
        cfg.head_activation = Activation::Sigmoid;
        cfg.output_activation = Activation::Sigmoid;
        let net = Network::Recurrent(RecurrentParams::init(cfg, &mut r));
        assert!(net.named_tensors().iter().all(|(name, _)| !name.contains("bias")));
        let err = common::max_gradient_error(&net, &samples, 1e-5);
        assert!(err < 1e-4, "{kind}: {err:e}");
    }
    let mut cfg = FnnConfig::standard(8, 3, false);
    cfg.hidden = vec![5];
    let net = Network::Fnn(FnnParams::init(cfg, &mut r));
    assert!(common::max_gradient_error(&net, &samples, 1e-5) < 1e-4);
}

#[test]
fn gradient_step_decreases_loss() {
    let mut r = common::rng(3);
    let samples = common::random_samples(8, 3, 3, 1, &mut r);
    let batch: Vec<_> = samples.iter().collect();
    for mut net in common::small_networks(3, 4, 3, 1, 9) {
        let (grads, before) = compute_gradients(&net, &batch).unwrap();
        sgd_step(&mut net, &grads, &mut OptimizerState::sgd(1e-3)).unwrap();
        let after = net.loss(&batch).unwrap();
        assert!(after < before, "{}: {before} -> {after}", net.kind_name());
    }
}

#[test]
fn training_is_reproducible_for_a_seed() {
    let mut r = common::rng(12);
    let samples = common::random_samples(20, 3, 3, 1, &mut r);
    let net = common::small_networks(3, 4, 3, 1, 2).remove(3);
    let cfg = TrainConfig {
        budget: Budget::Updates(500),
        seed: 4,
        eval_every: 100,
        clip: None,
    };
    let a = train(net.clone(), &samples, &cfg, OptimizerState::rmsprop(1e-3)).unwrap();
    let b = train(net, &samples, &cfg, OptimizerState::rmsprop(1e-3)).unwrap();
    assert_eq!(a.network, b.network);
    assert_eq!(a.history.len(), 6);
    assert!(a.history.last().unwrap().train_mse < a.history[0].train_mse);
}
