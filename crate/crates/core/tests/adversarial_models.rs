mod common;

use std::collections::BTreeSet;

use name_disambig::benchmark::run_synthetic;
use name_disambig::corpus::build_hin;
use name_disambig::discriminator::{select_pseudo_positives, DiscriminatorParams, LabeledPair, PaperInputs};
use name_disambig::generator::{
    build_spanning_tree, g_likelihood, pair_prob, sample_selection, update_g, GeneratorSample, PaperNetwork,
};
use name_disambig::pipeline::PipelineConfig;
use name_disambig::seed;
use name_disambig::synthetic::SyntheticSpec;
use name_disambig::trainer::{adversarial_train, value_function, SampleStore, TrainConfig};
use proptest::prelude::*;
use rand::Rng;

use common::{random_block, random_generator, random_hin};

fn random_inputs<R: Rng>(rng: &mut R, n: usize, k: usize) -> PaperInputs {
    let u = (0..n * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let v = (0..n * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
    PaperInputs::new(k, u, v).unwrap()
}

#[test]
fn small_discriminator_steps_never_lower_the_objective() {
    for trial in 0..100u64 {
        let mut rng = seed::rng(11, &[trial]);
        let n = rng.gen_range(2..8);
        let inputs = random_inputs(&mut rng, n, 4);
        let batch: Vec<LabeledPair> = (0..rng.gen_range(1..6))
            .map(|_| {
                let p = rng.gen_range(0..n);
                LabeledPair::new(p, (p + rng.gen_range(1..n)) % n, rng.gen())
            })
            .collect();
        let mut disc = DiscriminatorParams::init(4, 8, 4, trial).unwrap();
        let before = disc.objective(&batch, &inputs).unwrap();
        disc.update(&batch, &inputs, 1e-3).unwrap();
        let after = disc.objective(&batch, &inputs).unwrap();
        assert!(after >= before, "trial {trial}: {before} -> {after}");
    }
}

#[test]
fn pseudo_positive_selection_is_deterministic() {
    let mut rng = seed::rng(12, &[]);
    let inputs = random_inputs(&mut rng, 9, 4);
    let disc = DiscriminatorParams::init(4, 8, 4, 3).unwrap();
    let a = select_pseudo_positives(&disc, &inputs, 2).unwrap();
    assert_eq!(a, select_pseudo_positives(&disc, &inputs, 2).unwrap());
    assert_eq!(a.len(), 18);
    assert!(a.iter().all(|p| p.label && p.p != p.anchor));
}

proptest! {
    #[test]
    fn scores_are_symmetric(seed_ in 0u64..500) {
        let mut rng = seed::rng(13, &[seed_]);
        let inputs = random_inputs(&mut rng, 5, 3);
        let disc = DiscriminatorParams::init(3, 6, 3, seed_).unwrap();
        for p in 0..5 {
            for q in 0..5 {
                prop_assert_eq!(disc.pair_score(&inputs, p, q).unwrap(), disc.pair_score(&inputs, q, p).unwrap());
            }
        }
    }

    #[test]
    fn pair_probabilities_sum_to_one(seed_ in 0u64..1000) {
        let mut rng = seed::rng(14, &[seed_]);
        let hin = random_hin(&mut rng, 8, 4);
        let gen = random_generator(&mut rng, &hin, 4, 1.5);
        for anchor in 0..hin.num_papers() {
            let nbrs = hin.first_order_neighbors(anchor).unwrap();
            if !nbrs.is_empty() {
                let total: f64 = nbrs.iter().map(|&p| pair_prob(&gen, &hin, p, anchor).unwrap()).sum();
                prop_assert!((total - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn trees_span_the_anchor_component(seed_ in 0u64..300) {
        let mut rng = seed::rng(15, &[seed_]);
        let hin = random_hin(&mut rng, 9, 6);
        let gen = random_generator(&mut rng, &hin, 4, 1.0);
        let net = PaperNetwork::build(&gen, &hin).unwrap();
        let tree = build_spanning_tree(&net, 0).unwrap();
        // component of paper 0 by search over first-order links
        let mut comp = BTreeSet::from([0]);
        let mut frontier = vec![0];
        while let Some(p) = frontier.pop() {
            for q in hin.first_order_neighbors(p).unwrap() {
                if comp.insert(q) {
                    frontier.push(q);
                }
            }
        }
        let nodes: BTreeSet<_> = tree.nodes().iter().copied().collect();
        prop_assert_eq!(nodes, comp);
        prop_assert_eq!(tree.edges().len(), tree.len() - 1);
        for (p, c) in tree.edges() {
            prop_assert!(net.log_weight(p, c).is_some());
        }
    }

    #[test]
    fn selections_are_root_paths(seed_ in 0u64..300) {
        let mut rng = seed::rng(16, &[seed_]);
        let hin = random_hin(&mut rng, 8, 3);
        let gen = random_generator(&mut rng, &hin, 4, 1.0);
        let tree = build_spanning_tree(&PaperNetwork::build(&gen, &hin).unwrap(), 0).unwrap();
        let picked = sample_selection(&gen, &hin, &tree, &mut rng).unwrap();
        let mut prev = 0;
        for &p in &picked {
            prop_assert_eq!(tree.parent(p), Some(prev));
            prev = p;
        }
    }
}

#[test]
fn selection_frequencies_match_likelihoods() {
    let mut rng = seed::rng(17, &[]);
    let (hin, gen, tree) = loop {
        let hin = random_hin(&mut rng, 6, 3);
        let gen = random_generator(&mut rng, &hin, 4, 0.8);
        let tree = build_spanning_tree(&PaperNetwork::build(&gen, &hin).unwrap(), 0).unwrap();
        if tree.len() >= 4 {
            break (hin, gen, tree);
        }
    };
    let walks = 20_000;
    let mut counts = vec![0usize; hin.num_papers()];
    for _ in 0..walks {
        for p in sample_selection(&gen, &hin, &tree, &mut rng).unwrap() {
            counts[p] += 1;
        }
    }
    for &p in &tree.nodes()[1..] {
        let freq = counts[p] as f64 / walks as f64;
        let expected = g_likelihood(&gen, &hin, &tree, p).unwrap();
        assert!((freq - expected).abs() < 0.02, "paper {p}: {freq} vs {expected}");
    }
}

#[test]
fn rewarded_samples_become_more_likely() {
    let mut rng = seed::rng(18, &[]);
    let (hin, mut gen, trees, target) = loop {
        let hin = random_hin(&mut rng, 7, 3);
        let gen = random_generator(&mut rng, &hin, 4, 0.5);
        let net = PaperNetwork::build(&gen, &hin).unwrap();
        let trees: Vec<_> = (0..hin.num_papers()).map(|a| build_spanning_tree(&net, a).unwrap()).collect();
        let target = trees[0].nodes().last().copied().unwrap();
        if trees[0].len() >= 3 && g_likelihood(&gen, &hin, &trees[0], target).unwrap() < 1.0 {
            break (hin, gen, trees, target);
        }
    };
    let before = g_likelihood(&gen, &hin, &trees[0], target).unwrap();
    let sample = GeneratorSample {
        p: target,
        anchor: 0,
        reward: (1.0f64 - 0.9).ln(),
    };
    update_g(&mut gen, &hin, &trees, &[sample], 1e-3).unwrap();
    assert!(g_likelihood(&gen, &hin, &trees[0], target).unwrap() > before);
}

#[test]
fn discriminator_step_raises_value_on_a_fixed_store() {
    let mut rng = seed::rng(19, &[]);
    let inputs = random_inputs(&mut rng, 6, 4);
    let mut store = SampleStore::default();
    store.pseudo.insert(LabeledPair::new(0, 1, true));
    store.pseudo.insert(LabeledPair::new(2, 3, true));
    store.generated.insert(LabeledPair::new(4, 5, false));
    store.generated.insert(LabeledPair::new(0, 5, false));
    let mut disc = DiscriminatorParams::init(4, 8, 4, 1).unwrap();
    let before = value_function(&disc, &store, &inputs).unwrap();
    let batch: Vec<_> = store.pseudo.iter().chain(&store.generated).copied().collect();
    disc.update(&batch, &inputs, 1e-3).unwrap();
    assert!(value_function(&disc, &store, &inputs).unwrap() > before);
}

#[test]
fn zero_iterations_return_initial_params() {
    let mut rng = seed::rng(20, &[]);
    let block = random_block(&mut rng, 6, 3);
    let hin = build_hin(&block);
    let inputs = random_inputs(&mut rng, 6, 4);
    let disc = DiscriminatorParams::init(4, 8, 4, 1).unwrap();
    let gen = random_generator(&mut rng, &hin, 4, 0.5);
    let config = TrainConfig {
        max_outer_iters: 0,
        ..Default::default()
    };
    let out = adversarial_train(&hin, &inputs, disc.clone(), gen.clone(), &config, false).unwrap();
    assert_eq!(out.disc, disc);
    assert_eq!(out.gen, gen);
    assert!(out.log.is_empty());
}

#[test]
fn training_keeps_the_store_clean_and_stays_bounded() {
    let mut rng = seed::rng(21, &[]);
    let block = random_block(&mut rng, 12, 4);
    let hin = build_hin(&block);
    let inputs = random_inputs(&mut rng, 12, 4);
    let config = TrainConfig {
        max_outer_iters: 6,
        ..Default::default()
    };
    let run = |parallel| {
        adversarial_train(
            &hin,
            &inputs,
            DiscriminatorParams::init(4, 8, 4, 2).unwrap(),
            random_generator(&mut seed::rng(22, &[]), &hin, 4, 0.5),
            &config,
            parallel,
        )
        .unwrap()
    };
    let out = run(false);
    assert!(out.store.is_clean());
    assert!(!out.log.is_empty() && out.log.len() <= 6);
    assert!(out.log.iter().all(|l| l.value.is_finite()));
    let again = run(true);
    assert_eq!(out.disc, again.disc);
    assert_eq!(out.gen, again.gen);
}

#[test]
fn two_author_block_clusters_at_least_as_well_as_raw_views() {
    let spec = SyntheticSpec {
        num_authors: 2,
        ..Default::default()
    };
    let mut config = PipelineConfig::default();
    config.content.dim = 16;
    config.walk.dim = 16;
    let r = run_synthetic(&spec, &config).unwrap();
    assert!(r.adversarial.f1 >= r.initial.f1, "{} < {}", r.adversarial.f1, r.initial.f1);
    assert!(r.adversarial.f1 >= 0.9);
}
