use co2cast::cart::fit_tree;
use co2cast::dataset::Dataset;
use co2cast::forest::{bootstrap_indices, fit_forest, ForestParams};

/// Reference splitmix64, written out independently of the crate.
fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn data() -> Dataset {
    Dataset::from_pairs((0..37).map(|i| {
        let x = 1960.0 + i as f64;
        (x, (i as f64 * 0.7).cos() * 3.0 + i as f64 * 0.1)
    }))
    .unwrap()
}

#[test]
fn bootstrap_samples_follow_the_seed_stream() {
    let d = data();
    let params = ForestParams {
        n_trees: 12,
        seed: 2024,
        ..ForestParams::default()
    };
    let forest = fit_forest(&d, params).unwrap();

    let mut master = 2024u64;
    for tree in &forest.trees {
        let tree_seed = splitmix(&mut master);
        let mut s = tree_seed;
        let idx: Vec<usize> = (0..d.len())
            .map(|_| (splitmix(&mut s) % d.len() as u64) as usize)
            .collect();
        assert_eq!(bootstrap_indices(tree_seed, d.len()), idx);
        let expected = fit_tree(&d.select(&idx), params.tree).unwrap();
        assert_eq!(tree, &expected);
    }
}

#[test]
fn thread_count_does_not_change_the_fit() {
    let d = data();
    let params = ForestParams::default();
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| fit_forest(&d, params).unwrap());
    let many = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| fit_forest(&d, params).unwrap());
    assert_eq!(one, many);
    assert_eq!(one.to_string(), many.to_string());
}

#[test]
fn seed_changes_the_ensemble() {
    let d = data();
    let a = fit_forest(
        &d,
        ForestParams {
            seed: 1,
            ..ForestParams::default()
        },
    )
    .unwrap();
    let b = fit_forest(
        &d,
        ForestParams {
            seed: 2,
            ..ForestParams::default()
        },
    )
    .unwrap();
    assert_ne!(a, b);
}
