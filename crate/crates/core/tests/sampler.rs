use peergroup_core::dpmm::{chain_agreement, posterior_dissimilarity, run_chain, run_chains, AgreementOptions, DpmmConfig};
use peergroup_core::preprocess::standardize;
use peergroup_core::synth::separated_clusters;

fn short() -> DpmmConfig {
    DpmmConfig {
        iterations: 1_200,
        burn_in: 200,
        chains: 2,
        ..DpmmConfig::default()
    }
}

#[test]
fn separated_groups_form_blocks() {
    let (raw, truth) = separated_clusters(&[20, 20], 2, 10.0, 1.0, 31).unwrap();
    let t = standardize(&raw).unwrap();
    let chains = run_chains(&t, &short()).unwrap();
    let d = posterior_dissimilarity(&chains).unwrap();
    let (mut within, mut between) = (Vec::new(), Vec::new());
    for i in 0..40 {
        for j in (i + 1)..40 {
            if truth.same_cluster(i, j) { within.push(d.get(i, j)) } else { between.push(d.get(i, j)) }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&within) <= 0.1, "within {}", mean(&within));
    assert!(mean(&between) >= 0.9, "between {}", mean(&between));
    let diag = chain_agreement(&chains, &AgreementOptions::default()).unwrap();
    assert!(diag.min_correlation() >= 0.95);
}

#[test]
fn fixed_seed_reproduces_the_chain() {
    let (raw, _) = separated_clusters(&[10, 10], 3, 4.0, 1.0, 2).unwrap();
    let t = standardize(&raw).unwrap();
    let config = DpmmConfig { iterations: 300, burn_in: 50, ..DpmmConfig::default() };
    let a = run_chain(&t, &config, 42).unwrap();
    assert_eq!(a, run_chain(&t, &config, 42).unwrap());
    assert_eq!(a.samples_used as usize, a.alpha_trace.len());
    assert_ne!(a.alpha_trace, run_chain(&t, &config, 43).unwrap().alpha_trace);
    for i in 0..a.n() {
        assert_eq!(a.coassignment(i, i), 1.0);
        for j in 0..a.n() {
            assert_eq!(a.coassignment(i, j), a.coassignment(j, i));
        }
    }
}

#[test]
fn unstandardized_input_is_rejected() {
    let (raw, _) = separated_clusters(&[5, 5], 2, 4.0, 1.0, 2).unwrap();
    assert!(run_chain(&raw, &short(), 1).is_err());
}
