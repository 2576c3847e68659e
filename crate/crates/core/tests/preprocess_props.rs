mod common;

use common::{ids, rng};
use nalgebra::DMatrix;
use peergroup_core::preprocess::{
    pit, quintile_bin, standardize, transform_variable, vif_prune, FeatureTable, VariableKind, VifStep,
};
use peergroup_core::stats::pearson;
use peergroup_core::synth::variable_specs;
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};

fn table(values: DMatrix<f64>) -> FeatureTable {
    FeatureTable::new(ids(values.nrows()), variable_specs(values.ncols()), values).unwrap()
}

fn distinct(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::btree_set(-1_000_000i64..1_000_000, n).prop_map(|s| s.into_iter().map(|v| v as f64 / 7.0).collect())
}

#[test]
fn fourteen_variables_three_planted() {
    let n = 200;
    let mut r = rng(2024);
    let mut x = DMatrix::from_fn(n, 14, |_, _| StandardNormal.sample(&mut r));
    // x12..x14 are sums of disjoint triples plus a little noise
    for (planted, sources) in [(11, [0, 1, 2]), (12, [3, 4, 5]), (13, [6, 7, 8])] {
        for i in 0..n {
            let noise: f64 = StandardNormal.sample(&mut r);
            x[(i, planted)] = sources.iter().map(|&j| x[(i, j)]).sum::<f64>() + 0.01 * noise;
        }
    }
    let t = standardize(&table(x)).unwrap();
    let (kept, trace) = vif_prune(&t, 10.0).unwrap();
    assert_eq!(kept.d(), 11);
    let removed: Vec<&str> = trace
        .iter()
        .map(|s| match s {
            VifStep::Removed { variable, .. } => variable.as_str(),
            other => panic!("unexpected {other}"),
        })
        .collect();
    let mut sorted = removed.clone();
    sorted.sort();
    assert_eq!(sorted, ["x12", "x13", "x14"]);
}

#[test]
fn duplicate_column_keeps_the_earlier_copy() {
    let mut r = rng(5);
    let mut x = DMatrix::from_fn(40, 3, |_, _| StandardNormal.sample(&mut r));
    let first = x.column(0).clone_owned();
    x.set_column(1, &first);
    let (kept, trace) = vif_prune(&standardize(&table(x)).unwrap(), 10.0).unwrap();
    assert_eq!(kept.names(), ["x1", "x3"]);
    assert!(matches!(&trace[0], VifStep::Removed { variable, vif } if variable == "x2" && vif.is_infinite()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn logit_is_strictly_increasing(a in 0.0001f64..0.9999, b in 0.0001f64..0.9999) {
        prop_assume!(a < b);
        let t = transform_variable(&[a, b], VariableKind::Proportion, "p").unwrap();
        prop_assert!(t[0] < t[1]);
    }

    #[test]
    fn standardize_inverts(n in 2usize..40, d in 1usize..5, seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = DMatrix::from_fn(n, d, |_, j| { let z: f64 = StandardNormal.sample(&mut r); 10.0 * j as f64 + 3.0 * z });
        let t = standardize(&table(x.clone())).unwrap();
        for j in 0..d {
            let col = t.column(j);
            let m = col.iter().sum::<f64>() / n as f64;
            let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
            prop_assert!(m.abs() < 1e-9 && (sd - 1.0).abs() < 1e-9);
        }
        let back = t.destandardized().unwrap();
        prop_assert!((back - x).abs().max() < 1e-9);
    }

    #[test]
    fn pruned_table_has_no_perfectly_correlated_pair(n in 10usize..40, seed in any::<u64>(), dup in 0usize..4) {
        let mut r = rng(seed);
        let mut x = DMatrix::from_fn(n, 5, |_, _| StandardNormal.sample(&mut r));
        let src = x.column(dup).clone_owned() * 2.0;
        x.set_column(4, &src);
        let (kept, _) = vif_prune(&standardize(&table(x)).unwrap(), 10.0).unwrap();
        for a in 0..kept.d() {
            for b in (a + 1)..kept.d() {
                let c = pearson(&kept.column(a), &kept.column(b)).unwrap();
                prop_assert!(c.abs() < 1.0 - 1e-9);
            }
        }
    }

    #[test]
    fn pit_is_uniform_on_tie_free_input(values in (1usize..300).prop_flat_map(distinct)) {
        let n = values.len();
        let mut u = pit(&values);
        prop_assert!(u.iter().all(|&v| v > 0.0 && v < 1.0));
        u.sort_by(f64::total_cmp);
        let ks = u
            .iter()
            .enumerate()
            .map(|(i, &v)| (v - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - v).abs()))
            .fold(0.0, f64::max);
        prop_assert!(ks < 1.36 / (n as f64).sqrt());
    }

    #[test]
    fn quintile_counts_differ_by_at_most_one(values in (1usize..300).prop_flat_map(distinct)) {
        let q = quintile_bin(&pit(&values));
        let mut counts = [0usize; 5];
        for &b in &q.bins {
            counts[b as usize - 1] += 1;
        }
        prop_assert_eq!(counts.iter().sum::<usize>(), values.len());
        prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        prop_assert!(!q.degenerate);
    }
}
