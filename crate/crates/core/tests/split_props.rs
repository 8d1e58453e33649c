use std::collections::BTreeSet;

use lexext_core::ontology::{
    stratified_split, ClassId, ClassInventory, LabeledExample, SplitRatios,
};
use proptest::prelude::*;

fn inventory(k: usize) -> ClassInventory {
    ClassInventory::new(
        (0..k)
            .map(|i| ClassId::new(format!("c{i}"), format!("C{i}")).unwrap())
            .collect(),
    )
    .unwrap()
}

fn examples(counts: &[usize]) -> Vec<LabeledExample> {
    let mut out = Vec::new();
    for (c, &n) in counts.iter().enumerate() {
        for j in 0..n {
            out.push(LabeledExample {
                sentence: vec!["w".into(), format!("v{c}_{j}")],
                target_position: 1,
                target_lemma: format!("v{c}"),
                gold_class: format!("c{c}"),
            });
        }
    }
    out
}

fn ratios() -> impl Strategy<Value = SplitRatios> {
    (1u32..20, 0u32..6, 0u32..6).prop_map(|(a, b, c)| {
        let t = (a + b + c) as f64;
        SplitRatios {
            train: a as f64 / t,
            dev: b as f64 / t,
            test: c as f64 / t,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn split_is_a_stratified_partition(counts in prop::collection::vec(0usize..40, 1..8), r in ratios(), seed in any::<u64>()) {
        prop_assume!(counts.iter().sum::<usize>() > 0);
        let ex = examples(&counts);
        let inv = inventory(counts.len());
        let s = stratified_split(&ex, &inv, r, seed).unwrap();

        let mut all: Vec<usize> = s.parts().iter().flat_map(|p| p.iter().copied()).collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..ex.len()).collect::<Vec<_>>());

        let shares = [r.train, r.dev, r.test];
        for (c, &n) in counts.iter().enumerate() {
            let class = format!("c{c}");
            for (part, share) in s.parts().iter().zip(shares) {
                let got = part.iter().filter(|&&i| ex[i].gold_class == class).count() as f64;
                prop_assert!((got - share * n as f64).abs() <= 1.0 + 1e-9, "class {c}: {got} vs {}", share * n as f64);
            }
            if n > 0 {
                prop_assert!(s.train.iter().any(|&i| ex[i].gold_class == class));
            }
        }
        for (part, share) in s.parts().iter().zip(shares) {
            prop_assert!((part.len() as f64 - share * ex.len() as f64).abs() <= 1.0 + 1e-9);
        }
        prop_assert_eq!(&s, &stratified_split(&ex, &inv, r, seed).unwrap());
    }
}

#[test]
fn different_seeds_differ() {
    let ex = examples(&[50, 50, 50]);
    let inv = inventory(3);
    let a = stratified_split(&ex, &inv, SplitRatios::default(), 1).unwrap();
    let b = stratified_split(&ex, &inv, SplitRatios::default(), 2).unwrap();
    assert_ne!(a.dev, b.dev);
    let sizes: Vec<usize> = a.parts().iter().map(|p| p.len()).collect();
    assert_eq!(sizes, vec![120, 15, 15]);
}

#[test]
fn large_split_sizes() {
    // 12045 examples over 60 classes of mixed size.
    let counts: Vec<usize> = (0..60).map(|i| 100 + (i * 37) % 205).collect();
    let total: usize = counts.iter().sum();
    let ex = examples(&counts);
    let s = stratified_split(&ex, &inventory(60), SplitRatios::default(), 42).unwrap();
    assert_eq!(s.train.len() + s.dev.len() + s.test.len(), total);
    let lemmas: BTreeSet<&str> = s
        .train
        .iter()
        .map(|&i| ex[i].target_lemma.as_str())
        .collect();
    assert_eq!(lemmas.len(), 60);
}
