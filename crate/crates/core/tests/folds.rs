use std::collections::BTreeSet;

use proptest::prelude::*;

use hbcsense_core::eval::{make_folds, FoldKeys, FoldKind, FoldScheme};

fn keys(spec: &[(u8, u8)]) -> Vec<FoldKeys> {
    spec.iter()
        .map(|&(u, s)| FoldKeys {
            user_id: format!("u{u}"),
            session_id: format!("u{u}-s{s}"),
            group_id: Some(format!("g{}", u % 3)),
        })
        .collect()
}

proptest! {
    #[test]
    fn grouped_folds_partition_and_separate(spec in prop::collection::vec((0u8..5, 0u8..3), 2..80), kind in 0usize..3) {
        let kind = [FoldKind::LeaveOneUserOut, FoldKind::LeaveOneSessionOut, FoldKind::LeaveOneGroupOut][kind];
        let k = keys(&spec);
        let folds = make_folds(&k, &FoldScheme::new(kind), 0).unwrap();
        let group = |i: usize| match kind {
            FoldKind::LeaveOneUserOut => k[i].user_id.clone(),
            FoldKind::LeaveOneSessionOut => k[i].session_id.clone(),
            _ => k[i].group_id.clone().unwrap(),
        };
        let distinct: BTreeSet<String> = (0..k.len()).map(group).collect();
        prop_assert_eq!(folds.len(), distinct.len());
        let mut seen = vec![0; k.len()];
        for f in &folds {
            let test: BTreeSet<String> = f.test.iter().map(|&i| group(i)).collect();
            prop_assert_eq!(test.len(), 1);
            prop_assert!(f.train.iter().all(|&i| !test.contains(&group(i))));
            prop_assert_eq!(f.train.len() + f.test.len(), k.len());
            for &i in &f.test {
                seen[i] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn random_split_tests_each_portion_once(n in 10usize..300, seed in any::<u64>()) {
        let k = keys(&vec![(0, 0); n]);
        let scheme = FoldScheme::new(FoldKind::RandomSplit);
        let folds = make_folds(&k, &scheme, seed).unwrap();
        prop_assert_eq!(folds.len(), 3);
        let mut tested = BTreeSet::new();
        for f in &folds {
            prop_assert_eq!(f.train.len() + f.test.len(), n);
            for &i in &f.test {
                prop_assert!(tested.insert(i));
            }
        }
        let held: Vec<usize> = (0..n).filter(|i| !tested.contains(i)).collect();
        prop_assert!(folds.iter().all(|f| held.iter().all(|i| f.train.contains(i))));
        prop_assert_eq!(folds, make_folds(&k, &scheme, seed).unwrap());
    }
}

#[test]
fn missing_group_is_a_schema_error() {
    let mut k = keys(&[(0, 0), (1, 0)]);
    k[1].group_id = None;
    assert!(make_folds(&k, &FoldScheme::new(FoldKind::LeaveOneGroupOut), 0).is_err());
}
