use nested_eg::{LossSpec, NestedEgTree};
use proptest::prelude::*;

fn grow(dim: usize, stream: &[(Vec<f64>, f64)], effective_range: bool) -> NestedEgTree {
    let mut tree = NestedEgTree::new(dim, LossSpec::Absolute, effective_range).unwrap();
    for (x, y) in stream {
        let p = tree.predict(x).unwrap();
        tree.update(&p, *y).unwrap();
    }
    tree
}

fn stream(dim: usize) -> impl Strategy<Value = Vec<(Vec<f64>, f64)>> {
    prop::collection::vec((prop::collection::vec(0.0f64..=1.0, dim), 0.0f64..=1.0), 1..400)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // Every probe point falls in exactly one leaf and the leaf volumes add up to 1.
    #[test]
    fn leaves_partition_the_cube(
        (dim, data, probes) in (1usize..=3).prop_flat_map(|d| {
            (Just(d), stream(d), prop::collection::vec(prop::collection::vec(0.0f64..=1.0, d), 50))
        }),
        effective_range in any::<bool>(),
    ) {
        let tree = grow(dim, &data, effective_range);
        let leaves: Vec<_> = tree.nodes().iter().filter(|n| n.is_leaf()).collect();
        let volume: f64 = leaves.iter().map(|n| n.bin().intervals.iter().map(|iv| iv.width()).product::<f64>()).sum();
        prop_assert!((volume - 1.0).abs() < 1e-12);
        prop_assert_eq!(leaves.len() * 2 - 1, tree.node_count());

        let corners = [vec![0.0; dim], vec![1.0; dim]];
        for x in probes.iter().chain(&corners).chain(data.iter().map(|(x, _)| x)) {
            let hits = leaves.iter().filter(|n| n.bin().contains(x)).count();
            prop_assert_eq!(hits, 1);
            let p = tree.predict(x).unwrap();
            prop_assert!(tree.nodes()[p.leaf.node].bin().contains(x));
            prop_assert!((0.0..=1.0).contains(&p.value));
        }
    }

    // Children are the two halves of their parent along one coordinate.
    #[test]
    fn children_halve_the_parent(data in stream(2)) {
        let tree = grow(2, &data, false);
        for n in tree.nodes() {
            if let Some([l, r]) = n.children() {
                let (lb, rb) = (tree.nodes()[l].bin(), tree.nodes()[r].bin());
                let changed: Vec<usize> = (0..2).filter(|&j| lb.intervals[j] != n.bin().intervals[j]).collect();
                prop_assert_eq!(changed.len(), 1);
                let j = changed[0];
                prop_assert_eq!(lb.intervals[j].hi, rb.intervals[j].lo);
                prop_assert_eq!(lb.intervals[j].width(), 0.5 * n.bin().intervals[j].width());
                prop_assert_eq!(tree.nodes()[l].depth(), n.depth() + 1);
            }
        }
    }
}
