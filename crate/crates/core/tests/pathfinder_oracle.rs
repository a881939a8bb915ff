//! Greedy path search against exhaustive enumeration on small radial grids.

mod oracle;

use oracle::{admissible, check, instance, simple_paths};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::TestRunner;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn greedy_search_equals_enumeration(inst in instance()) {
        let outcome = check(&inst);
        prop_assert!(outcome.is_ok(), "{:?}", outcome);
    }
}

#[test]
fn patterned_instances_are_common() {
    // Guard against a strategy that only ever produces rejections.
    let mut runner = TestRunner::deterministic();
    let strategy = instance();
    let mut found = 0;
    for _ in 0..200 {
        let inst = strategy.new_tree(&mut runner).unwrap().current();
        let paths = simple_paths(inst.parents.len() + 1, &inst.edges(), inst.e1, inst.e2);
        if paths.iter().any(|p| admissible(&inst, p).is_some()) {
            found += 1;
        }
    }
    assert!(found > 100, "only {found} of 200 instances admit a path");
}
