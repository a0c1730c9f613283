//! Full acceptance suite: one line per criterion, all must pass.

use finewalk::acceptance::run_all;

#[test]
fn acceptance_suite() {
    let outcomes = run_all();
    assert_eq!(outcomes.len(), 10);
    let mut failing = Vec::new();
    for o in &outcomes {
        println!(
            "criterion {:>2} {:<24} {}  {}",
            o.id,
            o.name,
            if o.passed { "PASS" } else { "FAIL" },
            o.details
        );
        if !o.passed {
            failing.push(format!("{} ({})", o.name, o.details));
        }
    }
    assert!(failing.is_empty(), "failing criteria:\n{}", failing.join("\n"));
}
