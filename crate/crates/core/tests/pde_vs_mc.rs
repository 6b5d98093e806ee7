use hardedge::pde::{solve_f0, solve_fk, PdeGrid};
use hardedge::riccati::{estimate_f1, CountMode};

#[test]
fn f1_matches_riccati_at_beta2() {
    let chain = solve_fk(1, 2.0, 1.0, &PdeGrid::default()).unwrap();
    let pde = chain[1].probe(0.0, 1.0).unwrap();
    let mc = estimate_f1(2.0, 1.0, 1, 0.0, 1.0, 100_000, CountMode::Zeros, 101).unwrap();
    assert!((pde - mc.estimate).abs() <= 3.0 * mc.se + 5e-3, "pde {pde} mc {mc:?}");
}

#[test]
fn f0_matches_riccati_at_beta4() {
    let s = solve_f0(4.0, 1.0, &PdeGrid::default()).unwrap();
    for (i, mu) in [0.0, 1.0].into_iter().enumerate() {
        let pde = s.probe(mu, 1.0).unwrap();
        let mc = estimate_f1(4.0, 1.0, 0, mu, 1.0, 100_000, CountMode::Zeros, 200 + i as u64).unwrap();
        assert!((pde - mc.estimate).abs() <= 3.0 * mc.se + 5e-3, "mu {mu}: pde {pde} mc {mc:?}");
    }
}

#[test]
fn f0_matches_riccati_for_negative_a_and_small_beta() {
    let s = solve_f0(1.0, -0.5, &PdeGrid::default()).unwrap();
    let pde = s.probe(0.5, 2.0).unwrap();
    let mc = estimate_f1(1.0, -0.5, 0, 0.5, 2.0, 50_000, CountMode::Zeros, 303).unwrap();
    assert!((pde - mc.estimate).abs() <= 3.0 * mc.se + 5e-3, "pde {pde} mc {mc:?}");
}
