use mldkit_conic::random::planted_program;
use mldkit_conic::{solve, SolverSettings, Status};
use rand::rngs::StdRng;
use rand::SeedableRng;

#[test]
fn recovers_planted_optima() {
    let settings = SolverSettings::default();
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = StdRng::seed_from_u64(seed);
        let n = [5, 20, 60, 150][seed as usize % 4];
        let inst = planted_program(&mut rng, n);
        let r = solve(&inst.program, &settings).unwrap();
        assert_eq!(r.status, Status::Optimal, "seed {seed}: {:?} after {}", r.residuals, r.iterations);
        let rel = (r.objective - inst.optimum).abs() / inst.optimum.abs().max(1.0);
        worst = worst.max(rel);
        assert!(rel <= 1e-5, "seed {seed}: objective {} vs {}", r.objective, inst.optimum);
    }
    eprintln!("worst relative error {worst:.2e}");
}

#[test]
fn solve_is_deterministic() {
    let mut rng = StdRng::seed_from_u64(7);
    let inst = planted_program(&mut rng, 80);
    let a = solve(&inst.program, &SolverSettings::default()).unwrap();
    let b = solve(&inst.program, &SolverSettings::default()).unwrap();
    assert_eq!(a.iterations, b.iterations);
    assert_eq!(a.objective.to_bits(), b.objective.to_bits());
}

#[test]
fn optimal_status_honours_tolerances() {
    for seed in 100..110u64 {
        let mut rng = StdRng::seed_from_u64(seed);
        let inst = planted_program(&mut rng, 40);
        let set = SolverSettings::with_tolerance(1e-7);
        let r = solve(&inst.program, &set).unwrap();
        if r.status == Status::Optimal {
            assert!(r.residuals.primal <= 1e-7 && r.residuals.dual <= 1e-7 && r.residuals.gap <= 1e-7);
        }
        assert_eq!(r.status, Status::Optimal);
    }
}
