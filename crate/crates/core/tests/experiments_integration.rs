use mpf_core::commutator::{CommutatorTable, DEFAULT_ALPHA_BUDGET};
use mpf_core::experiments::{
    convergence_study, default_grid, error_bound_evaluate, error_budget, exact_evolution, Evolver,
};
use mpf_core::hamiltonian::heisenberg_1d;
use mpf_core::operator::spectral_norm;
use mpf_core::scheme::{mpf_evolve, MpfScheme, PowerStrategy};

#[test]
fn first_order_slope() {
    let h = heisenberg_1d(3, true).unwrap();
    let grid = default_grid(&h, &Evolver::U1, 6).unwrap();
    let s = convergence_study(&h, &Evolver::U1, &grid).unwrap();
    assert!((s.fitted_slope.unwrap() - 2.0).abs() <= 0.3);
}

#[test]
fn three_site_bound_dominates() {
    let h = heisenberg_1d(3, true).unwrap();
    let table = CommutatorTable::compute(&h, 17, DEFAULT_ALPHA_BUDGET, false).unwrap();
    let scheme = MpfScheme::build(1, 2, PowerStrategy::Natural).unwrap();
    let c = error_bound_evaluate(&h, 0.05, &scheme, &table, 16).unwrap();
    assert!(!c.budget.tail_flag);
    assert!(c.measured <= c.budget.thm_bound, "{} > {}", c.measured, c.budget.thm_bound);
    assert!(c.budget.e_tilde_bounds.values().all(|&v| v >= 0.0));
    assert!(c.budget.f_tilde_bound >= 0.0);
}

#[test]
fn bound_shrinks_with_the_local_order() {
    let h = heisenberg_1d(3, true).unwrap();
    let table = CommutatorTable::compute(&h, 17, DEFAULT_ALPHA_BUDGET, false).unwrap();
    for m in 1..=2 {
        let scheme = MpfScheme::build(m, 2, PowerStrategy::Natural).unwrap();
        let big = error_budget(&table, 0.05, &scheme, 16).unwrap().thm_bound;
        let small = error_budget(&table, 0.025, &scheme, 16).unwrap().thm_bound;
        assert!(big / small >= 2f64.powf(2.0 * m as f64 + 1.0 - 0.2), "m = {m}: ratio {}", big / small);
    }
}

#[test]
fn global_error_within_triangle_envelope() {
    let h = heisenberg_1d(4, true).unwrap();
    let scheme = MpfScheme::build(2, 2, PowerStrategy::Natural).unwrap();
    let t = 2.0;
    for r in [4u64, 10, 25] {
        let delta = t / r as f64;
        let one = Evolver::Mpf(scheme.clone()).one_step_error(&h, delta).unwrap();
        let global = spectral_norm(&mpf_evolve(&h, t, r, &scheme).unwrap().checked_sub(&exact_evolution(&h, t)).unwrap()).unwrap();
        let envelope = r as f64 * one * (1.0 + one).powi(r as i32 - 1);
        assert!(global <= envelope * (1.0 + 1e-9), "r = {r}: {global} > {envelope}");
    }
}
