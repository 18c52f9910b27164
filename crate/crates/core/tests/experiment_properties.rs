mod common;

use qkd_trojan::attack::{bright_ledger, build_pattern, AttackTriad};
use qkd_trojan::experiment::{
    is_feasible, run_baseline, run_experiment, sweep, Scenario, SweepEntry, SweepGrid, SweepSpec,
};
use qkd_trojan::sarg04::binary_entropy;

fn scenario(name: &str, n_sim: usize, seed: u64) -> Scenario {
    let mut s = Scenario::preset(name).unwrap();
    s.n_sim = n_sim;
    s.seed = seed;
    s
}

fn small_grid() -> SweepGrid {
    SweepGrid {
        r: vec![0.2, 1.0],
        n_ab: vec![10, 40],
        n_el: vec![0, 200],
        n_ss: vec![50],
    }
}

#[test]
fn single_point_sweep_equals_direct_run() {
    let template = scenario("d0-both", 300, 21);
    let grid = SweepGrid {
        r: vec![0.6],
        n_ab: vec![20],
        n_el: vec![100],
        n_ss: vec![200],
    };
    let rep = sweep(&SweepSpec { grid, template: template.clone() }, 2).unwrap();
    assert_eq!(rep.entries.len(), 1);
    let mut s = template.with_attack(0.6, AttackTriad::new(20, 100, 200));
    s.gamma_exp = Some(rep.baseline.gamma_exp);
    let c = qkd_trojan::experiment::Combination { r: 0.6, triad: AttackTriad::new(20, 100, 200) };
    let direct = run_experiment(&s, c.seed(template.seed)).unwrap();
    assert_eq!(rep.entries[0], SweepEntry::Ok(direct));
    assert_eq!(rep.baseline, run_baseline(&template, template.seed).unwrap());
}

#[test]
fn sweep_ignores_grid_order_and_worker_count() {
    let template = scenario("improved", 200, 5);
    let a = sweep(&SweepSpec { grid: small_grid(), template: template.clone() }, 1).unwrap();
    let mut g = small_grid();
    g.r.reverse();
    g.n_ab.reverse();
    g.n_el.reverse();
    let b = sweep(&SweepSpec { grid: g, template }, 3).unwrap();
    assert_eq!(a, b);
}

#[test]
fn feasible_flags_follow_the_rule() {
    let template = scenario("d0-both", 300, 2);
    let rep = sweep(&SweepSpec { grid: small_grid(), template: template.clone() }, 2).unwrap();
    let mut seen_infeasible_after_feasible = false;
    let mut last_feasible = true;
    for e in &rep.entries {
        let r = e.result().expect("no failures on a valid grid");
        assert_eq!(r.delta_b, (1.0 - r.gamma_obs / r.gamma_exp).abs());
        let recomputed = r.q < template.thresholds.q_abort
            && r.delta_b <= template.thresholds.delta_max
            && r.i_act > r.i_est;
        assert_eq!(r.feasible, recomputed);
        assert_eq!(r.feasible, is_feasible(r.q, r.delta_b, r.i_act, r.i_est, &template.thresholds));
        if !r.feasible {
            last_feasible = false;
        } else if !last_feasible {
            seen_infeasible_after_feasible = true;
        }
    }
    assert!(!seen_infeasible_after_feasible, "feasible entries must come first");
}

#[test]
fn known_fraction_grows_with_attack_rate() {
    let base = scenario("improved", 1500, 31);
    let b = run_baseline(&base, base.seed).unwrap();
    let mut prev: Option<(f64, f64)> = None;
    for r in [0.0, 0.2, 0.4, 0.6, 0.8, 1.0] {
        let mut s = base.with_attack(r, AttackTriad::new(20, 100, 200));
        s.gamma_exp = Some(b.gamma_exp);
        let res = run_experiment(&s, 77).unwrap();
        let f = res.f_known;
        let se = (f * (1.0 - f) / res.diagnostics.conclusive as f64).sqrt();
        if let Some((pf, pse)) = prev {
            assert!(f >= pf - 3.0 * (se * se + pse * pse).sqrt(), "r = {r}: {f} after {pf}");
        }
        prev = Some((f, se));
    }
}

#[test]
fn no_attack_reduces_to_baseline() {
    let s0 = scenario("clavis2", 2000, 12);
    let b = run_baseline(&s0, s0.seed).unwrap();
    let mut s = s0.with_attack(0.0, s0.attack.triad);
    s.gamma_exp = Some(b.gamma_exp);
    let r = run_experiment(&s, s0.seed).unwrap();
    assert_eq!(r.f_known, 0.0);
    assert_eq!(r.diagnostics.attacked_frames, 0);
    assert!((r.i_act - binary_entropy(r.q).unwrap()).abs() < 1e-15);
    // Two independent unattacked runs: click rates agree within 3 sigma.
    let sigma = b.gamma_se * 2f64.sqrt();
    assert!((r.gamma_obs - b.gamma_exp).abs() <= 3.0 * sigma, "{} vs {}", r.gamma_obs, b.gamma_exp);
}

#[test]
fn doubling_frames_keeps_click_rate() {
    let half = run_baseline(&scenario("clavis2", 1000, 40), 40).unwrap();
    let full = run_baseline(&scenario("clavis2", 2000, 41), 41).unwrap();
    let sigma = (half.gamma_se.powi(2) + full.gamma_se.powi(2)).sqrt();
    assert!((half.gamma_exp - full.gamma_exp).abs() <= 3.0 * sigma);
}

#[test]
fn blocked_line_leaves_only_noise() {
    // Everything extinguished apart from the bursts, and the bursts carry no
    // photons either: Bob sees dark counts plus afterpulses.
    let mut s = scenario("clavis2", 2000, 3);
    s.attack.triad = AttackTriad::new(10, 200, 0);
    s.attack.r = 1.0;
    s.attack.t_ll = 0.0;
    s.gamma_exp = Some(1.0);
    let res = run_experiment(&s, 3).unwrap();

    let pattern = build_pattern(&s.attack.triad, s.frame.n_slots).unwrap();
    let pulses: Vec<usize> = bright_ledger(&pattern, s.frame.slot_period_us).slots().to_vec();
    let gates: Vec<(f64, f64, f64)> = (1..=s.frame.n_slots)
        .map(|l| {
            let n = [0, 1].map(|j| {
                let p = s.profile.detector(j);
                let ap = common::afterpulse_brute(p, &pulses, l, s.frame.slot_period_us);
                p.dark + ap - p.dark * ap
            });
            (n[0], n[1], n[0] * n[1])
        })
        .collect();
    let expect: f64 = common::outcome_probs(&gates, s.frame.deadtime_gates)
        .iter()
        .map(|o| o.0 + o.1)
        .sum();
    // Deadtime makes clicks negatively correlated, so the Poisson bound holds.
    let sigma = (expect / s.n_sim as f64).sqrt();
    assert!((res.gamma_obs - expect).abs() <= 3.0 * sigma, "{} vs {expect}", res.gamma_obs);
}

#[test]
fn same_seed_same_result() {
    let mut s = scenario("improved", 300, 8);
    s.gamma_exp = Some(12.0);
    assert_eq!(run_experiment(&s, 8).unwrap(), run_experiment(&s, 8).unwrap());
    assert_ne!(run_experiment(&s, 8).unwrap(), run_experiment(&s, 9).unwrap());
}

#[test]
fn invalid_grid_points_are_rejected_up_front() {
    let template = scenario("clavis2", 10, 1);
    let mut grid = small_grid();
    grid.n_ss = vec![];
    assert!(sweep(&SweepSpec { grid, template: template.clone() }, 1).is_err());
    let mut grid = small_grid();
    grid.n_el = vec![2000];
    assert!(sweep(&SweepSpec { grid, template }, 1).is_err());
}
