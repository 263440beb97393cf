//! Scratch probe, deleted before commit: solver accuracy limits and gap-family scans.

use speedplan_core::model::{BoundaryMode, TrackInstance, VehicleParams};
use speedplan_core::oracle::{dp_optimize, reachable_intervals, reference_vehicle, DpOutcome};
use speedplan_core::relaxation::{plan, PlanOptions, PlanOutcome};
use speedplan_core::socp::SolverSettings;

fn tight_settings() -> SolverSettings {
    SolverSettings {
        feas_tol: 1e-9,
        gap_abs_tol: 1e-9,
        gap_rel_tol: 1e-10,
        max_iter: 300,
        ..SolverSettings::default()
    }
}

fn show_plan(tag: &str, inst: &TrackInstance, opts: &PlanOptions) -> Option<(f64, bool, usize, bool, f64)> {
    match plan(inst, BoundaryMode::FixedFinal, opts).unwrap() {
        PlanOutcome::Planned(r) => {
            println!(
                "{tag}: obj={:.9} honest={:.9} exact={} max_resid={:.3e} viols={:?} suffix={} iters={}",
                r.solver_objective,
                r.objective.total,
                r.exactness.is_exact,
                r.exactness.max_residual,
                r.exactness.violations,
                r.exactness.violations_are_suffix,
                r.solver_iterations
            );
            Some((
                r.solver_objective,
                r.exactness.is_exact,
                r.exactness.tail_length,
                r.exactness.violations_are_suffix,
                r.objective.total,
            ))
        }
        PlanOutcome::Infeasible(rep) => {
            println!("{tag}: INFEASIBLE {rep:?}");
            None
        }
        PlanOutcome::SolverFailure {
            status, iterations, ..
        } => {
            println!("{tag}: FAILURE {status:?} after {iterations}");
            None
        }
    }
}

#[test]
fn probe_solver_accuracy_and_dp() {
    for lambda in [0.0, 2.0e-4] {
        let inst = TrackInstance::new(
            reference_vehicle(),
            1.0,
            vec![0.0, 0.0],
            vec![16.0, 100.0, 16.0],
            16.0,
            16.0,
            lambda,
            1.0,
        )
        .unwrap();
        println!("--- lambda={lambda}");
        let default = show_plan("default", &inst, &PlanOptions::default());
        let tight_opts = PlanOptions {
            solver: tight_settings(),
            ..PlanOptions::default()
        };
        let tight = show_plan("tight  ", &inst, &tight_opts);
        if let DpOutcome::Solved(dp) = dp_optimize(&inst, BoundaryMode::FixedFinal, 400).unwrap() {
            println!("dp(400): {:.9}", dp.objective.total);
            if let Some((s, ..)) = default {
                println!("  dp - default_obj = {:+.3e}", dp.objective.total - s);
            }
            if let Some((s, ..)) = tight {
                println!("  dp - tight_obj   = {:+.3e}", dp.objective.total - s);
            }
        }
    }
}

fn flat_instance(vehicle: VehicleParams, n: usize, w_init: f64, frac: f64) -> TrackInstance {
    flat_energy_instance(vehicle, n, w_init, frac, 0.0, 1.0)
}

fn flat_energy_instance(
    vehicle: VehicleParams,
    n: usize,
    w_init: f64,
    frac: f64,
    lambda: f64,
    eta: f64,
) -> TrackInstance {
    let mut inst = TrackInstance::new(
        vehicle,
        1.0,
        vec![0.0; n - 1],
        vec![400.0; n],
        w_init,
        0.0,
        lambda,
        eta,
    )
    .unwrap();
    let speedplan_core::oracle::Reachability::Reachable { intervals } =
        reachable_intervals(&inst).unwrap()
    else {
        panic!("reachable");
    };
    inst.w_fin = frac * intervals[n - 1].1;
    inst
}

#[test]
fn probe_gap_families() {
    let low_power = VehicleParams::new(1200.0, 30_000.0, 0.8, 0.01, 4.0e-4).unwrap();
    let loose = PlanOptions {
        tighten: false,
        ..PlanOptions::default()
    };
    let tight_opts = PlanOptions::default();

    println!("=== family A: low-power vehicle (critical speed ~10), w_init 9");
    for n in [6usize, 10, 16, 24] {
        for frac in [0.90, 0.95, 0.98] {
            let inst = flat_instance(low_power.clone(), n, 9.0, frac);
            println!("n={n} frac={frac} w_fin={:.3}", inst.w_fin);
            let l = show_plan("  loose", &inst, &loose);
            let t = show_plan("  tight", &inst, &tight_opts);
            if let (Some(l), Some(t)) = (l, t) {
                println!("  gap tight-loose = {:+.3e}", t.0 - l.0);
            }
        }
    }

    println!("=== family B: reference vehicle, w_init 45");
    for n in [12usize, 24, 40] {
        for frac in [0.95, 0.99] {
            let inst = flat_instance(reference_vehicle(), n, 45.0, frac);
            println!("n={n} frac={frac} w_fin={:.3}", inst.w_fin);
            let l = show_plan("  loose", &inst, &loose);
            let t = show_plan("  tight", &inst, &tight_opts);
            if let (Some(l), Some(t)) = (l, t) {
                println!("  gap tight-loose = {:+.3e}", t.0 - l.0);
            }
        }
    }

    println!("=== family C: reference vehicle, low w_init (current construction)");
    for n in [8usize, 16] {
        for frac in [0.90, 0.98] {
            let inst = flat_instance(reference_vehicle(), n, 6.0, frac);
            println!("n={n} frac={frac} w_fin={:.3}", inst.w_fin);
            let l = show_plan("  loose", &inst, &loose);
            let t = show_plan("  tight", &inst, &tight_opts);
            if let (Some(l), Some(t)) = (l, t) {
                println!("  gap tight-loose = {:+.3e}", t.0 - l.0);
            }
        }
    }
}

#[test]
fn probe_energy_weighted_gap() {
    let loose = PlanOptions {
        tighten: false,
        ..PlanOptions::default()
    };
    let tight_opts = PlanOptions::default();
    println!("=== family D: energy-weighted terminal climb");
    for w_init in [60.0, 100.0] {
        for n in [16usize, 30] {
            for lambda_m in [0.05, 0.15, 0.3, 0.6] {
                for frac in [0.90, 0.97] {
                    let lambda = lambda_m / 1200.0;
                    let inst =
                        flat_energy_instance(reference_vehicle(), n, w_init, frac, lambda, 1.0);
                    println!(
                        "w_init={w_init} n={n} lambdaM={lambda_m} frac={frac} w_fin={:.2}",
                        inst.w_fin
                    );
                    let l = show_plan("  loose", &inst, &loose);
                    let t = show_plan("  tight", &inst, &tight_opts);
                    if let (Some(l), Some(t)) = (l, t) {
                        println!(
                            "  gap tight-loose = {:+.3e}  loose_exact={} tail={} suffix={}",
                            t.0 - l.0,
                            l.1,
                            l.2,
                            l.3
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn probe_acceptance_scale() {
    use speedplan_core::oracle::InstanceGenerator;
    use std::time::Instant;
    let loose = PlanOptions {
        tighten: false,
        ..PlanOptions::default()
    };
    println!("== tightened fixed-final at scale ==");
    for n in [50usize, 100, 200] {
        for seed in [1u64, 2, 3] {
            let mut g = InstanceGenerator::new(seed);
            let inst = g.feasible(n).unwrap();
            let t0 = Instant::now();
            match plan(&inst, BoundaryMode::FixedFinal, &PlanOptions::default()).unwrap() {
                PlanOutcome::Planned(r) => println!(
                    "n={n} seed={seed}: exact={} resid={:.3e} gap={:.3e} iters={} t={:?}",
                    r.exactness.is_exact,
                    r.exactness.max_residual,
                    r.solver_gap,
                    r.solver_iterations,
                    t0.elapsed()
                ),
                PlanOutcome::Infeasible(rep) => println!("n={n} seed={seed}: INFEASIBLE {rep:?}"),
                PlanOutcome::SolverFailure { status, iterations, .. } => {
                    println!("n={n} seed={seed}: FAILURE {status:?} after {iterations} t={:?}", t0.elapsed())
                }
            }
        }
    }
    println!("== untightened free-final at scale ==");
    for n in [10usize, 30, 100] {
        for seed in [4u64, 5, 6] {
            let mut g = InstanceGenerator::new(seed);
            let inst = g.feasible(n).unwrap();
            match plan(&inst, BoundaryMode::FreeFinal, &loose).unwrap() {
                PlanOutcome::Planned(r) => println!(
                    "n={n} seed={seed}: exact={} resid={:.3e} gap={:.3e} iters={}",
                    r.exactness.is_exact,
                    r.exactness.max_residual,
                    r.solver_gap,
                    r.solver_iterations
                ),
                PlanOutcome::Infeasible(rep) => println!("n={n} seed={seed}: INFEASIBLE {rep:?}"),
                PlanOutcome::SolverFailure { status, iterations, .. } => {
                    println!("n={n} seed={seed}: FAILURE {status:?} after {iterations}")
                }
            }
        }
    }
}

#[test]
fn probe_gap_family_caps() {
    let loose = PlanOptions {
        tighten: false,
        ..PlanOptions::default()
    };
    let v = reference_vehicle();
    for eta in [0.5f64, 1.0] {
        for cap in [250.0f64, 400.0] {
            for n in [8usize, 12, 16] {
                for lm in [0.3f64, 0.6] {
                    let lambda = lm / v.mass;
                    let mut inst = TrackInstance::new(
                        v.clone(),
                        1.0,
                        vec![0.0; n - 1],
                        vec![cap; n],
                        100.0,
                        0.0,
                        lambda,
                        eta,
                    )
                    .unwrap();
                    let speedplan_core::oracle::Reachability::Reachable { intervals } =
                        reachable_intervals(&inst).unwrap()
                    else {
                        panic!("reachable");
                    };
                    inst.w_fin = 0.97 * intervals[n - 1].1;
                    println!("eta={eta} cap={cap} n={n} lambdaM={lm} w_fin={:.2}", inst.w_fin);
                    let l = show_plan("  loose", &inst, &loose);
                    let t = show_plan("  tight", &inst, &PlanOptions::default());
                    if let (Some((lo, lex, ltail, lsuf, _)), Some((to, tex, _, _, th))) = (l, t) {
                        println!(
                            "  -> gap={:+.3e} loose_inexact={} tail={} suffix={} tight_exact={} close={:+.3e}",
                            th - lo, !lex, ltail, lsuf, tex, to - th
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn probe_one_trace() {
    use speedplan_core::oracle::InstanceGenerator;
    let seed: u64 = std::env::var("PROBE_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(5);
    let n: usize = std::env::var("PROBE_N").ok().and_then(|s| s.parse().ok()).unwrap_or(10);
    let tightened = std::env::var("PROBE_TIGHT").is_ok();
    let opts = PlanOptions {
        tighten: tightened,
        ..PlanOptions::default()
    };
    let mode = if tightened { BoundaryMode::FixedFinal } else { BoundaryMode::FreeFinal };
    let mut g = InstanceGenerator::new(seed);
    let inst = g.feasible(n).unwrap();
    match plan(&inst, mode, &opts).unwrap() {
        PlanOutcome::Planned(r) => println!(
            "exact={} resid={:.3e} gap={:.3e}",
            r.exactness.is_exact, r.exactness.max_residual, r.solver_gap
        ),
        o => println!("{o:?}"),
    }
}

#[test]
fn probe_recheck_breakdown() {
    use speedplan_core::oracle::InstanceGenerator;
    use speedplan_core::relaxation::{assemble, untightened_bounds};
    use speedplan_core::socp;
    let mut g = InstanceGenerator::new(5);
    let inst = g.feasible(10).unwrap();
    let mode = BoundaryMode::FreeFinal;
    let bounds = untightened_bounds(&inst, mode);
    let prog = assemble(&inst, mode, &bounds).unwrap();
    let sol = socp::solve(&prog.problem, &SolverSettings::default()).unwrap();
    println!(
        "status={:?} iters={} pres={:.3e} dres={:.3e} gap={:.3e}",
        sol.status, sol.iterations, sol.primal_res, sol.dual_res, sol.gap
    );
    let lay = &prog.layout;
    let n = inst.n();
    let w: Vec<f64> = (0..n).map(|i| sol.x[lay.w(i)]).collect();
    let t: Vec<f64> = (0..lay.stages()).map(|i| sol.x[lay.t(i)]).collect();
    let f: Vec<f64> = (0..lay.stages()).map(|i| sol.x[lay.f(i)]).collect();
    let v = inst.vehicle.clone();
    println!("w_init pin: {:.3e}  (w_init={})", (w[0] - inst.w_init).abs(), inst.w_init);
    let mut worst_force = 0.0f64;
    let mut worst_fric = f64::NEG_INFINITY;
    let mut worst_power = f64::NEG_INFINITY;
    let mut worst_pace = f64::NEG_INFINITY;
    for i in 0..inst.stages() {
        let fi = (w[i + 1] - w[i]) / inst.h + v.gamma * w[i] + inst.grade_resistance(i);
        worst_force = worst_force.max((f[i] - fi).abs());
        worst_fric = worst_fric.max(f[i].abs() - v.friction_bound());
        worst_power = worst_power.max(v.mass / v.p_max * f[i] - t[i]);
        worst_pace = worst_pace.max(1.0 - t[i] * w[i].sqrt());
    }
    let mut worst_window = f64::NEG_INFINITY;
    for i in 0..n {
        worst_window = worst_window.max(bounds.lower[i] - w[i]).max(w[i] - bounds.upper[i]);
    }
    println!("worst force-def |f - f(w)|: {worst_force:.3e}");
    println!("worst friction overshoot:   {worst_fric:.3e}");
    println!("worst power overshoot:      {worst_power:.3e}");
    println!("worst pace-cone violation:  {worst_pace:.3e}");
    println!("worst window overshoot:     {worst_window:.3e}");
    println!("caps max: {:.1}", bounds.upper.iter().cloned().fold(0.0f64, f64::max));
}
