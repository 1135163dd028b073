//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;

use nalgebra::{DMatrix, SymmetricEigen};

use nbrw::engine::{mean_and_stderr, simulate, stationary_over_seeds};
use nbrw::fluid::{fixed_point, fixed_point_residual, integrate, l1_distance, sup_deviation, FluidState};
use nbrw::graph::{build_cycle, build_lps, build_random_regular, build_torus, spectral_lambda, Graph};
use nbrw::walker::{mixing_profile, MixingOptions};
use nbrw::{ExperimentConfig, GraphSpec, InitialCondition, PolicyKind};

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn experiment(graph: GraphSpec, policy: PolicyKind, lambda: f64, init: InitialCondition) -> ExperimentConfig {
    ExperimentConfig { graph, lambda, policy, horizon: 20.0, dt: 0.1, truncation: 16, init, seed: 1 }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    }
}

/// Per-seed sup_t ‖X(t) − x(t)‖₁ against the ODE started from the same condition.
fn sup_deviations(cfg: &ExperimentConfig, g: &Graph) -> Vec<f64> {
    let d = cfg.policy.d().expect("power-of-d policy");
    let x0 = FluidState::from_initial(&cfg.init, cfg.lambda, d, cfg.truncation).unwrap();
    let reference = integrate(&x0, cfg.horizon, 0.01).unwrap();
    SEEDS
        .iter()
        .map(|&seed| {
            let traj = simulate(&ExperimentConfig { seed, ..cfg.clone() }, g).unwrap();
            sup_deviation(&traj, &reference).unwrap()
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn dense_lambda(g: &Graph) -> f64 {
    let n = g.n();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (u, v) in g.edges() {
        a[(u, v)] = 1.0;
        a[(v, u)] = 1.0;
    }
    let mut eig: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    eig[1].max(eig[n - 1].abs())
}

fn c1_fixed_point_residual() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut closure_worst_d2: f64 = 0.0;
    for lambda in [0.5, 0.7, 0.95] {
        for d in [1, 2, 3] {
            worst = worst.max(fixed_point_residual(lambda, d, 16).unwrap());
            if d >= 2 {
                let r = fixed_point(lambda, d, 16).unwrap().rhs();
                closure_worst_d2 = r.iter().fold(closure_worst_d2, |m, v| m.max(v.abs()));
            }
        }
    }
    outcome(
        worst <= 1e-9 && closure_worst_d2 <= 1e-9,
        format!("max residual {worst:.3e} (truncated closure, d>=2: {closure_worst_d2:.3e}); tol 1e-9"),
    )
}

fn c2_ode_attractor() -> Outcome {
    let x0 = FluidState::from_initial(&InitialCondition::Empty, 0.95, 2, 16).unwrap();
    let fp = fixed_point(0.95, 2, 16).unwrap();
    let long = integrate(&x0, 200.0, 0.01).unwrap();
    let dist = l1_distance(long.final_state(), &fp.x).unwrap();
    let coarse = integrate(&x0, 10.0, 0.01).unwrap();
    let fine = integrate(&x0, 10.0, 0.005).unwrap();
    let halving = l1_distance(coarse.final_state(), fine.final_state()).unwrap();
    outcome(
        dist <= 1e-3 && halving <= 1e-8,
        format!("|x(200) - fixed point|_1 = {dist:.3e} (<= 1e-3); step-halving change {halving:.3e} (<= 1e-8)"),
    )
}

fn c3_mm1_oracle() -> Outcome {
    let spec = GraphSpec::RandomRegular { n: 200, k: 6, seed: 1 };
    let g = spec.build().unwrap();
    let cfg = experiment(spec, PolicyKind::RandomAssign, 0.7, InitialCondition::Empty);
    let s = stationary_over_seeds(&cfg, &g, &[1, 2, 3], 500.0, 2000.0).unwrap();
    let worst = (1..=5).map(|i| (s.estimate[i] - 0.7f64.powi(i as i32)).abs()).fold(0.0, f64::max);
    outcome(worst <= 0.02, format!("max_i<=5 |x_i - 0.7^i| = {worst:.4} (<= 0.02)"))
}

fn c4_iid_mean_field() -> Outcome {
    let spec = GraphSpec::RandomRegular { n: 4000, k: 6, seed: 1 };
    let g = spec.build().unwrap();
    let devs = sup_deviations(&experiment(spec, PolicyKind::IidPod { d: 2 }, 0.95, InitialCondition::Empty), &g);
    let m = mean(&devs);
    outcome(m <= 0.1, format!("seed-mean sup l1 = {m:.4} (<= 0.1), per seed {devs:.4?}"))
}

fn c5_lps_figures() -> Outcome {
    let spec = GraphSpec::Lps { p: 5, q: 29 };
    let g = spec.build().unwrap();
    let policy = PolicyKind::NbrwPod { d: 2 };
    let empty = mean(&sup_deviations(&experiment(spec.clone(), policy, 0.95, InitialCondition::Empty), &g));
    let full = mean(&sup_deviations(&experiment(spec, policy, 0.95, InitialCondition::Constant(5)), &g));
    outcome(
        empty <= 0.1 && full <= 0.1,
        format!("LPS(5,29) seed-mean sup l1: empty start {empty:.4}, constant-5 start {full:.4} (<= 0.1)"),
    )
}

fn c6_finite_size_scaling() -> Outcome {
    let medians: Vec<f64> = [250, 1000, 4000]
        .iter()
        .map(|&n| {
            let spec = GraphSpec::RandomRegular { n, k: 6, seed: 1 };
            let g = spec.build().unwrap();
            median(sup_deviations(&experiment(spec, PolicyKind::IidPod { d: 2 }, 0.95, InitialCondition::Empty), &g))
        })
        .collect();
    outcome(
        medians.windows(2).all(|w| w[1] < w[0]),
        format!("median sup l1 at n = 250, 1000, 4000: {medians:.4?} (strictly decreasing)"),
    )
}

fn c7_expander_contrast() -> Outcome {
    let fp = fixed_point(0.95, 2, 16).unwrap();
    let distance = |spec: GraphSpec| {
        let g = spec.build().unwrap();
        let cfg = experiment(spec, PolicyKind::NbrwPod { d: 2 }, 0.95, InitialCondition::Empty);
        let s = stationary_over_seeds(&cfg, &g, &SEEDS, 50.0, 200.0).unwrap();
        let per: Vec<f64> = s.per_seed.iter().map(|e| l1_distance(&e.tails.x, &fp.x).unwrap()).collect();
        mean(&per)
    };
    let lps = distance(GraphSpec::Lps { p: 5, q: 29 });
    let cycle = distance(GraphSpec::Cycle { n: 12180 });
    outcome(
        cycle >= 2.0 * lps,
        format!("l1 to fixed point: cycle(12180) {cycle:.4} vs LPS(5,29) {lps:.4}; ratio {:.1} (>= 2)", cycle / lps),
    )
}

fn c8_spectral() -> Outcome {
    let lps = build_lps(5, 11).unwrap();
    let ramanujan = spectral_lambda(&lps, 1e-6).unwrap();
    let bound = 2.0 * 5f64.sqrt();
    let lps_dense = dense_lambda(&lps);

    let c9 = spectral_lambda(&build_cycle(9).unwrap(), 1e-10).unwrap();
    let analytic = (1..9)
        .map(|j| (2.0 * (2.0 * PI * j as f64 / 9.0).cos()).abs())
        .fold(0.0, f64::max);
    let c9_err = (c9 - analytic).abs();

    let mut small: Vec<Graph> = vec![
        build_random_regular(4, 3, 0).unwrap(),
        build_torus(&[3, 4]).unwrap(),
        build_torus(&[4, 4]).unwrap(),
        build_torus(&[5, 5]).unwrap(),
        build_torus(&[6, 8]).unwrap(),
        build_torus(&[3, 3, 5]).unwrap(),
    ];
    small.extend((3..=50).step_by(7).map(|n| build_cycle(n).unwrap()));
    for (n, k, seed) in [(10, 3, 1), (20, 4, 2), (30, 5, 3), (50, 6, 4), (16, 3, 5), (40, 7, 6)] {
        small.push(build_random_regular(n, k, seed).unwrap());
    }
    small.retain(|g| g.is_connected());
    let oracle_worst = small
        .iter()
        .map(|g| (spectral_lambda(g, 1e-6).unwrap() - dense_lambda(g)).abs())
        .fold(0.0, f64::max);

    outcome(
        ramanujan <= bound + 1e-6 && (ramanujan - lps_dense).abs() <= 1e-6 && c9_err <= 1e-8 && oracle_worst <= 1e-6,
        format!(
            "LPS(5,11) lambda {ramanujan:.6} (dense {lps_dense:.6}) <= 2*sqrt(5) = {bound:.6}; cycle(9) error {c9_err:.1e}; \
             dense-oracle max error {oracle_worst:.1e} over {} graphs",
            small.len()
        ),
    )
}

fn c9_mixing() -> Outcome {
    let g = build_lps(5, 11).unwrap();
    let ts: Vec<usize> = (1..=40).collect();
    let report = mixing_profile(&g, &ts, &MixingOptions::default()).unwrap();
    let at = |t: usize| report.points[t - 1].deviation;
    let checkpoints = [at(5), at(10), at(20), at(40)];
    let decreasing = checkpoints.windows(2).all(|w| w[1] < w[0]);
    let n2 = 1.0 / (g.n() as f64).powi(2);
    let crossing = report.points.iter().find(|p| p.deviation <= n2).map(|p| p.t);
    outcome(
        report.exact && decreasing && at(40) <= 1e-5,
        format!(
            "deviations at t = 5,10,20,40: {} (strictly decreasing, last <= 1e-5); \
             first t with deviation <= 1/n^2: {crossing:?}",
            checkpoints.map(|v| format!("{v:.3e}")).join(", ")
        ),
    )
}

fn c10_policy_ordering() -> Outcome {
    let spec = GraphSpec::Lps { p: 5, q: 11 };
    let g = spec.build().unwrap();
    let stats = |policy| {
        let cfg = experiment(spec.clone(), policy, 0.9, InitialCondition::Empty);
        let s = stationary_over_seeds(&cfg, &g, &SEEDS, 50.0, 200.0).unwrap();
        let per: Vec<f64> = s.per_seed.iter().map(|e| e.mean_queue).collect();
        mean_and_stderr(&per)
    };
    let (jsq, jsq_se) = stats(PolicyKind::Jsq);
    let (nb, nb_se) = stats(PolicyKind::NbrwPod { d: 2 });
    let (ra, ra_se) = stats(PolicyKind::RandomAssign);
    let gap1 = (nb - jsq) / (jsq_se.powi(2) + nb_se.powi(2)).sqrt();
    let gap2 = (ra - nb) / (nb_se.powi(2) + ra_se.powi(2)).sqrt();
    outcome(
        gap1 >= 3.0 && gap2 >= 3.0,
        format!(
            "mean queue (n = 660): jsq {jsq:.3}±{jsq_se:.3} < nbrw-pod {nb:.3}±{nb_se:.3} < random {ra:.3}±{ra_se:.3}; \
             gaps {gap1:.1} and {gap2:.1} standard errors (>= 3)"
        ),
    )
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "timing.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn c11_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_nbrw");
    let recipes = Path::new(env!("CARGO_MANIFEST_DIR")).join("recipes");
    let tmp = tempfile::tempdir().unwrap();
    let mut identical = true;
    let mut checked = 0;
    for recipe in ["fig1.conf", "fig2.conf"] {
        let outputs: Vec<_> = (0..2)
            .map(|run| {
                let out = tmp.path().join(format!("{recipe}-{run}"));
                let status = Command::new(bin)
                    .arg("simulate")
                    .arg(recipes.join(recipe))
                    .args(["--seeds", "3,4", "-o"])
                    .arg(&out)
                    .status()
                    .unwrap();
                assert!(status.success());
                dir_bytes(&out)
            })
            .collect();
        checked += outputs[0].len();
        identical &= outputs[0] == outputs[1];
    }
    let fluid_runs: Vec<_> = (0..2)
        .map(|run| {
            let out = tmp.path().join(format!("fluid-{run}"));
            fs::create_dir_all(&out).unwrap();
            let status = Command::new(bin)
                .args(["fluid", "--lambda", "0.95", "--d", "2", "--init", "constant:5", "-o"])
                .arg(out.join("fluid.csv"))
                .status()
                .unwrap();
            assert!(status.success());
            dir_bytes(&out)
        })
        .collect();
    checked += fluid_runs[0].len();
    identical &= fluid_runs[0] == fluid_runs[1];
    outcome(identical, format!("{checked} output files byte-identical across two runs"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("fixed-point residual", c1_fixed_point_residual),
        ("ODE attractor and step halving", c2_ode_attractor),
        ("M/M/1 oracle for random assignment", c3_mm1_oracle),
        ("mean-field agreement, i.i.d. power-of-2", c4_iid_mean_field),
        ("LPS figure analogues (empty and constant-5 starts)", c5_lps_figures),
        ("finite-size scaling", c6_finite_size_scaling),
        ("expander-necessity contrast", c7_expander_contrast),
        ("spectral certification", c8_spectral),
        ("NBRW mixing diagnostic", c9_mixing),
        ("policy ordering", c10_policy_ordering),
        ("determinism", c11_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("[{}] criterion {:>2}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
