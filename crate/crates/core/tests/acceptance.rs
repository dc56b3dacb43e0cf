//! Acceptance suite: one PASS/FAIL line per criterion; exits nonzero if any
//! criterion fails. Tolerances and seed lists are fixed below.

use itale::alpha_expansion::{alpha_expansion, denoise_objective, EdgeCost, LabelGrid};
use itale::diagnostics::probe_crip;
use itale::experiment::{run_experiment, write_results_csv, ExperimentSpec};
use itale::graph::{lattice_graph, line_graph, GraphTopology};
use itale::itale::{default_lambda_max, run_itale, GridRule, ItaleConfig, RegularizationPath};
use itale::maxflow::{min_cut, FlowNetwork};
use itale::measurement::io::save_design;
use itale::measurement::{fourier_weighted_design, gaussian_design, Backing, DenseMatrix, MeasurementOperator, SamplingLaw};
use itale::tv::{solve_tv, tv_objective, tv_prox_on_edges, TvConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use std::process::Command;
use std::time::Instant;

const MIN_CUT_NETWORKS: usize = 500;
const MIN_CUT_BUDGET_SECS: f64 = 10.0;
const EXPANSION_INSTANCES: usize = 200;
const EXPANSION_BUDGET_SECS: f64 = 60.0;
const MONOTONE_REL_TOL: f64 = 1e-9;
const RECOVERY_SEEDS: u64 = 20;
const RECOVERY_REQUIRED: usize = 18;
const RECOVERY_RUN_BUDGET_SECS: f64 = 10.0;
const RECOVERY_GRID: f64 = 0.25;
const ENVELOPE_SLACK: f64 = 0.05;
const NOISE_LEVELS: [f64; 3] = [0.5, 1.0, 2.0];
const NOISE_RATIO_MAX: f64 = 3.0;
const FOURIER_TOL: f64 = 1e-9;
const LAW_DRAWS: usize = 100_000;
const LAW_TV_MAX: f64 = 0.02;
const TV_ORACLE_SLACK: f64 = 1e-3;
const TV_PAIR_TOL: f64 = 1e-8;
const SPIKE_SEEDS: u64 = 20;
const SPIKE_WIN_FRACTION: f64 = 0.7;
const CRIP_ORTHO_MAX: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------- criterion 1

fn brute_force_cut(net: &FlowNetwork) -> f64 {
    let inner: Vec<usize> = (0..net.nodes).filter(|&v| v != net.source && v != net.sink).collect();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << inner.len()) {
        let mut side = vec![false; net.nodes];
        side[net.source] = true;
        for (b, &v) in inner.iter().enumerate() {
            side[v] = mask >> b & 1 == 1;
        }
        best = best.min(net.cut_capacity(&side));
    }
    best
}

fn min_cut_exactness() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(101);
    let start = Instant::now();
    let mut mismatches = 0;
    for _ in 0..MIN_CUT_NETWORKS {
        let nodes = rng.random_range(2..=12);
        let mut net = FlowNetwork::new(nodes, 0, nodes - 1);
        for u in 0..nodes {
            for v in 0..nodes {
                if u != v && rng.random_bool(0.35) {
                    net.add_arc(u, v, rng.random_range(0..=10) as f64);
                }
            }
        }
        let cut = min_cut(&net).expect("valid network");
        if cut.cut_value != brute_force_cut(&net) || cut.flow_value != cut.cut_value {
            mismatches += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && secs < MIN_CUT_BUDGET_SECS,
        format!("{MIN_CUT_NETWORKS} networks, {mismatches} mismatches, {secs:.2}s"),
    )
}

// ------------------------------------------------------------- criteria 2, 3

fn doubled_penalty_minimum(a: &[f64], lambda: f64, grid: &LabelGrid, topo: &GraphTopology) -> f64 {
    let p = a.len();
    let l = grid.len();
    let mut idx = vec![0usize; p];
    let mut x = vec![grid.labels[0]; p];
    let mut best = f64::INFINITY;
    loop {
        best = best.min(denoise_objective(&x, a, 2.0 * lambda, &EdgeCost::L0Indicator, topo));
        let mut v = 0;
        while v < p {
            idx[v] += 1;
            if idx[v] < l {
                x[v] = grid.labels[idx[v]];
                break;
            }
            idx[v] = 0;
            x[v] = grid.labels[0];
            v += 1;
        }
        if v == p {
            return best;
        }
    }
}

fn small_topology(rng: &mut ChaCha20Rng) -> GraphTopology {
    if rng.random_bool(0.5) {
        line_graph(rng.random_range(3..=8)).unwrap()
    } else {
        let cols = rng.random_range(2..=4);
        lattice_graph(2, cols).unwrap()
    }
}

/// Returns (violations, non-monotone calls, calls, seconds).
fn expansion_guarantee() -> (usize, usize, usize, f64) {
    let mut rng = ChaCha20Rng::seed_from_u64(202);
    let start = Instant::now();
    let (mut violations, mut non_monotone) = (0, 0);
    for _ in 0..EXPANSION_INSTANCES {
        let topo = small_topology(&mut rng);
        let a: Vec<f64> = (0..topo.num_vertices()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let lambda = 10f64.powf(rng.random_range(-2.0..1.0));
        let grid = LabelGrid::from_count(&a, rng.random_range(2..=5)).unwrap();
        let res = alpha_expansion(&a, lambda, &grid, &EdgeCost::L0Indicator, &topo, 50).unwrap();
        let bound = doubled_penalty_minimum(&a, lambda, &grid, &topo);
        if res.objective > bound + 1e-12 * bound.abs().max(1.0) {
            violations += 1;
        }
        if !res.is_monotone(MONOTONE_REL_TOL) {
            non_monotone += 1;
        }
    }
    (violations, non_monotone, EXPANSION_INSTANCES, start.elapsed().as_secs_f64())
}

// --------------------------------------------------------- criteria 4, 5, 6

/// Three changepoints on a 128-vertex line, blocks of at least 16, values on
/// the `RECOVERY_GRID` lattice with adjacent blocks distinct.
fn grid_truth(seed: u64) -> Vec<f64> {
    let p = 128;
    let mut rng = ChaCha20Rng::seed_from_u64(1000 + seed);
    let cps = loop {
        let mut c: Vec<usize> = (0..3).map(|_| rng.random_range(16..p - 16)).collect();
        c.sort_unstable();
        if c.windows(2).all(|w| w[1] - w[0] >= 16) {
            break c;
        }
    };
    let mut vals = [0i64; 4];
    for b in 0..4 {
        vals[b] = loop {
            let v = rng.random_range(-8i64..=8);
            if b == 0 || v != vals[b - 1] {
                break v;
            }
        };
    }
    (0..p).map(|i| vals[cps.iter().filter(|&&c| i >= c).count()] as f64 * RECOVERY_GRID).collect()
}

fn l2_err(x: &[f64], truth: &[f64]) -> f64 {
    x.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

struct RecoveryRun {
    path: RegularizationPath,
    truth: Vec<f64>,
    secs: f64,
}

fn noiseless_runs() -> Vec<RecoveryRun> {
    let topo = line_graph(128).unwrap();
    (0..RECOVERY_SEEDS)
        .map(|seed| {
            let truth = grid_truth(seed);
            let a = gaussian_design(64, 128, seed).unwrap();
            let y = a.apply(&truth).unwrap();
            let start = Instant::now();
            let lmax = default_lambda_max(&y, &a, 1.0).unwrap();
            let cfg = ItaleConfig {
                grid: GridRule::Spacing(RECOVERY_GRID),
                lambda_min: 1e-6 * lmax,
                max_iters: 400,
                ..Default::default()
            };
            let path = run_itale(&y, &a, &topo, &EdgeCost::L0Indicator, &cfg).unwrap();
            RecoveryRun { path, truth, secs: start.elapsed().as_secs_f64() }
        })
        .collect()
}

/// First index from which every later iterate equals the truth bitwise.
fn exact_from(run: &RecoveryRun) -> Option<usize> {
    let n = run.path.len();
    let first = (0..n).rev().take_while(|&k| run.path.signal(k) == run.truth).last()?;
    Some(first)
}

fn exact_recovery(runs: &[RecoveryRun]) -> Outcome {
    let exact = runs.iter().filter(|r| exact_from(r).is_some()).count();
    let slowest = runs.iter().map(|r| r.secs).fold(0.0, f64::max);
    outcome(
        exact >= RECOVERY_REQUIRED && slowest < RECOVERY_RUN_BUDGET_SECS,
        format!("{exact}/{RECOVERY_SEEDS} exact (need {RECOVERY_REQUIRED}), slowest run {slowest:.2}s"),
    )
}

/// Least-squares slope of `log env_k` over the tail half before exact
/// recovery, where `env_k = max_{j ≥ k} err_j` is the monotone envelope.
fn envelope_ratio(run: &RecoveryRun, until: usize) -> Option<f64> {
    let errs: Vec<f64> = (0..until).map(|k| l2_err(&run.path.signal(k), &run.truth)).collect();
    let mut env = errs.clone();
    for k in (0..until.saturating_sub(1)).rev() {
        env[k] = env[k].max(env[k + 1]);
    }
    let tail: Vec<(f64, f64)> = (until / 2..until).map(|k| (k as f64, env[k].ln())).collect();
    if tail.len() < 3 {
        return None;
    }
    let n = tail.len() as f64;
    let (mx, my) = (tail.iter().map(|t| t.0).sum::<f64>() / n, tail.iter().map(|t| t.1).sum::<f64>() / n);
    let sxy: f64 = tail.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = tail.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Some((sxy / sxx).exp())
}

fn geometric_envelope(runs: &[RecoveryRun]) -> Outcome {
    let limit = 0.9f64.sqrt() + ENVELOPE_SLACK;
    let ratios: Vec<f64> = runs.iter().filter_map(|r| exact_from(r).and_then(|k| envelope_ratio(r, k))).collect();
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    outcome(
        !ratios.is_empty() && worst <= limit,
        format!("{} recovered runs fitted, worst ratio {worst:.4} (limit {limit:.4})", ratios.len()),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 0 {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

fn noise_proportionality() -> Outcome {
    let topo = line_graph(128).unwrap();
    let mut ratios = vec![Vec::new(); NOISE_LEVELS.len() - 1];
    for seed in 0..RECOVERY_SEEDS {
        let truth = grid_truth(seed);
        let a = gaussian_design(64, 128, seed).unwrap();
        let clean = a.apply(&truth).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(5000 + seed);
        let z: Vec<f64> = (0..64).map(|_| StandardNormal.sample(&mut rng)).collect();
        let best: Vec<f64> = NOISE_LEVELS
            .iter()
            .map(|&sigma| {
                let y: Vec<f64> = clean.iter().zip(&z).map(|(c, e)| c + a.noise_scale * sigma * e).collect();
                let path = run_itale(&y, &a, &topo, &EdgeCost::L0Indicator, &ItaleConfig::default()).unwrap();
                (0..path.len()).map(|k| l2_err(&path.signal(k), &truth)).fold(f64::INFINITY, f64::min)
            })
            .collect();
        for (j, w) in best.windows(2).enumerate() {
            ratios[j].push(w[1] / w[0]);
        }
    }
    let medians: Vec<f64> = ratios.into_iter().map(median).collect();
    let pass = medians.iter().all(|&m| m <= NOISE_RATIO_MAX);
    outcome(pass, format!("median best-error ratio per doubling {medians:.3?} (limit {NOISE_RATIO_MAX})"))
}

// ---------------------------------------------------------------- criterion 7

fn fourier_correctness() -> Outcome {
    let law = SamplingLaw::new(8, 8, 10.0).unwrap();
    let op = fourier_weighted_design(&law, 40, 7).unwrap();
    let Backing::FourierWeighted(f) = &op.backing else { unreachable!() };
    let n = f.indices.len();
    let mut rng = ChaCha20Rng::seed_from_u64(77);
    let mut forward_err = 0.0f64;
    let mut adjoint_err = 0.0f64;
    let mut layout_ok = true;
    for _ in 0..100 {
        let x: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ax = op.apply(&x).unwrap();
        for (r, &(i, j)) in f.indices.iter().enumerate() {
            let (mut re, mut im) = (0.0, 0.0);
            for k in 0..8 {
                for l in 0..8 {
                    let phase = 2.0 * std::f64::consts::PI * ((i * k) as f64 / 8.0 + (j * l) as f64 / 8.0);
                    re += x[k * 8 + l] * phase.cos();
                    im += x[k * 8 + l] * phase.sin();
                }
            }
            let w = 1.0 / (8.0 * (n as f64 * law.mass(i, j)).sqrt());
            forward_err = forward_err.max((ax[r] - re * w).abs()).max((ax[n + r] - im * w).abs());
        }
        let lhs: f64 = ax.iter().zip(&u).map(|(a, b)| a * b).sum();
        let aty = op.adjoint(&u).unwrap();
        let rhs: f64 = x.iter().zip(&aty).map(|(a, b)| a * b).sum();
        adjoint_err = adjoint_err.max((lhs - rhs).abs() / lhs.abs().max(1.0));
        let complex = f.apply_complex(&x);
        layout_ok &= complex.iter().enumerate().all(|(r, c)| ax[r] == c.re && ax[n + r] == c.im);
        let split: f64 = ax.iter().map(|v| v * v).sum();
        let energy: f64 = complex.iter().map(|c| c.norm_sqr()).sum();
        layout_ok &= (split - energy).abs() <= 1e-14 * energy.max(1.0);
    }
    outcome(
        forward_err <= FOURIER_TOL && adjoint_err <= FOURIER_TOL && layout_ok,
        format!("forward err {forward_err:.2e}, adjoint err {adjoint_err:.2e}, real-split layout exact: {layout_ok}"),
    )
}

// ---------------------------------------------------------------- criterion 8

fn sampling_law_fidelity() -> Outcome {
    let (n1, n2) = (32, 32);
    let law = SamplingLaw::new(n1, n2, 10.0).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(808);
    let draws = law.sample(LAW_DRAWS, &mut rng);
    let mut rows = vec![0usize; n1];
    let mut cols = vec![0usize; n2];
    let mut joint = vec![0usize; n1 * n2];
    for &(i, j) in &draws {
        rows[i] += 1;
        cols[j] += 1;
        joint[i * n2 + j] += 1;
    }
    let total = LAW_DRAWS as f64;
    let tv = |counts: &[usize], mass: &dyn Fn(usize) -> f64| {
        0.5 * counts.iter().enumerate().map(|(k, &c)| (c as f64 / total - mass(k)).abs()).sum::<f64>()
    };
    let tv_rows = tv(&rows, &|i| law.nu1[i]);
    let tv_cols = tv(&cols, &|j| law.nu2[j]);
    let tv_joint = tv(&joint, &|k| law.mass(k / n2, k % n2));
    outcome(
        tv_rows <= LAW_TV_MAX && tv_cols <= LAW_TV_MAX,
        format!("axis TV {tv_rows:.4} / {tv_cols:.4} (limit {LAW_TV_MAX}); joint TV {tv_joint:.4} over 1024 cells, reported only"),
    )
}

// ---------------------------------------------------------------- criterion 9

fn grid_search(f: &dyn Fn(&[f64; 4]) -> f64, center: [f64; 4], half: f64, h: f64) -> ([f64; 4], f64) {
    let m = (half / h).round() as i64;
    let mut best = (center, f64::INFINITY);
    for i in -m..=m {
        for j in -m..=m {
            for k in -m..=m {
                for l in -m..=m {
                    let off = [i, j, k, l];
                    let x: [f64; 4] = std::array::from_fn(|d| center[d] + off[d] as f64 * h);
                    let v = f(&x);
                    if v < best.1 {
                        best = (x, v);
                    }
                }
            }
        }
    }
    best
}

fn tv_sanity() -> Outcome {
    let topo = line_graph(4).unwrap();
    let a = gaussian_design(4, 4, 909).unwrap();
    let y: Vec<f64> = a.apply(&[1.0, 1.0, -0.5, 0.25]).unwrap().iter().enumerate().map(|(i, v)| v + 0.05 * i as f64).collect();
    let lambda = 0.15;
    let f = |x: &[f64; 4]| tv_objective(x, &y, &a, lambda, &topo).unwrap();
    let (coarse, _) = grid_search(&f, [0.0; 4], 3.0, 0.1);
    let (mid, _) = grid_search(&f, coarse, 0.2, 0.02);
    let (_, oracle) = grid_search(&f, mid, 0.02, 0.004);
    let mut cfg = TvConfig::new(vec![lambda]);
    cfg.outer_iters = 5000;
    cfg.inner_iters = 200;
    cfg.tol = 1e-12;
    let solved = solve_tv(&y, &a, &topo, &cfg).unwrap()[0].objective;
    let gap = solved - oracle;

    let mut pair_err = 0.0f64;
    for (gap_in, lam) in [(2.0, 0.5), (2.0, 0.2), (0.5, 0.5), (3.0, 1.25)] {
        let x = tv_prox_on_edges(&[0.0, gap_in], lam, &[(0, 1)], 50).unwrap();
        let shrink = f64::min(gap_in, 2.0 * lam);
        pair_err = pair_err.max((x[0] - shrink / 2.0).abs()).max((x[1] - (gap_in - shrink / 2.0)).abs());
    }
    outcome(
        gap <= TV_ORACLE_SLACK && pair_err <= TV_PAIR_TOL,
        format!("solver - grid oracle = {gap:.2e} (limit {TV_ORACLE_SLACK}), pair prox err {pair_err:.2e}"),
    )
}

// --------------------------------------------------------------- criterion 10

fn spike_comparison() -> Outcome {
    let spec = ExperimentSpec { seeds: (1..=SPIKE_SEEDS).collect(), ..Default::default() };
    let start = Instant::now();
    let rows = run_experiment(&spec).unwrap();
    let dir = std::env::temp_dir().join("itale-acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    let csv_path = dir.join("spike_p200.csv");
    write_results_csv(&rows, false, std::fs::File::create(&csv_path).unwrap()).unwrap();
    let mut wins = 0;
    let mut failed = 0;
    let (mut it_cv, mut tv_cv, mut it_best, mut tv_best) = (0.0, 0.0, 0.0, 0.0);
    for seed in &spec.seeds {
        let itale = rows.iter().find(|r| r.seed == *seed && r.method == "itale").unwrap();
        let tv = rows.iter().find(|r| r.seed == *seed && r.method == "tv").unwrap();
        failed += itale.error.is_some() as usize + tv.error.is_some() as usize;
        wins += (itale.rmse < tv.rmse) as usize;
        it_cv += itale.rmse / SPIKE_SEEDS as f64;
        tv_cv += tv.rmse / SPIKE_SEEDS as f64;
        it_best += itale.best_rmse / SPIKE_SEEDS as f64;
        tv_best += tv.best_rmse / SPIKE_SEEDS as f64;
    }
    let needed = (SPIKE_WIN_FRACTION * SPIKE_SEEDS as f64).ceil() as usize;
    outcome(
        failed == 0 && wins >= needed,
        format!(
            "ITALE CV RMSE below TV in {wins}/{SPIKE_SEEDS} seeds (need {needed}); mean CV RMSE itale {it_cv:.4} tv {tv_cv:.4}; \
             mean best itale {it_best:.4} tv {tv_best:.4}; table at {}; {:.0}s",
            csv_path.display(),
            start.elapsed().as_secs_f64()
        ),
    )
}

// --------------------------------------------------------------- criterion 11

fn cli_determinism() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let spec_path = root.path().join("spec.toml");
    std::fs::write(
        &spec_path,
        "signal = \"spike\"\np = 80\nn_segments = 2\nsegment_len = 8\nratios = [0.6]\nsigmas = [0.5]\n\
         seeds = [4, 5]\ngrid_count = 60\ntv_grid_count = 10\n",
    )
    .unwrap();
    let design = gaussian_design(50, 80, 12).unwrap();
    let design_path = root.path().join("design.bin");
    save_design(&design, &design_path).unwrap();
    let truth: Vec<f64> = (0..80).map(|i| if (20..40).contains(&i) { 2.0 } else { 0.0 }).collect();
    let y = design.apply(&truth).unwrap();
    let y_path = root.path().join("y.csv");
    std::fs::write(&y_path, y.iter().map(|v| format!("{v:e}\n")).collect::<String>()).unwrap();

    let bin = env!("CARGO_BIN_EXE_itale");
    let invocations: Vec<(Vec<String>, Vec<&str>)> = vec![
        (vec!["simulate".into(), "--spec".into(), spec_path.display().to_string()], vec!["results.csv"]),
        (
            vec![
                "recover".into(),
                "--design".into(),
                design_path.display().to_string(),
                "--measurements".into(),
                y_path.display().to_string(),
                "--graph".into(),
                "line:80".into(),
                "--out".into(),
                "unused".into(),
            ],
            vec!["path.csv", "signals.csv"],
        ),
        (
            ["crip-check", "--gaussian", "40", "--graph", "line:80", "--s", "1,4,9", "--samples", "50", "--seed", "3", "--out", "crip.csv"]
                .map(String::from)
                .to_vec(),
            vec!["crip.csv"],
        ),
    ];
    let mut compared = 0;
    for (args, files) in &invocations {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out_dir = root.path().join(format!("{}-{run}", args[0]));
            let status = Command::new(bin).args(args).env("ITALE_OUTPUT_DIR", &out_dir).output().unwrap();
            if !status.status.success() {
                return outcome(false, format!("{} failed: {}", args[0], String::from_utf8_lossy(&status.stderr)));
            }
            outputs.push(files.iter().map(|f| std::fs::read(out_dir.join(f)).unwrap()).collect::<Vec<_>>());
        }
        if outputs[0] != outputs[1] {
            return outcome(false, format!("{} outputs differ between runs", args[0]));
        }
        compared += files.len();
    }
    outcome(true, format!("{compared} CSV files byte-identical across two invocations"))
}

// --------------------------------------------------------------- criterion 12

fn random_orthonormal(p: usize, seed: u64) -> MeasurementOperator {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(p);
    while rows.len() < p {
        let mut v: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
        for _ in 0..2 {
            for r in &rows {
                let d: f64 = r.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(r).for_each(|(x, y)| *x -= d * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        rows.push(v);
    }
    MeasurementOperator::dense(DenseMatrix::new(p, p, rows.concat()).unwrap())
}

fn crip_honesty() -> Outcome {
    let topo = lattice_graph(8, 8).unwrap();
    let s_list = [1, 3, 8, 20, 50, 100];
    let ortho = probe_crip(&random_orthonormal(64, 12), &topo, &s_list, 100, 5).unwrap();
    let worst = ortho.records.iter().map(|r| r.rho_hat).fold(0.0, f64::max);
    let zero = MeasurementOperator::dense(DenseMatrix::new(10, 64, vec![0.0; 640]).unwrap());
    let zero_report = probe_crip(&zero, &topo, &s_list, 20, 5).unwrap();
    let all_falsified = zero_report.records.iter().all(|r| r.falsified());
    outcome(
        worst <= CRIP_ORTHO_MAX && all_falsified,
        format!("orthonormal max rho_hat {worst:.2e} (limit {CRIP_ORTHO_MAX:e}); zero design falsified at all {} levels: {all_falsified}", s_list.len()),
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |id: u32, name: &'static str, o: Outcome| {
        println!("criterion {id:>2} {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, name, o));
    };

    report(1, "min-cut exactness", min_cut_exactness());

    let (violations, non_monotone, calls, secs) = expansion_guarantee();
    report(
        2,
        "alpha-expansion 2-approximation",
        outcome(
            violations == 0 && secs < EXPANSION_BUDGET_SECS,
            format!("{calls} instances, {violations} violations, {secs:.2}s"),
        ),
    );

    let runs = noiseless_runs();
    let path_monotone = runs.iter().all(|r| r.path.iterates.iter().all(|it| it.denoise_monotone));
    report(
        3,
        "energy monotonicity",
        outcome(
            non_monotone == 0 && path_monotone,
            format!("{non_monotone}/{calls} non-monotone calls; {} ITALE paths monotone: {path_monotone}", runs.len()),
        ),
    );
    report(4, "noiseless exact recovery", exact_recovery(&runs));
    report(5, "geometric error envelope", geometric_envelope(&runs));
    report(6, "noise proportionality", noise_proportionality());
    report(7, "Fourier operator correctness", fourier_correctness());
    report(8, "sampling-law fidelity", sampling_law_fidelity());
    report(9, "TV baseline sanity", tv_sanity());
    report(10, "spike signal ITALE vs TV", spike_comparison());
    report(11, "CLI determinism", cli_determinism());
    report(12, "cRIP probe honesty", crip_honesty());

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed: {failed:?}");
        std::process::exit(1);
    }
}
