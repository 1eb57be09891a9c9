//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines always appear in `cargo test` output.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Binomial, DiscreteCDF};

use bqe_grover::anf::{brute_force_solve, generate_system, random_bqe, AnfPoly, BqeSystem};
use bqe_grover::circuit::{Circuit, CostModel};
use bqe_grover::compress::compress;
use bqe_grover::experiment::{generate_corpus, solve, sweep_split, GenConfig, PlanChoice, SolveConfig, SweepConfig};
use bqe_grover::grover::{
    apply_diffusion, run_randomized_with, run_vanilla, vanilla_iteration_count, vanilla_success, RunOptions,
    SplitPlan, TwoLevelModel,
};
use bqe_grover::oracle::{
    build_oracle, capacity_f, oracle_from_queue, ucircuit, vanilla_stack_oracle, EquationQueue, OracleSpec,
};
use bqe_grover::statevec::{signed_permutation_action, StateVector};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

// ---------------------------------------------------------------------------
// Independent closed forms, written out from the printed theorems.

fn choose(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

fn thm_n(l: u64, m: u64) -> u64 {
    if m == 1 {
        1
    } else if l + 1 >= m {
        1 << (m - 2)
    } else {
        (0..=l).map(|j| choose(m - 2, j)).sum()
    }
}

fn cor_f(l: u64, m: u64) -> u64 {
    if l + 1 >= m {
        1 << (m - 1)
    } else {
        (0..=l).map(|j| choose(m - 1, j)).sum()
    }
}

fn block_sum(l: u64, top: u64) -> u64 {
    (1..=l).map(|j| choose(top, j - 1) << (j - 1)).sum::<u64>() + (0..=l).map(|j| choose(top, j) << j).sum::<u64>()
}

fn thm_k(l: u64, m: u64) -> u64 {
    if m == 1 {
        1
    } else if l + 1 >= m {
        2 * 3u64.pow((m - 2) as u32)
    } else {
        block_sum(l, m - 2)
    }
}

/// The level-ℓ oracle on m ancillae is U(ℓ, m+1) with its top MCX swapped
/// for an MCZ, so its block count is K(ℓ, m+1).
fn cor_g_corrected(l: u64, m: u64) -> u64 {
    thm_k(l, m + 1)
}

/// As printed, with the closed-form branch starting at ℓ = m − 1.
fn cor_g_printed(l: u64, m: u64) -> u64 {
    if l + 1 >= m {
        2 * 3u64.pow((m - 1) as u32)
    } else {
        block_sum(l, m - 1)
    }
}

// ---------------------------------------------------------------------------

const TABLE_1: [[u64; 10]; 10] = [
    [1, 2, 3, 4, 5, 6, 7, 8, 9, 10],
    [1, 2, 4, 7, 11, 16, 22, 29, 37, 46],
    [1, 2, 4, 8, 15, 26, 42, 64, 93, 130],
    [1, 2, 4, 8, 16, 31, 57, 99, 163, 256],
    [1, 2, 4, 8, 16, 32, 63, 120, 219, 382],
    [1, 2, 4, 8, 16, 32, 64, 127, 247, 466],
    [1, 2, 4, 8, 16, 32, 64, 128, 255, 502],
    [1, 2, 4, 8, 16, 32, 64, 128, 256, 511],
    [1, 2, 4, 8, 16, 32, 64, 128, 256, 512],
    [1, 2, 4, 8, 16, 32, 64, 128, 256, 512],
];

fn c1_capacity_table() -> Outcome {
    let mut matches = 0;
    let mut bad = Vec::new();
    for l in 1..=10 {
        for m in 1..=10 {
            if capacity_f(l, m) == TABLE_1[l - 1][m - 1] {
                matches += 1;
            } else {
                bad.push((l, m));
            }
        }
    }
    outcome(bad.is_empty(), format!("{matches}/100 cells match; mismatches {bad:?}"))
}

fn random_system(rng: &mut ChaCha8Rng, n: usize, r: usize) -> BqeSystem {
    BqeSystem::new(n, (0..r).map(|_| random_bqe(n, rng)).collect()).unwrap()
}

fn c2_oracle_exactness() -> Outcome {
    let styles = [OracleSpec::stack(0), OracleSpec::recursive(2, 3), OracleSpec::recursive(2, 4), OracleSpec::recursive(3, 4)];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut systems, mut worst, mut failures) = (0, 0.0f64, 0);
    for spec in styles {
        for _ in 0..15 {
            let n = rng.gen_range(2..=6);
            let cap = if spec.ancillas == 0 { 7 } else { capacity_f(spec.level, spec.ancillas).min(7) as usize };
            let r = rng.gen_range(1..=cap);
            let system = random_system(&mut rng, n, r);
            let circuit = if spec.ancillas == 0 {
                vanilla_stack_oracle(&system, r).unwrap()
            } else {
                build_oracle(spec.level, spec.ancillas, &system).unwrap()
            };
            let solutions: BTreeSet<u64> = brute_force_solve(&system).unwrap().into_iter().collect();
            // Dense run on a superposition with distinct amplitudes.
            let n_anc = circuit.n_anc();
            let dim = 1usize << (n + n_anc);
            let mut amps = vec![Complex64::new(0.0, 0.0); dim];
            for x in 0..1usize << n {
                amps[x << n_anc] = Complex64::new(1.0 + x as f64, 0.5 - x as f64 / 7.0);
            }
            let mut state = StateVector::from_amplitudes(n, n_anc, amps).unwrap();
            let before = state.clone();
            state.apply_circuit(&circuit).unwrap();
            let mut err = state.ancilla_leakage().sqrt();
            for x in 0..1usize << n {
                let sign = if solutions.contains(&(x as u64)) { -1.0 } else { 1.0 };
                err = err.max((state.data_amplitude(x) - before.data_amplitude(x) * sign).norm());
            }
            // Basis-by-basis on the full register's ancilla-zero inputs.
            let inputs: Vec<usize> = (0..1usize << n).map(|x| x << n_anc).collect();
            let action = signed_permutation_action(&circuit, &inputs).unwrap();
            let exact = action.iter().enumerate().all(|(x, &(out, s))| {
                out == x << n_anc && s == if solutions.contains(&(x as u64)) { -1.0 } else { 1.0 }
            });
            if !exact || err > 1e-10 {
                failures += 1;
            }
            worst = worst.max(err);
            systems += 1;
        }
    }
    outcome(failures == 0 && systems >= 50, format!("{systems} systems, {failures} failures, max amplitude error {worst:.1e}"))
}

fn c3_formula_agreement() -> Outcome {
    let n_data = 2;
    let supply: Vec<AnfPoly> = (0..1000).map(|i| AnfPoly::from_index_lists([vec![i % 2]])).collect();
    let mut mismatches = Vec::new();
    let mut printed_g_differs = Vec::new();
    for l in 1..=7usize {
        for m in 1..=7usize {
            let (lu, mu) = (l as u64, m as u64);
            let mut q = EquationQueue::new(&supply);
            let u = ucircuit(l, m, n_data, &mut q).unwrap();
            if q.consumed() as u64 != thm_n(lu, mu) || u.function_blocks != thm_k(lu, mu) {
                mismatches.push(format!("U({l},{m})"));
            }
            let mut q = EquationQueue::new(&supply);
            let o = oracle_from_queue(l, m, n_data, &mut q).unwrap();
            if o.equations_used as u64 != cor_f(lu, mu) || o.function_blocks != cor_g_corrected(lu, mu) {
                mismatches.push(format!("oracle({l},{m})"));
            }
            if cor_g_printed(lu, mu) != o.function_blocks {
                printed_g_differs.push((l, m));
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "98 constructions vs N, K, F, G; mismatches {mismatches:?}; note: the printed G closed form \
             (branch l >= m-1) differs from the construction at l = m-1 for {printed_g_differs:?}, \
             where G(l,m) = K(l,m+1) places it in the sum branch"
        ),
    )
}

fn same_action(a: &Circuit, b: &Circuit) -> bool {
    let inputs: Vec<usize> = (0..1usize << a.n_qubits()).collect();
    signed_permutation_action(a, &inputs).unwrap() == signed_permutation_action(b, &inputs).unwrap()
}

fn c4_compression() -> Outcome {
    let unit = CostModel::unit();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let configs = [(1, 4), (1, 6), (2, 3), (2, 4), (2, 5), (3, 4), (3, 5)];
    let (mut count, mut bad) = (0, 0);
    for (i, &(l, m)) in configs.iter().cycle().take(35).enumerate() {
        let n = 12 - m - (i % 3);
        let cap = capacity_f(l, m) as usize;
        let r = rng.gen_range(1..=cap);
        let system = random_system(&mut rng, n, r);
        let c = build_oracle(l, m, &system).unwrap();
        let z = compress(&c);
        if !same_action(&c, &z) || z.depth(&unit) > c.depth(&unit) {
            bad += 1;
        }
        count += 1;
    }
    let corpus = generate_corpus(&GenConfig { n: 12, min_solutions: 1, max_solutions: 1, count: 15, seed: 12 }).unwrap();
    let reductions: Vec<f64> = corpus
        .iter()
        .map(|g| {
            let sub = g.system.select(&(0..7).collect::<Vec<_>>()).unwrap();
            let c = vanilla_stack_oracle(&sub, 7).unwrap();
            1.0 - compress(&c).depth(&unit) as f64 / c.depth(&unit) as f64
        })
        .collect();
    let mean = reductions.iter().sum::<f64>() / reductions.len() as f64;
    outcome(
        bad == 0 && count >= 30 && mean >= 0.30,
        format!(
            "{count} oracles at n+m <= 12, {bad} action/depth violations; l=1 n=12 m=7 mean depth reduction {:.1}% over 15 systems (unit costs)",
            100.0 * mean
        ),
    )
}

fn c5_vanilla_law() -> Outcome {
    let mut worst = 0.0f64;
    let mut min_final = 1.0f64;
    for n in [6usize, 8, 10] {
        for m in [1u64, 3] {
            let system = generate_system(n, m, m, 500 + n as u64 * 10 + m).unwrap();
            let big_n = 1u64 << n;
            let k = vanilla_iteration_count(big_n, m).unwrap();
            let run = run_vanilla(&system, &OracleSpec::minimal(2, system.len()), k, 1, 0).unwrap();
            for (i, p) in run.trace.iter().enumerate() {
                worst = worst.max((p - vanilla_success(big_n, m, i as u64).unwrap()).abs());
            }
            min_final = min_final.min(run.trace[k as usize]);
        }
    }
    outcome(
        worst <= 1e-9 && min_final >= 0.95,
        format!("max |p_k - sin^2((2k+1)theta/2)| = {worst:.1e}; min probability at K = {min_final:.4}"),
    )
}

fn c6_counterexample() -> Outcome {
    let f1 = AnfPoly::from_index_lists([vec![0], vec![]]);
    let f2 = AnfPoly::from_index_lists([vec![1], vec![]]);
    let system = BqeSystem::new(2, vec![f1, f2]).unwrap();
    let plan = SplitPlan::cyclic(vec![vec![0], vec![1]], 2).unwrap();
    let opts = RunOptions { record_amplitudes: true, ..RunOptions::default() };
    let run = run_randomized_with(&system, &OracleSpec::stack(1), &plan, 8, 1, 0, &opts).unwrap();
    let printed = [[-1.0, -1.0, 1.0, 1.0], [1.0, -1.0, -1.0, 1.0], [-1.0, 1.0, -1.0, 1.0], [1.0, 1.0, 1.0, 1.0]];
    let real = |k: usize| -> Vec<f64> {
        assert!(run.amplitudes[k].iter().all(|a| a.im == 0.0));
        run.amplitudes[k].iter().map(|a| a.re * 2.0).collect()
    };
    let first_three = (0..3).all(|i| real(i + 1) == printed[i]);
    let g4 = real(4);
    let fourth_exact = g4 == printed[3];
    let fourth_up_to_phase = g4.iter().map(|v| -v).collect::<Vec<_>>() == printed[3];
    let period = (1..=4).all(|k| real(k + 4).iter().zip(real(k)).all(|(a, b)| *a == -b)) && real(8) == real(0);
    outcome(
        first_three && (fourth_exact || fourth_up_to_phase) && period,
        format!(
            "G1..G3 bit-exact: {first_three}; G4 = {g4:?}/2 ({}); states repeat every 4 steps up to sign -1, exactly every 8: {period}",
            if fourth_exact { "exact" } else { "printed vector times global phase -1" }
        ),
    )
}

fn c7_model() -> Outcome {
    let (n_states, m, mtilde, runs, kmax) = (256usize, 1usize, 8.0, 400usize, 15usize);
    let model = TwoLevelModel::new(n_states as f64, m as f64, mtilde).unwrap();
    let q = (mtilde - m as f64) / (n_states - m) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // Per K: sums and sums of squares of (a, mean b).
    let mut stats = vec![[0.0f64; 4]; kmax + 1];
    for _ in 0..runs {
        let mut state = StateVector::init_uniform(8, 0).unwrap();
        for (k, s) in stats.iter_mut().enumerate() {
            if k > 0 {
                for (x, a) in state.amplitudes_mut().iter_mut().enumerate() {
                    if x < m || rng.gen_bool(q) {
                        *a = -*a;
                    }
                }
                apply_diffusion(&mut state).unwrap();
            }
            let amps = state.amplitudes();
            let a = amps[0].re;
            let b = amps[m..].iter().map(|z| z.re).sum::<f64>() / (n_states - m) as f64;
            s[0] += a;
            s[1] += a * a;
            s[2] += b;
            s[3] += b * b;
        }
    }
    let mut worst_z = 0.0f64;
    let mut all_ok = true;
    for (k, s) in stats.iter().enumerate() {
        let want = model.evolve(k as u64);
        for (c, w) in [(0usize, want[0]), (2, want[1])] {
            let mean = s[c] / runs as f64;
            let var = (s[c + 1] / runs as f64 - mean * mean).max(0.0) * runs as f64 / (runs - 1) as f64;
            let se = (var / runs as f64).sqrt();
            let diff = (mean - w).abs();
            if se < 1e-12 {
                all_ok &= diff <= 1e-12;
            } else {
                worst_z = worst_z.max(diff / se);
                all_ok &= diff <= 3.0 * se;
            }
        }
    }
    let vanilla = TwoLevelModel::new(256.0, 1.0, 1.0).unwrap();
    let kv = vanilla_iteration_count(256, 1).unwrap();
    let exact_err = vanilla
        .trace(2 * kv)
        .iter()
        .enumerate()
        .map(|(k, p)| (p - vanilla_success(256, 1, k as u64).unwrap()).abs())
        .fold(0.0, f64::max);
    outcome(
        all_ok && exact_err <= 1e-12,
        format!(
            "{runs} runs, K <= {kmax}: max |mean - model| / SE = {worst_z:.2} (limit 3); M~=M vs sin^2 law for K <= {}: {exact_err:.1e}",
            2 * kv
        ),
    )
}

fn c8_end_to_end() -> Outcome {
    let corpus = generate_corpus(&GenConfig { n: 10, min_solutions: 1, max_solutions: 1, count: 20, seed: 8 }).unwrap();
    let mut successes = 0u64;
    let mut bogus = 0;
    for g in &corpus {
        let cfg = SolveConfig {
            level: 2,
            strategy: PlanChoice::Random,
            split_factor: 1.5,
            nominal: 0.8,
            shots: Some(256),
            seed: g.seed,
            ..SolveConfig::default()
        };
        let rec = solve(&g.system, &cfg).unwrap();
        if rec.success {
            successes += 1;
        }
        if rec.verified.iter().any(|x| !g.solutions.contains(x)) {
            bogus += 1;
        }
    }
    let n = corpus.len() as u64;
    // One-sided test of H0: rate >= 0.8; reject when P(X <= x) < 0.05.
    let p_value = Binomial::new(0.8, n).unwrap().cdf(successes);
    outcome(
        p_value >= 0.05 && bogus == 0,
        format!("{successes}/{n} runs found a verified solution (256 shots, factor 1.5, nominal 0.8); one-sided binomial p = {p_value:.3}"),
    )
}

fn c9_split_sweep() -> Outcome {
    let mut slopes = Vec::new();
    for seed in 1..=5 {
        let cfg = SweepConfig { n: 12, seed, ..SweepConfig::default() };
        let report = sweep_split(&cfg).unwrap();
        slopes.push(report.summary["slope"].as_f64().unwrap());
    }
    let negative = slopes.iter().filter(|s| **s < 0.0).count();
    outcome(negative >= 4, format!("slopes over factors 1.0-2.0 at n=12: {slopes:.3?}; {negative}/5 negative"))
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_bqe-grover")
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn c10_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let t = |name: &str| tmp.path().join(name).to_string_lossy().into_owned();
    let mut differing = Vec::new();
    let mut failed = Vec::new();

    let (ga, gb) = (t("gen_a"), t("gen_b"));
    for dir in [&ga, &gb] {
        if !cli(&["--seed", "5", "--out", dir, "gen", "--n", "6", "--count", "3"]).status.success() {
            failed.push("gen");
        }
    }
    if read_dir_bytes(Path::new(&ga)) != read_dir_bytes(Path::new(&gb)) {
        differing.push("gen".to_string());
    }
    let system = format!("{ga}/system_000.json");
    let system2 = format!("{ga}/system_001.json");
    let circuit = t("circuit.txt");
    if !cli(&["compile", "--system", &system, "--compress", "--circuit-out", &circuit]).status.success() {
        failed.push("compile --circuit-out");
    }

    let commands: Vec<(&str, Vec<String>)> = vec![
        ("capacity", vec!["capacity".into()]),
        ("compile", vec!["compile".into(), "--system".into(), system.clone(), system2.clone(), "--compress".into()]),
        ("compress", vec!["compress".into(), "--circuit".into(), circuit.clone()]),
        (
            "solve",
            ["solve", "--system", &system, "--strategy", "random", "--split-factor", "1.5", "--shots", "64"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        ),
        (
            "sweep-split",
            ["sweep-split", "--n", "8", "--samples", "2", "--factors", "1.0,1.5,2.0"].iter().map(|s| s.to_string()).collect(),
        ),
        (
            "success-heatmap",
            ["success-heatmap", "--n", "5,6", "--shots", "1,16", "--samples", "2"].iter().map(|s| s.to_string()).collect(),
        ),
    ];
    for (name, args) in &commands {
        for format in ["csv", "json"] {
            let mut outputs = Vec::new();
            for run in ["a", "b"] {
                let out = t(&format!("{name}_{format}_{run}"));
                let mut full = vec!["--seed".to_string(), "3".into(), "--format".into(), format.into(), "--out".into(), out.clone()];
                full.extend(args.iter().cloned());
                let refs: Vec<&str> = full.iter().map(String::as_str).collect();
                let res = cli(&refs);
                if !res.status.success() {
                    failed.push(name);
                }
                outputs.push(std::fs::read(&out).unwrap_or_default());
            }
            if outputs[0] != outputs[1] || outputs[0].is_empty() {
                differing.push(format!("{name}/{format}"));
            }
        }
    }
    outcome(
        differing.is_empty() && failed.is_empty(),
        format!("7 commands re-run with identical config; differing outputs {differing:?}; failed runs {failed:?}"),
    )
}

fn main() {
    // `cargo test -- <filter>` passes arguments; honor `--list` so tooling
    // that enumerates tests does not run the suite.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("capacity table", c1_capacity_table),
        ("oracle exactness", c2_oracle_exactness),
        ("formula/construction agreement", c3_formula_agreement),
        ("compression soundness", c4_compression),
        ("vanilla Grover law", c5_vanilla_law),
        ("counterexample cycle", c6_counterexample),
        ("2x2 model validity", c7_model),
        ("end-to-end randomized solve", c8_end_to_end),
        ("split-sweep direction", c9_split_sweep),
        ("determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let status = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("criterion {:>2} [{status}] {name} ({:.2}s): {}", i + 1, start.elapsed().as_secs_f64(), o.detail);
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
