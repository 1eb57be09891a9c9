//! Vanilla and randomized Grover search on the state-vector simulator, plus
//! the two-level expectation model used to pick iteration and shot counts.
//!
//! A randomized run applies `W · O_i` at iteration `i`, where `O_i` is the
//! oracle for a subset of the equations. Fewer equations per oracle means
//! shallower circuits, at the price of marking extra non-solutions. The
//! [`TwoLevelModel`] tracks the expected amplitude on solutions and on
//! non-solutions under the assumption that each non-solution is marked
//! independently with probability `(M̃ − M) / (N − M)`.
//!
//! `M̃` is rarely known in advance; [`estimate_mtilde`] uses the heuristic
//! `M · 2^(n − r)` for `r` equations, which treats each equation as halving
//! the candidate set.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::anf::{brute_force_solve, substream, BqeSystem};
use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::oracle::{compile, OracleSpec};
use crate::statevec::StateVector;

/// Ancilla mass above which the diffusion refuses to run.
pub const LEAKAGE_TOLERANCE: f64 = 1e-8;

/// Problem size and run budget for one search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroverParams {
    /// Search space size `N = 2^n`.
    pub n_states: u64,
    /// True solution count `M`.
    pub solutions: u64,
    /// Rotation angle per iteration.
    pub theta: f64,
    pub iterations: u64,
    pub shots: u64,
    /// Failure budget.
    pub epsilon: f64,
}

impl GroverParams {
    pub fn new(n_states: u64, solutions: u64, iterations: u64, shots: u64, epsilon: f64) -> Result<Self> {
        if solutions == 0 || solutions >= n_states {
            return Err(Error::Input(format!("need 0 < M < N, got M={solutions}, N={n_states}")));
        }
        if iterations == 0 || shots == 0 {
            return Err(Error::Input("iteration and shot counts must be at least 1".into()));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Input(format!("failure budget must lie in (0, 1), got {epsilon}")));
        }
        Ok(GroverParams { n_states, solutions, theta: rotation_angle(n_states, solutions)?, iterations, shots, epsilon })
    }
}

/// `θ = 2·asin √(M/N)`.
pub fn rotation_angle(n_states: u64, solutions: u64) -> Result<f64> {
    if solutions == 0 || solutions > n_states {
        return Err(Error::Input(format!("need 0 < M <= N, got M={solutions}, N={n_states}")));
    }
    Ok(2.0 * (solutions as f64 / n_states as f64).sqrt().asin())
}

/// `round(acos √(M/N) / θ)`: the iteration count that brings the state
/// closest to the solution subspace.
pub fn vanilla_iteration_count(n_states: u64, solutions: u64) -> Result<u64> {
    if solutions == 0 || solutions >= n_states {
        return Err(Error::Input(format!(
            "iteration count is undefined for M={solutions}, N={n_states}; need 1 <= M < N"
        )));
    }
    let theta = rotation_angle(n_states, solutions)?;
    Ok(((solutions as f64 / n_states as f64).sqrt().acos() / theta).round() as u64)
}

/// `sin²((2k+1)θ/2)`: solution probability after `k` vanilla iterations.
pub fn vanilla_success(n_states: u64, solutions: u64, k: u64) -> Result<f64> {
    let theta = rotation_angle(n_states, solutions)?;
    Ok(((2 * k + 1) as f64 * theta / 2.0).sin().powi(2))
}

/// The reflection `c ↦ 2⟨c⟩ − c` on the data amplitudes of the all-zero
/// ancilla block. Fails if the ancillae carry more than
/// [`LEAKAGE_TOLERANCE`] probability, since the oracle must leave them clean.
pub fn apply_diffusion(state: &mut StateVector) -> Result<()> {
    let leak = state.ancilla_leakage();
    if leak > LEAKAGE_TOLERANCE {
        return Err(Error::Contract(format!("ancillae hold probability {leak:.3e} before diffusion")));
    }
    let n_anc = state.n_anc();
    let dim = 1usize << state.n_data();
    let amps = state.amplitudes_mut();
    let mean = (0..dim).map(|x| amps[x << n_anc]).sum::<Complex64>() / dim as f64;
    for x in 0..dim {
        let a = &mut amps[x << n_anc];
        *a = 2.0 * mean - *a;
    }
    Ok(())
}

/// Gate-level diffusion: `H X MCZ X H` on the data register is `−W`, and the
/// trailing `Z X Z X` on qubit 0 cancels that global sign.
pub fn diffusion_circuit(n_data: usize, n_anc: usize) -> Result<Circuit> {
    if n_data == 0 {
        return Err(Error::Input("diffusion needs at least one data qubit".into()));
    }
    let data: Vec<usize> = (0..n_data).collect();
    let mut gates: Vec<Gate> = data.iter().map(|&q| Gate::h(q)).collect();
    gates.extend(data.iter().map(|&q| Gate::x(q)));
    gates.push(Gate::mcz(data.clone()));
    gates.extend(data.iter().map(|&q| Gate::x(q)));
    gates.extend(data.iter().map(|&q| Gate::h(q)));
    gates.extend([Gate::z(0), Gate::x(0), Gate::z(0), Gate::x(0)]);
    Circuit::from_gates(n_data, n_anc, gates)
}

/// How the diffusion step is applied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionMode {
    /// The exact linear map of [`apply_diffusion`].
    #[default]
    Exact,
    /// Simulates [`diffusion_circuit`] gate by gate.
    Circuit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitStrategy {
    Cyclic,
    Random,
}

/// Which equations each iteration's oracle uses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub strategy: SplitStrategy,
    /// Cyclic groups, applied in order and repeated.
    pub groups: Vec<Vec<usize>>,
    /// Equations per iteration for the random strategy.
    pub per_iteration: usize,
    pub seed: u64,
    /// Total equations the plan draws from.
    pub equations: usize,
}

impl SplitPlan {
    /// Every iteration uses every equation: vanilla Grover.
    pub fn single(equations: usize) -> Result<Self> {
        SplitPlan::cyclic(vec![(0..equations).collect()], equations)
    }

    /// Cyclic plan from explicit groups, whose union must be `0..equations`.
    pub fn cyclic(groups: Vec<Vec<usize>>, equations: usize) -> Result<Self> {
        if equations == 0 || groups.is_empty() || groups.iter().any(Vec::is_empty) {
            return Err(Error::Input("a cyclic plan needs nonempty groups over at least one equation".into()));
        }
        let mut covered = vec![false; equations];
        for &i in groups.iter().flatten() {
            *covered
                .get_mut(i)
                .ok_or_else(|| Error::Input(format!("group index {i} out of range for {equations} equations")))? = true;
        }
        if let Some(missing) = covered.iter().position(|c| !c) {
            return Err(Error::Input(format!("equation {missing} is not in any group")));
        }
        let groups = groups
            .into_iter()
            .map(|mut g| {
                g.sort_unstable();
                g.dedup();
                g
            })
            .collect();
        Ok(SplitPlan { strategy: SplitStrategy::Cyclic, groups, per_iteration: 0, seed: 0, equations })
    }

    /// `groups` cyclic groups with equation `i` in group `i mod groups`.
    pub fn round_robin(equations: usize, groups: usize) -> Result<Self> {
        if groups == 0 || groups > equations {
            return Err(Error::Input(format!("cannot split {equations} equations into {groups} groups")));
        }
        let mut gs = vec![Vec::new(); groups];
        for i in 0..equations {
            gs[i % groups].push(i);
        }
        SplitPlan::cyclic(gs, equations)
    }

    /// A fresh uniform draw of `per_iteration` distinct equations at every
    /// iteration.
    pub fn random(equations: usize, per_iteration: usize, seed: u64) -> Result<Self> {
        if per_iteration == 0 || per_iteration > equations {
            return Err(Error::Input(format!(
                "cannot draw {per_iteration} of {equations} equations per iteration"
            )));
        }
        Ok(SplitPlan { strategy: SplitStrategy::Random, groups: Vec::new(), per_iteration, seed, equations })
    }

    /// `round(equations / factor)` equations per iteration, as cyclic
    /// round-robin groups or random draws.
    pub fn from_factor(strategy: SplitStrategy, equations: usize, factor: f64, seed: u64) -> Result<Self> {
        let r = equations_per_iteration(equations, factor)?;
        match strategy {
            SplitStrategy::Random => SplitPlan::random(equations, r, seed),
            SplitStrategy::Cyclic => SplitPlan::round_robin(equations, equations.div_ceil(r)),
        }
    }

    /// The largest group any iteration will use.
    pub fn max_group_size(&self) -> usize {
        match self.strategy {
            SplitStrategy::Cyclic => self.groups.iter().map(Vec::len).max().unwrap_or(0),
            SplitStrategy::Random => self.per_iteration,
        }
    }

    /// The group for every iteration `0..iterations`, in order.
    pub fn schedule(&self, iterations: u64) -> Vec<Vec<usize>> {
        match self.strategy {
            SplitStrategy::Cyclic => {
                (0..iterations).map(|i| self.groups[(i % self.groups.len() as u64) as usize].clone()).collect()
            }
            SplitStrategy::Random => {
                let mut rng = substream(self.seed, 0);
                (0..iterations)
                    .map(|_| {
                        let mut g = sample(&mut rng, self.equations, self.per_iteration).into_vec();
                        g.sort_unstable();
                        g
                    })
                    .collect()
            }
        }
    }
}

/// `round(R / factor)`, which must leave at least one equation.
pub fn equations_per_iteration(equations: usize, factor: f64) -> Result<usize> {
    if !factor.is_finite() || factor < 1.0 {
        return Err(Error::Input(format!("split factor must be a finite number >= 1, got {factor}")));
    }
    let r = (equations as f64 / factor).round() as usize;
    if r == 0 {
        return Err(Error::Input(format!("split factor {factor} leaves no equations out of {equations}")));
    }
    Ok(r)
}

/// Outcome of one simulated search.
#[derive(Clone, Debug, PartialEq)]
pub struct GroverRun {
    /// Solution probability before the first iteration and after each one.
    pub trace: Vec<f64>,
    /// Measured data assignments and their counts.
    pub histogram: BTreeMap<u64, u64>,
    /// Equation indices used by each iteration's oracle.
    pub schedule: Vec<Vec<usize>>,
    /// Data amplitudes (ancillae zero) before and after each iteration, if
    /// requested.
    pub amplitudes: Vec<Vec<Complex64>>,
    pub final_state: StateVector,
}

/// Knobs that do not change the result of a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub diffusion: DiffusionMode,
    pub record_amplitudes: bool,
}

fn data_block(state: &StateVector) -> Vec<Complex64> {
    (0..1usize << state.n_data()).map(|x| state.data_amplitude(x)).collect()
}

/// Runs `iterations` Grover steps, compiling each step's oracle from the
/// selected equations of `system`. Identical groups reuse one compiled
/// oracle, and every oracle shares the register of `spec`.
fn simulate(
    system: &BqeSystem,
    spec: &OracleSpec,
    schedule: Vec<Vec<usize>>,
    shots: u64,
    seed: u64,
    options: &RunOptions,
) -> Result<GroverRun> {
    let solutions = brute_force_solve(system)?;
    let mut oracles: BTreeMap<Vec<usize>, Circuit> = BTreeMap::new();
    for group in &schedule {
        if !oracles.contains_key(group) {
            oracles.insert(group.clone(), compile(&system.select(group)?, spec)?);
        }
    }
    let n_anc = oracles.values().next().map_or(spec.ancillas, Circuit::n_anc);
    let diffusion = match options.diffusion {
        DiffusionMode::Exact => None,
        DiffusionMode::Circuit => Some(diffusion_circuit(system.n(), n_anc)?),
    };
    let mut state = StateVector::init_uniform(system.n(), n_anc)?;
    let mut trace = vec![state.solution_probability(&solutions)];
    let mut amplitudes = Vec::new();
    if options.record_amplitudes {
        amplitudes.push(data_block(&state));
    }
    for group in &schedule {
        state.apply_circuit(&oracles[group])?;
        match &diffusion {
            None => apply_diffusion(&mut state)?,
            Some(w) => {
                let leak = state.ancilla_leakage();
                if leak > LEAKAGE_TOLERANCE {
                    return Err(Error::Contract(format!("ancillae hold probability {leak:.3e} before diffusion")));
                }
                state.apply_circuit(w)?;
            }
        }
        trace.push(state.solution_probability(&solutions));
        if options.record_amplitudes {
            amplitudes.push(data_block(&state));
        }
    }
    let histogram = state.measure_data(shots, seed)?;
    Ok(GroverRun { trace, histogram, schedule, amplitudes, final_state: state })
}

/// Vanilla Grover: the full-system oracle at every iteration.
pub fn run_vanilla(system: &BqeSystem, spec: &OracleSpec, iterations: u64, shots: u64, seed: u64) -> Result<GroverRun> {
    run_vanilla_with(system, spec, iterations, shots, seed, &RunOptions::default())
}

pub fn run_vanilla_with(
    system: &BqeSystem,
    spec: &OracleSpec,
    iterations: u64,
    shots: u64,
    seed: u64,
    options: &RunOptions,
) -> Result<GroverRun> {
    let all: Vec<usize> = (0..system.len()).collect();
    simulate(system, spec, vec![all; iterations as usize], shots, seed, options)
}

/// Randomized Grover: iteration `i` uses the oracle of the `i`-th group of
/// `plan`.
pub fn run_randomized(
    system: &BqeSystem,
    spec: &OracleSpec,
    plan: &SplitPlan,
    iterations: u64,
    shots: u64,
    seed: u64,
) -> Result<GroverRun> {
    run_randomized_with(system, spec, plan, iterations, shots, seed, &RunOptions::default())
}

pub fn run_randomized_with(
    system: &BqeSystem,
    spec: &OracleSpec,
    plan: &SplitPlan,
    iterations: u64,
    shots: u64,
    seed: u64,
    options: &RunOptions,
) -> Result<GroverRun> {
    if plan.equations != system.len() {
        return Err(Error::Input(format!(
            "plan covers {} equations but the system has {}",
            plan.equations,
            system.len()
        )));
    }
    simulate(system, spec, plan.schedule(iterations), shots, seed, options)
}

/// `M̃ = clamp(M · 2^(n − r), M, 2^n)`.
pub fn estimate_mtilde(solutions: u64, n: usize, r: usize) -> f64 {
    let n_states = (n as f64).exp2();
    let m = solutions as f64;
    if r >= n {
        return m.min(n_states);
    }
    (m * ((n - r) as f64).exp2()).clamp(m, n_states.max(m))
}

/// Expected amplitudes `(a, b)` on each solution and each non-solution under
/// randomly marking oracles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoLevelModel {
    pub n_states: f64,
    pub solutions: f64,
    pub mtilde: f64,
}

impl TwoLevelModel {
    pub fn new(n_states: f64, solutions: f64, mtilde: f64) -> Result<Self> {
        if !(solutions > 0.0 && solutions < n_states) {
            return Err(Error::Input(format!("need 0 < M < N, got M={solutions}, N={n_states}")));
        }
        if !(mtilde >= solutions && mtilde <= n_states) {
            return Err(Error::Input(format!("need M <= M̃ <= N, got M̃={mtilde}")));
        }
        Ok(TwoLevelModel { n_states, solutions, mtilde })
    }

    /// Expected oracle sign on a non-solution.
    pub fn nonsolution_sign(&self) -> f64 {
        (self.n_states + self.solutions - 2.0 * self.mtilde) / (self.n_states - self.solutions)
    }

    pub fn initial(&self) -> [f64; 2] {
        let a = self.n_states.sqrt().recip();
        [a, a]
    }

    /// One application of the expected operator `W · E[O]`.
    pub fn step(&self, [a, b]: [f64; 2]) -> [f64; 2] {
        let (oa, ob) = (-a, self.nonsolution_sign() * b);
        let s = 2.0 / self.n_states * (self.solutions * oa + (self.n_states - self.solutions) * ob);
        [s - oa, s - ob]
    }

    pub fn evolve(&self, iterations: u64) -> [f64; 2] {
        (0..iterations).fold(self.initial(), |v, _| self.step(v))
    }

    /// `M · a²`.
    pub fn success(&self, state: [f64; 2]) -> f64 {
        self.solutions * state[0] * state[0]
    }

    /// Success probability for `0..=iterations`.
    pub fn trace(&self, iterations: u64) -> Vec<f64> {
        let mut v = self.initial();
        let mut out = vec![self.success(v)];
        for _ in 0..iterations {
            v = self.step(v);
            out.push(self.success(v));
        }
        out
    }
}

pub fn model_evolve(model: &TwoLevelModel, iterations: u64) -> [f64; 2] {
    model.evolve(iterations)
}

/// `1 − (1 − p)^J`.
pub fn success_probability(p: f64, shots: u64) -> f64 {
    1.0 - (1.0 - p.clamp(0.0, 1.0)).powf(shots as f64)
}

/// A chosen `(J, K)` pair with its per-shot and overall success
/// probabilities under the model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JkChoice {
    pub shots: u64,
    pub iterations: u64,
    pub per_shot: f64,
    pub overall: f64,
}

fn meets(p: f64, shots: u64, epsilon: f64) -> bool {
    p > 1.0 - epsilon.powf(1.0 / shots as f64)
}

/// Smallest `J ≤ j_max` with `p > 1 − ε^(1/J)`, if any. The threshold falls
/// with `J`, so a binary search suffices.
fn min_shots(p: f64, epsilon: f64, j_max: u64) -> Option<u64> {
    if !meets(p, j_max, epsilon) {
        return None;
    }
    let (mut lo, mut hi) = (1, j_max);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if meets(p, mid, epsilon) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(lo)
}

fn check_budget(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Input(format!("failure budget must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

/// Minimizes `J·K` over `1 ≤ J ≤ j_max`, `1 ≤ K ≤ k_max` subject to the
/// model's per-shot success `p_K` satisfying `p_K > 1 − ε^(1/J)`. Ties go to
/// the smaller `K`, then the smaller `J`.
pub fn optimize_jk(model: &TwoLevelModel, epsilon: f64, j_max: u64, k_max: u64) -> Result<JkChoice> {
    check_budget(epsilon)?;
    if j_max == 0 || k_max == 0 {
        return Err(Error::Input("shot and iteration bounds must be at least 1".into()));
    }
    let mut best: Option<JkChoice> = None;
    let mut best_overall = 0.0f64;
    let mut v = model.initial();
    for k in 1..=k_max {
        if best.is_some_and(|b| k > b.shots * b.iterations) {
            break;
        }
        v = model.step(v);
        let p = model.success(v);
        best_overall = best_overall.max(success_probability(p, j_max));
        if let Some(j) = min_shots(p, epsilon, j_max) {
            if best.is_none_or(|b| j * k < b.shots * b.iterations) {
                best = Some(JkChoice { shots: j, iterations: k, per_shot: p, overall: success_probability(p, j) });
            }
        }
    }
    best.ok_or(Error::Infeasible { j_max, k_max, best: best_overall })
}

/// Fewest iterations meeting the budget with exactly `shots` shots.
pub fn min_iterations_for_shots(model: &TwoLevelModel, epsilon: f64, shots: u64, k_max: u64) -> Result<JkChoice> {
    check_budget(epsilon)?;
    if shots == 0 || k_max == 0 {
        return Err(Error::Input("shot and iteration bounds must be at least 1".into()));
    }
    let mut best_overall = 0.0f64;
    let mut v = model.initial();
    for k in 1..=k_max {
        v = model.step(v);
        let p = model.success(v);
        if meets(p, shots, epsilon) {
            return Ok(JkChoice { shots, iterations: k, per_shot: p, overall: success_probability(p, shots) });
        }
        best_overall = best_overall.max(success_probability(p, shots));
    }
    Err(Error::Infeasible { j_max: shots, k_max, best: best_overall })
}

/// The iteration count in `1..=k_max` with the highest model success.
pub fn best_iterations(model: &TwoLevelModel, shots: u64, k_max: u64) -> JkChoice {
    let mut v = model.initial();
    let mut best = JkChoice { shots, iterations: 0, per_shot: -1.0, overall: 0.0 };
    for k in 1..=k_max.max(1) {
        v = model.step(v);
        let p = model.success(v);
        if p > best.per_shot {
            best = JkChoice { shots, iterations: k, per_shot: p, overall: success_probability(p, shots) };
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anf::{generate_system, AnfPoly};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn counterexample() -> BqeSystem {
        let f1 = AnfPoly::from_index_lists([vec![0], vec![]]);
        let f2 = AnfPoly::from_index_lists([vec![1], vec![]]);
        BqeSystem::new(2, vec![f1, f2]).unwrap()
    }

    #[test]
    fn diffusion_examples() {
        let mut s = StateVector::init_uniform(2, 1).unwrap();
        let before = s.clone();
        apply_diffusion(&mut s).unwrap();
        for (a, b) in s.amplitudes().iter().zip(before.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
        let amps = [1.0, 1.0, -1.0, 1.0].map(|v| c(v / 2.0)).to_vec();
        let mut s = StateVector::from_amplitudes(2, 0, amps.clone()).unwrap();
        apply_diffusion(&mut s).unwrap();
        assert_eq!(s.amplitudes(), &[c(0.0), c(0.0), c(1.0), c(0.0)]);
        apply_diffusion(&mut s).unwrap();
        for (a, b) in s.amplitudes().iter().zip(&amps) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn diffusion_rejects_dirty_ancillae() {
        let mut s = StateVector::basis(2, 1, 1).unwrap();
        assert!(matches!(apply_diffusion(&mut s), Err(Error::Contract(_))));
    }

    #[test]
    fn diffusion_circuit_matches_exact_map() {
        for n in 1..=4 {
            let amps: Vec<Complex64> = (0..1 << n).map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64).cos() / 3.0)).collect();
            let mut padded = vec![c(0.0); 1 << (n + 1)];
            for (x, a) in amps.iter().enumerate() {
                padded[x << 1] = *a;
            }
            let mut exact = StateVector::from_amplitudes(n, 1, padded).unwrap();
            let mut gates = exact.clone();
            apply_diffusion(&mut exact).unwrap();
            gates.apply_circuit(&diffusion_circuit(n, 1).unwrap()).unwrap();
            for (a, b) in exact.amplitudes().iter().zip(gates.amplitudes()) {
                assert!((a - b).norm() < 1e-12, "n={n}");
            }
        }
    }

    #[test]
    fn iteration_count_examples() {
        assert_eq!(vanilla_iteration_count(4, 1).unwrap(), 1);
        assert_eq!(vanilla_iteration_count(1 << 20, 1).unwrap(), 804);
        assert!(vanilla_iteration_count(4, 3).unwrap() <= 1);
        assert!(vanilla_iteration_count(4, 0).is_err());
        assert!(vanilla_iteration_count(4, 4).is_err());
        assert!((rotation_angle(4, 1).unwrap() - std::f64::consts::FRAC_PI_3).abs() < 1e-15);
    }

    #[test]
    fn vanilla_two_qubits_one_iteration_is_certain() {
        // x0 ⊕ x1 ⊕ 1 = 0 and x1 ⊕ 1 = 0: only x = (0, 1).
        let f1 = AnfPoly::from_index_lists([vec![0], vec![1], vec![]]);
        let f2 = AnfPoly::from_index_lists([vec![1], vec![]]);
        let system = BqeSystem::new(2, vec![f1, f2]).unwrap();
        let run = run_vanilla(&system, &OracleSpec::stack(2), 1, 100, 7).unwrap();
        assert!((run.trace[0] - 0.25).abs() < 1e-12);
        assert!((run.trace[1] - 1.0).abs() < 1e-10);
        assert_eq!(run.histogram, BTreeMap::from([(1, 100)]));
    }

    #[test]
    fn vanilla_trace_follows_sine_law() {
        let system = generate_system(6, 1, 1, 5).unwrap();
        let k = vanilla_iteration_count(64, 1).unwrap();
        let run = run_vanilla(&system, &OracleSpec::minimal(2, system.len()), k, 10, 1).unwrap();
        for (i, p) in run.trace.iter().enumerate() {
            assert!((p - vanilla_success(64, 1, i as u64).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn circuit_diffusion_run_agrees() {
        let system = generate_system(5, 2, 2, 9).unwrap();
        let spec = OracleSpec::stack(system.len());
        let exact = run_vanilla(&system, &spec, 3, 50, 2).unwrap();
        let opts = RunOptions { diffusion: DiffusionMode::Circuit, record_amplitudes: false };
        let gates = run_vanilla_with(&system, &spec, 3, 50, 2, &opts).unwrap();
        for (a, b) in exact.trace.iter().zip(&gates.trace) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn counterexample_cycles_with_period_four() {
        let system = counterexample();
        let plan = SplitPlan::round_robin(2, 2).unwrap();
        let opts = RunOptions { record_amplitudes: true, ..RunOptions::default() };
        let run = run_randomized_with(&system, &OracleSpec::stack(1), &plan, 8, 10, 0, &opts).unwrap();
        // Four steps return the uniform state with a global sign of −1, so
        // the exact amplitudes repeat with period 8.
        let cycle = [
            [1.0, 1.0, 1.0, 1.0],
            [-1.0, -1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0, 1.0],
            [-1.0, 1.0, -1.0, 1.0],
        ];
        for (k, amps) in run.amplitudes.iter().enumerate() {
            let sign = if (k / 4) % 2 == 0 { 0.5 } else { -0.5 };
            let want = cycle[k % 4].map(|v| c(v * sign));
            assert_eq!(amps.as_slice(), want.as_slice(), "after {k} iterations");
        }
        assert!(run.trace.iter().all(|&p| (p - 0.25).abs() < 1e-12));
    }

    #[test]
    fn single_group_plan_matches_vanilla() {
        let system = generate_system(6, 1, 2, 11).unwrap();
        let spec = OracleSpec::minimal(2, system.len());
        let plan = SplitPlan::single(system.len()).unwrap();
        let a = run_vanilla(&system, &spec, 5, 64, 3).unwrap();
        let b = run_randomized(&system, &spec, &plan, 5, 64, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn plans() {
        let p = SplitPlan::round_robin(7, 3).unwrap();
        assert_eq!(p.groups, vec![vec![0, 3, 6], vec![1, 4], vec![2, 5]]);
        assert!(SplitPlan::cyclic(vec![vec![0], vec![2]], 3).is_err());
        let r = SplitPlan::random(10, 4, 5).unwrap();
        let s = r.schedule(50);
        assert_eq!(s, r.schedule(50));
        for g in &s {
            assert_eq!(g.len(), 4);
            assert!(g.windows(2).all(|w| w[0] < w[1]) && g[3] < 10);
        }
        assert_eq!(equations_per_iteration(12, 1.5).unwrap(), 8);
        assert!(equations_per_iteration(3, 10.0).is_err());
        assert_eq!(SplitPlan::from_factor(SplitStrategy::Cyclic, 10, 2.0, 0).unwrap().groups.len(), 2);
    }

    #[test]
    fn random_draws_are_uniform_over_equations() {
        let plan = SplitPlan::random(6, 2, 17).unwrap();
        let mut counts = [0u32; 6];
        for g in plan.schedule(6000) {
            g.iter().for_each(|&i| counts[i] += 1);
        }
        // Each index is drawn with probability 1/3; sd ≈ 36.5.
        for c in counts {
            assert!((f64::from(c) - 2000.0).abs() < 5.0 * 36.6, "{counts:?}");
        }
    }

    #[test]
    fn mtilde_examples() {
        assert_eq!(estimate_mtilde(1, 20, 11), 512.0);
        assert_eq!(estimate_mtilde(3, 8, 8), 3.0);
        assert_eq!(estimate_mtilde(3, 8, 12), 3.0);
        assert_eq!(estimate_mtilde(1, 8, 0), 256.0);
    }

    #[test]
    fn model_without_randomization_is_vanilla() {
        let m = TwoLevelModel::new(4.0, 1.0, 1.0).unwrap();
        assert!((m.success(m.evolve(1)) - 1.0).abs() < 1e-12);
        assert!((m.success(m.evolve(0)) - 0.25).abs() < 1e-15);
        let m = TwoLevelModel::new(1024.0, 3.0, 3.0).unwrap();
        let k = vanilla_iteration_count(1024, 3).unwrap();
        for (i, p) in m.trace(2 * k).iter().enumerate() {
            assert!((p - vanilla_success(1024, 3, i as u64).unwrap()).abs() < 1e-12);
        }
        assert!(TwoLevelModel::new(8.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn model_state_stays_normalized_in_expectation_only_when_exact() {
        // With M̃ > M the expected operator is a contraction on b.
        let m = TwoLevelModel::new(256.0, 1.0, 8.0).unwrap();
        assert!(m.nonsolution_sign() < 1.0 && m.nonsolution_sign() > 0.0);
        let v = m.evolve(10);
        assert!(m.solutions * v[0] * v[0] + (m.n_states - m.solutions) * v[1] * v[1] < 1.0);
    }

    #[test]
    fn success_probability_examples() {
        assert_eq!(success_probability(1.0, 3), 1.0);
        assert_eq!(success_probability(0.0, 3), 0.0);
        assert_eq!(success_probability(0.5, 2), 0.75);
    }

    #[test]
    fn optimizer_examples() {
        let m = TwoLevelModel::new(4.0, 1.0, 1.0).unwrap();
        let c = optimize_jk(&m, 0.01, 100, 100).unwrap();
        assert_eq!((c.shots, c.iterations), (1, 1));
        let m = TwoLevelModel::new(1024.0, 1.0, 1.0).unwrap();
        let c = optimize_jk(&m, 0.999_999, 100, 100).unwrap();
        assert_eq!((c.shots, c.iterations), (1, 1));
        assert!(matches!(optimize_jk(&m, 0.001, 1, 1), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn optimizer_agrees_with_exhaustive_grid() {
        let m = TwoLevelModel::new(256.0, 1.0, 8.0).unwrap();
        let ps = m.trace(40);
        for eps in [0.5, 0.2, 0.05, 0.001] {
            let mut best: Option<(u64, u64, u64)> = None;
            for k in 1..=40u64 {
                for j in 1..=64u64 {
                    if (1.0 - ps[k as usize]).powf(j as f64) < eps {
                        let key = (j * k, k, j);
                        if best.is_none_or(|b| key < b) {
                            best = Some(key);
                        }
                    }
                }
            }
            let (_, k, j) = best.unwrap();
            let c = optimize_jk(&m, eps, 64, 40).unwrap();
            assert_eq!((c.shots, c.iterations), (j, k), "eps={eps}");
        }
    }

    #[test]
    fn looser_budget_never_costs_more() {
        let m = TwoLevelModel::new(4096.0, 1.0, 64.0).unwrap();
        let mut last = u64::MAX;
        for eps in [0.001, 0.01, 0.05, 0.1, 0.2, 0.5, 0.9] {
            let c = optimize_jk(&m, eps, 4096, 200).unwrap();
            assert!(c.shots * c.iterations <= last);
            last = c.shots * c.iterations;
        }
    }

    #[test]
    fn fixed_shot_iterations() {
        let m = TwoLevelModel::new(1024.0, 1.0, 1.0).unwrap();
        let c = min_iterations_for_shots(&m, 0.2, 1, 100).unwrap();
        assert!(c.per_shot > 0.8);
        assert!(m.success(m.evolve(c.iterations - 1)) <= 0.8);
        let b = best_iterations(&m, 1, 100);
        let trace = m.trace(100);
        assert_eq!(b.per_shot, trace[1..].iter().cloned().fold(0.0, f64::max));
        assert!(b.per_shot >= vanilla_success(1024, 1, vanilla_iteration_count(1024, 1).unwrap()).unwrap() - 1e-12);
    }
}
