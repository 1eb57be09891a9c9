//! Oracle synthesis for boolean equation systems.
//!
//! Every oracle maps `|x⟩|0…0⟩ ↦ (−1)^{g(x)} |x⟩|0…0⟩`, where `g(x) = 1`
//! exactly when `x` satisfies all equations. Three constructions are
//! provided:
//!
//! * **product** — all equations multiplied into one polynomial and compiled
//!   onto a single ancilla. Correct but impractically deep; kept for
//!   comparison only.
//! * **stack** — one ancilla per equation, an MCZ across them, then the
//!   uncompute pass.
//! * **recursive** — the level-`ℓ` W-cycle built from `U(ℓ, j)` blocks, which
//!   packs up to [`capacity_f`]`(ℓ, m)` equations onto `m` ancillae.
//!
//! Ancillae are numbered from 1 in this module; ancilla `j` is qubit
//! `n_data + j - 1`.

use serde::{Deserialize, Serialize};

use crate::anf::{product_reduce, AnfPoly, BqeSystem};
use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleStyle {
    Product,
    Stack,
    Recursive,
}

/// Which construction to use, at which recursion level, on how many ancillae.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleSpec {
    pub level: usize,
    pub ancillas: usize,
    pub style: OracleStyle,
}

impl OracleSpec {
    pub fn recursive(level: usize, ancillas: usize) -> Self {
        OracleSpec { level, ancillas, style: OracleStyle::Recursive }
    }

    pub fn stack(ancillas: usize) -> Self {
        OracleSpec { level: 1, ancillas, style: OracleStyle::Stack }
    }

    pub fn product() -> Self {
        OracleSpec { level: 0, ancillas: 1, style: OracleStyle::Product }
    }

    /// The smallest recursive spec at `level` that holds `equations`.
    pub fn minimal(level: usize, equations: usize) -> Self {
        OracleSpec::recursive(level, min_ancillas(level, equations))
    }

    /// Equations this spec can hold.
    pub fn capacity(&self) -> u64 {
        match self.style {
            OracleStyle::Product => u64::MAX,
            OracleStyle::Stack => self.ancillas as u64,
            OracleStyle::Recursive => capacity_f(self.level, self.ancillas),
        }
    }
}

/// FIFO of equations in system order. Once exhausted, pops yield the zero
/// polynomial, which every assignment satisfies.
#[derive(Clone, Debug)]
pub struct EquationQueue<'a> {
    equations: &'a [AnfPoly],
    next: usize,
}

impl<'a> EquationQueue<'a> {
    pub fn new(equations: &'a [AnfPoly]) -> Self {
        EquationQueue { equations, next: 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.next >= self.equations.len()
    }

    pub fn pop(&mut self) -> Option<&'a AnfPoly> {
        let eq = self.equations.get(self.next)?;
        self.next += 1;
        Some(eq)
    }

    /// Real equations popped so far.
    pub fn consumed(&self) -> usize {
        self.next.min(self.equations.len())
    }
}

/// The function-controlled block for `f`: one X/CNOT/MCX per term onto
/// `target`, then a trailing X. Starting from `|0⟩`, the target ends in
/// `|1⟩` exactly when `f(x) = 0`. The zero polynomial yields a lone X.
pub fn function_controlled_gates(f: &AnfPoly, target: usize, n_data: usize) -> Result<Vec<Gate>> {
    if target < n_data {
        return Err(Error::Input(format!("target qubit {target} is a data qubit, not an ancilla")));
    }
    if let Some(v) = f.max_var() {
        if v >= n_data {
            return Err(Error::Input(format!("equation uses x{v} but only {n_data} data qubits exist")));
        }
    }
    let mut gates: Vec<Gate> = f.terms().map(|t| Gate::controlled_x(t.vars().to_vec(), target)).collect();
    gates.push(Gate::x(target));
    Ok(gates)
}

/// Sign-flips the zeros of a single equation using one ancilla: the
/// function-controlled block, a Z on the ancilla, and the block again.
pub fn single_equation_oracle(f: &AnfPoly, n_data: usize) -> Result<Circuit> {
    let mut circuit = Circuit::new(n_data, 1);
    let block = function_controlled_gates(f, n_data, n_data)?;
    circuit.extend(block.iter().cloned())?;
    circuit.push(Gate::z(n_data))?;
    circuit.extend(block.into_iter().rev())?;
    Ok(circuit)
}

/// Multiplies all equations into one and compiles it with
/// [`single_equation_oracle`].
pub fn product_oracle(system: &BqeSystem) -> Result<Circuit> {
    single_equation_oracle(&product_reduce(system)?, system.n())
}

/// Equation `i` onto ancilla `i`, an MCZ over all ancillae, then the forward
/// gates in reverse. Ancillae beyond the equation count are set by a lone X
/// so the MCZ still fires on solutions.
pub fn vanilla_stack_oracle(system: &BqeSystem, ancillas: usize) -> Result<Circuit> {
    if ancillas == 0 || system.len() > ancillas {
        return Err(Error::Capacity {
            equations: system.len(),
            level: 1,
            ancillas,
            capacity: ancillas as u64,
            required: system.len().max(1),
        });
    }
    let n = system.n();
    let zero = AnfPoly::zero();
    let mut forward = Vec::new();
    for j in 1..=ancillas {
        let f = system.equations().get(j - 1).unwrap_or(&zero);
        forward.extend(function_controlled_gates(f, n + j - 1, n)?);
    }
    let mut circuit = Circuit::new(n, ancillas);
    circuit.extend(forward.iter().cloned())?;
    circuit.push(Gate::mcz((n..n + ancillas).collect()))?;
    circuit.extend(forward.into_iter().rev())?;
    Ok(circuit)
}

/// Gates of a `U(ℓ, m)` block plus the number of function-controlled blocks
/// it contains.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct UBlock {
    pub gates: Vec<Gate>,
    pub function_blocks: u64,
}

impl UBlock {
    fn append(&mut self, other: &UBlock) {
        self.gates.extend_from_slice(&other.gates);
        self.function_blocks += other.function_blocks;
    }
}

fn function_block(queue: &mut EquationQueue<'_>, ancilla: usize, n_data: usize) -> Result<UBlock> {
    let zero = AnfPoly::zero();
    let f = queue.pop().unwrap_or(&zero);
    Ok(UBlock {
        gates: function_controlled_gates(f, n_data + ancilla - 1, n_data)?,
        function_blocks: 1,
    })
}

fn ancilla_mcx(m: usize, n_data: usize) -> Gate {
    Gate::controlled_x((n_data..n_data + m - 1).collect(), n_data + m - 1)
}

/// Builds `U(ℓ, m)`: afterwards ancilla `m` has been flipped exactly when all
/// equations behind the block hold, and ancillae `1..m` are restored.
///
/// Level 0 (and any level with `m = 1`) is a single function-controlled
/// block. Level 1 computes `m - 1` equations onto ancillae `m-1, …, 1`, ANDs
/// them into ancilla `m` with an MCX and uncomputes. Higher levels do the same
/// with `U(ℓ-1, j)` sub-blocks. Levels above `m` behave as level `m`.
///
/// When the queue is already empty the block degenerates to a lone X on
/// ancilla `m`, so enclosing MCX/MCZ gates see the slot as satisfied.
pub fn ucircuit(level: usize, m: usize, n_data: usize, queue: &mut EquationQueue<'_>) -> Result<UBlock> {
    assert!(m >= 1, "U blocks need at least one ancilla");
    if level > m {
        return ucircuit(m, m, n_data, queue);
    }
    if queue.is_empty() {
        return Ok(UBlock { gates: vec![Gate::x(n_data + m - 1)], function_blocks: 1 });
    }
    if level == 0 || m == 1 {
        return function_block(queue, m, n_data);
    }
    let mut subs = Vec::with_capacity(m - 1);
    for j in (1..m).rev() {
        let sub = if level == 1 {
            function_block(queue, j, n_data)?
        } else {
            ucircuit(level - 1, j, n_data, queue)?
        };
        subs.push(sub);
    }
    let mut out = UBlock::default();
    for sub in &subs {
        out.append(sub);
    }
    out.gates.push(ancilla_mcx(m, n_data));
    for sub in subs.iter().rev() {
        out.append(sub);
    }
    Ok(out)
}

/// A recursive oracle together with construction statistics.
#[derive(Clone, Debug)]
pub struct OracleBuild {
    pub circuit: Circuit,
    pub equations_used: usize,
    pub function_blocks: u64,
}

/// The level-`ℓ` oracle on `m` ancillae, filled from `queue` without a
/// capacity check: `U(ℓ-1, j)` for `j = m…1`, an MCZ on all ancillae, then
/// `U(ℓ-1, j)` for `j = 1…m`. Level 1 is the stack layout.
pub fn oracle_from_queue(level: usize, m: usize, n_data: usize, queue: &mut EquationQueue<'_>) -> Result<OracleBuild> {
    if level == 0 || m == 0 {
        return Err(Error::Input(format!("oracle needs level >= 1 and ancillas >= 1, got ({level}, {m})")));
    }
    let mut subs = Vec::with_capacity(m);
    for j in (1..=m).rev() {
        subs.push(ucircuit(level - 1, j, n_data, queue)?);
    }
    let mut block = UBlock::default();
    for sub in &subs {
        block.append(sub);
    }
    block.gates.push(Gate::mcz((n_data..n_data + m).collect()));
    for sub in subs.iter().rev() {
        block.append(sub);
    }
    Ok(OracleBuild {
        circuit: Circuit::from_gates(n_data, m, block.gates)?,
        equations_used: queue.consumed(),
        function_blocks: block.function_blocks,
    })
}

fn capacity_error(system: &BqeSystem, level: usize, m: usize) -> Error {
    Error::Capacity {
        equations: system.len(),
        level,
        ancillas: m,
        capacity: capacity_f(level, m),
        required: min_ancillas(level, system.len()),
    }
}

/// The level-`ℓ` recursive oracle for `system` on `m` ancillae, with
/// construction statistics. Level 1 falls back to the stack construction.
pub fn build_oracle_with_stats(level: usize, m: usize, system: &BqeSystem) -> Result<OracleBuild> {
    if level == 0 || m == 0 {
        return Err(Error::Input(format!("oracle needs level >= 1 and ancillas >= 1, got ({level}, {m})")));
    }
    if system.len() as u64 > capacity_f(level, m) {
        return Err(capacity_error(system, level, m));
    }
    if level == 1 {
        return Ok(OracleBuild {
            circuit: vanilla_stack_oracle(system, m)?,
            equations_used: system.len(),
            function_blocks: 2 * m as u64,
        });
    }
    oracle_from_queue(level, m, system.n(), &mut EquationQueue::new(system.equations()))
}

pub fn build_oracle(level: usize, m: usize, system: &BqeSystem) -> Result<Circuit> {
    Ok(build_oracle_with_stats(level, m, system)?.circuit)
}

/// Compiles `system` according to `spec`.
pub fn compile(system: &BqeSystem, spec: &OracleSpec) -> Result<Circuit> {
    match spec.style {
        OracleStyle::Product => product_oracle(system),
        OracleStyle::Stack => vanilla_stack_oracle(system, spec.ancillas),
        OracleStyle::Recursive => build_oracle(spec.level, spec.ancillas, system),
    }
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * u128::from(n - i) / u128::from(i + 1)) as u64
}

/// Equations held by `U(ℓ, m)`.
pub fn capacity_n(level: usize, m: usize) -> u64 {
    assert!(level >= 1 && m >= 1);
    let (l, m) = (level as u64, m as u64);
    if m == 1 {
        1
    } else if l + 1 >= m {
        1 << (m - 2)
    } else {
        (0..=l).map(|j| binomial(m - 2, j)).sum()
    }
}

/// Equations held by a level-`ℓ` oracle on `m` ancillae.
pub fn capacity_f(level: usize, m: usize) -> u64 {
    assert!(level >= 1 && m >= 1);
    let (l, m) = (level as u64, m as u64);
    if l + 1 >= m {
        1 << (m - 1)
    } else {
        (0..=l).map(|j| binomial(m - 1, j)).sum()
    }
}

/// Function-controlled blocks in `U(ℓ, m)`.
pub fn depth_k(level: usize, m: usize) -> u64 {
    assert!(level >= 1 && m >= 1);
    let (l, m) = (level as u64, m as u64);
    if m == 1 {
        1
    } else if l + 1 >= m {
        2 * 3u64.pow((m - 2) as u32)
    } else {
        blocks_sum(l, m - 2)
    }
}

/// Function-controlled blocks in a level-`ℓ` oracle on `m` ancillae.
///
/// The closed form `2·3^(m-1)` applies once `ℓ ≥ m`; at `ℓ = m - 1` the
/// oracle equals `U(ℓ, m+1)`, which is still in the binomial-sum regime.
pub fn depth_g(level: usize, m: usize) -> u64 {
    assert!(level >= 1 && m >= 1);
    let (l, m) = (level as u64, m as u64);
    if l >= m {
        2 * 3u64.pow((m - 1) as u32)
    } else {
        blocks_sum(l, m - 1)
    }
}

fn blocks_sum(l: u64, top: u64) -> u64 {
    let a: u64 = (1..=l).map(|j| binomial(top, j - 1) << (j - 1)).sum();
    let b: u64 = (0..=l).map(|j| binomial(top, j) << j).sum();
    a + b
}

/// Fewest ancillae whose level-`ℓ` oracle holds `equations` equations.
pub fn min_ancillas(level: usize, equations: usize) -> usize {
    assert!(level >= 1);
    let mut m = 1;
    while capacity_f(level, m) < equations as u64 {
        m += 1;
    }
    m
}
