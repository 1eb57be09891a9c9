//! Gate-level circuit IR and the layered depth metric.
//!
//! A [`Circuit`] acts on `n_data` data qubits `[0, n_data)` followed by
//! `n_anc` ancillae `[n_data, n_data + n_anc)`. Every gate kind used here is
//! self-inverse, so a circuit is inverted by reversing its gate order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    X,
    Z,
    H,
    Cnot,
    Mcx,
    Mcz,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::X => "X",
            GateKind::Z => "Z",
            GateKind::H => "H",
            GateKind::Cnot => "CNOT",
            GateKind::Mcx => "MCX",
            GateKind::Mcz => "MCZ",
        }
    }

    /// X, CNOT and MCX flip their target conditioned on the controls.
    pub fn is_x_type(self) -> bool {
        matches!(self, GateKind::X | GateKind::Cnot | GateKind::Mcx)
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "X" => GateKind::X,
            "Z" => GateKind::Z,
            "H" => GateKind::H,
            "CNOT" => GateKind::Cnot,
            "MCX" => GateKind::Mcx,
            "MCZ" => GateKind::Mcz,
            other => return Err(Error::Input(format!("unknown gate kind {other:?}"))),
        })
    }
}

/// A primitive gate. For MCZ the split between controls and target is only a
/// storage convention: the target is the largest qubit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Gate {
    kind: GateKind,
    controls: Vec<usize>,
    target: usize,
}

impl Gate {
    /// Validates the arity rules: X/Z/H take no controls, CNOT exactly one,
    /// MCX at least one, MCZ any number; controls are distinct and exclude the
    /// target. Controls are stored sorted.
    pub fn new(kind: GateKind, mut controls: Vec<usize>, target: usize) -> Result<Self> {
        controls.sort_unstable();
        let arity_ok = match kind {
            GateKind::X | GateKind::Z | GateKind::H => controls.is_empty(),
            GateKind::Cnot => controls.len() == 1,
            GateKind::Mcx => !controls.is_empty(),
            GateKind::Mcz => true,
        };
        if !arity_ok {
            return Err(Error::Input(format!(
                "{} cannot take {} controls",
                kind.name(),
                controls.len()
            )));
        }
        if controls.windows(2).any(|w| w[0] == w[1]) || controls.contains(&target) {
            return Err(Error::Input(format!(
                "{} controls {controls:?} must be distinct and exclude target {target}",
                kind.name()
            )));
        }
        if kind == GateKind::Mcz {
            // Normalize so equal qubit sets compare equal.
            controls.push(target);
            controls.sort_unstable();
            let target = controls.pop().expect("nonempty");
            return Ok(Gate { kind, controls, target });
        }
        Ok(Gate { kind, controls, target })
    }

    pub fn x(q: usize) -> Self {
        Gate { kind: GateKind::X, controls: vec![], target: q }
    }

    pub fn z(q: usize) -> Self {
        Gate { kind: GateKind::Z, controls: vec![], target: q }
    }

    pub fn h(q: usize) -> Self {
        Gate { kind: GateKind::H, controls: vec![], target: q }
    }

    /// # Panics
    /// If `control == target`.
    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::new(GateKind::Cnot, vec![control], target).expect("invalid CNOT")
    }

    /// # Panics
    /// If `controls` is empty, repeats a qubit or contains `target`.
    pub fn mcx(controls: Vec<usize>, target: usize) -> Self {
        Gate::new(GateKind::Mcx, controls, target).expect("invalid MCX")
    }

    /// X, CNOT or MCX depending on how many controls are given.
    ///
    /// # Panics
    /// If `controls` repeats a qubit or contains `target`.
    pub fn controlled_x(controls: Vec<usize>, target: usize) -> Self {
        let kind = match controls.len() {
            0 => GateKind::X,
            1 => GateKind::Cnot,
            _ => GateKind::Mcx,
        };
        Gate::new(kind, controls, target).expect("invalid controlled X")
    }

    /// Phase flip on the all-ones configuration of `qubits`.
    ///
    /// # Panics
    /// If `qubits` is empty or repeats a qubit.
    pub fn mcz(qubits: Vec<usize>) -> Self {
        let mut qubits = qubits;
        qubits.sort_unstable();
        let target = qubits.pop().expect("MCZ needs at least one qubit");
        Gate::new(GateKind::Mcz, qubits, target).expect("invalid MCZ")
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn controls(&self) -> &[usize] {
        &self.controls
    }

    pub fn target(&self) -> usize {
        self.target
    }

    /// Controls followed by the target.
    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.controls.iter().copied().chain(std::iter::once(self.target))
    }

    pub fn arity(&self) -> usize {
        self.controls.len() + 1
    }

    pub fn max_qubit(&self) -> usize {
        self.controls.last().copied().unwrap_or(0).max(self.target)
    }

    pub fn acts_on(&self, q: usize) -> bool {
        self.target == q || self.controls.binary_search(&q).is_ok()
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |qs: &mut dyn Iterator<Item = usize>| {
            qs.map(|q| q.to_string()).collect::<Vec<_>>().join(",")
        };
        if self.kind == GateKind::Mcz {
            write!(f, "MCZ {}", join(&mut self.qubits()))
        } else {
            write!(f, "{} {}->{}", self.kind.name(), join(&mut self.controls.iter().copied()), self.target)
        }
    }
}

impl FromStr for Gate {
    type Err = Error;

    /// Parses `KIND c1,c2,...->t` or `MCZ q1,q2,...`. Single-qubit gates may
    /// be written `X ->3` or `X 3`.
    fn from_str(line: &str) -> Result<Self> {
        let line = line.trim();
        let (kind, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let kind: GateKind = kind.parse()?;
        let parse_list = |s: &str| -> Result<Vec<usize>> {
            s.split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<usize>().map_err(|e| Error::Input(format!("bad qubit {t:?}: {e}"))))
                .collect()
        };
        let rest = rest.trim();
        if kind == GateKind::Mcz {
            let qubits = parse_list(rest)?;
            let mut sorted = qubits.clone();
            sorted.sort_unstable();
            let target = sorted.pop().ok_or_else(|| Error::Input("MCZ without qubits".into()))?;
            return Gate::new(kind, sorted, target);
        }
        let (controls, target) = match rest.split_once("->") {
            Some((c, t)) => (parse_list(c)?, t),
            None => (Vec::new(), rest),
        };
        let target = target
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::Input(format!("bad target {target:?}: {e}")))?;
        Gate::new(kind, controls, target)
    }
}

/// Per-gate costs used by [`Circuit::depth`]. All costs are at least 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub single: u32,
    pub cnot: u32,
    pub mcx: McxCost,
    pub mcz: MczCost,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McxCost {
    /// Every MCX costs the given amount.
    Flat(u32),
    /// An MCX with `k` controls costs `2k - 1`.
    Decomposed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MczCost {
    /// Every MCZ costs the constant `C`.
    Constant(u32),
    /// An MCZ costs one plus the number of qubits it acts on.
    OnePlusQubits,
}

impl CostModel {
    /// Every gate costs 1.
    pub fn unit() -> Self {
        CostModel { single: 1, cnot: 1, mcx: McxCost::Flat(1), mcz: MczCost::Constant(1) }
    }

    /// Unit costs except MCX, charged `2k - 1` for `k` controls.
    pub fn decomposed() -> Self {
        CostModel { mcx: McxCost::Decomposed, ..CostModel::default() }
    }

    pub fn gate_cost(&self, gate: &Gate) -> u64 {
        let cost = match gate.kind() {
            GateKind::X | GateKind::Z | GateKind::H => self.single,
            GateKind::Cnot => self.cnot,
            GateKind::Mcx => match self.mcx {
                McxCost::Flat(c) => c,
                McxCost::Decomposed => 2 * gate.controls().len() as u32 - 1,
            },
            GateKind::Mcz => match self.mcz {
                MczCost::Constant(c) => c,
                MczCost::OnePlusQubits => 1 + gate.arity() as u32,
            },
        };
        u64::from(cost.max(1))
    }

    /// Short human-readable description, printed next to depth figures.
    pub fn describe(&self) -> String {
        let mcx = match self.mcx {
            McxCost::Flat(c) => format!("MCX={c}"),
            McxCost::Decomposed => "MCX=2k-1".to_string(),
        };
        let mcz = match self.mcz {
            MczCost::Constant(c) => format!("MCZ={c}"),
            MczCost::OnePlusQubits => "MCZ=1+qubits".to_string(),
        };
        format!("single={} CNOT={} {mcx} {mcz}", self.single, self.cnot)
    }
}

/// Unit costs for X/Z/H/CNOT/MCX; an MCZ is charged one plus its qubit count.
impl Default for CostModel {
    fn default() -> Self {
        CostModel { single: 1, cnot: 1, mcx: McxCost::Flat(1), mcz: MczCost::OnePlusQubits }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    n_data: usize,
    n_anc: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_data: usize, n_anc: usize) -> Self {
        Circuit { n_data, n_anc, gates: Vec::new() }
    }

    pub fn from_gates(n_data: usize, n_anc: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Circuit::new(n_data, n_anc);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn n_data(&self) -> usize {
        self.n_data
    }

    pub fn n_anc(&self) -> usize {
        self.n_anc
    }

    pub fn n_qubits(&self) -> usize {
        self.n_data + self.n_anc
    }

    /// Qubit index of the 1-based ancilla `j`.
    pub fn ancilla(&self, j: usize) -> usize {
        debug_assert!((1..=self.n_anc).contains(&j));
        self.n_data + j - 1
    }

    pub fn is_ancilla(&self, q: usize) -> bool {
        (self.n_data..self.n_qubits()).contains(&q)
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        if gate.max_qubit() >= self.n_qubits() {
            return Err(Error::Input(format!(
                "gate `{gate}` exceeds the {}-qubit register",
                self.n_qubits()
            )));
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<()> {
        gates.into_iter().try_for_each(|g| self.push(g))
    }

    /// `self` followed by `other`. Both must share the same register layout.
    pub fn concat(&self, other: &Circuit) -> Result<Circuit> {
        if (self.n_data, self.n_anc) != (other.n_data, other.n_anc) {
            return Err(Error::Input(format!(
                "cannot concatenate a {}+{} circuit with a {}+{} circuit",
                self.n_data, self.n_anc, other.n_data, other.n_anc
            )));
        }
        let mut gates = self.gates.clone();
        gates.extend_from_slice(&other.gates);
        Ok(Circuit { gates, ..*self })
    }

    /// The inverse circuit (all gates are self-inverse).
    pub fn reverse(&self) -> Circuit {
        Circuit {
            gates: self.gates.iter().rev().cloned().collect(),
            ..*self
        }
    }

    /// Layered depth: each gate starts once every qubit it touches is free and
    /// occupies those qubits for its cost.
    pub fn depth(&self, model: &CostModel) -> u64 {
        let mut busy_until = vec![0u64; self.n_qubits()];
        let mut depth = 0;
        for g in &self.gates {
            let start = g.qubits().map(|q| busy_until[q]).max().unwrap_or(0);
            let finish = start + model.gate_cost(g);
            for q in g.qubits() {
                busy_until[q] = finish;
            }
            depth = depth.max(finish);
        }
        depth
    }

    /// Text dump: a `qubits n m` header, then one gate per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("qubits {} {}\n", self.n_data, self.n_anc);
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses [`Circuit::to_text`] output. Blank lines and lines starting
    /// with `#` are ignored.
    pub fn from_text(text: &str) -> Result<Circuit> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (line_no, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing `qubits n m` header".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (n_data, n_anc) = match fields.as_slice() {
            ["qubits", n, m] => (n.parse::<usize>(), m.parse::<usize>()),
            _ => {
                return Err(Error::Parse { line: line_no, message: format!("bad header {header:?}") })
            }
        };
        let (n_data, n_anc) = match (n_data, n_anc) {
            (Ok(n), Ok(m)) => (n, m),
            _ => return Err(Error::Parse { line: line_no, message: format!("bad header {header:?}") }),
        };
        let mut circuit = Circuit::new(n_data, n_anc);
        for (line, text) in lines {
            let gate: Gate = text.parse().map_err(|e: Error| Error::Parse { line, message: e.to_string() })?;
            circuit.push(gate).map_err(|e| Error::Parse { line, message: e.to_string() })?;
        }
        Ok(circuit)
    }
}
