//! Greedy oracle compression.
//!
//! Inside an oracle, long runs of X-type gates target ancillae while reading
//! only data qubits. Such gates are diagonal in the data register and flip
//! ancilla bits, so any two of them commute. Each maximal run is treated as a
//! multiset: identical gates cancel in pairs, and the survivors are packed into
//! layers of qubit-disjoint gates. Everything else (H, Z, MCZ, and any gate
//! that reads an ancilla) is a hard boundary and is left in place.

use std::ops::Range;

use crate::circuit::{Circuit, CostModel, Gate};

/// A maximal contiguous run of mutually commuting gates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommutableSegment {
    pub range: Range<usize>,
}

/// X/CNOT/MCX with every control on a data qubit and the target on an
/// ancilla.
pub fn is_commutable(gate: &Gate, n_data: usize) -> bool {
    gate.kind().is_x_type() && gate.target() >= n_data && gate.controls().iter().all(|&c| c < n_data)
}

/// Maximal runs of commutable gates. Gates outside every returned range are
/// boundaries.
pub fn segment(circuit: &Circuit) -> Vec<CommutableSegment> {
    let mut segments = Vec::new();
    let mut start = None;
    for (i, g) in circuit.gates().iter().enumerate() {
        match (is_commutable(g, circuit.n_data()), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                segments.push(CommutableSegment { range: s..i });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        segments.push(CommutableSegment { range: s..circuit.len() });
    }
    segments
}

fn sort_key(g: &Gate) -> (&[usize], usize, crate::circuit::GateKind) {
    (g.controls(), g.target(), g.kind())
}

/// Sorts a commutable run by (controls, target, kind) and deletes adjacent
/// identical pairs until none remain.
pub fn cancel_pairs(gates: &[Gate]) -> Vec<Gate> {
    let mut sorted = gates.to_vec();
    sorted.sort_by(|a, b| sort_key(a).cmp(&sort_key(b)));
    let mut out: Vec<Gate> = Vec::with_capacity(sorted.len());
    for g in sorted {
        if out.last() == Some(&g) {
            out.pop();
        } else {
            out.push(g);
        }
    }
    out
}

/// Greedy layering: each pass sweeps the remaining gates in order and takes
/// every gate whose qubits are untouched by the layer so far.
pub fn relayer(gates: &[Gate]) -> Vec<Gate> {
    let n_qubits = gates.iter().map(|g| g.max_qubit() + 1).max().unwrap_or(0);
    let mut remaining: Vec<&Gate> = gates.iter().collect();
    let mut out = Vec::with_capacity(gates.len());
    let mut occupied = vec![false; n_qubits];
    while !remaining.is_empty() {
        occupied.iter_mut().for_each(|o| *o = false);
        let mut deferred = Vec::new();
        for g in remaining {
            if g.qubits().all(|q| !occupied[q]) {
                g.qubits().for_each(|q| occupied[q] = true);
                out.push(g.clone());
            } else {
                deferred.push(g);
            }
        }
        remaining = deferred;
    }
    out
}

/// Compresses under the unit cost model. See [`compress_with`].
pub fn compress(circuit: &Circuit) -> Circuit {
    compress_with(circuit, &CostModel::unit())
}

/// Cancels and relayers every commutable segment, leaving boundaries in
/// place. A segment whose rewrite would be deeper under `model` than the
/// cancelled-but-unsorted run keeps the latter, and a result deeper than the
/// input is discarded, so depth never increases.
pub fn compress_with(circuit: &Circuit, model: &CostModel) -> Circuit {
    let gates = circuit.gates();
    let mut out = Vec::with_capacity(gates.len());
    let mut cursor = 0;
    for seg in segment(circuit) {
        out.extend_from_slice(&gates[cursor..seg.range.start]);
        let run = &gates[seg.range.clone()];
        let reduced = relayer(&cancel_pairs(run));
        let depth_of = |gs: &[Gate]| {
            Circuit::from_gates(circuit.n_data(), circuit.n_anc(), gs.to_vec())
                .expect("segment gates fit the register")
                .depth(model)
        };
        if reduced.len() < run.len() || depth_of(&reduced) <= depth_of(run) {
            out.extend(reduced);
        } else {
            out.extend_from_slice(run);
        }
        cursor = seg.range.end;
    }
    out.extend_from_slice(&gates[cursor..]);
    let compressed = Circuit::from_gates(circuit.n_data(), circuit.n_anc(), out).expect("same register");
    if compressed.depth(model) > circuit.depth(model) {
        circuit.clone()
    } else {
        compressed
    }
}
