//! Dense state-vector simulator.
//!
//! Qubit 0 is the most significant bit of a basis index. With `n_data` data
//! qubits followed by `n_anc` ancillae, basis index `(x << n_anc) | a` is the
//! data assignment `x` (in the [`crate::anf`] integer convention) with
//! ancilla configuration `a`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};

/// Largest register the simulator will allocate (2^26 amplitudes, 1 GiB).
pub const MAX_QUBITS: usize = 26;

/// Bit of basis indices that holds qubit `q` in an `n_qubits` register.
#[inline]
pub fn qubit_mask(n_qubits: usize, q: usize) -> usize {
    1usize << (n_qubits - 1 - q)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_data: usize,
    n_anc: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    fn check_size(n_qubits: usize) -> Result<()> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::Resource(format!(
                "{n_qubits} qubits exceed the simulator limit of {MAX_QUBITS}"
            )));
        }
        Ok(())
    }

    /// The basis state `|x⟩|a⟩`.
    pub fn basis(n_data: usize, n_anc: usize, index: usize) -> Result<Self> {
        Self::check_size(n_data + n_anc)?;
        let dim = 1usize << (n_data + n_anc);
        if index >= dim {
            return Err(Error::Input(format!("basis index {index} out of range for {dim} amplitudes")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n_data, n_anc, amps })
    }

    /// Uniform superposition over the data register with ancillae in `|0⟩`,
    /// i.e. `H^{⊗n}` applied to `|0…0⟩`.
    pub fn init_uniform(n_data: usize, n_anc: usize) -> Result<Self> {
        Self::check_size(n_data + n_anc)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << (n_data + n_anc)];
        let a = Complex64::new((-(n_data as f64) / 2.0).exp2(), 0.0);
        for x in 0..1usize << n_data {
            amps[x << n_anc] = a;
        }
        Ok(StateVector { n_data, n_anc, amps })
    }

    /// Builds a state from raw amplitudes, normalizing them.
    pub fn from_amplitudes(n_data: usize, n_anc: usize, amps: Vec<Complex64>) -> Result<Self> {
        Self::check_size(n_data + n_anc)?;
        if amps.len() != 1usize << (n_data + n_anc) {
            return Err(Error::Input(format!(
                "{} amplitudes given for {} qubits",
                amps.len(),
                n_data + n_anc
            )));
        }
        let norm = amps.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Input("amplitudes must have a finite nonzero norm".into()));
        }
        Ok(StateVector { n_data, n_anc, amps: amps.into_iter().map(|a| a / norm).collect() })
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

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    /// Amplitude of `|x⟩|0…0⟩`.
    pub fn data_amplitude(&self, x: usize) -> Complex64 {
        self.amps[x << self.n_anc]
    }

    /// Probability mass on basis states whose ancillae are not all zero.
    pub fn ancilla_leakage(&self) -> f64 {
        let anc_mask = (1usize << self.n_anc) - 1;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & anc_mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        let nq = self.n_qubits();
        if gate.max_qubit() >= nq {
            return Err(Error::Input(format!("gate `{gate}` exceeds the {nq}-qubit register")));
        }
        let t = qubit_mask(nq, gate.target());
        let cmask = gate.controls().iter().fold(0usize, |m, &q| m | qubit_mask(nq, q));
        match gate.kind() {
            GateKind::X | GateKind::Cnot | GateKind::Mcx => {
                let pattern = cmask | t;
                for i in 0..self.amps.len() {
                    if i & pattern == cmask {
                        self.amps.swap(i, i | t);
                    }
                }
            }
            GateKind::Z => {
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & t != 0 {
                        *a = -*a;
                    }
                }
            }
            GateKind::Mcz => {
                let all = cmask | t;
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & all == all {
                        *a = -*a;
                    }
                }
            }
            GateKind::H => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                for i in 0..self.amps.len() {
                    if i & t == 0 {
                        let (a, b) = (self.amps[i], self.amps[i | t]);
                        self.amps[i] = (a + b) * s;
                        self.amps[i | t] = (a - b) * s;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if (circuit.n_data(), circuit.n_anc()) != (self.n_data, self.n_anc) {
            return Err(Error::Input(format!(
                "circuit register {}+{} does not match state register {}+{}",
                circuit.n_data(),
                circuit.n_anc(),
                self.n_data,
                self.n_anc
            )));
        }
        circuit.gates().iter().try_for_each(|g| self.apply_gate(g))
    }

    /// Marginal probability of each data assignment, summed over ancillae.
    pub fn data_probabilities(&self) -> Vec<f64> {
        let block = 1usize << self.n_anc;
        self.amps
            .chunks(block)
            .map(|c| c.iter().map(Complex64::norm_sqr).sum())
            .collect()
    }

    /// Total marginal probability of the given data assignments.
    pub fn solution_probability(&self, solutions: &[u64]) -> f64 {
        let block = 1usize << self.n_anc;
        solutions
            .iter()
            .map(|&x| {
                let start = x as usize * block;
                self.amps[start..start + block].iter().map(Complex64::norm_sqr).sum::<f64>()
            })
            .sum()
    }

    /// Samples `shots` data-register measurements; the histogram maps data
    /// assignments to counts.
    pub fn measure_data(&self, shots: u64, seed: u64) -> Result<BTreeMap<u64, u64>> {
        if shots == 0 {
            return Err(Error::Input("at least one shot is required".into()));
        }
        let probs = self.data_probabilities();
        let dist = WeightedIndex::new(&probs).map_err(|e| Error::Contract(format!("cannot sample state: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hist = BTreeMap::new();
        for _ in 0..shots {
            *hist.entry(dist.sample(&mut rng) as u64).or_insert(0) += 1;
        }
        Ok(hist)
    }

    /// Binary dump: little-endian `u64` qubit count, then `(re, im)` pairs as
    /// little-endian `f64`. The data/ancilla split is not recorded.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.n_qubits() as u64).to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a [`StateVector::write_dump`] file, treating every qubit as data.
    pub fn read_dump<R: Read>(mut r: R) -> Result<Self> {
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let n = u64::from_le_bytes(word) as usize;
        Self::check_size(n)?;
        let mut amps = Vec::with_capacity(1 << n);
        for _ in 0..1usize << n {
            r.read_exact(&mut word)?;
            let re = f64::from_le_bytes(word);
            r.read_exact(&mut word)?;
            let im = f64::from_le_bytes(word);
            amps.push(Complex64::new(re, im));
        }
        Ok(StateVector { n_data: n, n_anc: 0, amps })
    }
}

/// Maps each of `inputs` (basis indices) through a circuit made only of
/// signed-permutation gates (no H), returning `(output index, sign)` pairs.
///
/// One dense simulation suffices: the inputs are loaded with distinct
/// positive weights, and since the circuit permutes basis states up to sign,
/// each output weight identifies its source.
pub fn signed_permutation_action(circuit: &Circuit, inputs: &[usize]) -> Result<Vec<(usize, f64)>> {
    if circuit.gates().iter().any(|g| g.kind() == GateKind::H) {
        return Err(Error::Input("circuit contains H and is not a signed permutation".into()));
    }
    let dim = 1usize << circuit.n_qubits();
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    for (k, &i) in inputs.iter().enumerate() {
        if i >= dim || amps[i].re != 0.0 {
            return Err(Error::Input(format!("input basis index {i} is out of range or repeated")));
        }
        amps[i] = Complex64::new((k + 1) as f64, 0.0);
    }
    // Weights stay unnormalized; only the gate action is needed.
    let mut state = StateVector { n_data: circuit.n_data(), n_anc: circuit.n_anc(), amps };
    state.apply_circuit(circuit)?;
    let mut action = vec![(usize::MAX, 0.0); inputs.len()];
    for (j, a) in state.amps.iter().enumerate() {
        if a.re == 0.0 && a.im == 0.0 {
            continue;
        }
        let k = a.re.abs().round() as usize;
        if a.im != 0.0 || k == 0 || k > inputs.len() || (a.re.abs() - k as f64).abs() > 1e-9 {
            return Err(Error::Contract(format!("unexpected amplitude {a} at index {j}")));
        }
        action[k - 1] = (j, a.re.signum());
    }
    Ok(action)
}
