//! Boolean polynomials over F₂ in algebraic normal form.
//!
//! A polynomial is an XOR of AND-monomials ([`Term`]s). Equation systems
//! ([`BqeSystem`]) are lists of polynomials, each read as `f(x) = 0`.
//!
//! Assignments are passed either as bit slices (`x[i]` is variable `i`) or as
//! integers in the basis-index convention: variable `i` of an `n`-variable
//! system is bit `n - 1 - i`, so variable 0 is the most significant bit.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{BitAnd, BitXor};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest variable count the brute-force solver will enumerate.
pub const MAX_BRUTE_FORCE_VARS: usize = 30;

/// Reseeds attempted by [`generate_system`] before giving up.
pub const GENERATION_RETRIES: u64 = 64;

/// An AND-monomial: the product of the listed variables. The empty term is the
/// constant 1.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Term(Vec<usize>);

impl Term {
    /// Builds a term from variable indices. Repeated indices collapse since
    /// `x·x = x`.
    pub fn new(vars: impl IntoIterator<Item = usize>) -> Self {
        let mut vars: Vec<usize> = vars.into_iter().collect();
        vars.sort_unstable();
        vars.dedup();
        Term(vars)
    }

    /// The constant-1 term.
    pub fn one() -> Self {
        Term(Vec::new())
    }

    pub fn vars(&self) -> &[usize] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_var(&self) -> Option<usize> {
        self.0.last().copied()
    }

    /// Product of two monomials (union of their variable sets).
    pub fn mul(&self, other: &Term) -> Term {
        Term::new(self.0.iter().chain(other.0.iter()).copied())
    }

    /// Bit mask of this term's variables in the `n`-variable basis-index
    /// convention.
    pub fn mask(&self, n: usize) -> u64 {
        self.0.iter().fold(0u64, |m, &v| m | (1u64 << (n - 1 - v)))
    }

    fn eval(&self, x: &[bool]) -> bool {
        self.0.iter().all(|&v| x[v])
    }
}

// Terms are ordered by (degree, indices) so that the canonical term set
// serializes identically regardless of construction order.
impl Ord for Term {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, "·")?;
            }
            write!(f, "x{v}")?;
        }
        Ok(())
    }
}

/// A boolean polynomial: the XOR of a set of distinct terms.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct AnfPoly {
    terms: BTreeSet<Term>,
}

impl AnfPoly {
    pub fn zero() -> Self {
        AnfPoly::default()
    }

    pub fn one() -> Self {
        AnfPoly::from_terms([Term::one()])
    }

    /// XOR-accumulates the given terms; a term listed twice cancels.
    pub fn from_terms(terms: impl IntoIterator<Item = Term>) -> Self {
        let mut poly = AnfPoly::zero();
        for t in terms {
            poly.toggle(t);
        }
        poly
    }

    /// Shorthand for [`AnfPoly::from_terms`] over index lists.
    pub fn from_index_lists<I, T>(terms: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: IntoIterator<Item = usize>,
    {
        AnfPoly::from_terms(terms.into_iter().map(Term::new))
    }

    /// Adds `term` over F₂: inserts it, or removes it if already present.
    pub fn toggle(&mut self, term: Term) {
        if !self.terms.remove(&term) {
            self.terms.insert(term);
        }
    }

    /// Terms in canonical (degree, indices) order.
    pub fn terms(&self) -> impl ExactSizeIterator<Item = &Term> + '_ {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(Term::degree).max().unwrap_or(0)
    }

    pub fn max_var(&self) -> Option<usize> {
        self.terms.iter().filter_map(Term::max_var).max()
    }

    /// Evaluates the polynomial on an assignment, `x[i]` being variable `i`.
    pub fn eval(&self, x: &[bool]) -> Result<bool> {
        if let Some(v) = self.max_var() {
            if v >= x.len() {
                return Err(Error::Input(format!(
                    "assignment has {} bits but the polynomial uses x{v}",
                    x.len()
                )));
            }
        }
        Ok(self.terms.iter().fold(false, |acc, t| acc ^ t.eval(x)))
    }

    pub fn xor(&self, other: &AnfPoly) -> AnfPoly {
        AnfPoly {
            terms: self.terms.symmetric_difference(&other.terms).cloned().collect(),
        }
    }

    pub fn and(&self, other: &AnfPoly) -> AnfPoly {
        let mut out = AnfPoly::zero();
        for a in &self.terms {
            for b in &other.terms {
                out.toggle(a.mul(b));
            }
        }
        out
    }

    /// Precomputes term masks for fast evaluation on integer assignments.
    pub fn compile(&self, n: usize) -> CompiledPoly {
        CompiledPoly {
            masks: self.terms.iter().map(|t| t.mask(n)).collect(),
        }
    }
}

impl BitXor for &AnfPoly {
    type Output = AnfPoly;
    fn bitxor(self, rhs: &AnfPoly) -> AnfPoly {
        self.xor(rhs)
    }
}

impl BitAnd for &AnfPoly {
    type Output = AnfPoly;
    fn bitand(self, rhs: &AnfPoly) -> AnfPoly {
        self.and(rhs)
    }
}

impl fmt::Debug for AnfPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for AnfPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " ⊕ ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// A polynomial reduced to term masks, evaluated on basis-index assignments.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    masks: Vec<u64>,
}

impl CompiledPoly {
    #[inline]
    pub fn eval(&self, x: u64) -> bool {
        self.masks.iter().fold(false, |acc, &m| acc ^ (x & m == m))
    }
}

/// `n` boolean variables and an ordered list of equations `f_i(x) = 0`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BqeSystem {
    n: usize,
    equations: Vec<AnfPoly>,
}

impl BqeSystem {
    pub fn new(n: usize, equations: Vec<AnfPoly>) -> Result<Self> {
        if n == 0 || n > 63 {
            return Err(Error::Input(format!("variable count {n} outside 1..=63")));
        }
        for (i, eq) in equations.iter().enumerate() {
            if let Some(v) = eq.max_var() {
                if v >= n {
                    return Err(Error::Input(format!(
                        "equation {i} uses x{v} but the system has {n} variables"
                    )));
                }
            }
        }
        Ok(BqeSystem { n, equations })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn equations(&self) -> &[AnfPoly] {
        &self.equations
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    /// The subsystem formed by the equations at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<BqeSystem> {
        let equations = indices
            .iter()
            .map(|&i| {
                self.equations.get(i).cloned().ok_or_else(|| {
                    Error::Input(format!("equation index {i} out of range ({} equations)", self.len()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BqeSystem { n: self.n, equations })
    }

    /// True when the basis-index assignment `x` satisfies every equation.
    pub fn is_solution(&self, x: u64) -> bool {
        self.equations.iter().all(|f| !f.compile(self.n).eval(x))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("system serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Serialize, Deserialize)]
struct SystemRepr {
    n: usize,
    equations: Vec<Vec<Vec<usize>>>,
}

impl Serialize for BqeSystem {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SystemRepr {
            n: self.n,
            equations: self
                .equations
                .iter()
                .map(|eq| eq.terms().map(|t| t.vars().to_vec()).collect())
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BqeSystem {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = SystemRepr::deserialize(d)?;
        let equations = repr.equations.into_iter().map(AnfPoly::from_index_lists).collect();
        BqeSystem::new(repr.n, equations).map_err(serde::de::Error::custom)
    }
}

/// Bits of the basis-index assignment `x` as a slice-style assignment.
pub fn assignment_bits(x: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| (x >> (n - 1 - i)) & 1 == 1).collect()
}

/// Inverse of [`assignment_bits`].
pub fn assignment_index(bits: &[bool]) -> u64 {
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
}

/// Collapses a system into one polynomial `(f₁⊕1)(f₂⊕1)⋯(f_R⊕1)⊕1`, which
/// vanishes exactly on the common zeros of the equations.
pub fn product_reduce(system: &BqeSystem) -> Result<AnfPoly> {
    if system.is_empty() {
        return Err(Error::Input("cannot reduce an empty equation system".into()));
    }
    let one = AnfPoly::one();
    let product = system
        .equations()
        .iter()
        .fold(one.clone(), |acc, f| acc.and(&f.xor(&one)));
    Ok(product.xor(&one))
}

fn check_enumerable(n: usize) -> Result<()> {
    if n > MAX_BRUTE_FORCE_VARS {
        return Err(Error::Resource(format!(
            "{n} variables exceed the brute-force limit of {MAX_BRUTE_FORCE_VARS}"
        )));
    }
    Ok(())
}

/// Every satisfying assignment, ascending by basis index.
pub fn brute_force_solve(system: &BqeSystem) -> Result<Vec<u64>> {
    check_enumerable(system.n())?;
    let compiled: Vec<CompiledPoly> = system.equations().iter().map(|f| f.compile(system.n())).collect();
    Ok((0..1u64 << system.n())
        .filter(|&x| compiled.iter().all(|f| !f.eval(x)))
        .collect())
}

pub fn count_solutions(system: &BqeSystem) -> Result<u64> {
    check_enumerable(system.n())?;
    let compiled: Vec<CompiledPoly> = system.equations().iter().map(|f| f.compile(system.n())).collect();
    Ok((0..1u64 << system.n())
        .filter(|&x| compiled.iter().all(|f| !f.eval(x)))
        .count() as u64)
}

/// Number of linear plus quadratic monomials in `n` variables.
pub fn monomial_pool_size(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Draws a Poisson variate by sequential inversion of the CDF, accumulating the
/// probability mass in log space so large means do not underflow.
fn poisson_inversion<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut k = 0usize;
    let mut log_pmf = -mean;
    let mut cdf = log_pmf.exp();
    while u > cdf {
        k += 1;
        log_pmf += (mean / k as f64).ln();
        let pmf = log_pmf.exp();
        cdf += pmf;
        // Past the mode with negligible mass left: rounding keeps cdf below u.
        if pmf < f64::EPSILON * 1e-3 && k as f64 > mean {
            break;
        }
    }
    k
}

fn pool_monomial(n: usize, idx: usize) -> Term {
    if idx < n {
        return Term::new([idx]);
    }
    // Quadratic monomials x_i·x_j (i < j) in lexicographic order.
    let mut rest = idx - n;
    for i in 0..n {
        let row = n - 1 - i;
        if rest < row {
            return Term::new([i, i + 1 + rest]);
        }
        rest -= row;
    }
    unreachable!("monomial index {idx} outside the pool for n = {n}")
}

/// A random boolean quadratic equation in `n ≥ 1` variables.
///
/// The term count is Poisson with mean `n(n+1)/4`, clamped to
/// `[1, n(n+1)/2]`; terms are drawn without replacement from the linear and
/// quadratic monomials. No constant term is ever emitted.
pub fn random_bqe<R: Rng + ?Sized>(n: usize, rng: &mut R) -> AnfPoly {
    assert!(n >= 1, "random_bqe needs at least one variable");
    let pool = monomial_pool_size(n);
    let mean = pool as f64 / 2.0;
    let count = poisson_inversion(mean, rng).clamp(1, pool);
    AnfPoly::from_terms(index::sample(rng, pool, count).into_iter().map(|i| pool_monomial(n, i)))
}

/// [`random_bqe`] driven by a fresh generator seeded with `seed`.
pub fn random_bqe_seeded(n: usize, seed: u64) -> AnfPoly {
    random_bqe(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Generator for stream `stream` of master seed `seed`; used wherever
/// independent reproducible substreams are needed.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generates a random BQE system whose solution count lies in `[lo, hi]`.
///
/// Each attempt draws `n` equations, then adds a fresh equation while there
/// are too many solutions and drops the most recently added one while there
/// are too few. An attempt that has not converged after a bounded number of
/// steps is abandoned and the generator is reseeded.
pub fn generate_system(n: usize, lo: u64, hi: u64, seed: u64) -> Result<BqeSystem> {
    if n < 2 {
        return Err(Error::Input(format!("random systems need n >= 2, got {n}")));
    }
    check_enumerable(n)?;
    if lo > hi || hi > 1u64 << n {
        return Err(Error::Input(format!(
            "solution range [{lo}, {hi}] is not within [0, 2^{n}]"
        )));
    }
    let max_steps = 8 * n + 64;
    for attempt in 0..GENERATION_RETRIES {
        let mut rng = substream(seed, attempt);
        let mut equations: Vec<AnfPoly> = (0..n).map(|_| random_bqe(n, &mut rng)).collect();
        for _ in 0..max_steps {
            let system = BqeSystem::new(n, equations)?;
            let count = count_solutions(&system)?;
            if (lo..=hi).contains(&count) {
                return Ok(system);
            }
            equations = system.equations;
            if count > hi {
                equations.push(random_bqe(n, &mut rng));
            } else if equations.pop().is_none() {
                break;
            }
        }
    }
    Err(Error::Generation {
        attempts: GENERATION_RETRIES as usize,
        reason: format!("no {n}-variable system with {lo}..={hi} solutions found"),
    })
}
