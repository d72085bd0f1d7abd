//! Born-rule boxes from qubit pure states and binary projective measurements.
//!
//! Qubit 0 is the most significant bit of the amplitude index and belongs to
//! party 0. Outcome 0 is the `+1` eigenvalue, outcome 1 the `-1` eigenvalue.

use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::index;
use crate::model::{ensure_no_signalling, CorrelationBox, Scenario, DEFAULT_EPS};
use crate::scalar::{approximate_rational, ratio, Scalar, Table};

pub const MAX_QUBITS: usize = 12;
const STATE_TOL: f64 = 1e-12;
/// Rounding tolerance used when converting quantum boxes to exact mode.
pub const RATIONALIZE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Dimension(format!("{len} amplitudes is not a qubit register")));
        }
        let qubits = len.trailing_zeros() as usize;
        if qubits > MAX_QUBITS {
            return Err(Error::Cap(format!("{qubits} qubits exceeds {MAX_QUBITS}")));
        }
        let norm: f64 = amplitudes.iter().map(Complex64::norm_sqr).sum();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidBox(format!("state has squared norm {norm}")));
        }
        Ok(PureState { qubits, amplitudes })
    }

    /// Tensor product of single-qubit states `(α, β)`, normalized.
    pub fn product(factors: &[(Complex64, Complex64)]) -> Result<Self> {
        let mut amps = vec![Complex64::one()];
        for &(a, b) in factors {
            let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let (a, b) = (a / n, b / n);
            amps = amps.iter().flat_map(|&c| [c * a, c * b]).collect();
        }
        PureState::new(amps)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Same state with qubit `q` moved to position `perm[q]`.
    pub fn permute_qubits(&self, perm: &[usize]) -> Result<Self> {
        let n = self.qubits;
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::Dimension("qubit permutation is not a bijection".into()));
        }
        let radices = vec![2; n];
        let mut out = vec![Complex64::zero(); self.amplitudes.len()];
        let mut moved = vec![0; n];
        for (i, amp) in self.amplitudes.iter().enumerate() {
            let bits = index::decode(&radices, i);
            for q in 0..n {
                moved[perm[q]] = bits[q];
            }
            out[index::encode(&radices, &moved)] = *amp;
        }
        PureState::new(out)
    }
}

/// `(|0…0⟩ + |1…1⟩)/√2` on `n` qubits.
pub fn ghz_state(n: usize) -> Result<PureState> {
    if n < 2 {
        return Err(Error::Dimension("GHZ state needs at least 2 qubits".into()));
    }
    if n > MAX_QUBITS {
        return Err(Error::Cap(format!("{n} qubits exceeds {MAX_QUBITS}")));
    }
    let mut amps = vec![Complex64::zero(); 1 << n];
    amps[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    amps[(1 << n) - 1] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    PureState::new(amps)
}

/// Two-outcome projective qubit measurement of `n·σ` for a unit Bloch vector.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryMeasurement {
    bloch: [f64; 3],
    /// Row-major 2×2 projectors for outcomes 0 (`+1`) and 1 (`-1`).
    projectors: [[Complex64; 4]; 2],
}

impl BinaryMeasurement {
    /// `cos θ σ_z + sin θ σ_x`.
    pub fn from_angle(theta: f64) -> Self {
        Self::from_unit_bloch([theta.sin(), 0.0, theta.cos()])
    }

    pub fn from_bloch(n: [f64; 3]) -> Result<Self> {
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Parse("Bloch vector must be nonzero".into()));
        }
        Ok(Self::from_unit_bloch([n[0] / norm, n[1] / norm, n[2] / norm]))
    }

    fn from_unit_bloch(n: [f64; 3]) -> Self {
        // Π± = (I ± n·σ)/2
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let proj = |s: f64| {
            [
                c((1.0 + s * n[2]) / 2.0, 0.0),
                c(s * n[0] / 2.0, -s * n[1] / 2.0),
                c(s * n[0] / 2.0, s * n[1] / 2.0),
                c((1.0 - s * n[2]) / 2.0, 0.0),
            ]
        };
        BinaryMeasurement {
            bloch: n,
            projectors: [proj(1.0), proj(-1.0)],
        }
    }

    pub fn sigma_z() -> Self {
        Self::from_unit_bloch([0.0, 0.0, 1.0])
    }

    pub fn sigma_x() -> Self {
        Self::from_unit_bloch([1.0, 0.0, 0.0])
    }

    pub fn bloch(&self) -> [f64; 3] {
        self.bloch
    }

    pub fn projector(&self, outcome: usize) -> &[Complex64; 4] {
        &self.projectors[outcome]
    }

    /// Largest deviation from `Π₀+Π₁ = I`, `Π² = Π`, `Π† = Π`.
    pub fn defect(&self) -> f64 {
        let mul = |a: &[Complex64; 4], b: &[Complex64; 4]| {
            [
                a[0] * b[0] + a[1] * b[2],
                a[0] * b[1] + a[1] * b[3],
                a[2] * b[0] + a[3] * b[2],
                a[2] * b[1] + a[3] * b[3],
            ]
        };
        let id = [Complex64::one(), Complex64::zero(), Complex64::zero(), Complex64::one()];
        let mut worst: f64 = 0.0;
        for k in 0..4 {
            worst = worst.max((self.projectors[0][k] + self.projectors[1][k] - id[k]).norm());
        }
        for p in &self.projectors {
            let sq = mul(p, p);
            let adj = [p[0].conj(), p[2].conj(), p[1].conj(), p[3].conj()];
            for k in 0..4 {
                worst = worst.max((sq[k] - p[k]).norm()).max((adj[k] - p[k]).norm());
            }
        }
        worst
    }
}

/// Accepts `theta:<radians>`, `z`, `x` and `bloch:<nx>,<ny>,<nz>`.
impl FromStr for BinaryMeasurement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("bad observable {s:?}"));
        if let Some(t) = s.strip_prefix("theta:") {
            let theta: f64 = t.trim().parse().map_err(|_| bad())?;
            if !theta.is_finite() {
                return Err(bad());
            }
            return Ok(Self::from_angle(theta));
        }
        if let Some(v) = s.strip_prefix("bloch:") {
            let parts: Vec<f64> = v
                .split(',')
                .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            let n: [f64; 3] = parts.try_into().map_err(|_| bad())?;
            return Self::from_bloch(n);
        }
        match s {
            "z" => Ok(Self::sigma_z()),
            "x" => Ok(Self::sigma_x()),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for BinaryMeasurement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [x, y, z] = self.bloch;
        write!(f, "bloch:{x},{y},{z}")
    }
}

fn apply_on_qubit(op: &[Complex64; 4], qubit: usize, qubits: usize, v: &[Complex64]) -> Vec<Complex64> {
    let stride = 1 << (qubits - 1 - qubit);
    let mut out = vec![Complex64::zero(); v.len()];
    for i in 0..v.len() {
        if i & stride != 0 {
            continue;
        }
        let (lo, hi) = (v[i], v[i | stride]);
        out[i] = op[0] * lo + op[1] * hi;
        out[i | stride] = op[2] * lo + op[3] * hi;
    }
    out
}

/// `P(a|x) = ‖(⊗_i Π^{x_i}_{a_i}) ψ‖²`, one party per qubit.
pub fn born_box(state: &PureState, settings: &[Vec<BinaryMeasurement>]) -> Result<CorrelationBox> {
    let n = state.qubits();
    if settings.len() != n {
        return Err(Error::Dimension(format!(
            "{} parties of settings for a {n}-qubit state",
            settings.len()
        )));
    }
    let inputs: Vec<usize> = settings.iter().map(Vec::len).collect();
    let scenario = Scenario::new(inputs, vec![2; n])?;
    let mut table = Vec::with_capacity(scenario.table_len());
    let mut row = vec![0.0; scenario.output_count()];
    for xi in 0..scenario.input_count() {
        let x = scenario.input_tuple(xi);
        fill_outcomes(state, settings, &x, 0, state.amplitudes(), 0, &mut row);
        table.extend_from_slice(&row);
    }
    CorrelationBox::new(scenario, Table::Float(table))
}

fn fill_outcomes(
    state: &PureState,
    settings: &[Vec<BinaryMeasurement>],
    x: &[usize],
    party: usize,
    v: &[Complex64],
    prefix: usize,
    row: &mut [f64],
) {
    let n = state.qubits();
    for a in 0..2 {
        let w = apply_on_qubit(settings[party][x[party]].projector(a), party, n, v);
        let idx = prefix * 2 + a;
        if party + 1 == n {
            row[idx] = w.iter().map(Complex64::norm_sqr).sum();
        } else {
            fill_outcomes(state, settings, x, party + 1, &w, idx, row);
        }
    }
}

/// Settings of the tripartite GHZ example: `A_1, A_2` measure `σ_z, σ_x`;
/// `A_3` measures `(σ_z ± σ_x)/√2`.
pub fn paper_ghz_settings() -> Vec<Vec<BinaryMeasurement>> {
    vec![
        vec![BinaryMeasurement::sigma_z(), BinaryMeasurement::sigma_x()],
        vec![BinaryMeasurement::sigma_z(), BinaryMeasurement::sigma_x()],
        vec![
            BinaryMeasurement::from_angle(FRAC_PI_4),
            BinaryMeasurement::from_angle(-FRAC_PI_4),
        ],
    ]
}

pub fn paper_ghz_box() -> CorrelationBox {
    born_box(&ghz_state(3).expect("3 qubits"), &paper_ghz_settings()).expect("settings match state")
}

#[derive(Clone, Debug)]
pub struct Rationalized {
    pub boxed: CorrelationBox,
    /// Largest entrywise change from the float box.
    pub residual: f64,
}

/// Exact-mode copy of a binary-output no-signalling float box.
///
/// Rounds the full correlators `E_S(x_S)` to continued-fraction convergents
/// within `tol` and rebuilds `P(a|x) = 2^{-N} Σ_S (-1)^{Σ_{i∈S} a_i} E_S(x_S)`,
/// so the exact box is normalized and no-signalling by construction.
pub fn rationalize(b: &CorrelationBox, tol: f64) -> Result<Rationalized> {
    let s = b.scenario();
    if !s.is_binary() {
        return Err(Error::InvalidBox("rationalization needs binary outputs".into()));
    }
    ensure_no_signalling(b, 1e-9)?;
    let n = s.parties();
    let t = b.table().to_f64_vec();
    let d = s.output_count();
    let sign = |mask: usize, ai: usize| -> i32 {
        // party p is bit (n-1-p) of the output index
        let bits = (0..n).filter(|p| mask >> p & 1 == 1 && ai >> (n - 1 - p) & 1 == 1).count();
        if bits % 2 == 0 { 1 } else { -1 }
    };
    let key = |mask: usize, x: &[usize]| -> (usize, Vec<usize>) {
        (mask, (0..n).map(|p| if mask >> p & 1 == 1 { x[p] } else { 0 }).collect())
    };
    // Average over the inputs outside S so the rounding sees one value per key.
    let mut sums: HashMap<(usize, Vec<usize>), (f64, usize)> = HashMap::new();
    for xi in 0..s.input_count() {
        let x = s.input_tuple(xi);
        for mask in 0..(1usize << n) {
            let e: f64 = (0..d).map(|ai| sign(mask, ai) as f64 * t[xi * d + ai]).sum();
            let slot = sums.entry(key(mask, &x)).or_insert((0.0, 0));
            slot.0 += e;
            slot.1 += 1;
        }
    }
    let mut exact: HashMap<(usize, Vec<usize>), BigRational> = HashMap::new();
    for (k, (sum, count)) in sums {
        exact.insert(k, approximate_rational(sum / count as f64, tol)?);
    }
    let scale = ratio(1, 1 << n);
    let mut out = Vec::with_capacity(t.len());
    for xi in 0..s.input_count() {
        let x = s.input_tuple(xi);
        for ai in 0..d {
            let mut p = BigRational::zero();
            for mask in 0..(1usize << n) {
                let e = &exact[&key(mask, &x)];
                if sign(mask, ai) > 0 {
                    p += e;
                } else {
                    p -= e;
                }
            }
            out.push(p * &scale);
        }
    }
    if let Some(neg) = out.iter().find(|p| **p < BigRational::zero()) {
        return Err(Error::InvalidBox(format!(
            "rationalization produced a negative entry {}",
            Scalar::to_f64(neg)
        )));
    }
    let residual = out
        .iter()
        .zip(&t)
        .map(|(p, f)| (Scalar::to_f64(p) - f).abs())
        .fold(0.0, f64::max);
    let boxed = CorrelationBox::new(s.clone(), Table::Rational(out))?;
    debug_assert!(crate::model::validate_box_with(&boxed, DEFAULT_EPS).valid);
    Ok(Rationalized { boxed, residual })
}
