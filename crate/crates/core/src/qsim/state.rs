use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QsvdError, Result};
use crate::matcore::{MatC, MatR};

/// Register amplitudes. Qubit `q` is bit `q` of the basis index.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVec {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVec {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        StateVec { n_qubits, amps }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n = amps.len();
        if n == 0 || !n.is_power_of_two() {
            return Err(QsvdError::InvalidInput(format!("register size {n} is not a power of two")));
        }
        let norm2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if !((norm2 - 1.0).abs() <= 1e-12) {
            return Err(QsvdError::InvalidInput(format!("state norm² = {norm2}, expected 1")));
        }
        Ok(StateVec { n_qubits: n.trailing_zeros() as usize, amps })
    }

    /// Normalise a real vector and embed it in the smallest register that
    /// holds it; padding amplitudes are zero.
    pub fn embed(v: &[f64], n_qubits: usize) -> Result<Self> {
        if v.len() > 1 << n_qubits {
            return Err(QsvdError::InvalidInput(format!("{} entries do not fit {n_qubits} qubits", v.len())));
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(QsvdError::InvalidInput(format!("cannot embed vector of norm {norm}")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        for (a, &x) in amps.iter_mut().zip(v) {
            *a = Complex64::new(x / norm, 0.0);
        }
        Ok(StateVec { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Apply a gate without noise.
    pub fn apply(&mut self, gate: &Gate) {
        let k = gate.qubits.len();
        let m = 1usize << k;
        let mask: usize = gate.qubits.iter().map(|&q| 1 << q).sum();
        let offsets: Vec<usize> =
            (0..m).map(|l| (0..k).filter(|&b| l >> b & 1 == 1).map(|b| 1 << gate.qubits[b]).sum()).collect();
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            for (b, &off) in buf.iter_mut().zip(&offsets) {
                *b = self.amps[base | off];
            }
            for (r, &off) in offsets.iter().enumerate() {
                let row = gate.matrix.row(r);
                self.amps[base | off] = row.iter().zip(&buf).map(|(g, x)| g * x).sum();
            }
        }
    }

    /// Pauli string `code` on `qubits`; two bits per qubit, 0 = I, 1 = X,
    /// 2 = Y, 3 = Z, least significant pair on `qubits[0]`.
    pub fn apply_pauli(&mut self, qubits: &[usize], code: usize) {
        for (b, &q) in qubits.iter().enumerate() {
            let bit = 1usize << q;
            match code >> (2 * b) & 3 {
                0 => {}
                1 => self.flip(bit, Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)),
                2 => self.flip(bit, Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0)),
                _ => {
                    for (i, a) in self.amps.iter_mut().enumerate() {
                        if i & bit != 0 {
                            *a = -*a;
                        }
                    }
                }
            }
        }
    }

    // new[i] = f0·old[i|bit] for bit clear, new[i|bit] = f1·old[i]
    fn flip(&mut self, bit: usize, f0: Complex64, f1: Complex64) {
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = f0 * a1;
                self.amps[i | bit] = f1 * a0;
            }
        }
    }
}

/// Unitary acting on an ordered qubit subset; local index bit `b` is
/// register qubit `qubits[b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub matrix: MatC<f64>,
    pub qubits: Vec<usize>,
}

impl Gate {
    /// Checks shape and unitarity (`‖U^H U − I‖_F ≤ tol`).
    pub fn new(matrix: MatC<f64>, qubits: Vec<usize>, tol: f64) -> Result<Self> {
        let dim = 1usize << qubits.len();
        if !matrix.is_square() || matrix.rows() != dim {
            return Err(QsvdError::InvalidInput(format!(
                "gate on {} qubits needs a {dim}x{dim} matrix, got {}x{}",
                qubits.len(),
                matrix.rows(),
                matrix.cols()
            )));
        }
        let mut seen = qubits.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != qubits.len() {
            return Err(QsvdError::InvalidInput("gate qubits must be distinct".into()));
        }
        let deviation = matrix.orthogonality_error();
        if !(deviation <= tol) {
            return Err(QsvdError::InvalidGate { deviation });
        }
        Ok(Gate { matrix, qubits })
    }

    /// Real `n×n` matrix padded with an identity block to `2^k`, acting on
    /// qubits `0..k`.
    pub fn padded_real(m: &MatR<f64>, k: usize, tol: f64) -> Result<Self> {
        let dim = 1usize << k;
        let n = m.rows();
        let full = MatC::from_fn(dim, dim, |i, j| {
            let x = if i < n && j < n {
                m[(i, j)]
            } else if i == j {
                1.0
            } else {
                0.0
            };
            Complex64::new(x, 0.0)
        });
        Gate::new(full, (0..k).collect(), tol)
    }

    pub fn diagonal(d: &[Complex64], qubits: Vec<usize>, tol: f64) -> Result<Self> {
        Gate::new(MatC::from_diag(d), qubits, tol)
    }

    pub fn hadamard(qubit: usize) -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let m = MatC::from_rows(&[
            &[Complex64::new(r, 0.0), Complex64::new(r, 0.0)],
            &[Complex64::new(r, 0.0), Complex64::new(-r, 0.0)],
        ]);
        Gate { matrix: m, qubits: vec![qubit] }
    }

    /// Hadamard mixing of basis states `a` and `b` of a `k`-qubit register,
    /// identity elsewhere.
    pub fn two_level_hadamard(a: usize, b: usize, k: usize) -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut m = MatC::<f64>::identity(1 << k);
        m[(a, a)] = Complex64::new(r, 0.0);
        m[(a, b)] = Complex64::new(r, 0.0);
        m[(b, a)] = Complex64::new(r, 0.0);
        m[(b, b)] = Complex64::new(-r, 0.0);
        Gate { matrix: m, qubits: (0..k).collect() }
    }

    pub fn arity(&self) -> usize {
        self.qubits.len()
    }
}

/// Depolarizing and readout error rates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// Depolarizing probability after each single-qubit gate.
    pub p1: f64,
    /// Depolarizing probability after each gate on two or more qubits.
    pub p2: f64,
    /// Symmetric bit-flip probability per measured qubit.
    pub p_ro: f64,
}

impl NoiseSpec {
    pub const NONE: NoiseSpec = NoiseSpec { p1: 0.0, p2: 0.0, p_ro: 0.0 };

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p1", self.p1), ("p2", self.p2), ("p_ro", self.p_ro)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(QsvdError::Config(format!("noise {name} = {p} is outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn gate_error(&self, arity: usize) -> f64 {
        if arity <= 1 {
            self.p1
        } else {
            self.p2
        }
    }

    pub fn is_silent(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0 && self.p_ro == 0.0
    }
}

/// One noisy trajectory of a gate: apply `gate`, then with probability `p`
/// a Pauli string drawn uniformly from all `4^k` on the touched qubits.
pub fn apply_unitary<R: Rng + ?Sized>(s: &StateVec, gate: &Gate, noise: &NoiseSpec, rng: &mut R) -> StateVec {
    let mut out = s.clone();
    out.apply(gate);
    let p = noise.gate_error(gate.arity());
    if p > 0.0 && rng.random::<f64>() < p {
        let code = rng.random_range(0..1usize << (2 * gate.arity()));
        out.apply_pauli(&gate.qubits, code);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hadamard_on_zero() {
        let mut s = StateVec::zero(1);
        s.apply(&Gate::hadamard(0));
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[0] - c(r, 0.0)).norm() < 1e-15);
        assert!((s.amplitudes()[1] - c(r, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn identity_gate_noiseless() {
        let s = StateVec::embed(&[0.6, 0.8], 1).unwrap();
        let g = Gate::new(MatC::identity(2), vec![0], 1e-10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(apply_unitary(&s, &g, &NoiseSpec::NONE, &mut rng), s);
    }

    #[test]
    fn gate_on_high_qubit_acts_on_that_bit() {
        // X on qubit 1 of |00⟩ gives |10⟩, basis index 2
        let x = MatC::from_rows(&[&[c(0.0, 0.0), c(1.0, 0.0)], &[c(1.0, 0.0), c(0.0, 0.0)]]);
        let mut s = StateVec::zero(2);
        s.apply(&Gate::new(x, vec![1], 1e-10).unwrap());
        assert_eq!(s.probabilities(), vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn qubit_order_within_gate() {
        // CNOT with control = local bit 0 (qubit 1), target = local bit 1 (qubit 0)
        let o = c(0.0, 0.0);
        let l = c(1.0, 0.0);
        let cnot = MatC::from_rows(&[&[l, o, o, o], &[o, o, o, l], &[o, o, l, o], &[o, l, o, o]]);
        let g = Gate::new(cnot, vec![1, 0], 1e-10).unwrap();
        let mut s = StateVec::embed(&[0.0, 0.0, 1.0, 0.0], 2).unwrap();
        s.apply(&g);
        assert_eq!(s.probabilities(), vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn rejects_non_unitary() {
        let m = MatC::from_diag(&[c(1.0, 0.0), c(1.1, 0.0)]);
        assert!(matches!(Gate::new(m, vec![0], 1e-10), Err(QsvdError::InvalidGate { .. })));
    }

    #[test]
    fn paulis_match_matrices() {
        let s0 = StateVec::from_amplitudes(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let mut y = s0.clone();
        y.apply_pauli(&[0], 2);
        // Y = [[0, −i], [i, 0]]
        assert!((y.amplitudes()[0] - c(0.0, -1.0) * c(0.0, 0.8)).norm() < 1e-15);
        assert!((y.amplitudes()[1] - c(0.0, 1.0) * c(0.6, 0.0)).norm() < 1e-15);
        let mut z = s0.clone();
        z.apply_pauli(&[0], 3);
        assert_eq!(z.amplitudes()[1], c(0.0, -0.8));
    }

    #[test]
    fn full_depolarizing_mixes_one_qubit() {
        let trials = 20_000;
        let noise = NoiseSpec { p1: 1.0, ..NoiseSpec::NONE };
        let g = Gate::new(MatC::identity(2), vec![0], 1e-10).unwrap();
        let s = StateVec::zero(1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut rho = [[c(0.0, 0.0); 2]; 2];
        for _ in 0..trials {
            let out = apply_unitary(&s, &g, &noise, &mut rng);
            let a = out.amplitudes();
            for i in 0..2 {
                for j in 0..2 {
                    rho[i][j] += a[i] * a[j].conj() / trials as f64;
                }
            }
        }
        // trace distance to I/2 for a 2x2 Hermitian difference
        let (d0, d01) = (rho[0][0].re - 0.5, rho[0][1]);
        let td = (d0 * d0 + d01.norm_sqr()).sqrt();
        assert!(td <= 3.0 / (trials as f64).sqrt(), "trace distance {td}");
    }
}
