use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::state::{Gate, NoiseSpec, StateVec};
use crate::error::{QsvdError, Result};
use crate::tolerance::Tolerances;

/// How factor updates are carried out and read out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fidelity {
    /// Direct matrix updates, no circuits.
    Classical,
    /// Circuits with exact outcome probabilities.
    Exact,
    /// Finite shots, ideal gates and readout.
    Sampled,
    /// Finite shots with depolarizing gates and readout errors.
    Noisy,
}

impl std::str::FromStr for Fidelity {
    type Err = QsvdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(Fidelity::Classical),
            "exact" => Ok(Fidelity::Exact),
            "sampled" => Ok(Fidelity::Sampled),
            "noisy" => Ok(Fidelity::Noisy),
            other => {
                Err(QsvdError::Config(format!("unknown mode `{other}` (expected classical, exact, sampled or noisy)")))
            }
        }
    }
}

impl std::fmt::Display for Fidelity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Fidelity::Classical => "classical",
            Fidelity::Exact => "exact",
            Fidelity::Sampled => "sampled",
            Fidelity::Noisy => "noisy",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShotPlan {
    pub n_shots: u64,
    pub rng_seed: u64,
}

impl ShotPlan {
    pub fn new(n_shots: u64, rng_seed: u64) -> Result<Self> {
        if n_shots == 0 {
            return Err(QsvdError::Config("n_shots must be at least 1".into()));
        }
        Ok(ShotPlan { n_shots, rng_seed })
    }
}

/// Outcome statistics over the full register.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasRecord {
    /// `None` when probabilities were read off the state directly.
    pub counts: Option<Vec<u64>>,
    pub n_shots: u64,
    pub probs: Vec<f64>,
    /// Binomial standard error `√(p(1−p)/n)` per outcome; zero when exact.
    pub stderr: Vec<f64>,
}

impl MeasRecord {
    pub fn exact(probs: Vec<f64>) -> Self {
        let stderr = vec![0.0; probs.len()];
        MeasRecord { counts: None, n_shots: 0, probs, stderr }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        let n: u64 = counts.iter().sum();
        let nf = n.max(1) as f64;
        let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / nf).collect();
        let stderr = probs.iter().map(|&p| (p * (1.0 - p) / nf).sqrt()).collect();
        MeasRecord { counts: Some(counts), n_shots: n, probs, stderr }
    }
}

/// Draw `n` outcomes from `probs` by sequential binomial splitting.
pub fn multinomial<R: Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut left = n;
    let mut mass: f64 = probs.iter().sum();
    for (c, &p) in counts.iter_mut().zip(probs) {
        if left == 0 {
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = binomial(left, q, rng);
        *c = k;
        left -= k;
        mass -= p;
    }
    if left > 0 {
        // rounding left some mass unassigned; give it to the last nonzero outcome
        if let Some(i) = probs.iter().rposition(|&p| p > 0.0) {
            counts[i] += left;
        }
    }
    counts
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if p <= 0.0 || n == 0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("valid binomial parameters").sample(rng)
    }
}

/// Flip every bit of every recorded outcome independently with probability `p`.
pub fn readout_flips<R: Rng + ?Sized>(counts: &[u64], n_qubits: usize, p: f64, rng: &mut R) -> Vec<u64> {
    let mut cur = counts.to_vec();
    if p <= 0.0 {
        return cur;
    }
    for q in 0..n_qubits {
        let bit = 1usize << q;
        let mut next = vec![0u64; cur.len()];
        for (i, &c) in cur.iter().enumerate() {
            let f = binomial(c, p, rng);
            next[i] += c - f;
            next[i ^ bit] += f;
        }
        cur = next;
    }
    cur
}

/// Sample `plan.n_shots` measurements of `s` in the computational basis.
pub fn sample(s: &StateVec, plan: &ShotPlan, noise: &NoiseSpec) -> MeasRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(plan.rng_seed);
    let counts = multinomial(plan.n_shots, &s.probabilities(), &mut rng);
    MeasRecord::from_counts(readout_flips(&counts, s.n_qubits(), noise.p_ro, &mut rng))
}

/// Run `gates` on `init` for `n` shots with stochastic depolarizing noise.
///
/// Shots that share a noise history share one statevector: at each gate the
/// current group is split into an error-free part and one subgroup per drawn
/// Pauli string, so the cost scales with the number of distinct histories
/// rather than with `n`.
pub fn run_shots<R: Rng + ?Sized>(init: &StateVec, gates: &[Gate], n: u64, noise: &NoiseSpec, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; init.dim()];
    branch(init.clone(), gates, n, noise, rng, &mut counts);
    readout_flips(&counts, init.n_qubits(), noise.p_ro, rng)
}

fn branch<R: Rng + ?Sized>(
    mut state: StateVec,
    gates: &[Gate],
    n: u64,
    noise: &NoiseSpec,
    rng: &mut R,
    counts: &mut [u64],
) {
    let Some((gate, rest)) = gates.split_first() else {
        for (c, k) in counts.iter_mut().zip(multinomial(n, &state.probabilities(), rng)) {
            *c += k;
        }
        return;
    };
    state.apply(gate);
    let hit = binomial(n, noise.gate_error(gate.arity()), rng);
    if hit > 0 {
        let paulis = 1usize << (2 * gate.arity());
        let split = multinomial(hit, &vec![1.0; paulis], rng);
        for (code, &k) in split.iter().enumerate() {
            if k == 0 || code == 0 {
                continue;
            }
            let mut s = state.clone();
            s.apply_pauli(&gate.qubits, code);
            branch(s, rest, k, noise, rng, counts);
        }
        // identity draws rejoin the error-free group
        branch(state, rest, n - hit + split[0], noise, rng, counts);
    } else {
        branch(state, rest, n, noise, rng, counts);
    }
}

/// Executes circuits at a given fidelity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Backend {
    pub fidelity: Fidelity,
    pub n_shots: u64,
    pub noise: NoiseSpec,
    pub tol: Tolerances,
}

impl Backend {
    pub fn exact() -> Self {
        Backend { fidelity: Fidelity::Exact, n_shots: 1_000_000, noise: NoiseSpec::NONE, tol: Tolerances::default() }
    }

    pub fn sampled(n_shots: u64) -> Self {
        Backend { fidelity: Fidelity::Sampled, n_shots, ..Self::exact() }
    }

    pub fn noisy(n_shots: u64, noise: NoiseSpec) -> Self {
        Backend { fidelity: Fidelity::Noisy, n_shots, noise, ..Self::exact() }
    }

    /// `sign_floor_factor / √n_shots`.
    pub fn sign_floor(&self) -> f64 {
        self.tol.sign_floor_factor / (self.n_shots.max(1) as f64).sqrt()
    }

    pub fn effective_noise(&self) -> NoiseSpec {
        match self.fidelity {
            Fidelity::Noisy => self.noise,
            _ => NoiseSpec::NONE,
        }
    }

    /// Prepare `init`, apply `gates` and measure every qubit.
    pub fn measure(&self, init: &StateVec, gates: &[Gate], seed: u64) -> MeasRecord {
        match self.fidelity {
            Fidelity::Classical | Fidelity::Exact => {
                let mut s = init.clone();
                for g in gates {
                    s.apply(g);
                }
                MeasRecord::exact(s.probabilities())
            }
            Fidelity::Sampled | Fidelity::Noisy => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                MeasRecord::from_counts(run_shots(init, gates, self.n_shots, &self.effective_noise(), &mut rng))
            }
        }
    }
}

/// Independent sub-streams of one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    URow = 1,
    VRow = 2,
    PhaseCos = 3,
    PhaseSin = 4,
    Dilation = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one circuit: splitmix64 folded over master seed, step, role and
/// index, in that order.
pub fn derive_seed(master: u64, step: u64, role: Role, index: u64) -> u64 {
    [step, role as u64, index].iter().fold(splitmix64(master), |h, &x| splitmix64(h ^ x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::MatC;
    use num_complex::Complex64;

    #[test]
    fn basis_state_always_same_outcome() {
        let s = StateVec::embed(&[0.0, 0.0, 1.0, 0.0], 2).unwrap();
        let rec = sample(&s, &ShotPlan::new(1000, 3).unwrap(), &NoiseSpec::NONE);
        assert_eq!(rec.counts, Some(vec![0, 0, 1000, 0]));
    }

    #[test]
    fn uniform_superposition_estimates() {
        let s = StateVec::embed(&[1.0, 1.0], 1).unwrap();
        let rec = sample(&s, &ShotPlan::new(1_000_000, 11).unwrap(), &NoiseSpec::NONE);
        assert_eq!(rec.counts.as_ref().unwrap().iter().sum::<u64>(), 1_000_000);
        for &p in &rec.probs {
            assert!((p - 0.5).abs() <= 3.0 * 5e-4);
        }
        assert!((rec.stderr[0] - 5e-4).abs() < 1e-6);
    }

    #[test]
    fn readout_confusion() {
        let s = StateVec::zero(1);
        let n = 1_000_000u64;
        let noise = NoiseSpec { p_ro: 0.01, ..NoiseSpec::NONE };
        let rec = sample(&s, &ShotPlan::new(n, 5).unwrap(), &noise);
        let se = (0.01f64 * 0.99 / n as f64).sqrt();
        assert!((rec.probs[1] - 0.01).abs() <= 3.0 * se, "{}", rec.probs[1]);
    }

    #[test]
    fn multinomial_conserves_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = multinomial(12345, &[0.1, 0.0, 0.6, 0.3], &mut rng);
        assert_eq!(c.iter().sum::<u64>(), 12345);
        assert_eq!(c[1], 0);
    }

    #[test]
    fn shot_groups_match_full_depolarizing() {
        // p1 = 1 on |0⟩: outcome 1 with probability 1/2
        let g = Gate::new(MatC::identity(2), vec![0], 1e-10).unwrap();
        let noise = NoiseSpec { p1: 1.0, ..NoiseSpec::NONE };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = run_shots(&StateVec::zero(1), &[g], 400_000, &noise, &mut rng);
        let p1 = c[1] as f64 / 400_000.0;
        assert!((p1 - 0.5).abs() < 3.0 * (0.25f64 / 400_000.0).sqrt());
    }

    #[test]
    fn two_qubit_depolarizing_rate() {
        // after p2 on a 2-qubit identity, P(|00⟩) = 1 − p·(3/4)
        let id = MatC::<f64>::identity(4);
        let g = Gate::new(id, vec![0, 1], 1e-10).unwrap();
        let p = 0.2;
        let noise = NoiseSpec { p2: p, ..NoiseSpec::NONE };
        let n = 1_000_000u64;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = run_shots(&StateVec::zero(2), &[g], n, &noise, &mut rng);
        let p00 = c[0] as f64 / n as f64;
        let expect = 1.0 - p * 0.75;
        assert!((p00 - expect).abs() < 3.0 * (expect * (1.0 - expect) / n as f64).sqrt());
    }

    #[test]
    fn backend_is_deterministic() {
        let b = Backend::noisy(10_000, NoiseSpec { p1: 0.1, p2: 0.1, p_ro: 0.05 });
        let s = StateVec::embed(&[0.3, 0.4, 0.5, 0.7], 2).unwrap();
        let h = Gate::hadamard(1);
        let d = Gate::diagonal(&[Complex64::new(1.0, 0.0); 4], vec![0, 1], 1e-10).unwrap();
        let gates = [h, d];
        assert_eq!(b.measure(&s, &gates, 99), b.measure(&s, &gates, 99));
        assert_ne!(b.measure(&s, &gates, 99), b.measure(&s, &gates, 100));
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, 0, Role::URow, 0);
        assert_ne!(a, derive_seed(1, 0, Role::URow, 1));
        assert_ne!(a, derive_seed(1, 1, Role::URow, 0));
        assert_ne!(a, derive_seed(1, 0, Role::VRow, 0));
        assert_ne!(a, derive_seed(2, 0, Role::URow, 0));
        assert_eq!(a, derive_seed(1, 0, Role::URow, 0));
    }
}
