//! Reference computations used only by tests.
//!
//! Everything here is written independently of the production code paths it
//! checks: dense matrices instead of in-place amplitude updates, O(n²) pair
//! counting instead of rank sorting, projected gradient instead of SMO.

use num_complex::Complex64;

use crate::simulator::Gate;

type Dense = Vec<Vec<Complex64>>;

fn identity(dim: usize) -> Dense {
    (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                .collect()
        })
        .collect()
}

fn kron(a: &Dense, b: &Dense) -> Dense {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![Complex64::new(0.0, 0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn single_qubit_dense(gate: &Gate) -> Dense {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let rot = |theta: f64, phi: f64, lambda: f64| {
        let (ct, st) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        vec![
            vec![c(ct, 0.0), -c(lambda.cos(), lambda.sin()) * st],
            vec![c(phi.cos(), phi.sin()) * st, c((phi + lambda).cos(), (phi + lambda).sin()) * ct],
        ]
    };
    match *gate {
        Gate::Ry { theta, .. } => {
            let (ct, st) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            vec![vec![c(ct, 0.0), c(-st, 0.0)], vec![c(st, 0.0), c(ct, 0.0)]]
        }
        Gate::Rz { theta, .. } => vec![
            vec![c((theta / 2.0).cos(), -(theta / 2.0).sin()), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c((theta / 2.0).cos(), (theta / 2.0).sin())],
        ],
        Gate::H { .. } => {
            let s = 1.0 / 2f64.sqrt();
            vec![vec![c(s, 0.0), c(s, 0.0)], vec![c(s, 0.0), c(-s, 0.0)]]
        }
        Gate::X { .. } => vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]],
        Gate::U3 { theta, phi, lambda, .. } => rot(theta, phi, lambda),
        Gate::U2 { phi, lambda, .. } => rot(std::f64::consts::FRAC_PI_2, phi, lambda),
        Gate::Cnot { .. } => unreachable!(),
    }
}

/// The full `2^n × 2^n` unitary of one gate (little-endian qubit order).
pub fn dense_gate(n_qubits: usize, gate: &Gate) -> Vec<Vec<Complex64>> {
    let dim = 1usize << n_qubits;
    if let Gate::Cnot { control, target } = *gate {
        // Permutation matrix: |k> -> |k xor 2^t> when bit c of k is set.
        let mut m = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
        for k in 0..dim {
            let out = if (k >> control) & 1 == 1 { k ^ (1 << target) } else { k };
            m[out][k] = Complex64::new(1.0, 0.0);
        }
        return m;
    }
    let target = gate.targets()[0];
    let u = single_qubit_dense(gate);
    // Highest qubit first in the Kronecker chain.
    let mut m = vec![vec![Complex64::new(1.0, 0.0)]];
    for q in (0..n_qubits).rev() {
        let factor = if q == target { u.clone() } else { identity(2) };
        m = kron(&m, &factor);
    }
    m
}

/// Multiplies out the dense unitary of a gate list and applies it to |0...0>.
pub fn dense_simulate(n_qubits: usize, gates: &[Gate]) -> Vec<Complex64> {
    let dim = 1usize << n_qubits;
    let mut u = identity(dim);
    for g in gates {
        u = matmul(&dense_gate(n_qubits, g), &u);
    }
    (0..dim).map(|i| u[i][0]).collect()
}

/// Kronecker product of single-qubit states; `factors[q]` is qubit `q`.
pub fn kron_state(factors: &[[Complex64; 2]]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(1.0, 0.0)];
    for f in factors {
        let mut next = Vec::with_capacity(out.len() * 2);
        for amp_bit in f {
            for lo in &out {
                next.push(amp_bit * lo);
            }
        }
        out = next;
    }
    out
}

/// AUC by explicit all-pairs comparison; ties count one half.
pub fn pair_count_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        if li != 1 {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj != 0 {
                continue;
            }
            den += 1.0;
            if scores[i] > scores[j] {
                num += 1.0;
            } else if scores[i] == scores[j] {
                num += 0.5;
            }
        }
    }
    num / den
}

/// Central finite differences of `f` at `x`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            probe[k] = x[k] + h;
            let up = f(&probe);
            probe[k] = x[k] - h;
            let down = f(&probe);
            probe[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Euclidean projection onto `{0 ≤ c ≤ C, yᵀc = 0}` by bisection on the multiplier.
fn project(z: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let eval = |mu: f64| -> (Vec<f64>, f64) {
        let v: Vec<f64> = z.iter().zip(y).map(|(zi, yi)| (zi + mu * yi).clamp(0.0, c)).collect();
        let s = v.iter().zip(y).map(|(vi, yi)| vi * yi).sum();
        (v, s)
    };
    let bound = z.iter().fold(0.0f64, |m, v| m.max(v.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if eval(mid).1 < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    eval(0.5 * (lo + hi)).0
}

/// Maximizes the SVM dual with accelerated projected gradient run to
/// convergence. `k` is an `n×n` row-major kernel.
pub fn projected_gradient_dual(k: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * k[i * n + j];
    // Lipschitz constant by power iteration on Q.
    let mut v = vec![1.0; n];
    let mut lip = 1.0;
    for _ in 0..500 {
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| q(i, j) * v[j]).sum()).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        lip = norm / v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.iter().map(|x| x / norm).collect();
    }
    let step = 1.0 / (lip * 1.01 + 1e-12);
    let objective = |a: &[f64]| {
        let quad: f64 = (0..n).map(|i| (0..n).map(|j| a[i] * q(i, j) * a[j]).sum::<f64>()).sum();
        a.iter().sum::<f64>() - 0.5 * quad
    };

    let mut x = vec![0.0; n];
    let mut momentum = x.clone();
    let mut t = 1.0f64;
    let mut prev_obj = objective(&x);
    let mut restarted = false;
    for _ in 0..400_000 {
        let grad: Vec<f64> = (0..n).map(|i| 1.0 - (0..n).map(|j| q(i, j) * momentum[j]).sum::<f64>()).collect();
        let z: Vec<f64> = momentum.iter().zip(&grad).map(|(m, g)| m + step * g).collect();
        let x_next = project(&z, y, c);
        let obj = objective(&x_next);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        if !restarted && obj < prev_obj - 1e-15 * (1.0 + prev_obj.abs()) {
            // Adaptive restart.
            momentum = x.clone();
            t = 1.0;
            restarted = true;
            continue;
        }
        restarted = false;
        let beta = (t - 1.0) / t_next;
        momentum = x_next.iter().zip(&x).map(|(a, b)| a + beta * (a - b)).collect();
        let moved = x_next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = x_next;
        t = t_next;
        prev_obj = obj;
        if moved < 1e-15 {
            // Stalled momentum step; stop only if a plain step is stationary too.
            let grad: Vec<f64> = (0..n).map(|i| 1.0 - (0..n).map(|j| q(i, j) * x[j]).sum::<f64>()).collect();
            let z: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a + step * g).collect();
            let plain = project(&z, y, c);
            if plain.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-15) {
                break;
            }
            momentum = x.clone();
            t = 1.0;
        }
    }
    x
}
