//! Independent reference implementations shared by the integration tests.
//!
//! Nothing here calls into the engine's numerical kernels: the Hamiltonian is
//! assembled from Pauli Kronecker products, amplitudes use the plain product
//! formula, Chebyshev values use the trigonometric form and propagators are
//! dense matrix series or nalgebra's matrix exponential.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snqs::{CoeffTensor, RbmParams, WindowSpec, C64};

pub type CMat = DMatrix<C64>;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn kron_chain(ops: &[CMat]) -> CMat {
    // site 0 is the least significant bit: op_{L-1} ⊗ … ⊗ op_0
    let mut out = CMat::from_element(1, 1, c(1.0));
    for op in ops.iter().rev() {
        out = out.kronecker(op);
    }
    out
}

fn pauli_z() -> CMat {
    // local index 1 = spin up
    CMat::from_row_slice(2, 2, &[c(-1.0), c(0.0), c(0.0), c(1.0)])
}

fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
}

fn local(l: usize, site: usize, op: &CMat) -> CMat {
    let ops: Vec<CMat> = (0..l).map(|i| if i == site { op.clone() } else { CMat::identity(2, 2) }).collect();
    kron_chain(&ops)
}

/// `J Σ σᶻσᶻ − Σ (h_x σˣ + h_z σᶻ)` with open boundaries.
pub fn hamiltonian(l: usize, j: f64, hx: f64, hz: f64) -> CMat {
    let dim = 1 << l;
    let mut h = CMat::zeros(dim, dim);
    let z: Vec<CMat> = (0..l).map(|i| local(l, i, &pauli_z())).collect();
    for i in 0..l - 1 {
        h += (&z[i] * &z[i + 1]) * c(j);
    }
    for (i, zi) in z.iter().enumerate() {
        h -= local(l, i, &pauli_x()) * c(hx);
        h -= zi * c(hz);
    }
    h
}

pub fn expm(h: &CMat, dt: f64) -> CMat {
    (h * C64::new(0.0, -dt)).exp()
}

/// `Σ_{m ≤ order} (−iHΔt)^m / m!`.
pub fn taylor(h: &CMat, dt: f64, order: usize) -> CMat {
    let a = h * C64::new(0.0, -dt);
    let mut term = CMat::identity(h.nrows(), h.ncols());
    let mut out = term.clone();
    for m in 1..=order {
        term = &term * &a / c(m as f64);
        out += &term;
    }
    out
}

/// `ψ(x) = exp(Σ a_i x_i) Π_j 2cosh(b_j + Σ_i W_ij x_i)` for every code `x`.
pub fn rbm_vector(p: &RbmParams) -> Vec<C64> {
    let l = p.sites();
    (0..1u64 << l)
        .map(|bits| {
            let s: Vec<f64> = (0..l).map(|i| if bits >> i & 1 == 1 { 1.0 } else { -1.0 }).collect();
            let mut amp = s.iter().zip(&p.a).map(|(si, ai)| ai * si).sum::<C64>().exp();
            for j in 0..p.hidden() {
                let theta = p.b[j] + (0..l).map(|i| p.weight(i, j) * s[i]).sum::<C64>();
                amp *= 2.0 * theta.cosh();
            }
            amp
        })
        .collect()
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn matvec(m: &CMat, v: &[C64]) -> Vec<C64> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|k| m[(r, k)] * v[k]).sum()).collect()
}

/// `|⟨b|U|a⟩|² / (⟨a|a⟩⟨b|b⟩)`.
pub fn fidelity(a: &[C64], b: &[C64], u: &CMat) -> f64 {
    inner(b, &matvec(u, a)).norm_sqr() / (norm2(a) * norm2(b))
}

pub fn overlap(a: &[C64], b: &[C64]) -> f64 {
    inner(a, b).norm_sqr() / (norm2(a) * norm2(b))
}

/// `T_q(r)` from `cos(q·acos r)` inside `[−1, 1]` and `cosh` outside.
pub fn cheb(q: usize, r: f64) -> f64 {
    if r.abs() <= 1.0 {
        (q as f64 * r.acos()).cos()
    } else {
        let s = if r < 0.0 && q % 2 == 1 { -1.0 } else { 1.0 };
        s * (q as f64 * r.abs().acosh()).cosh()
    }
}

/// Parameters at time `t` from a coefficient slice (`j·Q + q` layout).
pub fn materialize(coeffs: &[C64], q: usize, w: &WindowSpec, t: f64) -> Vec<C64> {
    let r = 2.0 * (t - w.t_start) / (w.t_end - w.t_start) - 1.0;
    coeffs.chunks_exact(q).map(|row| row.iter().enumerate().map(|(k, v)| v * cheb(k, r)).sum()).collect()
}

pub fn rbm_at(c: &CoeffTensor, coeffs: &[C64], t: f64) -> RbmParams {
    RbmParams::from_flat(c.sites(), c.alpha(), &materialize(coeffs, c.basis_size(), c.window(), t)).unwrap()
}

/// Monomial coefficients of `T_q` in `r`, lowest power first.
pub fn cheb_monomial(q: usize) -> Vec<f64> {
    let mut prev = vec![1.0];
    if q == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 1.0];
    for _ in 1..q {
        let mut next = vec![0.0; cur.len() + 1];
        for (k, v) in cur.iter().enumerate() {
            next[k + 1] += 2.0 * v;
        }
        for (k, v) in prev.iter().enumerate() {
            next[k] -= v;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// `dⁿ/dtⁿ Σ_q coeffs[q] T_q(r(t))` through the monomial expansion.
pub fn poly_derivative(coeffs: &[C64], w: &WindowSpec, t: f64, n: usize) -> C64 {
    let slope = 2.0 / (w.t_end - w.t_start);
    let r = slope * (t - w.t_start) - 1.0;
    let mut mono = vec![C64::default(); coeffs.len()];
    for (q, cq) in coeffs.iter().enumerate() {
        for (k, m) in cheb_monomial(q).iter().enumerate() {
            mono[k] += cq * m;
        }
    }
    let mut acc = C64::default();
    for (k, m) in mono.iter().enumerate().skip(n) {
        let falling: f64 = (0..n).map(|i| (k - i) as f64).product();
        acc += m * falling * r.powi((k - n) as i32);
    }
    acc * slope.powi(n as i32)
}

pub fn random_coeffs(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale))).collect()
}

pub fn random_rbm(l: usize, alpha: usize, scale: f64, seed: u64) -> RbmParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RbmParams::from_flat(l, alpha, &random_coeffs(&mut rng, snqs::param_count(l, alpha), scale)).unwrap()
}

pub fn random_tensor(l: usize, alpha: usize, w: WindowSpec, scale: f64, seed: u64) -> CoeffTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = snqs::param_count(l, alpha) * w.basis_size;
    CoeffTensor::from_raw(l, alpha, w, random_coeffs(&mut rng, n, scale)).unwrap()
}

/// `−ln C_0 − Σ_k ln C_k` over one interval from dense vectors only.
pub fn oracle_loss(c: &CoeffTensor, coeffs: &[C64], t0: f64, dt: f64, steps: usize, u: &CMat, target: &[C64]) -> f64 {
    let states: Vec<Vec<C64>> = (0..=steps).map(|k| rbm_vector(&rbm_at(c, coeffs, t0 + k as f64 * dt))).collect();
    let mut loss = -overlap(&states[0], target).ln();
    for k in 1..=steps {
        loss -= fidelity(&states[k - 1], &states[k], u).ln();
    }
    loss
}

/// Central five-point derivative of `f` along every real degree of freedom,
/// packed as `∂/∂Re + i ∂/∂Im`.
pub fn fd_gradient<F: Fn(&[C64]) -> f64>(x: &[C64], h: f64, f: F) -> Vec<C64> {
    let mut out = Vec::with_capacity(x.len());
    let mut y = x.to_vec();
    for k in 0..x.len() {
        let mut parts = [0.0; 2];
        for (p, dir) in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)].into_iter().enumerate() {
            let mut eval = |s: f64| {
                y[k] = x[k] + dir * s;
                let v = f(&y);
                y[k] = x[k];
                v
            };
            parts[p] = (-eval(2.0 * h) + 8.0 * eval(h) - 8.0 * eval(-h) + eval(-2.0 * h)) / (12.0 * h);
        }
        out.push(C64::new(parts[0], parts[1]));
    }
    out
}

/// Largest componentwise relative error over the real and imaginary parts.
pub fn max_rel_error(g: &[C64], fd: &[C64]) -> f64 {
    let scale = fd.iter().flat_map(|z| [z.re.abs(), z.im.abs()]).fold(0.0, f64::max);
    let floor = 1e-6 * scale;
    g.iter()
        .zip(fd)
        .flat_map(|(a, b)| [(a.re, b.re), (a.im, b.im)])
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(floor).max(1e-300))
        .fold(0.0, f64::max)
}
