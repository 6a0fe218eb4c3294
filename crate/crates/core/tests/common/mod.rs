//! Independent oracles. Dense complex matrices on `num_complex` with their own
//! products, a scaling-and-squaring Taylor exponential, the exact Fréchet
//! derivative of `exp` from a block-triangular exponential, and a vectorized
//! Lyapunov solve. Nothing here touches the library's eigensolver.

#![allow(dead_code)]

use num_complex::Complex64 as C;
use qfi_core::operators::DenseHermitian;

#[derive(Clone, Debug)]
pub struct M {
    pub n: usize,
    pub a: Vec<C>,
}

impl M {
    pub fn zeros(n: usize) -> M {
        M { n, a: vec![C::new(0.0, 0.0); n * n] }
    }

    pub fn eye(n: usize) -> M {
        let mut m = M::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = C::new(1.0, 0.0);
        }
        m
    }

    pub fn from_op(o: &DenseHermitian) -> M {
        let n = o.dim();
        let mut m = M::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let v = o.get(i, j);
                m.a[i * n + j] = C::new(v.re, v.im);
            }
        }
        m
    }

    pub fn at(&self, i: usize, j: usize) -> C {
        self.a[i * self.n + j]
    }

    pub fn mul(&self, b: &M) -> M {
        let n = self.n;
        let mut c = M::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let x = self.a[i * n + k];
                if x == C::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    c.a[i * n + j] += x * b.a[k * n + j];
                }
            }
        }
        c
    }

    pub fn add(&self, b: &M, s: f64) -> M {
        M { n: self.n, a: self.a.iter().zip(&b.a).map(|(x, y)| x + y * s).collect() }
    }

    pub fn scale(&self, s: f64) -> M {
        M { n: self.n, a: self.a.iter().map(|x| x * s).collect() }
    }

    pub fn trace(&self) -> C {
        (0..self.n).map(|i| self.at(i, i)).sum()
    }

    pub fn norm1(&self) -> f64 {
        (0..self.n).map(|j| (0..self.n).map(|i| self.at(i, j).norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn kron(&self, b: &M) -> M {
        let n = self.n * b.n;
        let mut c = M::zeros(n);
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..b.n {
                    for l in 0..b.n {
                        c.a[(i * b.n + k) * n + j * b.n + l] = self.at(i, j) * b.at(k, l);
                    }
                }
            }
        }
        c
    }
}

/// `exp(A)` by Taylor series on `A / 2^s` with `||A / 2^s||_1 <= 1/4`, then squaring.
pub fn expm(a: &M) -> M {
    let norm = a.norm1();
    let s = if norm > 0.25 { (norm / 0.25).log2().ceil() as i32 } else { 0 };
    let x = a.scale(0.5f64.powi(s));
    let mut term = M::eye(a.n);
    let mut sum = M::eye(a.n);
    for k in 1..30 {
        term = term.mul(&x).scale(1.0 / k as f64);
        sum = sum.add(&term, 1.0);
        if term.max_abs() < 1e-18 * sum.max_abs() {
            break;
        }
    }
    for _ in 0..s {
        sum = sum.mul(&sum);
    }
    sum
}

/// Gibbs state, its exact derivative along `o`, and `Z`-free ingredients.
pub struct Thermal {
    pub rho: M,
    /// `d rho / d theta` for `H(theta) = H + theta O`.
    pub drho: M,
}

/// `exp(-beta H) / Z` and its exact `theta`-derivative from the upper-right
/// block of `exp([[-beta H, -beta O], [0, -beta H]])`.
pub fn thermal(h: &M, o: &M, beta: f64) -> Thermal {
    let n = h.n;
    let shift = (0..n).map(|i| h.at(i, i).re).fold(f64::INFINITY, f64::min) - h.norm1();
    let mut big = M::zeros(2 * n);
    for i in 0..n {
        for j in 0..n {
            let hij = h.at(i, j) - if i == j { C::new(shift, 0.0) } else { C::new(0.0, 0.0) };
            big.a[i * 2 * n + j] = -hij * beta;
            big.a[(n + i) * 2 * n + n + j] = -hij * beta;
            big.a[i * 2 * n + n + j] = -o.at(i, j) * beta;
        }
    }
    let e = expm(&big);
    let mut w = M::zeros(n);
    let mut dw = M::zeros(n);
    for i in 0..n {
        for j in 0..n {
            w.a[i * n + j] = e.at(i, j);
            dw.a[i * n + j] = e.at(i, n + j);
        }
    }
    let z = w.trace().re;
    let dz = dw.trace().re;
    let rho = w.scale(1.0 / z);
    let drho = dw.scale(1.0 / z).add(&rho, -dz / z);
    Thermal { rho, drho }
}

/// Solves `rho L + L rho = 2 drho` by Gaussian elimination on the
/// `d^2 x d^2` vectorized system.
pub fn lyapunov(rho: &M, drho: &M) -> M {
    let n = rho.n;
    let nn = n * n;
    let mut a = vec![C::new(0.0, 0.0); nn * nn];
    let mut b = vec![C::new(0.0, 0.0); nn];
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for k in 0..n {
                a[row * nn + k * n + j] += rho.at(i, k);
                a[row * nn + i * n + k] += rho.at(k, j);
            }
            b[row] = drho.at(i, j) * 2.0;
        }
    }
    for col in 0..nn {
        let p = (col..nn).max_by(|&x, &y| a[x * nn + col].norm().total_cmp(&a[y * nn + col].norm())).unwrap();
        if p != col {
            for k in 0..nn {
                a.swap(col * nn + k, p * nn + k);
            }
            b.swap(col, p);
        }
        let d = a[col * nn + col];
        for r in col + 1..nn {
            let f = a[r * nn + col] / d;
            if f == C::new(0.0, 0.0) {
                continue;
            }
            for k in col..nn {
                let v = a[col * nn + k];
                a[r * nn + k] -= f * v;
            }
            let v = b[col];
            b[r] -= f * v;
        }
    }
    let mut x = vec![C::new(0.0, 0.0); nn];
    for r in (0..nn).rev() {
        let mut s = b[r];
        for k in r + 1..nn {
            s -= a[r * nn + k] * x[k];
        }
        x[r] = s / a[r * nn + r];
    }
    M { n, a: x }
}

/// `(lb, F, ub1, ub2)` from their definitions: `F = Tr[rho L^2]`,
/// `chi = -Tr[O drho]`, `Var = <O^2> - <O>^2`.
pub struct OracleChain {
    pub lb: f64,
    pub qfi: f64,
    pub ub1: f64,
    pub ub2: f64,
    pub chi: f64,
    pub var: f64,
}

pub fn oracle_chain(h: &DenseHermitian, o: &DenseHermitian, beta: f64) -> OracleChain {
    let (hm, om) = (M::from_op(h), M::from_op(o));
    let t = thermal(&hm, &om, beta);
    let l = lyapunov(&t.rho, &t.drho);
    let qfi = t.rho.mul(&l).mul(&l).trace().re;
    let chi = -om.mul(&t.drho).trace().re;
    let mean = t.rho.mul(&om).trace().re;
    let var = t.rho.mul(&om).mul(&om).trace().re - mean * mean;
    let ub1 = beta * chi;
    let ub2 = beta * beta * var;
    OracleChain { lb: ub1 * ub1 / ub2, qfi, ub1, ub2, chi, var }
}

/// Relative closeness with an absolute floor.
pub fn close(a: f64, b: f64, rtol: f64, atol: f64) -> bool {
    (a - b).abs() <= rtol * a.abs().max(b.abs()) + atol
}
