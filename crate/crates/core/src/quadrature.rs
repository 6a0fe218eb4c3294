//! Composite Gauss-Legendre rules and compensated summation.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// from Newton iteration on `P_n` started at the Chebyshev-like guesses.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A fixed set of nodes and weights on the real line.
#[derive(Clone, Debug, Default)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Appends the `order`-point rule mapped onto each `[a, b]` panel.
    pub fn add_panels(&mut self, panels: impl IntoIterator<Item = (f64, f64)>, order: usize) {
        let (x, w) = gauss_legendre(order);
        for (a, b) in panels {
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (xi, wi) in x.iter().zip(&w) {
                self.nodes.push(mid + half * xi);
                self.weights.push(half * wi);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        neumaier_sum(self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)))
    }
}

/// `n` equal panels on `[a, b]`.
pub fn uniform_panels(a: f64, b: f64, n: usize) -> impl Iterator<Item = (f64, f64)> {
    let h = (b - a) / n as f64;
    (0..n).map(move |k| (a + k as f64 * h, if k + 1 == n { b } else { a + (k + 1) as f64 * h }))
}

/// Panels `[h 2^-(j+1), h 2^-j]` for `j < levels`, refining towards an
/// integrable endpoint singularity at 0.
pub fn dyadic_panels(h: f64, levels: usize) -> impl Iterator<Item = (f64, f64)> {
    (0..levels).map(move |j| (h * 0.5f64.powi(j as i32 + 1), h * 0.5f64.powi(j as i32)))
}

/// Neumaier's compensated sum.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}
