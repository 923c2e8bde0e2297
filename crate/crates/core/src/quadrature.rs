//! Gauss rules shared by the sequential orthant integrator and the grid oracle.

/// Nodes and weights of an `order`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    for i in 0..m {
        // Tricomi's initial guess, refined by Newton on P_order.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(order, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=order {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if order == 0 {
        return (1.0, 0.0);
    }
    let n = order as f64;
    let d = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Nodes and weights of an `order`-point Gauss rule for the standard normal
/// measure (probabilists' Hermite). Weights sum to one.
pub fn gauss_hermite_normal(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    // Golub–Welsch: eigenvalues of the Jacobi matrix, then Newton polish and
    // Christoffel weights from the orthonormal recurrence.
    let jacobi = nalgebra::DMatrix::from_fn(order, order, |r, c| {
        if r + 1 == c || c + 1 == r {
            (r.max(c) as f64).sqrt()
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut weights = vec![0.0; order];
    for (x, w) in nodes.iter_mut().zip(weights.iter_mut()) {
        for _ in 0..20 {
            let (p, d, _) = orthonormal_hermite(order, *x);
            let dx = p / d;
            *x -= dx;
            if dx.abs() < 1e-15 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, _, sum_sq) = orthonormal_hermite(order, *x);
        *w = 1.0 / sum_sq;
    }
    // symmetrize to remove eigen-solver noise
    for i in 0..order / 2 {
        let j = order - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        nodes[i] = -x;
        nodes[j] = x;
        weights[i] = w;
        weights[j] = w;
    }
    if order % 2 == 1 {
        nodes[order / 2] = 0.0;
    }
    (nodes, weights)
}

/// Returns `(p_order(x), p_order'(x), Σ_{k<order} p_k(x)²)` for the
/// orthonormal Hermite polynomials under N(0, 1).
fn orthonormal_hermite(order: usize, x: f64) -> (f64, f64, f64) {
    let mut p_prev = 0.0;
    let mut p = 1.0;
    let mut d_prev = 0.0;
    let mut d = 0.0;
    let mut sum_sq = 0.0;
    for k in 0..order {
        sum_sq += p * p;
        let kf = k as f64;
        let next = (x * p - kf.sqrt() * p_prev) / (kf + 1.0).sqrt();
        let d_next = (p + x * d - kf.sqrt() * d_prev) / (kf + 1.0).sqrt();
        p_prev = p;
        p = next;
        d_prev = d;
        d = d_next;
    }
    (p, d, sum_sq)
}
