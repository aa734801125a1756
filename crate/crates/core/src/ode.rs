//! Classic fixed-step fourth-order Runge-Kutta.

/// Advances `y` by one step of size `h` under `f(t, y)`.
pub fn rk4_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], h: f64) -> [f64; N]
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let axpy = |a: &[f64; N], k: &[f64; N], s: f64| -> [f64; N] {
        let mut out = *a;
        for (o, ki) in out.iter_mut().zip(k) {
            *o += s * ki;
        }
        out
    };
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &axpy(y, &k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, &axpy(y, &k2, 0.5 * h));
    let k4 = f(t + h, &axpy(y, &k3, h));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates over `[t0, t0 + duration]` with `n` equal steps.
pub fn integrate<const N: usize, F>(mut f: F, t0: f64, y0: [f64; N], duration: f64, n: usize) -> [f64; N]
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let h = duration / n as f64;
    let mut y = y0;
    for i in 0..n {
        y = rk4_step(&mut f, t0 + i as f64 * h, &y, h);
    }
    y
}
