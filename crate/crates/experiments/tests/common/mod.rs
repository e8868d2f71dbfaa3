use deimkit::linalg::Vector;
use deimkit_experiments::rc_ladder::{capacitances, currents, Input};

/// Adaptive Dormand-Prince 5(4) for `D x' = F(x) + e_1 u(t)`, reporting at `times`.
pub fn dopri_oracle(n: usize, input: Input, times: &[f64], tol: f64) -> Vec<Vector> {
    let d = capacitances(n);
    let rhs = |t: f64, x: &Vector| {
        let mut f = currents(x);
        f[0] += input.at(t);
        Vector::from_fn(n, |i, _| f[i] / d[i])
    };
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [&[f64]; 7] = [
        &[],
        &[0.2],
        &[3.0 / 40.0, 9.0 / 40.0],
        &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
        &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
        &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
        &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    let mut x = Vector::zeros(n);
    let mut t = times[0];
    let mut h: f64 = 1e-4;
    let mut out = vec![x.clone()];
    for &target in &times[1..] {
        while t < target {
            let step = h.min(target - t);
            let mut k: Vec<Vector> = Vec::with_capacity(7);
            for s in 0..7 {
                let mut xs = x.clone();
                for (a, ks) in A[s].iter().zip(&k) {
                    xs += ks * (step * a);
                }
                k.push(rhs(t + C[s] * step, &xs));
            }
            let mut x5 = x.clone();
            let mut x4 = x.clone();
            for s in 0..7 {
                x5 += &k[s] * (step * B5[s]);
                x4 += &k[s] * (step * B4[s]);
            }
            let scale = x5.amax().max(1e-3);
            let err = (&x5 - &x4).amax() / (tol * scale);
            if err <= 1.0 {
                t += step;
                x = x5;
            }
            h = step * (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
        }
        out.push(x.clone());
    }
    out
}
