//! Adaptive Dormand–Prince 5(4) integrator for small fixed-size systems.

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction) with local error control.
/// Returns `None` if the state stops being finite.
pub fn dopri5<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    t1: f64,
    y0: [f64; N],
    rtol: f64,
    atol: f64,
) -> Option<[f64; N]> {
    const C2: f64 = 1.0 / 5.0;
    const C3: f64 = 3.0 / 10.0;
    const C4: f64 = 4.0 / 5.0;
    const C5: f64 = 8.0 / 9.0;
    const A21: f64 = 1.0 / 5.0;
    const A31: f64 = 3.0 / 40.0;
    const A32: f64 = 9.0 / 40.0;
    const A41: f64 = 44.0 / 45.0;
    const A42: f64 = -56.0 / 15.0;
    const A43: f64 = 32.0 / 9.0;
    const A51: f64 = 19372.0 / 6561.0;
    const A52: f64 = -25360.0 / 2187.0;
    const A53: f64 = 64448.0 / 6561.0;
    const A54: f64 = -212.0 / 729.0;
    const A61: f64 = 9017.0 / 3168.0;
    const A62: f64 = -355.0 / 33.0;
    const A63: f64 = 46732.0 / 5247.0;
    const A64: f64 = 49.0 / 176.0;
    const A65: f64 = -5103.0 / 18656.0;
    const B1: f64 = 35.0 / 384.0;
    const B3: f64 = 500.0 / 1113.0;
    const B4: f64 = 125.0 / 192.0;
    const B5: f64 = -2187.0 / 6784.0;
    const B6: f64 = 11.0 / 84.0;
    // error coefficients: b - b*
    const E1: f64 = 71.0 / 57600.0;
    const E3: f64 = -71.0 / 16695.0;
    const E4: f64 = 71.0 / 1920.0;
    const E5: f64 = -17253.0 / 339200.0;
    const E6: f64 = 22.0 / 525.0;
    const E7: f64 = -1.0 / 40.0;

    let span = t1 - t0;
    if span == 0.0 {
        return Some(y0);
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut h = span;
    let comb = |y: &[f64; N], terms: &[(f64, &[f64; N])], h: f64| {
        let mut out = *y;
        for (c, k) in terms {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
        out
    };
    let mut guard = 0usize;
    while (t1 - t) * dir > 0.0 {
        guard += 1;
        if guard > 1_000_000 {
            return None;
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        let k1 = f(t, &y);
        let k2 = f(t + C2 * h, &comb(&y, &[(A21, &k1)], h));
        let k3 = f(t + C3 * h, &comb(&y, &[(A31, &k1), (A32, &k2)], h));
        let k4 = f(t + C4 * h, &comb(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
        let k5 = f(
            t + C5 * h,
            &comb(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
        );
        let k6 = f(
            t + h,
            &comb(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h),
        );
        let y_new = comb(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
        let k7 = f(t + h, &y_new);
        let mut err: f64 = 0.0;
        for i in 0..N {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = atol + rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / scale).abs());
        }
        if !y_new.iter().all(|v| v.is_finite()) {
            if h.abs() < 1e-14 * span.abs() {
                return None;
            }
            h *= 0.25;
            continue;
        }
        if err <= 1.0 {
            t += h;
            y = y_new;
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            if h.abs() < 1e-15 * span.abs().max(1.0) {
                return None;
            }
        }
    }
    Some(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_full_period() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let y = dopri5(&f, 0.0, 2.0 * std::f64::consts::PI, [1.0, 0.0], 1e-12, 1e-14).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10);
        assert!(y[1].abs() < 1e-10);
    }

    #[test]
    fn integrates_backwards() {
        let f = |_t: f64, y: &[f64; 1]| [y[0]];
        let y = dopri5(&f, 2.0, 0.0, [2f64.exp()], 1e-12, 1e-14).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-11);
    }
}
