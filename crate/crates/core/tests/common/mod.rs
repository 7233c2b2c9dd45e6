//! Quadrature oracles shared by the integration tests. Nothing here calls the
//! library's elliptic routines.
#![allow(dead_code, clippy::excessive_precision)]

use std::f64::consts::FRAC_PI_2;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let d = h * XGK[j];
        let s = f(c - d) + f(c + d);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

fn adapt(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (v, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return v;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss–Kronrod (7, 15) quadrature to roughly `1e-15` relative.
pub fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let scale = gk15(&f, a, b).0.abs().max(1e-300);
    adapt(&f, a, b, 1e-15 * scale, 40)
}

pub fn delta(q: f64, t: f64) -> f64 {
    let s = t.sin();
    (1.0 - q * q * s * s).sqrt()
}

pub fn k_oracle(q: f64) -> f64 {
    quad(|t| 1.0 / delta(q, t), 0.0, FRAC_PI_2)
}

pub fn e_oracle(q: f64) -> f64 {
    quad(|t| delta(q, t), 0.0, FRAC_PI_2)
}

pub fn f_inc_oracle(x: f64, q: f64) -> f64 {
    quad(|t| 1.0 / delta(q, t), 0.0, x)
}

pub fn e_inc_oracle(x: f64, q: f64) -> f64 {
    quad(|t| delta(q, t), 0.0, x)
}

/// `E_λ` of the one-mode q-family member `γ_w(·, q)`, from the substitution
/// `φ = am(αs − K)`: `B = 8αq² ∫_0^{π/2} cos²φ / Δ(φ) dφ`, `L = ℓK/|2E−K|`.
pub fn q_family_energy(q: f64, lambda: f64, ell: f64) -> f64 {
    let k = k_oracle(q);
    let e = e_oracle(q);
    let d = (2.0 * e - k).abs();
    let alpha = 2.0 * d / ell;
    let b = 8.0 * alpha * q * q * quad(|t| t.cos().powi(2) / delta(q, t), 0.0, FRAC_PI_2);
    b + lambda * ell * k / d
}

/// Central differences of order 1, 2, 3 with step `h`.
pub fn d1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

pub fn d2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

pub fn d3(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// The curve stored in `tests/data/loop_escape.csv` as `(s, x, y, theta, k)` rows.
pub fn read_curve_csv(text: &str) -> Vec<[f64; 5]> {
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|c| c.trim().parse().unwrap()).collect();
            [v[0], v[1], v[2], v[3], v[4]]
        })
        .collect()
}

#[test]
fn quadrature_sanity() {
    assert!(rel(quad(f64::sin, 0.0, std::f64::consts::PI), 2.0) < 1e-15);
    assert!(rel(quad(|x| x.powi(6), 0.0, 1.0), 1.0 / 7.0) < 1e-15);
    assert!(rel(k_oracle(0.0), FRAC_PI_2) < 1e-15);
    // Legendre relation at q = 1/√2: 2EK − K² = π/2.
    let q = std::f64::consts::FRAC_1_SQRT_2;
    let (k, e) = (k_oracle(q), e_oracle(q));
    assert!(rel(2.0 * e * k - k * k, FRAC_PI_2) < 1e-14);
}
