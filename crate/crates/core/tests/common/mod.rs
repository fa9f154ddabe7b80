//! Reference implementations used as test oracles. Written independently of
//! the library code they check: the geomagnetic oracle reads the table
//! itself and differentiates an explicitly summed potential, and the
//! Jacobian oracle differentiates the nonlinear error dynamics numerically.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use satmag::attitude::Quaternion;

pub type V3 = Vector3<f64>;

// ---------------------------------------------------------------------------
// Geomagnetic field

pub const A_REF: f64 = 6371.2e3;

/// Gauss coefficients keyed by (n, m), nT.
#[derive(Debug, Clone, Default)]
pub struct Gauss {
    pub g: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
}

impl Gauss {
    pub fn zeros(nmax: usize) -> Self {
        Gauss {
            g: (0..=nmax).map(|n| vec![0.0; n + 1]).collect(),
            h: (0..=nmax).map(|n| vec![0.0; n + 1]).collect(),
        }
    }

    pub fn nmax(&self) -> usize {
        self.g.len() - 1
    }
}

/// Reads the `g/h n m` table: epochs from the header row, last column SV.
pub fn read_table(text: &str) -> (Vec<f64>, Vec<Gauss>, Gauss) {
    let mut epochs = Vec::new();
    let mut rows: Vec<(bool, usize, usize, Vec<f64>)> = Vec::new();
    for line in text.lines() {
        let cols: Vec<&str> = line.split_whitespace().collect();
        match cols.first() {
            Some(&"g/h") => {
                epochs = cols[3..cols.len() - 1].iter().map(|c| c.parse().unwrap()).collect();
            }
            Some(&"g") | Some(&"h") => {
                let vals = cols[3..].iter().map(|c| c.parse().unwrap()).collect();
                rows.push((cols[0] == "g", cols[1].parse().unwrap(), cols[2].parse().unwrap(), vals));
            }
            _ => {}
        }
    }
    let nmax = rows.iter().map(|r| r.1).max().unwrap();
    let mut sets = vec![Gauss::zeros(nmax); epochs.len()];
    let mut sv = Gauss::zeros(nmax);
    for (is_g, n, m, vals) in rows {
        for (k, set) in sets.iter_mut().enumerate() {
            if is_g {
                set.g[n][m] = vals[k];
            } else {
                set.h[n][m] = vals[k];
            }
        }
        if is_g {
            sv.g[n][m] = vals[epochs.len()];
        } else {
            sv.h[n][m] = vals[epochs.len()];
        }
    }
    (epochs, sets, sv)
}

/// Coefficients at `date` by linear interpolation, SV after the last epoch.
pub fn gauss_at(epochs: &[f64], sets: &[Gauss], sv: &Gauss, date: f64) -> Gauss {
    let last = epochs.len() - 1;
    let mut out = Gauss::zeros(sets[0].nmax());
    let lerp = |a: f64, b: f64, w: f64| a + (b - a) * w;
    for n in 1..=out.nmax() {
        for m in 0..=n {
            if date >= epochs[last] {
                let dt = date - epochs[last];
                out.g[n][m] = sets[last].g[n][m] + sv.g[n][m] * dt;
                out.h[n][m] = sets[last].h[n][m] + sv.h[n][m] * dt;
            } else {
                let k = epochs.iter().rposition(|e| *e <= date).unwrap_or(0);
                let w = (date - epochs[k]) / (epochs[k + 1] - epochs[k]);
                out.g[n][m] = lerp(sets[k].g[n][m], sets[k + 1].g[n][m], w);
                out.h[n][m] = lerp(sets[k].h[n][m], sets[k + 1].h[n][m], w);
            }
        }
    }
    out
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Schmidt semi-normalized associated Legendre function from the explicit
/// Rodrigues-type polynomial sum (no Condon–Shortley phase).
pub fn schmidt_p(n: usize, m: usize, x: f64) -> f64 {
    let mut deriv = 0.0;
    for k in 0..=n / 2 {
        let power = n - 2 * k;
        if power < m {
            continue;
        }
        let coeff = if k % 2 == 0 { 1.0 } else { -1.0 } * binomial(n, k) * binomial(2 * n - 2 * k, n);
        let falling: f64 = (0..m).map(|i| (power - i) as f64).product();
        deriv += coeff * falling * x.powi((power - m) as i32);
    }
    let p = deriv / 2f64.powi(n as i32) * (1.0 - x * x).max(0.0).powf(m as f64 / 2.0);
    if m == 0 {
        p
    } else {
        p * (2.0 * factorial(n - m) / factorial(n + m)).sqrt()
    }
}

/// Scalar potential `V` (nT·m) at radius `r`, colatitude `theta`, longitude `phi`.
pub fn potential(c: &Gauss, r: f64, theta: f64, phi: f64) -> f64 {
    let mut v = 0.0;
    for n in 1..=c.nmax() {
        let radial = (A_REF / r).powi(n as i32 + 1);
        for m in 0..=n {
            let mp = m as f64 * phi;
            v += radial * (c.g[n][m] * mp.cos() + c.h[n][m] * mp.sin()) * schmidt_p(n, m, theta.cos());
        }
    }
    A_REF * v
}

/// `B = −∇V` by central differences, returned as (north, east, down) nT.
pub fn brute_force_ned(c: &Gauss, r: f64, lat: f64, lon: f64) -> V3 {
    let theta = std::f64::consts::FRAC_PI_2 - lat;
    let (hr, ht, hp) = (1.0, 1e-6, 1e-6);
    let dv_dr = (potential(c, r + hr, theta, lon) - potential(c, r - hr, theta, lon)) / (2.0 * hr);
    let dv_dt = (potential(c, r, theta + ht, lon) - potential(c, r, theta - ht, lon)) / (2.0 * ht);
    let dv_dp = (potential(c, r, theta, lon + hp) - potential(c, r, theta, lon - hp)) / (2.0 * hp);
    let b_r = -dv_dr;
    let b_t = -dv_dt / r;
    let b_p = -dv_dp / (r * theta.sin());
    V3::new(-b_t, b_p, -b_r)
}

/// Axial dipole `g₁⁰` in closed form, (north, east, down) nT.
pub fn dipole_ned(g10: f64, r: f64, lat: f64) -> V3 {
    let k = (A_REF / r).powi(3);
    V3::new(-g10 * k * lat.cos(), 0.0, -2.0 * g10 * k * lat.sin())
}

/// IGRF-13 field from ppigrf (geocentric inputs):
/// (radius km, latitude deg, longitude deg, decimal year, [N, E, D] nT).
pub const PPIGRF_POINTS: [(f64, f64, f64, f64, [f64; 3]); 5] = [
    (
        6371.2,
        0.0,
        0.0,
        2015.0,
        [27645.850732778174, -2628.968677387426, -15882.604867357302],
    ),
    (
        6778.137,
        35.0,
        120.0,
        2020.0,
        [25377.7522195393, -2611.716718068094, 33057.1924258161],
    ),
    (
        6778.137,
        -40.0,
        -75.0,
        2010.0,
        [17152.227755450796, 2686.0293494413963, -15423.899170181172],
    ),
    (
        6500.0,
        80.0,
        10.0,
        2015.0,
        [6131.805207376034, 319.84834401368994, 51521.32435512477],
    ),
    (
        7000.0,
        -65.0,
        200.0,
        2020.0,
        [5871.816418099647, 8663.831657812334, -42625.94332084357],
    ),
];

// ---------------------------------------------------------------------------
// Error dynamics

fn skew(v: &V3) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// `q̇ = ½ [ω; 0] ⊗ q`, the kinematics for `A(q)` mapping orbital to body.
pub fn kinematics(q: &Quaternion, w: &V3) -> Quaternion {
    let wq = Quaternion::new(w.x, w.y, w.z, 0.0);
    let d = wq.product(*q);
    Quaternion::new(0.5 * d.q1, 0.5 * d.q2, 0.5 * d.q3, 0.5 * d.q4)
}

fn add(a: Quaternion, b: Quaternion) -> Quaternion {
    Quaternion::new(a.q1 + b.q1, a.q2 + b.q2, a.q3 + b.q3, a.q4 + b.q4)
}

/// Inputs around which the error dynamics are linearized.
#[derive(Debug, Clone)]
pub struct LinPoint {
    pub q_hat: Quaternion,
    pub w_hat: V3,
    pub m_hat: V3,
    pub j: Matrix3<f64>,
    /// Body-frame field, held fixed (T).
    pub b: V3,
    pub omega0: f64,
}

fn euler(p: &LinPoint, w: &V3, m: &V3) -> V3 {
    p.j.try_inverse().unwrap() * (m.cross(&p.b) - w.cross(&(p.j * w)))
}

fn orbital_relative(q: &Quaternion, w: &V3, omega0: f64) -> V3 {
    w - q.to_dcm() * V3::new(0.0, -omega0, 0.0)
}

/// Time derivative of the error state `[δq⃗; Δω; (Δm)]` for the truth
/// `q = δq̄ ⊗ q̂`, `ω = ω̂ + Δω`, `m = m̂ + Δm`.
pub fn error_rate(p: &LinPoint, x: &DVector<f64>) -> DVector<f64> {
    let dv = V3::new(x[0], x[1], x[2]);
    let dq = Quaternion::new(dv.x, dv.y, dv.z, (1.0 - dv.norm_squared()).sqrt());
    let q = dq.product(p.q_hat);
    let w = p.w_hat + V3::new(x[3], x[4], x[5]);
    let m = if x.len() == 9 {
        p.m_hat + V3::new(x[6], x[7], x[8])
    } else {
        p.m_hat
    };

    let q_dot = kinematics(&q, &orbital_relative(&q, &w, p.omega0));
    let qh_dot = kinematics(&p.q_hat, &orbital_relative(&p.q_hat, &p.w_hat, p.omega0));
    // d/dt (q ⊗ q̂*) = q̇ ⊗ q̂* + q ⊗ (q̂̇)*
    let ddq = add(q_dot.product(p.q_hat.conjugate()), q.product(qh_dot.conjugate()));
    let dw_dot = euler(p, &w, &m) - euler(p, &p.w_hat, &p.m_hat);

    let mut out = vec![ddq.q1, ddq.q2, ddq.q3, dw_dot.x, dw_dot.y, dw_dot.z];
    if x.len() == 9 {
        out.extend([0.0, 0.0, 0.0]);
    }
    DVector::from_vec(out)
}

/// Seven-state model `[½Ω(ω)q̄; J⁻¹(m×B − ω×Jω)]` with `ω` driving the
/// kinematics directly.
pub fn full_state_rate(p: &LinPoint, x: &DVector<f64>) -> DVector<f64> {
    let q = Quaternion::new(x[0], x[1], x[2], x[3]);
    let w = V3::new(x[4], x[5], x[6]);
    let qd = kinematics(&q, &w);
    let wd = euler(p, &w, &p.m_hat);
    DVector::from_vec(vec![qd.q1, qd.q2, qd.q3, qd.q4, wd.x, wd.y, wd.z])
}

/// Central-difference Jacobian of `f` at `x0` with per-coordinate steps.
pub fn fd_jacobian(f: impl Fn(&DVector<f64>) -> DVector<f64>, x0: &DVector<f64>, steps: &[f64]) -> DMatrix<f64> {
    let n = x0.len();
    let m = f(x0).len();
    let mut jac = DMatrix::zeros(m, n);
    for j in 0..n {
        let mut xp = x0.clone();
        let mut xm = x0.clone();
        xp[j] += steps[j];
        xm[j] -= steps[j];
        let col = (f(&xp) - f(&xm)) / (2.0 * steps[j]);
        jac.set_column(j, &col);
    }
    jac
}

/// Largest per-column relative difference; all-zero analytic columns are
/// compared in absolute terms.
pub fn max_column_relative_error(analytic: &DMatrix<f64>, numeric: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..analytic.ncols() {
        let a = analytic.column(j);
        let d = (a - numeric.column(j)).norm();
        let scale = a.norm();
        worst = worst.max(if scale > 0.0 { d / scale } else { d });
    }
    worst
}

pub fn skew_matrix(v: &V3) -> Matrix3<f64> {
    skew(v)
}
