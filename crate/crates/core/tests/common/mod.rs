#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use homoclinic::functional::FunctionalContext;
use homoclinic::lattice::{BlockVector, PeriodicCoefficients, Window};
use homoclinic::nonlinearity::{family_radial_rational, FnNonlinearity, Nonlinearity};
use homoclinic::operators::assemble;
use homoclinic::spectral::eigendecompose;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn examples_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples")
}

pub fn example(name: &str) -> PathBuf {
    examples_dir().join(name)
}

fn random_spd<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let base = rng.random_range(0.2..1.0);
    &g * g.transpose() * 0.3 + DMatrix::identity(n, n) * base
}

/// `S = J₀P` with `P = [[D, K], [K, D]]` positive definite, so that `J₀S = P`.
pub fn random_coefficients<R: Rng>(
    rng: &mut R,
    block_dim: usize,
    period: usize,
) -> PeriodicCoefficients {
    let n = block_dim;
    let matrices = (0..period)
        .map(|_| {
            let a = random_spd(rng, n);
            let b = random_spd(rng, n);
            let d = (&a + &b) * 0.5;
            let k = (&a - &b) * 0.5;
            let mut s = DMatrix::zeros(2 * n, 2 * n);
            s.view_mut((0, 0), (n, n)).copy_from(&(-&k));
            s.view_mut((n, n), (n, n)).copy_from(&(-&k));
            s.view_mut((0, n), (n, n)).copy_from(&(-&d));
            s.view_mut((n, 0), (n, n)).copy_from(&(-&d));
            s
        })
        .collect();
    let c = PeriodicCoefficients::new(block_dim, matrices).unwrap();
    c.require_r0().unwrap();
    c
}

pub fn random_vector<R: Rng>(rng: &mut R, window: Window, block_dim: usize) -> BlockVector {
    let data = (0..window.len() * 2 * block_dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    BlockVector::from_vec(window, block_dim, data).unwrap()
}

pub fn context(
    coeffs: &PeriodicCoefficients,
    window: Window,
    nl: Arc<dyn Nonlinearity>,
) -> FunctionalContext {
    let op = assemble(window, coeffs).unwrap();
    let dec = eigendecompose(&op).unwrap();
    FunctionalContext::new(op, nl)
        .unwrap()
        .with_decomposition(dec)
        .unwrap()
}

pub fn model_context(half_width: usize, nu: f64) -> FunctionalContext {
    context(
        &PeriodicCoefficients::model(),
        Window::zero_pad(half_width),
        Arc::new(family_radial_rational(nu).unwrap()),
    )
}

/// Coefficients of the bundled configs.
pub fn bundled() -> Vec<(&'static str, homoclinic::config::ProblemConfig)> {
    ["model.json", "period2.json", "n2.json"]
        .into_iter()
        .map(|name| {
            let text = std::fs::read_to_string(example(name)).unwrap();
            (
                name,
                homoclinic::config::ProblemConfig::from_json(&text).unwrap(),
            )
        })
        .collect()
}

pub const SUPPORT: i64 = 10;

/// `x*(n) = 0.5^{|n|} (cos n, sin n)` on `|n| < K`, with endpoint blocks
/// chosen so that the zero extension stays a solution.
pub fn target(n: i64) -> [f64; 2] {
    let a = 0.5f64.powi(n.unsigned_abs() as i32);
    match n {
        n if n.abs() > SUPPORT => [0.0, 0.0],
        SUPPORT => [a, 0.0],
        n if n == -SUPPORT => [0.0, a],
        _ => [a * (n as f64).cos(), a * (n as f64).sin()],
    }
}

/// `R(n, z) = ½ z·Q(n) z + ¼|z|⁴` with `Q(n) x*(n) = ((A+S)x*)(n) - |x*(n)|² x*(n)`.
pub fn manufactured(coeffs: &PeriodicCoefficients) -> FnNonlinearity {
    let wide = Window::zero_pad(SUPPORT as usize + 1);
    let x = BlockVector::from_fn(wide, 1, |n, b| b.copy_from_slice(&target(n)));
    let lx = assemble(wide, coeffs).unwrap().apply(&x).unwrap();
    let q: Vec<(i64, DMatrix<f64>)> = wide
        .nodes()
        .map(|n| {
            let xv = DVector::from_column_slice(x.at(n).unwrap());
            let r2 = xv.norm_squared();
            if r2 == 0.0 {
                return (n, DMatrix::zeros(2, 2));
            }
            let g = DVector::from_column_slice(lx.at(n).unwrap()) - &xv * r2;
            let gx = g.dot(&xv);
            let m = (&g * xv.transpose() + &xv * g.transpose()) / r2
                - &xv * xv.transpose() * (gx / (r2 * r2));
            (n, m)
        })
        .collect();
    let q = Arc::new(q);
    let lookup = move |q: &[(i64, DMatrix<f64>)], n: i64| {
        q.iter()
            .find(|(m, _)| *m == n)
            .map(|(_, m)| m.clone())
            .unwrap_or_else(|| DMatrix::zeros(2, 2))
    };
    let (qv, qg, qh) = (q.clone(), q.clone(), q);
    FnNonlinearity::new(
        "manufactured",
        vec![DMatrix::identity(2, 2)],
        move |n, z| {
            let zv = DVector::from_column_slice(z);
            0.5 * zv.dot(&(lookup(&qv, n) * &zv)) + 0.25 * zv.norm_squared().powi(2)
        },
        move |n, z, out| {
            let zv = DVector::from_column_slice(z);
            let g = lookup(&qg, n) * &zv + &zv * zv.norm_squared();
            out.copy_from_slice(g.as_slice());
        },
    )
    .unwrap()
    .with_hessian(move |n, z| {
        let zv = DVector::from_column_slice(z);
        lookup(&qh, n) + DMatrix::identity(2, 2) * zv.norm_squared() + &zv * zv.transpose() * 2.0
    })
}
