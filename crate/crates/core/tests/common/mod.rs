#![allow(dead_code)]

use conefree::{generate, ConeKind, ConeSpec, GenSpec, Problem, TripletMatrix};

/// Analytic KKT fixture: problem, optimal x, optimal λ.
pub struct Fixture {
    pub name: &'static str,
    pub problem: Problem,
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
}

pub fn fixtures() -> Vec<Fixture> {
    vec![
        Fixture {
            name: "1x1 LP",
            problem: Problem::new(
                TripletMatrix::from_tuples(1, 1, &[(0, 0, 1.0)]),
                vec![1.0],
                vec![1.0],
                ConeSpec::nonnegative(1),
            ),
            x: vec![1.0],
            lambda: vec![-1.0],
        },
        Fixture {
            name: "2-var LP",
            problem: Problem::new(
                TripletMatrix::from_tuples(1, 2, &[(0, 0, 1.0), (0, 1, 1.0)]),
                vec![1.0],
                vec![1.0, 2.0],
                ConeSpec::nonnegative(2),
            ),
            x: vec![1.0, 0.0],
            lambda: vec![-1.0],
        },
        Fixture {
            name: "SOCP K4",
            problem: Problem::new(
                TripletMatrix::from_tuples(1, 4, &[(0, 0, 1.0)]),
                vec![2.0],
                vec![0.0, 0.0, 0.0, -1.0],
                ConeSpec::new(vec![4]),
            ),
            x: vec![2.0, 0.0, 0.0, 2.0],
            lambda: vec![1.0],
        },
    ]
}

pub fn example1_matrix() -> TripletMatrix<f64> {
    TripletMatrix::from_dense(&[
        vec![1.0, 0.0, 4.0, 6.0, 8.0],
        vec![0.0, 0.0, 5.0, 0.0, 0.0],
        vec![2.0, 3.0, 0.0, 7.0, 0.0],
    ])
}

/// Small random instance: shape drawn from the seed, `m, n ≤ max_dim`.
pub fn small_instance(seed: u64, kind: ConeKind, max_dim: usize) -> Problem {
    let mut rng = conefree::gen::InstanceRng::new(seed ^ 0x5eed);
    let m = 2 + rng.below(max_dim as u64 - 1) as usize;
    let mut n = 2 + rng.below(max_dim as u64 - 1) as usize;
    if kind == ConeKind::Socp4 {
        n = (n / 4).max(1) * 4;
    }
    let density = 0.1 + 0.3 * rng.next_unit();
    generate(&GenSpec::new(m, n, density, kind, seed))
        .expect("valid small spec")
        .problem
}

/// `‖a − b‖_∞ / max(1, ‖b‖_∞)`.
pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = b.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    a.iter()
        .zip(b)
        .fold(0.0f64, |d, (x, y)| d.max((x - y).abs()))
        / scale
}

pub fn inf_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |d, (x, y)| d.max((x - y).abs()))
}
