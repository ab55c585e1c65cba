//! Small complex vector helpers shared by the operators and solvers.

use ndarray::{ArrayBase, Data, Dimension};

use crate::C64;

/// `<a, b> = sum conj(a_i) b_i`, accumulated in storage order.
pub fn inner<S1, S2, D>(a: &ArrayBase<S1, D>, b: &ArrayBase<S2, D>) -> C64
where
    S1: Data<Elem = C64>,
    S2: Data<Elem = C64>,
    D: Dimension,
{
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr<S, D>(a: &ArrayBase<S, D>) -> f64
where
    S: Data<Elem = C64>,
    D: Dimension,
{
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm<S, D>(a: &ArrayBase<S, D>) -> f64
where
    S: Data<Elem = C64>,
    D: Dimension,
{
    norm_sqr(a).sqrt()
}

pub fn inner_slices(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
