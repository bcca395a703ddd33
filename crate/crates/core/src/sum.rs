//! Deterministic reductions.
//!
//! Sums are split into fixed-size blocks, each block is reduced pairwise and
//! the block partials are combined pairwise in index order. The result does
//! not depend on the number of worker threads.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::ops::Add;

const BLOCK: usize = 2048;
const LEAF: usize = 32;

fn pairwise<T: Copy + Add<Output = T>>(zero: T, n: usize, f: &(impl Fn(usize) -> T + ?Sized), off: usize) -> T {
    if n <= LEAF {
        let mut acc = zero;
        for i in off..off + n {
            acc = acc + f(i);
        }
        return acc;
    }
    let m = n / 2;
    pairwise(zero, m, f, off) + pairwise(zero, n - m, f, off + m)
}

fn combine<T: Copy + Add<Output = T>>(zero: T, v: &[T]) -> T {
    match v.len() {
        0 => zero,
        1 => v[0],
        n => combine(zero, &v[..n / 2]) + combine(zero, &v[n / 2..]),
    }
}

/// `Σ_{i<n} f(i)` reduced in a fixed order.
pub fn sum_by<T, F>(zero: T, n: usize, f: F) -> T
where
    T: Copy + Add<Output = T> + Send + Sync,
    F: Fn(usize) -> T + Sync,
{
    if n <= BLOCK {
        return pairwise(zero, n, &f, 0);
    }
    let nb = n.div_ceil(BLOCK);
    let parts: Vec<T> = (0..nb)
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            pairwise(zero, BLOCK.min(n - lo), &f, lo)
        })
        .collect();
    combine(zero, &parts)
}

pub fn csum_by<F: Fn(usize) -> C64 + Sync>(n: usize, f: F) -> C64 {
    sum_by(C64::new(0.0, 0.0), n, f)
}

pub fn rsum_by<F: Fn(usize) -> f64 + Sync>(n: usize, f: F) -> f64 {
    sum_by(0.0, n, f)
}

/// `Σ w_i a_i b_i`.
pub fn wdot(w: &[f64], a: &[C64], b: &[C64]) -> C64 {
    debug_assert!(w.len() == a.len() && a.len() == b.len());
    csum_by(w.len(), |i| a[i] * b[i] * w[i])
}

/// `Σ w_i conj(a_i) b_i`.
pub fn wdotc(w: &[f64], a: &[C64], b: &[C64]) -> C64 {
    debug_assert!(w.len() == a.len() && a.len() == b.len());
    csum_by(w.len(), |i| a[i].conj() * b[i] * w[i])
}

/// `Σ w_i |a_i|²`.
pub fn wnorm2(w: &[f64], a: &[C64]) -> f64 {
    rsum_by(w.len(), |i| a[i].norm_sqr() * w[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matches_naive_sum_on_integers() {
        let n = 10_000;
        let s = rsum_by(n, |i| i as f64);
        assert_eq!(s, (n * (n - 1) / 2) as f64);
    }

    #[test]
    fn independent_of_thread_count() {
        let v: Vec<C64> = (0..50_000).map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64).cos() * 1e-3)).collect();
        let w: Vec<f64> = (0..v.len()).map(|i| 1.0 + (i % 7) as f64).collect();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| wdot(&w, &v, &v));
        let b = four.install(|| wdot(&w, &v, &v));
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn close_to_sequential(xs in proptest::collection::vec(-1e3f64..1e3, 0..5000)) {
            let s = rsum_by(xs.len(), |i| xs[i]);
            let seq: f64 = xs.iter().sum();
            let scale: f64 = xs.iter().map(|x| x.abs()).sum::<f64>() + 1.0;
            prop_assert!((s - seq).abs() <= 1e-12 * scale);
        }
    }
}
