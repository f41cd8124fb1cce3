//! Small numerical helpers shared across modules.

use rayon::prelude::*;

/// Points per parallel work unit. Chunk boundaries depend only on this
/// constant, never on the worker count, so chunked reductions are bitwise
/// reproducible.
pub const CHUNK: usize = 2048;

/// Pairwise (cascade) summation in index order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BASE: usize = 32;
    if values.len() <= BASE {
        return values.iter().fold(0.0, |acc, v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Deterministic parallel sum of `term(i)` for `i in 0..n`.
///
/// Each fixed-size chunk is summed sequentially, then the chunk partials are
/// combined pairwise in chunk order.
pub fn det_sum<F>(n: usize, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let partials: Vec<f64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(n);
            (start..end).fold(0.0, |acc, i| acc + term(i))
        })
        .collect();
    pairwise_sum(&partials)
}

/// Classic cubic smoothstep, clamped to [0, 1].
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if i == 0 {
                lo
            } else if i + 1 == count {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

/// Golden-section maximization of a unimodal function on `[a, b]`.
/// Returns the best abscissa and value seen.
pub fn golden_max<F: FnMut(f64) -> f64>(mut g: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut gc = g(c);
    let mut gd = g(d);
    let mut best = if gc >= gd { (c, gc) } else { (d, gd) };
    for _ in 0..iters {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
            if gc > best.1 {
                best = (c, gc);
            }
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
            if gd > best.1 {
                best = (d, gd);
            }
        }
        if (b - a).abs() <= f64::EPSILON * b.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    best
}
