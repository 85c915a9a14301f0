use super::RtfslError;

/// Series this short or shorter are always aligned exactly.
pub const EXACT_LIMIT: usize = 64;

/// Allowed column range `lo..=hi` per row of the cost matrix.
type Window = Vec<(usize, usize)>;

fn full_window(n: usize, m: usize) -> Window {
    vec![(0, m - 1); n]
}

/// Cumulative-cost DP restricted to `window`; returns the cost and the warp path.
/// Gives up with an infinite cost once a whole row reaches `cutoff`.
fn constrained(a: &[f64], b: &[f64], window: &Window, want_path: bool, cutoff: f64) -> (f64, Vec<(usize, usize)>) {
    let n = a.len();
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    for &(lo, hi) in window {
        offsets.push(offsets[offsets.len() - 1] + hi - lo + 1);
    }
    let mut cells = vec![f64::INFINITY; offsets[n]];
    for i in 0..n {
        let (lo, hi) = window[i];
        let base = offsets[i];
        let mut row_min = f64::INFINITY;
        for j in lo..=hi {
            let cost = (a[i] - b[j]).abs();
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let left = if j > lo { cells[base + j - 1 - lo] } else { f64::INFINITY };
                let (up, diag) = if i > 0 {
                    let (plo, phi) = window[i - 1];
                    let prev = offsets[i - 1];
                    let up = if j >= plo && j <= phi { cells[prev + j - plo] } else { f64::INFINITY };
                    let diag = if j > plo && j - 1 <= phi { cells[prev + j - 1 - plo] } else { f64::INFINITY };
                    (up, diag)
                } else {
                    (f64::INFINITY, f64::INFINITY)
                };
                min2(min2(diag, up), left)
            };
            let v = cost + best;
            cells[base + j - lo] = v;
            row_min = min2(row_min, v);
        }
        if row_min >= cutoff {
            return (f64::INFINITY, Vec::new());
        }
    }
    let m = b.len();
    let total = cells[offsets[n - 1] + m - 1 - window[n - 1].0];
    if !want_path {
        return (total, Vec::new());
    }
    let at = |i: usize, j: usize| {
        let (lo, hi) = window[i];
        if j >= lo && j <= hi {
            cells[offsets[i] + j - lo]
        } else {
            f64::INFINITY
        }
    };
    let (mut i, mut j) = (n - 1, m - 1);
    let mut path = vec![(i, j)];
    while i > 0 || j > 0 {
        (i, j) = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = at(i - 1, j - 1);
            let up = at(i - 1, j);
            let left = at(i, j - 1);
            if diag <= up && diag <= left {
                (i - 1, j - 1)
            } else if up <= left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        path.push((i, j));
    }
    path.reverse();
    (total, path)
}

fn check(a: &[f64], b: &[f64]) -> Result<(), RtfslError> {
    if a.is_empty() || b.is_empty() {
        return Err(RtfslError::EmptySeries);
    }
    Ok(())
}

// Plain comparison; inputs are never NaN and this compiles to a single instruction.
#[inline(always)]
fn min2(x: f64, y: f64) -> f64 {
    if y < x {
        y
    } else {
        x
    }
}

// Unconstrained DP over two rolling rows, each led by an infinite sentinel.
fn full(a: &[f64], b: &[f64], cutoff: f64) -> f64 {
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for &x in a {
        let mut row_min = f64::INFINITY;
        for j in 1..=m {
            let v = (x - b[j - 1]).abs() + min2(min2(prev[j - 1], prev[j]), cur[j - 1]);
            cur[j] = v;
            row_min = min2(row_min, v);
        }
        if row_min >= cutoff {
            return f64::INFINITY;
        }
        std::mem::swap(&mut prev, &mut cur);
        cur[0] = f64::INFINITY;
    }
    prev[m]
}

/// Optimal warp cost under the absolute-difference pointwise metric.
pub fn dtw_exact(a: &[f64], b: &[f64]) -> Result<f64, RtfslError> {
    check(a, b)?;
    Ok(full(a, b, f64::INFINITY))
}

fn coarsen(x: &[f64]) -> Vec<f64> {
    x.chunks(2).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect()
}

/// Projects a coarse warp path onto the finer grid and widens it by `radius`.
fn expand(path: &[(usize, usize)], n: usize, m: usize, radius: usize) -> Window {
    let mut window: Vec<(usize, usize)> = vec![(usize::MAX, 0); n];
    let mut mark = |i: usize, lo: usize, hi: usize| {
        if i < n {
            let hi = hi.min(m - 1);
            let w = &mut window[i];
            w.0 = w.0.min(lo);
            w.1 = w.1.max(hi);
        }
    };
    for &(ci, cj) in path {
        for di in 0..2 {
            let i = 2 * ci + di;
            let lo = (2 * cj).saturating_sub(radius);
            let hi = 2 * cj + 1 + radius;
            for ii in i.saturating_sub(radius)..=i + radius {
                mark(ii, lo, hi);
            }
        }
    }
    // Rows may be left uncovered or non-monotone at the borders; close the gaps.
    let mut prev_lo = 0;
    for w in window.iter_mut() {
        if w.0 == usize::MAX {
            *w = (prev_lo, m - 1);
        }
        w.0 = w.0.max(prev_lo).min(w.1);
        prev_lo = w.0;
    }
    let mut next_hi = m - 1;
    for w in window.iter_mut().rev() {
        w.1 = w.1.min(next_hi).max(w.0);
        next_hi = w.1;
    }
    window[0].0 = 0;
    window[n - 1].1 = m - 1;
    window
}

fn fast_inner(a: &[f64], b: &[f64], radius: usize, want_path: bool, cutoff: f64) -> (f64, Vec<(usize, usize)>) {
    let min_size = radius + 2;
    if a.len() <= min_size || b.len() <= min_size {
        return constrained(a, b, &full_window(a.len(), b.len()), want_path, cutoff);
    }
    let (_, coarse_path) = fast_inner(&coarsen(a), &coarsen(b), radius, true, f64::INFINITY);
    let window = expand(&coarse_path, a.len(), b.len(), radius);
    constrained(a, b, &window, want_path, cutoff)
}

/// FastDTW approximation: recursive coarsening, path projection and
/// refinement within `radius` cells. Never below the exact cost.
pub fn fast_dtw(a: &[f64], b: &[f64], radius: usize) -> Result<f64, RtfslError> {
    check(a, b)?;
    Ok(fast_inner(a, b, radius, false, f64::INFINITY).0)
}

/// Distance used for pattern matching: exact for short series, FastDTW otherwise.
pub fn dtw_distance(a: &[f64], b: &[f64], radius: usize) -> Result<f64, RtfslError> {
    dtw_distance_below(a, b, radius, f64::INFINITY)
}

/// `dtw_distance` when it is below `cutoff`; otherwise some value not below
/// `cutoff`, possibly infinity.
pub fn dtw_distance_below(a: &[f64], b: &[f64], radius: usize, cutoff: f64) -> Result<f64, RtfslError> {
    check(a, b)?;
    Ok(if a.len().max(b.len()) <= EXACT_LIMIT {
        full(a, b, cutoff)
    } else {
        fast_inner(a, b, radius, false, cutoff).0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_examples() {
        assert_eq!(dtw_exact(&[0.0], &[5.0]).unwrap(), 5.0);
        assert_eq!(dtw_exact(&[1.0, 2.0, 3.0], &[1.0, 2.0, 2.0, 3.0]).unwrap(), 0.0);
        assert!(matches!(dtw_exact(&[], &[1.0]), Err(RtfslError::EmptySeries)));
    }

    #[test]
    fn fast_matches_exact_on_long_identical_shapes() {
        let a: Vec<f64> = (0..200).map(|i| (i as f64 * 0.1).sin()).collect();
        assert_eq!(fast_dtw(&a, &a, 1).unwrap(), 0.0);
    }

    #[test]
    fn expanded_window_is_monotone() {
        let a: Vec<f64> = (0..37).map(|i| (i as f64).cos()).collect();
        let b: Vec<f64> = (0..53).map(|i| (i as f64 * 0.7).sin()).collect();
        let (_, path) = fast_inner(&coarsen(&a), &coarsen(&b), 1, true, f64::INFINITY);
        let w = expand(&path, a.len(), b.len(), 1);
        assert_eq!(w[0].0, 0);
        assert_eq!(w[a.len() - 1].1, b.len() - 1);
        for pair in w.windows(2) {
            assert!(pair[0].0 <= pair[1].0 && pair[0].1 <= pair[1].1);
            assert!(pair[1].0 <= pair[0].1 + 1);
        }
    }

    proptest! {
        #[test]
        fn fast_never_undercuts_exact(
            a in prop::collection::vec(-5.0f64..5.0, 1..120),
            b in prop::collection::vec(-5.0f64..5.0, 1..120),
            radius in 0usize..4,
        ) {
            let exact = dtw_exact(&a, &b).unwrap();
            let fast = fast_dtw(&a, &b, radius).unwrap();
            prop_assert!(fast.is_finite());
            prop_assert!(fast >= exact - 1e-9, "{fast} < {exact}");
        }

        #[test]
        fn symmetric(a in prop::collection::vec(-5.0f64..5.0, 1..40), b in prop::collection::vec(-5.0f64..5.0, 1..40)) {
            prop_assert!((dtw_exact(&a, &b).unwrap() - dtw_exact(&b, &a).unwrap()).abs() < 1e-9);
        }
    }
}
