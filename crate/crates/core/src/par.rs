//! Execution backend for the data-parallel inner loops.
//!
//! With the `parallel` feature the work is spread over the rayon pool;
//! without it every [`Execution`] runs sequentially. Both paths produce
//! bit-identical results because the reductions used here (exact max,
//! largest index satisfying a predicate) do not depend on evaluation order.

/// Below this many candidates the parallel path falls back to a plain loop.
#[cfg(feature = "parallel")]
const PAR_THRESHOLD: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when work will actually be dispatched to rayon.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Largest index in `0..len` whose value is within `rel_tol` of the maximum.
///
/// Returns `(index, value_at_index, max_value, ties)` where `ties` counts the
/// indices within tolerance. `len` must be non-zero.
pub fn argmax_last<F>(len: usize, rel_tol: f64, exec: Execution, f: F) -> (usize, f64, f64, usize)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    assert!(len > 0, "argmax over an empty range");
    let max = max_value(len, exec, &f);
    let floor = max - rel_tol * max.abs();
    let (idx, val, ties) = last_at_least(len, floor, exec, &f);
    (idx, val, max, ties)
}

/// Smallest index in `0..len` whose value is within `rel_tol` of the maximum.
pub fn argmax_first<F>(len: usize, rel_tol: f64, exec: Execution, f: F) -> (usize, f64, f64, usize)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    assert!(len > 0, "argmax over an empty range");
    let max = max_value(len, exec, &f);
    let floor = max - rel_tol * max.abs();
    let (idx, val, ties) = first_at_least(len, floor, exec, &f);
    (idx, val, max, ties)
}

fn max_value<F>(len: usize, exec: Execution, f: &F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && len >= PAR_THRESHOLD {
        use rayon::prelude::*;
        return (0..len)
            .into_par_iter()
            .map(f)
            .reduce(|| f64::NEG_INFINITY, f64::max);
    }
    let _ = exec;
    (0..len).map(f).fold(f64::NEG_INFINITY, f64::max)
}

fn last_at_least<F>(len: usize, floor: f64, exec: Execution, f: &F) -> (usize, f64, usize)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && len >= PAR_THRESHOLD {
        use rayon::prelude::*;
        return (0..len)
            .into_par_iter()
            .filter_map(|k| {
                let v = f(k);
                (v >= floor).then_some((k, v, 1usize))
            })
            .reduce(
                || (0, f64::NEG_INFINITY, 0),
                |a, b| {
                    let (k, v) = if b.2 > 0 && (a.2 == 0 || b.0 > a.0) {
                        (b.0, b.1)
                    } else {
                        (a.0, a.1)
                    };
                    (k, v, a.2 + b.2)
                },
            );
    }
    let _ = exec;
    let mut best = (0, f64::NEG_INFINITY, 0);
    for k in 0..len {
        let v = f(k);
        if v >= floor {
            best = (k, v, best.2 + 1);
        }
    }
    best
}

fn first_at_least<F>(len: usize, floor: f64, exec: Execution, f: &F) -> (usize, f64, usize)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && len >= PAR_THRESHOLD {
        use rayon::prelude::*;
        return (0..len)
            .into_par_iter()
            .filter_map(|k| {
                let v = f(k);
                (v >= floor).then_some((k, v, 1usize))
            })
            .reduce(
                || (usize::MAX, f64::NEG_INFINITY, 0),
                |a, b| {
                    let (k, v) = if b.2 > 0 && (a.2 == 0 || b.0 < a.0) {
                        (b.0, b.1)
                    } else {
                        (a.0, a.1)
                    };
                    (k, v, a.2 + b.2)
                },
            );
    }
    let _ = exec;
    let mut best = (usize::MAX, f64::NEG_INFINITY, 0);
    for k in 0..len {
        let v = f(k);
        if v >= floor {
            if best.2 == 0 {
                best.0 = k;
                best.1 = v;
            }
            best.2 += 1;
        }
    }
    best
}

/// Map `f` over `items`, in parallel when enabled. Output order matches input.
pub fn map_collect<T, U, F>(items: &[T], exec: Execution, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wavy(k: usize) -> f64 {
        // exact ties at k = 3, 7, 4000
        match k {
            3 | 7 | 4000 => 10.0,
            _ => (k as f64 * 0.37).sin(),
        }
    }

    #[test]
    fn last_and_first_maximizers() {
        for exec in [Execution::Sequential, Execution::Parallel] {
            let (k, v, m, ties) = argmax_last(5000, 0.0, exec, wavy);
            assert_eq!((k, v, m, ties), (4000, 10.0, 10.0, 3));
            let (k, _, _, ties) = argmax_first(5000, 0.0, exec, wavy);
            assert_eq!((k, ties), (3, 3));
        }
    }

    #[test]
    fn tolerance_widens_tie_set() {
        let f = |k: usize| {
            if k == 2 {
                1.0
            } else if k == 9 {
                1.0 - 1e-14
            } else {
                0.0
            }
        };
        assert_eq!(argmax_last(10, 0.0, Execution::Sequential, f).0, 2);
        assert_eq!(argmax_last(10, 1e-12, Execution::Sequential, f).0, 9);
    }

    #[test]
    fn map_preserves_order() {
        let xs: Vec<usize> = (0..100).collect();
        let seq = map_collect(&xs, Execution::Sequential, |x| x * 2);
        let par = map_collect(&xs, Execution::Parallel, |x| x * 2);
        assert_eq!(seq, par);
    }
}
