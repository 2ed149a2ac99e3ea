//! Data-parallel execution over population slots.
//!
//! Evaluation and training are independent per individual, so both phases
//! map over slots with rayon when the `parallel` feature is enabled.
//! [`ExecMode::Sequential`] runs the identical closure on one thread and
//! must produce bit-identical results (all randomness is derived per slot,
//! never from a shared stream).

use std::str::FromStr;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    /// Rayon work-stealing over slots. Falls back to sequential execution
    /// when the crate is built without the `parallel` feature.
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

impl FromStr for ExecMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sequential" => Ok(ExecMode::Sequential),
            "parallel" => Ok(ExecMode::Parallel),
            other => Err(format!("unknown exec mode `{other}`")),
        }
    }
}

/// Maps `f` over `0..n`, preserving slot order in the output.
pub fn map_slots<R, F>(mode: ExecMode, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync,
{
    match mode {
        ExecMode::Sequential => (0..n).map(f).collect(),
        ExecMode::Parallel => {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                (0..n).map(f).collect()
            }
        }
    }
}

/// Runs `f` on every item with its slot index, mutating in place.
pub fn for_each_slot_mut<T, F>(mode: ExecMode, items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync,
{
    match mode {
        ExecMode::Sequential => {
            for (i, item) in items.iter_mut().enumerate() {
                f(i, item);
            }
        }
        ExecMode::Parallel => {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                items
                    .par_iter_mut()
                    .enumerate()
                    .for_each(|(i, item)| f(i, item));
            }
            #[cfg(not(feature = "parallel"))]
            {
                for (i, item) in items.iter_mut().enumerate() {
                    f(i, item);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_slot_order() {
        let seq = map_slots(ExecMode::Sequential, 64, |i| i * i);
        let par = map_slots(ExecMode::Parallel, 64, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq[10], 100);
    }

    #[test]
    fn for_each_mut_touches_every_slot() {
        let mut a = vec![0usize; 50];
        let mut b = vec![0usize; 50];
        for_each_slot_mut(ExecMode::Sequential, &mut a, |i, x| *x = i + 1);
        for_each_slot_mut(ExecMode::Parallel, &mut b, |i, x| *x = i + 1);
        assert_eq!(a, b);
        assert!(a.iter().enumerate().all(|(i, &x)| x == i + 1));
    }
}
