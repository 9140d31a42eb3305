//! Row-major enumeration and indexing of element tuples.

/// Row-major index of `tuple` among all tuples over a universe of size `n`.
#[inline]
pub fn tuple_index(tuple: &[usize], n: usize) -> usize {
    tuple.iter().fold(0, |acc, &e| acc * n + e)
}

/// Inverse of [`tuple_index`].
pub fn tuple_at(mut index: usize, n: usize, k: usize) -> Vec<usize> {
    let mut out = vec![0; k];
    for slot in out.iter_mut().rev() {
        *slot = index % n;
        index /= n;
    }
    out
}

/// Number of `k`-tuples over a universe of size `n`, if it fits in `usize`.
pub fn tuple_count(n: usize, k: usize) -> Option<usize> {
    n.checked_pow(u32::try_from(k).ok()?)
}

/// Lexicographic iterator over `{0..n}^k`. For `k = 0` it yields the empty
/// tuple once.
#[derive(Debug, Clone)]
pub struct TupleIter {
    n: usize,
    current: Option<Vec<usize>>,
}

impl TupleIter {
    pub fn new(n: usize, k: usize) -> Self {
        let current = if n == 0 && k > 0 { None } else { Some(vec![0; k]) };
        Self { n, current }
    }
}

impl Iterator for TupleIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let mut next = out.clone();
        let mut i = next.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            next[i] += 1;
            if next[i] < self.n {
                self.current = Some(next);
                break;
            }
            next[i] = 0;
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_in_index_order() {
        for (i, t) in TupleIter::new(3, 3).enumerate() {
            assert_eq!(tuple_index(&t, 3), i);
            assert_eq!(tuple_at(i, 3, 3), t);
        }
        assert_eq!(TupleIter::new(3, 3).count(), 27);
        assert_eq!(TupleIter::new(5, 0).collect::<Vec<_>>(), vec![Vec::<usize>::new()]);
    }
}
