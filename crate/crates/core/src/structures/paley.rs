use super::{FiniteStructure, StructureError};
use crate::fol::Signature;

/// Deterministic trial division.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// The Paley graph on `F_q` with one binary relation `R`: `R(a, b)` iff
/// `a != b` and `a - b` is a square mod `q`. Requires `q` prime with
/// `q = 1 mod 4`, which makes `-1` a square and `R` symmetric.
pub fn paley(q: u64) -> Result<FiniteStructure, StructureError> {
    if !is_prime(q) {
        return Err(StructureError::NotPrime(q));
    }
    if q % 4 != 1 {
        return Err(StructureError::NotOneModFour(q));
    }
    let n = q as usize;
    let mut square = vec![false; n];
    for z in 1..n {
        square[z * z % n] = true;
    }
    let edges = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).filter_map(|(a, b)| {
        let diff = (a + n - b) % n;
        (diff != 0 && square[diff]).then(|| vec![a, b])
    });
    let sig = Signature::new().with_relation("R", 2)?;
    FiniteStructure::builder(sig, n).relation("R", edges).build()
}
