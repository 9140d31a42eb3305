use super::{FiniteStructure, StructureError};
use crate::fol::Signature;

/// Simple graph on `0..n` with symmetric relation `R` from an edge list.
pub fn graph_from_edges(n: usize, edges: &[(usize, usize)]) -> Result<FiniteStructure, StructureError> {
    if let Some(&(a, _)) = edges.iter().find(|(a, b)| a == b) {
        return Err(StructureError::NotAGraph(format!("loop at {a}")));
    }
    let tuples = edges.iter().flat_map(|&(a, b)| [vec![a, b], vec![b, a]]);
    let sig = Signature::new().with_relation("R", 2)?;
    FiniteStructure::builder(sig, n).relation("R", tuples).build()
}

pub fn complete_graph(n: usize) -> Result<FiniteStructure, StructureError> {
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    graph_from_edges(n, &edges)
}

pub(crate) fn sole_binary_relation(m: &FiniteStructure) -> Result<&str, StructureError> {
    let mut binary = m.signature().relations().iter().filter(|(_, &a)| a == 2);
    match (binary.next(), binary.next()) {
        (Some((name, _)), None) => Ok(name),
        _ => Err(StructureError::NotAGraph("expected exactly one binary relation".into())),
    }
}

fn combinations(items: &[usize], k: usize, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    fn go(items: &[usize], k: usize, start: usize, chosen: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if chosen.len() == k {
            return f(chosen);
        }
        for i in start..items.len() {
            if items.len() - i < k - chosen.len() {
                break;
            }
            chosen.push(items[i]);
            let keep_going = go(items, k, i + 1, chosen, f);
            chosen.pop();
            if !keep_going {
                return false;
            }
        }
        true
    }
    go(items, k, 0, &mut Vec::with_capacity(k), f)
}

/// The `(s, t)` extension axiom: for all disjoint vertex sets `A`, `B` with
/// `|A| = s`, `|B| = t` some `x` outside `A` and `B` is adjacent to every
/// vertex of `A` and to none of `B`. Checked exhaustively.
pub fn extension_property(m: &FiniteStructure, s: usize, t: usize) -> Result<bool, StructureError> {
    let rel = sole_binary_relation(m)?;
    let n = m.size();
    if s + t == 0 || s + t > n {
        return Err(StructureError::Invalid(format!("need 1 <= s + t <= {n}, got s = {s}, t = {t}")));
    }
    let adj: Vec<Vec<bool>> = (0..n).map(|a| (0..n).map(|b| m.holds(rel, &[a, b])).collect()).collect();
    for a in 0..n {
        if adj[a][a] {
            return Err(StructureError::NotAGraph(format!("loop at {a}")));
        }
        if let Some(b) = (0..n).find(|&b| adj[a][b] != adj[b][a]) {
            return Err(StructureError::NotAGraph(format!("edge ({a},{b}) is not symmetric")));
        }
    }
    let all: Vec<usize> = (0..n).collect();
    let holds = combinations(&all, s, &mut |a_set| {
        let rest: Vec<usize> = all.iter().copied().filter(|v| !a_set.contains(v)).collect();
        combinations(&rest, t, &mut |b_set| {
            (0..n).any(|x| {
                !a_set.contains(&x)
                    && !b_set.contains(&x)
                    && a_set.iter().all(|&a| adj[x][a])
                    && b_set.iter().all(|&b| !adj[x][b])
            })
        })
    });
    Ok(holds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::paley;

    /// Straight transcription over ordered tuples, independent of the
    /// combination walker above.
    fn oracle(m: &FiniteStructure, s: usize, t: usize) -> bool {
        let n = m.size();
        m.tuples(s + t).all(|tuple| {
            let mut sorted = tuple.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() < s + t {
                return true;
            }
            let (a, b) = tuple.split_at(s);
            (0..n).any(|x| {
                !tuple.contains(&x) && a.iter().all(|&v| m.holds("R", &[x, v])) && b.iter().all(|&v| !m.holds("R", &[x, v]))
            })
        })
    }

    #[test]
    fn paley5_has_no_isolated_vertices() {
        assert!(extension_property(&paley(5).unwrap(), 1, 0).unwrap());
    }

    #[test]
    fn paley5_one_one_matches_oracle() {
        let m = paley(5).unwrap();
        let expected = oracle(&m, 1, 1);
        assert_eq!(extension_property(&m, 1, 1).unwrap(), expected);
        // on the 5-cycle, the neighbour of a on the far side from b always works
        assert!(expected);
        assert!(!extension_property(&m, 2, 0).unwrap());
    }

    #[test]
    fn complete_graph_fails_zero_one() {
        assert!(!extension_property(&complete_graph(4).unwrap(), 0, 1).unwrap());
        assert!(extension_property(&complete_graph(4).unwrap(), 2, 0).unwrap());
    }

    #[test]
    fn rejects_non_graphs_and_bad_sizes() {
        let sig = Signature::new().with_relation("R", 2).unwrap();
        let directed = FiniteStructure::builder(sig, 3).relation("R", [vec![0, 1]]).build().unwrap();
        assert!(matches!(extension_property(&directed, 1, 0), Err(StructureError::NotAGraph(_))));
        assert!(matches!(extension_property(&paley(5).unwrap(), 0, 0), Err(StructureError::Invalid(_))));
        assert!(matches!(extension_property(&paley(5).unwrap(), 3, 3), Err(StructureError::Invalid(_))));
    }

    #[test]
    fn agrees_with_oracle_on_small_paley_graphs() {
        for q in [5, 13, 17] {
            let m = paley(q).unwrap();
            for (s, t) in [(1, 0), (0, 1), (1, 1), (2, 0), (2, 1), (1, 2), (2, 2)] {
                assert_eq!(extension_property(&m, s, t).unwrap(), oracle(&m, s, t), "q={q} s={s} t={t}");
            }
        }
    }
}
