use crate::error::{Error, Result};

/// Minimum-cost perfect matching on a square `n x n` cost matrix
/// (row-major) by the Hungarian method with potentials. Returns the total
/// cost and `perm` with row `r` matched to column `perm[r]`.
pub fn hungarian(cost: &[f64], n: usize) -> Result<(f64, Vec<usize>)> {
    if cost.len() != n * n {
        return Err(Error::Shape(format!(
            "cost matrix has {} entries, expected {n}x{n}",
            cost.len()
        )));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::Domain("cost matrix has non-finite entries".into()));
    }
    if n == 0 {
        return Ok((0.0, Vec::new()));
    }
    // 1-based potentials; column 0 is a sentinel.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[owner[j] - 1] = j - 1;
    }
    Ok((permutation_cost(cost, n, &perm), perm))
}

/// `sum_r cost[r, perm[r]]`, summed in row order.
pub fn permutation_cost(cost: &[f64], n: usize, perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(r, &c)| cost[r * n + c]).sum()
}

/// Column-matching costs `C[k][l] = sum_i |w_a[i,k] - w_b[i,l]| + |ws_a[k] - ws_b[l]|`
/// for row-major `n x p` weights.
pub fn matching_costs(w_a: &[f64], w_b: &[f64], p: usize, wstar_a: &[f64], wstar_b: &[f64]) -> Result<Vec<f64>> {
    if p == 0 || w_a.len() != w_b.len() || w_a.len() % p != 0 || wstar_a.len() != p || wstar_b.len() != p {
        return Err(Error::Shape("weight arrays do not match".into()));
    }
    let n = w_a.len() / p;
    let mut c = vec![0.0; p * p];
    for k in 0..p {
        for l in 0..p {
            let mut s = (wstar_a[k] - wstar_b[l]).abs();
            for i in 0..n {
                s += (w_a[i * p + k] - w_b[i * p + l]).abs();
            }
            c[k * p + l] = s;
        }
    }
    Ok(c)
}

/// Permutation-invariant absolute loss between two weight samples and the
/// optimal matching of communities of `a` to communities of `b`.
pub fn assignment_cost(
    w_a: &[f64],
    w_b: &[f64],
    p: usize,
    wstar_a: &[f64],
    wstar_b: &[f64],
) -> Result<(f64, Vec<usize>)> {
    let c = matching_costs(w_a, w_b, p, wstar_a, wstar_b)?;
    hungarian(&c, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in all_permutations(n - 1) {
            for pos in 0..n {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn identical_inputs_cost_zero() {
        let w = [0.1, 0.5, 0.3, 0.7, 0.2, 0.9];
        let (c, perm) = assignment_cost(&w, &w, 2, &[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(c, 0.0);
        assert_eq!(perm, vec![0, 1]);
    }

    #[test]
    fn single_community_is_plain_l1() {
        let (c, _) = assignment_cost(&[1.0, 2.0, 3.0], &[1.5, 1.0, 3.0], 1, &[0.5], &[0.25]).unwrap();
        assert_eq!(c, 0.5 + 1.0 + 0.0 + 0.25);
    }

    #[test]
    fn matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..100 {
            let p = 1 + trial % 5;
            let n = 10;
            let wa: Vec<f64> = (0..n * p).map(|_| rng.random::<f64>()).collect();
            let wb: Vec<f64> = (0..n * p).map(|_| rng.random::<f64>()).collect();
            let sa: Vec<f64> = (0..p).map(|_| rng.random::<f64>()).collect();
            let sb: Vec<f64> = (0..p).map(|_| rng.random::<f64>()).collect();
            let c = matching_costs(&wa, &wb, p, &sa, &sb).unwrap();
            let best = all_permutations(p)
                .iter()
                .map(|q| permutation_cost(&c, p, q))
                .fold(f64::INFINITY, f64::min);
            let (h, _) = hungarian(&c, p).unwrap();
            assert_eq!(h, best, "trial {trial}");
        }
    }

    #[test]
    fn symmetric_and_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = 4;
        let wa: Vec<f64> = (0..12 * p).map(|_| rng.random::<f64>()).collect();
        let wb: Vec<f64> = (0..12 * p).map(|_| rng.random::<f64>()).collect();
        let sa = [0.1, 0.2, 0.3, 0.4];
        let sb = [0.4, 0.1, 0.0, 0.9];
        let (ab, _) = assignment_cost(&wa, &wb, p, &sa, &sb).unwrap();
        let (ba, _) = assignment_cost(&wb, &wa, p, &sb, &sa).unwrap();
        assert!((ab - ba).abs() < 1e-12);
        let q = [2, 0, 3, 1];
        let wb2: Vec<f64> = (0..12 * p).map(|ix| wb[(ix / p) * p + q[ix % p]]).collect();
        let sb2: Vec<f64> = q.iter().map(|&k| sb[k]).collect();
        let (ab2, _) = assignment_cost(&wa, &wb2, p, &sa, &sb2).unwrap();
        assert_eq!(ab, ab2);
    }
}
