//! Small permutation helpers shared by the enumeration oracles.

/// Calls `f` once for every permutation of `0..n` (lexicographic order).
/// `f` receives `p` with `p[i] = pi(i)`.
pub fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        f(&p);
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else {
            return;
        };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).expect("pivot exists");
        p.swap(i - 1, j);
        p[i..].reverse();
    }
}

/// Cycle lengths of `p`, in order of their smallest element.
pub fn cycle_lengths(p: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; p.len()];
    let mut out = Vec::new();
    for start in 0..p.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = p[j];
            len += 1;
        }
        out.push(len);
    }
    out
}

pub fn max_cycle_len(p: &[usize]) -> usize {
    cycle_lengths(p).into_iter().max().unwrap_or(0)
}

pub fn fixed_points(p: &[usize]) -> usize {
    p.iter().enumerate().filter(|(i, &j)| *i == j).count()
}

/// All permutations of `0..n` whose cycles are at most `k_max` long.
pub fn restricted_permutations(n: usize, k_max: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p = vec![usize::MAX; n];
    build_restricted(&mut p, k_max, &mut out);
    out
}

fn build_restricted(p: &mut Vec<usize>, k_max: usize, out: &mut Vec<Vec<usize>>) {
    // first unassigned element anchors the next cycle
    let Some(start) = p.iter().position(|&x| x == usize::MAX) else {
        out.push(p.clone());
        return;
    };
    fn extend(p: &mut Vec<usize>, start: usize, cur: usize, len: usize, k_max: usize, out: &mut Vec<Vec<usize>>) {
        // close the cycle at `cur`
        p[cur] = start;
        build_restricted(p, k_max, out);
        p[cur] = usize::MAX;
        if len == k_max {
            return;
        }
        for next in (start + 1)..p.len() {
            if p[next] != usize::MAX || next == cur {
                continue;
            }
            p[cur] = next;
            extend(p, start, next, len + 1, k_max, out);
            p[cur] = usize::MAX;
        }
    }
    extend(p, start, start, 1, k_max, out);
}
