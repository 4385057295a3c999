//! Enumeration and ranking of output configurations.
//!
//! The configurations of `n` bosons in `M` ports are ordered lexicographically
//! by occupation vector, ascending: `(0, .., 0, n)` has rank 0 and
//! `(n, 0, .., 0)` the last rank. Inverse-CDF sampling walks this order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest outcome space any exhaustive routine will enumerate.
pub const OUTCOME_CAP: usize = 2_000_000;

/// Detector counts `m = (m_1, ..., m_M)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OutputConfiguration {
    occupations: Vec<usize>,
}

impl OutputConfiguration {
    pub fn new(occupations: Vec<usize>) -> Self {
        OutputConfiguration { occupations }
    }

    pub fn zeros(dim: usize) -> Self {
        OutputConfiguration { occupations: vec![0; dim] }
    }

    /// Configuration with one boson per listed (0-based) port, collisions
    /// accumulating.
    pub fn from_ports(dim: usize, ports: &[usize]) -> Self {
        let mut occupations = vec![0; dim];
        for &p in ports {
            occupations[p] += 1;
        }
        OutputConfiguration { occupations }
    }

    pub fn occupations(&self) -> &[usize] {
        &self.occupations
    }

    pub fn dim(&self) -> usize {
        self.occupations.len()
    }

    pub fn total(&self) -> usize {
        self.occupations.iter().sum()
    }

    /// Sorted multiset of occupied ports (0-based), `l_1 <= ... <= l_N`.
    pub fn ports(&self) -> Vec<usize> {
        self.occupations.iter().enumerate().flat_map(|(l, &c)| std::iter::repeat_n(l, c)).collect()
    }

    /// `m! = prod_l m_l!`.
    pub fn factorial_product(&self) -> f64 {
        self.occupations.iter().map(|&c| (1..=c).map(|k| k as f64).product::<f64>()).product()
    }

    /// True when every count outside the port set is zero.
    pub fn supported_on(&self, inside: &[bool]) -> bool {
        self.occupations.iter().zip(inside).all(|(&c, &ok)| ok || c == 0)
    }

    pub(crate) fn add(&mut self, port: usize) {
        self.occupations[port] += 1;
    }
}

/// Number of ways to place `r` bosons in `p` ports.
fn compositions(p: usize, r: usize) -> u128 {
    if p == 0 {
        return u128::from(r == 0);
    }
    // C(p + r - 1, r), saturating
    let mut acc: u128 = 1;
    for i in 0..r as u128 {
        acc = match acc.checked_mul(p as u128 - 1 + i + 1) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All configurations of a fixed number of bosons in a fixed number of ports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigSpace {
    ports: usize,
    bosons: usize,
    len: usize,
    // counts[p][r] = compositions(p, r) for p <= ports, r <= bosons
    counts: Vec<Vec<usize>>,
}

impl ConfigSpace {
    pub fn new(ports: usize, bosons: usize) -> Result<Self> {
        Self::with_cap(ports, bosons, OUTCOME_CAP)
    }

    pub fn with_cap(ports: usize, bosons: usize, cap: usize) -> Result<Self> {
        if ports == 0 {
            return Err(Error::InvalidDimension(0));
        }
        let total = compositions(ports, bosons);
        if total > cap as u128 {
            return Err(Error::SizeLimit {
                what: "outcome space",
                size: usize::try_from(total).unwrap_or(usize::MAX),
                cap,
                hint: Some(format!("{bosons} bosons in {ports} ports")),
            });
        }
        let counts = (0..=ports)
            .map(|p| (0..=bosons).map(|r| compositions(p, r) as usize).collect())
            .collect();
        Ok(ConfigSpace { ports, bosons, len: total as usize, counts })
    }

    pub fn ports(&self) -> usize {
        self.ports
    }

    pub fn bosons(&self) -> usize {
        self.bosons
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Lexicographic rank of `occupations` (must have the right length and sum).
    pub fn rank(&self, occupations: &[usize]) -> usize {
        debug_assert_eq!(occupations.len(), self.ports);
        let mut rank = 0;
        let mut remaining = self.bosons;
        for (i, &c) in occupations.iter().enumerate().take(self.ports - 1) {
            let tail_ports = self.ports - i - 1;
            for v in 0..c {
                rank += self.counts[tail_ports][remaining - v];
            }
            remaining -= c;
        }
        rank
    }

    pub fn unrank(&self, mut rank: usize) -> OutputConfiguration {
        let mut occ = vec![0; self.ports];
        let mut remaining = self.bosons;
        for (i, slot) in occ.iter_mut().enumerate().take(self.ports - 1) {
            let tail_ports = self.ports - i - 1;
            let mut v = 0;
            while rank >= self.counts[tail_ports][remaining - v] {
                rank -= self.counts[tail_ports][remaining - v];
                v += 1;
            }
            *slot = v;
            remaining -= v;
        }
        occ[self.ports - 1] = remaining;
        OutputConfiguration::new(occ)
    }

    /// Configurations in rank order.
    pub fn iter(&self) -> ConfigIter {
        let mut first = vec![0; self.ports];
        first[self.ports - 1] = self.bosons;
        ConfigIter { next: Some(first) }
    }

    /// `table[rank * ports + l]` = rank in `self + 1 boson` of the configuration
    /// with one extra boson in port `l`.
    pub(crate) fn successor_table(&self, larger: &ConfigSpace) -> Vec<usize> {
        debug_assert_eq!(larger.bosons, self.bosons + 1);
        let mut table = Vec::with_capacity(self.len * self.ports);
        for mut occ in self.iter() {
            for l in 0..self.ports {
                occ[l] += 1;
                table.push(larger.rank(&occ));
                occ[l] -= 1;
            }
        }
        table
    }
}

pub struct ConfigIter {
    next: Option<Vec<usize>>,
}

impl Iterator for ConfigIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.next.take()?;
        let m = cur.len();
        let mut nxt = cur.clone();
        let mut tail = 0;
        // rightmost position (not the last) with bosons to its right
        for i in (0..m.saturating_sub(1)).rev() {
            tail += nxt[i + 1];
            if tail > 0 {
                nxt[i] += 1;
                for slot in nxt.iter_mut().skip(i + 1) {
                    *slot = 0;
                }
                nxt[m - 1] = tail - 1;
                self.next = Some(nxt);
                break;
            }
        }
        Some(cur)
    }
}
