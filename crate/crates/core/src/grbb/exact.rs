//! Exact finite-state analysis for small instances: the full transition
//! matrix over compositions of `N` into `L` parts, its stationary vector and
//! exact mixing times.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::OccupancyVector;
use crate::combinatorics::{binomial, ln_factorial};
use crate::error::{Error, Result};
use crate::statistics::ReassignmentLaw;

/// Largest state space the exact routines accept.
pub const STATE_SPACE_GUARD: usize = 20_000;

const DENSE_SOLVE_LIMIT: usize = 1_500;
const MAX_MIXING_STEPS: usize = 1_000_000;

/// `C(n + l - 1, n)`, saturating at `u128::MAX`.
pub fn count_compositions(l: usize, n: usize) -> u128 {
    if l == 0 {
        return u128::from(n == 0);
    }
    let (top, k) = ((n + l - 1) as u128, n.min(l - 1) as u128);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(top - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

fn compositions(l: usize, n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, l: usize, left: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == l {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for x in (0..=left).rev() {
            prefix.push(x);
            rec(prefix, l, left - x, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(l), l, n, &mut out);
    out
}

fn subsets(l: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, l: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 0 {
            let mut v = vec![0; l];
            for &i in cur.iter() {
                v[i] = 1;
            }
            out.push(v);
            return;
        }
        for i in start..=l - k {
            cur.push(i);
            rec(i + 1, l, k - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, l, k, &mut Vec::new(), &mut out);
    out
}

/// Every reassignment outcome of `k` balls into `l` sites with its probability.
fn reassignment_outcomes(law: ReassignmentLaw, l: usize, k: usize) -> Vec<(Vec<usize>, f64)> {
    match law {
        ReassignmentLaw::FermiDirac => {
            let w = 1.0 / binomial(l as u64, k as u64);
            subsets(l, k).into_iter().map(|v| (v, w)).collect()
        }
        ReassignmentLaw::MaxwellBoltzmann => {
            let base = ln_factorial(k as u64) - k as f64 * (l as f64).ln();
            compositions(l, k)
                .into_iter()
                .map(|v| {
                    let lw = base - v.iter().map(|&b| ln_factorial(b as u64)).sum::<f64>();
                    (v, lw.exp())
                })
                .collect()
        }
        ReassignmentLaw::BoseEinstein => {
            let w = 1.0 / binomial((k + l - 1) as u64, k as u64);
            compositions(l, k).into_iter().map(|v| (v, w)).collect()
        }
    }
}

/// Sparse row-stochastic matrix of the chain on compositions of `N` into `L`
/// parts.
#[derive(Clone, Debug)]
pub struct TransitionMatrix {
    law: ReassignmentLaw,
    states: Vec<OccupancyVector>,
    index: HashMap<Vec<usize>, usize>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl TransitionMatrix {
    /// Enumerates every reassignment outcome from every state.
    pub fn new(law: ReassignmentLaw, l: usize, n: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidParameter("L must be at least 1".into()));
        }
        let count = count_compositions(l, n);
        if count > STATE_SPACE_GUARD as u128 {
            return Err(Error::StateSpaceTooLarge { states: count, guard: STATE_SPACE_GUARD });
        }
        let raw = compositions(l, n);
        let index: HashMap<Vec<usize>, usize> = raw.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();

        let mut outcome_cache: HashMap<usize, Vec<(Vec<usize>, f64)>> = HashMap::new();
        let mut rows = Vec::with_capacity(raw.len());
        for s in &raw {
            let released = s.iter().filter(|&&c| c > 0).count();
            let outcomes = outcome_cache.entry(released).or_insert_with(|| reassignment_outcomes(law, l, released));
            let base: Vec<usize> = s.iter().map(|&c| c.saturating_sub(1)).collect();
            let mut row: BTreeMap<usize, f64> = BTreeMap::new();
            let mut target = vec![0; l];
            for (b, w) in outcomes.iter() {
                for i in 0..l {
                    target[i] = base[i] + b[i];
                }
                *row.entry(index[&target]).or_insert(0.0) += w;
            }
            rows.push(row.into_iter().collect());
        }
        let states = raw.into_iter().map(OccupancyVector).collect();
        Ok(Self { law, states, index, rows })
    }

    pub fn law(&self) -> ReassignmentLaw {
        self.law
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[OccupancyVector] {
        &self.states
    }

    pub fn state_index(&self, state: &[usize]) -> Option<usize> {
        self.index.get(state).copied()
    }

    /// Non-zero entries of row `i`.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// Transition probability from `from` to `to`.
    pub fn probability(&self, from: &[usize], to: &[usize]) -> Option<f64> {
        let (i, j) = (self.state_index(from)?, self.state_index(to)?);
        Some(self.rows[i].iter().find(|(k, _)| *k == j).map_or(0.0, |&(_, p)| p))
    }

    /// `dist * P`.
    pub fn apply(&self, dist: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; dist.len()];
        for (i, &d) in dist.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            for &(j, p) in &self.rows[i] {
                out[j] += d * p;
            }
        }
        out
    }

    /// Closed communicating classes (recurrent classes of the finite chain).
    pub fn closed_classes(&self) -> Vec<Vec<usize>> {
        let mut g = DiGraph::<(), ()>::with_capacity(self.len(), 0);
        let nodes: Vec<_> = (0..self.len()).map(|_| g.add_node(())).collect();
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                if p > 0.0 && i != j {
                    g.add_edge(nodes[i], nodes[j], ());
                }
            }
        }
        let mut classes = Vec::new();
        for scc in tarjan_scc(&g) {
            let members: Vec<usize> = scc.iter().map(|n| n.index()).collect();
            let mut inside = vec![false; self.len()];
            for &m in &members {
                inside[m] = true;
            }
            let closed = members.iter().all(|&i| self.rows[i].iter().all(|&(j, p)| p == 0.0 || inside[j]));
            if closed {
                let mut members = members;
                members.sort_unstable();
                classes.push(members);
            }
        }
        classes.sort();
        classes
    }
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Stationary vector (indexed like [`TransitionMatrix::states`]) of a chain
/// with a single closed class.
pub fn stationary_exact(matrix: &TransitionMatrix) -> Result<Vec<f64>> {
    let classes = matrix.closed_classes();
    if classes.len() != 1 {
        return Err(Error::NoUniqueStationary { closed_classes: classes.len() });
    }
    let class = &classes[0];
    let m = class.len();
    let mut local = vec![usize::MAX; matrix.len()];
    for (k, &i) in class.iter().enumerate() {
        local[i] = k;
    }

    let pi_local: Vec<f64> = if m <= DENSE_SOLVE_LIMIT {
        // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1
        let mut a = DMatrix::<f64>::zeros(m, m);
        for (k, &i) in class.iter().enumerate() {
            for &(j, p) in matrix.row(i) {
                a[(local[j], k)] += p;
            }
            a[(k, k)] -= 1.0;
        }
        for k in 0..m {
            a[(m - 1, k)] = 1.0;
        }
        let mut rhs = DVector::<f64>::zeros(m);
        rhs[m - 1] = 1.0;
        let sol = a.lu().solve(&rhs).ok_or_else(|| Error::Numerical("singular stationary system".into()))?;
        sol.iter().copied().collect()
    } else {
        // lazy chain (I + P) / 2 shares the stationary vector and is aperiodic
        let mut pi = vec![1.0 / m as f64; m];
        for _ in 0..MAX_MIXING_STEPS {
            let mut next = vec![0.0; m];
            for (k, &i) in class.iter().enumerate() {
                next[k] += 0.5 * pi[k];
                for &(j, p) in matrix.row(i) {
                    next[local[j]] += 0.5 * pi[k] * p;
                }
            }
            let done = l1(&next, &pi) < 1e-14;
            pi = next;
            if done {
                break;
            }
        }
        pi
    };

    let mut pi = vec![0.0; matrix.len()];
    for (k, &i) in class.iter().enumerate() {
        pi[i] = pi_local[k].max(0.0);
    }
    let total: f64 = pi.iter().sum();
    for p in &mut pi {
        *p /= total;
    }
    let residual = l1(&matrix.apply(&pi), &pi);
    if residual > 1e-10 {
        return Err(Error::Numerical(format!("stationary residual {residual:e} exceeds 1e-10")));
    }
    Ok(pi)
}

/// Initial condition for [`exact_mixing_time`].
#[derive(Clone, Debug, PartialEq)]
pub enum MixingStart {
    State(OccupancyVector),
    /// Worst case over every state.
    All,
}

/// Smallest `t` with `TV(delta_start P^t, pi) <= eps`.
pub fn exact_mixing_time(matrix: &TransitionMatrix, start: &MixingStart, eps: f64) -> Result<usize> {
    let pi = stationary_exact(matrix)?;
    let starts: Vec<usize> = match start {
        MixingStart::State(s) => vec![matrix
            .state_index(s)
            .ok_or_else(|| Error::InvalidParameter(format!("state {:?} not in the state space", &s[..])))?],
        MixingStart::All => (0..matrix.len()).collect(),
    };
    let mut worst = 0;
    for s in starts {
        let mut dist = vec![0.0; matrix.len()];
        dist[s] = 1.0;
        let mut t = 0;
        while 0.5 * l1(&dist, &pi) > eps {
            if t == MAX_MIXING_STEPS {
                return Err(Error::Numerical(format!("no mixing within {MAX_MIXING_STEPS} steps")));
            }
            dist = matrix.apply(&dist);
            t += 1;
        }
        worst = worst.max(t);
    }
    Ok(worst)
}
