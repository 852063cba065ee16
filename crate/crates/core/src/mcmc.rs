//! Lazy random walks over the median set: the primer walk and its Metropolis
//! filter, with exact finite-chain analysis.

use crate::error::{Error, Result};
use crate::median::MedianSet;
use crate::partition::{factorial, WeightFunction};
use crate::scalar::ln_exact;
use crate::strings::{BitString, Layout, StringMultiset};
use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::{BTreeMap, VecDeque};

/// Default largest state space for exact matrix analysis.
pub const DEFAULT_STATE_CAP: u64 = 1 << 20;
/// Largest support handed to the dense eigen-solver.
pub const SPECTRAL_CAP: usize = 2048;

#[derive(Debug, Clone)]
pub enum ChainKind {
    /// Stay with probability 1/2, else flip a uniformly chosen ambiguous bit.
    Primer,
    /// Primer proposals accepted with probability `min(1, f(mu')/f(mu))`,
    /// `f(mu) = prod_i w(H(mu, nu_i))`.
    Metropolis(WeightFunction),
}

/// A chain on the medians of a multiset. State `s` is the median whose
/// ambiguous bits are the bits of `s`.
#[derive(Debug, Clone)]
pub struct ChainModel {
    multiset: StringMultiset,
    set: MedianSet,
    kind: ChainKind,
    seed: u64,
    /// `w(d)` for `d = 0..=len`, `None` where undefined.
    weights: Vec<Option<BigRational>>,
    /// `ln w(d)`, `None` where `w(d) = 0` or undefined.
    ln_weights: Vec<Option<f64>>,
}

impl ChainModel {
    pub fn primer(b: StringMultiset, seed: u64) -> Result<Self> {
        Self::new(b, ChainKind::Primer, seed)
    }

    pub fn metropolis(b: StringMultiset, w: WeightFunction, seed: u64) -> Result<Self> {
        Self::new(b, ChainKind::Metropolis(w), seed)
    }

    pub fn new(b: StringMultiset, kind: ChainKind, seed: u64) -> Result<Self> {
        let set = MedianSet::of(&b)?;
        if set.ambiguous.len() > 63 {
            return Err(Error::TooLarge(format!("{} ambiguous coordinates", set.ambiguous.len())));
        }
        let len = b.layout().len();
        let (weights, ln_weights) = match &kind {
            ChainKind::Primer => (vec![Some(BigRational::one()); len + 1], vec![Some(0.0); len + 1]),
            ChainKind::Metropolis(w) => {
                let weights: Vec<Option<BigRational>> = (0..=len).map(|d| w.exact(d).ok()).collect();
                let ln = weights
                    .iter()
                    .enumerate()
                    .map(|(d, v)| match v {
                        Some(v) if v.is_positive() => Some(match w {
                            WeightFunction::Factorial | WeightFunction::Identity => w.ln(d).unwrap_or(f64::NAN),
                            _ => ln_exact(v),
                        }),
                        _ => None,
                    })
                    .collect();
                (weights, ln)
            }
        };
        Ok(ChainModel { multiset: b, set, kind, seed, weights, ln_weights })
    }

    pub fn kind(&self) -> &ChainKind {
        &self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn multiset(&self) -> &StringMultiset {
        &self.multiset
    }

    pub fn ambiguous_bits(&self) -> usize {
        self.set.ambiguous.len()
    }

    pub fn n_states(&self) -> u64 {
        1u64 << self.ambiguous_bits()
    }

    pub fn median(&self, state: u64) -> BitString {
        self.set.median_at(state)
    }

    pub fn state_of(&self, mu: &BitString) -> u64 {
        self.set.state_of(mu)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    fn distances(&self, state: u64) -> Vec<usize> {
        let mu = self.median(state);
        self.multiset.members().iter().map(|m| m.hamming_unchecked(&mu)).collect()
    }

    fn weight_from(&self, dist: &[usize]) -> Result<BigRational> {
        let mut hist = BTreeMap::<usize, usize>::new();
        for &d in dist {
            *hist.entry(d).or_default() += 1;
        }
        hist.into_iter().try_fold(BigRational::one(), |acc, (d, c)| {
            let w = self.weights[d].clone().ok_or(Error::WeightDomain(d))?;
            Ok(acc * num_traits::pow(w, c))
        })
    }

    /// Exact unnormalized stationary weight of a state.
    pub fn weight(&self, state: u64) -> Result<BigRational> {
        self.weight_from(&self.distances(state))
    }

    /// `ln f` from a distance vector, or `None` when `f = 0`.
    fn ln_weight(&self, dist: &[usize]) -> Result<Option<f64>> {
        let mut s = 0.0;
        for &d in dist {
            if self.weights[d].is_none() {
                return Err(Error::WeightDomain(d));
            }
            match self.ln_weights[d] {
                Some(l) => s += l,
                None => return Ok(None),
            }
        }
        Ok(Some(s))
    }

    /// Distances after flipping ambiguous bit `j` of `state`.
    fn flipped(&self, state: u64, dist: &[usize], j: usize) -> Vec<usize> {
        let c = self.set.ambiguous[j];
        let now = (state >> j) & 1 == 1;
        self.multiset
            .members()
            .iter()
            .zip(dist)
            .map(|(m, &d)| if m.get(c) == now { d + 1 } else { d - 1 })
            .collect()
    }

    /// Acceptance rule shared by sampling and the exact matrix: a state of
    /// zero weight always moves, a zero-weight proposal is always refused.
    fn accept_ln(current: Option<f64>, proposed: Option<f64>, u: f64) -> bool {
        match (current, proposed) {
            (None, _) => true,
            (_, None) => false,
            (Some(a), Some(b)) => b >= a || u < (b - a).exp(),
        }
    }

    fn step_with(&self, state: u64, dist: &mut Vec<usize>, rng: &mut impl Rng) -> Result<(u64, bool)> {
        let a = self.ambiguous_bits();
        if a == 0 || rng.gen_bool(0.5) {
            return Ok((state, false));
        }
        let j = rng.gen_range(0..a);
        let next = self.flipped(state, dist, j);
        let ok = match self.kind {
            ChainKind::Primer => true,
            ChainKind::Metropolis(_) => {
                let u: f64 = rng.gen();
                Self::accept_ln(self.ln_weight(dist)?, self.ln_weight(&next)?, u)
            }
        };
        if ok {
            *dist = next;
            Ok((state ^ (1 << j), true))
        } else {
            Ok((state, false))
        }
    }

    pub fn step(&self, state: u64, rng: &mut impl Rng) -> Result<u64> {
        if state >= self.n_states() {
            return Err(Error::Chain(format!("state {state} out of range")));
        }
        let mut dist = self.distances(state);
        Ok(self.step_with(state, &mut dist, rng)?.0)
    }

    /// Runs `steps` steps from `start` with the chain's own seed, recording
    /// the state after every `thin`-th step.
    pub fn sample(&self, start: u64, steps: u64, thin: u64) -> Result<SampleRun> {
        if start >= self.n_states() {
            return Err(Error::Chain(format!("state {start} out of range")));
        }
        if thin == 0 {
            return Err(Error::Chain("thinning interval must be positive".into()));
        }
        let mut rng = self.rng();
        let mut dist = self.distances(start);
        let mut state = start;
        let mut visits = BTreeMap::new();
        let mut moves = 0;
        for i in 1..=steps {
            let (next, moved) = self.step_with(state, &mut dist, &mut rng)?;
            state = next;
            moves += u64::from(moved);
            if i % thin == 0 {
                *visits.entry(state).or_insert(0u64) += 1;
            }
        }
        Ok(SampleRun { seed: self.seed, start, steps, thin, final_state: state, moves, visits })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleRun {
    pub seed: u64,
    pub start: u64,
    pub steps: u64,
    pub thin: u64,
    pub final_state: u64,
    /// Steps that changed the state.
    pub moves: u64,
    pub visits: BTreeMap<u64, u64>,
}

/// Sparse row-stochastic matrix with exact entries; each row lists its
/// nonzero columns in increasing order, diagonal included.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    pub rows: Vec<Vec<(usize, BigRational)>>,
}

impl TransitionMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> BigRational {
        self.rows[i]
            .binary_search_by_key(&j, |(c, _)| *c)
            .map(|k| self.rows[i][k].1.clone())
            .unwrap_or_else(|_| BigRational::zero())
    }
}

pub fn transition_matrix(chain: &ChainModel, cap: u64) -> Result<TransitionMatrix> {
    let n = chain.n_states();
    if n > cap {
        return Err(Error::TooLarge(format!("{n} states (cap {cap})")));
    }
    let a = chain.ambiguous_bits();
    if a == 0 {
        return Ok(TransitionMatrix { rows: vec![vec![(0, BigRational::one())]] });
    }
    let weights: Vec<BigRational> = (0..n).map(|s| chain.weight(s)).collect::<Result<_>>()?;
    let prop = BigRational::new(1.into(), (2 * a).into());
    let rows = (0..n)
        .map(|s| {
            let mut row: Vec<(usize, BigRational)> = Vec::with_capacity(a + 1);
            let mut out = BigRational::zero();
            for j in 0..a {
                let t = s ^ (1 << j);
                let (w, w2) = (&weights[s as usize], &weights[t as usize]);
                let p = if w.is_zero() {
                    prop.clone()
                } else if w2.is_zero() {
                    continue;
                } else if w2 >= w {
                    prop.clone()
                } else {
                    &prop * w2 / w
                };
                out += &p;
                row.push((t as usize, p));
            }
            row.push((s as usize, BigRational::one() - out));
            row.sort_by_key(|(c, _)| *c);
            row
        })
        .collect();
    Ok(TransitionMatrix { rows })
}

#[derive(Debug, Clone, Serialize)]
pub struct Conductance {
    pub capacity: String,
    pub flow: String,
    pub value: String,
    pub value_f64: f64,
    pub bound: Option<String>,
    pub within_bound: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    /// Medians in the positive-weight support, by state index.
    pub states: Vec<String>,
    pub pi: Vec<String>,
    /// `1 - max(|lambda_2|, |lambda_min|)`; absent above the spectral cap.
    pub gap: Option<f64>,
    pub balance_residual: f64,
    pub stationary_residual: f64,
    /// Whether the stationary vector is exactly the normalized chain weights.
    pub matches_weights: bool,
    pub conductance: Option<Conductance>,
}

fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| ln_exact(q).exp())
}

/// Stationary vector on the positive-weight support, propagated along edges
/// by detailed balance and normalized.
fn stationary(chain: &ChainModel, p: &TransitionMatrix) -> Result<(Vec<usize>, Vec<BigRational>)> {
    let n = p.len();
    let weights: Vec<BigRational> = (0..n as u64).map(|s| chain.weight(s)).collect::<Result<_>>()?;
    let support: Vec<usize> = (0..n).filter(|&s| weights[s].is_positive()).collect();
    let Some(&first) = support.first() else {
        return Err(Error::Chain("every median has weight zero".into()));
    };
    let mut pi: Vec<Option<BigRational>> = vec![None; n];
    pi[first] = Some(BigRational::one());
    let mut queue = VecDeque::from([first]);
    while let Some(s) = queue.pop_front() {
        let ps = pi[s].clone().unwrap();
        for (t, pst) in &p.rows[s] {
            if *t == s || pi[*t].is_some() || !weights[*t].is_positive() {
                continue;
            }
            let pts = p.get(*t, s);
            if pts.is_zero() {
                continue;
            }
            pi[*t] = Some(&ps * pst / pts);
            queue.push_back(*t);
        }
    }
    if support.iter().any(|&s| pi[s].is_none()) {
        return Err(Error::Chain("positive-weight support is not connected".into()));
    }
    let total: BigRational = support.iter().map(|&s| pi[s].clone().unwrap()).sum();
    let pi = support.iter().map(|&s| pi[s].clone().unwrap() / &total).collect();
    Ok((support, pi))
}

fn spectral_gap(p: &TransitionMatrix, support: &[usize], pi: &[BigRational]) -> f64 {
    let m = support.len();
    let index: BTreeMap<usize, usize> = support.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let root: Vec<f64> = pi.iter().map(|q| to_f64(q).sqrt()).collect();
    let mut s = DMatrix::<f64>::zeros(m, m);
    for (i, &row) in support.iter().enumerate() {
        for (col, v) in &p.rows[row] {
            if let Some(&j) = index.get(col) {
                s[(i, j)] = root[i] * to_f64(v) / root[j];
            }
        }
    }
    // Symmetrize away rounding noise.
    let s = (&s + s.transpose()) * 0.5;
    let mut ev: Vec<f64> = s.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    if ev.len() < 2 {
        return 1.0;
    }
    let slem = ev[1].abs().max(ev[ev.len() - 1].abs());
    1.0 - slem
}

pub fn chain_diagnostics(chain: &ChainModel, cap: u64) -> Result<Diagnostics> {
    let p = transition_matrix(chain, cap)?;
    let (support, pi) = stationary(chain, &p)?;
    let index: BTreeMap<usize, usize> = support.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut stationary_residual = 0f64;
    let mut balance_residual = 0f64;
    let mut pi_p = vec![BigRational::zero(); support.len()];
    for (i, &s) in support.iter().enumerate() {
        for (t, v) in &p.rows[s] {
            if let Some(&j) = index.get(t) {
                pi_p[j] += &pi[i] * v;
                let flow = &pi[i] * v - &pi[j] * p.get(*t, s);
                balance_residual = balance_residual.max(to_f64(&flow.abs()));
            }
        }
    }
    for (a, b) in pi_p.iter().zip(&pi) {
        stationary_residual = stationary_residual.max(to_f64(&(a - b).abs()));
    }
    let weights: Vec<BigRational> = support.iter().map(|&s| chain.weight(s as u64)).collect::<Result<_>>()?;
    let total: BigRational = weights.iter().cloned().sum();
    let matches_weights = weights.iter().zip(&pi).all(|(w, q)| &(w / &total) == q);
    let gap = (support.len() <= SPECTRAL_CAP).then(|| spectral_gap(&p, &support, &pi));
    Ok(Diagnostics {
        states: support.iter().map(|&s| chain.median(s as u64).to_string()).collect(),
        pi: pi.iter().map(ToString::to_string).collect(),
        gap,
        balance_residual,
        stationary_residual,
        matches_weights,
        conductance: None,
    })
}

/// `F(S) / theta(S)` for the cut `S = {s : in_cut(s)}`, with `theta` the
/// stationary distribution and `F(S)` the stationary flow leaving `S`.
pub fn conductance_of_cut(chain: &ChainModel, in_cut: impl Fn(u64) -> bool, cap: u64) -> Result<Conductance> {
    let p = transition_matrix(chain, cap)?;
    let (support, pi) = stationary(chain, &p)?;
    let inside: Vec<bool> = (0..p.len()).map(|s| in_cut(s as u64)).collect();
    let mut capacity = BigRational::zero();
    let mut flow = BigRational::zero();
    for (i, &s) in support.iter().enumerate() {
        if !inside[s] {
            continue;
        }
        capacity += &pi[i];
        for (t, v) in &p.rows[s] {
            if !inside[*t] {
                flow += &pi[i] * v;
            }
        }
    }
    let half = BigRational::new(1.into(), 2.into());
    if !capacity.is_positive() || capacity > half {
        return Err(Error::Chain(format!("cut capacity {capacity} is outside (0, 1/2]")));
    }
    let value = &flow / &capacity;
    Ok(Conductance {
        capacity: capacity.to_string(),
        flow: flow.to_string(),
        value_f64: to_f64(&value),
        value: value.to_string(),
        bound: None,
        within_bound: None,
    })
}

/// `t` copies of the all-zero string and `t` of the all-one string, length `n`.
pub fn torpid_instance(n: usize, t: usize) -> Result<StringMultiset> {
    if n % 2 == 0 {
        return Err(Error::Chain(format!("torpid instance needs odd n, got {n}")));
    }
    if t == 0 {
        return Err(Error::Chain("torpid instance needs t >= 1".into()));
    }
    let layout = Layout::new(0, n);
    let zero = BitString::zeros(layout);
    let one = BitString::from_bits(layout, &vec![true; n])?;
    let mut members = vec![zero; t];
    members.extend(std::iter::repeat_n(one, t));
    StringMultiset::new(layout, members)
}

/// `sum_k C(n,k) (k! (n-k)!)^t`.
pub fn torpid_z(n: usize, t: usize) -> BigUint {
    (0..=n)
        .map(|k| binomial(BigUint::from(n), BigUint::from(k)) * (factorial(k) * factorial(n - k)).pow(t as u32))
        .sum()
}

/// `C(n, floor(n/2))^{-(t-1)}`.
pub fn torpid_bound(n: usize, t: usize) -> BigRational {
    let c = binomial(BigUint::from(n), BigUint::from(n / 2));
    BigRational::new(1.into(), c.pow(t.saturating_sub(1) as u32).into())
}

/// Conductance of the cut "at most `floor(n/2)` ones" under the factorial
/// Metropolis chain, with the torpid-mixing bound.
pub fn torpid_half_cut(n: usize, t: usize, cap: u64) -> Result<Conductance> {
    let chain = ChainModel::metropolis(torpid_instance(n, t)?, WeightFunction::Factorial, 0)?;
    let mut c = conductance_of_cut(&chain, |s| s.count_ones() as usize <= n / 2, cap)?;
    let bound = torpid_bound(n, t);
    let value: BigRational = {
        let (a, b) = c.value.split_once('/').unwrap_or((&c.value, "1"));
        BigRational::new(a.parse().unwrap(), b.parse().unwrap())
    };
    c.within_bound = Some(value <= bound);
    c.bound = Some(bound.to_string());
    Ok(c)
}
