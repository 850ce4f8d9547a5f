//! Exact information measures on small discrete worlds: the data-processing
//! inequality for coarsened attributions, Bayes accuracy as the retraining
//! surrogate, and exhaustive search for coarsenings that lower I(X̃′; Y).
//!
//! All logarithms are base 2.

mod search;
mod text;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

pub use search::{conjecture_search, SearchOutcome, Witness, DEFAULT_BUDGET};
pub use text::{format_world, parse_world};

use crate::error::{Error, Result};
use crate::seed;

/// Tolerance for a probability table to count as normalized.
pub const NORM_TOL: f64 = 1e-9;
/// Slack allowed on the data-processing inequality.
pub const DPI_TOL: f64 = 1e-12;
/// Largest pixel count whose ranking alphabet (n!) is enumerated.
pub const MAX_PIXELS: usize = 6;

/// Finite world: pixels take values `0..values`; attributions are rankings
/// (most important pixel first) chosen per (explainer, x).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteWorld {
    pub pixels: usize,
    pub values: usize,
    pub classes: usize,
    pub drop: usize,
    pub explainers: Vec<(String, f64)>,
    /// Distinct pixel vectors with their class distribution p(x, y).
    pub xs: Vec<Vec<usize>>,
    pub p_xy: Vec<Vec<f64>>,
    /// `rankings[e][i]` ranks the pixels of `xs[i]` for explainer `e`.
    pub rankings: Vec<Vec<Vec<usize>>>,
}

impl DiscreteWorld {
    pub fn validate(&self) -> Result<()> {
        if self.pixels == 0 || self.pixels > MAX_PIXELS {
            return Err(Error::invalid(format!("pixels must lie in 1..={MAX_PIXELS}, got {}", self.pixels)));
        }
        if self.values < 2 || self.classes < 1 {
            return Err(Error::invalid("need at least two pixel values and one class"));
        }
        if self.drop > self.pixels {
            return Err(Error::invalid(format!("drop {} exceeds {} pixels", self.drop, self.pixels)));
        }
        if self.explainers.is_empty() {
            return Err(Error::invalid("at least one explainer is required"));
        }
        check_distribution(self.explainers.iter().map(|(_, p)| *p), "p(e)")?;
        check_distribution(self.p_xy.iter().flatten().copied(), "p(x, y)")?;
        if self.p_xy.len() != self.xs.len() || self.p_xy.iter().any(|r| r.len() != self.classes) {
            return Err(Error::invalid("p(x, y) must have one row of class probabilities per x"));
        }
        for (i, x) in self.xs.iter().enumerate() {
            if x.len() != self.pixels || x.iter().any(|&v| v >= self.values) {
                return Err(Error::invalid(format!("x #{i} {x:?} is not a vector of {} values < {}", self.pixels, self.values)));
            }
            if self.xs[..i].contains(x) {
                return Err(Error::invalid(format!("x {x:?} listed twice")));
            }
        }
        if self.rankings.len() != self.explainers.len() {
            return Err(Error::invalid("one ranking table per explainer is required"));
        }
        for (e, table) in self.rankings.iter().enumerate() {
            if table.len() != self.xs.len() {
                return Err(Error::invalid(format!("explainer {} lacks rankings for some x", self.explainers[e].0)));
            }
            for r in table {
                if !is_permutation(r, self.pixels) {
                    return Err(Error::invalid(format!("ranking {r:?} is not a permutation of 0..{}", self.pixels)));
                }
            }
        }
        Ok(())
    }

    /// Number of distinct rankings, n!.
    pub fn ranking_count(&self) -> usize {
        (1..=self.pixels).product()
    }

    fn atoms(&self, k: &Coarsening) -> Result<Vec<Atom>> {
        self.validate()?;
        if k.len() != self.ranking_count() {
            return Err(Error::invalid(format!("coarsening covers {} rankings, world has {}", k.len(), self.ranking_count())));
        }
        let perms = permutations(self.pixels);
        let mut out = Vec::new();
        for (e, (_, pe)) in self.explainers.iter().enumerate() {
            for (i, x) in self.xs.iter().enumerate() {
                let a = permutation_index(&self.rankings[e][i]);
                let at = k.map[a];
                let x_code = encode(x, self.values + 1);
                let xp = encode(&drop_top(x, &perms[a], self.drop, self.values), self.values + 1);
                let xtp = encode(&drop_top(x, &perms[at], self.drop, self.values), self.values + 1);
                for (y, &pxy) in self.p_xy[i].iter().enumerate() {
                    let p = pe * pxy;
                    if p > 0.0 {
                        out.push(Atom { p, codes: [e as u64, x_code, y as u64, a as u64, at as u64, xp, xtp] });
                    }
                }
            }
        }
        Ok(out)
    }
}

fn check_distribution(ps: impl Iterator<Item = f64>, what: &str) -> Result<()> {
    let mut total = 0.0;
    for p in ps {
        if !(p >= 0.0 && p.is_finite()) {
            return Err(Error::invalid(format!("{what} has an invalid entry {p}")));
        }
        total += p;
    }
    if (total - 1.0).abs() > NORM_TOL {
        return Err(Error::invalid(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

fn is_permutation(r: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    r.len() == n && r.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
}

/// All permutations of 0..n in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // Next lexicographic permutation.
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else { break };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).expect("successor exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

/// Lexicographic index of a permutation (Lehmer code).
pub fn permutation_index(perm: &[usize]) -> usize {
    let n = perm.len();
    let mut idx = 0;
    for i in 0..n {
        let smaller = perm[i + 1..].iter().filter(|&&v| v < perm[i]).count();
        idx = idx * (n - i) + smaller;
    }
    idx
}

/// Sets the first `t` ranked pixels to the sentinel symbol `values`.
fn drop_top(x: &[usize], ranking: &[usize], t: usize, values: usize) -> Vec<usize> {
    let mut out = x.to_vec();
    for &p in &ranking[..t] {
        out[p] = values;
    }
    out
}

fn encode(v: &[usize], radix: usize) -> u64 {
    v.iter().fold(0u64, |acc, &d| acc * radix as u64 + d as u64)
}

/// Deterministic map on the ranking alphabet, indexed by lexicographic rank.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Coarsening {
    pub map: Vec<usize>,
}

impl Coarsening {
    pub fn identity(pixels: usize) -> Self {
        Coarsening { map: (0..(1..=pixels).product()).collect() }
    }

    pub fn constant(pixels: usize, target: &[usize]) -> Result<Self> {
        if !is_permutation(target, pixels) {
            return Err(Error::invalid(format!("{target:?} is not a ranking of {pixels} pixels")));
        }
        let n: usize = (1..=pixels).product();
        Ok(Coarsening { map: vec![permutation_index(target); n] })
    }

    pub fn from_map(pixels: usize, map: Vec<usize>) -> Result<Self> {
        let n: usize = (1..=pixels).product();
        if map.len() != n || map.iter().any(|&m| m >= n) {
            return Err(Error::invalid(format!("a coarsening of {pixels} pixels maps {n} rankings into themselves")));
        }
        Ok(Coarsening { map })
    }

    /// Uniformly random total map, possibly many-to-one.
    pub fn random(pixels: usize, seed_value: u64) -> Self {
        let n: usize = (1..=pixels).product();
        let mut rng = seed::rng(seed_value, &["coarsening"]);
        Coarsening { map: (0..n).map(|_| rng.random_range(0..n)).collect() }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn apply(&self, ranking: &[usize]) -> Vec<usize> {
        permutations(ranking.len())[self.map[permutation_index(ranking)]].clone()
    }
}

/// Random world for property sweeps: 2–4 pixels, 2–3 values, 2–3 classes and
/// explainers, random sparse joint and random rankings.
pub fn random_world(seed_value: u64) -> DiscreteWorld {
    let mut rng = seed::rng(seed_value, &["world"]);
    let pixels: usize = rng.random_range(2..=4);
    let values: usize = rng.random_range(2..=3);
    let classes: usize = rng.random_range(2..=3);
    let n_expl = rng.random_range(2..=3);
    let drop = rng.random_range(0..=pixels);
    let all: Vec<Vec<usize>> = (0..values.pow(pixels as u32))
        .map(|mut c| {
            let mut x = vec![0; pixels];
            for slot in x.iter_mut().rev() {
                *slot = c % values;
                c /= values;
            }
            x
        })
        .collect();
    let xs: Vec<Vec<usize>> = all.into_iter().filter(|_| rng.random_bool(0.6)).collect();
    let xs = if xs.is_empty() { vec![vec![0; pixels]] } else { xs };
    let mut weights: Vec<Vec<f64>> =
        xs.iter().map(|_| (0..classes).map(|_| if rng.random_bool(0.7) { rng.random::<f64>() } else { 0.0 }).collect()).collect();
    weights[0][0] += 0.01;
    let total: f64 = weights.iter().flatten().sum();
    let p_xy = weights.into_iter().map(|r| r.into_iter().map(|v| v / total).collect()).collect();
    let mut pe: Vec<f64> = (0..n_expl).map(|_| rng.random::<f64>() + 0.05).collect();
    let pe_total: f64 = pe.iter().sum();
    pe.iter_mut().for_each(|p| *p /= pe_total);
    let rankings = (0..n_expl)
        .map(|_| {
            xs.iter()
                .map(|_| {
                    let mut r: Vec<usize> = (0..pixels).collect();
                    r.shuffle(&mut rng);
                    r
                })
                .collect()
        })
        .collect();
    DiscreteWorld {
        pixels,
        values,
        classes,
        drop,
        explainers: pe.into_iter().enumerate().map(|(i, p)| (format!("e{i}"), p)).collect(),
        xs,
        p_xy,
        rankings,
    }
}

/// The shipped world: X = (y, y, n) with uniform class bit y and noise bit n,
/// drop t = 2. Both explainers rank the noise pixel first, so X′ always
/// keeps one copy of y; a coarsening that ranks the redundant pair {0, 1}
/// first erases the class entirely.
pub fn default_world() -> DiscreteWorld {
    let mut xs = Vec::new();
    let mut p_xy = Vec::new();
    for y in 0..2 {
        for n in 0..2 {
            xs.push(vec![y, y, n]);
            let mut row = vec![0.0; 2];
            row[y] = 0.25;
            p_xy.push(row);
        }
    }
    DiscreteWorld {
        pixels: 3,
        values: 2,
        classes: 2,
        drop: 2,
        explainers: vec![("e0".into(), 0.5), ("e1".into(), 0.5)],
        rankings: vec![vec![vec![2, 0, 1]; 4], vec![vec![2, 1, 0]; 4]],
        xs,
        p_xy,
    }
}

/// Random variables of the causal graph E → A → Ã, (X, A) → X′, (X, Ã) → X̃′.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    E,
    X,
    Y,
    A,
    ACoarse,
    XPrime,
    XCoarsePrime,
}

impl Var {
    fn slot(self) -> usize {
        self as usize
    }
}

struct Atom {
    p: f64,
    codes: [u64; 7],
}

fn key(atom: &Atom, vars: &[Var]) -> Vec<u64> {
    vars.iter().map(|v| atom.codes[v.slot()]).collect()
}

/// Dense table from a sparse joint over (U, V); rows and columns in code order.
fn dense(joint: &BTreeMap<(Vec<u64>, Vec<u64>), f64>) -> Vec<Vec<f64>> {
    let rows: Vec<&Vec<u64>> = joint.keys().map(|(u, _)| u).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let cols: Vec<&Vec<u64>> = joint.keys().map(|(_, v)| v).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let mut t = vec![vec![0.0; cols.len()]; rows.len()];
    for ((u, v), p) in joint {
        let r = rows.binary_search(&u).expect("row");
        let c = cols.binary_search(&v).expect("col");
        t[r][c] += p;
    }
    t
}

fn mi_unchecked(table: &[Vec<f64>]) -> f64 {
    let total: f64 = table.iter().flatten().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let pu: Vec<f64> = table.iter().map(|r| r.iter().sum::<f64>() / total).collect();
    let cols = table.first().map_or(0, Vec::len);
    let pv: Vec<f64> = (0..cols).map(|c| table.iter().map(|r| r[c]).sum::<f64>() / total).collect();
    let mut mi = 0.0;
    for (r, row) in table.iter().enumerate() {
        for (c, &p) in row.iter().enumerate() {
            let p = p / total;
            if p > 0.0 {
                mi += p * (p / (pu[r] * pv[c])).log2();
            }
        }
    }
    mi.max(0.0)
}

fn check_table(table: &[Vec<f64>]) -> Result<()> {
    let width = table.first().map_or(0, Vec::len);
    if table.is_empty() || width == 0 || table.iter().any(|r| r.len() != width) {
        return Err(Error::invalid("joint table must be a non-empty rectangle"));
    }
    check_distribution(table.iter().flatten().copied(), "joint table")
}

/// I(U; V) in bits of a joint table p(u, v) (rows u, columns v).
pub fn mutual_information(table: &[Vec<f64>]) -> Result<f64> {
    check_table(table)?;
    Ok(mi_unchecked(table))
}

/// Entropy in bits of a distribution.
pub fn entropy(p: &[f64]) -> Result<f64> {
    check_distribution(p.iter().copied(), "distribution")?;
    Ok(-p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.log2()).sum::<f64>())
}

/// Σ_u max_v p(u, v): the accuracy of the Bayes classifier predicting v from u.
pub fn bayes_accuracy(table: &[Vec<f64>]) -> Result<f64> {
    check_table(table)?;
    Ok(table.iter().map(|r| r.iter().copied().fold(0.0, f64::max)).sum())
}

/// I(U; V | W) = Σ_w p(w) I(U; V | W = w), exactly, for the world under `k`.
/// An empty `w` gives the unconditional I(U; V).
pub fn conditional_mi(world: &DiscreteWorld, k: &Coarsening, u: &[Var], v: &[Var], w: &[Var]) -> Result<f64> {
    let atoms = world.atoms(k)?;
    Ok(conditional_mi_atoms(&atoms, u, v, w).into_values().map(|(pw, mi)| pw * mi).sum())
}

/// Per-value terms (p(w), I(U; V | W = w)) keyed by the code of w.
fn conditional_mi_atoms(atoms: &[Atom], u: &[Var], v: &[Var], w: &[Var]) -> BTreeMap<Vec<u64>, (f64, f64)> {
    let mut groups: BTreeMap<Vec<u64>, BTreeMap<(Vec<u64>, Vec<u64>), f64>> = BTreeMap::new();
    for a in atoms {
        *groups.entry(key(a, w)).or_default().entry((key(a, u), key(a, v))).or_default() += a.p;
    }
    groups
        .into_iter()
        .map(|(wk, joint)| {
            let pw: f64 = joint.values().sum();
            (wk, (pw, mi_unchecked(&dense(&joint))))
        })
        .collect()
}

/// Joint table over (X′, Y) (identity k) or (X̃′, Y) after coarsening with `k`,
/// dropping the top `t` pixels of each ranking. Rows are the distinct modified
/// images in code order, labelled in `rows` (sentinel = `values`).
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedJoint {
    pub rows: Vec<Vec<usize>>,
    pub table: Vec<Vec<f64>>,
}

pub fn modified_variable(world: &DiscreteWorld, k: &Coarsening, t: usize) -> Result<ModifiedJoint> {
    if t > world.pixels {
        return Err(Error::invalid(format!("cannot drop {t} of {} pixels", world.pixels)));
    }
    let w = DiscreteWorld { drop: t, ..world.clone() };
    let atoms = w.atoms(k)?;
    let mut joint: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for a in &atoms {
        joint.entry(a.codes[Var::XCoarsePrime.slot()]).or_insert_with(|| vec![0.0; w.classes])[a.codes[Var::Y.slot()] as usize] +=
            a.p;
    }
    let radix = (w.values + 1) as u64;
    let rows = joint
        .keys()
        .map(|&code| {
            let mut v = vec![0; w.pixels];
            let mut c = code;
            for slot in v.iter_mut().rev() {
                *slot = (c % radix) as usize;
                c /= radix;
            }
            v
        })
        .collect();
    Ok(ModifiedJoint { rows, table: joint.into_values().collect() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpiReport {
    /// I(E; A | X).
    pub lhs: f64,
    /// I(E; Ã | X).
    pub rhs: f64,
    /// Largest per-x excess I(E; Ã | X=x) − I(E; A | X=x).
    pub worst_pointwise: f64,
    pub holds: bool,
}

/// Checks I(E; Ã | X) ≤ I(E; A | X), overall and for every x separately.
pub fn dpi_check(world: &DiscreteWorld, k: &Coarsening) -> Result<DpiReport> {
    let atoms = world.atoms(k)?;
    let fine = conditional_mi_atoms(&atoms, &[Var::E], &[Var::A], &[Var::X]);
    let coarse = conditional_mi_atoms(&atoms, &[Var::E], &[Var::ACoarse], &[Var::X]);
    let lhs = fine.values().map(|(p, mi)| p * mi).sum::<f64>();
    let rhs = coarse.values().map(|(p, mi)| p * mi).sum::<f64>();
    let worst_pointwise =
        fine.iter().map(|(x, (_, f))| coarse[x].1 - f).fold(f64::NEG_INFINITY, f64::max);
    Ok(DpiReport { lhs, rhs, worst_pointwise, holds: rhs <= lhs + DPI_TOL && worst_pointwise <= DPI_TOL })
}

/// I(X′; Y) and I(X̃′; Y) for the world's drop count.
pub fn modified_mi(world: &DiscreteWorld, k: &Coarsening) -> Result<(f64, f64)> {
    let atoms = world.atoms(k)?;
    let plain = conditional_mi_atoms(&atoms, &[Var::XPrime], &[Var::Y], &[]).into_values().map(|(p, m)| p * m).sum();
    let coarse = conditional_mi_atoms(&atoms, &[Var::XCoarsePrime], &[Var::Y], &[]).into_values().map(|(p, m)| p * m).sum();
    Ok((plain, coarse))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-12;

    #[test]
    fn mi_hand_cases() {
        assert!(mutual_information(&[vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap().abs() < EPS);
        assert!((mutual_information(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap() - 1.0).abs() < EPS);
        let p = [vec![0.4, 0.1], vec![0.1, 0.4]];
        let oracle = 2.0 * 0.4 * (0.4f64 / 0.25).log2() + 2.0 * 0.1 * (0.1f64 / 0.25).log2();
        let mi = mutual_information(&p).unwrap();
        assert!((mi - oracle).abs() < EPS);
        assert!((mi - 0.2781).abs() < 1e-4);
    }

    #[test]
    fn mi_rejects_bad_tables() {
        assert!(mutual_information(&[vec![0.5, 0.6]]).is_err());
        assert!(mutual_information(&[vec![1.5, -0.5]]).is_err());
        assert!(mutual_information(&[vec![0.5], vec![0.25, 0.25]]).is_err());
    }

    #[test]
    fn bayes_accuracy_cases() {
        assert!((bayes_accuracy(&[vec![1.0 / 6.0; 3], vec![1.0 / 6.0; 3]]).unwrap() - 1.0 / 3.0).abs() < EPS);
        assert!((bayes_accuracy(&[vec![0.3, 0.0], vec![0.0, 0.7]]).unwrap() - 1.0).abs() < EPS);
        assert!((bayes_accuracy(&[vec![0.2, 0.1], vec![0.3, 0.4]]).unwrap() - 0.6).abs() < EPS);
    }

    #[test]
    fn permutation_indexing_round_trips() {
        for n in 1..=5 {
            for (i, p) in permutations(n).iter().enumerate() {
                assert_eq!(permutation_index(p), i);
            }
        }
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(3)[5], vec![2, 1, 0]);
    }

    fn single_explainer(world: &DiscreteWorld) -> DiscreteWorld {
        DiscreteWorld { explainers: vec![("only".into(), 1.0)], rankings: vec![world.rankings[0].clone()], ..world.clone() }
    }

    #[test]
    fn conditional_mi_cases() {
        let w = default_world();
        let id = Coarsening::identity(3);
        // One explainer: E is constant.
        let single = single_explainer(&w);
        assert!(conditional_mi(&single, &id, &[Var::E], &[Var::A], &[Var::X]).unwrap().abs() < EPS);
        // Constant k: Ã carries nothing about E.
        let c = Coarsening::constant(3, &[0, 1, 2]).unwrap();
        assert!(conditional_mi(&w, &c, &[Var::E], &[Var::ACoarse], &[Var::X]).unwrap().abs() < EPS);
        // Distinct rankings per x, identity k: both sides equal H(E) = 1 bit.
        let lhs = conditional_mi(&w, &id, &[Var::E], &[Var::A], &[Var::X]).unwrap();
        let rhs = conditional_mi(&w, &id, &[Var::E], &[Var::ACoarse], &[Var::X]).unwrap();
        assert!((lhs - 1.0).abs() < EPS && (rhs - 1.0).abs() < EPS);
    }

    #[test]
    fn modified_variable_limits() {
        let w = default_world();
        let id = Coarsening::identity(3);
        let xy: Vec<Vec<f64>> = w.p_xy.clone();
        let none = modified_variable(&w, &id, 0).unwrap();
        assert!((mutual_information(&none.table).unwrap() - mutual_information(&xy).unwrap()).abs() < EPS);
        let all = modified_variable(&w, &id, 3).unwrap();
        assert_eq!(all.rows, vec![vec![2, 2, 2]]);
        assert!(mutual_information(&all.table).unwrap().abs() < EPS);
        assert!(modified_variable(&w, &id, 4).is_err());
    }

    #[test]
    fn two_pixel_hand_table() {
        // x ∈ {(0,1) with y=0, (1,1) with y=1}; ranking puts pixel 1 first, t=1.
        let w = DiscreteWorld {
            pixels: 2,
            values: 2,
            classes: 2,
            drop: 1,
            explainers: vec![("e".into(), 1.0)],
            xs: vec![vec![0, 1], vec![1, 1]],
            p_xy: vec![vec![0.3, 0.1], vec![0.0, 0.6]],
            rankings: vec![vec![vec![1, 0], vec![0, 1]]],
        };
        let j = modified_variable(&w, &Coarsening::identity(2), 1).unwrap();
        // (0,1) → (0,s); (1,1) → (s,1).
        assert_eq!(j.rows, vec![vec![0, 2], vec![2, 1]]);
        assert_eq!(j.table, vec![vec![0.3, 0.1], vec![0.0, 0.6]]);
        assert!((bayes_accuracy(&j.table).unwrap() - 0.9).abs() < EPS);
    }

    #[test]
    fn identity_k_reproduces_plain_path() {
        for s in 0..20 {
            let w = random_world(s);
            let (plain, coarse) = modified_mi(&w, &Coarsening::identity(w.pixels)).unwrap();
            assert_eq!(plain, coarse);
        }
    }

    #[test]
    fn dpi_identity_and_constant() {
        let w = default_world();
        let r = dpi_check(&w, &Coarsening::identity(3)).unwrap();
        assert!(r.holds && (r.lhs - r.rhs).abs() < EPS);
        let r = dpi_check(&w, &Coarsening::constant(3, &[1, 0, 2]).unwrap()).unwrap();
        assert!(r.holds && r.rhs.abs() < EPS);
    }

    #[test]
    fn dpi_and_mi_bounds_hold_on_random_worlds() {
        for s in 0..200 {
            let w = random_world(s);
            w.validate().unwrap();
            let k = Coarsening::random(w.pixels, s + 1000);
            let r = dpi_check(&w, &k).unwrap();
            assert!(r.holds, "seed {s}: {r:?}");
            let j = modified_variable(&w, &k, w.drop).unwrap();
            let mi = mutual_information(&j.table).unwrap();
            let py: Vec<f64> = (0..w.classes).map(|c| j.table.iter().map(|r| r[c]).sum()).collect();
            assert!(mi >= 0.0 && mi <= entropy(&py).unwrap() + 1e-12);
        }
    }

    #[test]
    fn invalid_worlds_rejected() {
        let mut w = default_world();
        w.p_xy[0][0] = 0.5;
        assert!(w.validate().is_err());
        let mut w = default_world();
        w.rankings[0][0] = vec![0, 0, 1];
        assert!(w.validate().is_err());
        let mut w = default_world();
        w.drop = 4;
        assert!(w.validate().is_err());
    }
}
