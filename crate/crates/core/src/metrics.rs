//! Translation-invariant metrics with error exponents, and the three
//! uncertainty functionals built from them: deviation from a point, spread
//! (smallest deviation over all centers), and the coupling-based transport
//! distance between probability distributions.
//!
//! A [`Distribution`] stores a density with respect to the Haar weights of
//! its group side, so `sum(weights * haar) = 1`.  Metric evaluation happens
//! on the numeric point labels; each metric kind declares which axis kinds it
//! applies to and reports [`Error::MetricDomain`] elsewhere.
//!
//! For integer-valued windows of non-compact groups (truncated integers, the
//! dual of a discretized circle, both sides of a discretized line) distances
//! are computed on the unwrapped labels: the wrap of the stored window is a
//! discretization artifact, not part of the modeled group.

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};
use crate::group::{Axis, AxisKind, Group, Side};

/// Mass below which a point is not considered part of a support.
const SUPPORT_EPS: f64 = 1e-15;

/// Error exponent `alpha` in `[1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn finite(a: f64) -> Result<Exponent> {
        if a < 1.0 || !a.is_finite() {
            return Err(Error::Invalid(format!("exponent {a} must be >= 1")));
        }
        Ok(Exponent::Finite(a))
    }
}

/// The metric kinds understood by every functional in this module.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// `1 - delta(x, y)` on any point set.
    Discrete,
    /// `|x - y|` on one integer- or real-valued axis.
    Absolute,
    /// `min(|x-y|, d - |x-y|)` on one cyclic axis.
    CyclicAbsolute,
    /// Angle difference reduced mod `2 pi` to `[0, pi]`, on one angle axis.
    Arc,
    /// `2 |sin((x - y)/2)|` on one angle axis.
    Chordal,
    /// Fraction of differing sites over a product of cyclic axes.
    HammingPerSite,
    /// `sqrt(sum_i (x_i - y_i)^2)` over integer- or real-valued axes.
    Euclidean,
}

/// A metric together with its error exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSpec {
    pub metric: Metric,
    pub exponent: Exponent,
}

impl MetricSpec {
    pub fn new(metric: Metric, exponent: Exponent) -> MetricSpec {
        MetricSpec { metric, exponent }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ValueKind {
    CyclicInt { modulus: usize },
    Integer,
    Angle,
    Real,
}

fn value_kind(axis: &Axis, side: Side) -> ValueKind {
    match (&axis.kind, side) {
        (AxisKind::Cyclic { order }, _) => ValueKind::CyclicInt { modulus: *order },
        (AxisKind::TruncatedIntegers { .. }, Side::Position) => ValueKind::Integer,
        (AxisKind::TruncatedIntegers { .. }, Side::Momentum) => ValueKind::Angle,
        (AxisKind::DiscretizedCircle { .. }, Side::Position) => ValueKind::Angle,
        (AxisKind::DiscretizedCircle { .. }, Side::Momentum) => ValueKind::Integer,
        (AxisKind::DiscretizedLine { .. }, _) => ValueKind::Real,
    }
}

/// Check that `metric` is defined on `(group, side)`.
pub fn validate_metric(metric: Metric, group: &Group, side: Side) -> Result<()> {
    let kinds: Vec<ValueKind> = group.axes().iter().map(|a| value_kind(a, side)).collect();
    let scalar = |name| {
        if kinds.len() != 1 {
            return Err(Error::MetricDomain { metric: name });
        }
        Ok(kinds[0])
    };
    match metric {
        Metric::Discrete => Ok(()),
        Metric::Absolute => match scalar("absolute")? {
            ValueKind::Integer | ValueKind::Real => Ok(()),
            _ => Err(Error::MetricDomain { metric: "absolute" }),
        },
        Metric::CyclicAbsolute => match scalar("cyclic-absolute")? {
            ValueKind::CyclicInt { .. } => Ok(()),
            _ => Err(Error::MetricDomain {
                metric: "cyclic-absolute",
            }),
        },
        Metric::Arc => match scalar("arc")? {
            ValueKind::Angle => Ok(()),
            _ => Err(Error::MetricDomain { metric: "arc" }),
        },
        Metric::Chordal => match scalar("chordal")? {
            ValueKind::Angle => Ok(()),
            _ => Err(Error::MetricDomain { metric: "chordal" }),
        },
        Metric::HammingPerSite => {
            if kinds
                .iter()
                .all(|k| matches!(k, ValueKind::CyclicInt { .. }))
            {
                Ok(())
            } else {
                Err(Error::MetricDomain { metric: "hamming" })
            }
        }
        Metric::Euclidean => {
            if kinds
                .iter()
                .all(|k| matches!(k, ValueKind::Integer | ValueKind::Real))
            {
                Ok(())
            } else {
                Err(Error::MetricDomain { metric: "euclidean" })
            }
        }
    }
}

fn arc_delta(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

/// Distance between the point with per-axis values `vals` and an arbitrary
/// center given by per-axis values (used by the continuum spread refinement).
fn distance_values(metric: Metric, vals: &[f64], center: &[f64]) -> f64 {
    match metric {
        Metric::Absolute => (vals[0] - center[0]).abs(),
        Metric::Arc => arc_delta(vals[0], center[0]),
        Metric::Chordal => 2.0 * ((vals[0] - center[0]) / 2.0).sin().abs(),
        Metric::Euclidean => vals
            .iter()
            .zip(center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt(),
        _ => panic!("value-based evaluation only for continuum-capable metrics"),
    }
}

/// Distance between two stored points of `(group, side)`.
///
/// The metric must already be valid on that domain; see [`validate_metric`].
pub fn point_distance(group: &Group, side: Side, metric: Metric, i: usize, j: usize) -> f64 {
    match metric {
        Metric::Discrete => {
            if i == j {
                0.0
            } else {
                1.0
            }
        }
        Metric::CyclicAbsolute => {
            let d = group.axes()[0].len(side);
            let diff = i.abs_diff(j);
            diff.min(d - diff) as f64
        }
        Metric::HammingPerSite => {
            let ti = group.index_to_tuple(side, i);
            let tj = group.index_to_tuple(side, j);
            let diff = ti.iter().zip(&tj).filter(|(a, b)| a != b).count();
            diff as f64 / ti.len() as f64
        }
        _ => distance_values(
            metric,
            &group.values(side, i),
            &group.values(side, j),
        ),
    }
}

/// A probability distribution on one side of a phase space, stored as a
/// density with respect to the Haar weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    group: Group,
    side: Side,
    weights: Vec<f64>,
}

impl Distribution {
    /// Build from Haar densities; requires `sum(weights * haar) = 1` within
    /// `1e-9` and nonnegative entries.
    pub fn from_weights(group: Group, side: Side, weights: Vec<f64>) -> Result<Distribution> {
        if weights.len() != group.len(side) {
            return Err(Error::GroupMismatch);
        }
        if weights.iter().any(|w| *w < -1e-12 || !w.is_finite()) {
            return Err(Error::InvalidDistribution(
                "negative or non-finite weight".into(),
            ));
        }
        let haar = group.haar_weight(side);
        let total: f64 = weights.iter().sum::<f64>() * haar;
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "total mass {total} is not 1"
            )));
        }
        let weights = weights.iter().map(|w| w.max(0.0)).collect();
        Ok(Distribution {
            group,
            side,
            weights,
        })
    }

    /// Build from point probabilities (masses).
    pub fn from_probabilities(group: Group, side: Side, probs: &[f64]) -> Result<Distribution> {
        let haar = group.haar_weight(side);
        Self::from_weights(group, side, probs.iter().map(|p| p / haar).collect())
    }

    /// Internal constructor for results of mass-losing operations on
    /// truncated models.
    fn from_masses_unchecked(group: Group, side: Side, masses: Vec<f64>) -> Distribution {
        let haar = group.haar_weight(side);
        Distribution {
            group,
            side,
            weights: masses.iter().map(|m| m / haar).collect(),
        }
    }

    pub fn point(group: Group, side: Side, x: usize) -> Distribution {
        let mut masses = vec![0.0; group.len(side)];
        masses[x] = 1.0;
        Self::from_masses_unchecked(group, side, masses)
    }

    pub fn uniform(group: Group, side: Side) -> Distribution {
        let n = group.len(side);
        Self::from_masses_unchecked(group, side, vec![1.0 / n as f64; n])
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn side(&self) -> Side {
        self.side
    }

    /// Haar densities.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Point probabilities (`weight * haar`).
    pub fn masses(&self) -> Vec<f64> {
        let haar = self.group.haar_weight(self.side);
        self.weights.iter().map(|w| w * haar).collect()
    }

    pub fn support(&self) -> Vec<usize> {
        let haar = self.group.haar_weight(self.side);
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w * haar > SUPPORT_EPS)
            .map(|(i, _)| i)
            .collect()
    }
}

/// `(sum_y mu(y) d(x, y)^alpha)^(1/alpha)`; the largest supported distance
/// for `alpha = inf`.
pub fn deviation(mu: &Distribution, x: usize, m: &MetricSpec) -> Result<f64> {
    validate_metric(m.metric, mu.group(), mu.side())?;
    let masses = mu.masses();
    Ok(deviation_masses(&masses, |y| {
        point_distance(mu.group(), mu.side(), m.metric, x, y)
    }, m.exponent))
}

/// Deviation from an arbitrary (not necessarily stored) center given by
/// per-axis values; only for metrics evaluated on numeric labels.
pub fn deviation_from_values(mu: &Distribution, center: &[f64], m: &MetricSpec) -> Result<f64> {
    validate_metric(m.metric, mu.group(), mu.side())?;
    match m.metric {
        Metric::Absolute | Metric::Arc | Metric::Chordal | Metric::Euclidean => {}
        _ => {
            return Err(Error::MetricDomain {
                metric: "value-centered deviation",
            })
        }
    }
    let masses = mu.masses();
    Ok(deviation_masses(&masses, |y| {
        distance_values(m.metric, &mu.group().values(mu.side(), y), center)
    }, m.exponent))
}

fn deviation_masses(
    masses: &[f64],
    dist: impl Fn(usize) -> f64,
    exponent: Exponent,
) -> f64 {
    match exponent {
        Exponent::Infinity => masses
            .iter()
            .enumerate()
            .filter(|(_, m)| **m > SUPPORT_EPS)
            .map(|(y, _)| dist(y))
            .fold(0.0, f64::max),
        Exponent::Finite(a) => {
            let total: f64 = masses
                .iter()
                .enumerate()
                .map(|(y, m)| m * dist(y).powf(a))
                .sum();
            total.powf(1.0 / a)
        }
    }
}

/// Result of a spread computation: the smallest deviation over centers, the
/// best stored point, and the refined center values (equal to the stored
/// point's values on fully discrete groups).
#[derive(Debug, Clone, PartialEq)]
pub struct Spread {
    pub value: f64,
    pub minimizer: usize,
    pub center: Vec<f64>,
}

/// The smallest deviation of `mu` from any group point.
///
/// Centers run over stored points; on continuum axes (angles, line
/// coordinates) a golden-section refinement then searches between grid
/// points, because those groups have points off the stored grid.
pub fn spread(mu: &Distribution, m: &MetricSpec) -> Result<Spread> {
    validate_metric(m.metric, mu.group(), mu.side())?;
    let n = mu.group().len(mu.side());
    let mut best = (f64::INFINITY, 0usize);
    for x in 0..n {
        let v = deviation(mu, x, m)?;
        if v < best.0 {
            best = (v, x);
        }
    }
    let refinable = matches!(
        m.metric,
        Metric::Absolute | Metric::Arc | Metric::Chordal | Metric::Euclidean
    );
    let mut center = mu.group().values(mu.side(), best.1);
    let mut value = best.0;
    if refinable {
        let kinds: Vec<ValueKind> = mu
            .group()
            .axes()
            .iter()
            .map(|a| value_kind(a, mu.side()))
            .collect();
        let continuum: Vec<usize> = kinds
            .iter()
            .enumerate()
            .filter(|(_, k)| matches!(k, ValueKind::Angle | ValueKind::Real))
            .map(|(i, _)| i)
            .collect();
        if !continuum.is_empty() {
            // per-axis grid spacing brackets the refinement window
            let spacing: Vec<f64> = mu
                .group()
                .axes()
                .iter()
                .map(|a| match (&a.kind, mu.side()) {
                    (AxisKind::DiscretizedCircle { len }, Side::Position) => {
                        std::f64::consts::TAU / *len as f64
                    }
                    (AxisKind::TruncatedIntegers { dual_len, .. }, Side::Momentum) => {
                        std::f64::consts::TAU / *dual_len as f64
                    }
                    (AxisKind::DiscretizedLine { len, half_width }, Side::Position) => {
                        2.0 * half_width / *len as f64
                    }
                    (AxisKind::DiscretizedLine { half_width, .. }, Side::Momentum) => {
                        std::f64::consts::PI / half_width
                    }
                    _ => 0.0,
                })
                .collect();
            for _ in 0..4 {
                for &ax in &continuum {
                    let (c, v) = golden_min(center[ax] - spacing[ax], center[ax] + spacing[ax], |t| {
                        let mut trial = center.clone();
                        trial[ax] = t;
                        deviation_from_values(mu, &trial, m).expect("validated above")
                    });
                    center[ax] = c;
                    value = v;
                }
            }
            value = value.min(best.0);
        }
    }
    Ok(Spread {
        value,
        minimizer: best.1,
        center,
    })
}

fn golden_min(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..90 {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = f(d);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// The transport (coupling) distance between two distributions on the same
/// group side: the infimum over couplings of the alpha-mean of the distance,
/// or of its essential supremum for `alpha = inf`.
pub fn transport_distance(nu: &Distribution, mu: &Distribution, m: &MetricSpec) -> Result<f64> {
    if nu.group() != mu.group() || nu.side() != mu.side() {
        return Err(Error::GroupMismatch);
    }
    validate_metric(m.metric, nu.group(), nu.side())?;

    let ns = nu.support();
    let ms = mu.support();
    // a point mass forces the coupling, and the distance collapses to a
    // deviation
    if ns.len() == 1 {
        return deviation(mu, ns[0], m);
    }
    if ms.len() == 1 {
        return deviation(nu, ms[0], m);
    }

    let nmass = nu.masses();
    let mmass = mu.masses();
    let dist = |i: usize, j: usize| point_distance(nu.group(), nu.side(), m.metric, ns[i], ms[j]);

    match m.exponent {
        Exponent::Finite(a) => {
            let mut problem = Problem::new(OptimizationDirection::Minimize);
            let mut vars = vec![Vec::with_capacity(ms.len()); ns.len()];
            for (i, row) in vars.iter_mut().enumerate() {
                for j in 0..ms.len() {
                    row.push(problem.add_var(dist(i, j).powf(a), (0.0, f64::INFINITY)));
                }
            }
            for (i, &x) in ns.iter().enumerate() {
                let row: Vec<_> = (0..ms.len()).map(|j| (vars[i][j], 1.0)).collect();
                problem.add_constraint(&row, ComparisonOp::Eq, nmass[x]);
            }
            // the final column constraint is implied by mass balance; leaving
            // it out keeps the system numerically consistent
            for (j, &y) in ms.iter().enumerate().take(ms.len() - 1) {
                let col: Vec<_> = (0..ns.len()).map(|i| (vars[i][j], 1.0)).collect();
                problem.add_constraint(&col, ComparisonOp::Eq, mmass[y]);
            }
            let solution = problem
                .solve()
                .map_err(|e| Error::Transport(format!("transport LP failed: {e}")))?;
            Ok(solution.objective().max(0.0).powf(1.0 / a))
        }
        Exponent::Infinity => {
            let mut levels: Vec<f64> = Vec::with_capacity(ns.len() * ms.len());
            for i in 0..ns.len() {
                for j in 0..ms.len() {
                    levels.push(dist(i, j));
                }
            }
            levels.sort_by(f64::total_cmp);
            levels.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);
            let supply: Vec<f64> = ns.iter().map(|&x| nmass[x]).collect();
            let demand: Vec<f64> = ms.iter().map(|&y| mmass[y]).collect();
            let feasible = |tau: f64| {
                bottleneck_feasible(&supply, &demand, |i, j| dist(i, j) <= tau + 1e-14)
            };
            let (mut lo, mut hi) = (0usize, levels.len() - 1);
            if feasible(levels[0]) {
                return Ok(levels[0]);
            }
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if feasible(levels[mid]) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Ok(levels[hi])
        }
    }
}

/// Does a coupling of `supply` and `demand` exist using only allowed pairs?
/// Decided by max-flow (Edmonds-Karp on the dense bipartite graph).
fn bottleneck_feasible(
    supply: &[f64],
    demand: &[f64],
    allowed: impl Fn(usize, usize) -> bool,
) -> bool {
    let ns = supply.len();
    let nm = demand.len();
    let n = ns + nm + 2;
    let (source, sink) = (0usize, n - 1);
    let total: f64 = supply.iter().sum();
    let mut cap = vec![vec![0.0f64; n]; n];
    for (i, s) in supply.iter().enumerate() {
        cap[source][1 + i] = *s;
    }
    for (j, d) in demand.iter().enumerate() {
        cap[1 + ns + j][sink] = *d;
    }
    for i in 0..ns {
        for j in 0..nm {
            if allowed(i, j) {
                cap[1 + i][1 + ns + j] = total + 1.0;
            }
        }
    }
    let mut flow = 0.0;
    loop {
        // BFS for an augmenting path
        let mut prev = vec![usize::MAX; n];
        prev[source] = source;
        let mut queue = std::collections::VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if prev[v] == usize::MAX && cap[u][v] > 1e-13 {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[sink] == usize::MAX {
            break;
        }
        let mut bottleneck = f64::INFINITY;
        let mut v = sink;
        while v != source {
            bottleneck = bottleneck.min(cap[prev[v]][v]);
            v = prev[v];
        }
        let mut v = sink;
        while v != source {
            cap[prev[v]][v] -= bottleneck;
            cap[v][prev[v]] += bottleneck;
            v = prev[v];
        }
        flow += bottleneck;
    }
    flow >= total - 1e-11
}

/// Translate every point of `mu` by `a`; truncated models report
/// [`Error::OutOfRange`] when supported mass would leave the window.
pub fn shift_distribution(mu: &Distribution, a: usize) -> Result<Distribution> {
    let g = mu.group().clone();
    let side = mu.side();
    let masses = mu.masses();
    let mut out = vec![0.0; masses.len()];
    for (x, mass) in masses.iter().enumerate() {
        match g.add(side, x, a) {
            Ok(y) => out[y] += mass,
            Err(_) if *mass <= SUPPORT_EPS => {}
            Err(e) => return Err(e),
        }
    }
    Ok(Distribution::from_masses_unchecked(g, side, out))
}

/// Group convolution of the two distributions.  On truncated models mass
/// falling outside the window is dropped (the zero-padded embedding).
pub fn convolve_distributions(mu: &Distribution, nu: &Distribution) -> Result<Distribution> {
    if mu.group() != nu.group() || mu.side() != nu.side() {
        return Err(Error::GroupMismatch);
    }
    let g = mu.group().clone();
    let side = mu.side();
    let ma = mu.masses();
    let mb = nu.masses();
    let mut out = vec![0.0; ma.len()];
    for (x, &wa) in ma.iter().enumerate() {
        if wa <= SUPPORT_EPS {
            continue;
        }
        for (y, &wb) in mb.iter().enumerate() {
            if wb <= SUPPORT_EPS {
                continue;
            }
            if let Ok(z) = g.add(side, x, y) {
                out[z] += wa * wb;
            }
        }
    }
    Ok(Distribution::from_masses_unchecked(g, side, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(metric: Metric, a: f64) -> MetricSpec {
        MetricSpec::new(metric, Exponent::finite(a).unwrap())
    }

    fn spec_inf(metric: Metric) -> MetricSpec {
        MetricSpec::new(metric, Exponent::Infinity)
    }

    #[test]
    fn deviation_of_point_mass_is_plain_distance() {
        let g = Group::cyclic(5).unwrap();
        let mu = Distribution::point(g.clone(), Side::Position, 3);
        for m in [
            spec(Metric::Discrete, 1.0),
            spec(Metric::Discrete, 2.5),
            spec_inf(Metric::Discrete),
            spec(Metric::CyclicAbsolute, 1.0),
        ] {
            let d = deviation(&mu, 1, &m).unwrap();
            let expect = point_distance(&g, Side::Position, m.metric, 1, 3);
            assert_abs_diff_eq!(d, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn uniform_two_point_deviations() {
        let g = Group::cyclic(2).unwrap();
        let mu = Distribution::uniform(g, Side::Position);
        let d = deviation(&mu, 0, &spec(Metric::Discrete, 1.0)).unwrap();
        assert_abs_diff_eq!(d, 0.5, epsilon = 1e-12);

        let z = Group::truncated_integers(2).unwrap();
        let mut p = vec![0.0; 5];
        p[2] = 0.5; // value 0
        p[3] = 0.5; // value 1
        let mu = Distribution::from_probabilities(z, Side::Position, &p).unwrap();
        let d = deviation(&mu, 2, &spec(Metric::Absolute, 2.0)).unwrap();
        assert_abs_diff_eq!(d, 1.0 / 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn spread_of_point_mass_is_zero_at_that_point() {
        let g = Group::cyclic(6).unwrap();
        let mu = Distribution::point(g, Side::Position, 4);
        let s = spread(&mu, &spec(Metric::Discrete, 1.0)).unwrap();
        assert_abs_diff_eq!(s.value, 0.0, epsilon = 1e-12);
        assert_eq!(s.minimizer, 4);
    }

    #[test]
    fn spread_of_uniform_under_discrete_metric() {
        for d in [2usize, 3, 7] {
            let g = Group::cyclic(d).unwrap();
            let mu = Distribution::uniform(g, Side::Position);
            let s = spread(&mu, &spec(Metric::Discrete, 1.0)).unwrap();
            assert_abs_diff_eq!(s.value, 1.0 - 1.0 / d as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn spread_of_three_integers_under_absolute_metric() {
        let g = Group::truncated_integers(3).unwrap();
        let idx = |v: i64| (v + 3) as usize;
        let mut p = vec![0.0; 7];
        for v in 0..3 {
            p[idx(v)] = 1.0 / 3.0;
        }
        let mu = Distribution::from_probabilities(g, Side::Position, &p).unwrap();
        let s = spread(&mu, &spec(Metric::Absolute, 1.0)).unwrap();
        assert_abs_diff_eq!(s.value, 2.0 / 3.0, epsilon = 1e-12);
        assert_eq!(s.minimizer, idx(1));
    }

    #[test]
    fn transport_between_point_masses_is_distance() {
        let g = Group::cyclic(7).unwrap();
        let m = spec(Metric::CyclicAbsolute, 1.0);
        for x in 0..7 {
            let nu = Distribution::point(g.clone(), Side::Position, x);
            let mu = Distribution::point(g.clone(), Side::Position, 2);
            let t = transport_distance(&nu, &mu, &m).unwrap();
            assert_abs_diff_eq!(
                t,
                point_distance(&g, Side::Position, Metric::CyclicAbsolute, x, 2),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn transport_of_distribution_to_itself_is_zero() {
        let g = Group::cyclic(4).unwrap();
        let mu = Distribution::from_probabilities(
            g,
            Side::Position,
            &[0.4, 0.3, 0.2, 0.1],
        )
        .unwrap();
        let t = transport_distance(&mu, &mu, &spec(Metric::Discrete, 1.0)).unwrap();
        assert_abs_diff_eq!(t, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn transport_from_point_to_split_pair() {
        let g = Group::cyclic(3).unwrap();
        let nu = Distribution::from_probabilities(g.clone(), Side::Position, &[1.0, 0.0, 0.0])
            .unwrap();
        let mu = Distribution::from_probabilities(g, Side::Position, &[0.5, 0.5, 0.0]).unwrap();
        let t = transport_distance(&nu, &mu, &spec(Metric::Discrete, 1.0)).unwrap();
        assert_abs_diff_eq!(t, 0.5, epsilon = 1e-12);
    }

    fn total_variation(a: &Distribution, b: &Distribution) -> f64 {
        0.5 * a
            .masses()
            .iter()
            .zip(b.masses())
            .map(|(x, y)| (x - y).abs())
            .sum::<f64>()
    }

    #[test]
    fn discrete_transport_equals_total_variation() {
        // independent oracle: under the discrete metric with alpha = 1 the
        // optimal plan keeps min(nu, mu) in place and moves the rest
        let g = Group::cyclic(6).unwrap();
        let m = spec(Metric::Discrete, 1.0);
        let cases = [
            vec![0.5, 0.0, 0.5, 0.0, 0.0, 0.0],
            vec![0.1, 0.2, 0.3, 0.1, 0.2, 0.1],
            vec![0.25, 0.25, 0.25, 0.25, 0.0, 0.0],
        ];
        for a in &cases {
            for b in &cases {
                let nu = Distribution::from_probabilities(g.clone(), Side::Position, a).unwrap();
                let mu = Distribution::from_probabilities(g.clone(), Side::Position, b).unwrap();
                let t = transport_distance(&nu, &mu, &m).unwrap();
                assert_abs_diff_eq!(t, total_variation(&nu, &mu), epsilon = 1e-9);
            }
        }
    }

    /// Oracle for 1-D transport with the absolute metric: alpha = 1 is the
    /// area between cumulative distribution functions; alpha = 2 couples
    /// sorted quantile slices.
    fn line_transport_oracle(vals: &[f64], a: &[f64], b: &[f64], alpha: f64) -> f64 {
        if alpha == 1.0 {
            let mut acc = 0.0;
            let mut ca = 0.0;
            let mut cb = 0.0;
            for k in 0..vals.len() - 1 {
                ca += a[k];
                cb += b[k];
                acc += (ca - cb).abs() * (vals[k + 1] - vals[k]);
            }
            acc
        } else {
            let mut i = 0;
            let mut j = 0;
            let mut ra = a[0];
            let mut rb = b[0];
            let mut acc = 0.0;
            loop {
                let step = ra.min(rb);
                if step > 0.0 {
                    acc += step * (vals[i] - vals[j]).abs().powf(alpha);
                }
                ra -= step;
                rb -= step;
                if ra <= 1e-15 {
                    i += 1;
                    if i == vals.len() {
                        break;
                    }
                    ra = a[i];
                }
                if rb <= 1e-15 {
                    j += 1;
                    if j == vals.len() {
                        break;
                    }
                    rb = b[j];
                }
            }
            acc.powf(1.0 / alpha)
        }
    }

    #[test]
    fn integer_transport_matches_cdf_and_quantile_oracles() {
        let g = Group::truncated_integers(4).unwrap();
        let n = g.len(Side::Position);
        let vals: Vec<f64> = (0..n).map(|i| g.values(Side::Position, i)[0]).collect();
        let cases = [
            vec![0.2, 0.0, 0.1, 0.3, 0.0, 0.1, 0.1, 0.2, 0.0],
            vec![0.0, 0.5, 0.0, 0.0, 0.2, 0.0, 0.0, 0.0, 0.3],
            vec![0.1, 0.1, 0.1, 0.1, 0.2, 0.1, 0.1, 0.1, 0.1],
        ];
        for a in &cases {
            for b in &cases {
                if a == b {
                    continue;
                }
                let nu = Distribution::from_probabilities(g.clone(), Side::Position, a).unwrap();
                let mu = Distribution::from_probabilities(g.clone(), Side::Position, b).unwrap();
                for alpha in [1.0, 2.0] {
                    let t =
                        transport_distance(&nu, &mu, &spec(Metric::Absolute, alpha)).unwrap();
                    let oracle = line_transport_oracle(&vals, a, b, alpha);
                    assert_abs_diff_eq!(t, oracle, epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn bottleneck_transport_minimizes_largest_move() {
        let g = Group::truncated_integers(3).unwrap();
        let idx = |v: i64| (v + 3) as usize;
        let mut a = vec![0.0; 7];
        a[idx(-1)] = 0.5;
        a[idx(1)] = 0.5;
        let mut b = vec![0.0; 7];
        b[idx(0)] = 0.5;
        b[idx(2)] = 0.5;
        let nu = Distribution::from_probabilities(g.clone(), Side::Position, &a).unwrap();
        let mu = Distribution::from_probabilities(g, Side::Position, &b).unwrap();
        let t = transport_distance(&nu, &mu, &spec_inf(Metric::Absolute)).unwrap();
        assert_abs_diff_eq!(t, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bottleneck_with_uneven_split_must_cross() {
        // 0.7 at -1 cannot all go to -1's nearest target; the bottleneck is
        // the longer of the two necessary moves
        let g = Group::truncated_integers(4).unwrap();
        let idx = |v: i64| (v + 4) as usize;
        let mut a = vec![0.0; 9];
        a[idx(-1)] = 0.7;
        a[idx(2)] = 0.3;
        let mut b = vec![0.0; 9];
        b[idx(-1)] = 0.4;
        b[idx(3)] = 0.6;
        let nu = Distribution::from_probabilities(g.clone(), Side::Position, &a).unwrap();
        let mu = Distribution::from_probabilities(g, Side::Position, &b).unwrap();
        let t = transport_distance(&nu, &mu, &spec_inf(Metric::Absolute)).unwrap();
        // 0.3 of the mass at -1 must reach 3: distance 4
        assert_abs_diff_eq!(t, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn shifting_by_a_costs_distance_from_zero() {
        // point masses: the coupling is forced, so equality with d(a, 0)
        let g = Group::cyclic(5).unwrap();
        let m = spec(Metric::Discrete, 1.0);
        let delta = Distribution::point(g.clone(), Side::Position, 0);
        for a in 1..5 {
            let shifted = shift_distribution(&delta, a).unwrap();
            assert_abs_diff_eq!(shifted.masses()[a], 1.0, epsilon = 1e-12);
            let t = transport_distance(&shifted, &delta, &m).unwrap();
            assert_abs_diff_eq!(t, 1.0, epsilon = 1e-9);
        }
        // general distributions: the shift coupling caps the cost, and an
        // overlapping translate can be strictly cheaper
        let mu =
            Distribution::from_probabilities(g.clone(), Side::Position, &[0.4, 0.1, 0.2, 0.2, 0.1])
                .unwrap();
        for a in 1..5 {
            let shifted = shift_distribution(&mu, a).unwrap();
            let t = transport_distance(&shifted, &mu, &m).unwrap();
            assert!(t <= 1.0 + 1e-9);
        }
        let same = shift_distribution(&mu, 0).unwrap();
        assert_abs_diff_eq!(total_variation(&same, &mu), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn line_translates_cost_exactly_the_step() {
        // on the integers the monotone coupling is optimal for any
        // distribution, so the translation identity holds with equality
        let g = Group::truncated_integers(6).unwrap();
        let idx = |v: i64| (v + 6) as usize;
        let mut p = vec![0.0; 13];
        p[idx(-2)] = 0.3;
        p[idx(0)] = 0.4;
        p[idx(1)] = 0.3;
        let mu = Distribution::from_probabilities(g.clone(), Side::Position, &p).unwrap();
        for (a, expect) in [(idx(1), 1.0), (idx(3), 3.0), (idx(-2), 2.0)] {
            let shifted = shift_distribution(&mu, a).unwrap();
            for alpha in [1.0, 2.0] {
                let t =
                    transport_distance(&shifted, &mu, &spec(Metric::Absolute, alpha)).unwrap();
                assert_abs_diff_eq!(t, expect, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn shift_out_of_truncated_window_errors() {
        let g = Group::truncated_integers(2).unwrap();
        let idx = |v: i64| (v + 2) as usize;
        let mu = Distribution::point(g.clone(), Side::Position, idx(2));
        assert!(matches!(
            shift_distribution(&mu, idx(1)),
            Err(Error::OutOfRange)
        ));
        let ok = shift_distribution(&mu, idx(-1)).unwrap();
        assert_abs_diff_eq!(ok.masses()[idx(1)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn convolution_identities() {
        let g = Group::cyclic(5).unwrap();
        let mu =
            Distribution::from_probabilities(g.clone(), Side::Position, &[0.4, 0.1, 0.2, 0.2, 0.1])
                .unwrap();
        let delta0 = Distribution::point(g.clone(), Side::Position, 0);
        let conv = convolve_distributions(&mu, &delta0).unwrap();
        assert_abs_diff_eq!(total_variation(&conv, &mu), 0.0, epsilon = 1e-12);

        let da = Distribution::point(g.clone(), Side::Position, 2);
        let db = Distribution::point(g.clone(), Side::Position, 4);
        let dc = convolve_distributions(&da, &db).unwrap();
        assert_abs_diff_eq!(dc.masses()[1], 1.0, epsilon = 1e-12);

        let uniform = Distribution::uniform(g.clone(), Side::Position);
        let conv = convolve_distributions(&uniform, &mu).unwrap();
        assert_abs_diff_eq!(total_variation(&conv, &uniform), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn convolution_transport_bound() {
        let g = Group::cyclic(6).unwrap();
        let m = spec(Metric::CyclicAbsolute, 1.0);
        let pairs = [
            (
                vec![0.3, 0.3, 0.1, 0.1, 0.1, 0.1],
                vec![0.6, 0.2, 0.1, 0.0, 0.0, 0.1],
            ),
            (
                vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
                vec![0.5, 0.25, 0.0, 0.0, 0.0, 0.25],
            ),
        ];
        for (pa, pb) in &pairs {
            let mu = Distribution::from_probabilities(g.clone(), Side::Position, pa).unwrap();
            let nu = Distribution::from_probabilities(g.clone(), Side::Position, pb).unwrap();
            let conv = convolve_distributions(&mu, &nu).unwrap();
            let lhs = transport_distance(&conv, &mu, &m).unwrap();
            let rhs = deviation(&nu, 0, &m).unwrap();
            assert!(lhs <= rhs + 1e-9, "bound violated: {lhs} > {rhs}");
            // equality when the translated distribution is a point mass
            let point = Distribution::point(g.clone(), Side::Position, 3);
            let conv_p = convolve_distributions(&point, &nu).unwrap();
            let lhs_p = transport_distance(&conv_p, &point, &m).unwrap();
            assert_abs_diff_eq!(lhs_p, rhs, epsilon = 1e-9);
        }
    }

    #[test]
    fn metric_axioms_exhaustive_on_small_groups() {
        let cases: Vec<(Group, Side, Metric)> = vec![
            (Group::cyclic(5).unwrap(), Side::Position, Metric::Discrete),
            (
                Group::cyclic(5).unwrap(),
                Side::Position,
                Metric::CyclicAbsolute,
            ),
            (Group::bits(3).unwrap(), Side::Position, Metric::HammingPerSite),
            (
                Group::truncated_integers(3).unwrap(),
                Side::Position,
                Metric::Absolute,
            ),
            (
                Group::discretized_circle(7).unwrap(),
                Side::Position,
                Metric::Arc,
            ),
            (
                Group::discretized_circle(7).unwrap(),
                Side::Position,
                Metric::Chordal,
            ),
            (
                Group::discretized_line(6, 2.0).unwrap(),
                Side::Position,
                Metric::Euclidean,
            ),
        ];
        for (g, side, metric) in cases {
            validate_metric(metric, &g, side).unwrap();
            let n = g.len(side);
            for i in 0..n {
                assert_abs_diff_eq!(point_distance(&g, side, metric, i, i), 0.0, epsilon = 1e-13);
                for j in 0..n {
                    let dij = point_distance(&g, side, metric, i, j);
                    let dji = point_distance(&g, side, metric, j, i);
                    assert_abs_diff_eq!(dij, dji, epsilon = 1e-13);
                    for k in 0..n {
                        let dik = point_distance(&g, side, metric, i, k);
                        let dkj = point_distance(&g, side, metric, k, j);
                        assert!(dij <= dik + dkj + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn metric_domain_errors() {
        let g = Group::cyclic(4).unwrap();
        assert!(matches!(
            validate_metric(Metric::Arc, &g, Side::Position),
            Err(Error::MetricDomain { .. })
        ));
        assert!(matches!(
            validate_metric(Metric::Absolute, &g, Side::Position),
            Err(Error::MetricDomain { .. })
        ));
        let line = Group::discretized_line(4, 1.0).unwrap();
        assert!(matches!(
            validate_metric(Metric::CyclicAbsolute, &line, Side::Position),
            Err(Error::MetricDomain { .. })
        ));
        validate_metric(Metric::Euclidean, &line, Side::Momentum).unwrap();
        let zint = Group::truncated_integers(2).unwrap();
        validate_metric(Metric::Arc, &zint, Side::Momentum).unwrap();
        validate_metric(Metric::Chordal, &zint, Side::Momentum).unwrap();
        assert!(matches!(
            validate_metric(Metric::Absolute, &zint, Side::Momentum),
            Err(Error::MetricDomain { .. })
        ));
    }

    #[test]
    fn deviation_is_monotone_in_exponent() {
        let g = Group::discretized_circle(9).unwrap();
        let probs: Vec<f64> = {
            let raw: Vec<f64> = (0..9).map(|i| (i as f64).sin().abs() + 0.05).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|r| r / s).collect()
        };
        let mu = Distribution::from_probabilities(g, Side::Position, &probs).unwrap();
        let mut prev = 0.0;
        for a in [1.0, 1.5, 2.0, 4.0, 16.0] {
            let d = deviation(&mu, 2, &spec(Metric::Arc, a)).unwrap();
            assert!(d >= prev - 1e-12, "alpha monotonicity broken at {a}");
            prev = d;
        }
        let dinf = deviation(&mu, 2, &spec_inf(Metric::Arc)).unwrap();
        assert!(dinf >= prev - 1e-12);
    }

    #[test]
    fn chordal_never_exceeds_arc_and_caps_at_two() {
        let g = Group::discretized_circle(12).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                let arc = point_distance(&g, Side::Position, Metric::Arc, i, j);
                let chord = point_distance(&g, Side::Position, Metric::Chordal, i, j);
                assert!(chord <= arc + 1e-13);
                assert!(chord <= 2.0 + 1e-13);
            }
        }
        let antipodal = point_distance(&g, Side::Position, Metric::Chordal, 0, 6);
        assert_abs_diff_eq!(antipodal, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn circle_spread_refines_between_grid_points() {
        let g = Group::discretized_circle(8).unwrap();
        let mut p = vec![0.0; 8];
        p[0] = 0.5;
        p[1] = 0.5;
        let mu = Distribution::from_probabilities(g, Side::Position, &p).unwrap();
        let s = spread(&mu, &spec(Metric::Arc, 2.0)).unwrap();
        let delta = std::f64::consts::TAU / 8.0;
        // optimal center sits midway between the two occupied angles
        assert_abs_diff_eq!(s.value, delta / 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.center[0].rem_euclid(std::f64::consts::TAU), delta / 2.0, epsilon = 1e-6);
    }

    #[test]
    fn transport_triangle_inequality_on_random_triples() {
        let g = Group::cyclic(4).unwrap();
        let m = spec(Metric::CyclicAbsolute, 2.0);
        let dists = [
            vec![0.4, 0.3, 0.2, 0.1],
            vec![0.1, 0.1, 0.4, 0.4],
            vec![0.25, 0.25, 0.25, 0.25],
            vec![0.7, 0.1, 0.1, 0.1],
        ];
        let ds: Vec<Distribution> = dists
            .iter()
            .map(|p| Distribution::from_probabilities(g.clone(), Side::Position, p).unwrap())
            .collect();
        for a in &ds {
            for b in &ds {
                for c in &ds {
                    let ab = transport_distance(a, b, &m).unwrap();
                    let ac = transport_distance(a, c, &m).unwrap();
                    let cb = transport_distance(c, b, &m).unwrap();
                    assert!(ab <= ac + cb + 1e-9);
                }
            }
        }
    }
}
