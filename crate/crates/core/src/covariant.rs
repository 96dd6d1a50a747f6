//! Covariant phase-space observables and measurement uncertainty.
//!
//! A density operator `rho_F` generates a covariant observable whose effect
//! at the phase-space point `xi = (q, p)` is the translated generator scaled
//! by the cell size, `F({xi}) = dxi * W_xi rho_F W_xi^*`.  Its outcome
//! marginals are classical convolutions of the input state's marginals with
//! the parity-flipped generator's marginals, so the worst-case measurement
//! error over input states reduces to a preparation-uncertainty quantity of
//! the generator.  That reduction is what [`mur_equals_pur_check`] verifies
//! numerically.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::{Group, Side};
use crate::groundstate::Scenario;
use crate::metrics::{
    spread, transport_distance, Distribution, MetricSpec,
};
use crate::operators::{
    parity_conjugate, random_density, DensityOperator, PhaseSpaceFunction,
};

/// A phase-space translation covariant POVM described by its generator and
/// the full table of effects (flat index `q * len_p + p`).
#[derive(Debug, Clone)]
pub struct CovariantObservable {
    group: Group,
    generator: DensityOperator,
    effects: Vec<DMatrix<Complex64>>,
}

/// Build the observable generated by `rho_f` and verify that the effects
/// resolve the identity.  A failure here means the translation system does
/// not preserve mass (truncated models) or a Haar convention slipped.
pub fn povm_from_generator(rho_f: DensityOperator) -> Result<CovariantObservable> {
    let group = rho_f.group().clone();
    let d = group.len(Side::Position);
    let len_p = group.len(Side::Momentum);
    let cell = group.phase_cell();
    let mut effects = Vec::with_capacity(d * len_p);
    let mut total = DMatrix::from_element(d, d, Complex64::default());
    for q in 0..d {
        for p in 0..len_p {
            let eff = rho_f.translated(q, p).matrix().scale(cell);
            total += &eff;
            effects.push(eff);
        }
    }
    for i in 0..d {
        for j in 0..d {
            let want = if i == j { 1.0 } else { 0.0 };
            if (total[(i, j)] - Complex64::new(want, 0.0)).norm() > 1e-10 {
                return Err(Error::InvalidOperator(
                    "effects do not sum to the identity; the translation \
                     system loses mass on this group"
                        .into(),
                ));
            }
        }
    }
    Ok(CovariantObservable {
        group,
        generator: rho_f,
        effects,
    })
}

impl CovariantObservable {
    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn generator(&self) -> &DensityOperator {
        &self.generator
    }

    pub fn effect(&self, q: usize, p: usize) -> &DMatrix<Complex64> {
        &self.effects[q * self.group.len(Side::Momentum) + p]
    }

    pub fn effects(&self) -> &[DMatrix<Complex64>] {
        &self.effects
    }

    /// Outcome probabilities `tr(rho F({xi}))`, flat over phase space.
    pub fn outcome_probabilities(&self, rho: &DensityOperator) -> Vec<f64> {
        self.effects
            .iter()
            .map(|e| rho.expectation(e).re.max(0.0))
            .collect()
    }

    /// The operator `F[f] = sum_xi f(xi) F({xi})`.
    pub fn apply_function(&self, f: &PhaseSpaceFunction) -> DMatrix<Complex64> {
        let d = self.group.len(Side::Position);
        let len_p = self.group.len(Side::Momentum);
        let mut out = DMatrix::from_element(d, d, Complex64::default());
        for q in 0..d {
            for p in 0..len_p {
                let v = f.at(q, p);
                if v.norm_sqr() > 0.0 {
                    out += self.effect(q, p).map(|e| e * v);
                }
            }
        }
        out
    }
}

/// Marginal of the parity-flipped generator on one side: the classical noise
/// the measurement adds to that side's ideal outcome.
pub fn noise_distribution(f: &CovariantObservable, side: Side) -> Result<Distribution> {
    let g = f.group();
    let flipped = parity_conjugate(g, f.generator().matrix());
    let flipped = DensityOperator::new(g.clone(), flipped)?;
    match side {
        Side::Position => flipped.position_marginal(),
        Side::Momentum => flipped.momentum_marginal(),
    }
}

/// Measured position and momentum marginals of `rho`.  Both are computed
/// directly from the effects and through the convolution of `rho`'s ideal
/// marginal with the noise distribution; the two pipelines must agree.
pub fn output_marginals(
    f: &CovariantObservable,
    rho: &DensityOperator,
) -> Result<(Distribution, Distribution)> {
    let g = f.group();
    let len_q = g.len(Side::Position);
    let len_p = g.len(Side::Momentum);
    let joint = f.outcome_probabilities(rho);
    let mut prob_q = vec![0.0; len_q];
    let mut prob_p = vec![0.0; len_p];
    for q in 0..len_q {
        for p in 0..len_p {
            let v = joint[q * len_p + p];
            prob_q[q] += v;
            prob_p[p] += v;
        }
    }
    let direct_q = Distribution::from_probabilities(g.clone(), Side::Position, &prob_q)?;
    let direct_p = Distribution::from_probabilities(g.clone(), Side::Momentum, &prob_p)?;

    let conv_q =
        crate::metrics::convolve_distributions(&rho.position_marginal()?, &noise_distribution(f, Side::Position)?)?;
    let conv_p =
        crate::metrics::convolve_distributions(&rho.momentum_marginal()?, &noise_distribution(f, Side::Momentum)?)?;
    for (a, b) in [(&direct_q, &conv_q), (&direct_p, &conv_p)] {
        let ma = a.masses();
        let mb = b.masses();
        for i in 0..ma.len() {
            if (ma[i] - mb[i]).abs() > 1e-10 {
                return Err(Error::InvalidDistribution(
                    "effect marginal disagrees with the convolution identity".into(),
                ));
            }
        }
    }
    Ok((direct_q, direct_p))
}

/// Worst-case transport distance between the measured and the ideal marginal
/// on `side`, maximized over point input states.  For a centered observable
/// this equals the spread of the noise distribution, which is verified here.
pub fn measurement_uncertainty(
    f: &CovariantObservable,
    side: Side,
    m: &MetricSpec,
) -> Result<f64> {
    let g = f.group();
    let noise = noise_distribution(f, side)?;
    let noise_spread = spread(&noise, m)?.value;

    let mut worst = 0.0f64;
    for x in 0..g.len(side) {
        let rho = match side {
            Side::Position => DensityOperator::from_pure(&point_state(g, Side::Position, x)),
            Side::Momentum => DensityOperator::from_pure(&point_state(g, Side::Momentum, x)),
        };
        let (out_q, out_p) = output_marginals(f, &rho)?;
        let out = match side {
            Side::Position => out_q,
            Side::Momentum => out_p,
        };
        let ideal = Distribution::point(g.clone(), side, x);
        worst = worst.max(transport_distance(&out, &ideal, m)?);
    }
    if (worst - noise_spread).abs() > 1e-9 {
        return Err(Error::Invalid(format!(
            "worst-case error {worst} differs from the noise spread {noise_spread}; \
             center the observable first"
        )));
    }
    Ok(worst)
}

fn point_state(g: &Group, side: Side, x: usize) -> crate::state::StateVector {
    match side {
        Side::Position => crate::state::StateVector::point(g.clone(), x),
        Side::Momentum => {
            let mut amps = vec![Complex64::default(); g.len(Side::Momentum)];
            amps[x] = Complex64::new(1.0, 0.0);
            crate::state::StateVector::from_momentum(g.clone(), amps).unwrap()
        }
    }
}

/// Shift all outcomes so the spread minimizers of both noise distributions
/// sit at 0.  Relabeling outcomes by `xi_0` is the same as translating the
/// generator by `xi_0`, which is how it is done here.
pub fn center_observable(
    f: &CovariantObservable,
    m_q: &MetricSpec,
    m_p: &MetricSpec,
) -> Result<CovariantObservable> {
    let q0 = spread(&noise_distribution(f, Side::Position)?, m_q)?.minimizer;
    let p0 = spread(&noise_distribution(f, Side::Momentum)?, m_p)?.minimizer;
    povm_from_generator(f.generator().translated(q0, p0))
}

/// Summary of the covariant measurement-vs-preparation comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct MurReport {
    pub samples: usize,
    /// Largest |worst-case error - noise spread| seen on the position side.
    pub max_deviation_q: f64,
    pub max_deviation_p: f64,
    pub pass: bool,
}

/// For random generators, compare the measurement uncertainty pair of the
/// centered observable with the spread pair of its noise distributions.
/// They coincide, which places the covariant measurement cloud on top of the
/// preparation cloud.
pub fn mur_equals_pur_check(s: &Scenario, samples: usize, seed: u64) -> Result<MurReport> {
    let d = s.group.len(Side::Position);
    let mut max_q = 0.0f64;
    let mut max_p = 0.0f64;
    for k in 0..samples {
        let rank = 1 + (k % d);
        let rho_f = random_density(&s.group, rank, seed.wrapping_add(k as u64));
        let obs = center_observable(&povm_from_generator(rho_f)?, &s.metric_q, &s.metric_p)?;
        let err_q = measurement_uncertainty(&obs, Side::Position, &s.metric_q)?;
        let err_p = measurement_uncertainty(&obs, Side::Momentum, &s.metric_p)?;
        let spread_q = spread(&noise_distribution(&obs, Side::Position)?, &s.metric_q)?.value;
        let spread_p = spread(&noise_distribution(&obs, Side::Momentum)?, &s.metric_p)?.value;
        max_q = max_q.max((err_q - spread_q).abs());
        max_p = max_p.max((err_p - spread_p).abs());
    }
    Ok(MurReport {
        samples,
        max_deviation_q: max_q,
        max_deviation_p: max_p,
        pass: max_q < 1e-8 && max_p < 1e-8,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundstate::Scenario;
    use crate::linalg::eigh;
    use crate::metrics::{deviation, Exponent, Metric};
    use crate::operators::random_pure_state;
    use approx::assert_abs_diff_eq;

    fn m(metric: Metric, a: f64) -> MetricSpec {
        MetricSpec::new(metric, Exponent::finite(a).unwrap())
    }

    #[test]
    fn flat_generator_yields_constant_effects() {
        let g = Group::cyclic(2).unwrap();
        let obs = povm_from_generator(DensityOperator::maximally_mixed(g)).unwrap();
        for e in obs.effects() {
            assert_abs_diff_eq!(e[(0, 0)].re, 0.25, epsilon = 1e-12);
            assert_abs_diff_eq!(e[(1, 1)].re, 0.25, epsilon = 1e-12);
            assert_abs_diff_eq!(e[(0, 1)].norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn effects_are_positive_and_resolve_identity() {
        for g in [
            Group::cyclic(3).unwrap(),
            Group::bits(2).unwrap(),
            Group::discretized_circle(4).unwrap(),
        ] {
            let rho = random_density(&g, 2, 5);
            let obs = povm_from_generator(rho).unwrap();
            for e in obs.effects() {
                let vals = eigh(e).values;
                assert!(vals[0] > -1e-12, "effect not PSD: {}", vals[0]);
            }
            // normalization is checked at construction; re-check the trace
            let total: f64 = obs.effects().iter().map(|e| e.trace().re).sum();
            assert_abs_diff_eq!(total, g.len(crate::group::Side::Position) as f64, epsilon = 1e-10);
        }
    }

    #[test]
    fn truncated_models_are_rejected() {
        let g = Group::truncated_integers(3).unwrap();
        let rho = random_density(&g, 1, 9);
        assert!(matches!(
            povm_from_generator(rho),
            Err(Error::InvalidOperator(_))
        ));
    }

    #[test]
    fn point_generator_marginal_effects_are_position_projectors() {
        let g = Group::cyclic(3).unwrap();
        let psi = crate::state::StateVector::point(g.clone(), 0);
        let obs = povm_from_generator(DensityOperator::from_pure(&psi)).unwrap();
        for q in 0..3 {
            let mut marg = DMatrix::from_element(3, 3, Complex64::default());
            for p in 0..3 {
                marg += obs.effect(q, p);
            }
            for i in 0..3 {
                for j in 0..3 {
                    let want = if i == j && i == q { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(marg[(i, j)].re, want, epsilon = 1e-12);
                    assert_abs_diff_eq!(marg[(i, j)].im, 0.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn covariance_on_sampled_indicators() {
        let g = Group::cyclic(3).unwrap();
        let obs = povm_from_generator(random_density(&g, 2, 11)).unwrap();
        for (q0, p0) in [(1usize, 2usize), (2, 0)] {
            for (fq, fp) in [(0usize, 0usize), (1, 2)] {
                let f = PhaseSpaceFunction::from_fn(g.clone(), |q, p| {
                    if q == fq && p == fp {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::default()
                    }
                });
                let lhs = crate::operators::translate_operator(&g, &obs.apply_function(&f), q0, p0);
                let shifted = PhaseSpaceFunction::from_fn(g.clone(), |q, p| {
                    let qs = g.sub(crate::group::Side::Position, q, q0).unwrap();
                    let ps = g.sub(crate::group::Side::Momentum, p, p0).unwrap();
                    f.at(qs, ps)
                });
                let rhs = obs.apply_function(&shifted);
                for i in 0..3 {
                    for j in 0..3 {
                        assert!((lhs[(i, j)] - rhs[(i, j)]).norm() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn flat_generator_washes_out_every_input() {
        let g = Group::cyclic(4).unwrap();
        let obs = povm_from_generator(DensityOperator::maximally_mixed(g.clone())).unwrap();
        let rho = random_density(&g, 3, 17);
        let (mq, mp) = output_marginals(&obs, &rho).unwrap();
        for w in mq.masses() {
            assert_abs_diff_eq!(w, 0.25, epsilon = 1e-10);
        }
        for w in mp.masses() {
            assert_abs_diff_eq!(w, 0.25, epsilon = 1e-10);
        }
    }

    #[test]
    fn point_generator_measures_position_exactly() {
        let g = Group::cyclic(5).unwrap();
        let psi = crate::state::StateVector::point(g.clone(), 0);
        let obs = povm_from_generator(DensityOperator::from_pure(&psi)).unwrap();
        let rho = random_density(&g, 2, 23);
        let (mq, _) = output_marginals(&obs, &rho).unwrap();
        let ideal = rho.position_marginal().unwrap();
        for (a, b) in mq.masses().iter().zip(ideal.masses()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn direct_and_convolved_marginals_agree_for_random_pairs() {
        let g = Group::cyclic(5).unwrap();
        for k in 0..50 {
            let obs = povm_from_generator(random_density(&g, 1 + k % 3, 100 + k as u64)).unwrap();
            let rho = random_density(&g, 1 + (k + 1) % 4, 200 + k as u64);
            // output_marginals errors if the two pipelines disagree at 1e-10
            output_marginals(&obs, &rho).unwrap();
        }
    }

    #[test]
    fn exact_position_measurement_has_zero_uncertainty() {
        let g = Group::cyclic(4).unwrap();
        let psi = crate::state::StateVector::point(g.clone(), 0);
        let obs = povm_from_generator(DensityOperator::from_pure(&psi)).unwrap();
        let err = measurement_uncertainty(&obs, Side::Position, &m(Metric::Discrete, 1.0)).unwrap();
        assert_abs_diff_eq!(err, 0.0, epsilon = 1e-12);
        let err_p =
            measurement_uncertainty(&obs, Side::Momentum, &m(Metric::Discrete, 1.0)).unwrap();
        assert_abs_diff_eq!(err_p, 0.75, epsilon = 1e-12);
    }

    #[test]
    fn flat_generator_uncertainty_is_the_uniform_spread() {
        let d = 4;
        let g = Group::cyclic(d).unwrap();
        let obs = povm_from_generator(DensityOperator::maximally_mixed(g)).unwrap();
        let err = measurement_uncertainty(&obs, Side::Position, &m(Metric::Discrete, 1.0)).unwrap();
        assert_abs_diff_eq!(err, 1.0 - 1.0 / d as f64, epsilon = 1e-12);
    }

    #[test]
    fn centering_moves_a_shifted_point_generator_back() {
        let g = Group::cyclic(3).unwrap();
        let psi = crate::state::StateVector::point(g.clone(), 2);
        let obs = povm_from_generator(DensityOperator::from_pure(&psi)).unwrap();
        let mq = m(Metric::Discrete, 1.0);
        let mp = m(Metric::Discrete, 1.0);
        let centered = center_observable(&obs, &mq, &mp).unwrap();
        let noise = noise_distribution(&centered, Side::Position).unwrap();
        assert_abs_diff_eq!(noise.masses()[0], 1.0, epsilon = 1e-12);
        // spreads are unchanged by centering
        let before = spread(&noise_distribution(&obs, Side::Position).unwrap(), &mq)
            .unwrap()
            .value;
        let after = spread(&noise, &mq).unwrap().value;
        assert_abs_diff_eq!(before, after, epsilon = 1e-12);
        // an already centered observable stays put
        let again = center_observable(&centered, &mq, &mp).unwrap();
        let a = again.generator().matrix();
        let b = centered.generator().matrix();
        for i in 0..3 {
            for j in 0..3 {
                assert!((a[(i, j)] - b[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn measured_error_never_beats_the_noise_spread() {
        let g = Group::cyclic(4).unwrap();
        let mq = m(Metric::Discrete, 1.0);
        let obs = center_observable(
            &povm_from_generator(random_density(&g, 2, 31)).unwrap(),
            &mq,
            &mq,
        )
        .unwrap();
        let noise = noise_distribution(&obs, Side::Position).unwrap();
        let bound = spread(&noise, &mq).unwrap().value;
        let mut attained = 0.0f64;
        for k in 0..50 {
            let rho = random_density(&g, 1 + k % 4, 300 + k as u64);
            let (out_q, _) = output_marginals(&obs, &rho).unwrap();
            let ideal = rho.position_marginal().unwrap();
            let d = transport_distance(&out_q, &ideal, &mq).unwrap();
            assert!(d <= bound + 1e-10, "state error {d} above bound {bound}");
            attained = attained.max(d);
        }
        // point states attain the bound
        for x in 0..4 {
            let rho = DensityOperator::from_pure(
                &crate::state::StateVector::point(g.clone(), x),
            );
            let (out_q, _) = output_marginals(&obs, &rho).unwrap();
            let ideal = rho.position_marginal().unwrap();
            attained = attained.max(transport_distance(&out_q, &ideal, &mq).unwrap());
        }
        assert_abs_diff_eq!(attained, bound, epsilon = 1e-9);
    }

    #[test]
    fn noise_addition_reproduces_output_statistics() {
        let g = Group::cyclic(3).unwrap();
        let obs = povm_from_generator(random_density(&g, 2, 41)).unwrap();
        let noise = noise_distribution(&obs, Side::Position).unwrap();
        for k in 0..50 {
            let rho = DensityOperator::from_pure(&random_pure_state(&g, 400 + k));
            let (mq, _) = output_marginals(&obs, &rho).unwrap();
            let composed =
                crate::metrics::convolve_distributions(&rho.position_marginal().unwrap(), &noise)
                    .unwrap();
            for (a, b) in mq.masses().iter().zip(composed.masses()) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn covariant_cloud_sits_on_the_preparation_cloud() {
        let s = Scenario::new(
            Group::cyclic(3).unwrap(),
            m(Metric::Discrete, 1.0),
            m(Metric::Discrete, 1.0),
        )
        .unwrap();
        let report = mur_equals_pur_check(&s, 100, 77).unwrap();
        assert!(report.pass, "report: {report:?}");
        assert!(report.max_deviation_q < 1e-9);
        assert!(report.max_deviation_p < 1e-9);
    }

    #[test]
    fn mixed_and_point_generator_endpoints() {
        let g = Group::cyclic(4).unwrap();
        let mq = m(Metric::Discrete, 1.0);
        let delta = 0.75;

        let flat = povm_from_generator(DensityOperator::maximally_mixed(g.clone())).unwrap();
        let eq = measurement_uncertainty(&flat, Side::Position, &mq).unwrap();
        let ep = measurement_uncertainty(&flat, Side::Momentum, &mq).unwrap();
        assert_abs_diff_eq!(eq, delta, epsilon = 1e-12);
        assert_abs_diff_eq!(ep, delta, epsilon = 1e-12);

        let point = povm_from_generator(DensityOperator::from_pure(
            &crate::state::StateVector::point(g.clone(), 0),
        ))
        .unwrap();
        let eq = measurement_uncertainty(&point, Side::Position, &mq).unwrap();
        let ep = measurement_uncertainty(&point, Side::Momentum, &mq).unwrap();
        assert_abs_diff_eq!(eq, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ep, delta, epsilon = 1e-12);
    }

    #[test]
    fn apply_function_matches_operator_convolution() {
        let g = Group::cyclic(3).unwrap();
        let rho_f = random_density(&g, 2, 53);
        let obs = povm_from_generator(rho_f.clone()).unwrap();
        let f = PhaseSpaceFunction::from_fn(g.clone(), |q, p| {
            Complex64::new(0.3 * q as f64 - 0.1 * p as f64, 0.2)
        });
        let via_effects = obs.apply_function(&f);
        let via_conv = crate::operators::convolve_function_operator(&f, rho_f.matrix()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((via_effects[(i, j)] - via_conv[(i, j)]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn uniform_noise_deviation_matches_its_spread_value() {
        // sanity anchor for the worst-case computation: uniform noise has
        // deviation delta from every center
        let g = Group::cyclic(4).unwrap();
        let mq = m(Metric::Discrete, 1.0);
        let uniform = Distribution::uniform(g, Side::Position);
        let dev = deviation(&uniform, 0, &mq).unwrap();
        assert_abs_diff_eq!(dev, 0.75, epsilon = 1e-12);
    }
}
