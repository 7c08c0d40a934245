use nalgebra::DMatrix;
use proptest::prelude::*;

use rotaens_core::dynamics::Setting;
use rotaens_core::ensemble::{bma_combine_scalar, posterior_model_probabilities};
use rotaens_core::inference::{hpd_interval, ParamVector};
use rotaens_core::metrics::{seroconversion_from_efficacy, vaccine_efficacy_forward, NextGenerationMatrix};
use rotaens_core::model::{
    apply_vaccination_wiring, derivatives, Layout, ModelId, ModelSpec, StateVector, VaccinePolicy,
    AGE_CLASSES,
};
use rotaens_core::observation::nb_log_pmf;

fn model() -> impl Strategy<Value = ModelId> {
    prop::sample::select(ModelId::ALL.to_vec())
}

fn theta() -> impl Strategy<Value = ParamVector> {
    (
        0.0..1.0f64,
        2.0..8.0f64,
        0.5..10.0f64,
        0.01..0.5f64,
        prop::array::uniform6(1.0..60.0f64),
    )
        .prop_map(|(b, phi, r, rho, beta)| ParamVector::new(b, phi, r, rho, beta))
}

fn state_for(id: ModelId, raw: &[f64]) -> StateVector {
    let layout = Layout::new(id);
    let n = layout.len();
    let values: Vec<f64> = raw.iter().cycle().take(n).copied().collect();
    let total: f64 = values.iter().sum();
    StateVector::from_values(layout, values.into_iter().map(|v| v / total).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pmps_ignore_a_common_shift(bics in prop::collection::vec(-500.0..500.0f64, 1..8), shift in -1e3..1e3f64) {
        let p = posterior_model_probabilities(&bics);
        let shifted: Vec<f64> = bics.iter().map(|b| b + shift).collect();
        let q = posterior_model_probabilities(&shifted);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (a, b) in p.iter().zip(&q) {
            prop_assert!(*a >= 0.0);
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn model_average_is_convex(
        groups in prop::collection::vec(prop::collection::vec(-50.0..50.0f64, 2..20), 1..5),
        raw in prop::collection::vec(0.01..1.0f64, 5),
    ) {
        let w: Vec<f64> = raw[..groups.len()].to_vec();
        let total: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|x| x / total).collect();
        let est = bma_combine_scalar(&groups, &w, 0.95).unwrap();
        let means: Vec<f64> = groups.iter().map(|g| g.iter().sum::<f64>() / g.len() as f64).collect();
        let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(est.point >= lo - 1e-9 && est.point <= hi + 1e-9);
        let all_lo = groups.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        let all_hi = groups.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(est.interval.0 >= all_lo - 1e-9 && est.interval.1 <= all_hi + 1e-9);
        prop_assert!(est.interval.0 <= est.interval.1);
    }

    #[test]
    fn efficacy_round_trip(s in 0.02..0.98f64) {
        let r = ModelSpec::new(ModelId::B).rates().clone();
        let (s2, s3) = (r.relative_susceptibility[1], r.relative_susceptibility[2]);
        let ve = vaccine_efficacy_forward(s, s2, s3, r.severe_fractions).unwrap();
        let back = seroconversion_from_efficacy(ve, s2, s3, r.severe_fractions).unwrap();
        prop_assert!((back - s).abs() < 1e-8, "{} -> {} -> {}", s, ve, back);
    }

    #[test]
    fn spectral_radius_is_relabelling_invariant(
        n in 1usize..7,
        entries in prop::collection::vec(0.0..5.0f64, 49),
        exits in prop::collection::vec(0.1..3.0f64, 7),
        perm_seed in any::<u64>(),
    ) {
        let f = DMatrix::from_fn(n, n, |i, j| entries[i * 7 + j]);
        let v = DMatrix::from_fn(n, n, |i, j| if i == j { exits[i] } else { 0.0 });
        let mut order: Vec<usize> = (0..n).collect();
        let mut s = perm_seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let pf = DMatrix::from_fn(n, n, |i, j| f[(order[i], order[j])]);
        let pv = DMatrix::from_fn(n, n, |i, j| v[(order[i], order[j])]);
        let a = NextGenerationMatrix::from_parts(&f, &v).unwrap().spectral_radius;
        let b = NextGenerationMatrix::from_parts(&pf, &pv).unwrap().spectral_radius;
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn nb_log_pmf_is_a_log_probability(k in 0u64..500, mu in 1e-3..300.0f64, r in 0.05..1e4f64) {
        let lp = nb_log_pmf(k, mu, r).unwrap();
        prop_assert!(lp <= 1e-12);
        let p0 = nb_log_pmf(0, mu, r).unwrap().exp();
        prop_assert!((p0 - (r / (r + mu)).powf(r)).abs() <= 1e-12 * p0.max(1e-300) + 1e-300);
    }

    #[test]
    fn flow_conservation(id in model(), th in theta(), raw in prop::collection::vec(1e-6..1.0f64, 16..64), t in 0.0..156.0f64) {
        let setting = Setting::default();
        let state = state_for(id, &raw);
        let d = derivatives(&ModelSpec::new(id), &state, &setting.ages, &th.forcing().unwrap(), &setting.births, t).unwrap();
        let lhs: f64 = d.values().iter().sum();
        let oldest: f64 = Layout::new(id).blocks().iter().map(|&c| state.get(c, AGE_CLASSES - 1)).sum();
        let rhs = setting.births.rate(t) * state.total() - setting.ages.aging_rates()[AGE_CLASSES - 1] * oldest;
        prop_assert!((lhs - rhs).abs() < 1e-10, "{}: {} vs {}", id, lhs, rhs);
    }

    #[test]
    fn zero_coverage_wiring_is_neutral(id in model(), th in theta(), raw in prop::collection::vec(1e-6..1.0f64, 16..64), t in 0.0..104.0f64, s in 0.0..1.0f64) {
        let setting = Setting::default();
        let spec = ModelSpec::new(id);
        let forcing = th.forcing().unwrap();
        let state = state_for(id, &raw);
        let base = derivatives(&spec, &state, &setting.ages, &forcing, &setting.births, t).unwrap();
        let vax = apply_vaccination_wiring(&spec, &setting.ages, &forcing, &setting.births, &VaccinePolicy::new(0.0, s).unwrap());
        let extended = state.extend_to(vax.layout().clone()).unwrap();
        let d = vax.derivatives(t, &extended).unwrap().restrict_to(Layout::new(id));
        prop_assert_eq!(d.values(), base.values());
    }

    #[test]
    fn forcing_is_annual(th in theta(), t in -200.0..200.0f64) {
        let f = th.forcing().unwrap();
        prop_assert!((f.seasonal_factor(t) - f.seasonal_factor(t + 52.0)).abs() < 1e-12);
        prop_assert!(f.seasonal_factor(t) >= 0.0);
    }

    #[test]
    fn hpd_is_the_shortest_window(samples in prop::collection::vec(-100.0..100.0f64, 10..300), level in 0.5..0.99f64) {
        let (lo, hi) = hpd_interval(&samples, level).unwrap();
        let inside = samples.iter().filter(|&&x| x >= lo && x <= hi).count();
        prop_assert!(inside as f64 >= level * samples.len() as f64 - 1e-9);
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let m = ((level * n as f64).ceil() as usize).clamp(1, n);
        for start in [0, (n - m) / 2, n - m] {
            prop_assert!(hi - lo <= sorted[start + m - 1] - sorted[start]);
        }
    }
}
