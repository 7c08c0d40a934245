//! Basic reproduction number from the next-generation matrix.

use nalgebra::DMatrix;

use crate::dynamics::disease_free_maternal;
use crate::error::{Error, Result};
use crate::inference::ParamVector;
use crate::model::{AgeStructure, Compartment, ModelId, ModelSpec, AGE_CLASSES};

/// `K = F V^-1` over infected compartments x age classes, and its spectral
/// radius `R0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NextGenerationMatrix {
    pub matrix: DMatrix<f64>,
    pub spectral_radius: f64,
}

impl NextGenerationMatrix {
    /// Builds `K = F V^-1` from a new-infection matrix `F` and a transition
    /// matrix `V`.
    pub fn from_parts(f: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<Self> {
        if !f.is_square() || f.shape() != v.shape() {
            return Err(Error::ShapeMismatch {
                expected: format!("square F and V of equal size, F is {:?}", f.shape()),
                found: format!("{:?}", v.shape()),
            });
        }
        for i in 0..v.nrows() {
            if !(v[(i, i)] > 0.0) {
                return Err(Error::SingularTransition(format!(
                    "infected state {i} has residence rate {}",
                    v[(i, i)]
                )));
            }
        }
        let v_inv = v
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularTransition("transition matrix is not invertible".into()))?;
        // V is an M-matrix, so V^-1 >= 0; clear rounding noise
        let matrix = (f * v_inv).map(|x| x.max(0.0));
        let spectral_radius = spectral_radius(&matrix);
        Ok(NextGenerationMatrix {
            matrix,
            spectral_radius,
        })
    }
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

fn infected_blocks(model: ModelId) -> Vec<Compartment> {
    use Compartment::*;
    match model {
        ModelId::A => vec![SevereInfectious, MildInfectious],
        ModelId::B => vec![Infectious(1), Infectious(2), Infectious(3)],
        ModelId::C => vec![
            Exposed(1),
            Infectious(1),
            Exposed(2),
            Infectious(2),
            Exposed(3),
            Infectious(3),
        ],
        ModelId::D | ModelId::E => vec![Infectious(1), Infectious(2), Infectious(3), Infectious(4)],
    }
}

/// Next-generation matrix at the disease-free equilibrium with the
/// stationary age distribution, transmission at its seasonal mean `beta0`.
///
/// At that equilibrium everyone past maternal immunity is in `S1`, so only
/// first infections (severe and mild for model A) receive new infections.
pub fn next_generation_matrix(
    spec: &ModelSpec,
    params: &ParamVector,
    ages: &AgeStructure,
) -> Result<NextGenerationMatrix> {
    params.forcing()?;
    let rates = spec.rates();
    let alpha = ages.aging_rates();
    let contact = ages.contact();
    let n = ages.population_fractions();
    let m = disease_free_maternal(spec, ages, ages.replacement_birth_rate());
    let s1: [f64; AGE_CLASSES] = std::array::from_fn(|a| (n[a] - m[a]).max(0.0));
    let beta0 = params.beta;

    let blocks = infected_blocks(spec.id());
    let dim = blocks.len() * AGE_CLASSES;
    let at = |b: usize, a: usize| b * AGE_CLASSES + a;

    // infectiousness weight, exit rate and new-infection share per block
    let mut weight = vec![0.0; blocks.len()];
    let mut exit = vec![0.0; blocks.len()];
    let mut share = vec![0.0; blocks.len()];
    for (b, c) in blocks.iter().enumerate() {
        match *c {
            Compartment::SevereInfectious => {
                weight[b] = 1.0;
                exit[b] = rates.recovery_first;
                share[b] = rates.severe_split;
            }
            Compartment::MildInfectious => {
                weight[b] = rates.mild_infectiousness;
                exit[b] = rates.recovery_later;
                share[b] = rates.mild_split;
            }
            Compartment::Exposed(k) => {
                exit[b] = rates.incubation_rate;
                if k == 1 {
                    share[b] = rates.relative_susceptibility[0];
                }
            }
            Compartment::Infectious(k) => {
                let k = k as usize - 1;
                weight[b] = rates.relative_infectiousness[k];
                exit[b] = spec.recovery(k);
                if k == 0 && spec.id() != ModelId::C {
                    share[b] = rates.relative_susceptibility[0];
                }
            }
            _ => unreachable!(),
        }
    }

    let mut f = DMatrix::zeros(dim, dim);
    for (bi, &sh) in share.iter().enumerate() {
        if sh == 0.0 {
            continue;
        }
        for a in 0..AGE_CLASSES {
            for (bj, &w) in weight.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                for j in 0..AGE_CLASSES {
                    f[(at(bi, a), at(bj, j))] = sh * s1[a] * contact[a][j] * beta0[j] * w / n[j];
                }
            }
        }
    }

    let mut v = DMatrix::zeros(dim, dim);
    for (b, c) in blocks.iter().enumerate() {
        for a in 0..AGE_CLASSES {
            v[(at(b, a), at(b, a))] = exit[b] + alpha[a];
            if a > 0 {
                v[(at(b, a), at(b, a - 1))] = -alpha[a - 1];
            }
            if let Compartment::Infectious(k) = *c {
                if spec.id() == ModelId::C {
                    // I_k is fed by E_k, the block just before it
                    debug_assert_eq!(blocks[b - 1], Compartment::Exposed(k));
                    v[(at(b, a), at(b - 1, a))] = -rates.incubation_rate;
                }
            }
        }
    }
    NextGenerationMatrix::from_parts(&f, &v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power_iteration(m: &DMatrix<f64>) -> f64 {
        let mut x = DMatrix::from_element(m.nrows(), 1, 1.0);
        let mut rho = 0.0;
        for _ in 0..20_000 {
            let y = m * &x;
            let norm = y.norm();
            if norm == 0.0 {
                return 0.0;
            }
            let next = norm / x.norm();
            x = y / norm;
            if (next - rho).abs() < 1e-15 * next {
                return next;
            }
            rho = next;
        }
        rho
    }

    #[test]
    fn scalar_sir() {
        let k = NextGenerationMatrix::from_parts(
            &DMatrix::from_element(1, 1, 2.0),
            &DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        assert!((k.spectral_radius - 2.0).abs() < 1e-14);
    }

    #[test]
    fn two_by_two_characteristic_root() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let expect = (5.0 + 33f64.sqrt()) / 2.0;
        assert!((spectral_radius(&m) - expect).abs() < 1e-12);
        let k = NextGenerationMatrix::from_parts(&m, &DMatrix::identity(2, 2)).unwrap();
        assert!((k.spectral_radius - 5.372).abs() < 1e-3);
    }

    #[test]
    fn singular_transitions_are_rejected() {
        let f = DMatrix::from_element(2, 2, 1.0);
        let mut v = DMatrix::identity(2, 2);
        v[(1, 1)] = 0.0;
        assert!(matches!(
            NextGenerationMatrix::from_parts(&f, &v),
            Err(Error::SingularTransition(_))
        ));
        assert!(NextGenerationMatrix::from_parts(&f, &DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn models_agree_with_power_iteration() {
        let theta = ParamVector::new(0.41, 7.4, 2.6, 0.096, [20.0; 6]);
        for id in ModelId::ALL {
            let k = next_generation_matrix(&ModelSpec::new(id), &theta, &AgeStructure::standard()).unwrap();
            assert!(k.matrix.iter().all(|&x| x >= 0.0));
            let oracle = power_iteration(&k.matrix);
            assert!(
                (k.spectral_radius - oracle).abs() < 1e-10 * oracle.max(1.0),
                "{id}: {} vs {oracle}",
                k.spectral_radius
            );
            assert!(k.spectral_radius > 1.0);
        }
    }

    #[test]
    fn linear_in_transmission() {
        let ages = AgeStructure::standard();
        let beta = [18.0, 21.0, 19.5, 22.0, 20.0, 17.0];
        let theta = ParamVector::new(0.41, 7.4, 2.6, 0.096, beta);
        let tripled = ParamVector::new(0.41, 7.4, 2.6, 0.096, beta.map(|b| 3.0 * b));
        for id in ModelId::ALL {
            let spec = ModelSpec::new(id);
            let r1 = next_generation_matrix(&spec, &theta, &ages)
                .unwrap()
                .spectral_radius;
            let r3 = next_generation_matrix(&spec, &tripled, &ages)
                .unwrap()
                .spectral_radius;
            assert!((r3 - 3.0 * r1).abs() < 1e-9 * r3, "{id}");
        }
    }

    #[test]
    fn seasonal_amplitude_does_not_matter() {
        let ages = AgeStructure::standard();
        let spec = ModelSpec::new(ModelId::B);
        let a = ParamVector::new(0.0, 3.0, 2.6, 0.1, [20.0; 6]);
        let b = ParamVector::new(0.9, 7.4, 2.6, 0.1, [20.0; 6]);
        let ra = next_generation_matrix(&spec, &a, &ages).unwrap().spectral_radius;
        let rb = next_generation_matrix(&spec, &b, &ages).unwrap().spectral_radius;
        assert_eq!(ra, rb);
    }
}
