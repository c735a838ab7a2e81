//! Position-dependent generator fields on R^n.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exterior::{binomial, KForm, Vector};

/// A smooth form field whose exterior derivative is a finite combination
/// dξ(p) = Σ_m c_m(p) D_m of constant forms.
pub trait FormField: Send + Sync {
    fn n(&self) -> usize;
    fn degree(&self) -> usize;
    fn value(&self, p: &Vector) -> Result<KForm>;
    /// The constant forms D_m.
    fn derivative_basis(&self) -> &[KForm];
    /// The weights c_m(p).
    fn derivative_weights(&self, p: &Vector) -> Vec<f64>;

    fn exterior_derivative(&self, p: &Vector) -> Result<KForm> {
        let mut out = KForm::zero(self.n(), self.degree() + 1)?;
        for (c, d) in self
            .derivative_weights(p)
            .into_iter()
            .zip(self.derivative_basis())
        {
            out.axpy(c, d);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrigMode {
    pub form: KForm,
    pub wave: Vector,
    pub phase: f64,
}

/// ξ(p) = Σ_m cos(w_m·p + θ_m) A_m with constant-coefficient forms A_m.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigFormField {
    n: usize,
    degree: usize,
    modes: Vec<TrigMode>,
    // w♭ ∧ A per mode
    dmodes: Vec<KForm>,
}

impl TrigFormField {
    pub fn new(n: usize, degree: usize, modes: Vec<TrigMode>) -> Result<Self> {
        if degree >= n {
            return Err(Error::InvalidDegree {
                degree: degree + 1,
                n,
            });
        }
        let mut dmodes = Vec::with_capacity(modes.len());
        for m in &modes {
            if m.form.n() != n || m.wave.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.wave.len().min(m.form.n()),
                });
            }
            if m.form.degree() != degree {
                return Err(Error::InvalidDegree {
                    degree: m.form.degree(),
                    n,
                });
            }
            dmodes.push(KForm::covector(&m.wave)?.wedge(&m.form)?);
        }
        Ok(Self {
            n,
            degree,
            modes,
            dmodes,
        })
    }

    /// A constant form: one mode with zero wave vector.
    pub fn constant(form: KForm) -> Result<Self> {
        let (n, degree) = (form.n(), form.degree());
        Self::new(
            n,
            degree,
            vec![TrigMode {
                form,
                wave: Vector::zeros(n),
                phase: 0.0,
            }],
        )
    }

    /// Random modes: Gaussian coefficients, wave entries in {−1, 0, 1} and
    /// uniform phase. Wave vectors rejected by `accept` are redrawn.
    pub fn random<R: Rng + ?Sized>(
        n: usize,
        degree: usize,
        mode_count: usize,
        rng: &mut R,
        accept: &dyn Fn(&Vector) -> bool,
    ) -> Result<Self> {
        let len = binomial(n, degree);
        let mut modes = Vec::with_capacity(mode_count);
        for _ in 0..mode_count {
            let coeffs: Vec<f64> = (0..len).map(|_| StandardNormal.sample(rng)).collect();
            let mut wave;
            let mut tries = 0;
            loop {
                wave = Vector::from_fn(n, |_, _| rng.random_range(-1i32..=1) as f64);
                tries += 1;
                if accept(&wave) {
                    break;
                }
                if tries > 1000 {
                    return Err(Error::Config("no admissible wave vector found".into()));
                }
            }
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            modes.push(TrigMode {
                form: KForm::from_coeffs(n, degree, coeffs)?,
                wave,
                phase,
            });
        }
        Self::new(n, degree, modes)
    }

    pub fn modes(&self) -> &[TrigMode] {
        &self.modes
    }
}

impl FormField for TrigFormField {
    fn n(&self) -> usize {
        self.n
    }

    fn degree(&self) -> usize {
        self.degree
    }

    fn value(&self, p: &Vector) -> Result<KForm> {
        let mut out = KForm::zero(self.n, self.degree)?;
        for m in &self.modes {
            out.axpy((m.wave.dot(p) + m.phase).cos(), &m.form);
        }
        Ok(out)
    }

    fn derivative_basis(&self) -> &[KForm] {
        &self.dmodes
    }

    fn derivative_weights(&self, p: &Vector) -> Vec<f64> {
        self.modes
            .iter()
            .map(|m| -(m.wave.dot(p) + m.phase).sin())
            .collect()
    }
}

/// f(p) = Σ a cos(w·p + θ).
#[derive(Debug, Clone, PartialEq)]
pub struct TrigScalarField {
    pub terms: Vec<(f64, Vector, f64)>,
}

impl TrigScalarField {
    pub fn random<R: Rng + ?Sized>(n: usize, count: usize, amplitude: f64, rng: &mut R) -> Self {
        let terms = (0..count)
            .map(|_| {
                let a = amplitude * rng.random_range(-1.0..1.0);
                let w = Vector::from_fn(n, |_, _| rng.random_range(-1i32..=1) as f64);
                (a, w, rng.random_range(0.0..std::f64::consts::TAU))
            })
            .collect();
        Self { terms }
    }

    /// f = Σ_a amp_a cos(p_a + θ_a) along the given coordinate axes, with
    /// amplitudes amp·(1 + a/4) and phases 0.3a.
    pub fn axis_waves(n: usize, axes: &[usize], amplitude: f64) -> Self {
        let terms = axes
            .iter()
            .enumerate()
            .map(|(a, &ax)| {
                (
                    amplitude * (1.0 + 0.25 * a as f64),
                    crate::exterior::unit(n, ax),
                    0.3 * a as f64,
                )
            })
            .collect();
        Self { terms }
    }

    pub fn value(&self, p: &Vector) -> f64 {
        self.terms
            .iter()
            .map(|(a, w, th)| a * (w.dot(p) + th).cos())
            .sum()
    }

    pub fn gradient(&self, p: &Vector) -> Vector {
        let mut g = Vector::zeros(p.len());
        for (a, w, th) in &self.terms {
            g.axpy(-a * (w.dot(p) + th).sin(), w, 1.0);
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn derivative_matches_central_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = TrigFormField::random(4, 1, 3, &mut rng, &|_| true).unwrap();
        let p = Vector::from_vec(vec![0.3, -0.2, 0.7, 1.1]);
        let d = f.exterior_derivative(&p).unwrap();
        let h = 1e-5;
        // (dα)_ij = ∂_i α_j − ∂_j α_i
        for i in 0..4 {
            for j in i + 1..4 {
                let mut pp = p.clone();
                pp[i] += h;
                let mut pm = p.clone();
                pm[i] -= h;
                let di_aj = (f.value(&pp).unwrap().coeffs()[j] - f.value(&pm).unwrap().coeffs()[j])
                    / (2.0 * h);
                let mut pp = p.clone();
                pp[j] += h;
                let mut pm = p.clone();
                pm[j] -= h;
                let dj_ai = (f.value(&pp).unwrap().coeffs()[i] - f.value(&pm).unwrap().coeffs()[i])
                    / (2.0 * h);
                assert!((d.component(&[i, j]) - (di_aj - dj_ai)).abs() < 1e-8);
            }
        }
    }
}
