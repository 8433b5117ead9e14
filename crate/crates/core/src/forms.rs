//! Smooth test forms with closed-form codifferentials.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::binomial;

pub type Coefficient = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A smooth k-form `Σ u_I dx^I` on R^n with coefficients listed over
/// increasing index tuples `I` in lexicographic order.
#[derive(Clone)]
pub struct AnalyticForm {
    name: String,
    dim: usize,
    degree: usize,
    /// Upper bound on the total polynomial degree of every coefficient.
    poly_degree: usize,
    coefficients: Vec<Coefficient>,
    codifferential: Option<Box<AnalyticForm>>,
}

impl fmt::Debug for AnalyticForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticForm")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("degree", &self.degree)
            .field("poly_degree", &self.poly_degree)
            .field("has_codifferential", &self.codifferential.is_some())
            .finish()
    }
}

pub const BUILTIN_NAMES: [&str; 4] = ["square1form", "cube1form", "cube2form", "square2form"];

impl AnalyticForm {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        degree: usize,
        poly_degree: usize,
        coefficients: Vec<Coefficient>,
    ) -> Result<Self> {
        if degree > dim {
            return Err(Error::DegreeOutOfRange { k: degree, n: dim });
        }
        if coefficients.len() != binomial(dim, degree) {
            return Err(Error::ShapeMismatch(format!(
                "{}-form in R^{} needs {} coefficients, got {}",
                degree,
                dim,
                binomial(dim, degree),
                coefficients.len()
            )));
        }
        Ok(Self {
            name: name.into(),
            dim,
            degree,
            poly_degree,
            coefficients,
            codifferential: None,
        })
    }

    pub fn with_codifferential(mut self, cod: AnalyticForm) -> Result<Self> {
        if cod.dim != self.dim || cod.degree + 1 != self.degree {
            return Err(Error::DimensionMismatch {
                expected: self.degree.saturating_sub(1),
                found: cod.degree,
            });
        }
        self.codifferential = Some(Box::new(cod));
        Ok(self)
    }

    /// Constant form with the given components.
    pub fn constant(dim: usize, degree: usize, values: Vec<f64>) -> Result<Self> {
        let coefficients = values
            .into_iter()
            .map(|v| Arc::new(move |_: &[f64]| v) as Coefficient)
            .collect();
        Self::new("constant", dim, degree, 0, coefficients)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn poly_degree(&self) -> usize {
        self.poly_degree
    }

    pub fn n_components(&self) -> usize {
        self.coefficients.len()
    }

    pub fn codifferential(&self) -> Option<&AnalyticForm> {
        self.codifferential.as_deref()
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.coefficients) {
            *o = c(x);
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.coefficients.iter().map(|c| c(x)).collect()
    }
}

fn coef<F>(f: F) -> Coefficient
where
    F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
{
    Arc::new(f)
}

/// The potential `p(x, y) = x - x³/3` with `dp = (1 - x²) dx`.
pub fn potential_p() -> AnalyticForm {
    AnalyticForm::new("potential", 2, 0, 3, vec![coef(|x| x[0] - x[0].powi(3) / 3.0)])
        .expect("valid 0-form")
}

/// Built-in test forms, each with its codifferential attached.
pub fn builtin(name: &str) -> Result<AnalyticForm> {
    let two_x = |n: usize| {
        AnalyticForm::new("2x", n, 0, 1, vec![coef(|x| 2.0 * x[0])]).expect("valid 0-form")
    };
    match name {
        "square1form" => AnalyticForm::new(
            name,
            2,
            1,
            2,
            vec![coef(|x| 1.0 - x[0] * x[0]), coef(|_| 0.0)],
        )?
        .with_codifferential(two_x(2)),
        "cube1form" => AnalyticForm::new(
            name,
            3,
            1,
            2,
            vec![coef(|x| 1.0 - x[0] * x[0]), coef(|_| 0.0), coef(|_| 0.0)],
        )?
        .with_codifferential(two_x(3)),
        "cube2form" => {
            // components on dx∧dy, dx∧dz, dy∧dz
            let u = AnalyticForm::new(
                name,
                3,
                2,
                4,
                vec![
                    coef(|x| (1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1])),
                    coef(|_| 0.0),
                    coef(|_| 0.0),
                ],
            )?;
            let du = AnalyticForm::new(
                "curl",
                3,
                1,
                3,
                vec![
                    coef(|x| -2.0 * (1.0 - x[0] * x[0]) * x[1]),
                    coef(|x| 2.0 * x[0] * (1.0 - x[1] * x[1])),
                    coef(|_| 0.0),
                ],
            )?;
            u.with_codifferential(du)
        }
        "square2form" => {
            let u = AnalyticForm::new(
                name,
                2,
                2,
                4,
                vec![coef(|x| (1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1]))],
            )?;
            let du = AnalyticForm::new(
                "rot",
                2,
                1,
                3,
                vec![
                    coef(|x| -2.0 * (1.0 - x[0] * x[0]) * x[1]),
                    coef(|x| 2.0 * x[0] * (1.0 - x[1] * x[1])),
                ],
            )?;
            u.with_codifferential(du)
        }
        other => Err(Error::UnknownForm(other.to_string())),
    }
}
