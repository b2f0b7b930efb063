use crate::error::{HalError, Result};

/// Validation accuracy against the number of labels used.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LearningCurve {
    points: Vec<(usize, f64)>,
}

impl LearningCurve {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_points(points: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut c = Self::new();
        for (l, a) in points {
            c.push(l, a)?;
        }
        Ok(c)
    }

    /// Appends a point; label counts must strictly increase and accuracies
    /// lie in [0, 1].
    pub fn push(&mut self, labels: usize, accuracy: f64) -> Result<()> {
        if let Some(&(last, _)) = self.points.last() {
            if labels <= last {
                return Err(HalError::InvalidArgument(format!(
                    "label count {labels} does not increase past {last}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(HalError::InvalidArgument(format!("accuracy {accuracy} outside [0, 1]")));
        }
        self.points.push((labels, accuracy));
        Ok(())
    }

    pub fn points(&self) -> &[(usize, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn accuracy_at(&self, labels: usize) -> Option<f64> {
        self.points.iter().find(|p| p.0 == labels).map(|p| p.1)
    }
}

/// Trapezoidal area under `ys` over `xs`, divided by the label range. A
/// single point is its own mean.
fn mean_area(xs: &[usize], ys: &[f64]) -> f64 {
    if xs.len() == 1 {
        return ys[0];
    }
    let area: f64 = xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (x[1] - x[0]) as f64 * (y[0] + y[1]) / 2.0)
        .sum();
    area / (xs[xs.len() - 1] - xs[0]) as f64
}

/// `(ALC - A_rand) / (A_max - A_rand)` where ALC and A_rand are mean
/// trapezoidal areas of the two curves. Computed as the area of the
/// difference curves so the random curve itself scores exactly 0 and a
/// curve constant at `a_max` exactly 1.
pub fn alc_norm(curve: &LearningCurve, rand_curve: &LearningCurve, a_max: f64) -> Result<f64> {
    if curve.is_empty() || curve.labels() != rand_curve.labels() {
        return Err(HalError::InvalidArgument("curves must share a nonempty label grid".into()));
    }
    let xs = curve.labels();
    let gain: Vec<f64> = curve.points.iter().zip(&rand_curve.points).map(|(c, r)| c.1 - r.1).collect();
    let room: Vec<f64> = rand_curve.points.iter().map(|r| a_max - r.1).collect();
    let den = mean_area(&xs, &room);
    if !(den > 0.0) {
        return Err(HalError::InvalidArgument(format!(
            "a_max {a_max} does not exceed the random curve's mean accuracy"
        )));
    }
    Ok(mean_area(&xs, &gain) / den)
}

/// Mean accuracy over the label range (trapezoidal).
pub fn alc(curve: &LearningCurve) -> Result<f64> {
    if curve.is_empty() {
        return Err(HalError::Empty("learning curve"));
    }
    Ok(mean_area(&curve.labels(), &curve.points.iter().map(|p| p.1).collect::<Vec<_>>()))
}

/// One-sided sign test: probability of at least `wins` successes out of
/// `wins + losses` fair coin flips. Ties are dropped before calling.
pub fn sign_test(wins: usize, losses: usize) -> f64 {
    let n = wins + losses;
    let mut p = 0.0;
    let mut coef = 1.0f64; // C(n, 0)
    for k in 0..=n {
        if k >= wins {
            p += coef;
        }
        coef = coef * (n - k) as f64 / (k + 1) as f64;
    }
    p / 2f64.powi(n as i32)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
