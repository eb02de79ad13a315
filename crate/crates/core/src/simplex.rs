//! Regret minimizers over a probability simplex.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimplexError {
    #[error("loss vector has {found} entries, expected {expected}")]
    WrongLength { expected: usize, found: usize },
    #[error("loss entry {index} is not finite")]
    NonFiniteLoss { index: usize },
}

/// Online learner fed one loss vector per round.
pub trait SimplexLearner {
    /// Distribution played in the current round.
    fn policy(&self) -> &[f64];
    fn update(&mut self, loss: &[f64]) -> Result<(), SimplexError>;
}

fn check(loss: &[f64], n: usize) -> Result<(), SimplexError> {
    if loss.len() != n {
        return Err(SimplexError::WrongLength {
            expected: n,
            found: loss.len(),
        });
    }
    if let Some(index) = loss.iter().position(|l| !l.is_finite()) {
        return Err(SimplexError::NonFiniteLoss { index });
    }
    Ok(())
}

/// Exponential weights `p_{t+1}(a) ∝ p_t(a) exp(-eta * loss(a))`, kept as log-weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Hedge {
    eta: f64,
    log_weights: Vec<f64>,
    probs: Vec<f64>,
}

impl Hedge {
    pub fn new(num_actions: usize, eta: f64) -> Self {
        Hedge {
            eta,
            log_weights: vec![0.0; num_actions],
            probs: vec![1.0 / num_actions as f64; num_actions],
        }
    }

    /// Starts from a given distribution; zero entries stay zero forever.
    pub fn from_distribution(probs: &[f64], eta: f64) -> Self {
        Hedge {
            eta,
            log_weights: probs.iter().map(|p| p.ln()).collect(),
            probs: probs.to_vec(),
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    fn renormalize(&mut self) {
        let max = self
            .log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        for w in self.log_weights.iter_mut() {
            *w -= max;
        }
        let total: f64 = self.log_weights.iter().map(|w| w.exp()).sum();
        for (p, w) in self.probs.iter_mut().zip(&self.log_weights) {
            *p = w.exp() / total;
        }
    }
}

impl SimplexLearner for Hedge {
    fn policy(&self) -> &[f64] {
        &self.probs
    }

    fn update(&mut self, loss: &[f64]) -> Result<(), SimplexError> {
        check(loss, self.probs.len())?;
        if loss.iter().all(|&l| l == 0.0) {
            return Ok(());
        }
        for (w, l) in self.log_weights.iter_mut().zip(loss) {
            *w -= self.eta * l;
        }
        self.renormalize();
        Ok(())
    }
}

/// Regret matching: play the positive part of cumulative regrets, uniform if none is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretMatching {
    regrets: Vec<f64>,
    probs: Vec<f64>,
}

impl RegretMatching {
    pub fn new(num_actions: usize) -> Self {
        RegretMatching {
            regrets: vec![0.0; num_actions],
            probs: vec![1.0 / num_actions as f64; num_actions],
        }
    }

    pub fn cumulative_regrets(&self) -> &[f64] {
        &self.regrets
    }
}

impl SimplexLearner for RegretMatching {
    fn policy(&self) -> &[f64] {
        &self.probs
    }

    fn update(&mut self, loss: &[f64]) -> Result<(), SimplexError> {
        check(loss, self.probs.len())?;
        let expected: f64 = self.probs.iter().zip(loss).map(|(p, l)| p * l).sum();
        for (r, l) in self.regrets.iter_mut().zip(loss) {
            *r += expected - l;
        }
        let positive: f64 = self.regrets.iter().map(|r| r.max(0.0)).sum();
        if positive > 0.0 {
            for (p, r) in self.probs.iter_mut().zip(&self.regrets) {
                *p = r.max(0.0) / positive;
            }
        } else {
            let n = self.probs.len() as f64;
            self.probs.iter_mut().for_each(|p| *p = 1.0 / n);
        }
        Ok(())
    }
}

/// Realized regret `sum_t <p_t, l_t> - min_a sum_t l_t(a)` of a played sequence.
pub fn realized_regret(policies: &[Vec<f64>], losses: &[Vec<f64>]) -> f64 {
    let n = losses.first().map_or(0, Vec::len);
    let mut played = 0.0;
    let mut totals = vec![0.0; n];
    for (p, l) in policies.iter().zip(losses) {
        played += p.iter().zip(l).map(|(a, b)| a * b).sum::<f64>();
        for (t, x) in totals.iter_mut().zip(l) {
            *t += x;
        }
    }
    played - totals.iter().copied().fold(f64::INFINITY, f64::min)
}
