//! Exact single-SKU dynamic program, written independently of the library's
//! choice and arrival code.

#![allow(dead_code)]

/// One SKU, Poisson arrivals, each arrival buying with logit probability
/// until stock runs out, so epoch sales are `min(I, Poisson(lambda_dt * d(p)))`.
#[derive(Debug, Clone)]
pub struct SingleSku {
    pub lambda_dt: f64,
    pub alpha: f64,
    pub beta: f64,
    pub unit_cost: f64,
    pub commission: f64,
    pub salvage: f64,
    pub num_epochs: usize,
    pub grid: Vec<f64>,
}

impl SingleSku {
    pub fn buy_probability(&self, p: f64) -> f64 {
        1.0 / (1.0 + (-(self.alpha - self.beta * p)).exp())
    }

    fn margin(&self, p: f64) -> f64 {
        (1.0 - self.commission) * p - self.unit_cost
    }

    /// `P(sales = k)` for `k = 0..=inventory`; the last entry holds the tail.
    pub fn sales_pmf(&self, p: f64, inventory: usize) -> Vec<f64> {
        let mean = self.lambda_dt * self.buy_probability(p);
        let mut pmf = Vec::with_capacity(inventory + 1);
        let mut term = (-mean).exp();
        let mut cum = 0.0;
        for k in 0..inventory {
            pmf.push(term);
            cum += term;
            term *= mean / (k + 1) as f64;
        }
        pmf.push((1.0 - cum).max(0.0));
        pmf
    }

    fn q_value(&self, p: f64, inventory: usize, next: &[f64]) -> f64 {
        self.sales_pmf(p, inventory)
            .iter()
            .enumerate()
            .map(|(k, prob)| prob * (k as f64 * self.margin(p) + next[inventory - k]))
            .sum()
    }

    fn terminal(&self, max_inventory: usize) -> Vec<f64> {
        (0..=max_inventory).map(|i| -self.salvage * i as f64).collect()
    }

    /// Optimal expected total profit from `initial` units, maximizing over the
    /// grid in every (epoch, inventory) state.
    pub fn optimal_value(&self, initial: usize) -> f64 {
        let mut v = self.terminal(initial);
        for _ in 0..self.num_epochs {
            v = (0..=initial)
                .map(|i| {
                    self.grid
                        .iter()
                        .map(|&p| self.q_value(p, i, &v))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
        }
        v[initial]
    }

    /// Exact expected profit of a deterministic rule `(epoch 1-based, inventory) -> price`.
    pub fn policy_value(&self, initial: usize, rule: impl Fn(usize, usize) -> f64) -> f64 {
        let mut v = self.terminal(initial);
        for t in (1..=self.num_epochs).rev() {
            v = (0..=initial).map(|i| self.q_value(rule(t, i), i, &v)).collect();
        }
        v[initial]
    }
}
