use rand::{Rng, RngCore};

use super::{AgentError, Policy};
use crate::env::Action;
use crate::indicators::N_FEATURES;

/// Names accepted by [`baseline`].
pub const BASELINE_NAMES: [&str; 4] = ["hold", "random", "buy-and-hold", "momentum"];

/// Builds a baseline policy by name for `n` tickers.
pub fn baseline(name: &str, n: usize) -> Result<Box<dyn Policy>, AgentError> {
    Ok(match name {
        "hold" => Box::new(Hold::new(n)),
        "random" => Box::new(RandomPolicy::new(n)),
        "buy-and-hold" => Box::new(BuyAndHold::new(n)),
        "momentum" => Box::new(Momentum::new(n)),
        _ => {
            return Err(AgentError::UnknownAgent { name: name.to_string(), valid: BASELINE_NAMES.join(", ") });
        }
    })
}

/// I.i.d. uniform actions on `[-1, 1]^N`.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    n: usize,
}

impl RandomPolicy {
    pub fn new(n: usize) -> Self {
        RandomPolicy { n }
    }
}

impl Policy for RandomPolicy {
    fn label(&self) -> &str {
        "random"
    }

    fn act(&mut self, _observation: &[f64], rng: &mut dyn RngCore) -> Action {
        Action((0..self.n).map(|_| rng.random_range(-1.0..=1.0)).collect())
    }
}

/// Never trades.
#[derive(Debug, Clone)]
pub struct Hold {
    n: usize,
}

impl Hold {
    pub fn new(n: usize) -> Self {
        Hold { n }
    }
}

impl Policy for Hold {
    fn label(&self) -> &str {
        "hold"
    }

    fn act(&mut self, _observation: &[f64], _rng: &mut dyn RngCore) -> Action {
        Action::zeros(self.n)
    }
}

/// Buys the maximum of every ticker on the first step, then holds.
#[derive(Debug, Clone)]
pub struct BuyAndHold {
    n: usize,
    fired: bool,
}

impl BuyAndHold {
    pub fn new(n: usize) -> Self {
        BuyAndHold { n, fired: false }
    }
}

impl Policy for BuyAndHold {
    fn label(&self) -> &str {
        "buy-and-hold"
    }

    fn stateful(&self) -> bool {
        true
    }

    fn reset(&mut self) {
        self.fired = false;
    }

    fn act(&mut self, _observation: &[f64], _rng: &mut dyn RngCore) -> Action {
        if self.fired {
            Action::zeros(self.n)
        } else {
            self.fired = true;
            Action(vec![1.0; self.n])
        }
    }
}

/// Moving-average crossover: +1 while the short SMA is above the long SMA,
/// -1 while below, 0 on a tie. Reads both SMAs from the observation's
/// feature block.
#[derive(Debug, Clone)]
pub struct Momentum {
    n: usize,
}

impl Momentum {
    pub fn new(n: usize) -> Self {
        Momentum { n }
    }
}

const SMA_SHORT: usize = 6;
const SMA_LONG: usize = 7;

impl Policy for Momentum {
    fn label(&self) -> &str {
        "momentum"
    }

    fn act(&mut self, observation: &[f64], _rng: &mut dyn RngCore) -> Action {
        let base = 1 + 2 * self.n;
        Action(
            (0..self.n)
                .map(|i| {
                    let block = base + i * N_FEATURES;
                    let (short, long) = (observation[block + SMA_SHORT], observation[block + SMA_LONG]);
                    if short > long {
                        1.0
                    } else if short < long {
                        -1.0
                    } else {
                        0.0
                    }
                })
                .collect(),
        )
    }
}
