//! Synchronous advantage actor-critic.
//!
//! `n_envs` environments advance in lock step for `n_steps` each; the
//! coordinator then computes n-step returns, takes one RMSProp step on
//!
//! ```text
//! L = -mean(log π(a|s)·A) + value_coef·mean((R - V)²) - entropy_coef·H(π)
//! ```
//!
//! with `A = R - V(s)` held constant, and the policy is a diagonal Gaussian
//! whose mean is the network's tanh output and whose log-std is a free
//! parameter vector. Sampled actions are clamped to `[-1, 1]` before
//! execution; the log-density uses the unclamped sample.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mlp::{mlp_backward, mlp_forward, HeadGrads, MlpParams};
use super::normalize::ObsNormalizer;
use super::{AgentError, Policy};
use crate::env::{observation_len, Action, EnvError, TradingEnv};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct A2CConfig {
    pub n_steps: usize,
    pub gamma: f64,
    pub lr: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub max_grad_norm: f64,
    pub total_timesteps: usize,
    pub n_envs: usize,
    pub seed: u64,
    pub hidden: [usize; 2],
    pub log_std_init: f64,
    pub rms_decay: f64,
    pub rms_eps: f64,
}

impl Default for A2CConfig {
    fn default() -> Self {
        A2CConfig {
            n_steps: 5,
            gamma: 0.99,
            lr: 7e-4,
            value_coef: 0.5,
            entropy_coef: 0.01,
            max_grad_norm: 0.5,
            total_timesteps: 100_000,
            n_envs: 4,
            seed: 0,
            hidden: [64, 64],
            log_std_init: 0.0,
            rms_decay: 0.99,
            rms_eps: 1e-5,
        }
    }
}

impl A2CConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let err = |m: &str| Err(AgentError::InvalidConfig(m.into()));
        if !(0.0..=1.0).contains(&self.gamma) {
            return err("gamma must lie in [0, 1]");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return err("lr must be positive");
        }
        if self.n_steps < 1 || self.n_envs < 1 {
            return err("n_steps and n_envs must be >= 1");
        }
        if self.hidden.contains(&0) {
            return err("hidden sizes must be >= 1");
        }
        if !(self.max_grad_norm > 0.0) || self.value_coef < 0.0 || self.entropy_coef < 0.0 {
            return err("max_grad_norm must be positive and loss coefficients non-negative");
        }
        if !(0.0..1.0).contains(&self.rms_decay) || !(self.rms_eps > 0.0) {
            return err("rms_decay must lie in [0, 1) and rms_eps be positive");
        }
        Ok(())
    }
}

/// Transitions for one update: normalized observations, unclamped sampled
/// actions and their n-step returns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBatch {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub returns: Vec<f64>,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }
}

/// Differential entropy of a diagonal Gaussian: `Σ (½ln(2πe) + log σ_i)`.
pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|ls| HALF_LN_2PI + 0.5 + ls).sum()
}

/// Discounted returns of one worker's segment, bootstrapped from `bootstrap`
/// and cut at episode ends (`dones[k]` means step `k` ended the episode).
pub fn n_step_returns(rewards: &[f64], dones: &[bool], bootstrap: f64, gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut running = bootstrap;
    for k in (0..rewards.len()).rev() {
        if dones[k] {
            running = 0.0;
        }
        running = rewards[k] + gamma * running;
        out[k] = running;
    }
    out
}

/// `R - V(s)` for each transition.
pub fn advantages(params: &MlpParams, batch: &RolloutBatch) -> Result<Vec<f64>, AgentError> {
    batch
        .obs
        .iter()
        .zip(&batch.returns)
        .map(|(o, r)| Ok(r - mlp_forward(params, o)?.value))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LossParts {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
}

/// Loss and its exact gradient with the advantages held fixed.
pub fn a2c_loss(
    params: &MlpParams,
    batch: &RolloutBatch,
    advantages: &[f64],
    cfg: &A2CConfig,
) -> Result<(LossParts, Vec<f64>), AgentError> {
    let m = batch.len();
    if m == 0 || advantages.len() != m || batch.obs.len() != m || batch.actions.len() != m {
        return Err(AgentError::ShapeMismatch { expected: m, got: advantages.len() });
    }
    let out = params.output_len();
    let inv_m = 1.0 / m as f64;
    let mut grad = vec![0.0; params.len()];
    let mut parts = LossParts::default();
    let mut up = HeadGrads::zeros(out);

    for j in 0..m {
        let fwd = mlp_forward(params, &batch.obs[j])?;
        let action = &batch.actions[j];
        if action.len() != out {
            return Err(AgentError::ShapeMismatch { expected: out, got: action.len() });
        }
        let adv = advantages[j];
        let mut log_prob = 0.0;
        for i in 0..out {
            let var = (2.0 * fwd.log_std[i]).exp();
            let diff = action[i] - fwd.mean[i];
            let z2 = diff * diff / var;
            log_prob += -0.5 * z2 - fwd.log_std[i] - HALF_LN_2PI;
            up.mean[i] = -adv * inv_m * diff / var;
            up.log_std[i] = -adv * inv_m * (z2 - 1.0);
        }
        let v_err = fwd.value - batch.returns[j];
        parts.policy -= log_prob * adv * inv_m;
        parts.value += v_err * v_err * inv_m;
        up.value = cfg.value_coef * 2.0 * v_err * inv_m;
        mlp_backward(params, &fwd, &up, &mut grad)?;
    }

    parts.entropy = gaussian_entropy(params.log_std());
    let ls = params.tensors()[6].1.clone();
    for g in &mut grad[ls] {
        *g -= cfg.entropy_coef;
    }
    parts.total = parts.policy + cfg.value_coef * parts.value - cfg.entropy_coef * parts.entropy;
    Ok((parts, grad))
}

/// RMSProp: `s ← ρ·s + (1-ρ)·g²`, `θ ← θ - lr·g / (√s + ε)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsProp {
    pub lr: f64,
    pub decay: f64,
    pub eps: f64,
    square_avg: Vec<f64>,
}

impl RmsProp {
    pub fn new(len: usize, lr: f64, decay: f64, eps: f64) -> Self {
        RmsProp { lr, decay, eps, square_avg: vec![0.0; len] }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        for ((p, s), g) in params.iter_mut().zip(&mut self.square_avg).zip(grad) {
            *s = self.decay * *s + (1.0 - self.decay) * g * g;
            *p -= self.lr * g / (s.sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    /// Global L2 norm before clipping.
    pub grad_norm: f64,
}

/// One gradient step on `batch`. `update` is only used in diagnostics.
pub fn a2c_update(
    params: &mut MlpParams,
    optimizer: &mut RmsProp,
    batch: &RolloutBatch,
    cfg: &A2CConfig,
    update: usize,
) -> Result<UpdateStats, AgentError> {
    let adv = advantages(params, batch)?;
    let (parts, mut grad) = a2c_loss(params, batch, &adv, cfg)?;
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if !parts.total.is_finite() || !norm.is_finite() {
        return Err(AgentError::NonFiniteLoss {
            update,
            detail: format!(
                "policy {} value {} entropy {} grad_norm {norm} batch {}",
                parts.policy,
                parts.value,
                parts.entropy,
                batch.len()
            ),
        });
    }
    if norm > cfg.max_grad_norm {
        let scale = cfg.max_grad_norm / norm;
        grad.iter_mut().for_each(|g| *g *= scale);
    }
    optimizer.step(params.as_mut_slice(), &grad);
    Ok(UpdateStats { policy_loss: parts.policy, value_loss: parts.value, entropy: parts.entropy, grad_norm: norm })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainStats {
    pub updates: Vec<UpdateStats>,
    /// Cumulative reward of every worker episode that ran to completion.
    pub episode_rewards: Vec<f64>,
    /// Full passes over the training window covered by the step budget:
    /// `total_timesteps / episode_len`.
    pub episode_count: usize,
    pub total_timesteps: usize,
    pub episode_len: usize,
}

/// Learned parameters together with the frozen observation normalizer.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedAgent {
    pub params: MlpParams,
    pub normalizer: ObsNormalizer,
    pub config: A2CConfig,
    pub stats: TrainStats,
}

impl TrainedAgent {
    pub fn policy(&self, label: impl Into<String>) -> A2CPolicy {
        A2CPolicy::new(self.params.clone(), self.normalizer.clone(), label)
    }
}

fn sample_action(mean: &[f64], log_std: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
    mean.iter()
        .zip(log_std)
        .map(|(m, ls)| {
            let eps: f64 = rng.sample(StandardNormal);
            m + ls.exp() * eps
        })
        .collect()
}

/// Trains from scratch. `make_env(k)` builds worker `k`'s environment; every
/// worker must expose the same ticker count. Fully determined by
/// `cfg.seed` and the environments.
pub fn a2c_train<'a, F>(cfg: &A2CConfig, mut make_env: F) -> Result<TrainedAgent, AgentError>
where
    F: FnMut(usize) -> Result<TradingEnv<'a>, EnvError>,
{
    cfg.validate()?;
    let mut envs = (0..cfg.n_envs).map(&mut make_env).collect::<Result<Vec<_>, _>>()?;
    let n = envs[0].features().n_tickers();
    if let Some(bad) = envs.iter().find(|e| e.features().n_tickers() != n) {
        return Err(AgentError::ShapeMismatch { expected: n, got: bad.features().n_tickers() });
    }
    let episode_len = envs[0].episode_len();
    let obs_dim = observation_len(n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = MlpParams::init([obs_dim, cfg.hidden[0], cfg.hidden[1], n], cfg.log_std_init, &mut rng);
    let mut optimizer = RmsProp::new(params.len(), cfg.lr, cfg.rms_decay, cfg.rms_eps);
    let mut normalizer = ObsNormalizer::new(obs_dim);

    let mut obs: Vec<Vec<f64>> = envs.iter_mut().map(|e| e.reset()).collect();
    let mut running_reward = vec![0.0; cfg.n_envs];
    let mut stats = TrainStats {
        updates: Vec::new(),
        episode_rewards: Vec::new(),
        episode_count: cfg.total_timesteps.checked_div(episode_len).unwrap_or(0),
        total_timesteps: cfg.total_timesteps,
        episode_len,
    };

    let mut steps_done = 0usize;
    while steps_done < cfg.total_timesteps {
        let mut seg_obs: Vec<Vec<Vec<f64>>> = vec![Vec::new(); cfg.n_envs];
        let mut seg_act: Vec<Vec<Vec<f64>>> = vec![Vec::new(); cfg.n_envs];
        let mut seg_rew: Vec<Vec<f64>> = vec![Vec::new(); cfg.n_envs];
        let mut seg_done: Vec<Vec<bool>> = vec![Vec::new(); cfg.n_envs];

        'rollout: for _ in 0..cfg.n_steps {
            for k in 0..cfg.n_envs {
                if steps_done >= cfg.total_timesteps {
                    break 'rollout;
                }
                normalizer.update(&obs[k]);
                let x = normalizer.normalize(&obs[k]);
                let fwd = mlp_forward(&params, &x)?;
                let a = sample_action(&fwd.mean, &fwd.log_std, &mut rng);
                let out = envs[k].step(&Action(a.clone()).clamped())?;
                running_reward[k] += out.reward;
                seg_obs[k].push(x);
                seg_act[k].push(a);
                seg_rew[k].push(out.reward);
                seg_done[k].push(out.done);
                steps_done += 1;
                if out.done {
                    stats.episode_rewards.push(running_reward[k]);
                    running_reward[k] = 0.0;
                    obs[k] = envs[k].reset();
                } else {
                    obs[k] = out.observation;
                }
            }
        }

        let mut batch = RolloutBatch::default();
        for k in 0..cfg.n_envs {
            if seg_rew[k].is_empty() {
                continue;
            }
            let last_done = *seg_done[k].last().unwrap();
            let bootstrap = if last_done { 0.0 } else { mlp_forward(&params, &normalizer.normalize(&obs[k]))?.value };
            let returns = n_step_returns(&seg_rew[k], &seg_done[k], bootstrap, cfg.gamma);
            batch.obs.append(&mut seg_obs[k]);
            batch.actions.append(&mut seg_act[k]);
            batch.returns.extend(returns);
        }
        let update = stats.updates.len();
        stats.updates.push(a2c_update(&mut params, &mut optimizer, &batch, cfg, update)?);
    }

    Ok(TrainedAgent { params, normalizer, config: cfg.clone(), stats })
}

/// Policy backed by trained parameters. Deterministic by default (acts with
/// the Gaussian mean); set `deterministic = false` to sample.
#[derive(Debug, Clone, PartialEq)]
pub struct A2CPolicy {
    pub params: MlpParams,
    pub normalizer: ObsNormalizer,
    pub deterministic: bool,
    label: String,
}

impl A2CPolicy {
    pub fn new(params: MlpParams, normalizer: ObsNormalizer, label: impl Into<String>) -> Self {
        A2CPolicy { params, normalizer, deterministic: true, label: label.into() }
    }
}

impl A2CPolicy {
    pub(crate) fn label_string(&self) -> String {
        self.label.clone()
    }
}

impl Policy for A2CPolicy {
    fn label(&self) -> &str {
        &self.label
    }

    fn act(&mut self, observation: &[f64], rng: &mut dyn RngCore) -> Action {
        let x = self.normalizer.normalize(observation);
        let fwd = mlp_forward(&self.params, &x).expect("observation length matches network input");
        let a = if self.deterministic { fwd.mean } else { sample_action(&fwd.mean, &fwd.log_std, rng) };
        Action(a).clamped()
    }
}
