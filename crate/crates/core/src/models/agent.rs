//! The DDPG shepherd agent: actor/critic with target networks, soft
//! updates, seeded Gaussian exploration noise on the policy logits, and
//! replay-batch updates.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::mlp::{softmax, Activation, MlpGrads, MlpParams};
use super::replay::{ReplayPool, Transition};
use crate::error::{Error, Result};

/// The seven scheduling actions: scale one resource up or down by one
/// step (1 core / 1 way / 1 bandwidth unit), or do nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchedulingAction {
    CoreUp,
    CoreDown,
    WayUp,
    WayDown,
    BwUp,
    BwDown,
    Idle,
}

pub const ACTION_COUNT: usize = 7;

impl SchedulingAction {
    pub fn all() -> [SchedulingAction; ACTION_COUNT] {
        use SchedulingAction::*;
        [CoreUp, CoreDown, WayUp, WayDown, BwUp, BwDown, Idle]
    }

    pub fn id(&self) -> usize {
        use SchedulingAction::*;
        match self {
            CoreUp => 0,
            CoreDown => 1,
            WayUp => 2,
            WayDown => 3,
            BwUp => 4,
            BwDown => 5,
            Idle => 6,
        }
    }

    pub fn from_id(id: usize) -> Result<Self> {
        Self::all()
            .get(id)
            .copied()
            .ok_or_else(|| Error::Config(format!("action id {id} out of range")))
    }

    pub fn name(&self) -> &'static str {
        use SchedulingAction::*;
        match self {
            CoreUp => "core_up",
            CoreDown => "core_down",
            WayUp => "way_up",
            WayDown => "way_down",
            BwUp => "bw_up",
            BwDown => "bw_down",
            Idle => "idle",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AgentConfig {
    pub gamma: f64,
    pub tau: f64,
    pub noise_mu: f64,
    pub noise_sigma: f64,
    /// Multiplicative per-episode decay of the exploration sigma.
    pub noise_decay: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub batch_size: usize,
    pub pool_capacity: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.001,
            noise_mu: 0.0,
            noise_sigma: 0.1,
            noise_decay: 0.995,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            batch_size: 64,
            pool_capacity: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct UpdateLosses {
    pub critic_loss: f64,
    pub actor_loss: f64,
}

/// Actor/critic networks, their targets, and the experience pool.
#[derive(Debug, Clone)]
pub struct AgentState {
    pub actor: MlpParams,
    pub critic: MlpParams,
    pub actor_target: MlpParams,
    pub critic_target: MlpParams,
    pub pool: ReplayPool,
    pub cfg: AgentConfig,
    actor_opt: Adam,
    critic_opt: Adam,
}

impl AgentState {
    /// Fresh agent. The critic consumes the state concatenated with the
    /// action probability vector.
    pub fn new(state_dim: usize, cfg: AgentConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let actor = MlpParams::new(state_dim, ACTION_COUNT, Activation::Softmax, 0.0, &mut rng);
        let critic = MlpParams::new(
            state_dim + ACTION_COUNT,
            1,
            Activation::Linear,
            0.0,
            &mut rng,
        );
        let actor_target = actor.clone();
        let critic_target = critic.clone();
        let actor_opt = Adam::new(&actor, cfg.actor_lr);
        let critic_opt = Adam::new(&critic, cfg.critic_lr);
        Self {
            actor,
            critic,
            actor_target,
            critic_target,
            pool: ReplayPool::new(cfg.pool_capacity),
            cfg,
            actor_opt,
            critic_opt,
        }
    }

    pub(crate) fn from_parts(
        actor: MlpParams,
        critic: MlpParams,
        actor_target: MlpParams,
        critic_target: MlpParams,
        pool: ReplayPool,
        cfg: AgentConfig,
    ) -> Self {
        let actor_opt = Adam::new(&actor, cfg.actor_lr);
        let critic_opt = Adam::new(&critic, cfg.critic_lr);
        Self {
            actor,
            critic,
            actor_target,
            critic_target,
            pool,
            cfg,
            actor_opt,
            critic_opt,
        }
    }

    /// Warm start on a new platform: copy all four networks from a
    /// pretrained agent, reset the pool and optimizer state.
    pub fn warm_start(pretrained: &AgentState, cfg: AgentConfig) -> Result<Self> {
        if !pretrained.actor.same_architecture(&pretrained.actor_target) {
            return Err(Error::Config("pretrained agent is inconsistent".into()));
        }
        Ok(Self::from_parts(
            pretrained.actor.clone(),
            pretrained.critic.clone(),
            pretrained.actor_target.clone(),
            pretrained.critic_target.clone(),
            ReplayPool::new(cfg.pool_capacity),
            cfg,
        ))
    }

    pub fn state_dim(&self) -> usize {
        self.actor.input_dim()
    }

    /// Selects an action: Gaussian noise is injected into the policy
    /// logits (pre-softmax), then the most probable action wins, ties
    /// going to the lowest action id. Pass `None` for evaluation mode.
    pub fn select_action(
        &self,
        state: &[f64],
        noise: Option<(&mut ChaCha8Rng, f64)>,
    ) -> Result<(SchedulingAction, Vec<f64>)> {
        let mut logits = self.actor.forward_logits(state)?;
        if let Some((rng, sigma)) = noise {
            if sigma > 0.0 {
                for v in logits.iter_mut() {
                    *v += self.cfg.noise_mu + sigma * gaussian(rng);
                }
            }
        }
        let probs = softmax(&logits);
        let mut best = 0;
        for (i, p) in probs.iter().enumerate() {
            if *p > probs[best] {
                best = i;
            }
        }
        Ok((SchedulingAction::from_id(best)?, probs))
    }

    pub fn remember(&mut self, t: Transition) {
        self.pool.push(t);
    }

    /// One replay-batch gradient step on the critic (MSE to the soft
    /// target `y = r + gamma * Q'(s', pi'(s'))`) and the actor (negative
    /// Q), followed by soft target updates. Returns `None` without
    /// touching anything when the pool is smaller than a batch.
    pub fn update(&mut self, rng: &mut ChaCha8Rng) -> Result<Option<UpdateLosses>> {
        let batch = self.cfg.batch_size;
        if self.pool.len() < batch {
            return Ok(None);
        }
        let idxs = self.pool.sample_indices(batch, rng);
        let inv = 1.0 / batch as f64;
        let state_dim = self.state_dim();

        // critic step
        let mut critic_grads = MlpGrads::zeros_like(&self.critic);
        let mut critic_loss = 0.0;
        for &i in &idxs {
            let t = self.pool.get(i);
            let next_action = self.actor_target.forward(&t.next_state)?;
            let mut next_in = t.next_state.clone();
            next_in.extend_from_slice(&next_action);
            let q_next = self.critic_target.forward(&next_in)?[0];
            let y = t.reward + self.cfg.gamma * q_next;

            let mut cur_in = t.state.clone();
            cur_in.extend_from_slice(&t.action_probs);
            let pass = self.critic.forward_cached(&cur_in, None)?;
            let q = pass.output()[0];
            critic_loss += (q - y) * (q - y) * inv;
            self.critic
                .backward(&pass, &[2.0 * (q - y) * inv], &mut critic_grads);
        }
        if !critic_loss.is_finite() {
            return Err(Error::TrainingDiverged(format!(
                "critic loss {critic_loss}"
            )));
        }
        self.critic_opt.step(&mut self.critic, &critic_grads);

        // actor step: minimize -Q(s, pi(s)), critic frozen
        let mut actor_grads = MlpGrads::zeros_like(&self.actor);
        let mut scratch = MlpGrads::zeros_like(&self.critic);
        let mut actor_loss = 0.0;
        for &i in &idxs {
            let t = self.pool.get(i);
            let apass = self.actor.forward_cached(&t.state, None)?;
            let action = apass.output().to_vec();
            let mut cur_in = t.state.clone();
            cur_in.extend_from_slice(&action);
            let cpass = self.critic.forward_cached(&cur_in, None)?;
            actor_loss -= cpass.output()[0] * inv;
            let d_input = self.critic.backward(&cpass, &[-inv], &mut scratch);
            self.actor
                .backward(&apass, &d_input[state_dim..], &mut actor_grads);
        }
        if !actor_loss.is_finite() {
            return Err(Error::TrainingDiverged(format!("actor loss {actor_loss}")));
        }
        self.actor_opt.step(&mut self.actor, &actor_grads);

        self.soft_update_targets();
        Ok(Some(UpdateLosses {
            critic_loss,
            actor_loss,
        }))
    }

    /// `theta_target <- tau * theta + (1 - tau) * theta_target` on both
    /// target networks.
    pub fn soft_update_targets(&mut self) {
        self.actor_target.soft_update_from(&self.actor, self.cfg.tau);
        self.critic_target
            .soft_update_from(&self.critic, self.cfg.tau);
    }
}

/// Standard normal draw via Box-Muller, fully determined by the rng.
pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn transition(reward: f64) -> Transition {
        Transition {
            state: vec![0.5; 8],
            action_probs: vec![1.0 / 7.0; 7],
            action_id: 0,
            reward,
            next_state: vec![0.4; 8],
        }
    }

    #[test]
    fn noiseless_selection_is_argmax() {
        let agent = AgentState::new(8, AgentConfig::default(), 1);
        let state = vec![0.3; 8];
        let (a1, probs) = agent.select_action(&state, None).unwrap();
        let (a2, _) = agent.select_action(&state, None).unwrap();
        assert_eq!(a1, a2);
        let max = probs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(probs[a1.id()], max);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn noisy_selection_reproducible_under_seed() {
        let agent = AgentState::new(8, AgentConfig::default(), 2);
        let state = vec![0.5; 8];
        let pick = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            agent
                .select_action(&state, Some((&mut rng, 0.5)))
                .unwrap()
                .0
        };
        assert_eq!(pick(40), pick(40));
    }

    #[test]
    fn exploration_covers_all_actions() {
        // exactly uniform actor (zero weights) with noise: every action
        // shows up within 10^4 draws
        let mut agent = AgentState::new(8, AgentConfig::default(), 3);
        for w in &mut agent.actor.weights {
            w.fill(0.0);
        }
        let state = vec![0.5; 8];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut seen = [0usize; ACTION_COUNT];
        for _ in 0..10_000 {
            let (a, _) = agent.select_action(&state, Some((&mut rng, 0.1))).unwrap();
            seen[a.id()] += 1;
        }
        assert!(seen.iter().all(|&c| c > 0), "action counts {seen:?}");
    }

    #[test]
    fn underfull_pool_is_a_noop() {
        let mut agent = AgentState::new(8, AgentConfig::default(), 4);
        agent.remember(transition(1.0));
        let before = agent.actor.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(agent.update(&mut rng).unwrap().is_none());
        assert_eq!(agent.actor, before);
    }

    #[test]
    fn tau_zero_freezes_targets_tau_one_copies() {
        let mut cfg = AgentConfig {
            batch_size: 4,
            tau: 0.0,
            ..Default::default()
        };
        let mut agent = AgentState::new(8, cfg, 5);
        for _ in 0..8 {
            agent.remember(transition(1.0));
        }
        let t0 = agent.actor_target.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        agent.update(&mut rng).unwrap().unwrap();
        assert_eq!(agent.actor_target, t0, "tau = 0 leaves targets frozen");

        cfg.tau = 1.0;
        let mut agent = AgentState::new(8, cfg, 5);
        for _ in 0..8 {
            agent.remember(transition(1.0));
        }
        agent.update(&mut rng).unwrap().unwrap();
        assert_eq!(agent.actor_target, agent.actor, "tau = 1 copies online nets");
        assert_eq!(agent.critic_target, agent.critic);
    }

    #[test]
    fn gamma_zero_target_equals_reward() {
        // with one transition and gamma 0, the critic target is exactly
        // the stored reward; after many updates Q(s, a) approaches it
        let cfg = AgentConfig {
            batch_size: 1,
            gamma: 0.0,
            critic_lr: 1e-2,
            ..Default::default()
        };
        let mut agent = AgentState::new(8, cfg, 6);
        agent.remember(transition(1.7));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut last = f64::INFINITY;
        for _ in 0..400 {
            let l = agent.update(&mut rng).unwrap().unwrap();
            last = l.critic_loss;
        }
        assert!(last < 1e-3, "critic should fit the reward, loss {last}");
    }
}
