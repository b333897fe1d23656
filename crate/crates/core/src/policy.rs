use crate::expert::{expert_action_with, ExpertConfig};
use crate::rng::Rng;
use crate::sim::{Env, NUM_ACTIONS};

/// Anything that picks an action for the current environment state.
///
/// Policies are shared across evaluation workers, so `act` takes `&self`; stochastic policies
/// draw from the per-episode `rng` handed in by the caller.
pub trait Policy: Sync {
    fn name(&self) -> String;
    fn act(&self, env: &Env, rng: &mut Rng) -> usize;
}

#[derive(Debug, Clone, Default)]
pub struct ExpertPolicy {
    pub config: ExpertConfig,
}

impl Policy for ExpertPolicy {
    fn name(&self) -> String {
        "expert".into()
    }

    fn act(&self, env: &Env, _rng: &mut Rng) -> usize {
        expert_action_with(env.config(), &self.config, &env.state().observation()).index()
    }
}

/// Uniform over all 57 actions, legal or not.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomPolicy;

pub fn random_act(rng: &mut Rng) -> usize {
    rng.below(NUM_ACTIONS as u64) as usize
}

impl Policy for RandomPolicy {
    fn name(&self) -> String {
        "random".into()
    }

    fn act(&self, _env: &Env, rng: &mut Rng) -> usize {
        random_act(rng)
    }
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn act(&self, env: &Env, rng: &mut Rng) -> usize {
        (**self).act(env, rng)
    }
}

/// Argmax with ties going to the lowest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
