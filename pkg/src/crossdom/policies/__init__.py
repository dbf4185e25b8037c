"""Actor-critic learners, the hierarchical scheduler and the baselines."""
from .agents import ActorCriticBank, Experience, ExperienceBuffer, LayerConfig
from .checkpoint import CheckpointError, load_policy, read_policy, save_policy
from .nets import (
    Mlp,
    RmsProp,
    actor_loss,
    advantage,
    critic_loss,
    forward_probs,
    forward_value,
    masked_softmax,
    orthogonal_init,
    rmsprop_step,
    td_target,
)
from .schedulers import (
    SCHEDULERS,
    BtsScheduler,
    HicmsScheduler,
    IcmsScheduler,
    IdmsScheduler,
    NcmsScheduler,
    Scheduler,
    SlotDecision,
    baseline_policy,
    make_scheduler,
)
from .training import EpisodeResult, hicms_train, run_episode, run_episodes
