"""Multi-domain network: layout, contact plan, states, actions, transitions and rewards."""
from crossdom.ids import SatelliteId

from .audit import ConstraintAudit, Violation
from .env import CrossDomainEnv, EpisodeLedger, Observation, SlotOutcome
from .metrics import NetworkMetrics, network_metrics
from .observe import (
    BMS_WIDTH,
    SatState4,
    build_bms_jsi,
    build_tms_jsi,
    feasible_bms,
    feasible_tms,
    sat_state,
)
from .rewards import RewardRecord, bms_reward, clip_reward, tms_reward
from .topology import (
    ConfigurationError,
    ContactPlan,
    LinkSnapshot,
    Network,
    assign_inter_domain_relays,
    build_contact_plan,
    build_network,
    select_cross_domain_satellites,
    snapshot_links,
)
from .transfer import IDLE, Decision, LinkChoice, TransferPlan, plan_transmission

__all__ = [
    "SatelliteId", "ConstraintAudit", "Violation", "CrossDomainEnv", "EpisodeLedger", "Observation",
    "SlotOutcome", "NetworkMetrics", "network_metrics", "BMS_WIDTH", "SatState4", "build_bms_jsi",
    "build_tms_jsi", "feasible_bms", "feasible_tms", "sat_state", "RewardRecord", "bms_reward",
    "clip_reward", "tms_reward", "ConfigurationError", "ContactPlan", "LinkSnapshot", "Network",
    "assign_inter_domain_relays", "build_contact_plan", "build_network", "select_cross_domain_satellites",
    "snapshot_links", "IDLE", "Decision", "LinkChoice", "TransferPlan", "plan_transmission",
]
