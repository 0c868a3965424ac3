from .messages import Kind, ProtocolMessage, RejectReason
from .node import (
    PHASE_ISSUANCE,
    PHASE_PARAMS,
    PHASE_PUBLISH,
    CostReport,
    DuNode,
    NodeConfig,
    Roster,
    bootstrap,
    handle_key_request,
    issue_all_keys,
    measure_bootstrap_cost,
    request_key,
)
from .transport import Endpoint, PhaseCost, SimulatedNetwork, Transport

__all__ = [
    "Kind", "ProtocolMessage", "RejectReason", "PHASE_ISSUANCE", "PHASE_PARAMS",
    "PHASE_PUBLISH", "CostReport", "DuNode", "NodeConfig", "Roster", "bootstrap",
    "handle_key_request", "issue_all_keys", "measure_bootstrap_cost", "request_key",
    "Endpoint", "PhaseCost", "SimulatedNetwork", "Transport",
]
