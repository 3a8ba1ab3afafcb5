"""Billing laboratory.

Binary-power traffic-class encoding/decoding, a simulated operator
(flow classification, zero-rating, rounding, CDR delay, HR/LBO
roaming), and the measurement showcases as runnable scenarios.
"""

from .encoding import (
    TrafficClassPlan,
    TransferStep,
    Ambiguous,
    NegativeBilled,
    encode_classes,
    decode_billed,
    round_up,
)
from .ipclass import IpClass, ParseError, classify_ip
from .billing import (
    BillingScenario,
    OperatorConfig,
    Classifier,
    RoamingMode,
    Flow,
    Cdr,
    BillingSimulator,
    billing_simulate,
    load_scenario_config,
    scenario_config_to_dict,
)
from .httpapi import BillingHttp, BillingClient

__all__ = [
    "TrafficClassPlan",
    "TransferStep",
    "Ambiguous",
    "NegativeBilled",
    "encode_classes",
    "decode_billed",
    "round_up",
    "IpClass",
    "ParseError",
    "classify_ip",
    "BillingScenario",
    "OperatorConfig",
    "Classifier",
    "RoamingMode",
    "Flow",
    "Cdr",
    "BillingSimulator",
    "billing_simulate",
    "load_scenario_config",
    "scenario_config_to_dict",
    "BillingHttp",
    "BillingClient",
]
