"""Desk-scale closed-loop V2G coordination stack.

Subpackages mirror the system layers: wireless diagnostics codec
(telemetry), per-vehicle battery/mobility model (vehicle), emulated
pub/sub transport (bus), charge-point protocol gateway (ocpp), the
aggregation + scheduling backend (optimizer) and the scenario engine
with its HTTP API and CLI (service).
"""

__version__ = "0.1.0"
