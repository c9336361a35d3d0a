"""Byzantine fault-tolerant clock synchronization: protocol core plus a
deterministic discrete-event simulator for AS-level multipath networks."""

__version__ = "0.1.0"
