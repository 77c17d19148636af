"""Runtime-assurance toolkit: backup-maneuver invariant sets, blended safety
filtering, flight-dynamics simulation, and a live piloting service."""

__version__ = "0.1.0"
