"""Live session service and REST interface over the scenario engine."""
