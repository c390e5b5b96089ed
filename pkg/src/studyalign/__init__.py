"""StudyAlign: orchestration for web-based HCI experiments.

Counterbalanced procedure generation, step-by-step participant gating
over server-sent events, interaction log ingestion, and study schema
exchange, exposed through a REST API and a CLI.
"""

__version__ = "0.1.0"
