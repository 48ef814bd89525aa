"""Path-based network optimization toolkit.

Workflow: model a topology and traffic classes, enumerate and select
candidate paths per class, assemble an LP/ILP from constraint templates,
solve it with the bundled exact solver, and translate path fractions into
prefix-split forwarding rules. A FastAPI service wraps the pipeline; the
CLI is a thin client of that service.
"""

__version__ = "0.1.0"
