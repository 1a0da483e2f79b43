"""Tippy: a deterministic multi-agent DMTA lab-automation system.

Specialized agents (Supervisor, Molecule, Lab, Analysis, Report, Safety
Guardrail) coordinate over a typed tool bus to drive Design-Make-Test-Analyze
cycles against a simulated laboratory, persisted as an append-only event log.
"""

__version__ = "0.1.0"
