"""Compositional invariant checking for networks of timed components."""

from .formula import parse_formula, to_text
from .model import SystemModel, compose, load_model, parse_model, resolve_model
from .oracle import explore, oracle_check, oracle_holds_invariant, oracle_reach
from .solver import check_sat, equivalent, implies, project
from .verifier import Options, VerificationReport, check, global_invariant

__version__ = "0.1.0"

__all__ = [
    "Options", "SystemModel", "VerificationReport", "check", "check_sat", "compose", "equivalent",
    "explore", "global_invariant", "implies", "load_model", "oracle_check", "oracle_holds_invariant",
    "oracle_reach", "parse_formula", "parse_model", "project", "resolve_model", "to_text",
]
