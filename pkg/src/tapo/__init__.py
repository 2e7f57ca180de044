"""Layered knowledge-state engine.

Static contextual TBox/ABox reasoning with derivation traces, guard-driven
procedural transitions, trust-and-certificate-validated oracle import, and a
presheaf-of-contexts layer with restriction and gluing checks. Ships as a
library, a scenario CLI (tapo), and an HTTP session service for
human-in-the-loop runs.
"""

__version__ = "0.1.0"
