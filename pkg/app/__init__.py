"""
Observable Logic Dual Toolchain

A sequent-calculus prover for observable (geometric) logic with a proof
kernel, a forward-chaining deduction engine, the topological dual of the
proof system, and a pipeline that turns both into synthetic corpora.
"""

__version__ = "1.0.0"
