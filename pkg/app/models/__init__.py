"""
Data Models

Immutable value types for formulas, proofs, models, fact bases, sieves and
corpus records.
"""
