"""
Service Layer

Operations of the toolchain: formula manipulation, proof checking, model
enumeration, saturation, dualization, proof search and the dataset pipeline.
"""
