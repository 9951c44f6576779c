"""Configuration, errors, hashing and the sampler pipeline."""
