"""Gradient flows, forms and moduli spaces on the sphere."""
