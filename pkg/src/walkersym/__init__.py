"""Symmetries of three-dimensional strictly Walker Lorentzian manifolds."""
