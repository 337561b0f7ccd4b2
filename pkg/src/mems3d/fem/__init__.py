"""Finite-element core: kinematics, assembly, linear solve and Newton continuation."""
