"""Multiphysics simulation of thermally self-assembled multilayer micro-cantilevers."""

__version__ = "0.1.0"
