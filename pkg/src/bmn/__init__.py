"""Randomized and classical Beggar-my-neighbour: exact chains, graphs, simulation and cycle search."""

__version__ = "0.1.0"
