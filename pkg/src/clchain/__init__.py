"""Exact and simulated Cohen-Lenstra Markov chain on finite abelian p-groups."""
