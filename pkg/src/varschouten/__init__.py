"""Exact graded variational calculus on jet spaces."""
