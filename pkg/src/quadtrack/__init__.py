"""Quadrotor tracking-mission simulation and performance toolkit."""
