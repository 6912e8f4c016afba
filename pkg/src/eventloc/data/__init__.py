"""Packaged data files: the reference scenario set."""
