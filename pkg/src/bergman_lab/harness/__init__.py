"""Experiment configuration, verification suites, reports and the command line."""
