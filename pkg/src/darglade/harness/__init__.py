"""Configuration, CSV ingestion, Monte Carlo studies and the command line."""
