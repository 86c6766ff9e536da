# Experiment configuration and runner package
