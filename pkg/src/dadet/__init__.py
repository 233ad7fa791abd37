"""Domain-adaptive single-stage detection at desk scale.

A compact detector with three backbone feature taps, gradient-reversed
domain classifiers in four architectural variants, a synthetic
clear-to-foggy dataset generator, VOC-style evaluation, and a training
harness exposed through a FastAPI service and a thin CLI client.
"""

__version__ = "0.1.0"
