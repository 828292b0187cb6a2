"""rydsim: desk-scale simulation stack for 2D Rydberg-array antiferromagnets."""

__version__ = "0.1.0"
