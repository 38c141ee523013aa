"""segbench: interactive image-segmentation workbench and benchmark harness."""

__version__ = "0.1.0"
