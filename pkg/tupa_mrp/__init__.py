"""TUPA-MRP - parse sentences into meaning representation graphs, one transition at a time."""

__version__ = "0.1.0"
