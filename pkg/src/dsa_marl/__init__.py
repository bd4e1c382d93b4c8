"""Uncoordinated multi-agent deep Q-learning for underlay cognitive-radio power allocation."""
__version__ = "0.1.0"
