"""Tool version, recorded in every run manifest."""

VERSION = "1.0.0"
