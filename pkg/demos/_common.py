"""Shared output directory for the demo scripts."""

import os

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "out")
os.makedirs(OUT, exist_ok=True)


def path(name):
    return os.path.join(OUT, name)
