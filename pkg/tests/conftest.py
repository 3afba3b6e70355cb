"""Shared fixtures and test path setup."""

import os
import sys

sys.path.insert(0, os.path.dirname(__file__))
