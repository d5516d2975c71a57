# -*- coding: utf-8 -*-
"""
Multi-fidelity prediction of pilot decisions in two-aircraft encounters.
"""
from .utils import TOOLKIT_VERSION as __version__  # noqa: F401
