"""Sound field reconstruction toolkit.

Cylinder-harmonic, virtual-source SVD and acoustics-informed network
reconstructors for 2-D sound fields inside a microphone array, plus the
special functions, linear algebra and experiment harness they rely on.
"""
__version__ = "0.1.0"
