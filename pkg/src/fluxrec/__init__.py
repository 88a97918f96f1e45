"""Provably stable flux-reconstruction / DG discretizations for linear
advection on curvilinear tensor-product meshes."""

__version__ = "0.1.0"
