"""Simulation and layered geometric control of multi-quadrotor payload transport.

A rigid-body payload is carried by ``n`` quadrotors through rigid massless
links.  The package provides:

- ``geom``: SO(3)/S2 primitives (hat/vee, error maps, reprojection),
- ``dynamics``: coupled equations of motion in two equivalent forms plus a
  fixed-step RK4 integrator with manifold reprojection,
- ``controller``: payload pose outer loop, minimum-norm wrench allocation and
  per-link direction tracking,
- ``attitude``: per-quadrotor thrust/moment inner loop,
- ``certify``: numerical gain certificates for the exponential-stability
  conditions,
- ``harness`` / ``cli``: deterministic scenario runner with CSV/SVG/JSON
  outputs.

Angular velocities are written ``W`` (payload/quadrotor body rates) and ``w``
(link rates) throughout, mirroring the usual geometric-control notation.
"""

from multilift.system import GainSet, SystemParams, SystemState

__all__ = ["GainSet", "SystemParams", "SystemState", "__version__"]

__version__ = "0.1.0"
