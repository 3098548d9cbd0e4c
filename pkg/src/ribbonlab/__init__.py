"""ribbonlab: spatial ribbon-brush geometry kernel, simulator, and metrics suite.

Submodules:

- geom: vectors, unit quaternions, controller poses and frames
- brush: the two ribbon brush kernels and ruled quad-strip geometry
- surfaces: the ten analytic reference shapes with curvature and projection
- metrics: drawing accuracy and wrist-effort reports
- planner: coverage stroke planning and minimal-rotation orientation chains
- session: stroke/undo/redo state machine and persistence
- stats: paired t-test machinery matching the study's reporting format
- objio: OBJ export
- cli: batch entry point (simulate / compare / replay / export / serve)
- service: realtime websocket bridge for the sandbox UI
"""

__version__ = "0.1.0"
