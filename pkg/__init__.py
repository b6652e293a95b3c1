# MPC Matching, Vertex Cover and MIS Simulator
__version__ = "1.0.0"
