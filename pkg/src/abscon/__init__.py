"""Composable abstract domains for constraint solving, with a flexible job shop front-end."""

from .formula import Var, at, conj, disj, eq, ge, gt, le, lt, ne
from .lattice import Interval, SolverError, TRUE, FALSE, UNKNOWN
from .box import Box
from .octagon import Octagon
from .ipc import IPC
from .logic import LogicCompletion
from .products import DelayedProduct, DirectProduct, SharedDecl, SharedProduct
from .search import Strategy, minimize, solve

__version__ = "0.1.0"
