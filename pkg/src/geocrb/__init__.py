"""Quantum geometric tensor, characterization number and attainable multiparameter bounds."""
__version__ = "0.1.0"

from .errors import GeoCRBError
from .models import StateModel, get_model, qubit_model, qutrit_model, ququart_model, unitary_family
from .geometry import QGTensor, qgt, split, chern_number, dd_invariant
from .estimation import BoundReport, bounds_at, gamma_spectrum, holevo_sandwich, attainable_qcrb

__all__ = [
    "GeoCRBError",
    "StateModel",
    "get_model",
    "qubit_model",
    "qutrit_model",
    "ququart_model",
    "unitary_family",
    "QGTensor",
    "qgt",
    "split",
    "chern_number",
    "dd_invariant",
    "BoundReport",
    "bounds_at",
    "gamma_spectrum",
    "holevo_sandwich",
    "attainable_qcrb",
]
