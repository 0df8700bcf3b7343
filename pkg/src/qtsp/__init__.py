"""Travelling-salesman encodings for QAOA: polynomial construction, gate
scheduling, resource estimates and exact statevector experiments."""
from ._kernels import backend
from .circuits import GateSchedule, gray_sequence, round_robin, schedule
from .encodings import (EncodedProblem, Encoding, Route, TspInstance, brute_force_tsp, encode, encode_enum,
                        encode_hobo, encode_mixed, encode_qubo, h_valid_hobo, index_to_permutation,
                        permutation_to_index, random_instance)
from .optimizer import OptimizerConfig, extend_trajectory, minimize, run_experiment
from .polynomial import BinaryPolynomial, IsingPolynomial, evaluate, mul, to_ising
from .simulator import DiagonalHamiltonian, QaoaParams, StateVector, build_diagonal, qaoa_state

__version__ = "0.1.0"
