"""Order-N integrator network state-space assembly.

State ordering is all positions, then all first derivatives, and so on;
the index arithmetic j <-> j + k*n throughout the package depends on it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, ModelAssemblyError, NetworkFileError
from .graph import CutsetPlan, WeightedDigraph, laplacian_stack


@dataclass(frozen=True)
class IntegratorNetwork:
    """An N-th order integrator network with actuation and measurement sets.

    The coupling matrices are stored explicitly so non-Laplacian models
    (generic diagonals, same sparsity) are first-class; use from_graph
    for the standard Laplacian form.
    """

    order: int
    graph: WeightedDigraph
    actuation: tuple
    measurement: tuple
    laplacians: tuple = field(default=None)

    def __post_init__(self):
        if self.order < 2:
            raise InvalidInputError(f"network order must be >= 2, got {self.order}")
        act = tuple(int(a) for a in self.actuation)
        meas = tuple(int(b) for b in self.measurement)
        object.__setattr__(self, "actuation", act)
        object.__setattr__(self, "measurement", meas)
        n = self.graph.n
        for v in act + meas:
            if not 1 <= v <= n:
                raise InvalidInputError(f"node {v} outside 1..{n}")
        if len(set(act)) != len(act) or len(set(meas)) != len(meas):
            raise InvalidInputError("repeated node in actuation or measurement set")
        if set(act) & set(meas):
            raise InvalidInputError("actuation and measurement sets overlap")
        if self.laplacians is None:
            mats = tuple(laplacian_stack(self.graph, self.order))
        else:
            mats = tuple(np.asarray(L, dtype=float) for L in self.laplacians)
            if len(mats) != self.order:
                raise ModelAssemblyError(
                    f"need {self.order} coupling matrices, got {len(mats)}")
            allowed = {(v - 1, u - 1) for (u, v, _) in self.graph.edges}
            for k, L in enumerate(mats):
                if L.shape != (n, n):
                    raise ModelAssemblyError(
                        f"coupling matrix {k} has shape {L.shape}, expected {(n, n)}")
                off = np.argwhere(L != 0.0)
                for i, j in off:
                    if i != j and (int(i), int(j)) not in allowed:
                        raise ModelAssemblyError(
                            f"matrix {k} couples nodes {j + 1}->{i + 1} without an edge")
        object.__setattr__(self, "laplacians", mats)

    @classmethod
    def from_graph(cls, graph: WeightedDigraph, actuation, measurement,
                   order: int | None = None) -> "IntegratorNetwork":
        order = graph.order if order is None else order
        return cls(order=order, graph=graph, actuation=tuple(actuation),
                   measurement=tuple(measurement))

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def q(self) -> int:
        return len(self.actuation)

    @property
    def m(self) -> int:
        return len(self.measurement)

    @property
    def state_dim(self) -> int:
        return self.order * self.n

    def is_laplacian_form(self, tol: float = 1e-12) -> bool:
        """True when every coupling matrix has (near-)zero row sums."""
        return all(np.abs(L.sum(axis=1)).max() <= tol * max(1.0, np.abs(L).max())
                   for L in self.laplacians)

    def input_matrix_block(self) -> np.ndarray:
        Bh = np.zeros((self.n, self.q))
        for j, r in enumerate(self.actuation):
            Bh[r - 1, j] = 1.0
        return Bh

    def output_matrix_block(self, nodes=None) -> np.ndarray:
        nodes = self.measurement if nodes is None else tuple(nodes)
        Ch = np.zeros((len(nodes), self.n))
        for j, r in enumerate(nodes):
            Ch[j, r - 1] = 1.0
        return Ch


@dataclass(frozen=True)
class FeedbackGain:
    """Real static state-feedback gain; rows are per-actuator gain vectors."""

    matrix: np.ndarray
    realness_residual: float = 0.0

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=float)
        if not np.isfinite(M).all():
            raise ModelAssemblyError("gain matrix contains non-finite entries")
        object.__setattr__(self, "matrix", M)

    @property
    def shape(self):
        return self.matrix.shape


def assemble(network: IntegratorNetwork):
    """State-space triple (A, B, C) of the network.

    A carries identity super-diagonal blocks and the negated coupling
    matrices in its bottom block row; B feeds the top derivative only;
    C is block diagonal with one selector block per derivative order.
    """
    n, N = network.n, network.order
    d = network.state_dim
    A = np.zeros((d, d))
    for k in range(N - 1):
        A[k * n:(k + 1) * n, (k + 1) * n:(k + 2) * n] = np.eye(n)
    for k, L in enumerate(network.laplacians):
        A[(N - 1) * n:, k * n:(k + 1) * n] = -L
    B = np.zeros((d, network.q))
    B[(N - 1) * n:, :] = network.input_matrix_block()
    C = np.kron(np.eye(N), network.output_matrix_block())
    return A, B, C


def cutset_output(network: IntegratorNetwork, plan: CutsetPlan) -> np.ndarray:
    """Output matrix of the cutset-measurement model (selects Vcut rows)."""
    if plan.n != network.n:
        raise ModelAssemblyError(
            f"plan covers {plan.n} nodes, network has {network.n}")
    return np.kron(np.eye(network.order), network.output_matrix_block(plan.vcut))


def closed_loop(A: np.ndarray, B: np.ndarray, F: np.ndarray) -> np.ndarray:
    """A + B F; only the bottom block row of A can change."""
    A = np.asarray(A)
    B = np.asarray(B)
    F = np.asarray(F)
    if A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0] or \
            F.shape != (B.shape[1], A.shape[1]):
        raise ModelAssemblyError(
            f"dimension mismatch: A {A.shape}, B {B.shape}, F {F.shape}")
    return A + B @ F


def dump_matrices(network: IntegratorNetwork) -> str:
    """Dense row-major text of (A, B, C) for debugging."""
    A, B, C = assemble(network)
    chunks = []
    for name, M in (("A", A), ("B", B), ("C", C)):
        chunks.append(f"{name} {M.shape[0]}x{M.shape[1]}")
        chunks.extend(" ".join(repr(float(x)) for x in row) for row in M)
    return "\n".join(chunks) + "\n"


def network_to_dict(network: IntegratorNetwork) -> dict:
    """Plain-dict form matching the network file schema."""
    return {
        "order": network.order,
        "n": network.n,
        "edges": [
            {"from": u, "to": v, "weights": list(ws)}
            for (u, v, ws) in network.graph.edges
        ],
        "actuation": list(network.actuation),
        "measurement": list(network.measurement),
    }


def network_from_dict(data: dict) -> IntegratorNetwork:
    try:
        order = int(data["order"])
        n = int(data["n"])
        edges = tuple(
            (int(e["from"]), int(e["to"]), tuple(float(w) for w in e["weights"]))
            for e in data["edges"]
        )
        actuation = tuple(int(a) for a in data["actuation"])
        measurement = tuple(int(b) for b in data["measurement"])
    except (KeyError, TypeError, ValueError) as exc:
        raise NetworkFileError(f"malformed network data: {exc}") from exc
    for (u, v, ws) in edges:
        if len(ws) != order:
            raise NetworkFileError(
                f"edge ({u},{v}) carries {len(ws)} weights, file order is {order}")
    graph = WeightedDigraph(n=n, edges=edges)
    return IntegratorNetwork.from_graph(graph, actuation, measurement, order=order)


def load_network(path) -> IntegratorNetwork:
    """Read a network file (JSON with order/n/edges/actuation/measurement)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise NetworkFileError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFileError(f"{path} is not valid JSON: {exc}") from exc
    return network_from_dict(data)


def save_network(network: IntegratorNetwork, path) -> None:
    Path(path).write_text(
        json.dumps(network_to_dict(network), indent=2, sort_keys=True) + "\n")
