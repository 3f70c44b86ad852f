"""Cluster model: resource vectors, servers, container leases and their lifecycle.

A container lease walks the six-state lifecycle
New -> Reserved -> Allocated -> Acquired -> Running -> Completed.
Its resource demand is charged against the hosting server from Reserved
through Running and returned at Completed.  Independently of the
k-dimensional vector bookkeeping, every lease occupies exactly one logical
container slot; the cluster's slot total is the number of unit containers
(one of each resource) its servers can host.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import ConfigurationError, LifecycleError, SchedulerBugError


@dataclass(frozen=True)
class ResourceVector:
    """A k-dimensional nonnegative quantity of resources."""

    amounts: tuple[int, ...]

    def __post_init__(self):
        if len(self.amounts) < 1:
            raise ConfigurationError("resource vector must have at least one component")
        if any(a < 0 for a in self.amounts):
            raise ConfigurationError(f"negative resource amount in {self.amounts}")

    @classmethod
    def of(cls, *amounts: int) -> "ResourceVector":
        return cls(tuple(int(a) for a in amounts))

    def __len__(self) -> int:
        return len(self.amounts)

    def _check_dim(self, other: "ResourceVector") -> None:
        if len(self.amounts) != len(other.amounts):
            raise ConfigurationError(
                f"dimension mismatch: {len(self.amounts)} vs {len(other.amounts)}"
            )

    def fits_within(self, other: "ResourceVector") -> bool:
        """Componentwise self <= other."""
        self._check_dim(other)
        return all(a <= b for a, b in zip(self.amounts, other.amounts))

    def __add__(self, other: "ResourceVector") -> "ResourceVector":
        self._check_dim(other)
        return ResourceVector(tuple(a + b for a, b in zip(self.amounts, other.amounts)))

    def __sub__(self, other: "ResourceVector") -> "ResourceVector":
        self._check_dim(other)
        return ResourceVector(tuple(a - b for a, b in zip(self.amounts, other.amounts)))


class LeaseState(enum.Enum):
    NEW = "New"
    RESERVED = "Reserved"
    ALLOCATED = "Allocated"
    ACQUIRED = "Acquired"
    RUNNING = "Running"
    COMPLETED = "Completed"


LIFECYCLE_ORDER = [
    LeaseState.NEW,
    LeaseState.RESERVED,
    LeaseState.ALLOCATED,
    LeaseState.ACQUIRED,
    LeaseState.RUNNING,
    LeaseState.COMPLETED,
]

# states during which the lease's demand is charged against its server
CHARGED_STATES = frozenset(
    {LeaseState.RESERVED, LeaseState.ALLOCATED, LeaseState.ACQUIRED, LeaseState.RUNNING}
)


def successor_state(state: LeaseState) -> LeaseState | None:
    idx = LIFECYCLE_ORDER.index(state)
    if idx + 1 >= len(LIFECYCLE_ORDER):
        return None
    return LIFECYCLE_ORDER[idx + 1]


@dataclass
class ContainerLease:
    """One task's occupancy of one server."""

    task_id: str
    server_id: int
    demand: ResourceVector
    state: LeaseState = LeaseState.NEW
    state_timestamps: dict[LeaseState, int] = field(default_factory=dict)

    @property
    def active(self) -> bool:
        return self.state in CHARGED_STATES


@dataclass
class Server:
    """A worker server with a fixed capacity and a running availability."""

    server_id: int
    capacity: ResourceVector
    available: ResourceVector

    def can_place(self, demand: ResourceVector) -> bool:
        return demand.fits_within(self.available)

    def charge(self, demand: ResourceVector) -> None:
        if not self.can_place(demand):
            raise SchedulerBugError(
                f"server {self.server_id}: demand {demand.amounts} exceeds "
                f"available {self.available.amounts}"
            )
        self.available = self.available - demand

    def release(self, demand: ResourceVector) -> None:
        released = self.available + demand
        if not released.fits_within(self.capacity):
            raise SchedulerBugError(
                f"server {self.server_id}: release of {demand.amounts} exceeds capacity"
            )
        self.available = released


def can_place(demand: ResourceVector, server: Server) -> bool:
    """True iff demand fits componentwise into the server's availability."""
    return server.can_place(demand)


class ClusterState:
    """Mutable cluster state: servers, leases, current tick.

    Single-owner: one simulation mutates one ClusterState; never shared.
    """

    def __init__(self, capacities: list[ResourceVector]):
        if not capacities:
            raise ConfigurationError("cluster needs at least one server")
        k = len(capacities[0])
        for cap in capacities:
            if len(cap) != k:
                raise ConfigurationError("all server capacities must share one dimension")
        self.servers = [Server(i, cap, cap) for i, cap in enumerate(capacities)]
        self.leases: dict[str, ContainerLease] = {}
        self.tick = 0
        # uniform container slots: one unit container takes 1 of each resource
        self.total_slots = sum(min(s.capacity.amounts) for s in self.servers)

    @property
    def active_lease_count(self) -> int:
        return sum(1 for lease in self.leases.values() if lease.active)

    @property
    def available_slots(self) -> int:
        return self.total_slots - self.active_lease_count

    def server(self, server_id: int) -> Server:
        try:
            return self.servers[server_id]
        except IndexError:
            raise ConfigurationError(f"no server with id {server_id}") from None

    def reserve(self, task_id: str, demand: ResourceVector, server_id: int, tick: int) -> ContainerLease:
        """Create a lease for task_id on server_id, charging its demand."""
        existing = self.leases.get(task_id)
        if existing is not None and existing.state is not LeaseState.COMPLETED:
            raise SchedulerBugError(f"task {task_id} already holds a lease")
        if existing is not None:
            raise SchedulerBugError(f"task {task_id} may hold at most one lease over its lifetime")
        if self.available_slots <= 0:
            raise SchedulerBugError(f"no container slot available for task {task_id} at tick {tick}")
        server = self.server(server_id)
        server.charge(demand)  # raises SchedulerBugError on infeasible placement
        lease = ContainerLease(task_id=task_id, server_id=server_id, demand=demand)
        lease.state_timestamps[LeaseState.NEW] = tick
        lease.state = LeaseState.RESERVED
        lease.state_timestamps[LeaseState.RESERVED] = tick
        self.leases[task_id] = lease
        return lease

    def advance_lease(self, lease: ContainerLease, new_state: LeaseState, tick: int) -> ContainerLease:
        expected = successor_state(lease.state)
        if expected is not new_state:
            raise LifecycleError(
                f"task {lease.task_id}: illegal transition {lease.state.value} -> {new_state.value}"
            )
        prev_tick = lease.state_timestamps.get(lease.state)
        if prev_tick is not None and tick < prev_tick:
            raise LifecycleError(
                f"task {lease.task_id}: timestamp for {new_state.value} precedes {lease.state.value}"
            )
        lease.state = new_state
        lease.state_timestamps[new_state] = tick
        if new_state is LeaseState.COMPLETED:
            self.server(lease.server_id).release(lease.demand)
        return lease

    def check_conservation(self) -> None:
        """Assert the slot and vector accounting invariants; raises on breach."""
        for server in self.servers:
            charged = ResourceVector(tuple(0 for _ in server.capacity.amounts))
            for lease in self.leases.values():
                if lease.active and lease.server_id == server.server_id:
                    charged = charged + lease.demand
            if server.available + charged != server.capacity:
                raise SchedulerBugError(
                    f"server {server.server_id}: availability out of sync with leases"
                )
        if self.available_slots + self.active_lease_count != self.total_slots:
            raise SchedulerBugError("slot conservation violated")
