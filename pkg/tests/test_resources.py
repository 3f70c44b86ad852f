"""Cluster state, container lifecycle, and slot accounting."""

import pytest
from hypothesis import given, strategies as st

from reservesim import ClusterState, LeaseState, ResourceVector
from reservesim.errors import LifecycleError, SchedulerBugError
from reservesim.resources import CHARGED_STATES, LIFECYCLE_ORDER, successor_state


def make_cluster(caps=((4, 8), (2, 2))):
    return ClusterState(tuple(ResourceVector(c) for c in caps))


class TestResourceVector:
    def test_fits_within(self):
        assert ResourceVector.of(1, 2).fits_within(ResourceVector.of(1, 2))
        assert not ResourceVector.of(2, 1).fits_within(ResourceVector.of(1, 2))

    def test_arithmetic(self):
        v = ResourceVector.of(3, 4) - ResourceVector.of(1, 1)
        assert v == ResourceVector.of(2, 3)
        assert v + ResourceVector.of(1, 1) == ResourceVector.of(3, 4)


class TestLifecycle:
    def test_order_is_six_states(self):
        assert len(LIFECYCLE_ORDER) == 6
        assert LIFECYCLE_ORDER[0] is LeaseState.NEW
        assert LIFECYCLE_ORDER[-1] is LeaseState.COMPLETED

    def test_successors_chain(self):
        state = LeaseState.NEW
        seen = [state]
        while (state := successor_state(state)) is not None:
            seen.append(state)
        assert seen == list(LIFECYCLE_ORDER)

    def test_charged_states_exclude_endpoints(self):
        assert LeaseState.NEW not in CHARGED_STATES
        assert LeaseState.COMPLETED not in CHARGED_STATES
        assert LeaseState.RESERVED in CHARGED_STATES
        assert LeaseState.RUNNING in CHARGED_STATES

    def test_no_skipping_states(self):
        cluster = make_cluster()
        lease = cluster.reserve("t0", ResourceVector.of(1, 1), 0, tick=0)
        with pytest.raises(LifecycleError):
            cluster.advance_lease(lease, LeaseState.RUNNING, tick=1)

    def test_no_regression(self):
        cluster = make_cluster()
        lease = cluster.reserve("t0", ResourceVector.of(1, 1), 0, tick=0)
        cluster.advance_lease(lease, LeaseState.ALLOCATED, tick=1)
        with pytest.raises(LifecycleError):
            cluster.advance_lease(lease, LeaseState.RESERVED, tick=2)

    def test_timestamps_non_decreasing(self):
        cluster = make_cluster()
        lease = cluster.reserve("t0", ResourceVector.of(1, 1), 0, tick=3)
        with pytest.raises(LifecycleError):
            cluster.advance_lease(lease, LeaseState.ALLOCATED, tick=2)


class TestSlotAccounting:
    def test_total_slots_is_min_component_sum(self):
        # server 0 can host min(4, 8) = 4 slots, server 1 min(2, 2) = 2
        assert make_cluster().total_slots == 6

    def test_reserve_charges_and_complete_releases(self):
        cluster = make_cluster()
        lease = cluster.reserve("t0", ResourceVector.of(2, 2), 0, tick=0)
        assert cluster.available_slots == 5
        assert cluster.server(0).available == ResourceVector.of(2, 6)
        for state in LIFECYCLE_ORDER[2:]:
            lease = cluster.advance_lease(lease, state, tick=1)
        assert cluster.available_slots == 6
        assert cluster.server(0).available == ResourceVector.of(4, 8)

    def test_one_lease_per_task_ever(self):
        cluster = make_cluster()
        cluster.reserve("t0", ResourceVector.of(1, 1), 0, tick=0)
        with pytest.raises(SchedulerBugError):
            cluster.reserve("t0", ResourceVector.of(1, 1), 1, tick=1)

    def test_overcommit_rejected(self):
        cluster = make_cluster(caps=((1, 1),))
        cluster.reserve("t0", ResourceVector.of(1, 1), 0, tick=0)
        with pytest.raises(SchedulerBugError):
            cluster.reserve("t1", ResourceVector.of(1, 1), 0, tick=0)

    def test_conservation_check_passes(self):
        cluster = make_cluster()
        cluster.reserve("t0", ResourceVector.of(1, 1), 0, tick=0)
        cluster.check_conservation()


@given(
    demands=st.lists(
        st.tuples(st.integers(1, 2), st.integers(1, 2)), min_size=1, max_size=6
    )
)
def test_active_leases_never_exceed_slots(demands):
    cluster = make_cluster()
    placed = 0
    for i, demand in enumerate(demands):
        vec = ResourceVector(demand)
        target = next(
            (s.server_id for s in cluster.servers if vec.fits_within(s.available)),
            None,
        )
        if target is None or cluster.available_slots == 0:
            continue
        cluster.reserve(f"t{i}", vec, target, tick=i)
        placed += 1
    assert cluster.active_lease_count == placed
    assert cluster.active_lease_count + cluster.available_slots == cluster.total_slots
    cluster.check_conservation()
