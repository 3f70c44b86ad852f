"""Reserve-ratio adjustment and the two-pool scheduler."""

from fractions import Fraction

from hypothesis import given, strategies as st

from reservesim import ReservationScheduler, SchedulerConfig, adjust_ratio, run
from reservesim.reservation import PendingJob

from conftest import job, phase, scenario

BOUNDS = (Fraction(1, 20), Fraction(19, 20))


def pend(demand, job_id=0, submit=0):
    return PendingJob(job_id=job_id, demand=demand, submit_tick=submit)


class TestRatioAdjustment:
    def test_sd_surplus_shrinks_reserve(self):
        # SD side holds 10 now + 5 forecast against 9 pending: surplus 6
        # of 100 slots moves to the large pool
        adj = adjust_ratio(
            Fraction(2, 10), 100, [pend(9)], [pend(50, 1)], 10, 0, 5, 0, BOUNDS
        )
        assert adj.branch == "sd_surplus"
        assert adj.delta == Fraction(2, 10) - Fraction(6, 100)

    def test_ld_surplus_grows_reserve(self):
        adj = adjust_ratio(
            Fraction(1, 10), 100, [pend(30)], [pend(9, 1)], 5, 10, 0, 4, BOUNDS
        )
        assert adj.branch == "ld_surplus"
        assert adj.delta == Fraction(1, 10) + Fraction(5, 100)

    def test_merge_absorbs_unserved_small_jobs(self):
        # SD has 4 against a 5-demand job (unserved); LD has 22 against
        # 5 + 20 pending, serving only the cheaper one and keeping 17;
        # 4 + 17 > 5 so the small job is absorbed into the merged pool
        # and the reserve grows by its demand
        adj = adjust_ratio(
            Fraction(1, 10), 100, [pend(5)], [pend(20, 1), pend(5, 2)], 4, 2, 0, 20, BOUNDS
        )
        assert adj.branch == "merge"
        assert adj.absorbed == (0,)
        assert adj.delta == Fraction(1, 10) + Fraction(5, 100)

    def test_merge_without_room_absorbs_nothing(self):
        adj = adjust_ratio(
            Fraction(1, 10), 100, [pend(50)], [pend(60, 1)], 1, 1, 0, 0, BOUNDS
        )
        assert adj.branch == "merge"
        assert adj.absorbed == ()
        assert adj.delta == Fraction(1, 10)

    def test_clamped_to_bounds(self):
        low = adjust_ratio(Fraction(1, 10), 100, [], [pend(90, 1)], 50, 0, 0, 0, BOUNDS)
        assert low.delta == BOUNDS[0]
        high = adjust_ratio(Fraction(9, 10), 100, [pend(80)], [pend(1, 1)], 0, 90, 0, 0, BOUNDS)
        assert high.delta == BOUNDS[1]

    @given(
        delta_n=st.integers(5, 95),
        p_sd=st.integers(0, 40),
        p_ld=st.integers(0, 40),
        ac_sd=st.integers(0, 20),
        ac_ld=st.integers(0, 20),
        f_sd=st.integers(0, 10),
        f_ld=st.integers(0, 10),
    )
    def test_result_always_in_bounds_and_exact(self, delta_n, p_sd, p_ld, ac_sd, ac_ld, f_sd, f_ld):
        sd = [pend(p_sd)] if p_sd else []
        ld = [pend(p_ld, 1)] if p_ld else []
        adj = adjust_ratio(
            Fraction(delta_n, 100), 100, sd, ld, ac_sd, ac_ld, f_sd, f_ld, BOUNDS
        )
        assert BOUNDS[0] <= adj.delta <= BOUNDS[1]
        assert isinstance(adj.delta, Fraction)

    def test_more_forecast_never_raises_delta_on_sd_side(self):
        # relief on the SD side can only shrink (or keep) the reserve
        base = adjust_ratio(Fraction(2, 10), 100, [pend(9)], [pend(50, 1)], 10, 0, 0, 0, BOUNDS)
        relief = adjust_ratio(Fraction(2, 10), 100, [pend(9)], [pend(50, 1)], 10, 0, 8, 0, BOUNDS)
        assert relief.delta <= base.delta


class TestReservationScheduler:
    def mixed_scenario(self):
        jobs = [
            job(0, 0, [phase(tasks=8, duration=20)]),  # large
            job(1, 1, [phase(tasks=1, duration=4)]),  # small
            job(2, 2, [phase(tasks=1, duration=4)]),  # small
            job(3, 3, [phase(tasks=8, duration=20)]),  # large
        ]
        return scenario(jobs, servers=((5,), (5,)))

    def test_small_jobs_not_stuck_behind_large(self):
        trace = run(self.mixed_scenario(), ReservationScheduler())
        by_id = {r.job_id: r for r in trace.jobs}
        assert by_id[1].category == "SD" and by_id[0].category == "LD"
        # the small jobs run long before the second large job finishes
        assert by_id[1].first_start < by_id[3].first_start

    def test_policy_rows_logged_every_tick(self):
        trace = run(self.mixed_scenario(), ReservationScheduler())
        for rec in trace.ticks:
            assert rec.policy is not None
            Fraction(rec.policy["delta"])  # parses exactly
            assert rec.policy["branch"] in ("sd_surplus", "ld_surplus", "merge", "static")

    def test_static_variant_freezes_delta(self):
        trace = run(self.mixed_scenario(), ReservationScheduler(dynamic=False))
        deltas = {rec.policy["delta"] for rec in trace.ticks}
        assert deltas == {"1/10"}

    def test_pool_accounting_every_tick(self):
        trace = run(self.mixed_scenario(), ReservationScheduler())
        for rec in trace.ticks:
            assert rec.occupied_sd + rec.occupied_ld + rec.available_slots == trace.total_slots

    def test_whole_wave_admission(self):
        # a 6-task wave cannot start partially on a 4-slot cluster shared
        # with a running task
        sc = scenario(
            [job(0, 0, [phase(tasks=1, duration=30)]), job(1, 0, [phase(tasks=6, duration=5)])],
            servers=((6,),),
        )
        trace = run(sc, ReservationScheduler())
        wave = [r for r in trace.tasks if r.job_id == 1]
        assert len({r.granted_tick for r in wave}) == 1


def test_classification_respects_theta():
    sc = scenario(
        [job(0, 0, [phase(tasks=1)]), job(1, 0, [phase(tasks=2, duration=5)])],
        servers=((10,),),
        config=SchedulerConfig(theta=0.1),
    )
    trace = run(sc, ReservationScheduler())
    by_id = {r.job_id: r for r in trace.jobs}
    assert by_id[0].category == "SD"  # 1 <= 10 * 0.1
    assert by_id[1].category == "LD"  # 2 > 10 * 0.1
