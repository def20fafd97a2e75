import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rtfmt.environments import ENV_PARAMS, make_maze, make_mine
from rtfmt.geometry import VERTICAL_SWEEP, Config, DynamicObstacle, RobotState, dist
from rtfmt.planner import PlannerParams, RTFMTPlanner
from rtfmt.simulator import (Mode, Scenario, SimParams, fresh_copy, load_scenario,
                             run_simulation, save_scenario, step_dynamics, step_robot,
                             trace_csv)

from oracles import flood_connected
from worlds import disc, empty_world


@pytest.mark.parametrize("make,cell", [(make_maze, 0.25), (make_mine, 0.5)])
def test_environment_connected_and_bounded(make, cell):
    for seed in (0, 7):
        w = make(seed)
        assert flood_connected(w, w.start, w.goal, cell)
        for o in w.obstacles:
            assert 0 <= o.xmin and o.xmax <= w.bounds.width
            assert 0 <= o.ymin and o.ymax <= w.bounds.height


def test_environment_parameters():
    maze, mine = make_maze(0), make_mine(0)
    assert (maze.robot.speed, maze.robot.radius) == (2.0, 0.5)
    assert (mine.robot.speed, mine.robot.radius) == (4.0, 1.5)
    assert (ENV_PARAMS["maze"].r_b, ENV_PARAMS["maze"].r_o) == (2.0, 10.0)
    assert (ENV_PARAMS["mine"].r_b, ENV_PARAMS["mine"].r_o) == (14.0, 50.0)
    assert all(o.speed == 1.0 for o in maze.dynamic)
    assert all(o.speed == 2.0 and o.policy == VERTICAL_SWEEP for o in mine.dynamic)
    for o in mine.dynamic:
        up = o.center.y <= 0.5 * mine.bounds.height
        assert o.heading == (Config(0.0, 1.0) if up else Config(0.0, -1.0))
    assert make_maze(0, dynamic=False).dynamic == []


def test_step_dynamics_examples():
    w = make_maze(3)
    before = [o.center for o in w.dynamic]
    step_dynamics(w, 0.0, np.random.default_rng(0))
    assert [o.center for o in w.dynamic] == before
    step_dynamics(w, 0.05, np.random.default_rng(0))
    for a, o in zip(before, w.dynamic):
        assert dist(a, o.center) == pytest.approx(o.speed * 0.05)
    m = make_mine(0)
    ob = m.dynamic[0]
    ob.center = Config(ob.center.x, m.bounds.height - ob.radius - 1.0)
    ob.heading = Config(0.0, -1.0)
    y = ob.center.y
    step_dynamics(m, 0.1)
    assert ob.center.y < y


@given(st.integers(0, 10**6), st.sampled_from([make_maze, make_mine]))
def test_obstacles_stay_in_bounds(seed, make):
    w = make(seed % 100)
    rng = np.random.default_rng(seed)
    for _ in range(300):
        step_dynamics(w, 0.05, rng)
        for o in w.dynamic:
            assert o.radius <= o.center.x <= w.bounds.width - o.radius
            assert o.radius <= o.center.y <= w.bounds.height - o.radius


def test_step_robot():
    r = RobotState(Config(0, 0), 2.0, 0.5)
    assert step_robot(r, Config(0, 0), 0.1) == 0.0
    assert step_robot(r, Config(10, 0), 0.1) == pytest.approx(0.2)
    assert r.position == Config(0.2, 0.0) or r.position.x == pytest.approx(0.2)
    step_robot(r, Config(0.3, 0.0), 0.1)
    assert r.position == Config(0.3, 0.0)


def rtfmt_for(world, n=300, seed=0):
    return RTFMTPlanner(world, n, PlannerParams(r_b=1.0, r_o=5.0,
                                                near_root_threshold=world.robot.radius), seed)


def test_empty_world_real_time():
    w = empty_world(20.0, 0.3, speed=2.0)
    trace = []
    m = run_simulation(Scenario(w), rtfmt_for(w), Mode.REAL_TIME, trace=trace)
    straight = dist(w.start, w.goal)
    assert m.success and m.failure_reason == ""
    assert m.executed_cost <= 1.05 * straight
    assert m.executed_cost >= straight - 0.3
    # per-tick displacements add up to the executed cost
    pts = [(1.0, 1.0)] + [(r[1], r[2]) for r in trace]
    assert sum(dist(a, b) for a, b in zip(pts, pts[1:])) == pytest.approx(m.executed_cost,
                                                                            abs=1e-9)
    # straight-line travel time plus slack for the first few ticks
    assert m.arrival_time <= straight / 2.0 + 2.0


def test_non_real_time_waits_for_global_path():
    w = empty_world(20.0, 0.3, speed=2.0)
    trace = []
    m = run_simulation(Scenario(w), rtfmt_for(w), Mode.NON_REAL_TIME, trace=trace)
    assert m.success
    first_move = next(r[0] for r in trace if (r[1], r[2]) != (1.0, 1.0))
    assert first_move >= m.planning_time


def test_parked_obstacle_on_goal_times_out():
    w = empty_world(20.0, 0.3, speed=2.0)
    w.dynamic = [disc(19.0, 19.0, 0.5)]
    # r_b wide enough that no edge between unblocked nodes passes the parked disc
    p = RTFMTPlanner(w, 300, PlannerParams(r_b=2.5, r_o=5.0, near_root_threshold=0.3), 0)
    m = run_simulation(Scenario(w, SimParams(max_time=20.0)), p, Mode.REAL_TIME)
    assert not m.success and m.failure_reason == "timeout"
    assert math.isnan(m.arrival_time)


def test_collision_is_reported():
    w = empty_world(20.0, 0.3, speed=2.0, goal=(10.0, 1.0))
    w.dynamic = [DynamicObstacle(Config(10.0, 1.0), 0.5, 2.0, VERTICAL_SWEEP,
                                 Config(-1.0, 0.0))]
    p = RTFMTPlanner(w, 300, PlannerParams(r_b=0.1, r_o=0.1, near_root_threshold=0.3), 0)
    m = run_simulation(Scenario(w, SimParams(max_time=20.0)), p, Mode.REAL_TIME)
    assert not m.success and m.failure_reason == "collision"


def test_two_sequential_goals():
    w = empty_world(20.0, 0.3, speed=2.0)
    p = rtfmt_for(w)
    n = len(p.tree)
    m = run_simulation(Scenario(w), p, Mode.REAL_TIME, retarget_queue=[(2.0, 18.0)])
    assert m.success
    assert dist(w.robot.position, (2.0, 18.0)) <= 0.3
    # only the second goal was inserted, nothing was resampled
    assert len(p.tree) == n + 1


def test_virtual_time_is_deterministic():
    def once():
        w = make_maze(5)
        sc = Scenario(w, SimParams(max_time=15.0), seed=5)
        return run_simulation(sc, RTFMTPlanner(w, 500, PlannerParams(), 5), Mode.REAL_TIME)
    assert once() == once()


def test_scenario_validation_and_io(tmp_path):
    w = make_maze(1)
    with pytest.raises(ValueError):
        SimParams(dt=0)
    bad = fresh_copy(Scenario(w))
    bad.world.goal = Config(10.0, 8.0)  # inside a wall
    with pytest.raises(ValueError):
        Scenario(bad.world)
    sc = Scenario(w, SimParams(dt=0.1), seed=4)
    save_scenario(sc, tmp_path / "s.json")
    back = load_scenario(tmp_path / "s.json")
    assert back.world.obstacles == w.obstacles
    assert [o.center for o in back.world.dynamic] == [o.center for o in w.dynamic]
    assert back.sim.dt == 0.1 and back.seed == 4 and back.goal_tolerance == 0.5


def test_trace_csv():
    text = trace_csv([[0.05, 1.0, 2.0, 3.0, 4.0]], 1)
    assert text.splitlines() == ["t,robot_x,robot_y,obs0_x,obs0_y", "0.05,1.0,2.0,3.0,4.0"]
