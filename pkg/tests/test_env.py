"""Contracts of the coverage simulation: reset, dynamics, sensing, rewards."""

import networkx as nx
import numpy as np
import pytest

from swarmcover.config import EnvConfig
from swarmcover.env import (
    N_ACTIONS,
    CoverageEnv,
    acceleration_table,
    adjacency_from_positions,
    decode_action,
    is_connected,
    observation_dim,
    observation_layout,
)

DIAG = np.sqrt(0.5)


def small_config(**overrides):
    defaults = dict(world_size=60.0, n_uavs=3, n_terminals=12, episode_len=25, seed=0)
    defaults.update(overrides)
    return EnvConfig(**defaults)


class TestConfigValidation:
    def test_defaults_are_valid(self):
        EnvConfig()

    def test_radius_ordering_enforced(self):
        with pytest.raises(ValueError):
            EnvConfig(coverage_radius=20.0, sensing_radius=19.0)

    def test_positive_counts(self):
        with pytest.raises(ValueError):
            EnvConfig(n_uavs=0)
        with pytest.raises(ValueError):
            EnvConfig(episode_len=0)


class TestReset:
    def test_connected_over_many_seeds(self):
        env = CoverageEnv(EnvConfig())
        for seed in range(200):
            _, _, adj = env.reset(seed)
            assert is_connected(adj)

    def test_deterministic(self):
        env_a, env_b = CoverageEnv(EnvConfig()), CoverageEnv(EnvConfig())
        state_a = env_a.reset(42)[0]
        state_b = env_b.reset(42)[0]
        assert np.array_equal(state_a.uav_pos, state_b.uav_pos)
        assert np.array_equal(state_a.terminal_pos, state_b.terminal_pos)
        assert np.array_equal(state_a.uav_vel, state_b.uav_vel)
        assert state_a.step == state_b.step == 0

    def test_single_uav(self):
        env = CoverageEnv(small_config(n_uavs=1))
        _, _, adj = env.reset(1)
        assert np.array_equal(adj, [[1.0]])
        assert is_connected(adj)

    def test_initial_state_in_bounds_with_zero_velocity(self):
        cfg = EnvConfig()
        env = CoverageEnv(cfg)
        state, obs, _ = env.reset(9)
        assert (state.uav_pos >= 0).all() and (state.uav_pos <= cfg.world_size).all()
        assert (state.terminal_pos >= 0).all() and (state.terminal_pos <= cfg.world_size).all()
        assert np.array_equal(state.uav_vel, np.zeros_like(state.uav_vel))
        assert obs.shape == (cfg.n_uavs, observation_dim(cfg))


class TestDecodeAction:
    def test_idle(self):
        assert np.array_equal(decode_action(0), [0.0, 0.0])

    def test_east_low(self):
        assert np.allclose(decode_action(1, accel_low=0.5), [0.5, 0.0], atol=0)

    def test_northeast_high(self):
        expected = np.array([DIAG, DIAG]) * 1.0
        assert np.allclose(decode_action(10, accel_high=1.0), expected, atol=1e-15)

    def test_magnitudes(self):
        table = acceleration_table(0.5, 1.0)
        norms = np.linalg.norm(table, axis=1)
        assert norms[0] == 0.0
        assert np.allclose(norms[1:9], 0.5, atol=1e-12)
        assert np.allclose(norms[9:17], 1.0, atol=1e-12)

    def test_low_and_high_share_directions(self):
        table = acceleration_table(0.5, 1.0)
        assert np.allclose(table[9:17], 2.0 * table[1:9], atol=1e-15)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            decode_action(17)
        with pytest.raises(ValueError):
            decode_action(-1)


class TestStep:
    def test_hover_keeps_positions_and_half_energy(self):
        env = CoverageEnv(small_config())
        state, _, _ = env.reset(3)
        before = state.uav_pos.copy()
        out = env.step(np.zeros(3, dtype=int))
        assert np.array_equal(env.state.uav_pos, before)
        assert out.energy_index == 0.5
        assert state.step == 1

    def test_full_speed_energy_is_one(self):
        cfg = small_config()
        env = CoverageEnv(cfg)
        env.reset(3)
        env.set_world(
            uav_pos=[[30, 30], [10, 30], [50, 30]],
            uav_vel=[[cfg.max_speed, 0.0], [0.0, 0.0], [0.0, 0.0]],
            terminal_pos=np.full((12, 2), 1.0),
        )
        out = env.step(np.zeros(3, dtype=int))
        speeds = np.linalg.norm(env.state.uav_vel, axis=1)
        energies = 0.5 + 0.5 * speeds / cfg.max_speed
        assert energies[0] == 1.0
        assert out.energy_index == pytest.approx(energies.mean(), abs=0)

    def test_boundary_clamp_zeroes_velocity(self):
        cfg = small_config(n_uavs=2)
        env = CoverageEnv(cfg)
        env.reset(0)
        env.set_world(
            uav_pos=[[cfg.world_size, 30.0], [30.0, 30.0]],
            uav_vel=[[1.0, 0.0], [0.0, 0.0]],
            terminal_pos=np.full((12, 2), 1.0),
        )
        env.step([0, 0])
        assert env.state.uav_pos[0, 0] == cfg.world_size
        assert env.state.uav_vel[0, 0] == 0.0

    def test_speed_clamped_by_norm(self):
        cfg = small_config()
        env = CoverageEnv(cfg)
        env.reset(5)
        for _ in range(10):
            env.step(np.full(3, 9, dtype=int))  # keep accelerating east at high magnitude
        speed = np.linalg.norm(env.state.uav_vel, axis=1)
        assert (speed <= cfg.max_speed * (1 + 1e-12)).all()

    def test_step_after_done_raises(self):
        env = CoverageEnv(small_config(episode_len=1))
        env.reset(0)
        out = env.step([0, 0, 0])
        assert out.done
        with pytest.raises(ValueError):
            env.step([0, 0, 0])

    def test_invalid_actions_rejected(self):
        env = CoverageEnv(small_config())
        env.reset(0)
        with pytest.raises(ValueError):
            env.step([0, 0])  # wrong count
        with pytest.raises(ValueError):
            env.step([0, 0, 17])  # out of range


class TestRewards:
    def test_uncovered_hovering_agent(self):
        # nothing covered anywhere: reward = (-1 + 0) / 0.5 = -2
        cfg = small_config(n_uavs=2, n_terminals=4)
        env = CoverageEnv(cfg)
        env.set_world(
            uav_pos=[[10.0, 10.0], [20.0, 10.0]],
            terminal_pos=np.full((4, 2), 59.0),
        )
        rewards = env.compute_rewards()
        assert np.allclose(rewards, [-2.0, -2.0], atol=0)

    def test_split_coverage_hand_case(self):
        # UAV0 covers 4 of 10 covered terminals, UAV1 the other 6, both hovering:
        # r0 = (4 + 0.1*6)/0.5 = 9.2, r1 = (6 + 0.1*4)/0.5 = 12.8
        cfg = EnvConfig(world_size=200.0, n_uavs=2, n_terminals=10, seed=0)
        env = CoverageEnv(cfg)
        terminals = np.vstack([np.tile([20.0, 20.0], (4, 1)), np.tile([150.0, 150.0], (6, 1))])
        env.set_world(uav_pos=[[20.0, 20.0], [150.0, 150.0]], terminal_pos=terminals)
        rewards = env.compute_rewards()
        assert rewards[0] == pytest.approx(9.2, abs=1e-9)
        assert rewards[1] == pytest.approx(12.8, abs=1e-9)

    def test_sole_coverage_full_speed(self):
        # single UAV covers all 3 terminals at full speed: (3 + 0)/1.0 = 3
        cfg = small_config(n_uavs=1, n_terminals=3)
        env = CoverageEnv(cfg)
        env.set_world(
            uav_pos=[[30.0, 30.0]],
            uav_vel=[[cfg.max_speed, 0.0]],
            terminal_pos=np.tile([31.0, 30.0], (3, 1)),
        )
        assert env.compute_rewards()[0] == pytest.approx(3.0, abs=1e-9)

    def test_boundary_terminal_counts_as_covered(self):
        cfg = small_config(n_uavs=1, n_terminals=1)
        env = CoverageEnv(cfg)
        env.set_world(uav_pos=[[20.0, 20.0]], terminal_pos=[[20.0 + cfg.coverage_radius, 20.0]])
        assert env.coverage_index() == 1.0

    def test_disconnect_penalty_applies_when_enabled(self):
        cfg = small_config(n_uavs=2, disconnect_penalty=3.0)
        env = CoverageEnv(cfg)
        env.set_world(uav_pos=[[0.0, 0.0], [59.0, 59.0]], terminal_pos=np.full((12, 2), 30.0))
        base_cfg = small_config(n_uavs=2)
        base = CoverageEnv(base_cfg)
        base.set_world(uav_pos=[[0.0, 0.0], [59.0, 59.0]], terminal_pos=np.full((12, 2), 30.0))
        assert np.allclose(env.compute_rewards(), base.compute_rewards() - 3.0, atol=0)


class TestConnectivity:
    def test_identity_three_nodes_disconnected(self):
        assert not is_connected(np.eye(3))

    def test_complete_graph_connected(self):
        assert is_connected(np.ones((4, 4)))

    def test_chain_connected(self):
        adj = np.eye(3)
        adj[0, 1] = adj[1, 0] = 1.0
        adj[1, 2] = adj[2, 1] = 1.0
        assert is_connected(adj)

    def test_matches_networkx_on_random_graphs(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(2, 9))
            adj = np.eye(n)
            for i in range(n):
                for j in range(i + 1, n):
                    adj[i, j] = adj[j, i] = float(rng.random() < 0.3)
            graph = nx.from_numpy_array(adj)
            assert is_connected(adj) == nx.is_connected(graph)


class TestAdjacency:
    def test_symmetric_unit_diagonal_by_distance(self):
        cfg = small_config()
        pos = np.array([[0.0, 0.0], [cfg.comm_radius, 0.0], [59.0, 59.0]])
        adj = adjacency_from_positions(pos, cfg.comm_radius)
        assert adj[0, 1] == 1.0 and adj[1, 0] == 1.0  # boundary distance still links
        assert adj[0, 2] == 0.0
        assert np.array_equal(np.diag(adj), np.ones(3))
        assert np.array_equal(adj, adj.T)


class TestObservation:
    def test_layout_total_matches_dim(self):
        cfg = EnvConfig()
        lay = observation_layout(cfg)
        assert lay.total == observation_dim(cfg) == cfg.n_uavs + 42 + 3 * (15 + 5)

    def test_origin_has_zero_position_bits(self):
        cfg = small_config(n_uavs=2)
        env = CoverageEnv(cfg)
        env.set_world(uav_pos=[[0.0, 0.0], [30.0, 30.0]], terminal_pos=np.full((12, 2), 59.0))
        lay = observation_layout(cfg)
        obs = env.build_observation(0)
        assert np.array_equal(obs[lay.pos_bits], np.zeros(2 * cfg.pos_bits))

    def test_position_bits_encode_quantized_coordinate(self):
        cfg = small_config(n_uavs=1)
        env = CoverageEnv(cfg)
        env.set_world(uav_pos=[[37.5, 59.0]], terminal_pos=np.full((12, 2), 1.0))
        lay = observation_layout(cfg)
        bits = env.build_observation(0)[lay.pos_bits]
        for axis, coord in enumerate((37.5, 59.0)):
            q = min(int(np.floor(coord / cfg.world_size * 2**cfg.pos_bits)), 2**cfg.pos_bits - 1)
            expected = [(q >> k) & 1 for k in range(cfg.pos_bits)]
            got = bits[axis * cfg.pos_bits : (axis + 1) * cfg.pos_bits]
            assert np.array_equal(got, expected)

    def test_coordinate_at_world_edge_clamps_to_top_bin(self):
        cfg = small_config(n_uavs=1)
        env = CoverageEnv(cfg)
        env.set_world(uav_pos=[[cfg.world_size, 0.0]], terminal_pos=np.full((12, 2), 1.0))
        lay = observation_layout(cfg)
        x_bits = env.build_observation(0)[lay.pos_bits][: cfg.pos_bits]
        assert np.array_equal(x_bits, np.ones(cfg.pos_bits))  # bin 2^B - 1 is all ones

    def test_agent_onehot(self):
        cfg = small_config()
        env = CoverageEnv(cfg)
        env.reset(0)
        lay = observation_layout(cfg)
        for i in range(cfg.n_uavs):
            onehot = env.build_observation(i)[lay.agent_onehot]
            expected = np.zeros(cfg.n_uavs)
            expected[i] = 1.0
            assert np.array_equal(onehot, expected)

    def test_velocity_scaled_by_max_speed(self):
        cfg = small_config(n_uavs=1)
        env = CoverageEnv(cfg)
        env.set_world(uav_pos=[[30.0, 30.0]], uav_vel=[[1.0, -0.5]], terminal_pos=[[1.0, 1.0]])
        lay = observation_layout(cfg)
        vel = env.build_observation(0)[lay.velocity]
        assert np.array_equal(vel, [1.0 / cfg.max_speed, -0.5 / cfg.max_speed])

    def test_no_terminal_in_range_gives_zero_slots(self):
        cfg = small_config(n_uavs=1)
        env = CoverageEnv(cfg)
        env.set_world(uav_pos=[[0.0, 0.0]], terminal_pos=np.full((12, 2), 59.0))
        lay = observation_layout(cfg)
        assert np.array_equal(env.build_observation(0)[lay.terminals], np.zeros(3 * cfg.terminal_slots))

    def test_terminal_at_agent_position_fills_first_slot(self):
        cfg = small_config(n_uavs=1)
        env = CoverageEnv(cfg)
        terminals = np.vstack([[30.0, 30.0], np.full((11, 2), 59.0)])
        env.set_world(uav_pos=[[30.0, 30.0]], terminal_pos=terminals)
        lay = observation_layout(cfg)
        slots = env.build_observation(0)[lay.terminals]
        assert np.array_equal(slots[:3], [0.0, 0.0, 1.0])

    def test_terminal_slots_nearest_first_and_normalized(self):
        cfg = small_config(n_uavs=1, terminal_slots=2)
        env = CoverageEnv(cfg)
        terminals = np.array([[34.0, 30.0], [31.0, 30.0], [30.0, 33.0], [59.0, 59.0]])
        env.set_world(uav_pos=[[30.0, 30.0]], terminal_pos=terminals)
        lay = observation_layout(cfg)
        slots = env.build_observation(0)[lay.terminals].reshape(-1, 3)
        r = cfg.sensing_radius
        assert np.allclose(slots[0], [1.0 / r, 0.0, 1.0], atol=1e-12)
        assert np.allclose(slots[1], [0.0, 3.0 / r, 1.0], atol=1e-12)

    def test_neighbor_slots_use_comm_radius(self):
        cfg = small_config(n_uavs=3)
        env = CoverageEnv(cfg)
        env.set_world(
            uav_pos=[[30.0, 30.0], [40.0, 30.0], [0.0, 0.0]],  # third is out of comm range
            terminal_pos=np.full((12, 2), 59.0),
        )
        lay = observation_layout(cfg)
        slots = env.build_observation(0)[lay.neighbors].reshape(-1, 3)
        assert np.allclose(slots[0], [10.0 / cfg.comm_radius, 0.0, 1.0], atol=1e-12)
        assert np.array_equal(slots[1:], np.zeros((cfg.neighbor_slots - 1, 3)))

    def test_agent_index_bounds(self):
        env = CoverageEnv(small_config())
        env.reset(0)
        with pytest.raises(ValueError):
            env.build_observation(3)


class TestEpisodeProperties:
    def test_invariants_over_random_rollouts(self):
        cfg = EnvConfig(episode_len=20)
        env = CoverageEnv(cfg)
        rng = np.random.default_rng(7)
        for seed in range(30):
            env.reset(seed)
            for _ in range(cfg.episode_len):
                out = env.step(rng.integers(0, N_ACTIONS, size=cfg.n_uavs))
                state = env.state
                assert (state.uav_pos >= 0).all() and (state.uav_pos <= cfg.world_size).all()
                speed = np.linalg.norm(state.uav_vel, axis=1)
                assert (speed <= cfg.max_speed * (1 + 1e-12)).all()
                assert np.array_equal(out.adj, out.adj.T)
                assert np.array_equal(np.diag(out.adj), np.ones(cfg.n_uavs))
                assert 0.0 <= out.coverage_index <= 1.0
                assert 0.5 <= out.energy_index <= 1.0
            assert out.done

    def test_bit_identical_replay(self):
        cfg = EnvConfig(episode_len=15)
        actions = np.random.default_rng(1).integers(0, N_ACTIONS, size=(15, cfg.n_uavs))
        traces = []
        for _ in range(2):
            env = CoverageEnv(cfg)
            env.reset(11)
            trace = []
            for t in range(cfg.episode_len):
                out = env.step(actions[t])
                trace.append((out.rewards.tobytes(), out.obs.tobytes(), out.adj.tobytes()))
            traces.append(trace)
        assert traces[0] == traces[1]

    def test_coverage_extremes(self):
        cfg = small_config(n_uavs=1, n_terminals=8)
        env = CoverageEnv(cfg)
        cluster = 30.0 + np.random.default_rng(2).uniform(-5, 5, size=(8, 2))
        env.set_world(uav_pos=[[30.0, 30.0]], terminal_pos=cluster)
        assert env.coverage_index() == 1.0
        env.set_world(uav_pos=[[0.0, 0.0]], terminal_pos=np.full((8, 2), 59.0))
        assert env.coverage_index() == 0.0

    def test_union_bound_on_total_coverage(self):
        cfg = EnvConfig()
        env = CoverageEnv(cfg)
        for seed in range(20):
            env.reset(seed)
            mask = env._coverage_mask()
            assert mask.any(axis=0).sum() <= mask.sum()
