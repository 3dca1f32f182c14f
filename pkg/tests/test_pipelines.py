import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from monarq.analysis import oracle_dtft, oracle_edge, oracle_edge_ev, oracle_sqgrad, oracle_sqgrad_image
from monarq.circuit import NoiseConfig, conditional_z_arrays, run_statevector
from monarq.errors import CapacityError, DomainError, IncompleteResultError
from monarq.pipelines import (
    GrayImage,
    build_conv,
    build_dtft,
    build_edge_tile,
    build_qcrank_job,
    build_sqgrad,
    chirp_signal,
    conv_values,
    dtft_spectrum,
    edge_mask,
    effective_threshold,
    execute_job,
    plan_tiles,
    required_qubits_dtft,
    run_conv,
    run_dtft,
    run_edge_image,
    run_sqgrad_image,
    tile_and_stitch,
    weight_from_threshold,
    weight_from_threshold_printed,
)


def exact(job):
    return execute_job(job, shots=0)


class TestConv:
    def test_ones(self):
        values, errs, _ = run_conv(np.ones(8), np.ones(8))
        np.testing.assert_allclose(values, 1.0, atol=1e-12)
        np.testing.assert_array_equal(errs, 0.0)

    def test_identity_operand(self, rng):
        g = rng.uniform(-1, 1, 16)
        values, _, _ = run_conv(np.ones(16), g)
        np.testing.assert_allclose(values, g, atol=1e-12)

    @pytest.mark.parametrize("length", [5, 32, 64])
    def test_exact_matches_pointwise_product(self, rng, length):
        f, g = rng.uniform(-1, 1, (2, length))
        values, _, _ = run_conv(f, g)
        np.testing.assert_allclose(values, f * g, atol=1e-9)

    @pytest.mark.parametrize("length", [4, 16, 32, 64])
    def test_gate_count(self, length):
        job = build_conv(np.zeros(length), np.zeros(length))
        assert job.circuit.two_qubit_count == 2 * length + 1

    def test_input_checks(self):
        with pytest.raises(ValueError):
            build_conv([0.1, 0.2], [0.3])
        with pytest.raises(DomainError):
            build_conv([0.1, 2.0], [0.3, 0.4])

    def test_sampled_run_has_error_bars(self, rng):
        f, g = rng.uniform(-1, 1, (2, 32))
        res = execute_job(build_conv(f, g), shots=32000, seed=1)
        values, errs = conv_values(res)
        assert np.all(errs > 0)
        assert np.all(np.abs(values - f * g) <= 5 * errs)

    def test_noise_reduces_contrast(self, rng):
        f, g = rng.uniform(-1, 1, (2, 8))
        ideal, _, _ = run_conv(f, g)
        for p2q in (0.01, 0.05):
            noisy, errs, _ = run_conv(f, g, shots=400_000, seed=3, noise=NoiseConfig(p2q, 4))
            assert np.all(np.abs(noisy) <= np.abs(ideal) + 5 * errs)


class TestDtft:
    def test_on_grid_cosine(self):
        L, k = 64, 5
        w0 = 2 * math.pi * k / L
        h = np.cos(w0 * np.arange(L))
        spec = dtft_spectrum(exact(build_dtft(h, [w0, 2 * w0])))
        assert spec.I[0] == pytest.approx(L / 2, abs=1e-9)
        assert spec.Q[0] == pytest.approx(0.0, abs=1e-9)
        assert spec.amplitude[0] > spec.amplitude[1]

    def test_zero_signal(self):
        spec = run_dtft(np.zeros(16), [0.3, 1.0, 2.0])
        np.testing.assert_allclose(spec.I, 0, atol=1e-12)
        np.testing.assert_allclose(spec.Q, 0, atol=1e-12)

    def test_exact_matches_oracle(self, rng):
        h = rng.uniform(-1, 1, 64)
        omegas = rng.uniform(0, math.pi, 7)
        spec = run_dtft(h, omegas, probes_per_circuit=3)
        I, Q = oracle_dtft(h, omegas)
        np.testing.assert_allclose(spec.I, I, atol=1e-9)
        np.testing.assert_allclose(spec.Q, Q, atol=1e-9)

    def test_unmeasured_addresses_average_products(self, rng):
        h = rng.uniform(-1, 1, 16)
        job = build_dtft(h, [0.7])
        state = run_statevector(job.circuit)
        addresses = job.layout.address_qubits
        for q in job.tap_qubits:
            per_addr, weights = conditional_z_arrays(state, q, addresses)
            whole, _ = conditional_z_arrays(state, q, [])
            assert whole[0] == pytest.approx(np.dot(per_addr, weights), abs=1e-12)

    @pytest.mark.parametrize("L, k", [(16, 1), (64, 3), (512, 5)])
    def test_gate_count(self, L, k):
        job = build_dtft(np.zeros(L), np.linspace(0.1, 1, k))
        assert job.circuit.two_qubit_count == (2 * k + 1) * L + 2 * k
        assert job.circuit.width == required_qubits_dtft(L, k)

    def test_reference_size(self):
        job = build_dtft(chirp_signal(512), np.linspace(0.1, 1, 5))
        assert (job.circuit.width, job.circuit.two_qubit_count) == (20, 5642)

    def test_length_must_be_power_of_two(self):
        with pytest.raises(ValueError):
            build_dtft(np.zeros(24), [0.1])

    def test_capacity_error_suggests_probe_count(self, monkeypatch):
        monkeypatch.setenv("MONARQ_MAX_QUBITS", "16")
        with pytest.raises(CapacityError, match="at most 3 probes"):
            build_dtft(np.zeros(512), np.linspace(0.1, 1, 5))


class TestChirp:
    def test_shape_and_scale(self):
        h = chirp_signal(512)
        assert h.shape == (512,)
        assert np.max(np.abs(h)) == pytest.approx(1.0)

    @pytest.mark.parametrize("f0, f1", [(0.1, 0.1), (0.2, 0.1), (0.0, 0.1), (0.1, 0.6)])
    def test_bad_band_rejected(self, f0, f1):
        with pytest.raises(ValueError):
            chirp_signal(64, f0, f1)


class TestSqgrad:
    def test_constant_strip(self):
        np.testing.assert_allclose(exact(build_sqgrad(np.full(8, 0.3))).values[:, 0], 0, atol=1e-12)

    def test_hand_example(self):
        values = exact(build_sqgrad([-1, 0, 1, 1])).values[:, 0]
        np.testing.assert_allclose(values, [0.25, 1.0, 0.25, 0.0], atol=1e-12)
        np.testing.assert_allclose(oracle_sqgrad([-1, 0, 1, 1]), [0.25, 1.0, 0.25, 0.0])

    def test_explicit_neighbours(self):
        values = exact(build_sqgrad([0, 0], left=-1, right=1)).values[:, 0]
        np.testing.assert_allclose(values, [0.25, 0.25], atol=1e-12)

    def test_random_strip(self, rng):
        strip = rng.uniform(-1, 1, 16)
        np.testing.assert_allclose(exact(build_sqgrad(strip)).values[:, 0], oracle_sqgrad(strip),
                                   atol=1e-9)

    def test_gate_count(self):
        assert build_sqgrad(np.zeros(16)).circuit.two_qubit_count == 69
        assert build_sqgrad(np.zeros(64)).circuit.two_qubit_count == 4 * 64 + 5

    @given(st.lists(st.floats(-1, 1), min_size=4, max_size=4))
    def test_composed_circuit_is_central_difference(self, strip):
        strip = np.array(strip)
        got = exact(build_sqgrad(strip)).values[:, 0]
        padded = np.concatenate([[strip[0]], strip, [strip[-1]]])
        want = ((padded[2:] - padded[:-2]) / 2) ** 2
        np.testing.assert_allclose(got, want, atol=1e-9)


class TestEdge:
    def test_threshold_mappings(self):
        for T in (0.1, 0.5, 2.0, 7.0):
            assert effective_threshold(weight_from_threshold(T)) == pytest.approx(T)
        for T in (0.1, 0.5, 2.0):
            w = weight_from_threshold_printed(T)
            assert w == pytest.approx(T / (8 - T))
            assert effective_threshold(w) == pytest.approx(8 * T / (8 - 2 * T))
        with pytest.raises(ValueError):
            weight_from_threshold(0.0)

    def test_constant_tile(self):
        job = build_edge_tile(np.full((6, 6), 0.2), T=0.5)
        ev = exact(job).values[:, 0]
        np.testing.assert_allclose(ev, -job.meta["w"], atol=1e-12)
        assert not edge_mask(ev).any()

    def test_register_width(self):
        job = build_edge_tile(np.zeros((6, 6)), T=0.5)
        assert job.circuit.width == job.layout.n_a + 10

    def test_vertical_step(self):
        img = np.where(np.arange(8) < 4, -1.0, 1.0)[None, :].repeat(8, axis=0)
        res = run_edge_image(img, T=1.0, tile_height=4, tile_width=4)
        mask = edge_mask(res.values)
        np.testing.assert_array_equal(mask, oracle_edge(img, 1.0))
        assert mask[:, 3:5].all() and not mask[:, :3].any() and not mask[:, 5:].any()

    def test_random_tile_matches_formula(self, rng):
        tile = rng.uniform(-1, 1, (10, 10))
        job = build_edge_tile(tile, T=0.8)
        ev = exact(job).values[:, 0].reshape(8, 8)
        core = tile[1:-1, 1:-1]
        want = oracle_edge_ev(tile, job.meta["w"])[1:-1, 1:-1]
        assert core.shape == ev.shape
        np.testing.assert_allclose(ev, want, atol=1e-9)

    def test_reference_gate_count(self):
        job = build_edge_tile(np.zeros((34, 34)), T=0.5)
        assert job.circuit.two_qubit_count == 8 * 1024 + 15 == 8207
        assert job.circuit.width == 20

    @given(st.integers(0, 2**32 - 1), st.floats(0.05, 3.0))
    def test_threshold_equivalence(self, seed, T):
        tile = np.random.default_rng(seed).uniform(-1, 1, (6, 6))
        job = build_edge_tile(tile, T)
        ev = exact(job).values[:, 0].reshape(4, 4)
        dx = tile[1:-1, 2:] - tile[1:-1, :-2]
        dy = tile[2:, 1:-1] - tile[:-2, 1:-1]
        energy = dx ** 2 + dy ** 2
        clear = np.abs(energy - T) > 1e-9
        np.testing.assert_array_equal((ev > 0)[clear], (energy > T)[clear])

    def test_ragged_image(self, rng):
        img = rng.uniform(-1, 1, (10, 7))
        res = run_edge_image(img, T=0.6, tile_height=4, tile_width=4)
        np.testing.assert_allclose(res.values, oracle_edge_ev(img, weight_from_threshold(0.6)),
                                   atol=1e-9)


class TestTiling:
    def test_single_tile_is_identity(self, rng):
        img = rng.uniform(-1, 1, (4, 8))
        plan = plan_tiles(img, 4, 8)
        assert len(plan.tiles) == 1
        out = tile_and_stitch(img, plan, {0: plan.tiles[0].values[1:-1, 1:-1]})
        np.testing.assert_array_equal(out, img)

    @pytest.mark.parametrize("shape, th, tw, count", [((32, 32), 1, 16, 64), ((128, 192), 32, 32, 24)])
    def test_reference_tilings(self, rng, shape, th, tw, count):
        img = rng.uniform(-1, 1, shape)
        plan = plan_tiles(img, th, tw)
        assert len(plan.tiles) == count
        results = {t.tile_id: t.values[1:-1, 1:-1] for t in plan.tiles}
        np.testing.assert_array_equal(tile_and_stitch(img, plan, results), img)

    def test_halo_replicates_border(self):
        img = np.arange(16.0).reshape(4, 4) / 16
        tile = plan_tiles(img, 2, 2).tiles[0].values
        np.testing.assert_array_equal(tile[0], [0, 0, 1 / 16, 2 / 16])
        np.testing.assert_array_equal(tile[:, 0], [0, 0, 4 / 16, 8 / 16])

    def test_missing_tiles(self):
        img = np.zeros((4, 4))
        plan = plan_tiles(img, 2, 2)
        with pytest.raises(IncompleteResultError) as err:
            tile_and_stitch(img, plan, {0: np.zeros(4), 2: np.zeros(4)})
        assert err.value.missing == [1, 3]


class TestImages:
    def test_gray_image_mapping(self):
        raw = np.array([[0, 128, 255]])
        img = GrayImage.from_raw(raw, 255)
        np.testing.assert_allclose(img.pixels, [[-1, 128 / 127.5 - 1, 1]])
        np.testing.assert_array_equal(img.to_raw(), raw)

    @pytest.mark.parametrize("transpose", [False, True])
    def test_gradient_image(self, rng, transpose):
        img = rng.uniform(-1, 1, (8, 12))
        res = run_sqgrad_image(img, strip_len=4, transpose=transpose)
        np.testing.assert_allclose(res.values, oracle_sqgrad_image(img, 0 if transpose else 1),
                                   atol=1e-9)


class TestExecute:
    def test_roundtrip_job(self, rng):
        data = rng.uniform(-1, 1, (3, 10))
        res = exact(build_qcrank_job(data))
        np.testing.assert_allclose(res.values[:10].T, data, atol=1e-9)

    def test_dtft_exact_taps_are_scaled_averages(self, rng):
        h = rng.uniform(-1, 1, 32)
        res = exact(build_dtft(h, [0.4]))
        t = np.arange(32)
        np.testing.assert_allclose(res.estimates.x_hat, [np.mean(h * np.cos(0.4 * t)),
                                                         np.mean(h * np.sin(0.4 * t))], atol=1e-12)

    def test_negative_shots(self):
        with pytest.raises(ValueError):
            execute_job(build_conv([0.1], [0.2]), shots=-1)

    def test_seeded_runs_repeat(self, rng):
        f, g = rng.uniform(-1, 1, (2, 8))
        a = run_conv(f, g, 5000, seed=9, noise=NoiseConfig(0.01, 2))[0]
        b = run_conv(f, g, 5000, seed=9, noise=NoiseConfig(0.01, 2))[0]
        np.testing.assert_array_equal(a, b)
