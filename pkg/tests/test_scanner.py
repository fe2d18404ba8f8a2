import math

import numpy as np
import pytest

from rfwpt.channel import fraunhofer_distance
from rfwpt.control import (
    Codebook,
    Excitation,
    FarBeam,
    center_out_mask,
    far_field_excitation,
    generate_codebook,
    near_field_excitation,
    optimal_excitation,
)
from rfwpt.geometry import ArraySpec, DirectionUV, ReceiverPose, build_planar_array
from rfwpt.scanner import (
    PowerProbe,
    beam_scan,
    hardware_constraints,
    run_far_scan,
    run_near_scan,
    simulated_probe,
)


class CountingProbe:
    """Deterministic synthetic probe: power peaks at a chosen phase pattern."""

    def __init__(self, target):
        self.target = np.asarray(target)
        self.calls = []

    def measure(self, x):
        self.calls.append(x)
        return float(abs(np.sum(np.exp(-1j * (x.phases - self.target)) * x.active)) ** 2)


def _r_b(ctx, tx):
    return fraunhofer_distance(ctx, tx, max_dimension=0.29912)


def test_protocol():
    assert isinstance(CountingProbe(np.zeros(1)), PowerProbe)


def test_simulated_probe_zero_excitation(ctx, tx8, rx4):
    probe = simulated_probe(ctx, tx8, ReceiverPose([0, 0, 1.0]), rx4)
    assert probe.measure(Excitation(np.zeros(64), 0.0)) == 0.0
    with pytest.raises(ValueError):
        simulated_probe(ctx, tx8, ReceiverPose([0, 0, 1.0]), rx4, "bogus")


def test_simulated_probe_repeatable(ctx, tx8, rx4):
    probe = simulated_probe(ctx, tx8, ReceiverPose([0.1, 0.2, 1.0]), rx4)
    x = far_field_excitation(ctx, tx8, DirectionUV(0.1, 0.2))
    assert probe.measure(x) == probe.measure(x)
    assert probe.call_count == 2


def test_optimal_bounds_any_equal_magnitude_excitation(ctx, tx8, rx4, facing):
    pose = ReceiverPose([0.2, 0.1, 0.6], facing)
    probe = simulated_probe(ctx, tx8, pose, rx4, "decomposed")
    best = probe.measure(optimal_excitation(ctx, tx8, pose))
    rng = np.random.default_rng(3)
    for _ in range(200):
        assert probe.measure(Excitation(rng.uniform(0, 2 * np.pi, 64), math.sqrt(0.2))) <= best


def test_exact_and_decomposed_probes_agree(ctx, tx8, rx4, facing):
    for r in (0.5, 1.0, 3.0):
        pose = ReceiverPose.from_center([0.05, 0, r], rx4, facing)
        x = far_field_excitation(ctx, tx8, pose.xi)
        pe = simulated_probe(ctx, tx8, pose, rx4, "exact").measure(x)
        pd = simulated_probe(ctx, tx8, pose, rx4, "decomposed").measure(x)
        assert abs(10 * math.log10(pd / pe)) < 0.5


def test_single_beam_codebook(ctx, tx4):
    cb = Codebook((FarBeam(1, DirectionUV(0.1, 0.0), True),), 2, 2, 1, 1, ((1, 1.0),))
    probe = CountingProbe(np.zeros(16))
    k, powers = run_far_scan(probe, ctx, tx4, cb)
    assert k == 1 and len(probe.calls) == 1


def test_no_valid_beams(ctx):
    one = build_planar_array(ArraySpec(1, 1, 0.03, 0.03, per_element_power=1))
    cb = generate_codebook(one.spec, 1.0, 3)
    assert not cb.valid_beams  # corners (+-1, +-1) are all outside the disk
    with pytest.raises(ValueError, match="no valid"):
        run_far_scan(CountingProbe(np.zeros(1)), None, one, cb)


def test_invalid_beams_are_skipped_and_absent(ctx, tx8, rx4):
    cb = generate_codebook(tx8.spec, 3.45, 35)
    probe = simulated_probe(ctx, tx8, ReceiverPose([0, 0, 2.0]), rx4)
    k, powers = run_far_scan(probe, ctx, tx8, cb)
    valid = {b.index for b in cb.far_beams if b.valid}
    assert probe.call_count == len(valid)
    assert all((p is None) == (k_ not in valid) for k_, p in powers)
    assert k in valid


def test_far_scan_ties_break_low(ctx, tx4):
    cb = generate_codebook(tx4.spec, 1.0, 2)

    class Flat:
        def measure(self, x):
            return 1.0

    k, _ = run_far_scan(Flat(), ctx, tx4, cb)
    assert k == cb.valid_beams[0].index


def test_far_power_matches_closed_form(ctx, tx8, rx4):
    # decomposed anchor power for a far beam: |sum I exp(j k ((xi_rx - xi).u - |a|^2 / 2r))|^2 / 2
    pose = ReceiverPose([0.3, -0.1, 1.4])
    probe = simulated_probe(ctx, tx8, pose, rx4, "decomposed")
    from rfwpt.channel import distance_term

    I = math.sqrt(0.2) * abs(distance_term(ctx, pose.r))
    k = ctx.wavenumber
    for xi in (DirectionUV(0.1, 0.0), DirectionUV(-0.3, 0.2)):
        d = pose.xi.as_array() - xi.as_array()
        terms = np.exp(1j * k * (tx8.in_plane @ d - np.sum(tx8.positions**2, 1) / (2 * pose.r)))
        expected = abs(I * terms.sum()) ** 2 / 2
        assert probe.measure(far_field_excitation(ctx, tx8, xi)) == pytest.approx(expected, rel=1e-10)
        # near beam focused at r
        r = 0.9
        terms = np.exp(1j * k * (tx8.in_plane @ d - np.sum(tx8.positions**2, 1) / 2 * (1 / pose.r - 1 / r)))
        expected = abs(I * terms.sum()) ** 2 / 2
        assert probe.measure(near_field_excitation(ctx, tx8, xi, r)) == pytest.approx(expected, rel=1e-10)


def test_near_scan_finds_on_grid_range(ctx, tx8, rx4):
    grid = [(i, 0.1 * i) for i in range(1, 36)]
    pose = ReceiverPose([0, 0, 1.2])
    probe = simulated_probe(ctx, tx8, pose, rx4, "decomposed")
    i_star, powers, r_opt = run_near_scan(probe, ctx, tx8, DirectionUV(0, 0), grid)
    assert i_star == 12 and r_opt == pytest.approx(1.2)


def test_near_scan_far_receiver_prefers_last(ctx, tx8, rx4):
    grid = [(i, 3.45 / 35 * i) for i in range(1, 36)]
    probe = simulated_probe(ctx, tx8, ReceiverPose([0, 0, 40.0]), rx4)
    i_star, powers, r_opt = run_near_scan(probe, ctx, tx8, DirectionUV(0, 0), grid)
    assert i_star == 35 and r_opt == pytest.approx(3.45)
    i1, _, r1 = run_near_scan(probe, ctx, tx8, DirectionUV(0, 0), [(1, 3.45)])
    assert (i1, r1) == (1, 3.45)
    with pytest.raises(ValueError):
        run_near_scan(probe, ctx, tx8, DirectionUV(0, 0), [])


def test_beam_scan_call_accounting(ctx, tx8, rx4, facing):
    cb = generate_codebook(tx8.spec, _r_b(ctx, tx8), 35)
    # brute count of grid points inside the unit disk
    g = [(2 / 15) * (j - 8.5) for j in range(1, 17)]
    n_valid = sum(1 for u in g for v in g if u * u + v * v <= 1)
    probe = simulated_probe(ctx, tx8, ReceiverPose.from_center([0, 0, 0.5], rx4, facing), rx4)
    out = beam_scan(probe, ctx, tx8, cb)
    assert out.probe_call_count == n_valid + 35 == probe.call_count
    assert n_valid == 172


def test_beam_scan_outcome_invariants(ctx, tx8, rx4, facing):
    cb = generate_codebook(tx8.spec, _r_b(ctx, tx8), 35)
    probe = simulated_probe(ctx, tx8, ReceiverPose.from_center([0.2, 0, 0.8], rx4, facing), rx4)
    out = beam_scan(probe, ctx, tx8, cb)
    valid = [p for _, p in out.far_powers if p is not None]
    assert out.far_best == max(valid)
    assert out.near_best == max(p for _, p in out.near_powers)
    assert out.near_best >= out.far_best - 1e-12
    assert out.xi_opt == cb.beam(out.k_star).xi
    np.testing.assert_array_equal(
        out.final_excitation.phases, near_field_excitation(ctx, tx8, out.xi_opt, out.r_opt).phases
    )


def test_beam_scan_deterministic(ctx, tx8, rx4, facing):
    cb = generate_codebook(tx8.spec, _r_b(ctx, tx8), 35)
    pose = ReceiverPose.from_center([0.1, -0.3, 1.3], rx4, facing)
    a = beam_scan(simulated_probe(ctx, tx8, pose, rx4), ctx, tx8, cb)
    b = beam_scan(simulated_probe(ctx, tx8, pose, rx4), ctx, tx8, cb)
    assert a.far_powers == b.far_powers and a.near_powers == b.near_powers
    assert (a.k_star, a.i_star, a.r_opt) == (b.k_star, b.i_star, b.r_opt)


def test_hardware_constraints_apply_to_every_probe(ctx, tx4):
    cb = generate_codebook(tx4.spec, 1.0, 5)
    mask = center_out_mask(tx4, 4)
    probe = CountingProbe(np.zeros(16))
    lsb = math.radians(5.625)
    out = beam_scan(probe, ctx, tx4, cb, hardware_constraints(lsb, mask))
    for x in probe.calls + [out.final_excitation]:
        np.testing.assert_array_equal(x.active, mask)
        np.testing.assert_allclose(np.mod(x.phases / lsb + 0.5, 1) - 0.5, 0, atol=1e-9)
    assert hardware_constraints() is None


def test_near_field_advantage(ctx, tx8, rx4, facing):
    rb = _r_b(ctx, tx8)
    cb = generate_codebook(tx8.spec, rb, 35)
    for k0 in (120, 137, 104):
        xi = cb.beam(k0).xi
        for r in (0.5, 1.0, rb / 2, 0.9 * rb):
            pose = ReceiverPose(np.array([xi.u, xi.v, math.sqrt(1 - xi.u**2 - xi.v**2)]) * r, facing)
            out = beam_scan(simulated_probe(ctx, tx8, pose, rx4), ctx, tx8, cb)
            assert out.near_best >= out.far_best
            if r <= rb / 2:
                assert out.near_best > out.far_best


def test_gap_closes_with_distance(ctx, tx8, rx4, facing):
    rb = _r_b(ctx, tx8)
    cb = generate_codebook(tx8.spec, rb, 35)
    gaps = []
    for r in np.linspace(0.5, 2 * rb, 25):
        probe = simulated_probe(ctx, tx8, ReceiverPose.from_center([0, 0, r], rx4, facing), rx4)
        gaps.append(beam_scan(probe, ctx, tx8, cb).improvement_db)
    assert np.all(np.diff(gaps) <= 1e-9)
    assert gaps[0] > 1.0 and abs(gaps[-1]) < 0.01


def test_on_grid_recovery_sample(ctx, tx4, rx4):
    rb = fraunhofer_distance(ctx, tx4)
    cb = generate_codebook(tx4.spec, rb, 10)
    for beam in cb.valid_beams[::7]:
        xi = beam.xi
        pose = ReceiverPose(np.array([xi.u, xi.v, math.sqrt(1 - xi.u**2 - xi.v**2)]) * 10 * rb)
        k, _ = run_far_scan(simulated_probe(ctx, tx4, pose, rx4), ctx, tx4, cb)
        assert k == beam.index
