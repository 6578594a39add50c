import json

import numpy as np
import pytest

from stft_dereverb import RoomRanges, RoomSpec, batch_rooms, generate_rir
from stft_dereverb import _backend
from stft_dereverb.rir import KERNEL_HALF_WIDTH, image_sources, rir_from_json, rir_to_json


def anechoic(d_samples=50.0, **kw):
    d = d_samples * 343.0 / 16000.0
    return RoomSpec((5.0, 4.0, 3.0), (2.0, 2.0, 1.5), (2.0 + d, 2.0, 1.5), reflection_coeff=0.0, **kw)


def test_anechoic_integer_delay():
    spec = anechoic(50.0, rir_len=256)
    h = generate_rir(spec)
    d = spec.distance
    assert h.direct_index == 50
    assert h.taps[50] == pytest.approx(1 / (4 * np.pi * d), abs=1e-9)
    assert np.max(np.abs(np.delete(h.taps, 50))) < 1e-9


def test_anechoic_fractional_delay_is_windowed_sinc():
    spec = anechoic(50.3, rir_len=256)
    h = generate_rir(spec)
    amp = 1 / (4 * np.pi * spec.distance)
    n = np.arange(256)
    x = n - 50.3
    want = np.where(np.abs(x) <= KERNEL_HALF_WIDTH,
                    amp * np.sinc(x) * 0.5 * (1 + np.cos(np.pi * x / (KERNEL_HALF_WIDTH + 1))), 0.0)
    np.testing.assert_allclose(h.taps, want, atol=1e-12)
    assert np.max(np.abs(h.taps)) == pytest.approx(amp * np.sinc(0.3) * 0.5 * (1 + np.cos(np.pi * 0.3 / 9)))


def schroeder_t60(taps, fs, lo=-5.0, hi=-25.0):
    edc = np.cumsum(taps[::-1] ** 2)[::-1]
    edc_db = 10 * np.log10(edc / edc[0])
    i0 = np.argmax(edc_db <= lo)
    i1 = np.argmax(edc_db <= hi)
    t = np.arange(i0, i1) / fs
    slope = np.polyfit(t, edc_db[i0:i1], 1)[0]
    return -60.0 / slope, edc


def test_reverberant_room_decay():
    spec = RoomSpec((4.0, 5.0, 3.0), (1.3, 1.7, 1.2), (2.9, 3.6, 1.6), reflection_coeff=0.9,
                    sample_rate=16000, rir_len=4096, max_order=80)
    h = generate_rir(spec)
    t60, edc = schroeder_t60(h.taps, 16000)
    assert np.all(np.diff(edc[h.direct_index:]) <= 0)
    assert 0.2 <= t60 <= 0.8


def test_validation():
    with pytest.raises(ValueError, match="inside"):
        RoomSpec((3, 3, 3), (0, 1, 1), (2, 2, 2))
    with pytest.raises(ValueError, match="coincide"):
        RoomSpec((3, 3, 3), (1, 1, 1), (1, 1, 1))
    with pytest.raises(ValueError, match="reflection"):
        RoomSpec((3, 3, 3), (1, 1, 1), (2, 2, 2), reflection_coeff=1.0)


def test_determinism_and_energy_ordering():
    base = RoomSpec((6.0, 4.5, 3.0), (1.5, 1.2, 1.4), (4.1, 3.0, 1.7), reflection_coeff=0.8)
    a, b = generate_rir(base), generate_rir(base)
    assert a.taps.tobytes() == b.taps.tobytes()
    energies = []
    for beta in (0.0, 0.3, 0.6, 0.9):
        energies.append(generate_rir(RoomSpec(**{**base.to_dict(), "reflection_coeff": beta})).energy)
    assert all(x < y for x, y in zip(energies, energies[1:]))
    assert np.isfinite(energies[-1])


def test_higher_order_only_adds_images():
    base = RoomSpec((6.0, 4.5, 3.0), (1.5, 1.2, 1.4), (4.1, 3.0, 1.7), reflection_coeff=0.8, max_order=3)
    lo = generate_rir(base)
    hi = generate_rir(RoomSpec(**{**base.to_dict(), "max_order": 4}))
    delays, amps = image_sources(base, min_order=4, max_order=4)
    added = _backend.deposit_images(delays, amps, base.rir_len, KERNEL_HALF_WIDTH)
    np.testing.assert_allclose(hi.taps - lo.taps, added, atol=1e-12)


def test_image_count_by_order():
    # order-1 images: one per wall
    spec = RoomSpec((6.0, 4.5, 3.0), (1.5, 1.2, 1.4), (4.1, 3.0, 1.7), max_order=1)
    d, a = image_sources(spec, min_order=1, max_order=1)
    assert d.size == 6
    d0, _ = image_sources(spec, 0, 0)
    assert d0.size == 1 and d0[0] == pytest.approx(spec.distance * 16000 / 343)


def test_batch_rooms():
    one = batch_rooms(1, 1, RoomRanges(length=(5, 5), width=(4, 4), height=(3, 3),
                                        reflection_coeff=(0.8, 0.8)), seed=42)
    again = batch_rooms(1, 1, RoomRanges(length=(5, 5), width=(4, 4), height=(3, 3),
                                          reflection_coeff=(0.8, 0.8)), seed=42)
    assert len(one) == 1 and one == again
    specs = batch_rooms(5, 3, seed=7)
    assert len(specs) == 15
    for s in specs:
        assert s.distance >= 0.5
    assert len(batch_rooms(40, 15, seed=1)) == 600


def test_direct_path_is_max_tap():
    for s in batch_rooms(6, 5, RoomRanges(reflection_coeff=(0.7, 0.95)), seed=3):
        h = generate_rir(s)
        assert h.direct_index == int(np.argmax(np.abs(h.taps)))


def test_infeasible_ranges():
    with pytest.raises(ValueError, match="distance"):
        RoomRanges(length=(2, 2), width=(2, 2), height=(2, 2), distance=(3, 4))
    with pytest.raises(ValueError, match="empty"):
        RoomRanges(length=(5, 4))


def test_json_round_trip():
    spec = anechoic(40.0, rir_len=128)
    h = generate_rir(spec)
    text = rir_to_json(h, spec)
    back = rir_from_json(text)
    assert back.taps.tobytes() == h.taps.tobytes()
    assert back.direct_index == h.direct_index
    assert RoomSpec.from_dict(json.loads(text)["room"]) == spec


def test_direct_dominance_check():
    from stft_dereverb.rir import DIRECT_DOMINANCE, direct_dominance
    assert direct_dominance(anechoic(50.0)) < 1e-12
    for s in batch_rooms(3, 4, seed=11):
        assert direct_dominance(s) < DIRECT_DOMINANCE
