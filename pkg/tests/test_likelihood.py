import numpy as np
import pytest

from onebitsim.channel import mean_waveform, quantize, transmit
from onebitsim.likelihood import (
    LikelihoodTable,
    WindowTable,
    analytic_table,
    estimate_table,
    load_table,
    parse_pattern,
    pattern_bits,
    pattern_index,
    pattern_string,
    save_table,
    supersymbol_window_table,
    table_key,
)
from onebitsim.pulses import build_channel, make_pulse
from onebitsim.sources import default_supersymbol, units as source_units


def test_pattern_helpers_msb_first():
    assert pattern_index(np.array([[1, -1, -1]]))[0] == 4
    assert pattern_index(np.array([[-1, -1, 1]]))[0] == 1
    assert np.array_equal(pattern_bits(4, 3), [1, -1, -1])
    assert pattern_string(4, 3) == "+--"
    assert parse_pattern("+--") == 4
    for p in range(16):
        assert parse_pattern(pattern_string(p, 4)) == p
    with pytest.raises(ValueError):
        parse_pattern("+x-")


def test_table_validation(channel10):
    probs = np.full((4, 4, 8), 1.0 / 8.0)
    units = np.linspace(-1, 1, 4)[:, None]
    tab = LikelihoodTable(units, 3, 1, 0.1, probs, "estimated")
    assert tab.width == 3
    with pytest.raises(ValueError):
        LikelihoodTable(units, 3, 1, 0.1, probs[:3], "estimated")
    bad = probs.copy()
    bad[0, 0, 0] += 0.1
    with pytest.raises(ValueError):
        LikelihoodTable(units, 3, 1, 0.1, bad, "estimated")
    with pytest.raises(ValueError):
        LikelihoodTable(units, 3, 1, 0.1, probs - 0.2, "estimated")


def test_analytic_noiseless_is_indicator_of_signs(channel0, alphabet, levels):
    tab = analytic_table(channel0, alphabet)
    assert tab.meta["max_row_defect"] == 0.0
    for s in range(4):
        for u in range(4):
            wave = mean_waveform(channel0, [levels[s], levels[u]])[3:]
            expect = pattern_index(quantize(wave, 3))[0]
            row = tab.probs[s, u]
            assert row[expect] == 1.0
            assert row.sum() == 1.0


def test_analytic_rows_renormalized_with_small_defect(channel10, alphabet):
    tab = analytic_table(channel10, alphabet, accuracy=5e-4, seed=0)
    assert tab.meta["max_row_defect"] < 5e-3
    assert np.allclose(tab.probs.sum(axis=2), 1.0, atol=1e-12)
    assert tab.method == "analytic"


def test_analytic_reproducible(channel10, alphabet):
    a = analytic_table(channel10, alphabet, accuracy=1e-3, seed=5)
    b = analytic_table(channel10, alphabet, accuracy=1e-3, seed=5)
    assert np.array_equal(a.probs, b.probs)


def test_estimate_matches_handwritten_counting(channel10, alphabet):
    # independent oracle: redo the pilot draw and count with plain loops
    tab = estimate_table(channel10, alphabet, pilot_len=6_000, seed=42, smoothing=1.0)
    rng = np.random.default_rng(42)
    n_units = 6_000
    draws = rng.integers(0, 4, size=n_units)
    lv = np.asarray(alphabet.levels)
    blocks = transmit(channel10, lv[draws], rng)
    counts = np.zeros((4, 4, 8))
    for k in range(1, n_units - 1):
        pat = int(4 * (blocks[k, 0] > 0) + 2 * (blocks[k, 1] > 0) + (blocks[k, 2] > 0))
        counts[draws[k - 1], draws[k], pat] += 1.0
    expect = (counts + 1.0) / (counts.sum(axis=2, keepdims=True) + 8.0)
    assert np.array_equal(tab.probs, expect)
    assert np.array_equal(tab.coverage, counts.sum(axis=2))


def test_estimate_uncovered_rows_are_uniform(channel10, alphabet):
    tab = estimate_table(channel10, alphabet, pilot_len=45, seed=0)
    empty = tab.coverage == 0
    assert empty.any()
    assert tab.meta["uncovered_rows"] == int(empty.sum())
    assert np.allclose(tab.probs[empty], 1.0 / 8.0, atol=1e-15)


def test_estimate_convergence_to_analytic(channel10, alphabet):
    ana = analytic_table(channel10, alphabet, accuracy=5e-4, seed=1)
    est = estimate_table(channel10, alphabet, pilot_len=300_000, seed=3)
    tv = 0.5 * np.abs(ana.probs - est.probs).sum(axis=2)
    assert tv.max() < 0.02


def test_supersymbol_unit_table_noiseless(channel0, alphabet, levels):
    ss = default_supersymbol(channel0, alphabet)
    u = source_units(ss)
    tab = analytic_table(channel0, u)
    assert tab.probs.shape == (8, 8, 64)
    for s in (0, 3, 7):
        for cur in (1, 5):
            ctx = np.concatenate([u[s], u[cur]])
            wave = mean_waveform(channel0, ctx)[6:]
            expect = pattern_index(quantize(wave, 6).reshape(1, 6))[0]
            assert tab.probs[s, cur, expect] == 1.0


def test_window_table_full_noiseless_matches_enumeration(channel0):
    u = np.array([[-1.0], [1.0]])
    tab = supersymbol_window_table(channel0, u, mode="full", method="analytic")
    expect = np.zeros((2, 32))
    for cur in range(2):
        for prev in (-1.0, 1.0):
            for nxt in (-1.0, 1.0):
                wave = mean_waveform(channel0, [prev, u[cur, 0], nxt])[2:7]
                pat = int("".join("1" if v >= 0 else "0" for v in wave), 2)
                expect[cur, pat] += 0.25
    assert np.allclose(tab.probs, expect, atol=1e-12)


def test_window_table_estimated_approaches_analytic():
    p = make_pulse("rect", 3)
    ch = build_channel(p, p, noise_variance=0.25)
    u = np.array([[-1.0], [1.0]])
    ana = supersymbol_window_table(ch, u, mode="full", method="analytic", accuracy=1e-3, seed=0)
    est = supersymbol_window_table(ch, u, mode="full", method="estimated", pilot_len=400_000, seed=1)
    tv = 0.5 * np.abs(ana.probs - est.probs).sum(axis=1)
    assert tv.max() < 0.02


def test_window_modes_and_widths(channel0, alphabet):
    ss = default_supersymbol(channel0, alphabet)
    u = source_units(ss)
    full = supersymbol_window_table(channel0, u, mode="full", method="analytic")
    center = supersymbol_window_table(channel0, u, mode="center", method="analytic")
    assert full.width == 8 and full.probs.shape == (8, 256)
    assert center.width == 4 and center.probs.shape == (8, 16)
    with pytest.raises(ValueError):
        supersymbol_window_table(channel0, u, mode="edges")
    with pytest.raises(ValueError):
        supersymbol_window_table(channel0, u, method="guess")


def test_save_load_roundtrip_conditional(tmp_path, channel10, alphabet):
    for build in (
        lambda: estimate_table(channel10, alphabet, pilot_len=5_000, seed=2),
        lambda: analytic_table(channel10, alphabet, accuracy=2e-3, seed=2),
    ):
        tab = build()
        path = tmp_path / f"{table_key(tab)}.txt"
        save_table(tab, path)
        back = load_table(path)
        assert isinstance(back, LikelihoodTable)
        assert np.array_equal(back.probs, tab.probs)
        assert np.array_equal(back.units, tab.units)
        assert back.memory == tab.memory
        assert back.noise_variance == tab.noise_variance
        assert back.method == tab.method
        if tab.coverage is None:
            assert back.coverage is None
        else:
            assert np.array_equal(back.coverage, tab.coverage)


def test_save_load_roundtrip_window(tmp_path, channel10, alphabet, channel0):
    ss = default_supersymbol(channel0, alphabet)
    u = source_units(ss)
    for mode in ("full", "center"):
        tab = supersymbol_window_table(
            channel10, u, mode=mode, method="estimated", pilot_len=20_000, seed=4
        )
        path = tmp_path / f"{table_key(tab)}.txt"
        save_table(tab, path)
        back = load_table(path)
        assert isinstance(back, WindowTable)
        assert back.mode == mode
        assert np.array_equal(back.probs, tab.probs)
        assert np.array_equal(back.units, tab.units)


def test_load_rejects_foreign_files(tmp_path):
    path = tmp_path / "junk.txt"
    path.write_text("format = something-else\n")
    with pytest.raises(ValueError):
        load_table(path)


def test_table_key_distinguishes_methods(channel10, alphabet):
    est = estimate_table(channel10, alphabet, pilot_len=2_000, seed=0)
    ana = analytic_table(channel10, alphabet, accuracy=5e-3, seed=0)
    assert table_key(est) != table_key(ana)
    assert " " not in table_key(est)
