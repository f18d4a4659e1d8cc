"""Smoke test for the asymx Python extension.

Build and install first, e.g. ``maturin develop -m crates/py/Cargo.toml``,
then run ``python python/smoke_test.py`` from the repository root.
"""

import math
from pathlib import Path

import asymx

ROOT = Path(__file__).resolve().parent.parent
RECIPES = ROOT / "crates" / "core" / "recipes"


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    assert asymx.cost("ADBN", 128, 16) == 52432.0
    assert close(asymx.power("ADBN", 128, 16), 790.9333333, 1e-6)

    geo = asymx.ArrayGeometry(128)
    comb = asymx.AntennaSelection("comb", 128, 32)
    assert len(comb) == 32 and comb.indices[:2] == [1, 5]
    grid, af = asymx.array_factor(comb, geo, [-0.5, 0.0, 0.5])
    assert all(close(v, 32.0) for v in af), af

    sel = asymx.AntennaSelection("random", 128, 32, pinned=True, seed=3)
    assert sel.indices[0] == 1 and sel.indices[-1] == 128
    paths = asymx.PathSet.from_spatial([0.9 + 0.2j, -0.4j], [0.31, -0.52])
    h_s = asymx.uplink_channel(paths, sel, geo)
    h_d = asymx.downlink_channel(paths, geo)
    assert all(abs(h_s[i] - h_d[idx - 1]) < 1e-12 for i, idx in enumerate(sel.indices))

    res = asymx.channel_transfer("mnomp", h_s, sel, geo, threshold=1e-5)
    assert res.threshold_met and len(res.gains) >= 2
    assert asymx.nmse(res.channel, h_d) < 1e-4

    t1, t2 = math.radians(51.3), math.radians(54.3)
    succ = asymx.AntennaSelection("successive", 256, 32)
    theta = math.degrees(asymx.composite_angle(t1, t2, 0.0, 0.0, succ, asymx.ArrayGeometry(256)))
    assert abs(theta - 52.8) <= 0.15, theta
    mid = math.asin(0.5 * (math.sin(t1) + math.sin(t2)))
    closed = asymx.snr_loss_closed_form(t1, t2, mid, 0.0, math.pi, 32)
    numeric = asymx.snr_loss_numeric(t1, t2, mid, 0.0, math.pi, 32)
    assert 0.0 < closed < 1.0 and close(closed, numeric, 1e-10)

    csv_text = asymx.run_experiment("cost-table", str(RECIPES / "cost_table.cfg"))
    assert csv_text.splitlines()[0] == "architecture,M,N,epsilon,cost_usd,power_w"

    nmse_csv = asymx.run_experiment(
        "transfer-nmse", str(RECIPES / "transfer_nmse_los.cfg"), seed=3, trials=2
    )
    rows = nmse_csv.splitlines()
    assert rows[0].startswith("snr_db,algorithm,selection,N,nmse_db") and len(rows) > 1

    try:
        asymx.AntennaSelection("comb", 128, 33)
    except ValueError:
        pass
    else:
        raise AssertionError("comb with N not dividing M must fail")

    print("asymx smoke test passed")


if __name__ == "__main__":
    main()
