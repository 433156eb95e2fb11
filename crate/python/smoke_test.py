"""Smoke test for the pybiot extension module."""

import math
import sys

import pybiot


def main() -> int:
    print("pybiot", pybiot.__version__)

    info = pybiot.mesh_info("triangular", 1)
    print("triangular-1:", info)
    assert info["elements"] > 0 and info["h"] > 0

    size = pybiot.condensed_size("hexagonal", 1, 1)
    print("hexagonal-1 condensed size (k=1):", size)
    assert size > 0

    records = pybiot.convergence("triangular", [1, 2, 3], k=1, check_fluxes=True)
    for r in records:
        print(f"{r['label']:<16} h={r['h']:.4e} p_err={r['pressure_error']:.4e} "
              f"u_err={r['displacement_error']:.4e} eoc_p={r['pressure_eoc']} eoc_u={r['displacement_eoc']}")
    last = records[-1]
    assert last["pressure_eoc"] > 1.5 and last["displacement_eoc"] > 1.5
    assert max(r["max_flux_residual"] for r in records) < 1e-10

    bm = pybiot.barry_mercer("hexagonal", 2, samples=200)
    for p in bm["profiles"]:
        peak = max(p["pressure"], key=abs)
        print(f"t_hat={p['t_hat']:.4f} step={p['step']} peak={peak:.4e}")
    failed = [c for c in bm["checks"] if not c[1]]
    for name, ok, detail in bm["checks"]:
        print("PASS" if ok else "FAIL", name, detail)
    assert not failed

    try:
        pybiot.mesh_info("pentagonal", 0)
    except ValueError as e:
        print("rejected unknown family:", e)
    else:
        raise AssertionError("unknown family accepted")

    assert math.isfinite(bm["final_t_hat"])
    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
