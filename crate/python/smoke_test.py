"""Smoke test for the nilfourier Python bindings.

Build first with `pip install --no-build-isolation -e crates/nilfourier-py`.
"""

import math

import nilfourier as nf


def main():
    b = nf.Basis(2, 5)
    assert b.layer_dims() == [2, 1, 2, 3, 6], b.layer_dims()

    heis = nf.Basis(2, 2)
    assert heis.labels() == ["[1,2]", "1", "2"]
    assert heis.bracket([0, 1, 0], [0, 0, 1]) == [1.0, 0.0, 0.0]
    z = heis.bch([0, 1, 0], [0, 0, 1])
    assert abs(z[0] - 0.5) < 1e-14

    levels = nf.signature([[0, 0], [1, 0], [1, 1]], 2)
    assert levels[2] == [0.5, 1.0, 0.0, 0.5], levels
    rows = dict(nf.log_signature([[0, 0], [1, 0], [1, 1]], nf.Basis(2, 3)))
    assert abs(rows["[1,2]"] - 0.5) < 1e-14

    assert nf.is_generic(heis, [1.0, 0.0, 0.0])
    assert not nf.is_generic(heis, [0.0, 1.0, 1.0])
    jumps = nf.jump_sets(nf.Basis(3, 3))
    assert (len(jumps["S"]), len(jumps["T"])) == (6, 8)

    b33 = nf.Basis(3, 3)
    ell = nf.sample_generic(b33, 7)
    pol = nf.polarization(b33, ell)
    assert pol["pass"] and pol["dim"] == 11
    assert nf.full_orbit_dim(b33, ell) == 6

    widths, centre = [1.0, 0.8, 1.2], [0.0, 0.0, 0.0]
    value = nf.invert_gaussian(heis, widths, centre, [0.0, 0.3, 0.0])
    exact = math.exp(-0.3**2 / (2 * 0.8**2))
    assert abs(value - exact) < 1e-3, (value, exact)
    lhs, rhs = nf.plancherel_gaussian(heis, widths, centre)
    assert abs(rhs / lhs - 1) < 1e-3, (lhs, rhs)

    try:
        nf.Basis(0, 2)
    except nf.NilfourierError as e:
        assert str(e).startswith("InvalidSpec"), e
    else:
        raise AssertionError("expected NilfourierError")

    print(f"ok: f(exp 0.3X1) = {value.real:.6f} (exact {exact:.6f}), Plancherel ratio {rhs / lhs:.6f}")


if __name__ == "__main__":
    main()
