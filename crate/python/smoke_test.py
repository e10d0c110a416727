"""Quick check that the extension module loads and agrees with known values."""

import isogeny_lgp as il


def main():
    # Borel mod 3: upper triangular invertible matrices.
    b = il.Group(3, 1, [[[1, 1], [0, 1]], [[2, 0], [0, 1]], [[1, 0], [0, 2]]])
    assert b.order == 12, b
    assert [[1, 2], [0, 1]] in b
    assert b.all_charpoly_root()
    g = b.genus()
    assert g["genus"] == 0 and g["index_mu"] == 4, g

    groups = il.search_exceptional_2adic(3)
    assert len(groups) == 2
    assert all(h.is_exceptional_2adic() for h in groups)
    assert {h.gl2_level() for h in groups} == {2}

    assert il.genus_x0(11) == 1
    assert il.genus_x0(37) == 2
    assert il.quad_roots(0, -1, 2, 3) == [1, 3, 5, 7]

    assert il.cartan_order(3, 1, -4) == 8
    rep = il.cm_classify(7, 1, -7)
    assert rep["case"] == "ramified-prime", rep
    assert il.cm_abc(7, -7) == (1, 7, 1, 16)

    data = "\n".join(f"{p} {a}" for p, a in [(3, 0), (5, 2), (11, 0)])
    print("witness mod 2^5:", il.frob_witness(data, 2, 5))

    checks = il.verify(["squares", "table1"])
    assert all(c["passed"] for c in checks), checks
    print("ok:", ", ".join(c["name"] for c in checks))


if __name__ == "__main__":
    main()
