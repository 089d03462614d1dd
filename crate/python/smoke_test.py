"""Quick end-to-end check of the extension module."""

import math

import pylocnot as lc

ONE_THIRD = 1.0 / 3.0


def close(a, b, tol=1e-9):
    return abs(a - b) < tol


def main():
    conceptual = lc.Circuit.conceptual()
    experimental = lc.Circuit.experimental()
    print(conceptual, experimental)

    table = lc.truth_table(conceptual)
    expected = [0, 1, 3, 2]
    for i, row in enumerate(table):
        assert close(row[expected[i]], 1.0), row

    plus = (1 / math.sqrt(2), 1 / math.sqrt(2))
    zero = (1.0, 0.0)
    psi, p = lc.run(experimental, plus, zero)
    assert close(p, 1 / 9)
    assert close(lc.fidelity([[a * b.conjugate() for b in psi] for a in psi], lc.bell_state("phi-plus")), 1.0)

    # the DSL round trip gives the same operator
    again = lc.Circuit.from_dsl(experimental.to_dsl())
    assert again.logical_operator() == experimental.logical_operator()

    xi = lc.calibrate_overlap(conceptual, 0.75)
    assert close(xi, 5 / 6)
    assert close(lc.flip_probability(conceptual, xi), 0.75)
    _, p = lc.run_with_mismatch(conceptual, (0.0, 1.0), zero, xi)
    assert close(p, xi / 9 + (1 - xi) * ONE_THIRD)
    rho, _ = lc.run_with_mismatch(conceptual, plus, zero, xi)
    print(f"xi* = {xi:.6f}, Bell fidelity {lc.fidelity(rho, lc.bell_state('phi-plus')):.4f}")

    w = lc.werner(0.8)
    assert close(lc.concurrence(w), 0.7)
    assert close(lc.chsh_max(w), 1.6 * math.sqrt(2))

    counts = lc.simulate_counts(rho, 100_000, 7)
    assert counts == lc.simulate_counts(rho, 100_000, 7)
    fit, loglik, iterations = lc.mle(counts)
    print(f"MLE: {iterations} iterations, tangle {lc.tangle(fit):.4f}, S_L {lc.linear_entropy(fit):.4f}")
    assert lc.fidelity(fit, lc.bell_state("phi-plus")) > 0.75

    try:
        lc.Circuit.from_dsl("modes 2\nfrobnicate 0 1\n")
    except ValueError as e:
        assert "line 2" in str(e)
    else:
        raise AssertionError("bad DSL accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()
