"""Collocated-correlation bound tests: reproduction targets, boundary
properties, ordering against the spectral oracle, and curve tables."""

import io
import math

import numpy as np
import pytest

from mvmatern.bounds import (
    EquicorrStructure,
    example_curve,
    rho_max,
)
from mvmatern.validity import run_check


class TestRhoMax:
    def test_reproduction_targets_single_point(self):
        # full beta/p sweep is acceptance criterion 1; one configuration here
        structure = EquicorrStructure.fig1(1.0, 0.0, p=2, d=2)
        ap = rho_max(structure, "apanasovich", tol=1e-5)
        b3 = rho_max(structure, "thm3B", tol=1e-5)
        assert ap.feasible and b3.feasible
        assert ap.value == pytest.approx(0.064, abs=1e-3)
        assert b3.value == pytest.approx(0.523, abs=1e-3)

    def test_closed_form_boundary(self):
        # rho_max under route B for the two-value structure:
        # (e/2) beta sqrt(0.5 beta) / (1.5 beta + a)^{3/2}
        for beta, a in ((0.5, 0.0), (1.0, 0.7), (2.0, 2.5)):
            expected = (
                math.e / 2.0 * beta * math.sqrt(0.5 * beta)
                / (1.5 * beta + a) ** 1.5
            )
            structure = EquicorrStructure.fig1(beta, a)
            got = rho_max(structure, "thm3B", tol=1e-6).value
            assert got == pytest.approx(expected, abs=1e-5)

    def test_equal_parameters_saturate(self):
        structure = EquicorrStructure(
            alpha=np.full((2, 2), 1.1),
            nu=np.full((2, 2), 0.7),
            d=2,
        )
        assert rho_max(structure, "gneiting").value == 1.0

    def test_boundary_bracketing(self):
        structure = EquicorrStructure.fig1(1.0, 0.5, p=3, d=2)
        tol = 1e-4
        for set_id in ("apanasovich", "thm3B"):
            result = rho_max(structure, set_id, tol=tol)
            hypers = {"beta": structure.beta} if set_id == "thm3B" else {}
            below = run_check(set_id, structure.spec(result.value - 2 * tol), **hypers)
            above = run_check(set_id, structure.spec(result.value + 2 * tol), **hypers)
            assert below.satisfied
            assert not above.satisfied

    def test_infeasible_sets_flagged(self):
        # the log-saturating scale structure violates every CND-scale clause
        structure = EquicorrStructure.fig2(1.0)
        for set_id in ("thm3B", "apanasovich", "ex3"):
            result = rho_max(structure, set_id)
            assert result == (0.0, False)

    def test_sufficient_never_exceeds_oracle(self):
        for a in (0.05, 0.4, 2.0, 8.0):
            structure = EquicorrStructure.fig2(a)
            oracle = rho_max(structure, "spectral_oracle", tol=1e-5).value
            for set_id in ("thm2A", "thm3A"):
                value = rho_max(structure, set_id, tol=1e-5).value
                assert value <= oracle + 1e-4

    def test_dimension_scaling(self):
        # the dimension-dependent set tightens with d; route B does not move
        ap = []
        b3 = []
        for d in (2, 3, 5):
            structure = EquicorrStructure.fig1(1.0, 0.0, p=2, d=d)
            ap.append(rho_max(structure, "apanasovich", tol=1e-5).value)
            b3.append(rho_max(structure, "thm3B", tol=1e-5).value)
        assert ap[0] > ap[1] > ap[2]
        assert max(b3) - min(b3) <= 2e-5

    def test_fig2_ordering(self):
        structure = EquicorrStructure.fig2(1.0)
        t2 = rho_max(structure, "thm2A", tol=1e-5).value
        t3 = rho_max(structure, "thm3A", tol=1e-5).value
        assert t2 == pytest.approx(math.log(2.0) / 3.0, abs=1e-4)
        assert t2 >= t3


class TestStructures:
    def test_fig1_matrices(self):
        s = EquicorrStructure.fig1(2.0, 0.5, p=3)
        assert s.alpha[0, 0] == pytest.approx(math.sqrt(1.0))
        assert s.alpha[0, 1] == pytest.approx(math.sqrt(3.5))
        assert s.nu[0, 0] == 0.5 and s.nu[0, 1] == 1.5
        sigma = s.spec(0.3).sigma
        assert sigma[0, 0] == 1.0 and sigma[0, 2] == 0.3

    def test_fig2_matrices(self):
        s = EquicorrStructure.fig2(1.0)
        assert s.alpha[0, 0] == 1.0
        assert s.alpha[0, 1] == pytest.approx(math.sqrt(math.log(2.0)))

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            EquicorrStructure.fig1(0.0, 0.0)
        with pytest.raises(ValueError):
            EquicorrStructure.fig2(0.0)


class TestCurves:
    def test_fig1_table_layout(self):
        table = example_curve("fig1", [0.5, 1.0], a=0.5, workers=1, tol=1e-4)
        assert table.columns == ("thm3B", "apanasovich")
        buf = io.StringIO()
        table.to_csv(buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "beta,rho_max_thm3B,rho_max_apanasovich"
        assert len(lines) == 3
        ratio = table.column("thm3B") / table.column("apanasovich")
        assert np.all(ratio > 5.0)

    def test_fig2_table_layout(self):
        table = example_curve("fig2", [0.5, 1.0], workers=1, tol=1e-3)
        assert table.columns == ("thm2A", "thm3A", "spectral_oracle")
        assert table.values.shape == (2, 3)

    def test_parallel_matches_serial(self):
        grid = [0.3, 1.0, 3.0]
        serial = example_curve("fig2", grid, workers=1, tol=1e-3)
        parallel = example_curve("fig2", grid, workers=4, tol=1e-3)
        assert np.array_equal(serial.values, parallel.values)

    def test_fig1_requires_offset(self):
        with pytest.raises(ValueError):
            example_curve("fig1", [1.0], workers=1)

    def test_unknown_example(self):
        with pytest.raises(ValueError):
            example_curve("fig3", [1.0], workers=1)
