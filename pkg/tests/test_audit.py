import numpy as np
import pytest

import gen
from wstar.algebra import MultiMatrixAlgebra
from wstar.bimod import CC, Bimodule
from wstar.errors import AlgebraMismatch, WStarError
from wstar.funcat import Report, biinvolutive_audit, vn2_wstarcat_roundtrip

M = MultiMatrixAlgebra
TOL = 1e-9


class TestReport:
    def test_lines(self):
        r = Report("demo", 3, 1e-9)
        r.add("a", 0.0)
        r.add("b", 2.0)
        assert r.lines() == [
            "# demo seed=3 tol=1.000e-09",
            "a residual=0.000e+00 pass",
            "b residual=2.000e+00 fail",
        ]
        assert not r.passed
        doc = r.to_document()
        assert doc["kind"] == "report" and [e["pass"] for e in doc["entries"]] == [True, False]

    def test_explicit_pass(self):
        r = Report("demo", 0, 1e-9)
        r.add("x", 5.0, passed=True)
        assert r.passed


class TestBiinvolutive:
    DIAGRAMS = ["hexagon", "unit-left", "unit-right", "phi-unit", "phi-tensor", "nu-naturality"]

    def test_unit_sample(self):
        A = M([2, 1])
        rep = biinvolutive_audit(A, [Bimodule.regular(A)])
        assert [e[0] for e in rep.entries] == self.DIAGRAMS
        assert rep.passed
        assert max(e[1] for e in rep.entries[:5]) == 0

    def test_hilbert_spaces(self):
        rep = biinvolutive_audit(CC, [Bimodule(CC, CC, [[n]]) for n in (1, 2, 3)])
        assert all(e[1] <= 1e-10 for e in rep.entries)

    def test_m2_sample(self):
        rng = np.random.default_rng(11)
        A = M([2])
        sample = [gen.bimodule(rng, A, A, hi=4, max_dim=32) for _ in range(3)]
        rep = biinvolutive_audit(A, sample, seed=11)
        assert rep.passed and rep.seed == 11
        assert rep.entries[0][3] == 27

    def test_empty(self):
        with pytest.raises(WStarError):
            biinvolutive_audit(CC, [])

    def test_wrong_algebra(self):
        with pytest.raises(AlgebraMismatch):
            biinvolutive_audit(M([2]), [Bimodule(M([2]), M([1]), [[1]])])

    def test_deterministic(self):
        A = M([1, 2])
        sample = [Bimodule(A, A, [[1, 0], [1, 1]])]
        assert str(biinvolutive_audit(A, sample, seed=4)) == str(biinvolutive_audit(A, sample, seed=4))


class TestRoundTrip:
    def test_regular(self):
        A = M([2, 1])
        rep = vn2_wstarcat_roundtrip(A, A, Bimodule.regular(A))
        assert rep.passed

    def test_random(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            A, B, C = gen.algebra(rng), gen.algebra(rng), gen.algebra(rng)
            X = gen.bimodule(rng, B, A)
            Y = gen.bimodule(rng, C, B)
            rep = vn2_wstarcat_roundtrip(A, B, X, Y)
            assert rep.passed, str(rep)

    def test_mismatch(self):
        A, B = M([2]), M([1])
        with pytest.raises(AlgebraMismatch):
            vn2_wstarcat_roundtrip(A, B, Bimodule(A, B, [[1]]))
