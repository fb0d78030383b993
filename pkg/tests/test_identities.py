import numpy as np
import pytest

from curlmat import identities
from curlmat.builders import build_curl_cg
from curlmat.diffop import DegreeCapError
from curlmat.identities import (OperatorSet, all_pass,
                                cartesian_identity_pairs, complex_identity_pairs,
                                core_identity_pairs, exponential_pair,
                                hermitian_identity_pairs, power_identity_pairs,
                                verify_all, verify_core_identities,
                                verify_exponential,
                                verify_hermitian_complex_suites,
                                verify_power_laws)


class TestCoreSuite:
    def test_all_exact_pass(self):
        reports = verify_core_identities(4)
        assert all_pass(reports)
        assert {r.identity_id for r in reports} == {
            "curl-grad-zero", "div-curl-zero", "curl-squared-rank1",
            "curl-grad-intertwine", "div-curl-intertwine", "curl-squared"}

    def test_curl_squared_covers_requested_ranks(self):
        report = next(r for r in verify_core_identities(4)
                      if r.identity_id == "curl-squared")
        assert report.l_range == [1, 2, 3, 4]

    def test_l_max_validation(self):
        with pytest.raises(ValueError):
            verify_core_identities(0)
        with pytest.raises(ValueError):
            verify_core_identities(7)


class TestPowerLaws:
    def test_all_exact_pass(self):
        assert all_pass(verify_power_laws(4))

    def test_parity_report_present(self):
        ids = {r.identity_id for r in verify_power_laws(2)}
        assert "curl1-power-parity" in ids
        assert "cartesian-power-parity" in ids

    def test_cap_exceeded(self, monkeypatch):
        monkeypatch.setenv("CURLMAT_DEGREE_CAP", "5")
        with pytest.raises(DegreeCapError):
            verify_power_laws(3)


class TestExponential:
    def test_truncations(self):
        for n in (0, 1, 3):
            report = verify_exponential(n)
            assert report.passed
            assert report.l_range == [n]

    def test_cap_exceeded_no_partial_report(self, monkeypatch):
        monkeypatch.setenv("CURLMAT_DEGREE_CAP", "6")
        with pytest.raises(DegreeCapError):
            verify_exponential(3)


class TestHermitianComplexSuites:
    def test_all_exact_pass(self):
        reports = verify_hermitian_complex_suites(4)
        assert all_pass(reports)
        # six hermitian + six complex + nine cartesian checks
        assert len(reports) == 21

    def test_expected_identity_ids(self):
        ids = [r.identity_id for r in verify_hermitian_complex_suites(2)]
        for needed in ("hermitian-curl-squared", "complex-curl-squared",
                       "cartesian-complex-double-curl",
                       "cartesian-hermitian-double-curl",
                       "cartesian-div-complex-curl-zero"):
            assert needed in ids


class TestReportShape:
    def test_as_dict(self):
        report = verify_core_identities(2)[0]
        payload = report.as_dict()
        assert payload["status"] == "exact-pass"
        assert payload["witness"] is None

    def test_failure_carries_witness(self):
        mutant = _flip_entry(build_curl_cg(1), 0, 0)
        reports = verify_core_identities(2, OperatorSet({1: mutant}))
        failed = [r for r in reports if not r.passed]
        assert failed
        assert all(r.witness is not None and not r.witness.is_zero for r in failed)


def _flip_entry(op, i, j):
    return op.replace_entry(i, j, -op.entry(i, j))


def _failure_count(ops: OperatorSet) -> int:
    reports = (verify_core_identities(2, ops)
               + verify_power_laws(2, ops)
               + [verify_exponential(1, ops)]
               + verify_hermitian_complex_suites(2, ops))
    return sum(not r.passed for r in reports)


class TestMutationSensitivity:
    def test_every_nonzero_entry_flip_breaks_suites(self):
        curl = build_curl_cg(1)
        flips = 0
        for i in range(3):
            for j in range(3):
                if curl.entry(i, j).is_zero:
                    continue
                flips += 1
                mutant = _flip_entry(curl, i, j)
                assert _failure_count(OperatorSet({1: mutant})) >= 3, (i, j)
        assert flips == 6  # the corners and the center of the rank-1 curl are zero

    def test_unmutated_suite_is_clean(self):
        assert _failure_count(OperatorSet()) == 0


class TestSymbolCrossCheck:
    def test_identities_hold_numerically(self):
        rng = np.random.default_rng(2718)
        pairs = (core_identity_pairs(3) + hermitian_identity_pairs(3)
                 + complex_identity_pairs(3) + cartesian_identity_pairs()
                 + power_identity_pairs(2)
                 + [("curl1-exponential-series", 2, *exponential_pair(2))])
        for ident, _, lhs, rhs in pairs:
            for _ in range(10):
                k = 3.0 * rng.normal(size=3)
                a = lhs.symbol_at(k)
                b = rhs.symbol_at(k)
                scale = 1.0 + float(np.abs(b).max())
                assert np.allclose(a, b, atol=1e-10 * scale), ident


class TestVerifyAll:
    def test_default_bundle(self):
        suites = verify_all(l_max=2, n_max=2, exp_terms=1)
        assert set(suites) == {"core", "powers", "exp", "hermitian", "complex"}
        for reports in suites.values():
            assert all_pass(reports)
