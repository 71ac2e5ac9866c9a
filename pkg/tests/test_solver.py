from __future__ import annotations

import copy
import json

import pytest

from strongapprox.errors import ConfigRejectedError
from strongapprox.groups import GroupElement, GroupSpec
from strongapprox.solver import (
    AdelicWindow,
    Certificate,
    SubsetSpec,
    build_f,
    canonical_json,
    config_hash,
    load_config,
    solve,
    symbolic_quotient,
    validate_subset,
    verify_certificate,
)


def _mutate(cert, fn):
    data = json.loads(cert.dumps())
    fn(data)
    return Certificate(data)


def test_flagship_certificate_verifies(flagship_certificate, flagship_config):
    d = flagship_certificate.data
    assert flagship_certificate.ok
    assert d["config_hash"] == config_hash(flagship_config)
    assert d["S0"] == ["337"] and d["f_value"] == "2696" and d["l"] == 0
    rep = verify_certificate(flagship_certificate)
    assert rep.ok, rep.problems
    assert rep.checks == {"a": True, "b": True, "c": True, "d": True}


def test_certificate_round_trip(flagship_certificate):
    again = Certificate.loads(flagship_certificate.dumps())
    assert again.dumps() == flagship_certificate.dumps()


def test_flagship_point_lies_in_window(flagship_certificate, quat):
    P2 = GroupElement(quat, tuple(int(c) for c in flagship_certificate.data["P_dprime"]))
    assert all((c - e) % 4 == 0 for c, e in zip(P2.coords, (1, 0, 0, 0)))
    assert P2.coords[1] != 0 or P2.coords[2] != 0


def test_perturbed_point_fails(flagship_certificate):
    def bump(d):
        d["P_dprime"][0] = str(int(d["P_dprime"][0]) + 1)

    rep = verify_certificate(_mutate(flagship_certificate, bump))
    assert not rep.ok
    assert any("P_dprime" in p and "reduced norm" in p for p in rep.problems), rep.problems


def test_missing_bad_place_fails(flagship_certificate):
    def drop(d):
        d["S0"] = []

    rep = verify_certificate(_mutate(flagship_certificate, drop))
    assert not rep.ok
    assert any("S0" in p for p in rep.problems)


def test_altered_value_or_index_fails(flagship_certificate):
    def value(d):
        d["f_value"] = str(int(d["f_value"]) * 3)

    def index(d):
        d["l"] = 1

    for fn in (value, index):
        assert not verify_certificate(_mutate(flagship_certificate, fn)).ok


def test_altered_config_fails_hash(flagship_certificate):
    def cfg(d):
        d["config"]["budgets"]["seed"] = 1

    rep = verify_certificate(_mutate(flagship_certificate, cfg))
    assert "config hash mismatch" in rep.problems


def test_isotropic_solve(isotropic_config):
    cert = solve(isotropic_config)
    d = cert.data
    assert d["P_dprime"] == ["26", "-5", "-5", "1"]
    assert d["checks"]["d"] is None
    assert verify_certificate(cert).ok


def test_window_inside_subset_rejected(isotropic_config):
    cfg = copy.deepcopy(isotropic_config)
    cfg["window"] = {"moduli": [{"modulus": 3, "residues": [[1, 0, 0, 1]]}], "S": []}
    with pytest.raises(ConfigRejectedError, match="mod 3"):
        solve(cfg)
    # the same window is fine once 3 belongs to S
    cfg["window"]["S"] = [3]
    assert verify_certificate(solve(cfg)).ok


def test_window_validation():
    with pytest.raises(ConfigRejectedError):
        AdelicWindow.from_json({"moduli": [{"modulus": 6, "residues": [[1, 0, 0, 1]]}]})
    with pytest.raises(ConfigRejectedError):
        AdelicWindow.from_json({"moduli": [{"modulus": 4, "residues": [[1, 0, 0, 1]]},
                                           {"modulus": 8, "residues": [[1, 0, 0, 1]]}]})
    with pytest.raises(ConfigRejectedError):
        AdelicWindow.from_json({"moduli": [{"modulus": 5, "residues": []}]})


def test_window_residue_outside_group(isotropic_config):
    cfg = copy.deepcopy(isotropic_config)
    cfg["window"]["moduli"][0]["residues"] = [[1, 1, 1, 1]]
    with pytest.raises(ConfigRejectedError, match="not in the group"):
        load_config(cfg)


def test_empty_window_starts_at_identity(flagship_config):
    cfg = copy.deepcopy(flagship_config)
    del cfg["window"]
    cfg["sieve"]["min_bad_places"] = 0
    cert = solve(cfg)
    d = cert.data
    assert d["P"] == ["1", "0", "0", "0"]
    assert d["S0"] == [] and d["P_prime"] == d["P_dprime"] and d["l"] == 0
    assert verify_certificate(cert).ok


def test_crt_window_isotropic(isotropic_config):
    cfg = copy.deepcopy(isotropic_config)
    cfg["window"] = {"moduli": [{"modulus": 2, "residues": [[1, 0, 0, 1]]},
                                {"modulus": 3, "residues": [[1, 0, 0, 1]]}], "S": [2, 3]}
    cert = solve(cfg)
    P2 = [int(c) for c in cert.data["P_dprime"]]
    assert all((c - e) % 6 == 0 for c, e in zip(P2, (1, 0, 0, 1)))
    assert verify_certificate(cert).ok


def test_crt_window_flagship(flagship_config):
    cfg = copy.deepcopy(flagship_config)
    cfg["window"] = {"moduli": [{"modulus": 4, "residues": [[1, 0, 0, 0]]},
                                {"modulus": 5, "residues": [[3, 1, 2, 4]]}], "S": [2, 3]}
    cfg["sieve"].update(gcd_height=512, theta_height=1024, min_bad_places=0)
    cfg["budgets"]["height_max"] = 4096
    cert = solve(cfg)
    P2 = [int(c) for c in cert.data["P_dprime"]]
    assert [c % 4 for c in P2] == [1, 0, 0, 0] and [c % 5 for c in P2] == [3, 1, 2, 4]
    assert verify_certificate(cert).ok


def test_window_is_stable_under_the_orbit(flagship_certificate, quat):
    from strongapprox.torus import TorusSpec

    t = TorusSpec.fundamental(quat, modulus=4)
    P1 = GroupElement(quat, tuple(int(c) for c in flagship_certificate.data["P_prime"]))
    for l in range(7):
        assert [c % 4 for c in (t.Q_pow(l) * P1).coords] == [1, 0, 0, 0]


def test_f_is_separating_function_of_the_quotient(quat, flagship_f):
    pi = symbolic_quotient(quat)
    from strongapprox.polynomial import RegularFunction

    F = RegularFunction.coordinate(3)
    f = build_f(quat, F, GroupElement.identity(quat))
    assert f == flagship_f
    g = (5, 3, 2, 1)
    assert F([c(g) for c in pi]) == flagship_f(g)


def test_subset_validation(flagship_config):
    rep = validate_subset(load_config(flagship_config))
    assert rep.n_fiber == 2
    cfg = copy.deepcopy(flagship_config)
    cfg["separating_function"] = {"name": "i-coefficient", "terms": [{"coef": "1", "exp": [0, 1, 0, 0]}]}
    with pytest.raises(ConfigRejectedError):
        validate_subset(load_config(cfg))
    cfg = copy.deepcopy(flagship_config)
    cfg["subset"]["n_fiber"] = 1
    with pytest.raises(ConfigRejectedError, match="N_fiber"):
        validate_subset(load_config(cfg))


def test_codim_must_be_two():
    with pytest.raises(ConfigRejectedError):
        SubsetSpec.from_json({"generators": [], "codim": 1})


def test_canonical_json_is_order_free():
    assert canonical_json({"b": 1, "a": [1, 2]}) == canonical_json({"a": [1, 2], "b": 1})


def test_separability_is_flagged(flagship_certificate):
    from strongapprox.polynomial import RegularFunction
    from strongapprox.solver import separability_flag

    flag = flagship_certificate.data["trail"]["separability"]
    assert flag["checked"] is False and flag["immediate"] is True
    sq = RegularFunction.coordinate(3) * RegularFunction.coordinate(3)
    assert separability_flag(sq)["immediate"] is False
