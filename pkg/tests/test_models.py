import math

import numpy as np
import pytest

from leafwise.foliated import (
    FoliatedContactPair,
    LeafContactForm,
    SymplecticFoliationPair,
    check_frobenius,
    verify_contact_foliation,
    verify_leaf_contact,
    verify_symplectic_foliation,
)
from leafwise.flows import ContactFamily
from leafwise.models import (
    MODELS,
    build,
    describe,
    divisor_side,
    mapping_torus_model,
    overtwisted_model,
    reparametrized_t4_family,
    standard_local_model,
    standard_symplectic_foliation,
    t4_model,
)

KINDS = {"contact": FoliatedContactPair, "leaf": LeafContactForm, "symplectic": SymplecticFoliationPair, "family": ContactFamily}


@pytest.mark.parametrize("name", sorted(MODELS))
def test_registry_builds_expected_kind(name):
    obj = build(name)
    assert isinstance(obj, KINDS[MODELS[name].kind])
    d = describe(name)
    assert d.chart == getattr(obj, "chart")
    assert d.provenance


def test_descriptors_are_deterministic():
    a, b = describe("t4", p=1.0, q=0.5), describe("t4", q=0.5, p=1)
    assert a == b
    assert a.parameters == {"p": 1.0, "q": 0.5, "r": 0.0, "s": 1.0}


def test_registry_errors():
    with pytest.raises(KeyError):
        describe("nope")
    with pytest.raises(KeyError):
        describe("t4", radius=2.0)
    with pytest.raises(ValueError):
        standard_symplectic_foliation(3)
    with pytest.raises(ValueError):
        reparametrized_t4_family(amplitude=0.5)


@pytest.mark.parametrize("p,q,r", [(0, 0, 0), (1.0, 0.5, 0.25), (math.sqrt(2), -3.0, 0.7)])
def test_t4_ratio(p, q, r):
    report = verify_contact_foliation(t4_model(p, q, r, certify=False))
    assert report.passed
    assert report.value == pytest.approx(2 * math.pi, abs=1e-9)


def test_t4_scaled_transverse_form():
    # beta scales by s; the ratio against leaf volume ∧ beta is unchanged
    report = verify_contact_foliation(t4_model(0.3, 0.2, 0.1, s=2.0, certify=False))
    assert report.passed and report.value == pytest.approx(2 * math.pi, abs=1e-9)


def test_local_model_ratio_is_2r():
    pair = standard_local_model(certify=False)
    pts = pair.chart.grid(9)
    frame = np.eye(pair.chart.dim)
    ratio = [pair.contact_volume.evaluate(p, frame) / pair.orientation_form.evaluate(p, frame) for p in pts]
    np.testing.assert_allclose(ratio, 2 * pts[:, 2], atol=1e-12)


@pytest.mark.parametrize("builder", [standard_local_model, mapping_torus_model, divisor_side, t4_model])
def test_contact_models_integrable(builder):
    pair = builder(certify=False)
    assert check_frobenius(pair.beta).passed
    assert verify_contact_foliation(pair).passed


def test_mapping_torus_ratio_is_one():
    report = verify_contact_foliation(mapping_torus_model(certify=False))
    assert report.value == pytest.approx(1.0, abs=1e-12)


def test_overtwisted_leaf_and_symplectic():
    assert verify_leaf_contact(overtwisted_model(certify=False)).passed
    for n in (1, 2):
        assert verify_symplectic_foliation(standard_symplectic_foliation(n, certify=False)).passed
