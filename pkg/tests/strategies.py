"""Hypothesis strategies for registry models and seeds."""

from hypothesis import strategies as st

from lecam_euler.sde_core.models import make_model

seeds = st.integers(min_value=0, max_value=2**64 - 1)


@st.composite
def models(draw):
    drift = draw(st.sampled_from(["zero", "constant", "tanh", "sin"]))
    A = draw(st.floats(-2.0, 2.0, allow_nan=False))
    beta = draw(st.floats(0.2, 3.0))
    dparams = {"zero": {}, "constant": {"c": A}, "tanh": {"A": A, "beta": beta},
               "sin": {"A": A, "beta": beta}}[drift]
    if draw(st.booleans()):
        c = draw(st.floats(0.3, 3.0))
        d = draw(st.floats(0.0, 0.95)) * c
        omega = draw(st.floats(0.2, 3.0))
        return make_model(drift, dparams, "cos", {"c": c, "d": d, "omega": omega})
    c = draw(st.floats(0.3, 3.0)) * draw(st.sampled_from([-1.0, 1.0]))
    return make_model(drift, dparams, "constant", {"c": c})
