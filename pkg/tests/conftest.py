import random

import pytest

from specforge.domain import Claim, ClaimSet, FigureText, InputDocument
from specforge.gateway import Gateway, ScriptedBackend
from specforge.logs import CallLog, QueryLog, RunLog

import synth


def fixed_clock() -> str:
    return "2000-01-01T00:00:00.000+00:00"


@pytest.fixture
def clock():
    return fixed_clock


@pytest.fixture
def demo_claims() -> ClaimSet:
    return ClaimSet(
        claims=(
            Claim(1, "A method for amplifying nucleic acid comprising thermal cycling of a reaction mixture."),
            Claim(2, "The method of claim 1 wherein the reaction mixture comprises a polymerase enzyme."),
            Claim(3, "The method of claim 2 wherein amplified product is detected by fluorescence."),
        ),
        source_id="demo-001",
    )


@pytest.fixture
def demo_figures() -> tuple[FigureText, ...]:
    return (
        FigureText("FIG. 1", "reaction vessel 10, heater block 12"),
        FigureText("FIG. 2", "detector 20, light source 22"),
    )


@pytest.fixture
def demo_doc(demo_claims, demo_figures) -> InputDocument:
    return InputDocument(source_id="demo-001", claims=demo_claims, figures=demo_figures)


def make_gateway(responses, clock=fixed_clock, **backend_kwargs) -> Gateway:
    backend = ScriptedBackend(responses, **backend_kwargs)
    return Gateway(backend, call_log=CallLog(clock=clock), sleep=lambda s: None, clock=clock)


@pytest.fixture
def gateway_factory():
    return make_gateway


@pytest.fixture
def run_log(clock) -> RunLog:
    return RunLog(clock=clock)


@pytest.fixture
def query_log(clock) -> QueryLog:
    return QueryLog(clock=clock)


@pytest.fixture
def pipeline_run(demo_doc, run_log):
    """Scripted full-pipeline gateway for the demo document (2 concepts)."""
    script = synth.build_pipeline_script(demo_doc, n_concepts=2)
    return make_gateway(script), run_log
