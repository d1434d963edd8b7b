"""Shared fixtures: the reference table fixture and a converged toy classifier."""

from __future__ import annotations

import sys
from datetime import datetime, timezone
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from spot.header_classifier import (
    NON_OPERATING,
    OPERATING,
    LabeledHeader,
    TrainConfig,
    train_model,
)
from spot.ingestion import FilingDoc

# A typical earnings-release income-statement fragment: merged period header
# over two date sub-columns, indented segment rows under "Net sales".
FIGURE_TABLE_HTML = """\
<p>Example Corp reported the following (in millions, except per share data):</p>
<table>
<tr><td></td><th colspan="2">Three Months Ended</th></tr>
<tr><td></td><th>June 27, 2020</th><th>June 29, 2019</th></tr>
<tr><td>Net sales</td><td>$ 59,685</td><td>$ 53,809</td></tr>
<tr><td>&nbsp;&nbsp;Products</td><td>46,529</td><td>42,354</td></tr>
<tr><td>&nbsp;&nbsp;Services</td><td>13,156</td><td>11,455</td></tr>
<tr><td>Cost of sales</td><td>37,005</td><td>33,582</td></tr>
</table>
"""

FIXTURE_FILING_BODY = (
    "<html><body>\n"
    "<p>Example Corp announced its quarterly results today.</p>\n"
    + FIGURE_TABLE_HTML
    + "</body></html>\n"
)


def make_fixture_filing(filing_id: str = "tech777-f1") -> FilingDoc:
    return FilingDoc(
        filing_id=filing_id,
        company_id="tech777",
        sector="Tech",
        doc_type="8-K",
        filed_at=datetime(2020, 7, 28, 12, 0, tzinfo=timezone.utc),
        body=FIXTURE_FILING_BODY,
        is_earnings=True,
    )


NON_OP_LINES = [
    "Net sales", "Total net sales", "Cost of sales", "Operating income",
    "Revenue", "Total revenue", "Net income", "Interest expense, net",
    "Provision for income taxes", "Gross margin", "Total operating expenses",
    "Research and development", "Selling, general and administrative",
    "Earnings per share", "Income before taxes", "Other income, net",
]

TOY_SEGMENTS = {
    "alpha01": ["Gizmotron", "Weblink", "Cloudstar"],
    "alpha02": ["Fresco", "Dynamo", "Orbital"],
    "alpha03": ["Nimbus", "Vertex"],
    "beta01": ["Krakatoa", "Meridian", "Pinnacle"],
    "beta02": ["Solstice", "Equinox"],
}


def toy_headers() -> list[LabeledHeader]:
    """A small, cleanly separable labeled set across five companies."""
    headers = []
    for company, segments in TOY_SEGMENTS.items():
        for seg in segments:
            headers.append(
                LabeledHeader(f"Net sales --> {seg}", OPERATING, company, "Tech")
            )
            headers.append(LabeledHeader(seg, OPERATING, company, "Tech"))
        for line in NON_OP_LINES:
            headers.append(LabeledHeader(line, NON_OPERATING, company, "Tech"))
    return headers


TOY_CONFIG = TrainConfig(
    learning_rate=0.01, max_epochs=40, patience=10, batch_size=8,
    seed=3, emb_dim=16, hidden=8, min_freq=2,
)


@pytest.fixture(scope="session")
def toy_model():
    """A converged classifier over the toy set; train on 4 companies,
    validate on the fifth."""
    headers = toy_headers()
    train = [h for h in headers if h.company_id != "beta02"]
    valid = [h for h in headers if h.company_id == "beta02"]
    model, history = train_model(train, valid, TOY_CONFIG)
    assert history[-1].valid_f1 > 0.9 or max(h.valid_f1 for h in history) > 0.9
    return model
