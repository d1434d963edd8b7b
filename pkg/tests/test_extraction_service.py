"""End-to-end extraction golden, adjustments, export, and the HTTP API."""

from datetime import datetime, timezone
from decimal import Decimal

import pytest
from fastapi.testclient import TestClient

from conftest import make_fixture_filing
from spot.extraction_service import (
    ConflictError,
    RecordNotFoundError,
    RecordStore,
    ValidationError,
    create_app,
    export_records,
    extract_segments,
    inject_anchors,
    verify_provenance,
)
from spot.ingestion import FilingStore
from spot.normalizer import FiscalCalendar
from spot.segment_filter import CompanyDoc, build_company_doc, build_tfidf


@pytest.fixture(scope="session")
def fixture_matrix():
    """Corpus where the fixture company's segment terms are company-specific."""
    filing = make_fixture_filing()
    own = build_company_doc([filing])
    others = [
        CompanyDoc("oil001", {"revenue": 3, "net": 2, "sales": 2, "crude": 4, "cost": 1}),
        CompanyDoc("med001", {"revenue": 2, "net": 1, "sales": 1, "streaming": 3, "cost": 2}),
    ]
    return build_tfidf([own] + others)


SEPT_YE = FiscalCalendar("tech777", 9)


@pytest.fixture(scope="session")
def fixture_records(toy_model, fixture_matrix):
    filing = make_fixture_filing()
    return extract_segments(
        filing, toy_model, fixture_matrix, delta=0.1, calendar=SEPT_YE
    )


class TestExtractSegments:
    def test_golden_record_set(self, fixture_records):
        records = fixture_records
        assert len(records) == 4
        got = {
            (r.header_path.render(), r.period.render(), r.metric_name,
             r.value.render(), r.source_cell)
            for r in records
        }
        expected = {
            ("Net sales --> Products", "Q3 2020", "Net sales",
             "46,529,000,000.00 (USD)", ("t0", 3, 1)),
            ("Net sales --> Products", "Q3 2019", "Net sales",
             "42,354,000,000.00 (USD)", ("t0", 3, 2)),
            ("Net sales --> Services", "Q3 2020", "Net sales",
             "13,156,000,000.00 (USD)", ("t0", 4, 1)),
            ("Net sales --> Services", "Q3 2019", "Net sales",
             "11,455,000,000.00 (USD)", ("t0", 4, 2)),
        }
        assert got == expected

    def test_provenance_totality(self, fixture_records):
        assert verify_provenance(make_fixture_filing(), fixture_records) == []

    def test_probabilities_in_range(self, fixture_records):
        assert all(0.0 <= r.classifier_probability < 0.5 for r in fixture_records)

    def test_non_earnings_filing_empty(self, toy_model, fixture_matrix, caplog):
        filing = make_fixture_filing()
        filing.is_earnings = False
        with caplog.at_level("WARNING"):
            records = extract_segments(filing, toy_model, fixture_matrix, 0.1, SEPT_YE)
        assert records == []

    def test_roster_only_filing_empty(self, toy_model, fixture_matrix):
        filing = make_fixture_filing()
        filing.body = (
            "<html><body><p>quarterly results</p>"
            "<table><tr><td>Name</td><td>Title</td></tr>"
            "<tr><td>Pat Smith</td><td>Director</td></tr></table>"
            "</body></html>"
        )
        assert extract_segments(filing, toy_model, fixture_matrix, 0.1, SEPT_YE) == []

    def test_deterministic_record_ids(self, toy_model, fixture_matrix, fixture_records):
        again = extract_segments(
            make_fixture_filing(), toy_model, fixture_matrix, delta=0.1,
            calendar=SEPT_YE,
        )
        assert [r.record_id for r in again] == [r.record_id for r in fixture_records]

    def test_json_round_trip(self, fixture_records):
        from spot.extraction_service.records import SegmentRecord

        for record in fixture_records:
            again = SegmentRecord.from_dict(record.to_dict())
            assert again.to_dict() == record.to_dict()
            assert again.value.amount == record.value.amount


class TestRecordStore:
    def seed_store(self, tmp_path, records):
        store = RecordStore(tmp_path)
        store.save_records("tech777-f1", records)
        return store

    def test_save_load_round_trip(self, tmp_path, fixture_records):
        store = self.seed_store(tmp_path, fixture_records)
        loaded = store.load_records("tech777-f1")
        assert [r.record_id for r in loaded] == [r.record_id for r in fixture_records]

    def test_adjustment_preserves_original(self, tmp_path, fixture_records):
        store = self.seed_store(tmp_path, fixture_records)
        rid = fixture_records[0].record_id
        original = fixture_records[0].value.amount[0]
        updated = store.apply_adjustment(rid, Decimal("14500000.00"), "analyst")
        assert updated.adjusted
        assert updated.adjusted_value == Decimal("14500000.00")
        assert len(updated.audit) == 1
        assert store.find(rid)[1].value.amount[0] == original

    def test_two_adjustments_last_wins(self, tmp_path, fixture_records):
        store = self.seed_store(tmp_path, fixture_records)
        rid = fixture_records[0].record_id
        store.apply_adjustment(rid, Decimal("1"), "a")
        updated = store.apply_adjustment(rid, Decimal("2"), "b")
        assert len(updated.audit) == 2
        assert updated.adjusted_value == Decimal("2")
        times = [a.at for a in updated.audit]
        assert times == sorted(times)

    def test_unknown_record(self, tmp_path, fixture_records):
        store = self.seed_store(tmp_path, fixture_records)
        with pytest.raises(RecordNotFoundError):
            store.apply_adjustment("nope", Decimal("1"), "a")

    def test_non_finite_rejected(self, tmp_path, fixture_records):
        store = self.seed_store(tmp_path, fixture_records)
        rid = fixture_records[0].record_id
        with pytest.raises(ValidationError):
            store.apply_adjustment(rid, Decimal("NaN"), "a")
        with pytest.raises(ValidationError):
            store.apply_adjustment(rid, "garbage", "a")

    def test_stale_audit_length_conflicts(self, tmp_path, fixture_records):
        store = self.seed_store(tmp_path, fixture_records)
        rid = fixture_records[0].record_id
        store.apply_adjustment(rid, Decimal("1"), "a", expected_audit_length=0)
        with pytest.raises(ConflictError):
            store.apply_adjustment(rid, Decimal("2"), "b", expected_audit_length=0)


class TestExport:
    def company_map(self):
        return {"tech777-f1": "tech777"}

    def test_header_and_rows(self, fixture_records):
        csv_text = export_records(
            [("tech777-f1", r) for r in fixture_records], self.company_map()
        )
        lines = csv_text.splitlines()
        assert lines[0] == (
            "company,filing,period,segment_path,metric,value,currency,adjusted,"
            "source_table,source_row,source_col"
        )
        assert len(lines) == 5

    def test_empty_result_header_only(self):
        csv_text = export_records([], {})
        assert len(csv_text.splitlines()) == 1

    def test_comma_field_quoted(self, fixture_records):
        csv_text = export_records(
            [("tech777-f1", r) for r in fixture_records], self.company_map()
        )
        assert '"46,529,000,000.00"' in csv_text

    def test_rows_sorted_by_company_period_path(self, fixture_records):
        csv_text = export_records(
            [("tech777-f1", r) for r in fixture_records], self.company_map()
        )
        rows = [l.split(",")[2] for l in csv_text.splitlines()[1:]]
        assert rows == sorted(rows)

    def test_adjusted_value_exported(self, tmp_path, fixture_records):
        store = RecordStore(tmp_path)
        store.save_records("tech777-f1", fixture_records)
        rid = fixture_records[0].record_id
        store.apply_adjustment(rid, Decimal("999.25"), "analyst")
        csv_text = export_records(list(store.all_records()), self.company_map())
        adjusted_lines = [l for l in csv_text.splitlines() if ",true," in l]
        assert len(adjusted_lines) == 1
        assert "999.25" in adjusted_lines[0]

    def test_filters(self, fixture_records):
        pairs = [("tech777-f1", r) for r in fixture_records]
        by_period = export_records(pairs, self.company_map(), period="Q3 2020")
        assert len(by_period.splitlines()) == 3
        by_segment = export_records(pairs, self.company_map(), segment="services")
        assert len(by_segment.splitlines()) == 3
        by_company = export_records(pairs, self.company_map(), company="nobody")
        assert len(by_company.splitlines()) == 1


class TestAnchors:
    def test_every_cell_gets_coordinates(self):
        html = (
            "<table>"
            '<tr><td></td><th colspan="2">H</th></tr>'
            "<tr><td>a</td><td>1</td><td>2</td></tr>"
            "</table>"
        )
        out = inject_anchors(html)
        assert 'id="t0-r0-c0"' in out
        assert 'id="t0-r0-c1"' in out  # the merged header anchors at its top-left
        assert 'id="t0-r1-c1"' in out
        assert 'id="t0-r1-c2"' in out

    def test_second_table_index(self):
        out = inject_anchors("<table><td>1</td></table><table><td>2</td></table>")
        assert 'id="t0-r0-c0"' in out and 'id="t1-r0-c0"' in out

    def test_rowspan_occupancy_matches_parser(self):
        html = (
            "<table>"
            '<tr><td rowspan="2">A</td><td>B</td></tr>'
            "<tr><td>C</td></tr>"
            "</table>"
        )
        out = inject_anchors(html)
        # C lands in column 1 because column 0 of row 1 is occupied.
        assert 'id="t0-r1-c1"' in out

    def test_entities_preserved(self):
        out = inject_anchors("<table><tr><td>&nbsp;&nbsp;Products</td></tr></table>")
        assert "&nbsp;&nbsp;Products" in out


@pytest.fixture()
def api_client(tmp_path, toy_model, fixture_matrix, fixture_records):
    filing = make_fixture_filing()
    store = FilingStore(tmp_path)
    store.store(filing)
    record_store = RecordStore(tmp_path)
    record_store.save_records(filing.filing_id, fixture_records)
    return TestClient(create_app(tmp_path))


class TestApi:
    def test_filings_empty_store(self, tmp_path):
        client = TestClient(create_app(tmp_path / "empty"))
        response = client.get("/filings")
        assert response.status_code == 200
        assert response.json() == {"schema_version": 1, "filings": []}

    def test_filings_listing(self, api_client):
        payload = api_client.get("/filings").json()
        assert payload["schema_version"] == 1
        assert payload["filings"][0]["filing_id"] == "tech777-f1"
        assert payload["filings"][0]["n_records"] == 4

    def test_document_contains_every_record_anchor(self, api_client):
        records = api_client.get("/filings/tech777-f1/segments").json()["records"]
        html = api_client.get("/filings/tech777-f1/document").text
        assert records
        for record in records:
            table, row, col = record["source_cell"]
            assert f'id="{table}-r{row}-c{col}"' in html

    def test_read_your_writes(self, api_client):
        records = api_client.get("/filings/tech777-f1/segments").json()["records"]
        rid = records[0]["record_id"]
        response = api_client.post(
            f"/records/{rid}/adjustments",
            json={"new_value": "123.45", "author": "analyst",
                  "expected_audit_length": 0},
        )
        assert response.status_code == 200
        after = api_client.get("/filings/tech777-f1/segments").json()["records"]
        target = next(r for r in after if r["record_id"] == rid)
        assert target["adjusted"] is True
        assert target["adjusted_value"] == "123.45"

    def test_conflict_on_stale_token(self, api_client):
        records = api_client.get("/filings/tech777-f1/segments").json()["records"]
        rid = records[0]["record_id"]
        ok = api_client.post(
            f"/records/{rid}/adjustments",
            json={"new_value": "1", "author": "a", "expected_audit_length": 0},
        )
        assert ok.status_code == 200
        stale = api_client.post(
            f"/records/{rid}/adjustments",
            json={"new_value": "2", "author": "b", "expected_audit_length": 0},
        )
        assert stale.status_code == 409

    def test_bad_bodies_400(self, api_client):
        records = api_client.get("/filings/tech777-f1/segments").json()["records"]
        rid = records[0]["record_id"]
        assert api_client.post(
            f"/records/{rid}/adjustments", json={"author": "a"}
        ).status_code == 400
        assert api_client.post(
            f"/records/{rid}/adjustments", json={"new_value": "NaN", "author": "a"}
        ).status_code == 400

    def test_unknown_ids_404(self, api_client):
        assert api_client.get("/filings/nope/document").status_code == 404
        assert api_client.get("/filings/nope/segments").status_code == 404
        assert api_client.post(
            "/records/nope/adjustments", json={"new_value": "1", "author": "a"}
        ).status_code == 404

    def test_export_round_trip_with_adjustment(self, api_client):
        records = api_client.get("/filings/tech777-f1/segments").json()["records"]
        rid = records[0]["record_id"]
        before = api_client.get("/export").text
        api_client.post(
            f"/records/{rid}/adjustments",
            json={"new_value": "555.50", "author": "a", "expected_audit_length": 0},
        )
        after = api_client.get("/export").text
        assert before != after
        changed = [
            (a, b) for a, b in zip(before.splitlines(), after.splitlines()) if a != b
        ]
        assert len(changed) == 1
        assert "555.50" in changed[0][1]
        assert ",true," in changed[0][1]

    def test_read_endpoints_repeatable(self, api_client):
        a = api_client.get("/filings/tech777-f1/segments").text
        b = api_client.get("/filings/tech777-f1/segments").text
        assert a == b
