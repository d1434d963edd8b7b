"""Operating-segment extraction from earnings-report tables.

Pipeline: ingest filings -> parse table structure -> normalize values ->
filter tables by company-specific TF-IDF weight -> classify header paths with
a masked-vocabulary bidirectional GRU -> serve traceable, adjustable,
exportable segment records.
"""

__version__ = "0.1.0"
