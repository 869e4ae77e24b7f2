"""Command-line orchestration: estimation dispatch, replication runs, placebo tests, ingestion."""
