"""HTTP service wrapping the library (FastAPI + pydantic models)."""
