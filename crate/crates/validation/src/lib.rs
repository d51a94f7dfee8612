//! Holds the acceptance harness under `tests/`; the library itself is empty.
