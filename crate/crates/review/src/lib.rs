//! Local review service for DE insertion candidates.
//!
//! A session directory holds `source.tsv`, `candidates.jsonl`, optional
//! baseline/modified translation TSVs and the append-only
//! `decisions.jsonl`. The pipeline's output directory is a valid session.
//!
//! Routes: `GET /candidates?status=proposed|accepted|rejected|all`,
//! `POST /decisions`, `GET /export`, `GET /stats`.

pub mod error;
pub mod server;
pub mod session;

pub use error::{Error, Result};
pub use server::{bind, router, serve_with_shutdown, DecisionRequest, SharedSession};
pub use session::{export_accepted, CandidateView, HistoryEntry, Session, StatusCounts, StatusFilter};
