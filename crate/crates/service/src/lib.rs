//! Local HTTP service for teaching sessions.
//!
//! All routes live under `/v1/`. Mutating requests are serialized on the
//! session; training runs on a worker thread and swaps the model atomically,
//! so live classification never waits on it. `GET /v1/events` streams
//! newline-delimited JSON events until the session leaves its mode.

mod error;
mod events;
mod routes;
mod session;

pub use error::ApiError;
pub use events::{EventFeed, FeedItem};
pub use routes::{router, AppState};
pub use session::{FrameOutcome, Mode, NewState, Session, TrainStatus, CAPTURE_FPS};

use std::net::SocketAddr;

pub const DEFAULT_LISTEN: &str = "127.0.0.1:7423";

/// Serves until the process is stopped.
pub async fn serve(listen: SocketAddr) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(listen).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new())).await?;
    Ok(())
}

/// Binds `listen` and serves in the background; returns the bound address.
pub async fn spawn(listen: SocketAddr) -> anyhow::Result<(SocketAddr, tokio::task::JoinHandle<()>)> {
    let listener = tokio::net::TcpListener::bind(listen).await?;
    let addr = listener.local_addr()?;
    let handle = tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, router(AppState::new())).await {
            log::error!("server stopped: {e}");
        }
    });
    Ok((addr, handle))
}
