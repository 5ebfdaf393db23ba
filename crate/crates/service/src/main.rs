use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::Context;
use clap::Parser;
use gasp_core::engine::EngineConfig;
use gasp_service::{router, AppState, ServiceConfig};

#[derive(Parser)]
#[command(name = "gasp-service", version, about = "HTTP advisory service for guideline compliance checks")]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Origin allowed by CORS; any origin when omitted.
    #[arg(long)]
    cors_origin: Option<String>,
    /// JSON-lines file that keeps sessions across restarts.
    #[arg(long)]
    persist: Option<PathBuf>,
    #[arg(long, default_value_t = EngineConfig::default().depth_limit)]
    depth_limit: usize,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    let config = ServiceConfig {
        engine: EngineConfig { depth_limit: args.depth_limit },
        cors_origin: args.cors_origin,
        persist_path: args.persist,
    };
    let state = AppState::new(config).context("cannot load persisted sessions")?;
    let listener =
        tokio::net::TcpListener::bind(args.addr).await.with_context(|| format!("cannot bind {}", args.addr))?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
