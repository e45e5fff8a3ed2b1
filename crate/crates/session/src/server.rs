//! WebSocket front end. Each connection gets its own [`Session`]; the
//! session is driven by a single executor task, and socket reads and writes
//! talk to it only through channels.

use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::mpsc;
use tokio::time::{interval, Interval, MissedTickBehavior};

use crate::protocol::{parse_command, ServerMessage, SessionCommand};
use crate::session::{Session, SessionConfig};

pub const SESSION_PATH: &str = "/session";

pub fn router(config: SessionConfig) -> Router {
    Router::new()
        .route(SESSION_PATH, get(upgrade))
        .route("/", get(index))
        .with_state(config)
}

/// Serve sessions on `listener` until the process stops.
pub async fn serve(listener: TcpListener, config: SessionConfig) -> std::io::Result<()> {
    config
        .validate()
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e))?;
    if let Ok(addr) = listener.local_addr() {
        tracing::info!("session endpoint at ws://{addr}{SESSION_PATH}");
    }
    axum::serve(listener, router(config)).await
}

async fn index() -> &'static str {
    "lipwalk session server: connect a WebSocket to /session (protocol 1, newline-delimited JSON)\n"
}

async fn upgrade(ws: WebSocketUpgrade, State(config): State<SessionConfig>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| run_session(socket, config))
}

fn pacing(session: &Session) -> Interval {
    let period = Duration::from_secs_f64(1.0 / (session.tick_rate() * session.speed()));
    let mut i = interval(period);
    i.set_missed_tick_behavior(MissedTickBehavior::Delay);
    i
}

async fn run_session(socket: WebSocket, config: SessionConfig) {
    let mut session = match Session::new(config) {
        Ok(s) => s,
        Err(e) => {
            tracing::error!("cannot start session: {e}");
            return;
        }
    };
    let (mut sink, mut stream) = socket.split();
    let (out_tx, mut out_rx) = mpsc::channel::<ServerMessage>(256);
    let (cmd_tx, mut cmd_rx) = mpsc::unbounded_channel::<SessionCommand>();

    let writer = tokio::spawn(async move {
        while let Some(msg) = out_rx.recv().await {
            if sink
                .send(Message::Text(msg.to_line().into()))
                .await
                .is_err()
            {
                break;
            }
        }
    });

    let errors = out_tx.clone();
    let reader = tokio::spawn(async move {
        while let Some(Ok(msg)) = stream.next().await {
            match msg {
                Message::Text(text) => {
                    for line in text.lines().filter(|l| !l.trim().is_empty()) {
                        match parse_command(line) {
                            Ok(cmd) => {
                                if cmd_tx.send(cmd).is_err() {
                                    return;
                                }
                            }
                            Err(reason) => {
                                let _ = errors.send(ServerMessage::Error { reason }).await;
                            }
                        }
                    }
                }
                Message::Binary(_) => {
                    let reason = "binary frames are not supported".to_string();
                    let _ = errors.send(ServerMessage::Error { reason }).await;
                }
                Message::Close(_) => break,
                Message::Ping(_) | Message::Pong(_) => {}
            }
        }
    });

    let started = Instant::now();
    let wall_ms = || started.elapsed().as_secs_f64() * 1e3;
    let opening = [
        session.hello(),
        ServerMessage::Update(session.snapshot(wall_ms())),
    ];
    for msg in opening {
        if out_tx.send(msg).await.is_err() {
            reader.abort();
            return;
        }
    }

    let mut clock = pacing(&session);
    loop {
        clock.tick().await;
        if reader.is_finished() {
            break;
        }
        while let Ok(cmd) = cmd_rx.try_recv() {
            session.enqueue(cmd);
        }
        let speed = session.speed();
        if let Some(update) = session.tick(wall_ms()) {
            if out_tx.send(ServerMessage::Update(update)).await.is_err() {
                break;
            }
        }
        if session.speed() != speed {
            clock = pacing(&session);
        }
    }
    tracing::debug!("session closed after {:.1} ms", wall_ms());
    drop(out_tx);
    reader.abort();
    let _ = writer.await;
}
