use std::time::Duration;

use futures::{SinkExt, StreamExt};
use lipwalk_core::{Gait3DParams, ModelParams};
use lipwalk_session::protocol::{EventTag, ServerMessage, SessionUpdate};
use lipwalk_session::server::{serve, SESSION_PATH};
use lipwalk_session::SessionConfig;
use tokio::net::TcpListener;
use tokio_tungstenite::tungstenite::Message;

type Client =
    tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

async fn start(gait: Gait3DParams) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let mut config = SessionConfig::new(ModelParams::default(), gait);
    config.tick_rate = 100.0;
    tokio::spawn(serve(listener, config));
    format!("ws://{addr}{SESSION_PATH}")
}

async fn connect(url: &str) -> Client {
    tokio_tungstenite::connect_async(url).await.unwrap().0
}

async fn next(client: &mut Client) -> ServerMessage {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(5), client.next())
            .await
            .expect("server went quiet")
            .expect("stream ended")
            .unwrap();
        if let Message::Text(text) = msg {
            assert!(text.ends_with('\n'));
            assert_eq!(text.trim_end().lines().count(), 1);
            return serde_json::from_str(&text).unwrap();
        }
    }
}

async fn next_update(client: &mut Client) -> SessionUpdate {
    loop {
        if let ServerMessage::Update(u) = next(client).await {
            return u;
        }
    }
}

async fn send(client: &mut Client, line: &str) {
    client
        .send(Message::Text(format!("{line}\n").into()))
        .await
        .unwrap();
}

fn deadbeat_gait() -> Gait3DParams {
    Gait3DParams {
        a_l: 0.0,
        a_w: 0.0,
        theta: 0.0,
        b: 0.427805189743681,
        period: 0.3,
    }
}

#[tokio::test]
async fn handshake_then_static_update() {
    let url = start(deadbeat_gait()).await;
    let mut client = connect(&url).await;
    match next(&mut client).await {
        ServerMessage::Hello {
            protocol,
            model,
            gains,
            ..
        } => {
            assert_eq!(protocol, "1");
            assert_eq!((model.g, model.h), (10.0, 1.0));
            assert!((gains.b_db - 0.4278).abs() < 5e-5);
        }
        other => panic!("expected hello, got {other:?}"),
    }
    let first = next_update(&mut client).await;
    assert_eq!(first.tick, 0);
    assert_eq!(first.last_event, EventTag::None);
    assert!(!first.running);
}

#[tokio::test]
async fn malformed_lines_get_error_frames() {
    let url = start(deadbeat_gait()).await;
    let mut client = connect(&url).await;
    next(&mut client).await;
    next(&mut client).await;
    send(&mut client, r#"{"type":"fly"}"#).await;
    assert!(matches!(
        next(&mut client).await,
        ServerMessage::Error { .. }
    ));
    // still alive
    send(&mut client, r#"{"type":"step_once"}"#).await;
    let u = next_update(&mut client).await;
    assert_eq!(u.tick, 1);
}

#[tokio::test]
async fn push_recovers_in_two_touchdowns() {
    let url = start(deadbeat_gait()).await;
    let mut client = connect(&url).await;
    next(&mut client).await;
    next(&mut client).await;
    send(&mut client, r#"{"type":"run","speed":8}"#).await;
    // let a couple of steps go by, then shove
    while next_update(&mut client).await.tick < 40 {}
    send(&mut client, r#"{"type":"push","dvx":0.5,"dvy":0}"#).await;
    let mut touchdowns = Vec::new();
    let mut pushed = false;
    while touchdowns.len() < 3 {
        let u = next_update(&mut client).await;
        pushed |= u.last_event == EventTag::Push;
        if pushed && u.last_event == EventTag::Touchdown {
            touchdowns.push(u.vel.x);
        }
    }
    assert!(touchdowns[0].abs() > 0.1);
    assert!(touchdowns[1].abs() < 1e-9);
    assert!(touchdowns[2].abs() < 1e-9);
}

#[tokio::test]
async fn reconnect_starts_fresh_session() {
    let url = start(deadbeat_gait()).await;
    let mut client = connect(&url).await;
    next(&mut client).await;
    next(&mut client).await;
    send(&mut client, r#"{"type":"run","speed":4}"#).await;
    while next_update(&mut client).await.tick < 10 {}
    client.close(None).await.unwrap();

    let mut again = connect(&url).await;
    assert!(matches!(
        next(&mut again).await,
        ServerMessage::Hello { .. }
    ));
    let u = next_update(&mut again).await;
    assert_eq!(u.tick, 0);
    assert_eq!(u.t, 0.0);
}
