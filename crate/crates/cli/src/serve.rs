//! Live session over WebSocket.
//!
//! One task owns the session and steps it at 30 Hz. Socket readers forward
//! parsed commands into an ordered queue; socket writers relay the broadcast
//! output lines and any per-connection error replies.

use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::header;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use morphbot_core::config::Config;
use morphbot_core::hydrostatics::{default_height_axis, default_mass_axis, design_space, robot_markers};
use morphbot_core::mission::MissionParams;
use morphbot_core::session::{default_live_script, parse_client_line, ClientMessage, ServerMessage, Session};
use tokio::sync::{broadcast, mpsc};
use tokio::time::MissedTickBehavior;

pub const TICK_HZ: f64 = 30.0;

#[derive(Clone)]
struct AppState {
    inbox: mpsc::UnboundedSender<ClientMessage>,
    outbox: broadcast::Sender<Arc<str>>,
    grid_csv: Arc<str>,
    neutral_csv: Arc<str>,
    markers_json: Arc<str>,
}

pub async fn serve(config: Config, host: &str, port: u16, time_scale: f64) -> anyhow::Result<()> {
    let params = config.mission_params();
    let session = Session::new(&params, &default_live_script())?;

    let grid = design_space(default_mass_axis(), default_height_axis(), &config.volume_model, &config.fluid)?;
    let range = config.geometry.range;
    let markers = robot_markers(config.body.mass_kg, range.h_min, range.h_max, &config.volume_model, &config.fluid)?;

    let (inbox, inbox_rx) = mpsc::unbounded_channel();
    let (outbox, _) = broadcast::channel(4096);
    tokio::spawn(simulation_loop(session, params, inbox_rx, outbox.clone(), time_scale));

    let state = AppState {
        inbox,
        outbox,
        grid_csv: grid.grid_csv().into(),
        neutral_csv: grid.neutral_csv().into(),
        markers_json: serde_json::to_string(&markers)?.into(),
    };
    let app = Router::new()
        .route("/ws", get(ws_upgrade))
        .route("/design-space.csv", get(|State(s): State<AppState>| async move { csv(s.grid_csv) }))
        .route("/design-space-neutral.csv", get(|State(s): State<AppState>| async move { csv(s.neutral_csv) }))
        .route(
            "/markers.json",
            get(|State(s): State<AppState>| async move {
                ([(header::CONTENT_TYPE, "application/json")], s.markers_json.to_string())
            }),
        )
        .with_state(state);

    let listener = tokio::net::TcpListener::bind((host, port)).await?;
    println!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn csv(body: Arc<str>) -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "text/csv")], body.to_string())
}

async fn simulation_loop(
    mut session: Session,
    params: MissionParams,
    mut inbox: mpsc::UnboundedReceiver<ClientMessage>,
    outbox: broadcast::Sender<Arc<str>>,
    time_scale: f64,
) {
    let mut ticker = tokio::time::interval(Duration::from_secs_f64(1.0 / TICK_HZ));
    ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);
    let mut last = Instant::now();
    loop {
        ticker.tick().await;
        let now = Instant::now();
        let elapsed = (now - last).as_secs_f64() * time_scale;
        last = now;

        let mut pending = Vec::new();
        while let Ok(msg) = inbox.try_recv() {
            pending.push(msg);
        }
        let lines = match session.tick(pending, elapsed) {
            Ok(out) => out
                .messages
                .into_iter()
                .chain(out.state.map(ServerMessage::State))
                .map(|m| m.to_line())
                .collect::<Vec<_>>(),
            Err(e) => {
                let reason = format!("simulation stopped: {e}; scenario reset");
                session = Session::new(&params, &default_live_script()).expect("default scenario is valid");
                vec![ServerMessage::Error { reason }.to_line()]
            }
        };
        for line in lines {
            // no subscribers is fine
            let _ = outbox.send(line.into());
        }
    }
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| connection(socket, state))
}

async fn connection(socket: WebSocket, state: AppState) {
    let (mut sink, mut stream) = socket.split();
    let mut broadcast_rx = state.outbox.subscribe();
    let (reply_tx, mut reply_rx) = mpsc::unbounded_channel::<String>();

    let writer = tokio::spawn(async move {
        loop {
            let line = tokio::select! {
                msg = broadcast_rx.recv() => match msg {
                    Ok(line) => line.to_string(),
                    Err(broadcast::error::RecvError::Lagged(_)) => continue,
                    Err(broadcast::error::RecvError::Closed) => break,
                },
                reply = reply_rx.recv() => match reply {
                    Some(line) => line,
                    None => break,
                },
            };
            if sink.send(Message::Text(format!("{line}\n").into())).await.is_err() {
                break;
            }
        }
    });

    while let Some(Ok(msg)) = stream.next().await {
        let text = match msg {
            Message::Text(t) => t.to_string(),
            Message::Binary(b) => match String::from_utf8(b.to_vec()) {
                Ok(t) => t,
                Err(_) => {
                    let _ = reply_tx.send(error_line("binary frame is not UTF-8"));
                    continue;
                }
            },
            Message::Close(_) => break,
            _ => continue,
        };
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            match parse_client_line(line) {
                Ok(m) => {
                    if state.inbox.send(m).is_err() {
                        return;
                    }
                }
                Err(reason) => {
                    let _ = reply_tx.send(error_line(&reason));
                }
            }
        }
    }
    drop(reply_tx);
    writer.abort();
}

fn error_line(reason: &str) -> String {
    ServerMessage::Error { reason: reason.to_string() }.to_line()
}
