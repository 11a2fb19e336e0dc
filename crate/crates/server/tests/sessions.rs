use std::path::Path;
use std::time::Duration;

use futures_util::StreamExt;
use serde_json::{json, Value};
use sls_core::checkpoint::Checkpoint;
use sls_core::neural::{Architecture, Network};
use sls_core::{GameConfig, GameState};
use sls_server::{router, ServerConfig};
use tokio_tungstenite::tungstenite::Message;

struct Server {
    base: String,
    http: reqwest::Client,
}

impl Server {
    async fn start(config: ServerConfig) -> Self {
        let app = router(config).unwrap();
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
        Server {
            base: format!("http://{addr}"),
            http: reqwest::Client::new(),
        }
    }

    async fn instant() -> Self {
        Self::start(ServerConfig {
            delay: Duration::ZERO,
            ..ServerConfig::default()
        })
        .await
    }

    async fn create(&self, body: Value) -> (u16, Value) {
        let r = self
            .http
            .post(format!("{}/sessions", self.base))
            .json(&body)
            .send()
            .await
            .unwrap();
        (r.status().as_u16(), r.json().await.unwrap())
    }

    async fn get(&self, id: &str) -> (u16, Value) {
        let r = self
            .http
            .get(format!("{}/sessions/{id}", self.base))
            .send()
            .await
            .unwrap();
        (r.status().as_u16(), r.json().await.unwrap())
    }

    async fn play(&self, id: &str, seat: u64, mv: Value) -> (u16, Value) {
        let r = self
            .http
            .post(format!("{}/sessions/{id}/moves", self.base))
            .json(&json!({ "seat": seat, "move": mv }))
            .send()
            .await
            .unwrap();
        (r.status().as_u16(), r.json().await.unwrap())
    }

    async fn stream(&self, id: &str) -> Stream {
        let url = format!("{}/sessions/{id}/stream", self.base.replace("http", "ws"));
        tokio_tungstenite::connect_async(url).await.unwrap().0
    }
}

type Stream = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

async fn next_frame(ws: &mut Stream) -> Value {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(10), ws.next())
            .await
            .expect("frame within 10 s")
            .unwrap()
            .unwrap();
        if let Message::Text(text) = msg {
            return serde_json::from_str(&text).unwrap();
        }
    }
}

/// Reads frames until the game ends; returns them all.
async fn frames_until_done(ws: &mut Stream) -> Vec<Value> {
    let mut frames = Vec::new();
    loop {
        let f = next_frame(ws).await;
        let done = f["state"]["done"].as_bool().unwrap();
        frames.push(f);
        if done {
            return frames;
        }
    }
}

fn assert_gapless(frames: &[Value]) {
    for pair in frames.windows(2) {
        assert_eq!(
            pair[1]["version"].as_u64().unwrap(),
            pair[0]["version"].as_u64().unwrap() + 1
        );
        assert!(pair[1]["event"].is_object());
    }
}

fn seats(kinds: [&str; 4]) -> Vec<Value> {
    kinds.iter().map(|k| json!({ "kind": k })).collect()
}

fn write_checkpoint(dir: &Path, name: &str, arch: Architecture) {
    let net = Network::init(arch, 509, 3);
    Checkpoint::new(net).save(&dir.join(name)).unwrap();
}

#[tokio::test]
async fn snapshot_after_create_is_initial_state() {
    let s = Server::instant().await;
    let (status, view) = s.create(json!({ "seats": seats(["human"; 4]), "seed": 5 })).await;
    assert_eq!(status, 201);
    assert_eq!(view["version"], 1);
    let initial = GameState::new(GameConfig::with_seed(5)).unwrap();
    assert_eq!(view["state"], serde_json::to_value(&initial).unwrap());
    let (status, again) = s.get(view["id"].as_str().unwrap()).await;
    assert_eq!(status, 200);
    assert_eq!(again, view);
}

#[tokio::test]
async fn random_opponents_play_until_the_human_decides() {
    let s = Server::instant().await;
    let (status, view) = s
        .create(json!({ "seats": seats(["human", "random", "random", "random"]), "seed": 5 }))
        .await;
    assert_eq!(status, 201);
    assert!(view["version"].as_u64().unwrap() >= 1);
    assert!(view["done"].as_bool().unwrap() || view["current_player"] == 0);
}

#[tokio::test]
async fn legal_move_advances_version_and_illegal_color_lists_legal_set() {
    let s = Server::instant().await;
    let (_, view) = s.create(json!({ "seats": seats(["human"; 4]), "seed": 11 })).await;
    let id = view["id"].as_str().unwrap();
    let me = view["current_player"].as_u64().unwrap();
    let (status, ok) = s.play(id, me, json!({ "select_row": 2 })).await;
    assert_eq!(status, 200);
    assert_eq!(ok["version"], 2);

    let (_, view) = s.get(id).await;
    assert_eq!(view["phase"], "choose_chip");
    let hand = &view["state"]["holdings"][me as usize];
    // Oracle: the legal colors are exactly those the mover still holds.
    let held: Vec<Value> = (0..4)
        .filter(|c| hand[*c].as_u64().unwrap() > 0)
        .map(|c| json!({ "select_color": c }))
        .collect();
    let absent = (0..4).find(|c| hand[*c].as_u64().unwrap() == 0).unwrap();
    let (status, err) = s.play(id, me, json!({ "select_color": absent })).await;
    assert_eq!(status, 422);
    assert_eq!(err["error"], "illegal_move");
    assert_eq!(err["legal"], Value::Array(held));
    assert_eq!(s.get(id).await.1["version"], 2);
}

#[tokio::test]
async fn out_of_turn_moves_are_rejected() {
    let s = Server::instant().await;
    let (_, view) = s.create(json!({ "seats": seats(["human"; 4]), "seed": 2 })).await;
    let id = view["id"].as_str().unwrap();
    let other = (view["current_player"].as_u64().unwrap() + 1) % 4;
    let (status, err) = s.play(id, other, json!({ "select_row": 0 })).await;
    assert_eq!(status, 409);
    assert_eq!(err["error"], "not_your_turn");
    assert_eq!(s.get(id).await.1["version"], 1);
}

#[tokio::test]
async fn human_cannot_move_during_agent_turn() {
    let s = Server::instant().await;
    let body = json!({ "seats": seats(["human", "random", "random", "random"]), "seed": 5, "delay_ms": 10000 });
    let (_, view) = s.create(body).await;
    let id = view["id"].as_str().unwrap();
    let mut view = view.clone();
    // Finish the human's turn if it starts; the next one belongs to a waiting agent.
    while view["current_player"] == 0 {
        let mv = view["legal_moves"][0].clone();
        s.play(id, 0, mv).await;
        view = s.get(id).await.1;
    }
    let before = view["version"].clone();
    let (status, err) = s.play(id, 0, json!({ "select_row": 0 })).await;
    assert_eq!(status, 409);
    assert_eq!(err["error"], "not_your_turn");
    assert_eq!(s.get(id).await.1["version"], before);
}

#[tokio::test]
async fn agent_seat_moves_are_rejected() {
    let s = Server::instant().await;
    let body = json!({ "seats": seats(["human", "random", "random", "random"]), "seed": 5, "delay_ms": 10000 });
    let (_, view) = s.create(body).await;
    let (status, err) = s
        .play(view["id"].as_str().unwrap(), 1, json!({ "select_row": 0 }))
        .await;
    assert_eq!(status, 403);
    assert_eq!(err["error"], "seat_not_human");
}

#[tokio::test]
async fn bad_requests_create_no_session() {
    let root = tempfile::tempdir().unwrap();
    let s = Server::start(ServerConfig {
        checkpoint_root: root.path().to_path_buf(),
        delay: Duration::ZERO,
        ..ServerConfig::default()
    })
    .await;
    for checkpoint in ["missing.ckpt", "../escape.ckpt", "/etc/passwd"] {
        let mut seats = seats(["human", "random", "random", "random"]);
        seats[1] = json!({ "kind": "agent", "checkpoint": checkpoint });
        let (status, err) = s.create(json!({ "seats": seats })).await;
        assert_eq!(status, 400, "{checkpoint}");
        assert_eq!(err["error"], "bad_checkpoint");
    }
    let (status, err) = s
        .create(
            json!({ "seats": [{ "kind": "human" }, { "kind": "agent" }, { "kind": "random" }, { "kind": "random" }] }),
        )
        .await;
    assert_eq!(status, 400);
    assert_eq!(err["error"], "bad_checkpoint");
    let (status, _) = s.create(json!({ "seats": seats(["random"; 4]) })).await;
    assert_eq!(status, 400);

    write_checkpoint(root.path(), "std.ckpt", Architecture::Standard);
    let mut wrong = seats(["human", "random", "random", "random"]);
    wrong[1] = json!({ "kind": "agent", "variant": "dueling", "checkpoint": "std.ckpt" });
    assert_eq!(s.create(json!({ "seats": wrong })).await.0, 400);
}

#[tokio::test]
async fn unknown_sessions_are_not_found() {
    let s = Server::instant().await;
    assert_eq!(s.get("nope").await.0, 404);
    assert_eq!(s.play("nope", 0, json!({ "select_row": 0 })).await.0, 404);
    let url = format!("{}/sessions/nope/stream", s.base.replace("http", "ws"));
    assert!(tokio_tungstenite::connect_async(url).await.is_err());
}

#[tokio::test]
async fn all_agent_spectator_game_streams_to_completion() {
    let root = tempfile::tempdir().unwrap();
    write_checkpoint(root.path(), "std.ckpt", Architecture::Standard);
    write_checkpoint(root.path(), "duel.ckpt", Architecture::Dueling);
    let s = Server::start(ServerConfig {
        checkpoint_root: root.path().to_path_buf(),
        default_checkpoint: Some(root.path().join("duel.ckpt")),
        ..ServerConfig::default()
    })
    .await;
    let body = json!({
        "seats": [
            { "kind": "agent", "checkpoint": "std.ckpt" },
            { "kind": "agent", "variant": "ddqn", "checkpoint": "std.ckpt" },
            { "kind": "agent" },
            { "kind": "random" }
        ],
        "seed": 9,
        "spectator": true,
        "delay_ms": 2
    });
    let (status, view) = s.create(body).await;
    assert_eq!(status, 201, "{view}");
    assert_eq!(view["seats"][1]["variant"], "ddqn");
    assert_eq!(view["seats"][2]["variant"], "dueling");
    let id = view["id"].as_str().unwrap();
    let mut a = s.stream(id).await;
    let mut b = s.stream(id).await;
    let fa = frames_until_done(&mut a).await;
    let fb = frames_until_done(&mut b).await;
    assert!(fa[0]["event"].is_null(), "first frame is a snapshot");
    assert_gapless(&fa);
    assert_gapless(&fb);
    // Both subscribers saw identical frames wherever their windows overlap.
    let start = fa[0]["version"]
        .as_u64()
        .unwrap()
        .max(fb[0]["version"].as_u64().unwrap());
    let pick = |fs: &[Value]| -> Vec<Value> {
        fs.iter()
            .filter(|f| f["version"].as_u64().unwrap() > start)
            .cloned()
            .collect()
    };
    assert_eq!(pick(&fa), pick(&fb));
    let last = fa.last().unwrap();
    assert!(last["state"]["winner"].is_u64());
    assert_eq!(s.get(id).await.1["version"], last["version"]);
}

#[tokio::test]
async fn scripted_human_finishes_a_game_without_illegal_submissions() {
    let s = Server::instant().await;
    let (_, view) = s
        .create(json!({ "seats": seats(["random", "human", "random", "random"]), "seed": 31 }))
        .await;
    let id = view["id"].as_str().unwrap().to_string();
    let mut ws = s.stream(&id).await;
    let first = next_frame(&mut ws).await;
    let mut frames = vec![first];
    let mut turn = 0usize;
    loop {
        let view = &frames.last().unwrap()["state"];
        if view["done"].as_bool().unwrap() {
            break;
        }
        if view["current_player"] == 1 {
            let legal = view["legal_moves"].as_array().unwrap();
            let mv = legal[turn % legal.len()].clone();
            turn += 1;
            let (status, ok) = s.play(&id, 1, mv).await;
            assert_eq!(status, 200, "{ok}");
        }
        frames.push(next_frame(&mut ws).await);
    }
    assert_gapless(&frames);
    let assignments = frames
        .iter()
        .flat_map(|f| f["event"]["events"].as_array().cloned().unwrap_or_default())
        .filter(|e| e["type"] == "turn_assigned")
        .count();
    assert!(assignments > 0);
}

#[tokio::test]
async fn sessions_are_isolated() {
    let s = Server::instant().await;
    let (_, a) = s.create(json!({ "seats": seats(["human"; 4]), "seed": 1 })).await;
    let (_, b) = s.create(json!({ "seats": seats(["human"; 4]), "seed": 1 })).await;
    assert_ne!(a["id"], b["id"]);
    let me = a["current_player"].as_u64().unwrap();
    s.play(a["id"].as_str().unwrap(), me, json!({ "select_row": 0 })).await;
    let (_, b2) = s.get(b["id"].as_str().unwrap()).await;
    assert_eq!(b2, b);
}

#[tokio::test]
async fn serves_static_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<h1>sls</h1>").unwrap();
    let s = Server::start(ServerConfig {
        static_dir: Some(dir.path().to_path_buf()),
        ..ServerConfig::default()
    })
    .await;
    let body = s
        .http
        .get(format!("{}/", s.base))
        .send()
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    assert_eq!(body, "<h1>sls</h1>");
    let missing = s.http.get(format!("{}/nothing.js", s.base)).send().await.unwrap();
    assert_eq!(missing.status().as_u16(), 404);
}
