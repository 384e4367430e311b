use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use repgame::session::replay_matches;
use repgame::tournament::{analyze_fidelity, cooperation_stats};
use repgame::{GameF64, Transcript};
use repgame_service::{router, AppState, ServiceConfig, HIDDEN_AGENT};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn game(g: GameF64) -> Value {
    serde_json::to_value(g).unwrap()
}

#[tokio::test]
async fn full_talk_session_against_ssharp() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(AppState::new(ServiceConfig {
        transcript_dir: Some(dir.path().to_path_buf()),
        ..ServiceConfig::default()
    }));
    let (status, created) = call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({"game": game(GameF64::prisoners_dilemma()), "agent": "ssharp", "rounds": 10, "talk": true, "seed": 77})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert!(!created.to_string().contains("ssharp"));
    let id = created["session_id"].as_str().unwrap().to_string();
    assert_eq!(created["view"]["menu"]["acts"].as_array().unwrap().len(), 19);

    for round in 0..10 {
        let (status, msg) = call(
            &app,
            Method::POST,
            &format!("/sessions/{id}/messages"),
            Some(json!({"acts": [{"id": 0, "cells": [[0, 0]]}]})),
        )
        .await;
        assert_eq!(status, StatusCode::OK, "{msg}");
        assert_eq!(msg["state"]["phase"], "awaiting_action");
        let (status, out) = call(
            &app,
            Method::POST,
            &format!("/sessions/{id}/action"),
            Some(json!({"action": 0})),
        )
        .await;
        assert_eq!(status, StatusCode::OK, "{out}");
        assert_eq!(out["outcome"]["round"], round);
        assert_eq!(out["outcome"]["phase"], "round_complete");
    }
    let (_, state) = call(&app, Method::GET, &format!("/sessions/{id}/state"), None).await;
    assert_eq!(state["phase"], "finished");
    assert_eq!(state["round"], 10);

    let (status, body) = call(&app, Method::GET, &format!("/sessions/{id}/transcript"), None).await;
    assert_eq!(status, StatusCode::OK);
    let t: Transcript = serde_json::from_value(body).unwrap();
    assert_eq!(t.records.len(), 10);
    assert_eq!(t.meta.config.agent_b.name, HIDDEN_AGENT);
    let stats = cooperation_stats(std::slice::from_ref(&t), t.game());
    assert_eq!(stats.rounds_to_cc.len(), 1);
    analyze_fidelity(&t);

    let stored: Transcript =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(format!("{id}.json"))).unwrap()).unwrap();
    assert_eq!(stored.meta.config.agent_b.name, "ssharp");
    assert!(replay_matches(&stored).unwrap());
}

#[tokio::test]
async fn errors_carry_codes() {
    let app = router(AppState::new(ServiceConfig::default()));
    let (status, body) = call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({"game": game(GameF64::chicken()), "agent": "nobody", "rounds": 5})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["code"], "unknown_agent");

    let (status, body) = call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({"game": {"row_payoffs": "x"}, "agent": "spp", "rounds": 5})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["code"], "invalid_game");

    let (_, created) = call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({"game": game(GameF64::chicken()), "agent": "spp", "rounds": 5, "talk": true})),
    )
    .await;
    let id = created["session_id"].as_str().unwrap();

    let (status, body) = call(
        &app,
        Method::POST,
        &format!("/sessions/{id}/messages"),
        Some(json!({"acts": [{"id": 19}]})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["code"], "invalid_act");

    let four = json!({"acts": [{"id": 9}, {"id": 10}, {"id": 11}, {"id": 12}]});
    let (_, body) = call(&app, Method::POST, &format!("/sessions/{id}/messages"), Some(four)).await;
    assert_eq!(body["error"]["code"], "invalid_act");

    let (status, body) = call(
        &app,
        Method::POST,
        &format!("/sessions/{id}/action"),
        Some(json!({"action": 1})),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"]["code"], "wrong_phase");

    let (status, body) = call(
        &app,
        Method::POST,
        &format!("/sessions/{id}/action"),
        Some(json!({"oops": 1})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["code"], "bad_request");

    let (status, body) = call(&app, Method::GET, "/sessions/not-a-session/state", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"]["code"], "unknown_session");
}

#[tokio::test]
async fn omitted_seed_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(AppState::new(ServiceConfig {
        transcript_dir: Some(dir.path().to_path_buf()),
        ..ServiceConfig::default()
    }));
    let (_, created) = call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({"game": game(GameF64::chicken()), "agent": "bully", "rounds": 2})),
    )
    .await;
    let id = created["session_id"].as_str().unwrap();
    for _ in 0..2 {
        call(
            &app,
            Method::POST,
            &format!("/sessions/{id}/action"),
            Some(json!({"action": 1})),
        )
        .await;
    }
    let stored: Transcript =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(format!("{id}.json"))).unwrap()).unwrap();
    assert!(replay_matches(&stored).unwrap());
    let (_, body) = call(&app, Method::GET, &format!("/sessions/{id}/transcript"), None).await;
    assert_eq!(body["meta"]["config"]["seed"], stored.meta.config.seed);
}

#[tokio::test]
async fn concurrent_sessions_stay_separate() {
    let app = router(AppState::new(ServiceConfig::default()));
    let mut ids = Vec::new();
    for _ in 0..4 {
        let (_, created) = call(
            &app,
            Method::POST,
            "/sessions",
            Some(json!({"game": game(GameF64::prisoners_dilemma()), "agent": "spp", "rounds": 6, "seed": 5})),
        )
        .await;
        ids.push(created["session_id"].as_str().unwrap().to_string());
    }
    let tasks: Vec<_> = ids
        .iter()
        .enumerate()
        .map(|(k, id)| {
            let app = app.clone();
            let id = id.clone();
            tokio::spawn(async move {
                for _ in 0..=k {
                    call(
                        &app,
                        Method::POST,
                        &format!("/sessions/{id}/action"),
                        Some(json!({"action": 0})),
                    )
                    .await;
                }
            })
        })
        .collect();
    for t in tasks {
        t.await.unwrap();
    }
    for (k, id) in ids.iter().enumerate() {
        let (_, state) = call(&app, Method::GET, &format!("/sessions/{id}/state"), None).await;
        assert_eq!(state["round"], k + 1);
    }
}
