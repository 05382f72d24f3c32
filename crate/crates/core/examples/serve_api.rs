//! Serves the HTTP API over a seeded in-memory store on a local port and
//! makes a few plain HTTP/1.1 requests against it.
//!
//! cargo run --example serve_api

use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};
use grantdesk::api::{router, serve, ApiOptions};
use grantdesk::auth::TokenIssuer;
use grantdesk::clock::Clock;
use grantdesk::corpus::{load, Corpus};
use grantdesk::platform::Platform;
use grantdesk::store::Store;
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};

async fn request(addr: std::net::SocketAddr, method: &str, path: &str, body: Option<&str>) -> std::io::Result<String> {
    let mut stream = TcpStream::connect(addr).await?;
    let body = body.unwrap_or("");
    let head = format!(
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n",
        body.len()
    );
    stream.write_all(head.as_bytes()).await?;
    stream.write_all(body.as_bytes()).await?;
    let mut reply = String::new();
    stream.read_to_string(&mut reply).await?;
    let status = reply.lines().next().unwrap_or_default().to_owned();
    let payload = reply.split("\r\n\r\n").nth(1).unwrap_or_default();
    Ok(format!("{status}\n  {}", payload.chars().take(240).collect::<String>()))
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = Corpus::bundled();
    let store = Arc::new(Store::in_memory_migrated()?);
    load(&corpus, &store)?;
    let clock = Clock::frozen(Utc.with_ymd_and_hms(2026, 6, 1, 0, 0, 0).unwrap());
    let platform = Platform::new(store, TokenIssuer::new("example-secret", Duration::hours(24)), clock)?;

    let listener = TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    println!("listening on http://{addr}");
    let server = tokio::spawn(serve(listener, router(platform, ApiOptions::default())));

    println!("GET /health -> {}", request(addr, "GET", "/health", None).await?);
    println!("GET /calls -> {}", request(addr, "GET", "/calls", None).await?);
    println!("GET /proposals/prop-01-001 -> {}", request(addr, "GET", "/proposals/prop-01-001", None).await?);
    let login = format!(r#"{{"email":"{}","password":"synthetic-password"}}"#, corpus.body.users[0].account.email);
    println!("POST /auth/login -> {}", request(addr, "POST", "/auth/login", Some(&login)).await?);

    server.abort();
    Ok(())
}
