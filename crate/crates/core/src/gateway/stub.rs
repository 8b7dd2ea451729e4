//! A local stand-in for a chat-completions endpoint.
//!
//! Useful for recording fixtures and exercising the HTTP transport without a
//! network. One thread per connection, one request per connection.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use serde::Deserialize;
use serde_json::json;

use super::{ChatMessage, Role};
use crate::grammar::{parse_layout, serialize_layout};
use crate::layout::{Layout, OrientedBox, RoomSpec};

#[derive(Debug, Clone, Deserialize)]
pub struct StubRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(skip)]
    pub authorization: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StubReply {
    Content(String),
    Status(u16),
}

type Handler = dyn Fn(&StubRequest) -> StubReply + Send + Sync;

pub struct StubServer {
    addr: SocketAddr,
    hits: Arc<AtomicUsize>,
    stop: Arc<AtomicBool>,
}

impl StubServer {
    /// Binds an ephemeral local port and serves `handler` in the background.
    pub fn spawn(handler: impl Fn(&StubRequest) -> StubReply + Send + Sync + 'static) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let handler: Arc<Handler> = Arc::new(handler);
        let hits = Arc::new(AtomicUsize::new(0));
        let stop = Arc::new(AtomicBool::new(false));
        let (h, s) = (hits.clone(), stop.clone());
        thread::spawn(move || {
            for stream in listener.incoming() {
                if s.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                let (handler, hits) = (handler.clone(), h.clone());
                thread::spawn(move || {
                    hits.fetch_add(1, Ordering::SeqCst);
                    if let Err(e) = serve_one(stream, &*handler) {
                        log::debug!("stub connection failed: {e}");
                    }
                });
            }
        });
        Ok(Self { addr, hits, stop })
    }

    /// Base URL to hand to the HTTP transport.
    pub fn base_url(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    /// Requests received so far.
    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
    }
}

fn serve_one(stream: TcpStream, handler: &Handler) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let mut length = 0usize;
    let mut authorization = None;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 || line == "\r\n" {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            let value = value.trim();
            match name.to_ascii_lowercase().as_str() {
                "content-length" => length = value.parse().unwrap_or(0),
                "authorization" => authorization = Some(value.to_string()),
                _ => {}
            }
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body)?;
    let (status, payload) = match serde_json::from_slice::<StubRequest>(&body) {
        Ok(mut request) => {
            request.authorization = authorization;
            match handler(&request) {
                StubReply::Content(text) => {
                    (200, json!({ "choices": [{ "message": { "role": "assistant", "content": text } }] }))
                }
                StubReply::Status(code) => (code, json!({ "error": { "message": format!("stub status {code}") } })),
            }
        }
        Err(e) => (400, json!({ "error": { "message": e.to_string() } })),
    };
    let payload = payload.to_string();
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {status} Stub\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    )?;
    stream.flush()
}

fn parse_room(block: &str) -> Option<RoomSpec> {
    let room_type = block.lines().find_map(|l| l.strip_prefix("Room type: "))?.trim();
    let dims = block.lines().find_map(|l| l.strip_prefix("Room dimensions: length "))?;
    let (length, width) = dims.split_once("m, width ")?;
    let width = width.trim().trim_end_matches('m');
    RoomSpec::new(room_type, length.trim().parse().ok()?, width.parse().ok()?).ok()
}

/// Deterministic pseudo-model: copies the first exemplar in the prompt and
/// stretches it to the query room. Replies with no rules when the prompt has
/// no exemplars.
pub fn nearest_exemplar_reply(messages: &[ChatMessage]) -> String {
    let Some(user) = messages.iter().rev().find(|m| m.role == Role::User) else {
        return String::new();
    };
    let blocks: Vec<&str> = user.content.split("Room type: ").skip(1).collect();
    if blocks.len() < 2 {
        return String::new();
    }
    let with_prefix = |b: &str| format!("Room type: {b}");
    let (Some(source_room), Some(target)) =
        (parse_room(&with_prefix(blocks[0])), parse_room(&with_prefix(blocks[blocks.len() - 1])))
    else {
        return String::new();
    };
    let Ok(source) = parse_layout(blocks[0], &source_room) else {
        return String::new();
    };
    let (sx, sy) = (target.length() / source_room.length(), target.width() / source_room.width());
    let boxes: Vec<OrientedBox> = source
        .boxes()
        .iter()
        .filter_map(|b| {
            let c = b.center();
            b.with_center([c.x * sx, c.y * sy, c.z].into()).ok()
        })
        .collect();
    match Layout::new(target, boxes) {
        Ok(layout) => serialize_layout(&layout),
        Err(_) => String::new(),
    }
}
