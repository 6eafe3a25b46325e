#![allow(dead_code)]

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::Path;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use kdyn_core::series::{YearMonth, HISTORY_START};
use serde_json::json;

pub fn kdyn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kdyn")).args(args).current_dir(dir).env_remove("KDYN_CACHE_DIR").output().unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

/// Minimal HTTP stand-in for the AQS metrics API. Values are simple
/// functions of the month index since 2001-01.
pub struct FakeAqs {
    pub addr: SocketAddr,
    pub requests: Arc<AtomicUsize>,
}

fn index(m: YearMonth) -> f64 {
    HISTORY_START.months_until(m) as f64
}

fn parse_month(ts: &str) -> YearMonth {
    YearMonth::new(ts[..4].parse().unwrap(), ts[4..6].parse().unwrap()).unwrap()
}

fn body_for(path: &str) -> (u16, String) {
    let segs: Vec<&str> = path.split('/').collect();
    let n = segs.len();
    let (start, end) = (parse_month(segs[n - 2]), parse_month(segs[n - 1]));
    let mut months = Vec::new();
    let mut m = start;
    while m < end {
        months.push(m);
        m = m.succ();
    }
    if path.contains("/edited-pages/new/") {
        let rows: Vec<_> = months
            .iter()
            .map(|m| json!({ "timestamp": format!("{m}-01T00:00:00.000Z"), "new_pages": 18_000.0 + 7.0 * index(*m) + 900.0 * (index(*m) * 0.7).sin() }))
            .collect();
        (200, json!({ "items": [{ "results": rows }] }).to_string())
    } else if path.contains("/editors/aggregate/") {
        let base = match segs[n - 4] {
            "5..24-edits" => 30_000.0,
            "25..99-edits" => 8_000.0,
            "100..-edits" => 3_000.0,
            _ => 120_000.0,
        };
        let rows: Vec<_> = months
            .iter()
            .map(|m| json!({ "timestamp": format!("{m}-01T00:00:00.000Z"), "editors": base + 400.0 * (index(*m) * 0.9).sin() }))
            .collect();
        (200, json!({ "items": [{ "results": rows }] }).to_string())
    } else if path.contains("/pageviews/aggregate/") {
        let rows: Vec<_> = months
            .iter()
            .map(|m| json!({ "timestamp": format!("{}00", m.first_day_compact()), "views": 8.0e9 + 2.0e7 * index(*m) }))
            .collect();
        (200, json!({ "items": rows }).to_string())
    } else {
        (404, json!({ "type": "not_found" }).to_string())
    }
}

fn handle(stream: TcpStream) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut line = String::new();
    if reader.read_line(&mut line).is_err() {
        return;
    }
    let path = line.split_whitespace().nth(1).unwrap_or("/").to_string();
    loop {
        let mut h = String::new();
        if reader.read_line(&mut h).unwrap_or(0) == 0 || h == "\r\n" {
            break;
        }
    }
    let (status, body) = body_for(&path);
    let mut s = stream;
    let _ = write!(
        s,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
}

impl FakeAqs {
    pub fn start() -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let requests = Arc::new(AtomicUsize::new(0));
        let count = requests.clone();
        std::thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                count.fetch_add(1, Ordering::SeqCst);
                std::thread::spawn(move || handle(stream));
            }
        });
        Self { addr, requests }
    }

    pub fn base_url(&self) -> String {
        format!("http://{}/metrics", self.addr)
    }

    pub fn requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}
