#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::Output;
use std::time::Duration;

use annorel_core::compilation::{pack_archive, AnnotatorTable};
use annorel_core::synthetic::annotate_tasks;
use serde_json::Value;

pub fn annorel<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_annorel")).args(args).output().expect("binary runs")
}

/// Runs the binary, requires success and returns the parsed stdout.
pub fn run_ok<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Value {
    let out = annorel(args);
    assert!(out.status.success(), "annorel failed: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

pub fn documents(rows: usize) -> String {
    let mut s = String::from("text\n");
    for i in 0..rows {
        s.push_str(&format!("document {i}\n"));
    }
    s
}

pub fn read_dir_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_file() {
            files.insert(path.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&path).unwrap());
        }
    }
    files
}

pub fn table(path: &Path) -> AnnotatorTable {
    let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
    AnnotatorTable::from_csv_bytes(&stem, &std::fs::read(path).unwrap()).unwrap()
}

/// Labels every task file in `dir` around a planted truth and zips them.
pub fn annotated_zip(dir: &Path, flips: &BTreeMap<String, f64>, seed: u64) -> Vec<u8> {
    let tables = annotate_tasks(&read_dir_files(dir), flips, &["pos", "neg", "neu"], seed).unwrap();
    let files = tables.iter().map(|t| (format!("{}.csv", t.name), t.to_csv_bytes().unwrap())).collect();
    pack_archive(&files).unwrap()
}

pub fn multipart(boundary: &str, fields: &[(&str, &[u8])]) -> Vec<u8> {
    let mut body = Vec::new();
    for (name, bytes) in fields {
        body.extend_from_slice(
            format!("--{boundary}\r\nContent-Disposition: form-data; name=\"{name}\"; filename=\"{name}\"\r\n\r\n")
                .as_bytes(),
        );
        body.extend_from_slice(bytes);
        body.extend_from_slice(b"\r\n");
    }
    body.extend_from_slice(format!("--{boundary}--\r\n").as_bytes());
    body
}

/// Minimal HTTP/1.1 client: one request per connection, returns status and body.
pub fn http(port: u16, method: &str, path: &str, fields: Option<&[(&str, &[u8])]>) -> std::io::Result<(u16, Vec<u8>)> {
    let mut stream = TcpStream::connect(("127.0.0.1", port))?;
    stream.set_read_timeout(Some(Duration::from_secs(600)))?;
    let boundary = "annorel-acceptance";
    let body = fields.map(|f| multipart(boundary, f)).unwrap_or_default();
    let mut head = format!("{method} {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\nContent-Length: {}\r\n", body.len());
    if fields.is_some() {
        head.push_str(&format!("Content-Type: multipart/form-data; boundary={boundary}\r\n"));
    }
    head.push_str("\r\n");
    stream.write_all(head.as_bytes())?;
    stream.write_all(&body)?;
    let mut response = Vec::new();
    stream.read_to_end(&mut response)?;
    let split = response.windows(4).position(|w| w == b"\r\n\r\n").unwrap_or(response.len());
    let status_line = String::from_utf8_lossy(&response[..split]).lines().next().unwrap_or_default().to_owned();
    let status = status_line.split_whitespace().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    Ok((status, response[(split + 4).min(response.len())..].to_vec()))
}

/// Child process running `annorel serve`, killed on drop.
pub struct Server {
    child: std::process::Child,
    pub port: u16,
}

impl Server {
    pub fn start(workers: usize) -> Self {
        let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        let child = std::process::Command::new(env!("CARGO_BIN_EXE_annorel"))
            .args(["serve", "--port", &port.to_string()])
            .env("WORKERS", workers.to_string())
            .stderr(std::process::Stdio::null())
            .spawn()
            .expect("server starts");
        let server = Server { child, port };
        for _ in 0..200 {
            if matches!(http(port, "GET", "/api/health", None), Ok((200, _))) {
                return server;
            }
            std::thread::sleep(Duration::from_millis(25));
        }
        panic!("server did not come up on port {port}");
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
