//! Client side of the wire protocol: a model host reached over a spawned
//! process's stdio or a TCP stream.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{Shutdown, TcpStream};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError, Sender};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use log::warn;
use serde::{Deserialize, Serialize};

use super::protocol::{Request, RequestBody, Response, PROTOCOL_VERSION};
use super::{EvaluationResult, Evaluator};
use crate::dataset::Split;
use crate::error::{Error, Result};
use crate::model::{GateMask, ModelTopology};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transport {
    /// Spawn `command[0]` with the remaining arguments; talk over its stdin/stdout.
    Stdio { command: Vec<String> },
    /// Connect to `host:port`.
    Tcp { address: String },
}

impl Transport {
    pub fn describe(&self) -> String {
        match self {
            Transport::Stdio { command } => format!("stdio:{}", command.join(" ")),
            Transport::Tcp { address } => format!("tcp:{address}"),
        }
    }
}

type Reader = Box<dyn BufRead + Send>;
type Writer = Box<dyn Write + Send>;

/// Bare line-oriented connection to a host.
pub(crate) struct RawConnection {
    reader: Option<Reader>,
    writer: Option<Writer>,
    child: Option<Child>,
    socket: Option<TcpStream>,
}

impl RawConnection {
    pub(crate) fn open(transport: &Transport) -> Result<Self> {
        match transport {
            Transport::Stdio { command } => {
                let (program, args) = command
                    .split_first()
                    .ok_or_else(|| Error::Config("empty host command".into()))?;
                let mut child = Command::new(program)
                    .args(args)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(|e| Error::evaluation(None, format!("cannot spawn host `{program}`: {e}")))?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                Ok(Self {
                    reader: Some(Box::new(BufReader::new(stdout))),
                    writer: Some(Box::new(stdin)),
                    child: Some(child),
                    socket: None,
                })
            }
            Transport::Tcp { address } => {
                let stream = TcpStream::connect(address)
                    .map_err(|e| Error::evaluation(None, format!("cannot connect to {address}: {e}")))?;
                let read_half = stream
                    .try_clone()
                    .map_err(|e| Error::evaluation(None, format!("socket clone failed: {e}")))?;
                let socket = stream
                    .try_clone()
                    .map_err(|e| Error::evaluation(None, format!("socket clone failed: {e}")))?;
                Ok(Self {
                    reader: Some(Box::new(BufReader::new(read_half))),
                    writer: Some(Box::new(stream)),
                    child: None,
                    socket: Some(socket),
                })
            }
        }
    }

    pub(crate) fn send_line(&mut self, line: &str) -> Result<()> {
        let w = self.writer.as_mut().expect("writer present");
        writeln!(w, "{line}")
            .and_then(|_| w.flush())
            .map_err(|e| Error::evaluation(None, format!("write to host failed: {e}")))
    }

    pub(crate) fn read_line(&mut self) -> Result<Option<String>> {
        let r = self.reader.as_mut().expect("reader present");
        let mut buf = String::new();
        let n = r
            .read_line(&mut buf)
            .map_err(|e| Error::evaluation(None, format!("read from host failed: {e}")))?;
        if n == 0 {
            return Ok(None);
        }
        Ok(Some(buf.trim_end_matches(['\n', '\r']).to_string()))
    }
}

impl Drop for RawConnection {
    fn drop(&mut self) {
        // Closing stdin lets a well-behaved host exit on EOF.
        self.writer.take();
        if let Some(socket) = self.socket.take() {
            let _ = socket.shutdown(Shutdown::Both);
        }
        if let Some(mut child) = self.child.take() {
            if !matches!(child.try_wait(), Ok(Some(_))) {
                std::thread::sleep(Duration::from_millis(50));
                if !matches!(child.try_wait(), Ok(Some(_))) {
                    let _ = child.kill();
                }
            }
            let _ = child.wait();
        }
    }
}

type Pending = Arc<Mutex<HashMap<u64, Sender<Result<Response>>>>>;

struct Slots {
    limit: Option<usize>,
    used: Mutex<usize>,
    freed: Condvar,
}

impl Slots {
    fn acquire(&self) {
        if let Some(limit) = self.limit {
            let mut used = self.used.lock().expect("slot lock poisoned");
            while *used >= limit {
                used = self.freed.wait(used).expect("slot lock poisoned");
            }
            *used += 1;
        }
    }

    fn release(&self) {
        if self.limit.is_some() {
            *self.used.lock().expect("slot lock poisoned") -= 1;
            self.freed.notify_one();
        }
    }
}

/// Evaluator backed by an external host. Responses are matched to requests
/// by id, so a host may complete requests out of order.
pub struct ExternalEvaluator {
    backend_id: String,
    topology: ModelTopology,
    max_in_flight: Option<usize>,
    writer: Mutex<Writer>,
    pending: Pending,
    next_id: AtomicU64,
    timeout: Duration,
    slots: Slots,
    // Detached on drop; exits on EOF.
    _reader_thread: JoinHandle<()>,
    // Held for its Drop: closes stdin and reaps the child.
    _conn: Mutex<RawConnection>,
}

impl ExternalEvaluator {
    /// Connects and performs the topology handshake.
    pub fn connect(transport: &Transport, timeout: Duration) -> Result<Self> {
        let mut conn = RawConnection::open(transport)?;
        let writer = conn.writer.take().expect("fresh connection has a writer");
        let mut reader = conn.reader.take().expect("fresh connection has a reader");
        let pending: Pending = Arc::new(Mutex::new(HashMap::new()));

        let thread_pending = Arc::clone(&pending);
        let reader_thread = std::thread::spawn(move || {
            let fail_all = |msg: &str| {
                for (id, tx) in thread_pending.lock().expect("pending lock poisoned").drain() {
                    let _ = tx.send(Err(Error::evaluation(Some(id), msg.to_string())));
                }
            };
            loop {
                let mut buf = String::new();
                match reader.read_line(&mut buf) {
                    Ok(0) => {
                        fail_all("host closed the connection");
                        return;
                    }
                    Err(e) => {
                        fail_all(&format!("read from host failed: {e}"));
                        return;
                    }
                    Ok(_) => {}
                }
                let line = buf.trim_end_matches(['\n', '\r']);
                if line.is_empty() {
                    continue;
                }
                match Response::decode(line) {
                    Ok(resp) => {
                        let tx = thread_pending.lock().expect("pending lock poisoned").remove(&resp.id());
                        match tx {
                            Some(tx) => {
                                let _ = tx.send(Ok(resp));
                            }
                            None => warn!("host answered unknown request id {}", resp.id()),
                        }
                    }
                    Err(e) => fail_all(&format!("malformed message from host: {e}")),
                }
            }
        });

        let mut ev = Self {
            backend_id: String::new(),
            topology: ModelTopology::base_encoder(),
            max_in_flight: Some(1),
            writer: Mutex::new(writer),
            pending,
            next_id: AtomicU64::new(1),
            timeout,
            slots: Slots {
                limit: Some(1),
                used: Mutex::new(0),
                freed: Condvar::new(),
            },
            _reader_thread: reader_thread,
            _conn: Mutex::new(conn),
        };

        let (id, resp) = ev.request(RequestBody::Topology)?;
        let topo = match resp {
            Response::Topology(t) => t,
            Response::Error(e) => return Err(Error::Protocol(format!("handshake rejected: {}", e.error))),
            other => return Err(Error::Protocol(format!("request {id}: unexpected handshake reply {other:?}"))),
        };
        if topo.protocol != PROTOCOL_VERSION {
            return Err(Error::Protocol(format!(
                "host speaks protocol {}, expected {PROTOCOL_VERSION}",
                topo.protocol
            )));
        }
        ev.topology = ModelTopology::new(topo.layers, topo.heads_per_layer)?;
        ev.max_in_flight = topo.max_in_flight.or(Some(1));
        ev.slots.limit = ev.max_in_flight;
        ev.backend_id = format!("external:{}:{}x{}", transport.describe(), topo.layers, topo.heads_per_layer);
        Ok(ev)
    }

    fn request(&self, body: RequestBody) -> Result<(u64, Response)> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let line = Request { id, body }.encode();
        let (tx, rx) = mpsc::channel();
        self.slots.acquire();
        self.pending.lock().expect("pending lock poisoned").insert(id, tx);
        let sent = {
            let mut w = self.writer.lock().expect("writer lock poisoned");
            writeln!(w, "{line}").and_then(|_| w.flush())
        };
        let outcome = match sent {
            Err(e) => Err(Error::evaluation(Some(id), format!("write to host failed: {e}"))),
            Ok(()) => match rx.recv_timeout(self.timeout) {
                Ok(resp) => resp.map(|r| (id, r)),
                Err(RecvTimeoutError::Timeout) => Err(Error::evaluation(
                    Some(id),
                    format!("no response within {:?}", self.timeout),
                )),
                Err(RecvTimeoutError::Disconnected) => {
                    Err(Error::evaluation(Some(id), "host connection lost"))
                }
            },
        };
        self.pending.lock().expect("pending lock poisoned").remove(&id);
        self.slots.release();
        outcome
    }
}

impl<T: Scalar> Evaluator<T> for ExternalEvaluator {
    fn backend_id(&self) -> &str {
        &self.backend_id
    }

    fn topology(&self) -> ModelTopology {
        self.topology
    }

    /// The protocol has no paradigm listing.
    fn paradigms(&self) -> Vec<String> {
        Vec::new()
    }

    fn evaluate(&self, mask: &GateMask, paradigm: &str, split: Split) -> Result<EvaluationResult<T>> {
        self.topology.check_mask(mask)?;
        let (id, resp) = self.request(RequestBody::Evaluate {
            mask: mask.clone(),
            paradigm: paradigm.to_string(),
            split,
        })?;
        match resp {
            Response::Evaluate(r) => {
                if !(0.0..=1.0).contains(&r.accuracy) {
                    return Err(Error::evaluation(Some(id), format!("accuracy {} outside [0, 1]", r.accuracy)));
                }
                Ok(EvaluationResult {
                    accuracy: T::of(r.accuracy),
                    n_examples: r.n,
                })
            }
            Response::Error(e) => Err(Error::evaluation(Some(id), e.error)),
            Response::Topology(_) => Err(Error::evaluation(Some(id), "topology reply to an evaluate request")),
        }
    }

    fn max_in_flight(&self) -> Option<usize> {
        self.max_in_flight
    }
}
