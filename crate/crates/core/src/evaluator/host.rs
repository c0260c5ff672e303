//! Serving side of the wire protocol, plus golden-transcript replay.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;

use super::external::RawConnection;
use super::protocol::{
    salvage_id, ErrorResponse, EvaluateResponse, Request, RequestBody, Response, TopologyResponse,
    PROTOCOL_VERSION,
};
use super::{Evaluator, Transport};
use crate::error::{Error, Result};

fn answer<E: Evaluator<f64> + ?Sized>(evaluator: &E, line: &str) -> Response {
    let request = match Request::decode(line) {
        Ok(r) => r,
        Err(e) => {
            return Response::Error(ErrorResponse {
                id: salvage_id(line),
                error: e.to_string(),
            })
        }
    };
    match request.body {
        RequestBody::Topology => {
            let t = evaluator.topology();
            Response::Topology(TopologyResponse {
                id: request.id,
                layers: t.layers,
                heads_per_layer: t.heads_per_layer,
                protocol: PROTOCOL_VERSION,
                max_in_flight: evaluator.max_in_flight(),
            })
        }
        RequestBody::Evaluate { mask, paradigm, split } => {
            match evaluator.evaluate(&mask, &paradigm, split) {
                Ok(r) => Response::Evaluate(EvaluateResponse {
                    id: request.id,
                    accuracy: r.accuracy,
                    n: r.n_examples,
                }),
                Err(e) => Response::Error(ErrorResponse {
                    id: request.id,
                    error: e.to_string(),
                }),
            }
        }
    }
}

/// Answers requests line by line until the reader is exhausted.
pub fn serve<E, R, W>(evaluator: &E, reader: R, mut writer: W) -> Result<()>
where
    E: Evaluator<f64> + ?Sized,
    R: BufRead,
    W: Write,
{
    for line in reader.lines() {
        let line = line.map_err(|e| Error::Protocol(format!("read failed: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let response = answer(evaluator, &line);
        writeln!(writer, "{}", response.encode())
            .and_then(|_| writer.flush())
            .map_err(|e| Error::Protocol(format!("write failed: {e}")))?;
    }
    Ok(())
}

/// Accepts a single TCP connection on `listener` and serves it to completion.
pub fn serve_tcp_once<E: Evaluator<f64> + ?Sized>(evaluator: &E, listener: &TcpListener) -> Result<()> {
    let (stream, _) = listener
        .accept()
        .map_err(|e| Error::Protocol(format!("accept failed: {e}")))?;
    let reader = BufReader::new(
        stream
            .try_clone()
            .map_err(|e| Error::Protocol(format!("socket clone failed: {e}")))?,
    );
    serve(evaluator, reader, stream)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptMismatch {
    pub line: usize,
    pub request: String,
    pub expected: String,
    pub actual: String,
}

/// Sends each request to a host and compares the reply byte for byte.
pub fn run_transcript(
    transport: &Transport,
    requests: &[String],
    expected: &[String],
) -> Result<Vec<TranscriptMismatch>> {
    if requests.len() != expected.len() {
        return Err(Error::Input(format!(
            "transcript has {} requests but {} responses",
            requests.len(),
            expected.len()
        )));
    }
    let mut conn = RawConnection::open(transport)?;
    let mut mismatches = Vec::new();
    for (i, (req, exp)) in requests.iter().zip(expected).enumerate() {
        conn.send_line(req)?;
        let actual = conn
            .read_line()?
            .ok_or_else(|| Error::Protocol("host closed the stream mid-transcript".into()))?;
        if actual != *exp {
            mismatches.push(TranscriptMismatch {
                line: i + 1,
                request: req.clone(),
                expected: exp.clone(),
                actual,
            });
        }
    }
    Ok(mismatches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::{PlantedEvaluator, PlantedGameSpec, PlantedParadigm};
    use crate::model::ModelTopology;

    fn host() -> PlantedEvaluator<f64> {
        PlantedEvaluator::new(PlantedGameSpec {
            topology: ModelTopology::new(1, 2).unwrap(),
            paradigms: vec![PlantedParadigm {
                id: "p".into(),
                category: String::new(),
                base: 0.5,
                weights: vec![0.25, 0.125],
                synergies: vec![],
            }],
        })
        .unwrap()
    }

    fn run(input: &str) -> String {
        let mut out = Vec::new();
        serve(&host(), input.as_bytes(), &mut out).unwrap();
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn handshake_and_evaluate() {
        let out = run("{\"id\":1,\"op\":\"topology\"}\n{\"id\":2,\"op\":\"evaluate\",\"mask\":[1,0],\"paradigm\":\"p\",\"split\":\"dev\"}\n");
        assert_eq!(
            out,
            "{\"id\":1,\"layers\":1,\"heads_per_layer\":2,\"protocol\":1}\n{\"id\":2,\"accuracy\":0.75,\"n\":0}\n"
        );
    }

    #[test]
    fn errors_carry_request_id() {
        let out = run("{\"id\":5,\"op\":\"evaluate\",\"mask\":[1],\"paradigm\":\"p\",\"split\":\"dev\"}\n{\"id\":6,\"op\":\"evaluate\",\"mask\":[1,1],\"paradigm\":\"q\",\"split\":\"dev\"}\n{\"id\":7,\"op\":\"dance\"}\nnot json\n");
        let lines: Vec<_> = out.lines().collect();
        assert_eq!(lines.len(), 4);
        for (line, id) in lines.iter().zip([5, 6, 7, 0]) {
            match Response::decode(line).unwrap() {
                Response::Error(e) => assert_eq!(e.id, id),
                other => panic!("expected error, got {other:?}"),
            }
        }
    }
}
