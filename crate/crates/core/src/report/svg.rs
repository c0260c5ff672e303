use std::fmt::Write;

use crate::pruning::ClusterTest;
use crate::scalar::Scalar;

const W: f64 = 640.0;
const H: f64 = 360.0;
const PAD: f64 = 48.0;

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n",
        W / 2.0,
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Line plot of inertia against k.
pub fn inertia_svg<T: Scalar>(curve: &[(usize, T)]) -> String {
    let mut s = header("inertia by k");
    let (x0, x1) = span(curve.iter().map(|(k, _)| *k as f64));
    let (_, y1) = span(curve.iter().map(|(_, v)| v.as_f64()));
    let x = |k: f64| PAD + (k - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let y = |v: f64| H - PAD - v / y1.max(1e-12) * (H - 2.0 * PAD);
    let points: Vec<String> = curve
        .iter()
        .map(|(k, v)| format!("{:.2},{:.2}", x(*k as f64), y(v.as_f64())))
        .collect();
    let _ = writeln!(
        s,
        "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"{}\"/>",
        points.join(" ")
    );
    for (k, v) in curve {
        let _ = writeln!(
            s,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\"/>\n\
             <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">{k}</text>",
            x(*k as f64),
            y(v.as_f64()),
            x(*k as f64),
            H - PAD + 14.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn quartiles(values: &[f64]) -> Option<[f64; 5]> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    Some([v[0], q(0.25), q(0.5), q(0.75), v[v.len() - 1]])
}

/// Side-by-side box plots of in- and out-of-cluster deltas per cluster.
pub fn impact_svg<T: Scalar, L: ToString>(tests: &[ClusterTest<T, L>]) -> String {
    let mut s = header("accuracy change: in-cluster (red) vs out-of-cluster (blue)");
    let as_f64 = |xs: &[T]| xs.iter().map(|x| x.as_f64()).collect::<Vec<_>>();
    let groups: Vec<(String, Vec<f64>, Vec<f64>)> = tests
        .iter()
        .map(|t| (t.cluster.to_string(), as_f64(&t.in_deltas), as_f64(&t.out_deltas)))
        .collect();
    let (lo, hi) = span(groups.iter().flat_map(|(_, a, b)| a.iter().chain(b).copied()));
    let y = |v: f64| H - PAD - (v - lo) / (hi - lo) * (H - 2.0 * PAD);
    let slot = (W - 2.0 * PAD) / groups.len().max(1) as f64;
    let _ = writeln!(
        s,
        "<line x1=\"{PAD}\" x2=\"{}\" y1=\"{:.2}\" y2=\"{:.2}\" stroke=\"gray\" stroke-dasharray=\"4\"/>",
        W - PAD,
        y(0.0_f64.clamp(lo, hi)),
        y(0.0_f64.clamp(lo, hi))
    );
    for (i, (label, inside, outside)) in groups.iter().enumerate() {
        let centre = PAD + slot * (i as f64 + 0.5);
        for (offset, values, colour) in [(-0.2, inside, "firebrick"), (0.2, outside, "steelblue")] {
            let Some([min, q1, med, q3, max]) = quartiles(values) else { continue };
            let cx = centre + offset * slot;
            let half = 0.12 * slot;
            let _ = writeln!(
                s,
                "<line x1=\"{cx:.2}\" x2=\"{cx:.2}\" y1=\"{:.2}\" y2=\"{:.2}\" stroke=\"{colour}\"/>\n\
                 <rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"{colour}\"/>\n\
                 <line x1=\"{:.2}\" x2=\"{:.2}\" y1=\"{:.2}\" y2=\"{:.2}\" stroke=\"{colour}\" stroke-width=\"2\"/>",
                y(min),
                y(max),
                cx - half,
                y(q3),
                2.0 * half,
                (y(q1) - y(q3)).max(0.5),
                cx - half,
                cx + half,
                y(med),
                y(med)
            );
        }
        let _ = writeln!(
            s,
            "<text x=\"{centre:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">{}</text>",
            H - PAD + 14.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles_interpolate() {
        assert_eq!(quartiles(&[4.0, 1.0, 3.0, 2.0]), Some([1.0, 1.75, 2.5, 3.25, 4.0]));
        assert_eq!(quartiles(&[]), None);
    }

    #[test]
    fn plots_are_well_formed() {
        let s = inertia_svg(&[(1usize, 10.0f64), (2, 4.0), (3, 1.0)]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<circle").count(), 3);
        let t: ClusterTest<f64, usize> = ClusterTest {
            cluster: 0,
            members: vec!["a".into()],
            in_deltas: vec![-0.3, -0.2],
            out_deltas: vec![],
            mean_in: Some(-0.25),
            mean_out: None,
            test: None,
            undefined: Some("no out-of-cluster cells".into()),
            significant: false,
        };
        let s = impact_svg(&[t]);
        assert_eq!(s.matches("<rect").count(), 2);
    }
}
