use std::fs::File;
use std::io::{BufReader, BufWriter};

use num_complex::Complex;
use xpdrsim::pipeline::{self, PipelineConfig};
use xpdrsim::scenario::{self, bundled};
use xpdrsim::synth::dump::{DumpHeader, DumpReader, DumpWriter};
use xpdrsim::synth::Synthesizer;

fn short_linear(pulses: usize) -> xpdrsim::Scenario {
    let mut s = bundled::linear_paper();
    s.pulse_count = pulses;
    s
}

#[test]
fn f32_pipeline_follows_f64() {
    let s = short_linear(16);
    let cfg = PipelineConfig::default();
    let a = pipeline::run_scenario::<f64>(&s, &cfg).unwrap().transponder.unwrap();
    let b = pipeline::run_scenario::<f32>(&s, &cfg).unwrap().transponder.unwrap();
    assert_eq!(a.valid_count(), b.valid_count());
    for (x, y) in a.rows.iter().zip(&b.rows) {
        let dx = x.r_abs_m.unwrap() - y.r_abs_m.unwrap() as f64;
        // f32 carries about 7 digits at ~300 m.
        assert!(dx.abs() < 5e-3, "r_abs {dx}");
        let dr = x.r_rel_m.unwrap() - y.r_rel_m.unwrap() as f64;
        assert!(dr.abs() < 5e-3, "r_rel {dr}");
    }
}

#[test]
fn dump_file_round_trip_reproduces_estimates() {
    let s = short_linear(10);
    let synth = Synthesizer::new(&s).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pulses.xpdr");
    let header = DumpHeader {
        pulse_count: 10,
        samples_per_pulse: s.radar.samples_per_pulse() as u32,
        sample_rate_hz: s.radar.sample_rate_hz,
    };
    let mut w = DumpWriter::new(BufWriter::new(File::create(&path).unwrap()), header).unwrap();
    let mut direct = Vec::new();
    for k in 0..10 {
        let p = synth.pulse::<f64>(k).unwrap();
        w.write_pulse(&p.samples).unwrap();
        direct.push(p.samples);
    }
    w.finish().unwrap();

    let mut r = DumpReader::new(BufReader::new(File::open(&path).unwrap())).unwrap();
    assert_eq!(r.header(), header);
    let cfg = PipelineConfig::default();
    for (k, d) in direct.iter().enumerate() {
        let back: Vec<Complex<f64>> = r.read_pulse().unwrap().unwrap();
        assert_eq!(back.len(), d.len());
        for (x, y) in back.iter().zip(d) {
            assert!((x - y).norm() <= 1e-6 * y.norm().max(1e-30), "{x} vs {y}");
        }
        let from_file = pipeline::analyze_pulse(&s, &synth.geometry[k], &back, &cfg);
        let from_mem = pipeline::analyze_pulse(&s, &synth.geometry[k], d, &cfg);
        let f = from_file.transponder.unwrap().unwrap();
        let m = from_mem.transponder.unwrap().unwrap();
        assert!((f.f1_hz - m.f1_hz).abs() < 1e-2);
        assert!((f.f2_hz - m.f2_hz).abs() < 1e-2);
    }
    assert!(r.read_pulse::<f64>().unwrap().is_none());
}

#[test]
fn scenario_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for s in [bundled::linear_paper(), bundled::circular_paper()] {
        let path = dir.path().join("s.toml");
        scenario::save_scenario(&s, &path).unwrap();
        let back = scenario::load_scenario(&path).unwrap();
        assert_eq!(back, s);
    }
}

#[test]
fn circular_run_sees_transponder_at_every_heading() {
    let mut s = bundled::circular_paper();
    // Every tenth degree of one orbit.
    s.pulse_count = 3600;
    let synth = Synthesizer::new(&s).unwrap();
    let cfg = PipelineConfig::default();
    for k in (0..3600).step_by(100) {
        let p = synth.pulse::<f64>(k).unwrap();
        let a = pipeline::analyze_pulse(&s, &synth.geometry[k], &p.samples, &cfg);
        assert!(a.transponder.unwrap().is_ok(), "pulse {k}");
    }
}
