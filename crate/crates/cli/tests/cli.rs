use std::fs;
use std::path::Path;
use std::process::Command;

use vfd_cli::config::from_rendered;
use vfd_cli::output::{Summary, BER_HEADER};
use vfd_cli::{parse_config, Overrides};
use vfd_core::sim::{RelayLocation, ScenarioConfig, Scheme};

const TINY: &str = "L = 2\nK = 16\nrealizations = 2\nlocation = B\n";

fn vfdsim(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_vfdsim")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.cfg");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn empty_file_gives_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "");
    let c = parse_config(Some(Path::new(&path)), &Overrides::default()).unwrap();
    assert_eq!(c, ScenarioConfig::default());
    assert_eq!(
        (c.frames, c.info_bits, c.antennas, c.iterations, c.realizations),
        (20, 512, 2, 5, 1000)
    );
}

#[test]
fn precedence_defaults_file_preset_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "K = 128\nrealizations = 7\nseed = 3\n");
    let file_only = parse_config(Some(Path::new(&path)), &Overrides::default()).unwrap();
    assert_eq!(
        (file_only.info_bits, file_only.realizations, file_only.base_seed),
        (128, 7, 3)
    );
    let preset = Overrides {
        desk_scale: true,
        ..Overrides::default()
    };
    let desk = parse_config(Some(Path::new(&path)), &preset).unwrap();
    assert_eq!((desk.info_bits, desk.realizations, desk.base_seed), (256, 100, 3));
    let flags = Overrides {
        desk_scale: true,
        realizations: Some(5),
        scheme: Some("crc-sdf".into()),
        snr: Some("0:2:12".into()),
        location: Some("B".into()),
        ..Overrides::default()
    };
    let c = parse_config(Some(Path::new(&path)), &flags).unwrap();
    assert_eq!(c.realizations, 5);
    assert_eq!(c.schemes, vec![Scheme::CrcSdf]);
    assert_eq!(c.snr_grid_db, vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0]);
    assert_eq!(c.relay_location, RelayLocation::B);
}

#[test]
fn config_errors_exit_with_2_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let odd = write_config(dir.path(), "L = 7\n");
    let r = vfdsim(&["--config", &odd, "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("L must be even"));
    assert!(!out.exists());

    let unknown = write_config(dir.path(), "colour = blue\n");
    let r = vfdsim(&["--config", &unknown]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("colour"));

    let r = vfdsim(&["--pe-mode", "sometimes"]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("pe_mode"));
    assert_eq!(vfdsim(&["--no-such-flag"]).status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let r = vfdsim(&[
        "--config",
        &cfg,
        "--snr",
        "0:1:0",
        "--scheme",
        "crc-sdf",
        "--out",
        blocker.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn run_emits_consistent_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let out = dir.path().join("run");
    let args = [
        "--config",
        &cfg,
        "--scheme=crc-sdf",
        "--snr=-2:2:2",
        "--out",
        out.to_str().unwrap(),
    ];
    let r = vfdsim(&args);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));

    let ber = fs::read_to_string(out.join("ber.csv")).unwrap();
    let lines: Vec<_> = ber.lines().collect();
    assert_eq!(lines[0], BER_HEADER);
    assert_eq!(lines.len(), 4);
    for row in &lines[1..] {
        let f: Vec<_> = row.split(',').collect();
        assert_eq!(f[0], "crc-sdf");
        let (errors, total): (u64, u64) = (f[2].parse().unwrap(), f[3].parse().unwrap());
        assert_eq!(total, 2 * 2 * 16);
        assert_eq!(f[4], format!("{:.11e}", errors as f64 / total as f64));
        assert_eq!(f[5], "2");
    }

    let plot = fs::read_to_string(out.join("plotdata.csv")).unwrap();
    assert_eq!(plot.lines().next().unwrap(), "snr_db,crc-sdf");
    assert_eq!(plot.lines().count(), 4);

    let summary: Summary = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let echoed = from_rendered(&summary.manifest.config).unwrap();
    let expected = parse_config(
        Some(Path::new(&cfg)),
        &Overrides {
            scheme: Some("crc-sdf".into()),
            snr: Some("-2:2:2".into()),
            ..Overrides::default()
        },
    )
    .unwrap();
    assert_eq!(echoed, expected);
    assert_eq!(summary.manifest.base_seed, expected.base_seed);
    assert!(summary.manifest.finished_unix >= summary.manifest.started_unix);
    assert_eq!(summary.pe.len(), 3);
    assert_eq!(summary.pe[0].mean_pe.len(), 3);

    let again = dir.path().join("again");
    let mut args2 = args;
    args2[5] = again.to_str().unwrap();
    assert!(vfdsim(&args2).status.success());
    assert_eq!(
        fs::read(out.join("ber.csv")).unwrap(),
        fs::read(again.join("ber.csv")).unwrap()
    );
}

#[test]
fn noiseless_flag_gives_zero_ber() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let out = dir.path().join("quiet");
    let r = vfdsim(&[
        "--config",
        &cfg,
        "--noiseless",
        "--snr",
        "0:1:0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(r.status.success());
    let ber = fs::read_to_string(out.join("ber.csv")).unwrap();
    assert_eq!(ber.lines().count(), 6);
    assert!(ber.lines().skip(1).all(|l| l.split(',').nth(2) == Some("0")));
}
