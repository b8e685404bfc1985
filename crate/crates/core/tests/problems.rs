//! Dataset generators: area checks, reproducibility and file round-trips.

use reupload_core::problems::{
    class_balance, generate_dataset, label_point, load_dataset, manifest_path, save_dataset, ProblemId,
};

const N: usize = 100_000;

fn balance(p: ProblemId) -> Vec<f64> {
    class_balance(&generate_dataset(p, N, 2024).unwrap()).unwrap()
}

#[test]
fn monte_carlo_areas() {
    assert!((balance(ProblemId::Circle)[0] - 0.5).abs() < 0.01);
    assert!((balance(ProblemId::Sphere)[0] - 0.5).abs() < 0.01);
    assert!((balance(ProblemId::Annulus)[1] - 0.5).abs() < 0.01);
    for share in balance(ProblemId::Squares) {
        assert!((share - 0.25).abs() < 0.01);
    }
    // printed hypersphere threshold: π²r⁴/2 over 16 with r² = 2/π
    assert!((balance(ProblemId::Hypersphere)[0] - 0.125).abs() < 0.01);
    // three disks covering 3 of the square's 4 units of area
    let three = balance(ProblemId::ThreeCircles);
    assert!((three[0] - 0.25).abs() < 0.01);
}

#[test]
fn generation_is_reproducible_and_consistent() {
    for p in ProblemId::ALL {
        let a = generate_dataset(p, 500, 7).unwrap();
        let b = generate_dataset(p, 500, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.points, generate_dataset(p, 500, 8).unwrap().points);
        for pt in &a.points {
            assert_eq!(pt.x.len(), p.def().dim);
            assert!(pt.x.iter().all(|v| (-1.0..1.0).contains(v)));
            assert_eq!(pt.class_index, label_point(p, &pt.x).unwrap());
        }
    }
}

#[test]
fn files_round_trip_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    for p in ProblemId::ALL {
        let data = generate_dataset(p, 300, 11).unwrap();
        let path = dir.path().join(format!("{p}.csv"));
        save_dataset(&data, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(back, data);
        let again = dir.path().join(format!("{p}-again.csv"));
        save_dataset(&back, &again).unwrap();
        assert_eq!(std::fs::read(&again).unwrap(), bytes);
        assert!(manifest_path(&path).exists());
    }
}

#[test]
fn tampered_labels_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("circle.csv");
    save_dataset(&generate_dataset(ProblemId::Circle, 20, 1).unwrap(), &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let last = lines[1].pop().unwrap();
    lines[1].push(if last == '0' { '1' } else { '0' });
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    assert!(load_dataset(&path).is_err());
}
