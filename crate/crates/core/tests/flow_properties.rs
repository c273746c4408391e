use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seqbench::topomodel::{predict, preset, solve_flows, DiskPlan, Topology, PRESET_NAMES};
use seqbench::{Mode, RunSpec};

struct Tree {
    parents: Vec<Option<usize>>,
    caps: Vec<f64>,
    disk: Vec<bool>,
}

impl Tree {
    fn random(seed: u64, unlimited_interior: bool) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=12usize);
        let mut parents = vec![None];
        let mut disk = vec![false];
        for i in 1..n {
            let interior: Vec<usize> = (0..i).filter(|&j| !disk[j]).collect();
            parents.push(Some(interior[rng.random_range(0..interior.len())]));
            disk.push(i == n - 1 || rng.random_bool(0.5));
        }
        let caps = (0..n)
            .map(|i| {
                if (unlimited_interior && !disk[i]) || rng.random_bool(0.25) {
                    f64::INFINITY
                } else {
                    rng.random_range(1.0..400.0)
                }
            })
            .collect();
        Self { parents, caps, disk }
    }

    fn text(&self) -> String {
        let mut s = String::new();
        for i in 0..self.parents.len() {
            let kind = if i == 0 {
                "system"
            } else if self.disk[i] {
                "disk"
            } else {
                "controller"
            };
            let parent = self.parents[i].map(|p| format!("n{p}")).unwrap_or_else(|| "-".into());
            let cap = if self.caps[i].is_finite() { self.caps[i].to_string() } else { "inf".into() };
            s += &format!("n{i} {kind} {parent} {cap} {cap}\n");
        }
        s
    }

    fn topology(&self) -> Topology {
        Topology::parse("prop", &self.text()).unwrap()
    }

    fn demands(&self, seed: u64) -> Vec<(String, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd3);
        let disks: Vec<usize> = (0..self.disk.len()).filter(|&i| self.disk[i]).collect();
        (0..rng.random_range(1..10))
            .map(|_| (format!("n{}", disks[rng.random_range(0..disks.len())]), rng.random_range(0.0..250.0)))
            .collect()
    }

    fn usage(&self, demands: &[(String, f64)], alloc: &[f64]) -> Vec<f64> {
        let mut used = vec![0.0; self.parents.len()];
        for ((id, _), a) in demands.iter().zip(alloc) {
            let mut node = Some(id[1..].parse::<usize>().unwrap());
            while let Some(n) = node {
                used[n] += a;
                node = self.parents[n];
            }
        }
        used
    }
}

fn refs(d: &[(String, f64)]) -> Vec<(&str, f64)> {
    d.iter().map(|(s, x)| (s.as_str(), *x)).collect()
}

proptest! {
    #[test]
    fn allocations_are_feasible(seed in any::<u64>()) {
        let tree = Tree::random(seed, false);
        let demands = tree.demands(seed);
        let s = solve_flows(&tree.topology(), &refs(&demands), Mode::Read).unwrap();
        for ((_, d), a) in demands.iter().zip(&s.allocations) {
            prop_assert!(*a >= 0.0 && *a <= d + 1e-9);
        }
        let used = tree.usage(&demands, &s.allocations);
        for (n, u) in used.iter().enumerate() {
            prop_assert!(*u <= tree.caps[n] * (1.0 + 1e-12) + 1e-9, "node {} uses {} of {}", n, u, tree.caps[n]);
        }
    }

    #[test]
    fn unlimited_interior_is_linear(seed in any::<u64>()) {
        let mut tree = Tree::random(seed, true);
        for (c, d) in tree.caps.iter_mut().zip(&tree.disk) {
            if *d {
                *c = f64::INFINITY;
            }
        }
        let demands = tree.demands(seed);
        let s = solve_flows(&tree.topology(), &refs(&demands), Mode::Write).unwrap();
        let sum: f64 = demands.iter().map(|(_, d)| d).sum();
        prop_assert_eq!(s.total, sum);
    }

    #[test]
    fn dropping_a_slack_cap_changes_nothing(seed in any::<u64>()) {
        let tree = Tree::random(seed, false);
        let demands = tree.demands(seed);
        let before = solve_flows(&tree.topology(), &refs(&demands), Mode::Read).unwrap();
        let used = tree.usage(&demands, &before.allocations);
        let slack: Vec<usize> =
            (0..used.len()).filter(|&n| tree.caps[n].is_finite() && used[n] < tree.caps[n] - 1e-6).collect();
        for n in slack {
            let mut relaxed = Tree { parents: tree.parents.clone(), caps: tree.caps.clone(), disk: tree.disk.clone() };
            relaxed.caps[n] = f64::INFINITY;
            let after = solve_flows(&relaxed.topology(), &refs(&demands), Mode::Read).unwrap();
            for (a, b) in before.allocations.iter().zip(&after.allocations) {
                prop_assert!((a - b).abs() <= 1e-9, "relaxing n{} moved {} to {}", n, a, b);
            }
        }
    }
}

#[test]
fn predict_is_monotone_in_disk_count() {
    let specs = [
        RunSpec::new(Mode::Read, 1 << 20, 64, 30.0),
        RunSpec::new(Mode::Write, 64 << 10, 1, 30.0),
        RunSpec::new(Mode::Read, 256 << 10, 4, 30.0),
    ];
    for name in PRESET_NAMES {
        let topo = preset(name).unwrap();
        for striped in [false, true] {
            for spec in &specs {
                let mut last = 0.0;
                for n in 1..=topo.n_disks() {
                    let plan = DiskPlan::first_n(&topo, n, striped).unwrap();
                    let t = predict(&topo, &plan, spec).unwrap().total_mbps;
                    assert!(t + 1e-9 >= last, "{name} striped={striped} {spec:?}: {n} disks {t} < {last}");
                    last = t;
                }
            }
        }
    }
}
