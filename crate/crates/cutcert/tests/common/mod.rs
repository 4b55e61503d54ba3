//! Random instance generation shared by the integration suites.

use cutcert::code::disjoint_path_code;
use cutcert::field::PrimeField;
use cutcert::instance::{Commodity, Instance};
use cutcert::linalg::Label;
use cutcert::product::CodeBundle;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

pub struct RandomFactor {
    pub instance: Instance,
    pub paths: Vec<Vec<Label>>,
}

/// A small instance built around one or two vertex-disjoint source-to-sink
/// paths, with optional extra vertices, chords, and occasionally widened
/// attach sets. `tag` keeps vertex labels and terminal ids disjoint between
/// factors; the result never exceeds `max_vertices` vertices.
pub fn random_path_factor(rng: &mut ChaCha8Rng, tag: &str, max_vertices: usize) -> RandomFactor {
    assert!(max_vertices >= 2);
    let r = if max_vertices >= 4 && rng.gen_bool(0.5) {
        2
    } else {
        1
    };
    let mut vertices: Vec<Label> = Vec::new();
    let mut edges: Vec<(Label, Label)> = Vec::new();
    let mut paths: Vec<Vec<Label>> = Vec::new();
    for p in 0..r {
        // Reserve two vertices for each path still to come.
        let headroom = max_vertices - vertices.len() - 2 * (r - 1 - p);
        let len = rng.gen_range(2..=headroom.min(3));
        let path: Vec<Label> = (0..len)
            .map(|j| Label::name(format!("{tag}p{p}v{j}")))
            .collect();
        for w in path.windows(2) {
            edges.push((w[0].clone(), w[1].clone()));
        }
        vertices.extend(path.iter().cloned());
        paths.push(path);
    }
    while vertices.len() < max_vertices && rng.gen_bool(0.4) {
        let v = Label::name(format!("{tag}x{}", vertices.len()));
        let other = vertices[rng.gen_range(0..vertices.len())].clone();
        vertices.push(v.clone());
        edges.push((v, other));
    }
    for _ in 0..rng.gen_range(0..=3) {
        let a = vertices[rng.gen_range(0..vertices.len())].clone();
        let b = vertices[rng.gen_range(0..vertices.len())].clone();
        if a != b {
            edges.push((a, b));
        }
    }
    let mut commodities = Vec::new();
    let mut attach: BTreeMap<String, Vec<Label>> = BTreeMap::new();
    for (p, path) in paths.iter().enumerate() {
        let s = format!("s{p}{tag}");
        let t = format!("t{p}{tag}");
        commodities.push(Commodity {
            source: s.clone(),
            sink: t.clone(),
        });
        let mut s_at = vec![path[0].clone()];
        if rng.gen_bool(0.3) {
            s_at.push(vertices[rng.gen_range(0..vertices.len())].clone());
        }
        let mut t_at = vec![path[path.len() - 1].clone()];
        if rng.gen_bool(0.3) {
            t_at.push(vertices[rng.gen_range(0..vertices.len())].clone());
        }
        attach.insert(s, s_at);
        attach.insert(t, t_at);
    }
    RandomFactor {
        instance: Instance::new(vertices, edges, commodities, attach).unwrap(),
        paths,
    }
}

/// The factor's instance with its disjoint-path code and both witnesses,
/// wrapped as a base bundle.
pub fn bundle_from(factor: &RandomFactor, name: &str) -> CodeBundle {
    let (code, decodability, certifiability) =
        disjoint_path_code(&factor.instance, &factor.paths, PrimeField::gf2()).unwrap();
    CodeBundle::base(
        name.to_string(),
        factor.instance.clone(),
        code,
        decodability,
        certifiability,
    )
}
