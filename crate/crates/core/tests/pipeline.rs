//! End-to-end runs of the full pipeline: raw sample matrices through both
//! descriptor branches, dictionary assembly, and classification — in memory
//! and through the on-disk formats.

use j3s_core::dataset::{
    gallery_probe_split, load_feature_matrix, write_fmx1, ClassRecord, GalleryCount, Manifest,
    SampleEntry, SampleKind, SplitSpec,
};
use j3s_core::unitary::{build_spatial, frame_mosaic};
use j3s_core::{
    assemble_dictionaries, build_descriptor, predict, predict_global, FeatureMatrix,
    GaussianConfig, J3sParams, PatchConfig, Query,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

const D: usize = 10;
const M: usize = 30;

/// Class `c` concentrates around `5 * e_c` with unit within-class noise.
fn synth_sample(class: u32, idx: usize, rng: &mut impl Rng) -> FeatureMatrix {
    let data = DMatrix::from_fn(D, M, |i, _| {
        let mean = if i as u32 == class { 5.0 } else { 0.0 };
        mean + rng.random_range(-1.0..1.0)
    });
    FeatureMatrix::new(data, class, format!("c{class}_s{idx}")).unwrap()
}

fn patch_config() -> PatchConfig {
    PatchConfig {
        patch_h: 4,
        patch_w: 4,
        stride: 2,
        sparsity_fraction: 0.2,
        iterations: 10,
        ..PatchConfig::default()
    }
}

fn descriptor_pair(x: &FeatureMatrix) -> (DVector<f64>, DVector<f64>) {
    let stat = build_descriptor(x, &GaussianConfig::default()).unwrap();
    let spat = build_spatial(&frame_mosaic(&x.data), &patch_config()).unwrap();
    (stat.stat_vector, spat.spatial_vector)
}

fn build_corpus(per_class: usize) -> Vec<FeatureMatrix> {
    let mut rng = ChaCha12Rng::seed_from_u64(2024);
    let mut out = Vec::new();
    for class in 0..3u32 {
        for idx in 0..per_class {
            out.push(synth_sample(class, idx, &mut rng));
        }
    }
    out
}

fn classify_all(gallery: &[FeatureMatrix], probes: &[FeatureMatrix], use_pca: bool) -> Vec<u32> {
    let items: Vec<_> = gallery
        .iter()
        .map(|x| {
            let (s, p) = descriptor_pair(x);
            (s, p, x.label)
        })
        .collect();
    let dict = assemble_dictionaries(&items, use_pca).unwrap();
    probes
        .iter()
        .map(|x| {
            let (stat, spat) = descriptor_pair(x);
            let q = Query {
                sample_id: x.sample_id.clone(),
                true_label: Some(x.label),
                stat,
                spat,
            };
            predict(&dict, &q, &J3sParams::default()).unwrap().predicted
        })
        .collect()
}

#[test]
fn separable_classes_are_classified_correctly() {
    let corpus = build_corpus(8);
    let (gallery, probes): (Vec<_>, Vec<_>) = corpus
        .into_iter()
        .partition(|x| x.sample_id.ends_with("s0") || {
            let n: usize = x.sample_id.split("_s").nth(1).unwrap().parse().unwrap();
            n < 5
        });
    assert_eq!(gallery.len(), 15);
    assert_eq!(probes.len(), 9);

    for use_pca in [false, true] {
        let predicted = classify_all(&gallery, &probes, use_pca);
        let correct = predicted
            .iter()
            .zip(probes.iter())
            .filter(|(p, x)| **p == x.label)
            .count();
        assert_eq!(
            correct,
            probes.len(),
            "use_pca={use_pca}: predictions {predicted:?}"
        );
    }
}

#[test]
fn global_and_per_class_agree_on_separable_data() {
    let corpus = build_corpus(4);
    let (gallery, probes): (Vec<_>, Vec<_>) = corpus
        .into_iter()
        .partition(|x| !x.sample_id.ends_with("s3"));

    let items: Vec<_> = gallery
        .iter()
        .map(|x| {
            let (s, p) = descriptor_pair(x);
            (s, p, x.label)
        })
        .collect();
    let dict = assemble_dictionaries(&items, false).unwrap();
    for x in &probes {
        let (stat, spat) = descriptor_pair(x);
        let q = Query {
            sample_id: x.sample_id.clone(),
            true_label: Some(x.label),
            stat,
            spat,
        };
        let a = predict(&dict, &q, &J3sParams::default()).unwrap();
        let b = predict_global(&dict, &q, &J3sParams::default()).unwrap();
        assert_eq!(a.predicted, x.label);
        assert_eq!(b.predicted, x.label);
    }
}

#[test]
fn file_backed_run_matches_in_memory() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = build_corpus(4);

    let mut classes: Vec<ClassRecord> = (0..3u32)
        .map(|id| ClassRecord {
            id,
            name: format!("class{id}"),
            samples: Vec::new(),
        })
        .collect();
    for x in &corpus {
        let name = format!("{}.fmx1", x.sample_id);
        write_fmx1(&dir.path().join(&name), &x.data).unwrap();
        classes[x.label as usize].samples.push(SampleEntry {
            id: x.sample_id.clone(),
            path: name.into(),
            kind: SampleKind::FeatureMap,
        });
    }
    let manifest_path = dir.path().join("manifest.json");
    Manifest { classes }.save(&manifest_path).unwrap();

    let manifest = Manifest::load(&manifest_path).unwrap();
    let split = gallery_probe_split(
        &manifest,
        &SplitSpec {
            gallery: GalleryCount::Half,
            seed: 5,
        },
    )
    .unwrap();
    assert_eq!(split.gallery.len(), 6);
    assert_eq!(split.probes.len(), 6);

    let by_id = |id: &str| corpus.iter().find(|x| x.sample_id == id).unwrap();
    let loaded_gallery: Vec<FeatureMatrix> = split
        .gallery
        .iter()
        .map(|s| load_feature_matrix(&s.entry, s.class_id).unwrap())
        .collect();
    let loaded_probes: Vec<FeatureMatrix> = split
        .probes
        .iter()
        .map(|s| load_feature_matrix(&s.entry, s.class_id).unwrap())
        .collect();
    for x in loaded_gallery.iter().chain(&loaded_probes) {
        // binary round trip must be bit-exact
        assert_eq!(x.data, by_id(&x.sample_id).data);
    }

    let from_files = classify_all(&loaded_gallery, &loaded_probes, false);
    let in_memory = classify_all(
        &split
            .gallery
            .iter()
            .map(|s| by_id(&s.entry.id).clone())
            .collect::<Vec<_>>(),
        &split
            .probes
            .iter()
            .map(|s| by_id(&s.entry.id).clone())
            .collect::<Vec<_>>(),
        false,
    );
    assert_eq!(from_files, in_memory);
}
