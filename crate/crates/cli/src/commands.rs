//! Implementation of each subcommand. All output goes through the
//! core crate's atomic writers, so interrupted runs never leave
//! half-written files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use nuclei_core::grid::{Grid2D, HoverMap, InstanceMap};
use nuclei_core::instance_stats;
use nuclei_core::io::{
    atomic_write, read_annotations, read_float_map, read_label_map, read_postproc_config,
    write_annotations, write_class_report, write_float_map, write_label_map, write_seg_report,
    Annotation,
};
use nuclei_core::metrics::{
    classification_scores, dataset_average, match_by_radius, seg_metrics, DetMatchResult, GtClass,
    SegMetrics,
};
use nuclei_core::parallel::map_collect;
use nuclei_core::postproc::{run_pipeline, PostProcConfig, ProbMaps};
use nuclei_core::synth::{synth_scene, SynthConfig};
use nuclei_core::targets::{binary_target, hover_targets, type_target};
use nuclei_core::tiling::{plan_tiles, TileGeometry};

pub fn gen_targets(
    instances: &Path,
    types: &Path,
    out_dir: &Path,
    num_classes: u8,
) -> Result<()> {
    let im = read_label_map(instances)?;
    let annotations = read_annotations(types, num_classes)?;
    let mut class_of = BTreeMap::new();
    for a in &annotations {
        let class = a.class.ok_or_else(|| {
            anyhow!(
                "{}: instance {} is UNLABELLED; target generation needs a class for every instance",
                types.display(),
                a.label
            )
        })?;
        class_of.insert(a.label, class);
    }
    let type_map = type_target(&im, &class_of, num_classes)
        .with_context(|| format!("{} does not cover {}", types.display(), instances.display()))?;
    let hover = hover_targets(&im);
    let mask = binary_target(&im);

    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    write_float_map(
        &out_dir.join("hover.bin"),
        &[hover.horizontal().clone(), hover.vertical().clone()],
        &["horizontal", "vertical"],
    )?;
    // float copies of the categorical targets, in the layout the
    // post-processing consumes (foreground probability; one-hot class
    // stack with background first)
    write_float_map(
        &out_dir.join("np.bin"),
        &[mask.grid().map(|&v| f64::from(v))],
        &["np"],
    )?;
    let mut class_stack = vec![Grid2D::new(mask.height(), mask.width(), 0.0); usize::from(num_classes) + 1];
    for (r, c, &class) in type_map.grid().indexed_iter() {
        class_stack[usize::from(class)].set(r, c, 1.0);
    }
    let class_names: Vec<String> = std::iter::once("background".to_owned())
        .chain((1..=num_classes).map(|c| format!("class_{c}")))
        .collect();
    write_float_map(
        &out_dir.join("nc.bin"),
        &class_stack,
        &class_names.iter().map(String::as_str).collect::<Vec<_>>(),
    )?;
    write_label_map(
        &out_dir.join("np.png"),
        &InstanceMap::from_grid(mask.grid().map(|&v| u32::from(v))),
    )?;
    write_label_map(
        &out_dir.join("types.png"),
        &InstanceMap::from_grid(type_map.grid().map(|&v| u32::from(v))),
    )?;
    Ok(())
}

pub fn postproc(
    np: &Path,
    hover: &Path,
    nc: Option<&Path>,
    config: Option<&Path>,
    out: &Path,
    types_out: Option<&Path>,
) -> Result<()> {
    if types_out.is_some() && nc.is_none() {
        bail!("--types-out needs --nc to classify instances");
    }
    let cfg = match config {
        Some(path) => read_postproc_config(path)?,
        None => PostProcConfig::default(),
    };

    let (hv_stack, _) = read_float_map(hover)?;
    if hv_stack.len() != 2 {
        bail!(
            "{}: expected 2 channels (horizontal, vertical), found {}",
            hover.display(),
            hv_stack.len()
        );
    }
    let mut hv_iter = hv_stack.into_iter();
    let hv = HoverMap::new(hv_iter.next().unwrap(), hv_iter.next().unwrap())?;

    let (np_stack, _) = read_float_map(np)?;
    let q = match np_stack.len() {
        1 => np_stack.into_iter().next().unwrap(),
        2 => np_stack.into_iter().nth(1).unwrap(),
        n => bail!(
            "{}: expected 1 channel (foreground) or 2 (background, foreground), found {n}",
            np.display()
        ),
    };
    check_dims(np, q.dims(), hover, hv.dims())?;

    let classes = match nc {
        Some(path) => {
            let (stack, _) = read_float_map(path)?;
            if let Some(ch) = stack.first() {
                check_dims(path, ch.dims(), np, q.dims())?;
            }
            Some(stack)
        }
        None => None,
    };

    let maps = ProbMaps::new(q, classes)?;
    let result = run_pipeline(&hv, &maps, &cfg)?;
    write_label_map(out, &result.instances)?;

    if let Some(path) = types_out {
        let stats = instance_stats(&result.instances);
        let records: Vec<Annotation> = stats
            .iter()
            .map(|s| Annotation {
                label: s.label,
                class: result.types.get(&s.label).map(|&(class, _)| class),
                centroid: s.centroid,
            })
            .collect();
        write_annotations(path, &records)?;
    }
    Ok(())
}

fn check_dims(a: &Path, a_dims: (usize, usize), b: &Path, b_dims: (usize, usize)) -> Result<()> {
    if a_dims != b_dims {
        bail!(
            "{} is {}x{} but {} is {}x{}",
            a.display(),
            a_dims.0,
            a_dims.1,
            b.display(),
            b_dims.0,
            b_dims.1
        );
    }
    Ok(())
}

pub fn eval_seg(gt: &[PathBuf], pred: &[PathBuf], out: &Path) -> Result<()> {
    if gt.len() != pred.len() {
        bail!("{} ground-truth maps but {} predictions", gt.len(), pred.len());
    }
    let pairs: Vec<(PathBuf, PathBuf)> = gt.iter().cloned().zip(pred.iter().cloned()).collect();
    let rows: Vec<(String, SegMetrics)> = map_collect(&pairs, |(g, p)| -> Result<_> {
        let gt_map = read_label_map(g)?;
        let pred_map = read_label_map(p)?;
        check_dims(g, gt_map.dims(), p, pred_map.dims())?;
        let name = g
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| g.display().to_string());
        Ok((name, seg_metrics(&gt_map, &pred_map)))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let average = dataset_average(&rows.iter().map(|(_, m)| m.clone()).collect::<Vec<_>>())?;
    write_seg_report(out, &rows, &average)?;
    Ok(())
}

pub fn eval_class(
    gt_ann: &[PathBuf],
    pred_ann: &[PathBuf],
    radius: f64,
    num_classes: u8,
    out: &Path,
) -> Result<()> {
    if gt_ann.len() != pred_ann.len() {
        bail!(
            "{} ground-truth tables but {} predictions",
            gt_ann.len(),
            pred_ann.len()
        );
    }
    if radius <= 0.0 {
        bail!("--radius must be positive, got {radius}");
    }
    // matches are per image; the classification tallies pool across the
    // dataset, so indices are offset into one combined table
    let mut pooled = DetMatchResult {
        tp_pairs: Vec::new(),
        fn_gt: Vec::new(),
        fp_pred: Vec::new(),
        radius,
    };
    let mut gt_types: Vec<GtClass> = Vec::new();
    let mut pred_types: Vec<u32> = Vec::new();
    for (g_path, p_path) in gt_ann.iter().zip(pred_ann) {
        let gt_recs = read_annotations(g_path, num_classes)?;
        let pred_recs = read_annotations(p_path, num_classes)?;
        let gt_centroids: Vec<(f64, f64)> = gt_recs.iter().map(|a| a.centroid).collect();
        let pred_centroids: Vec<(f64, f64)> = pred_recs.iter().map(|a| a.centroid).collect();
        let m = match_by_radius(&gt_centroids, &pred_centroids, radius);
        let (goff, poff) = (gt_types.len(), pred_types.len());
        pooled
            .tp_pairs
            .extend(m.tp_pairs.iter().map(|&(gi, pi, d)| (gi + goff, pi + poff, d)));
        pooled.fn_gt.extend(m.fn_gt.iter().map(|&gi| gi + goff));
        pooled.fp_pred.extend(m.fp_pred.iter().map(|&pi| pi + poff));
        gt_types.extend(gt_recs.iter().map(|a| match a.class {
            Some(c) => GtClass::Labelled(u32::from(c)),
            None => GtClass::Unlabelled,
        }));
        for a in &pred_recs {
            let class = a.class.ok_or_else(|| {
                anyhow!(
                    "{}: prediction {} is UNLABELLED; predictions must carry a class",
                    p_path.display(),
                    a.label
                )
            })?;
            pred_types.push(u32::from(class));
        }
    }
    let types = (1..=u32::from(num_classes)).collect();
    let metrics = classification_scores(&pooled, &gt_types, &pred_types, &types)?;
    write_class_report(out, &metrics)?;
    Ok(())
}

pub fn tile_plan(
    height: usize,
    width: usize,
    input: usize,
    output: usize,
    out: Option<&Path>,
) -> Result<()> {
    if height == 0 || width == 0 {
        bail!("--width and --height must be positive");
    }
    let geometry = TileGeometry::new(input, output)?;
    let plan = plan_tiles(height, width, geometry);
    let mut text = serde_json::to_string_pretty(&plan)?;
    text.push('\n');
    match out {
        Some(path) => atomic_write(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SynthJob {
    /// Number of scenes; scene `i` uses `seed + i`.
    scenes: usize,
    scene: SynthConfig,
}

impl Default for SynthJob {
    fn default() -> Self {
        Self {
            scenes: 1,
            scene: SynthConfig::default(),
        }
    }
}

pub fn synth(config: Option<&Path>, out_dir: &Path, seed_override: Option<u64>) -> Result<()> {
    let mut job = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| path.display().to_string())?;
            toml::from_str::<SynthJob>(&text)
                .map_err(|e| anyhow!("{}: {e}", path.display()))?
        }
        None => SynthJob::default(),
    };
    if let Some(seed) = seed_override {
        job.scene.seed = seed;
    }
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    for i in 0..job.scenes {
        let cfg = SynthConfig {
            seed: job.scene.seed.wrapping_add(i as u64),
            ..job.scene.clone()
        };
        let scene = synth_scene(&cfg)?;
        write_label_map(&out_dir.join(format!("scene_{i:03}.png")), &scene.instances)?;
        let records: Vec<Annotation> = scene
            .centroids
            .iter()
            .map(|(&label, &centroid)| Annotation {
                label,
                class: Some(scene.classes[&label]),
                centroid,
            })
            .collect();
        write_annotations(&out_dir.join(format!("scene_{i:03}.csv")), &records)?;
    }
    Ok(())
}
