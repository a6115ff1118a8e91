//! Trains the HOG patch classifier on the synthetic training layouts and
//! labels an unseen scene from appearance alone.

use lidarfuse::freespace::{
    classify_image, extract_patch, hog_features, train_classifier, ClassifierOptions, GroundClassifier,
    DEFAULT_HEIGHT_TOL,
};
use lidarfuse::metrics::mask_metrics;
use lidarfuse::scene::{ground_truth_from_rendering, render_camera, training_corpus, Scene};
use lidarfuse::RigExtrinsics;

fn main() -> lidarfuse::Result<()> {
    let rig = RigExtrinsics::default();
    let corpus = training_corpus(&rig, 720, 360)?;
    let free = corpus.iter().filter(|s| s.free).count();
    println!("{} training tiles ({free} free, {} occupied)", corpus.len(), corpus.len() - free);
    let clf = train_classifier(&corpus, ClassifierOptions::default())?;
    println!("kernel width {:.4}", clf.kernel_width);

    let scene = Scene::builtin("wall@5m").unwrap();
    let rendering = render_camera(&scene, &rig, 720, 360);
    // Row 0 looks straight down; the wall face spans rows 166 to 226.
    for (what, row) in [("floor", 96), ("wall", 176)] {
        let feature = hog_features(&extract_patch(&rendering.grey, row, 360));
        println!("{what:<5} tile at row {row}: score {:+.3} -> {:?}", clf.score(&feature), clf.predict(&feature));
    }

    let mask = classify_image(&rendering.grey, &clf);
    let truth = ground_truth_from_rendering(&scene, &rendering, DEFAULT_HEIGHT_TOL);
    println!("wall@5m: {}", mask_metrics(&mask, &truth)?.summary_line());
    Ok(())
}
